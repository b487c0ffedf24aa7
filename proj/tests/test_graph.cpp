#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "lne/evaluation.hpp"
#include "lne/graph.hpp"
#include "lne/graph_io.hpp"
#include "lne/random.hpp"

using namespace lne;

namespace {

using AdjSet = std::vector<std::set<std::uint64_t>>;

// Naive adjacency oracle built straight from the raw pairs.
AdjSet naive_adjacency(const EdgeList& raw) {
  std::uint64_t n = raw.num_vertices();
  AdjSet adj(n);
  for (auto [u, v] : raw.edges) {
    if (u == v) continue;
    adj[u].insert(v);
    adj[v].insert(u);
  }
  return adj;
}

EdgeList random_raw(std::uint64_t n, std::uint64_t edges, std::uint64_t seed) {
  StreamRng rng(seed);
  EdgeList raw;
  for (std::uint64_t i = 0; i < edges; ++i) raw.edges.emplace_back(rng.below(n), rng.below(n));
  return raw;
}

void expect_matches(const Graph& g, const AdjSet& adj) {
  ASSERT_EQ(g.n(), adj.size());
  std::uint64_t twice_m = 0;
  for (std::uint64_t u = 0; u < g.n(); ++u) {
    auto got = g.neighbors(static_cast<vertex_t>(u));
    std::vector<vertex_t> want(adj[u].begin(), adj[u].end());
    ASSERT_EQ(got, want) << "vertex " << u;
    ASSERT_EQ(g.degree(static_cast<vertex_t>(u)), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) ASSERT_EQ(g.kth_neighbor(static_cast<vertex_t>(u), i), want[i]);
    twice_m += want.size();
  }
  EXPECT_EQ(g.vol(), twice_m);
}

}  // namespace

TEST(Varint, RoundTripsBoundaryValues) {
  for (std::uint64_t x : {0ULL, 1ULL, 127ULL, 128ULL, 16383ULL, 16384ULL, 0xFFFFFFFFULL, ~0ULL}) {
    std::vector<std::uint8_t> buf;
    put_varint(x, buf);
    EXPECT_EQ(buf.size(), varint_size(x));
    const std::uint8_t* p = buf.data();
    EXPECT_EQ(read_varint(p), x);
    EXPECT_EQ(p, buf.data() + buf.size());
  }
}

TEST(Varint, ZigzagIsABijectionOnSmallValues) {
  for (std::int64_t x = -1000; x <= 1000; ++x) EXPECT_EQ(unzigzag(zigzag(x)), x);
  EXPECT_EQ(zigzag(0), 0u);
  EXPECT_EQ(zigzag(-1), 1u);
  EXPECT_EQ(zigzag(1), 2u);
}

TEST(Block, EncodeDecodeRoundTrip) {
  std::vector<vertex_t> nbrs{0, 3, 4, 90, 1000, 70000};
  auto bytes = encode_block(500, nbrs);
  EXPECT_EQ(decode_block(500, bytes, nbrs.size()), nbrs);
}

TEST(NormalizeEdges, DropsLoopsAndDuplicates) {
  EdgeList raw;
  raw.edges = {{1, 0}, {0, 1}, {2, 2}, {1, 2}, {2, 1}};
  auto e = normalize_edges(raw);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> want{{0, 1}, {1, 2}};
  EXPECT_EQ(e.edges, want);
  EXPECT_EQ(e.num_vertices(), 3u);
}

TEST(NormalizeEdges, RejectsOversizedIds) {
  EdgeList raw;
  raw.edges = {{0, 0xFFFFFFFFULL}};
  EXPECT_THROW(normalize_edges(raw), InvalidArgument);
}

TEST(NormalizeEdges, RemapCompactsIds) {
  EdgeList raw;
  raw.edges = {{10, 30}, {30, 50}};
  auto e = normalize_edges(raw, true);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> want{{0, 1}, {1, 2}};
  EXPECT_EQ(e.edges, want);
  EXPECT_EQ(e.num_vertices(), 3u);
  EXPECT_EQ(e.original_ids, (std::vector<std::uint64_t>{10, 30, 50}));
}

TEST(Graph, TriangleFromText) {
  std::istringstream in("0 1\n1 2\n2 0\n");
  Graph g = build_graph(normalize_edges(read_edge_list(in)), true);
  EXPECT_EQ(g.n(), 3u);
  EXPECT_EQ(g.m(), 3u);
  EXPECT_EQ(g.kth_neighbor(0, 1), 2u);
}

TEST(Graph, EmptyGraph) {
  Graph g = build_graph(normalize_edges(EdgeList{}), true);
  EXPECT_EQ(g.n(), 0u);
  EXPECT_EQ(g.m(), 0u);
}

TEST(Graph, StarHubDecodesAcrossBlocks) {
  EdgeList raw;
  const std::uint64_t leaves = 10 * kBlockSize + 3;
  for (std::uint64_t v = 1; v <= leaves; ++v) raw.edges.emplace_back(0, v);
  Graph g = build_graph(normalize_edges(raw), true);
  ASSERT_EQ(g.degree(0), leaves);
  for (std::uint64_t i = 0; i < leaves; ++i) ASSERT_EQ(g.kth_neighbor(0, i), i + 1);
}

TEST(Graph, KthNeighborOutOfRangeThrows) {
  std::istringstream in("0 1\n");
  Graph g = build_graph(normalize_edges(read_edge_list(in)), true);
  EXPECT_THROW(g.kth_neighbor(0, 1), std::out_of_range);
  EXPECT_THROW(g.kth_neighbor(5, 0), std::out_of_range);
}

TEST(Graph, CompressedAndRawAgreeWithNaiveOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    StreamRng rng(seed);
    std::uint64_t n = 1 + rng.below(3000);
    EdgeList raw = random_raw(n, rng.below(8 * n), seed + 100);
    raw.n_hint = n;
    AdjSet adj = naive_adjacency(raw);
    EdgeList e = normalize_edges(raw);
    expect_matches(build_graph(e, true), adj);
    expect_matches(build_graph(e, false), adj);
  }
}

TEST(Graph, CompressionShrinksClusteredIds) {
  EdgeList raw;
  for (std::uint64_t u = 0; u < 2000; ++u)
    for (std::uint64_t j = 1; j <= 20; ++j) raw.edges.emplace_back(u, (u + j) % 2000);
  auto e = normalize_edges(raw);
  EXPECT_LT(build_graph(e, true).adjacency_bytes(), build_graph(e, false).adjacency_bytes() / 2);
}

TEST(GraphIo, BinaryRoundTripIsBitExact) {
  for (bool compress : {true, false}) {
    Graph g = build_graph(normalize_edges(random_raw(500, 3000, 7)), compress);
    std::stringstream buf;
    write_graph(g, buf);
    Graph h = read_graph(buf);
    EXPECT_EQ(h.n(), g.n());
    EXPECT_EQ(h.m(), g.m());
    EXPECT_EQ(h.compressed(), compress);
    EXPECT_TRUE(std::ranges::equal(h.payload(), g.payload()));
    EXPECT_TRUE(std::ranges::equal(h.offsets(), g.offsets()));
  }
}

TEST(GraphIo, RejectsBadMagicAndTruncation) {
  std::stringstream bad("NOTAGRPH........");
  EXPECT_THROW(read_graph(bad), FormatError);
  Graph g = build_graph(normalize_edges(random_raw(50, 200, 3)), true);
  std::stringstream buf;
  write_graph(g, buf);
  std::string s = buf.str();
  std::stringstream cut(s.substr(0, s.size() - 3));
  EXPECT_THROW(read_graph(cut), FormatError);
}

TEST(GraphIo, EdgeListSkipsCommentsAndReportsLineNumbers) {
  std::istringstream ok("# header\n\n0 1\n# more\n1 2\n");
  EXPECT_EQ(read_edge_list(ok).edges.size(), 2u);
  std::istringstream bad("0 1\n1 x\n");
  try {
    read_edge_list(bad);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::istringstream neg("0 -1\n");
  EXPECT_THROW(read_edge_list(neg), FormatError);
}

TEST(GraphIo, ToEdgeListInvertsBuild) {
  EdgeList e = normalize_edges(random_raw(300, 1500, 11));
  Graph g = build_graph(e, true);
  EXPECT_EQ(to_edge_list(g).edges, e.edges);
}

TEST(RandomWalk, ZeroStepsStaysPut) {
  Graph g = build_graph(normalize_edges(random_raw(100, 500, 1)), true);
  StreamRng rng(1);
  EXPECT_EQ(random_walk(g, 5, 0, rng), 5u);
}

TEST(RandomWalk, PathGraphTwoStepDistribution) {
  // 0 - 1 - 2: from 0, two steps return to 0 or reach 2 with probability 1/2 each.
  std::istringstream in("0 1\n1 2\n");
  Graph g = build_graph(normalize_edges(read_edge_list(in)), true);
  StreamRng rng(99);
  int back = 0;
  const int trials = 200000;
  for (int i = 0; i < trials; ++i) back += random_walk(g, 0, 2, rng) == 0;
  EXPECT_NEAR(static_cast<double>(back) / trials, 0.5, 0.005);
}

TEST(RandomWalk, IsolatedStartThrows) {
  EdgeList raw;
  raw.edges = {{0, 1}};
  raw.n_hint = 3;
  Graph g = build_graph(normalize_edges(raw), true);
  StreamRng rng(0);
  EXPECT_THROW(random_walk(g, 2, 1, rng), InvalidArgument);
}

TEST(MapEdges, VisitsEachEdgeOnceWithCanonicalIndex) {
  EdgeList e = normalize_edges(random_raw(400, 3000, 5));
  Graph g = build_graph(e, true);
  std::vector<std::atomic<int>> seen(g.m());
  std::vector<std::pair<std::uint64_t, std::uint64_t>> at(g.m());
  map_edges_parallel(g, [&](vertex_t u, vertex_t v, std::uint64_t idx) {
    seen[idx].fetch_add(1);
    at[idx] = {u, v};
  });
  for (auto& s : seen) EXPECT_EQ(s.load(), 1);
  EXPECT_EQ(at, e.edges);
}
