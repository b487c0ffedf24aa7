#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <new>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "lne/errors.hpp"
#include "lne/parallel.hpp"

#ifndef LNE_BLOCK_SIZE
#define LNE_BLOCK_SIZE 64
#endif

namespace lne {

using vertex_t = std::uint32_t;

/// Largest admissible vertex id; 2^32 - 1 is reserved as a sentinel.
inline constexpr std::uint64_t kMaxVertexId = 0xFFFFFFFEULL;

/// Neighbors per compressed adjacency block.
inline constexpr std::size_t kBlockSize = LNE_BLOCK_SIZE;
static_assert(kBlockSize >= 1);

struct EdgeList {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> edges;
  std::optional<std::uint64_t> n_hint;
  /// Filled by normalize_edges when remapping: new id -> original id.
  std::vector<std::uint64_t> original_ids;

  /// max(n_hint, largest id + 1).
  std::uint64_t num_vertices() const {
    std::uint64_t n = n_hint.value_or(0);
    for (auto [u, v] : edges) n = std::max({n, u + 1, v + 1});
    return n;
  }
};

/// Drops self-loops, keeps each unordered pair once as (min, max), sorted.
/// With `remap`, ids that occur in a kept edge are compacted to 0..k-1 in
/// ascending order of the original id.
inline EdgeList normalize_edges(const EdgeList& raw, bool remap = false) {
  EdgeList out;
  std::uint64_t n = raw.n_hint.value_or(0);
  out.edges.reserve(raw.edges.size());
  for (auto [u, v] : raw.edges) {
    if (u > kMaxVertexId || v > kMaxVertexId) {
      throw InvalidArgument("vertex id " + std::to_string(std::max(u, v)) +
                            " exceeds the maximum id 4294967294");
    }
    n = std::max({n, u + 1, v + 1});
    if (u == v) continue;
    out.edges.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(out.edges.begin(), out.edges.end());
  out.edges.erase(std::unique(out.edges.begin(), out.edges.end()), out.edges.end());

  if (remap) {
    std::vector<std::uint64_t> ids;
    ids.reserve(out.edges.size() * 2);
    for (auto [u, v] : out.edges) {
      ids.push_back(u);
      ids.push_back(v);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    auto index_of = [&](std::uint64_t x) {
      return static_cast<std::uint64_t>(std::lower_bound(ids.begin(), ids.end(), x) - ids.begin());
    };
    for (auto& [u, v] : out.edges) {
      u = index_of(u);
      v = index_of(v);
    }
    n = ids.size();
    out.original_ids = std::move(ids);
  }
  out.n_hint = n;
  return out;
}

// ---------------------------------------------------------------------------
// Byte codes

inline void put_varint(std::uint64_t x, std::vector<std::uint8_t>& out) {
  while (x >= 0x80) {
    out.push_back(static_cast<std::uint8_t>(x | 0x80));
    x >>= 7;
  }
  out.push_back(static_cast<std::uint8_t>(x));
}

inline std::size_t varint_size(std::uint64_t x) {
  std::size_t s = 1;
  while (x >= 0x80) {
    x >>= 7;
    ++s;
  }
  return s;
}

inline std::uint8_t* write_varint(std::uint64_t x, std::uint8_t* p) {
  while (x >= 0x80) {
    *p++ = static_cast<std::uint8_t>(x | 0x80);
    x >>= 7;
  }
  *p++ = static_cast<std::uint8_t>(x);
  return p;
}

inline std::uint64_t read_varint(const std::uint8_t*& p) {
  std::uint64_t x = 0;
  int shift = 0;
  for (;;) {
    std::uint8_t byte = *p++;
    x |= static_cast<std::uint64_t>(byte & 0x7f) << shift;
    if ((byte & 0x80) == 0) return x;
    shift += 7;
  }
}

constexpr std::uint64_t zigzag(std::int64_t x) {
  return (static_cast<std::uint64_t>(x) << 1) ^ static_cast<std::uint64_t>(x >> 63);
}

constexpr std::int64_t unzigzag(std::uint64_t x) {
  return static_cast<std::int64_t>(x >> 1) ^ -static_cast<std::int64_t>(x & 1);
}

/// Appends one block: zigzag(first - source), then gaps to the previous id.
inline void append_block(vertex_t source, std::span<const vertex_t> neighbors,
                         std::vector<std::uint8_t>& out) {
  if (neighbors.size() > kBlockSize) throw InvalidArgument("block holds at most kBlockSize ids");
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    if (i == 0) {
      put_varint(zigzag(static_cast<std::int64_t>(neighbors[0]) - static_cast<std::int64_t>(source)),
                 out);
    } else {
      if (neighbors[i] <= neighbors[i - 1]) throw InvalidArgument("block ids must be strictly ascending");
      put_varint(neighbors[i] - neighbors[i - 1], out);
    }
  }
}

inline std::vector<std::uint8_t> encode_block(vertex_t source, std::span<const vertex_t> neighbors) {
  std::vector<std::uint8_t> out;
  append_block(source, neighbors, out);
  return out;
}

/// Decodes `count` ids from a block starting at `p`; advances `p`.
template <typename Fn>
inline void decode_block_into(vertex_t source, const std::uint8_t*& p, std::size_t count, Fn&& emit) {
  if (count == 0) return;
  std::int64_t cur = static_cast<std::int64_t>(source) + unzigzag(read_varint(p));
  emit(static_cast<vertex_t>(cur));
  for (std::size_t i = 1; i < count; ++i) {
    cur += static_cast<std::int64_t>(read_varint(p));
    emit(static_cast<vertex_t>(cur));
  }
}

inline std::vector<vertex_t> decode_block(vertex_t source, std::span<const std::uint8_t> bytes,
                                          std::size_t count) {
  std::vector<vertex_t> out;
  out.reserve(count);
  const std::uint8_t* p = bytes.data();
  decode_block_into(source, p, count, [&](vertex_t v) { out.push_back(v); });
  if (p > bytes.data() + bytes.size()) throw FormatError("block decode ran past its buffer");
  return out;
}

// ---------------------------------------------------------------------------
// Graph

/// Immutable undirected simple graph in CSR form. Adjacency is either raw
/// u32 ids or the parallel-byte layout, per vertex:
///
///   [varint degree][u32 LE offset of blocks 1..nb-1, relative to the
///   vertex start][block 0][block 1]...
///
/// Offsets are byte offsets for both layouts.
class Graph {
 public:
  Graph() = default;

  std::uint64_t n() const { return n_; }
  std::uint64_t m() const { return m_; }
  std::uint64_t vol() const { return 2 * m_; }
  bool compressed() const { return compressed_; }

  std::uint32_t degree(vertex_t u) const { return degrees_[u]; }
  std::span<const std::uint32_t> degrees() const { return degrees_; }
  std::span<const std::uint64_t> offsets() const { return offsets_; }

  /// Adjacency payload as bytes (raw layout is little-endian u32).
  std::span<const std::uint8_t> payload() const {
    if (compressed_) return bytes_;
    return {reinterpret_cast<const std::uint8_t*>(raw_.data()), raw_.size() * sizeof(vertex_t)};
  }
  std::size_t adjacency_bytes() const { return payload().size(); }

  /// Index of the first canonical edge (u, v > u) owned by u; edges are
  /// numbered by u, then by v.
  std::uint64_t upper_offset(vertex_t u) const { return upper_offsets_[u]; }

  /// The i-th smallest neighbor of u. Decodes only the containing block.
  vertex_t kth_neighbor(vertex_t u, std::uint64_t i) const {
    if (u >= n_) throw std::out_of_range("vertex out of range");
    if (i >= degrees_[u]) throw std::out_of_range("neighbor index out of range");
    return kth_neighbor_unchecked(u, i);
  }

  vertex_t kth_neighbor_unchecked(vertex_t u, std::uint64_t i) const {
    if (!compressed_) return raw_[offsets_[u] / sizeof(vertex_t) + i];
    const std::uint8_t* start = bytes_.data() + offsets_[u];
    const std::uint8_t* p = start;
    std::uint64_t deg = read_varint(p);
    std::uint64_t nblocks = (deg + kBlockSize - 1) / kBlockSize;
    std::uint64_t b = i / kBlockSize;
    const std::uint8_t* dir = p;
    const std::uint8_t* block = dir + 4 * (nblocks - 1);
    if (b > 0) block = start + load_u32(dir + 4 * (b - 1));
    std::uint64_t want = i % kBlockSize;
    vertex_t result = 0;
    std::uint64_t seen = 0;
    decode_block_into(u, block, want + 1, [&](vertex_t v) {
      if (seen++ == want) result = v;
    });
    return result;
  }

  /// Calls fn(v) for each neighbor in ascending order.
  template <typename Fn>
  void for_each_neighbor(vertex_t u, Fn&& fn) const {
    if (!compressed_) {
      const vertex_t* p = raw_.data() + offsets_[u] / sizeof(vertex_t);
      for (std::uint32_t i = 0; i < degrees_[u]; ++i) fn(p[i]);
      return;
    }
    const std::uint8_t* p = bytes_.data() + offsets_[u];
    std::uint64_t deg = read_varint(p);
    std::uint64_t nblocks = (deg + kBlockSize - 1) / kBlockSize;
    p += 4 * (nblocks - (nblocks > 0 ? 1 : 0));
    for (std::uint64_t b = 0; b < nblocks; ++b) {
      std::uint64_t count = std::min<std::uint64_t>(kBlockSize, deg - b * kBlockSize);
      decode_block_into(u, p, count, fn);
    }
  }

  std::vector<vertex_t> neighbors(vertex_t u) const {
    std::vector<vertex_t> out;
    out.reserve(degrees_[u]);
    for_each_neighbor(u, [&](vertex_t v) { out.push_back(v); });
    return out;
  }

  /// Builds from a normalized edge list.
  static Graph build(const EdgeList& edges, bool compress);

  /// Reassembles a graph from serialized parts; validates layout.
  static Graph from_parts(std::uint64_t n, std::uint64_t m, bool compressed,
                          std::vector<std::uint64_t> offsets, std::vector<std::uint8_t> payload);

 private:
  static std::uint32_t load_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  }
  static void store_u32(std::uint32_t x, std::uint8_t* p) {
    p[0] = static_cast<std::uint8_t>(x);
    p[1] = static_cast<std::uint8_t>(x >> 8);
    p[2] = static_cast<std::uint8_t>(x >> 16);
    p[3] = static_cast<std::uint8_t>(x >> 24);
  }

  static std::size_t encoded_vertex_size(vertex_t u, std::span<const vertex_t> nbrs) {
    std::size_t deg = nbrs.size();
    std::size_t nblocks = (deg + kBlockSize - 1) / kBlockSize;
    std::size_t size = varint_size(deg) + 4 * (nblocks > 0 ? nblocks - 1 : 0);
    for (std::size_t i = 0; i < deg; ++i) {
      if (i % kBlockSize == 0) {
        size += varint_size(zigzag(static_cast<std::int64_t>(nbrs[i]) - static_cast<std::int64_t>(u)));
      } else {
        size += varint_size(nbrs[i] - nbrs[i - 1]);
      }
    }
    return size;
  }

  static void encode_vertex(vertex_t u, std::span<const vertex_t> nbrs, std::uint8_t* start) {
    std::size_t deg = nbrs.size();
    std::size_t nblocks = (deg + kBlockSize - 1) / kBlockSize;
    std::uint8_t* p = write_varint(deg, start);
    std::uint8_t* dir = p;
    p += 4 * (nblocks > 0 ? nblocks - 1 : 0);
    for (std::size_t i = 0; i < deg; ++i) {
      if (i % kBlockSize == 0) {
        if (i > 0) store_u32(static_cast<std::uint32_t>(p - start), dir + 4 * (i / kBlockSize - 1));
        p = write_varint(zigzag(static_cast<std::int64_t>(nbrs[i]) - static_cast<std::int64_t>(u)), p);
      } else {
        p = write_varint(nbrs[i] - nbrs[i - 1], p);
      }
    }
  }

  void compute_upper_offsets() {
    upper_offsets_.assign(n_ + 1, 0);
    parallel_for(0, n_, [&](std::size_t u) {
      std::uint64_t c = 0;
      for_each_neighbor(static_cast<vertex_t>(u), [&](vertex_t v) { c += (v > u); });
      upper_offsets_[u + 1] = c;
    });
    for (std::uint64_t u = 0; u < n_; ++u) upper_offsets_[u + 1] += upper_offsets_[u];
  }

  std::uint64_t n_ = 0;
  std::uint64_t m_ = 0;
  bool compressed_ = false;
  std::vector<std::uint32_t> degrees_;
  std::vector<std::uint64_t> offsets_;
  std::vector<std::uint64_t> upper_offsets_;
  std::vector<vertex_t> raw_;
  std::vector<std::uint8_t> bytes_;
};

inline Graph Graph::build(const EdgeList& edges, bool compress) {
  const std::uint64_t n = edges.num_vertices();
  const std::uint64_t m = edges.edges.size();
  if (n > kMaxVertexId + 1) throw InvalidArgument("too many vertices");
  const std::size_t estimate = (n + 1) * (sizeof(std::uint64_t) * 2 + sizeof(std::uint32_t)) +
                               2 * m * sizeof(vertex_t) * (compress ? 2 : 1);
  try {
    Graph g;
    g.n_ = n;
    g.m_ = m;
    g.compressed_ = compress;
    g.degrees_.assign(n, 0);
    for (auto [u, v] : edges.edges) {
      if (u == v || u >= n || v >= n) throw InvalidArgument("edge list is not normalized");
      ++g.degrees_[u];
      ++g.degrees_[v];
    }
    std::vector<std::uint64_t> start(n + 1, 0);
    for (std::uint64_t u = 0; u < n; ++u) start[u + 1] = start[u] + g.degrees_[u];
    std::vector<vertex_t> adj(2 * m);
    {
      std::vector<std::uint64_t> pos(start.begin(), start.end() - 1);
      for (auto [u, v] : edges.edges) {
        adj[pos[u]++] = static_cast<vertex_t>(v);
        adj[pos[v]++] = static_cast<vertex_t>(u);
      }
    }
    parallel_for(0, n, [&](std::size_t u) {
      auto first = adj.begin() + static_cast<std::ptrdiff_t>(start[u]);
      auto last = adj.begin() + static_cast<std::ptrdiff_t>(start[u + 1]);
      std::sort(first, last);
      if (std::adjacent_find(first, last) != last) throw InvalidArgument("duplicate edge in input");
    });

    g.offsets_.assign(n + 1, 0);
    if (!compress) {
      for (std::uint64_t u = 0; u <= n; ++u) g.offsets_[u] = start[u] * sizeof(vertex_t);
      g.raw_ = std::move(adj);
    } else {
      auto nbrs_of = [&](std::uint64_t u) {
        return std::span<const vertex_t>(adj.data() + start[u], g.degrees_[u]);
      };
      parallel_for(0, n, [&](std::size_t u) {
        g.offsets_[u + 1] = encoded_vertex_size(static_cast<vertex_t>(u), nbrs_of(u));
      });
      for (std::uint64_t u = 0; u < n; ++u) g.offsets_[u + 1] += g.offsets_[u];
      g.bytes_.assign(g.offsets_[n], 0);
      parallel_for(0, n, [&](std::size_t u) {
        encode_vertex(static_cast<vertex_t>(u), nbrs_of(u), g.bytes_.data() + g.offsets_[u]);
      });
    }
    g.compute_upper_offsets();
    return g;
  } catch (const std::bad_alloc&) {
    throw ResourceError("out of memory building graph", estimate);
  }
}

inline Graph Graph::from_parts(std::uint64_t n, std::uint64_t m, bool compressed,
                               std::vector<std::uint64_t> offsets, std::vector<std::uint8_t> payload) {
  if (offsets.size() != n + 1) throw FormatError("offset array length mismatch");
  if (offsets.front() != 0 || offsets.back() != payload.size()) {
    throw FormatError("offsets do not span the adjacency payload");
  }
  for (std::uint64_t u = 0; u < n; ++u) {
    if (offsets[u + 1] < offsets[u]) throw FormatError("offsets not monotone");
  }
  Graph g;
  g.n_ = n;
  g.m_ = m;
  g.compressed_ = compressed;
  g.offsets_ = std::move(offsets);
  g.degrees_.assign(n, 0);
  if (!compressed) {
    if (payload.size() % sizeof(vertex_t) != 0) throw FormatError("raw payload not u32-aligned");
    g.raw_.resize(payload.size() / sizeof(vertex_t));
    for (std::size_t i = 0; i < g.raw_.size(); ++i) g.raw_[i] = load_u32(payload.data() + 4 * i);
    for (std::uint64_t u = 0; u < n; ++u) {
      if (g.offsets_[u] % sizeof(vertex_t) != 0) throw FormatError("raw offset not u32-aligned");
      g.degrees_[u] = static_cast<std::uint32_t>((g.offsets_[u + 1] - g.offsets_[u]) / sizeof(vertex_t));
    }
  } else {
    g.bytes_ = std::move(payload);
    for (std::uint64_t u = 0; u < n; ++u) {
      if (g.offsets_[u + 1] == g.offsets_[u]) throw FormatError("empty compressed vertex region");
      const std::uint8_t* p = g.bytes_.data() + g.offsets_[u];
      g.degrees_[u] = static_cast<std::uint32_t>(read_varint(p));
    }
  }
  std::uint64_t total = 0;
  for (auto d : g.degrees_) total += d;
  if (total != 2 * m) throw FormatError("degree sum does not equal 2m");
  for (std::uint64_t u = 0; u < n; ++u) {
    std::int64_t prev = -1;
    g.for_each_neighbor(static_cast<vertex_t>(u), [&](vertex_t v) {
      if (v >= n || static_cast<std::int64_t>(v) <= prev || v == u) {
        throw FormatError("neighbor list of vertex " + std::to_string(u) + " is invalid");
      }
      prev = v;
    });
  }
  g.compute_upper_offsets();
  return g;
}

/// Builds a graph from an already-normalized edge list.
inline Graph build_graph(const EdgeList& edges, bool compress) { return Graph::build(edges, compress); }

/// Endpoint of a `steps`-step uniform random walk. Each step moves to
/// kth_neighbor(v, r mod deg(v)) for a fresh 32-bit draw r.
template <typename Rng>
vertex_t random_walk(const Graph& g, vertex_t start, std::uint64_t steps, Rng& rng) {
  if (start >= g.n()) throw std::out_of_range("walk start out of range");
  vertex_t v = start;
  for (std::uint64_t s = 0; s < steps; ++s) {
    std::uint32_t deg = g.degree(v);
    if (deg == 0) throw InvalidArgument("random walk reached isolated vertex " + std::to_string(v));
    std::uint32_t r = rng.next_u32();
    v = g.kth_neighbor_unchecked(v, r % deg);
  }
  return v;
}

/// Invokes fn(u, v) or fn(u, v, edge_index) once per undirected edge with
/// u < v, in parallel over source vertices. edge_index is the canonical
/// rank of the edge in (u, v) lexicographic order.
template <typename Fn>
void map_edges_parallel(const Graph& g, Fn&& fn) {
  parallel_for(
      0, g.n(),
      [&](std::size_t su) {
        vertex_t u = static_cast<vertex_t>(su);
        std::uint64_t idx = g.upper_offset(u);
        g.for_each_neighbor(u, [&](vertex_t v) {
          if (v <= u) return;
          if constexpr (std::is_invocable_v<Fn&, vertex_t, vertex_t, std::uint64_t>) {
            fn(u, v, idx);
          } else {
            fn(u, v);
          }
          ++idx;
        });
      },
      64);
}

}  // namespace lne
