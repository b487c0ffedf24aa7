#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "lne/errors.hpp"
#include "lne/graph.hpp"

namespace lne {

namespace io {

inline void put_le(std::ostream& os, std::uint64_t x, int bytes) {
  std::array<char, 8> buf{};
  for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((x >> (8 * i)) & 0xff);
  os.write(buf.data(), bytes);
}

inline std::uint64_t get_le(std::istream& is, int bytes) {
  std::array<unsigned char, 8> buf{};
  if (!is.read(reinterpret_cast<char*>(buf.data()), bytes)) throw FormatError("unexpected end of file");
  std::uint64_t x = 0;
  for (int i = 0; i < bytes; ++i) x |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return x;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return is;
}

}  // namespace io

inline constexpr char kGraphMagic[8] = {'L', 'N', 'E', '2', 'G', 'R', 'P', 'H'};
inline constexpr std::uint32_t kGraphVersion = 1;

/// Whitespace-separated "u v" per line; blank lines and lines starting with
/// '#' are skipped. Extra columns are ignored.
inline EdgeList read_edge_list(std::istream& is) {
  EdgeList out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string a, b;
    if (!(ls >> a >> b)) throw FormatError("line " + std::to_string(lineno) + ": expected \"u v\"");
    auto parse = [&](const std::string& tok) {
      std::size_t used = 0;
      unsigned long long x = 0;
      try {
        if (!tok.empty() && tok[0] == '-') throw std::invalid_argument("negative");
        x = std::stoull(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || used == 0) {
        throw FormatError("line " + std::to_string(lineno) + ": invalid vertex id '" + tok + "'");
      }
      return static_cast<std::uint64_t>(x);
    };
    out.edges.emplace_back(parse(a), parse(b));
  }
  return out;
}

inline EdgeList read_edge_list(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_edge_list(is);
}

/// LNE2GRPH: magic, u32 version, u8 compression flag, u64 n, u64 m,
/// u64 offsets[n+1] (byte offsets), adjacency payload. Little-endian.
inline void write_graph(const Graph& g, std::ostream& os) {
  os.write(kGraphMagic, sizeof(kGraphMagic));
  io::put_le(os, kGraphVersion, 4);
  io::put_le(os, g.compressed() ? 1 : 0, 1);
  io::put_le(os, g.n(), 8);
  io::put_le(os, g.m(), 8);
  for (auto off : g.offsets()) io::put_le(os, off, 8);
  auto payload = g.payload();
  if (g.compressed()) {
    os.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  } else {
    for (std::uint64_t u = 0; u < g.n(); ++u) {
      g.for_each_neighbor(static_cast<vertex_t>(u), [&](vertex_t v) { io::put_le(os, v, 4); });
    }
  }
  if (!os) throw std::runtime_error("write failed");
}

inline void write_graph(const Graph& g, const std::string& path) {
  auto os = io::open_out(path);
  write_graph(g, os);
}

inline Graph read_graph(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kGraphMagic, 8) != 0) throw FormatError("not an LNE2GRPH file");
  auto version = io::get_le(is, 4);
  if (version != kGraphVersion) throw FormatError("unsupported graph version " + std::to_string(version));
  auto flag = io::get_le(is, 1);
  if (flag > 1) throw FormatError("invalid compression flag");
  std::uint64_t n = io::get_le(is, 8);
  std::uint64_t m = io::get_le(is, 8);
  if (n > kMaxVertexId + 1) throw FormatError("vertex count out of range");
  std::vector<std::uint64_t> offsets(n + 1);
  for (auto& off : offsets) off = io::get_le(is, 8);
  std::vector<std::uint8_t> payload(offsets.back());
  if (!is.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()))) {
    throw FormatError("truncated adjacency payload");
  }
  return Graph::from_parts(n, m, flag == 1, std::move(offsets), std::move(payload));
}

inline Graph read_graph(const std::string& path) {
  auto is = io::open_in(path);
  return read_graph(is);
}

inline bool is_graph_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  char magic[8];
  return is.read(magic, 8) && std::memcmp(magic, kGraphMagic, 8) == 0;
}

/// Loads either a binary graph file or a text edge list.
inline Graph load_graph(const std::string& path, bool compress) {
  if (is_graph_file(path)) return read_graph(path);
  return build_graph(normalize_edges(read_edge_list(path)), compress);
}

/// Back to a canonical edge list (u < v, sorted).
inline EdgeList to_edge_list(const Graph& g) {
  EdgeList out;
  out.n_hint = g.n();
  out.edges.reserve(g.m());
  for (std::uint64_t u = 0; u < g.n(); ++u) {
    g.for_each_neighbor(static_cast<vertex_t>(u), [&](vertex_t v) {
      if (v > u) out.edges.emplace_back(u, v);
    });
  }
  return out;
}

}  // namespace lne
