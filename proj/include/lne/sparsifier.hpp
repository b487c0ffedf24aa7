#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>
#include <optional>
#include <utility>
#include <vector>

#include "lne/errors.hpp"
#include "lne/graph.hpp"
#include "lne/parallel.hpp"
#include "lne/random.hpp"
#include "lne/sparse_matrix.hpp"

namespace lne {

struct SamplingParams {
  /// Window size.
  std::uint32_t T = 10;
  /// Walk-length weights s_1..s_T; empty means uniform 1/T.
  std::vector<double> s_coeffs;
  /// Target number of path samples.
  std::uint64_t M = 1;
  /// Downsampling constant; unset means ln(n). +inf disables downsampling.
  std::optional<double> C;
  /// Negative-sample constant.
  double b = 1.0;
  std::uint64_t seed = 0;
  /// Table slots per expected distinct entry.
  double table_capacity_factor = 2.0;
  /// Explicit table capacity (rounded up to a power of two); 0 = automatic.
  std::size_t table_capacity = 0;

  std::vector<double> coefficients() const {
    if (s_coeffs.empty()) return std::vector<double>(T, 1.0 / T);
    return s_coeffs;
  }

  double downsampling_constant(std::uint64_t n) const {
    return C.value_or(std::log(static_cast<double>(std::max<std::uint64_t>(n, 2))));
  }

  void validate() const {
    if (T < 1) throw InvalidArgument("T must be >= 1");
    if (!s_coeffs.empty()) {
      if (s_coeffs.size() != T) throw InvalidArgument("s_coeffs must have T entries");
      double sum = 0;
      for (double s : s_coeffs) {
        if (!(s >= 0)) throw InvalidArgument("s_coeffs must be non-negative");
        sum += s;
      }
      if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("s_coeffs must sum to 1");
    }
    if (M < 1) throw InvalidArgument("M must be >= 1");
    if (C && !(*C > 0)) throw InvalidArgument("C must be > 0");
    if (!(b > 0)) throw InvalidArgument("b must be > 0");
    if (!(table_capacity_factor > 0)) throw InvalidArgument("table_capacity_factor must be > 0");
  }
};

/// Concurrent open-addressing map from a canonical vertex pair to a 64-bit
/// fixed-point weight (2^-20 units). Linear probing, no deletion. Weights
/// are accumulated with atomic fetch-add, so the final contents are exact
/// and independent of insertion order.
class SparsifierTable {
 public:
  static constexpr std::uint64_t kEmpty = ~0ULL;
  static constexpr int kFractionBits = 20;
  static constexpr double kScale = static_cast<double>(1ULL << kFractionBits);
  static constexpr double kMaxLoad = 0.75;

  explicit SparsifierTable(std::size_t capacity) {
    capacity_ = std::bit_ceil(std::max<std::size_t>(capacity, 16));
    mask_ = capacity_ - 1;
    limit_ = static_cast<std::size_t>(kMaxLoad * static_cast<double>(capacity_));
    keys_ = std::make_unique<std::atomic<std::uint64_t>[]>(capacity_);
    weights_ = std::make_unique<std::atomic<std::uint64_t>[]>(capacity_);
    for (std::size_t i = 0; i < capacity_; ++i) {
      keys_[i].store(kEmpty, std::memory_order_relaxed);
      weights_[i].store(0, std::memory_order_relaxed);
    }
  }

  SparsifierTable(SparsifierTable&& other) noexcept { *this = std::move(other); }
  SparsifierTable& operator=(SparsifierTable&& other) noexcept {
    capacity_ = other.capacity_;
    mask_ = other.mask_;
    limit_ = other.limit_;
    capacity_factor_hint_ = other.capacity_factor_hint_;
    keys_ = std::move(other.keys_);
    weights_ = std::move(other.weights_);
    size_.store(other.size_.load());
    return *this;
  }

  /// min(u, v) in the high 32 bits, max(u, v) in the low 32 bits.
  static constexpr std::uint64_t pack(vertex_t u, vertex_t v) {
    return (static_cast<std::uint64_t>(std::min(u, v)) << 32) | std::max(u, v);
  }
  static constexpr std::pair<vertex_t, vertex_t> unpack(std::uint64_t key) {
    return {static_cast<vertex_t>(key >> 32), static_cast<vertex_t>(key & 0xffffffffULL)};
  }

  static std::uint64_t to_fixed(double w) { return static_cast<std::uint64_t>(std::llround(w * kScale)); }
  static double from_fixed(std::uint64_t w) { return static_cast<double>(w) / kScale; }

  /// weight[key] += w. Claims the first empty probe slot for a new key.
  void upsert_add(std::uint64_t key, std::uint64_t w) {
    if (key == kEmpty) throw InvalidArgument("sentinel key");
    std::size_t i = static_cast<std::size_t>(mix64(key)) & mask_;
    for (;;) {
      std::uint64_t k = keys_[i].load(std::memory_order_acquire);
      if (k == key) {
        weights_[i].fetch_add(w, std::memory_order_relaxed);
        return;
      }
      if (k == kEmpty) {
        if (size_.load(std::memory_order_relaxed) >= limit_) {
          throw TableFullError(capacity_, 2.0 * capacity_factor_hint_);
        }
        std::uint64_t expected = kEmpty;
        if (keys_[i].compare_exchange_strong(expected, key, std::memory_order_acq_rel)) {
          if (size_.fetch_add(1, std::memory_order_relaxed) + 1 > limit_) {
            throw TableFullError(capacity_, 2.0 * capacity_factor_hint_);
          }
          weights_[i].fetch_add(w, std::memory_order_relaxed);
          return;
        }
        if (expected == key) {
          weights_[i].fetch_add(w, std::memory_order_relaxed);
          return;
        }
      }
      i = (i + 1) & mask_;
    }
  }

  void upsert_add(vertex_t u, vertex_t v, std::uint64_t w) { upsert_add(pack(u, v), w); }

  /// Fixed-point weight of a key, or 0.
  std::uint64_t weight(std::uint64_t key) const {
    std::size_t i = static_cast<std::size_t>(mix64(key)) & mask_;
    for (;;) {
      std::uint64_t k = keys_[i].load(std::memory_order_acquire);
      if (k == key) return weights_[i].load(std::memory_order_relaxed);
      if (k == kEmpty) return 0;
      i = (i + 1) & mask_;
    }
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return size_.load(); }

  /// (key, fixed-point weight) sorted by key.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> entries() const {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
    out.reserve(size());
    for (std::size_t i = 0; i < capacity_; ++i) {
      std::uint64_t k = keys_[i].load(std::memory_order_relaxed);
      if (k != kEmpty) out.emplace_back(k, weights_[i].load(std::memory_order_relaxed));
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Text dump, one "u v weight" line per key in key order.
  void dump(std::ostream& os) const {
    char buf[96];
    for (auto [key, w] : entries()) {
      auto [u, v] = unpack(key);
      std::snprintf(buf, sizeof(buf), "%u %u %.17g\n", u, v, from_fixed(w));
      os << buf;
    }
  }

  void set_capacity_factor_hint(double f) { capacity_factor_hint_ = f; }

 private:
  std::size_t capacity_ = 0;
  std::size_t mask_ = 0;
  std::size_t limit_ = 0;
  double capacity_factor_hint_ = 1.0;
  std::unique_ptr<std::atomic<std::uint64_t>[]> keys_;
  std::unique_ptr<std::atomic<std::uint64_t>[]> weights_;
  std::atomic<std::size_t> size_{0};
};

/// p_e = min(1, C (1/d_u + 1/d_v)).
inline double downsample_prob(const Graph& g, vertex_t u, vertex_t v, double C) {
  double x = C * (1.0 / g.degree(u) + 1.0 / g.degree(v));
  return std::min(1.0, x);
}

/// One PathSampling draw of length r anchored at edge (u, v): walk s steps
/// from u and r-1-s steps from v, s uniform in [0, r-1].
template <typename Rng>
std::pair<vertex_t, vertex_t> path_sample(const Graph& g, vertex_t u, vertex_t v, std::uint32_t r, Rng& rng) {
  if (r < 1) throw InvalidArgument("path length must be >= 1");
  std::uint32_t s = static_cast<std::uint32_t>(rng.below(r));
  vertex_t a = random_walk(g, u, s, rng);
  vertex_t b = random_walk(g, v, r - 1 - s, rng);
  return {a, b};
}

/// Inverse-CDF draw of r in 1..T.
inline std::uint32_t draw_length(const std::vector<double>& cumulative, double x) {
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
  std::size_t idx = static_cast<std::size_t>(it - cumulative.begin());
  while (idx + 1 < cumulative.size() && cumulative[idx] <= 0) ++idx;
  return static_cast<std::uint32_t>(std::min(idx, cumulative.size() - 1) + 1);
}

struct Sparsifier {
  SparsifierTable table;
  /// Sum over edges of n_e.
  std::uint64_t draws = 0;
  /// Draws that passed the downsampling coin.
  std::uint64_t kept = 0;
};

/// Per-edge stream key. Every random choice made for edge `edge_index`
/// derives from it, so results are independent of scheduling.
inline std::uint64_t edge_stream_key(std::uint64_t seed, std::uint64_t edge_index) {
  return mix64(substream(seed, "sampling"), edge_index);
}

/// Downsampled per-edge path sampling into a concurrent table.
inline Sparsifier sample_sparsifier(const Graph& g, const SamplingParams& p) {
  p.validate();
  if (g.m() == 0) throw InvalidArgument("graph has no edges");
  const double C = p.downsampling_constant(g.n());
  const std::uint64_t m = g.m();
  const std::uint64_t base = p.M / m;
  const std::uint64_t rem = p.M % m;
  const double frac = static_cast<double>(rem) / static_cast<double>(m);

  std::vector<double> cumulative = p.coefficients();
  std::partial_sum(cumulative.begin(), cumulative.end(), cumulative.begin());
  cumulative.back() = std::max(cumulative.back(), 1.0);

  std::size_t capacity = p.table_capacity;
  if (capacity == 0) {
    std::vector<double> partial(g.n(), 0.0);
    const double per_edge = static_cast<double>(p.M) / static_cast<double>(m);
    parallel_for(0, g.n(), [&](std::size_t u) {
      double acc = 0;
      g.for_each_neighbor(static_cast<vertex_t>(u), [&](vertex_t v) {
        if (v > u) acc += per_edge * downsample_prob(g, static_cast<vertex_t>(u), v, C);
      });
      partial[u] = acc;
    });
    double expected = std::accumulate(partial.begin(), partial.end(), 0.0);
    double bound = expected + 6.0 * std::sqrt(expected) + 64.0;
    double pairs = static_cast<double>(g.n()) * static_cast<double>(g.n() + 1) / 2.0;
    double distinct = std::min(bound, pairs);
    capacity = static_cast<std::size_t>(std::ceil(std::max(p.table_capacity_factor * distinct,
                                                           distinct / SparsifierTable::kMaxLoad + 1.0)));
  }

  Sparsifier out{SparsifierTable(capacity)};
  out.table.set_capacity_factor_hint(p.table_capacity_factor);
  std::atomic<std::uint64_t> draws{0};
  std::atomic<std::uint64_t> kept{0};

  map_edges_parallel(g, [&](vertex_t u, vertex_t v, std::uint64_t edge_index) {
    const std::uint64_t key = edge_stream_key(p.seed, edge_index);
    std::uint64_t n_e = base;
    if (rem != 0) {
      StreamRng bern(mix64(key, ~0ULL));
      if (bern.uniform() < frac) ++n_e;
    }
    const double pe = downsample_prob(g, u, v, C);
    const std::uint64_t w = SparsifierTable::to_fixed(1.0 / pe);
    std::uint64_t local_kept = 0;
    for (std::uint64_t i = 0; i < n_e; ++i) {
      StreamRng rng(mix64(key, i));
      double coin = rng.uniform();
      std::uint32_t r = draw_length(cumulative, rng.uniform());
      if (coin < pe) {
        auto [a, b] = path_sample(g, u, v, r, rng);
        out.table.upsert_add(a, b, w);
        ++local_kept;
      }
    }
    draws.fetch_add(n_e, std::memory_order_relaxed);
    kept.fetch_add(local_kept, std::memory_order_relaxed);
  });
  out.draws = draws.load();
  out.kept = kept.load();
  return out;
}

/// A canonical sparsifier entry with its pre-log value.
struct NetmfEntry {
  vertex_t u;
  vertex_t v;
  double raw;
};

/// Pre-log estimate per key: vol(G) m / (b M) * W / (d_u d_v), doubled on
/// the diagonal (an unordered off-diagonal pair is hit from both
/// orientations, a diagonal pair only once). Sorted by key.
inline std::vector<NetmfEntry> assemble_raw(const SparsifierTable& table, const Graph& g, const SamplingParams& p) {
  const double scale = static_cast<double>(g.vol()) * static_cast<double>(g.m()) / (p.b * static_cast<double>(p.M));
  std::vector<NetmfEntry> out;
  auto entries = table.entries();
  out.reserve(entries.size());
  for (auto [key, w] : entries) {
    auto [u, v] = SparsifierTable::unpack(key);
    double raw = scale * SparsifierTable::from_fixed(w) /
                 (static_cast<double>(g.degree(u)) * static_cast<double>(g.degree(v)));
    if (u == v) raw *= 2.0;
    out.push_back({u, v, raw});
  }
  return out;
}

/// Symmetric trunc-log CSR: max(0, ln raw), zeros dropped.
inline SparseMatrix assemble_netmf(const SparsifierTable& table, const Graph& g, const SamplingParams& p) {
  std::vector<Triplet> t;
  for (const auto& e : assemble_raw(table, g, p)) {
    if (!(e.raw > 1.0)) continue;
    float value = static_cast<float>(std::log(e.raw));
    if (!(value > 0.0f)) continue;
    t.push_back({e.u, e.v, value});
    if (e.u != e.v) t.push_back({e.v, e.u, value});
  }
  return SparseMatrix::from_triplets(g.n(), std::move(t));
}

/// One realization of the downsampled graph H: each edge kept with
/// probability p_e and reweighted to 1/p_e. Returns (u, v, weight), u < v.
inline std::vector<std::tuple<vertex_t, vertex_t, double>> downsample_edges(const Graph& g, double C,
                                                                           std::uint64_t seed) {
  std::vector<std::tuple<vertex_t, vertex_t, double>> out;
  for (std::uint64_t su = 0; su < g.n(); ++su) {
    vertex_t u = static_cast<vertex_t>(su);
    std::uint64_t idx = g.upper_offset(u);
    g.for_each_neighbor(u, [&](vertex_t v) {
      if (v <= u) return;
      StreamRng rng(mix64(substream(seed, "downsample"), idx++));
      double pe = downsample_prob(g, u, v, C);
      if (rng.uniform() < pe) out.emplace_back(u, v, 1.0 / pe);
    });
  }
  return out;
}

}  // namespace lne
