#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "lne/errors.hpp"
#include "lne/propagation.hpp"
#include "lne/randsvd.hpp"
#include "lne/sparsifier.hpp"

namespace lne {

/// Every tunable of the embedding pipeline.
struct HyperParams {
  std::uint32_t T = 10;
  std::vector<double> s_coeffs;  // empty = uniform
  std::uint64_t M = 0;           // 0 = use samples_per_Tm
  double samples_per_Tm = 1.0;
  double C_multiplier = 1.0;     // C = C_multiplier * ln n
  bool downsample = true;        // false => p_e = 1
  double b = 1.0;
  std::uint32_t d = 128;
  std::uint32_t s_over = 16;
  std::uint32_t q = 1;
  std::uint32_t k = 10;
  double theta = 0.5;
  double mu = 0.2;
  std::uint64_t seed = 0;
  double table_capacity_factor = 2.0;

  /// Absolute sample count for a graph with m edges.
  std::uint64_t sample_count(std::uint64_t m) const {
    if (M > 0) return M;
    double x = samples_per_Tm * static_cast<double>(T) * static_cast<double>(m);
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(x)));
  }

  SamplingParams sampling(std::uint64_t n, std::uint64_t m) const {
    SamplingParams p;
    p.T = T;
    p.s_coeffs = s_coeffs;
    p.M = sample_count(m);
    if (!downsample) {
      p.C = std::numeric_limits<double>::infinity();
    } else {
      p.C = C_multiplier * std::log(static_cast<double>(std::max<std::uint64_t>(n, 2)));
    }
    p.b = b;
    p.seed = seed;
    p.table_capacity_factor = table_capacity_factor;
    return p;
  }

  SvdParams svd() const { return SvdParams{d, s_over, q, seed}; }
  PropagationParams propagation() const { return PropagationParams{k, mu, theta}; }

  void validate() const {
    if (T < 1) throw InvalidArgument("T must be >= 1");
    if (!s_coeffs.empty()) {
      SamplingParams sp;
      sp.T = T;
      sp.s_coeffs = s_coeffs;
      sp.validate();
    }
    if (M == 0 && !(samples_per_Tm > 0)) throw InvalidArgument("samples_per_Tm must be > 0");
    if (!(C_multiplier > 0)) throw InvalidArgument("C_multiplier must be > 0");
    if (!(b > 0)) throw InvalidArgument("b must be > 0");
    if (d < 1) throw InvalidArgument("d must be >= 1");
    if (q < 1) throw InvalidArgument("q must be >= 1");
    if (k < 1) throw InvalidArgument("k must be >= 1");
    if (!(theta > 0)) throw InvalidArgument("theta must be > 0");
  }
};

inline void to_json(nlohmann::json& j, const HyperParams& h) {
  j = nlohmann::json{{"T", h.T},
                     {"s_coeffs", h.s_coeffs},
                     {"samples_per_Tm", h.samples_per_Tm},
                     {"C_multiplier", h.C_multiplier},
                     {"downsample", h.downsample},
                     {"b", h.b},
                     {"d", h.d},
                     {"s_over", h.s_over},
                     {"q", h.q},
                     {"k", h.k},
                     {"theta", h.theta},
                     {"mu", h.mu},
                     {"seed", h.seed},
                     {"table_capacity_factor", h.table_capacity_factor}};
  if (h.M > 0) j["M"] = h.M;
}

/// Missing keys keep their defaults; unknown keys are left to the caller.
inline void from_json(const nlohmann::json& j, HyperParams& h) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key) && !j.at(key).is_null()) j.at(key).get_to(field);
  };
  get("T", h.T);
  get("s_coeffs", h.s_coeffs);
  get("M", h.M);
  get("samples_per_Tm", h.samples_per_Tm);
  get("C_multiplier", h.C_multiplier);
  get("downsample", h.downsample);
  get("b", h.b);
  get("d", h.d);
  get("s_over", h.s_over);
  get("q", h.q);
  get("k", h.k);
  get("theta", h.theta);
  get("mu", h.mu);
  get("seed", h.seed);
  get("table_capacity_factor", h.table_capacity_factor);
}

}  // namespace lne
