#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lne/errors.hpp"
#include "lne/hyperparams.hpp"
#include "lne/random.hpp"

namespace lne {

/// Bounds of the hyperparameter search. Walk weights are drawn per
/// coordinate from U[s_lo, s_hi] and renormalized; M is log-uniform; q and
/// k are integers; theta and mu are uniform.
struct SearchSpace {
  std::uint32_t T = 10;
  double s_lo = 0.01, s_hi = 1.0;
  std::uint64_t M_lo = 1000, M_hi = 1000000;
  std::uint32_t q_lo = 1, q_hi = 5;
  std::uint32_t k_lo = 1, k_hi = 16;
  double theta_lo = 0.01, theta_hi = 2.0;
  double mu_lo = 0.0, mu_hi = 1.0;

  void validate() const {
    auto check = [](bool ok, const char* what) {
      if (!ok) throw InvalidArgument(std::string("search space: ") + what);
    };
    check(T >= 1, "T >= 1");
    check(s_lo > 0 && s_lo <= s_hi && std::isfinite(s_hi), "0 < s_lo <= s_hi");
    check(M_lo >= 1 && M_lo <= M_hi, "1 <= M_lo <= M_hi");
    check(q_lo >= 1 && q_lo <= q_hi, "1 <= q_lo <= q_hi");
    check(k_lo >= 1 && k_lo <= k_hi, "1 <= k_lo <= k_hi");
    check(theta_lo > 0 && theta_lo <= theta_hi && std::isfinite(theta_hi), "0 < theta_lo <= theta_hi");
    check(mu_lo <= mu_hi && std::isfinite(mu_lo) && std::isfinite(mu_hi), "mu_lo <= mu_hi");
  }

  /// Unit-cube coordinates: s_1..s_T, M, q, k, theta, mu.
  std::size_t dims() const { return T + 5; }

  /// Maps a point of [0,1]^dims onto a config; fields outside the space come from `base`.
  HyperParams decode(const std::vector<double>& z, const HyperParams& base) const {
    HyperParams h = base;
    h.T = T;
    h.s_coeffs.assign(T, 0.0);
    double sum = 0;
    for (std::uint32_t r = 0; r < T; ++r) {
      h.s_coeffs[r] = s_lo + z[r] * (s_hi - s_lo);
      sum += h.s_coeffs[r];
    }
    for (auto& s : h.s_coeffs) s /= sum;
    const double llo = std::log(static_cast<double>(M_lo)), lhi = std::log(static_cast<double>(M_hi));
    h.M = std::clamp<std::uint64_t>(static_cast<std::uint64_t>(std::llround(std::exp(llo + z[T] * (lhi - llo)))), M_lo, M_hi);
    auto integer = [](double u, std::uint32_t lo, std::uint32_t hi) {
      auto v = lo + static_cast<std::uint32_t>(std::floor(u * (hi - lo + 1)));
      return std::min(v, hi);
    };
    h.q = integer(z[T + 1], q_lo, q_hi);
    h.k = integer(z[T + 2], k_lo, k_hi);
    h.theta = theta_lo + z[T + 3] * (theta_hi - theta_lo);
    h.mu = mu_lo + z[T + 4] * (mu_hi - mu_lo);
    return h;
  }

  /// Approximate inverse of decode, clamped into the cube.
  std::vector<double> encode(const HyperParams& h, std::uint64_t m) const {
    std::vector<double> z(dims(), 0.5);
    auto unit = [](double x, double lo, double hi) { return hi > lo ? std::clamp((x - lo) / (hi - lo), 0.0, 1.0) : 0.5; };
    std::vector<double> s = h.s_coeffs.empty() ? std::vector<double>(h.T, 1.0 / h.T) : h.s_coeffs;
    if (s.size() == T) {
      double mx = *std::max_element(s.begin(), s.end());
      for (std::uint32_t r = 0; r < T; ++r) z[r] = unit(std::clamp(s[r] / mx, s_lo, s_hi), s_lo, s_hi);
    }
    const double M = static_cast<double>(h.sample_count(m));
    z[T] = unit(std::log(M), std::log(static_cast<double>(M_lo)), std::log(static_cast<double>(M_hi)));
    auto integer = [](std::uint32_t v, std::uint32_t lo, std::uint32_t hi) {
      return std::clamp((static_cast<double>(v) - lo + 0.5) / (hi - lo + 1), 0.0, 1.0);
    };
    z[T + 1] = integer(h.q, q_lo, q_hi);
    z[T + 2] = integer(h.k, k_lo, k_hi);
    z[T + 3] = unit(h.theta, theta_lo, theta_hi);
    z[T + 4] = unit(h.mu, mu_lo, mu_hi);
    return z;
  }

  bool contains(const HyperParams& h) const {
    if (h.T != T || h.s_coeffs.size() != T) return false;
    double sum = 0;
    for (double s : h.s_coeffs) sum += s;
    return std::abs(sum - 1.0) <= 1e-9 && h.M >= M_lo && h.M <= M_hi && h.q >= q_lo && h.q <= q_hi &&
           h.k >= k_lo && h.k <= k_hi && h.theta >= theta_lo && h.theta <= theta_hi && h.mu >= mu_lo &&
           h.mu <= mu_hi;
  }
};

/// One draw from the search space.
inline HyperParams sample_config(const SearchSpace& space, StreamRng& rng, const HyperParams& base = {}) {
  space.validate();
  std::vector<double> z(space.dims());
  for (auto& x : z) x = rng.uniform();
  return space.decode(z, base);
}

struct TrialRecord {
  std::size_t index = 0;
  std::string kind;  // initial | global | local
  HyperParams config;
  std::optional<double> objective;
  std::string error;
  double wall_time_s = 0;

  nlohmann::json to_json() const {
    nlohmann::json j{{"trial", index}, {"kind", kind}, {"config", config}, {"wall_time_s", wall_time_s}};
    j["objective"] = objective ? nlohmann::json(*objective) : nlohmann::json(nullptr);
    if (!error.empty()) j["error"] = error;
    return j;
  }
};

struct TuneResult {
  HyperParams best;
  double best_objective = -std::numeric_limits<double>::infinity();
  std::vector<TrialRecord> trials;
};

using Objective = std::function<double(const HyperParams&)>;

struct CubeTrial {
  std::vector<double> z;
  std::string kind;  // initial | global | local
  std::optional<double> objective;
  std::string error;
  double wall_time_s = 0;
};

struct CubeResult {
  std::vector<double> best;
  double best_objective = -std::numeric_limits<double>::infinity();
  std::vector<CubeTrial> trials;
};

/// Budgeted maximization over [0,1]^dims. Trial 0 evaluates `initial`.
/// Later trials alternate a uniform global draw with a Gaussian
/// perturbation of the incumbent; the local step doubles after an
/// improving local trial and halves after a failed one. Failed or
/// non-finite evaluations are logged and consume budget.
inline CubeResult tune_cube(std::size_t dims, const std::function<double(const std::vector<double>&)>& objective,
                            std::size_t budget, std::uint64_t seed, std::vector<double> initial) {
  if (budget < 1) throw InvalidArgument("budget must be >= 1");
  if (initial.size() != dims) throw InvalidArgument("initial point has wrong dimension");
  StreamRng rng(substream(seed, "tuner"));
  CubeResult res;
  res.best = initial;
  double step = 0.25;

  auto run = [&](const std::vector<double>& z, const char* kind) -> std::optional<double> {
    CubeTrial rec;
    rec.z = z;
    rec.kind = kind;
    auto t0 = std::chrono::steady_clock::now();
    try {
      double f = objective(z);
      if (!std::isfinite(f)) throw std::runtime_error("objective is not finite");
      rec.objective = f;
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.trials.push_back(std::move(rec));
    return res.trials.back().objective;
  };

  if (auto f = run(initial, "initial")) res.best_objective = *f;

  for (std::size_t t = 1; t < budget; ++t) {
    const bool local = (t % 2 == 0);
    std::vector<double> z(dims);
    if (local) {
      for (std::size_t i = 0; i < dims; ++i) z[i] = std::clamp(res.best[i] + step * rng.gaussian(), 0.0, 1.0);
    } else {
      for (auto& x : z) x = rng.uniform();
    }
    auto f = run(z, local ? "local" : "global");
    const bool improved = f && *f > res.best_objective;
    if (improved) {
      res.best_objective = *f;
      res.best = z;
    }
    if (local) step = improved ? std::min(0.5, step * 2) : std::max(1e-3, step / 2);
  }
  return res;
}

/// tune_cube over a SearchSpace. Fields outside the space are taken from `initial`.
inline TuneResult tune(const SearchSpace& space, const Objective& objective, std::size_t budget, std::uint64_t seed,
                       const HyperParams& initial, std::uint64_t m_for_encoding = 1) {
  space.validate();
  std::size_t calls = 0;
  auto cube = tune_cube(
      space.dims(),
      [&](const std::vector<double>& z) { return objective(calls++ == 0 ? initial : space.decode(z, initial)); },
      budget, seed, space.encode(initial, m_for_encoding));
  TuneResult res;
  for (std::size_t i = 0; i < cube.trials.size(); ++i) {
    auto& c = cube.trials[i];
    TrialRecord rec;
    rec.index = i;
    rec.kind = c.kind;
    rec.config = i == 0 ? initial : space.decode(c.z, initial);
    rec.objective = c.objective;
    rec.error = c.error;
    rec.wall_time_s = c.wall_time_s;
    res.trials.push_back(std::move(rec));
  }
  res.best_objective = cube.best_objective;
  res.best = initial;
  for (const auto& rec : res.trials) {
    if (rec.objective && *rec.objective == cube.best_objective) {
      res.best = rec.config;
      break;
    }
  }
  return res;
}

inline void write_trial_log(const std::vector<TrialRecord>& trials, std::ostream& os) {
  for (const auto& t : trials) os << t.to_json().dump() << '\n';
}

}  // namespace lne
