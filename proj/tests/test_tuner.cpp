#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "lne/tuner.hpp"

using namespace lne;

namespace {

// Three continuous dimensions: log M, theta, mu. T = 1 and q, k pinned.
SearchSpace continuous_space() {
  SearchSpace s;
  s.T = 1;
  s.M_lo = 1000;
  s.M_hi = 1000000;
  s.q_lo = s.q_hi = 2;
  s.k_lo = s.k_hi = 10;
  return s;
}

std::vector<double> unit_coords(const SearchSpace& s, const HyperParams& h) {
  return {(std::log(static_cast<double>(h.M)) - std::log(static_cast<double>(s.M_lo))) /
              (std::log(static_cast<double>(s.M_hi)) - std::log(static_cast<double>(s.M_lo))),
          (h.theta - s.theta_lo) / (s.theta_hi - s.theta_lo), (h.mu - s.mu_lo) / (s.mu_hi - s.mu_lo)};
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(d);
}

nlohmann::json without_wall_time(const std::vector<TrialRecord>& trials) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& t : trials) {
    auto x = t.to_json();
    x.erase("wall_time_s");
    j.push_back(x);
  }
  return j;
}

}  // namespace

TEST(SampleConfig, DegenerateSpaceIsASinglePoint) {
  SearchSpace s;
  s.T = 3;
  s.s_lo = s.s_hi = 0.5;
  s.M_lo = s.M_hi = 5000;
  s.q_lo = s.q_hi = 3;
  s.k_lo = s.k_hi = 7;
  s.theta_lo = s.theta_hi = 0.9;
  s.mu_lo = s.mu_hi = 0.1;
  StreamRng rng(1);
  for (int i = 0; i < 20; ++i) {
    auto h = sample_config(s, rng);
    EXPECT_EQ(h.M, 5000u);
    EXPECT_EQ(h.q, 3u);
    EXPECT_EQ(h.k, 7u);
    EXPECT_DOUBLE_EQ(h.theta, 0.9);
    EXPECT_DOUBLE_EQ(h.mu, 0.1);
    for (double c : h.s_coeffs) EXPECT_NEAR(c, 1.0 / 3, 1e-12);
  }
}

TEST(SampleConfig, WalkWeightsAreNormalized) {
  SearchSpace s;
  s.T = 10;
  StreamRng rng(2);
  for (int i = 0; i < 1000; ++i) {
    auto h = sample_config(s, rng);
    double sum = 0;
    for (double c : h.s_coeffs) {
      EXPECT_GE(c, 0.01 / (s.T * 1.0));
      sum += c;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    EXPECT_TRUE(s.contains(h));
  }
}

TEST(SampleConfig, MIsLogUniform) {
  SearchSpace s;
  s.M_lo = 100;
  s.M_hi = 10000000;
  StreamRng rng(3);
  const int draws = 10000, bins = 10;
  std::vector<int> count(bins, 0);
  const double lo = std::log(100.0), hi = std::log(1e7);
  for (int i = 0; i < draws; ++i) {
    double u = (std::log(static_cast<double>(sample_config(s, rng).M)) - lo) / (hi - lo);
    count[std::min(bins - 1, static_cast<int>(u * bins))]++;
  }
  double chi2 = 0, expect = static_cast<double>(draws) / bins;
  for (int c : count) chi2 += (c - expect) * (c - expect) / expect;
  EXPECT_LT(chi2, 21.666);  // chi-square, 9 degrees of freedom, 1% level
}

TEST(SampleConfig, IntegerDimensionsCoverTheirRange) {
  SearchSpace s;
  StreamRng rng(4);
  std::vector<int> q(6, 0), k(17, 0);
  for (int i = 0; i < 5000; ++i) {
    auto h = sample_config(s, rng);
    q[h.q]++;
    k[h.k]++;
  }
  for (std::uint32_t v = 1; v <= 5; ++v) EXPECT_GT(q[v], 800);
  for (std::uint32_t v = 1; v <= 16; ++v) EXPECT_GT(k[v], 200);
}

TEST(SearchSpace, RejectsBadBounds) {
  SearchSpace s;
  s.q_lo = 4;
  s.q_hi = 2;
  EXPECT_THROW(s.validate(), InvalidArgument);
  s = SearchSpace{};
  s.theta_lo = 0;
  EXPECT_THROW(s.validate(), InvalidArgument);
}

TEST(Tune, BudgetOneReturnsInitial) {
  HyperParams init;
  init.theta = 0.7;
  int calls = 0;
  auto r = tune(SearchSpace{}, [&](const HyperParams& h) { ++calls; return h.theta; }, 1, 5, init);
  EXPECT_EQ(calls, 1);
  ASSERT_EQ(r.trials.size(), 1u);
  EXPECT_EQ(r.trials[0].kind, "initial");
  EXPECT_DOUBLE_EQ(r.best.theta, 0.7);
  EXPECT_DOUBLE_EQ(r.best_objective, 0.7);
}

TEST(Tune, RejectsZeroBudget) {
  EXPECT_THROW(tune(SearchSpace{}, [](const HyperParams&) { return 0.0; }, 0, 1, HyperParams{}), InvalidArgument);
}

TEST(Tune, QuadraticReachesOptimum) {
  SearchSpace s = continuous_space();
  const std::vector<double> target{0.3, 0.7, 0.55};
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto f = [&](const HyperParams& h) {
      double d = distance(unit_coords(s, h), target);
      return -d * d;
    };
    auto r = tune(s, f, 200, seed, HyperParams{});
    hits += distance(unit_coords(s, r.best), target) <= 0.1;
  }
  EXPECT_GE(hits, 95);
}

TEST(Tune, MonotoneInLogMFindsTopDecade) {
  SearchSpace s;
  s.T = 3;
  s.M_lo = 1000;
  s.M_hi = 10000000;
  auto r = tune(s, [](const HyperParams& h) { return std::log(static_cast<double>(h.M)); }, 40, 11, HyperParams{});
  EXPECT_GE(r.best.M, 1000000u);
}

TEST(Tune, DeterministicGivenSeed) {
  SearchSpace s;
  s.T = 4;
  auto f = [](const HyperParams& h) { return -std::abs(h.theta - 1.0) - std::abs(h.mu - 0.2) + 0.01 * h.k; };
  auto a = tune(s, f, 30, 9, HyperParams{});
  auto b = tune(s, f, 30, 9, HyperParams{});
  EXPECT_EQ(without_wall_time(a.trials), without_wall_time(b.trials));
  auto c = tune(s, f, 30, 10, HyperParams{});
  EXPECT_NE(without_wall_time(a.trials), without_wall_time(c.trials));
}

TEST(Tune, BestIsNonDecreasingInBudget) {
  SearchSpace s;
  s.T = 2;
  auto f = [](const HyperParams& h) { return std::sin(3 * h.theta) + h.mu * h.q; };
  double prev = -1e300;
  for (std::size_t b = 1; b <= 40; ++b) {
    double best = tune(s, f, b, 3, HyperParams{}).best_objective;
    EXPECT_GE(best, prev);
    prev = best;
  }
}

TEST(Tune, FailuresAreRecordedAndConsumeBudget) {
  SearchSpace s;
  s.T = 2;
  auto f = [](const HyperParams& h) -> double {
    if (h.k > 8) throw std::runtime_error("boom");
    return h.theta;
  };
  HyperParams init;
  init.k = 4;
  auto r = tune(s, f, 25, 1, init);
  EXPECT_EQ(r.trials.size(), 25u);
  std::size_t failed = 0;
  for (const auto& t : r.trials) {
    if (!t.objective) {
      ++failed;
      EXPECT_EQ(t.error, "boom");
    }
  }
  EXPECT_GT(failed, 0u);
  EXPECT_LE(r.best.k, 8u);
  EXPECT_GE(r.best_objective, init.theta);
}

TEST(Tune, ReturnedConfigsRespectBounds) {
  SearchSpace s;
  s.T = 5;
  s.theta_lo = 0.2;
  s.theta_hi = 1.2;
  auto r = tune(s, [](const HyperParams& h) { return h.theta + h.mu; }, 50, 2, HyperParams{});
  for (std::size_t i = 1; i < r.trials.size(); ++i) EXPECT_TRUE(s.contains(r.trials[i].config));
  EXPECT_TRUE(s.contains(r.best));
  EXPECT_GE(r.best_objective, r.trials[0].objective.value());
}

TEST(Tune, NonFiniteObjectiveIsAFailure) {
  auto r = tune(SearchSpace{}, [](const HyperParams&) { return std::nan(""); }, 3, 1, HyperParams{});
  for (const auto& t : r.trials) EXPECT_FALSE(t.objective.has_value());
}

TEST(TrialLog, OneJsonObjectPerLine) {
  auto r = tune(SearchSpace{}, [](const HyperParams& h) { return h.mu; }, 5, 1, HyperParams{});
  std::ostringstream os;
  write_trial_log(r.trials, os);
  std::istringstream is(os.str());
  std::string line;
  int lines = 0;
  while (std::getline(is, line)) {
    auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("config"));
    EXPECT_TRUE(j.contains("objective"));
    EXPECT_TRUE(j.contains("wall_time_s"));
    ++lines;
  }
  EXPECT_EQ(lines, 5);
}
