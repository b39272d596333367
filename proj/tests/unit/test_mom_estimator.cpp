#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>

#include "hashrate/errors.hpp"
#include "hashrate/mom_estimator.hpp"
#include "hashrate/status_estimator.hpp"
#include "test_support.hpp"

namespace hashrate {
namespace {

using testing::header;
using testing::report;

// E[Y] as the integral of y against the exponential density on [0, t].
double quadrature_expected_y(double beta, double t) {
  auto f = [beta](double y) { return y * std::exp(-y / beta) / beta; };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, t, 15, 1e-14);
}

TEST(ExpectedY, MatchesQuadrature) {
  for (double t : {1e-12, 1e-3, 0.5}) {
    for (double ratio = 1e-3; ratio < 1e7; ratio *= 3.7) {
      const double beta = ratio * t;
      const double oracle = quadrature_expected_y(beta, t);
      EXPECT_NEAR(expected_y(beta, t) / oracle, 1.0, 1e-10) << "t=" << t << " beta/t=" << ratio;
    }
  }
  EXPECT_EQ(expected_y(0.0, 1e-3), 0.0);
}

// The maximum sits below beta = t, which is only the inflection point.
TEST(ExpectedY, MaximumLocatedByScan) {
  const double t = 1e-4;
  double best_beta = 0.0;
  double best = 0.0;
  for (double r = 0.3; r < 1.2; r += 1e-5) {
    const double y = expected_y(r * t, t);
    if (y > best) {
      best = y;
      best_beta = r * t;
    }
  }
  EXPECT_NEAR(peak_beta(t) / best_beta, 1.0, 1e-4);
  EXPECT_NEAR(max_expected_y(t) / best, 1.0, 1e-9);
  EXPECT_GE(max_expected_y(t), best);
  EXPECT_NEAR(expected_y(t, t) / (t * (1.0 - 2.0 / std::exp(1.0))), 1.0, 1e-14);
  EXPECT_GT(max_expected_y(t), expected_y(t, t));
}

// Property: solve_beta inverts expected_y on either branch.
TEST(SolveBeta, RoundTripsBothBranches) {
  const double t = 1e-6;
  for (double ratio = 1.5; ratio < 1e9; ratio *= 2.3) {
    const double beta = ratio * t;
    EXPECT_NEAR(solve_beta(expected_y(beta, t), t) / beta, 1.0, 1e-9) << ratio;
  }
  MomSolveConfig minus;
  minus.branch = Branch::minus;
  for (double ratio = 0.01; ratio < 0.5; ratio *= 1.4) {
    const double beta = ratio * t;
    EXPECT_NEAR(solve_beta(expected_y(beta, t), t, minus) / beta, 1.0, 1e-8) << ratio;
  }
}

TEST(SolveBeta, ToleranceIsRelative) {
  const double t = 1e-6;
  MomSolveConfig loose;
  loose.tau = 1e-3;
  const double y = expected_y(1e4 * t, t);
  const double beta = solve_beta(y, t, loose);
  EXPECT_LE(std::abs(expected_y(beta, t) - y), 1e-3 * y);
}

TEST(SolveBeta, InfeasibleAndDegenerateInputs) {
  const double t = 1e-3;
  const double y_max = max_expected_y(t);
  EXPECT_THROW(solve_beta(1.01 * y_max, t), EstimationError);
  MomSolveConfig clamp;
  clamp.clamp_infeasible = true;
  EXPECT_EQ(solve_beta(1.01 * y_max, t, clamp), peak_beta(t));
  EXPECT_EQ(solve_beta(y_max, t), peak_beta(t));
  // beta = t is feasible and sits on the plus branch.
  EXPECT_NEAR(solve_beta(expected_y(t, t), t) / t, 1.0, 1e-9);
  EXPECT_THROW(solve_beta(0.0, t), EstimationError);
  EXPECT_THROW(solve_beta(-1.0, t), InvalidArgument);
  EXPECT_THROW(solve_beta(1e-5, 0.0), InvalidArgument);
  MomSolveConfig no_tau;
  no_tau.tau = 0.0;
  EXPECT_THROW(solve_beta(1e-5, t, no_tau), InvalidArgument);
  MomSolveConfig starved;
  starved.max_iterations = 3;
  EXPECT_THROW(solve_beta(expected_y(100 * t, t), t, starved), EstimationError);
}

TEST(Grid, CellIndexingAndTarget) {
  std::vector<BlockHeader> hs{header("a", "", 100, 1e-4, 1e-3), header("b", "a", 101, 2e-4, 1e-3),
                              header("c", "b", 105, 3e-4, 2e-3, "x"), header("d", "c", 110, 4e-4, 4e-3)};
  const auto g = build_interval_grid(hs, {100.0, 110.0}, 2.0);
  EXPECT_EQ(g.interval_count, 5u);
  // ts = 100 is outside (start is open); 101 -> cell 0, 105 -> cell 2, 110 -> cell 4.
  ASSERT_EQ(g.observations.size(), 3u);
  EXPECT_EQ(g.observations[0].interval_index, 0u);
  EXPECT_EQ(g.observations[1].interval_index, 2u);
  EXPECT_EQ(g.observations[2].interval_index, 4u);
  EXPECT_DOUBLE_EQ(g.target, 4e-3);
  EXPECT_NEAR(g.y_bar(), (2e-4 + 3e-4 + 4e-4) / 5.0, 1e-15);

  const auto only_x = build_interval_grid(hs, {100.0, 110.0}, 2.0, [](const std::string& m) { return m == "x"; });
  ASSERT_EQ(only_x.observations.size(), 1u);
  EXPECT_DOUBLE_EQ(only_x.target, 4e-3); // the latest header sets the target even when filtered out

  const auto partial = build_interval_grid(hs, {100.0, 105.0}, 2.0);
  EXPECT_EQ(partial.interval_count, 3u);
  EXPECT_THROW(build_interval_grid(hs, {1.0, 1.0}, 1.0), InvalidArgument);
  EXPECT_THROW(build_interval_grid(hs, {1.0, 2.0}, 0.0), InvalidArgument);
}

// Cells drawn from the exact model: Y = min hash when it falls under t, else 0.
IntervalGrid model_grid(double theta, double t, std::uint64_t cells, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> exp_min(theta);
  IntervalGrid g;
  g.window = {0.0, static_cast<double>(cells)};
  g.interval_count = cells;
  g.target = t;
  for (std::uint64_t i = 0; i < cells; ++i) {
    const double y = exp_min(rng);
    if (y <= t) g.observations.push_back({i, y});
  }
  return g;
}

TEST(MomEstimate, ConsistentOnModelData) {
  const double theta = 1e6;
  const double t = 1e-9; // about 1 block per 1000 cells
  const auto g = model_grid(theta, t, 2'000'000, 4);
  ASSERT_GT(g.observations.size(), 1500u);
  const auto e = estimate_from_grid(g);
  EXPECT_NEAR(e.theta_point / theta, 1.0, 4.0 / std::sqrt(static_cast<double>(g.observations.size())));
  EXPECT_EQ(e.sample_size, g.observations.size());
}

TEST(Bootstrap, OrderedDeterministicAndBracketsPoint) {
  const auto g = model_grid(1e6, 1e-9, 100'000, 6);
  ASSERT_GE(g.observations.size(), 50u);
  BootstrapConfig boot;
  boot.resamples = 2000;
  boot.seed = 3;
  const auto a = bootstrap_bounds(g, {}, boot);
  const auto b = bootstrap_bounds(g, {}, boot);
  EXPECT_EQ(a.theta_low, b.theta_low);
  EXPECT_EQ(a.theta_high, b.theta_high);
  EXPECT_LT(a.theta_low, a.theta_high);
  EXPECT_DOUBLE_EQ(a.beta_low, 1.0 / a.theta_high);
  const auto e = estimate_from_grid(g, {}, boot);
  EXPECT_LE(e.theta_low, e.theta_point);
  EXPECT_GE(e.theta_high, e.theta_point);

  // Fixed-count resampling of identical values has no spread at all.
  IntervalGrid flat;
  flat.window = {0.0, 100.0};
  flat.interval_count = 100;
  flat.target = 1e-3;
  for (std::uint64_t i = 0; i < 10; ++i) flat.observations.push_back({i * 10, 2e-4});
  boot.scheme = BootstrapScheme::fixed_count;
  const auto f = bootstrap_bounds(flat, {}, boot);
  EXPECT_DOUBLE_EQ(f.theta_low, f.theta_high);
  boot.scheme = BootstrapScheme::poisson_count;
  const auto p = bootstrap_bounds(flat, {}, boot);
  EXPECT_LT(p.theta_low, p.theta_high);
}

TEST(Bootstrap, Validation) {
  IntervalGrid one;
  one.window = {0.0, 10.0};
  one.interval_count = 10;
  one.target = 1e-3;
  one.observations.push_back({0, 1e-4});
  EXPECT_THROW(bootstrap_bounds(one), EstimationError);
  BootstrapConfig bad;
  bad.low_percentile = 95.0;
  bad.high_percentile = 5.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = {};
  bad.resamples = 0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  EXPECT_EQ(bootstrap_scheme_from_string(to_string(BootstrapScheme::fixed_count)), BootstrapScheme::fixed_count);
  EXPECT_THROW(bootstrap_scheme_from_string("cells"), InvalidArgument);
}

TEST(Subset, FiltersAndLabels) {
  std::vector<BlockHeader> hs{header("g", "", 0, 1e-4), header("a", "g", 10, 1e-4, 1e-3, "x"),
                              header("b", "a", 20, 3e-4, 1e-3, "y"), header("c", "b", 30, 2e-4, 1e-3, "x")};
  const auto e = estimate_subset_rate(hs, {"y", "x"}, {0.0, 30.0}, 1.0);
  EXPECT_EQ(e.label, "x,y");
  EXPECT_EQ(e.sample_size, 3u);
  const auto only_x = estimate_subset_rate(hs, {"x"}, {0.0, 30.0}, 1.0);
  EXPECT_EQ(only_x.sample_size, 2u);
  EXPECT_LT(only_x.theta_point, e.theta_point);
  EXPECT_THROW(estimate_subset_rate(hs, {"z"}, {0.0, 30.0}, 1.0), EstimationError);
}

TEST(Combined, SumsReportAndBlockParts) {
  std::vector<BlockHeader> hs{header("g", "", 0, 1e-4), header("a", "g", 10, 1e-4, 1e-3, "r"),
                              header("b", "a", 20, 3e-4, 1e-3, "n"), header("c", "b", 30, 2e-4, 1e-3, "n")};
  const std::vector<StatusReport> rs{report("r", 0.01), report("r", 0.03)};
  const TimeWindow w{0.0, 30.0};
  const auto c = combined_estimate(hs, rs, w, 1.0, std::nullopt);
  const auto from_reports = estimate_miner_rate(rs, 1.0);
  const auto from_blocks = estimate_subset_rate(hs, {"n"}, w, 1.0);
  EXPECT_NEAR(c.theta_point, from_reports.theta_point + from_blocks.theta_point, 1e-9 * c.theta_point);
  EXPECT_EQ(c.method, EstimateMethod::combined);
  EXPECT_FALSE(c.bounded);

  // One non-reporting block: its bounds span zero to 1/t.
  std::vector<BlockHeader> single{header("g", "", 0, 1e-4), header("a", "g", 10, 3e-4, 1e-3, "n")};
  BootstrapConfig boot;
  boot.resamples = 100;
  const auto d = combined_estimate(single, rs, {0.0, 10.0}, 1.0, 0.05, {}, boot);
  const auto bounded_reports = bounded_estimate(rs, 1.0, 0.05);
  EXPECT_NEAR(d.theta_low, bounded_reports.theta_low, 1e-9 * d.theta_low);
  EXPECT_NEAR(d.theta_high, bounded_reports.theta_high + 1.0 / peak_beta(1e-3), 1e-9 * d.theta_high);

  // Every block from a reporter: only the report part remains.
  const std::vector<StatusReport> all{report("r", 0.01), report("n", 0.02)};
  const auto e = combined_estimate(hs, all, w, 1.0, std::nullopt);
  EXPECT_NEAR(e.theta_point, 100.0 + 50.0, 1e-9);
  EXPECT_THROW(combined_estimate(hs, {}, {100.0, 200.0}, 1.0, std::nullopt), EstimationError);
}

TEST(Naive, DifficultyRate) {
  EXPECT_DOUBLE_EQ(naive_difficulty_rate(1.0, 600.0), std::ldexp(1.0, 32) / 600.0);
  EXPECT_THROW(naive_difficulty_rate(0.0, 600.0), InvalidArgument);
}

} // namespace
} // namespace hashrate
