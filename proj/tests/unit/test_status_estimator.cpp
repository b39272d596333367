#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <random>

#include "hashrate/errors.hpp"
#include "hashrate/simulator.hpp"
#include "hashrate/status_estimator.hpp"
#include "test_support.hpp"

namespace hashrate {
namespace {

using testing::report;

// With theta large the normalized minimum is exponential, so n * beta_hat / beta
// is Gamma(n, 1). The theta-upper event is beta_hat <= beta / (1 + pi).
double exact_upper(std::size_t n, double pi) {
  const double a = static_cast<double>(n);
  return boost::math::gamma_p(a, a / (1.0 + pi));
}

double exact_lower(std::size_t n, double pi) {
  const double a = static_cast<double>(n);
  return boost::math::gamma_q(a, a * (1.0 + pi));
}

TEST(Chernoff, BoundsDominateExactGammaTails) {
  for (std::size_t n : {1u, 2u, 5u, 40u, 240u, 720u}) {
    for (double pi : {0.01, 0.05, 0.1, 0.2, 0.5, 1.0, 3.0}) {
      EXPECT_GE(chernoff_upper_tail(n, pi), exact_upper(n, pi)) << n << " " << pi;
      EXPECT_GE(chernoff_lower_tail(n, pi), exact_lower(n, pi)) << n << " " << pi;
    }
  }
}

TEST(Chernoff, ClosedFormAtKnownPoints) {
  // n = 1, pi = 1: upper is exp(1/2 - ln 2), lower is exp(-ln 2 - (1 - ln 2)).
  EXPECT_NEAR(chernoff_upper_tail(1, 1.0), std::exp(0.5) / 2.0, 1e-15);
  EXPECT_NEAR(chernoff_lower_tail(1, 1.0), std::exp(-1.0), 1e-15);
  EXPECT_DOUBLE_EQ(chernoff_bound(Tail::upper, 3, 0.2), chernoff_upper_tail(3, 0.2));
  EXPECT_DOUBLE_EQ(chernoff_bound(Tail::lower, 3, 0.2), chernoff_lower_tail(3, 0.2));
}

// Property: both tails decrease in n and in pi.
TEST(Chernoff, MonotoneInNAndPi) {
  for (double pi : {0.05, 0.5}) {
    for (std::size_t n = 1; n < 200; ++n) {
      EXPECT_GT(chernoff_upper_tail(n, pi), chernoff_upper_tail(n + 1, pi));
      EXPECT_GT(chernoff_lower_tail(n, pi), chernoff_lower_tail(n + 1, pi));
    }
  }
  for (double pi = 0.01; pi < 5.0; pi *= 1.3) {
    EXPECT_GT(chernoff_upper_tail(50, pi), chernoff_upper_tail(50, pi * 1.3));
    EXPECT_GT(chernoff_lower_tail(50, pi), chernoff_lower_tail(50, pi * 1.3));
  }
}

TEST(SolvePi, TightAndFeasible) {
  for (Tail tail : {Tail::upper, Tail::lower}) {
    for (std::size_t n : {1u, 10u, 240u, 5000u}) {
      for (double eps : {0.01, 0.05, 0.2}) {
        const double pi = solve_pi({n, eps, tail});
        EXPECT_LE(chernoff_bound(tail, n, pi), eps);
        EXPECT_GT(chernoff_bound(tail, n, pi * (1.0 - 1e-6)), eps) << n << " " << eps;
      }
    }
  }
  EXPECT_GT(solve_pi({10, 0.05, Tail::upper}), solve_pi({100, 0.05, Tail::upper}));
  EXPECT_EQ(solve_pi({10, 0.05, Tail::upper}), solve_pi({10, 0.05, Tail::upper}));
}

TEST(SolvePi, RejectsBadQueries) {
  EXPECT_THROW(solve_pi({0, 0.05, Tail::upper}), InvalidArgument);
  EXPECT_THROW(solve_pi({5, 0.0, Tail::upper}), InvalidArgument);
  EXPECT_THROW(solve_pi({5, 1.0, Tail::lower}), InvalidArgument);
}

TEST(MinerRate, RescalesPartialIntervals) {
  const std::vector<StatusReport> rs{report("m", 0.001, 1.0), report("m", 0.004, 2.0)};
  const auto e = estimate_miner_rate(rs, 1.0);
  // beta_hat = (0.001 + 0.008) / 2.
  EXPECT_NEAR(e.theta_point * 0.0045, 1.0, 1e-12);
  EXPECT_NEAR(e.rate_point, e.theta_point, 1e-6 * e.theta_point);
  EXPECT_EQ(e.sample_size, 2u);
  EXPECT_EQ(e.label, "m");
  EXPECT_EQ(e.method, EstimateMethod::status_reports);

  const auto per10 = estimate_miner_rate(rs, 10.0);
  EXPECT_NEAR(per10.rate_point / e.rate_point, 1.0, 1e-12);
}

TEST(MinerRate, Rejections) {
  EXPECT_THROW(estimate_miner_rate({}, 1.0), EstimationError);
  const std::vector<StatusReport> mixed{report("a", 0.1), report("b", 0.1)};
  EXPECT_THROW(estimate_miner_rate(mixed, 1.0), InvalidArgument);
  const std::vector<StatusReport> zero{report("a", 0.0)};
  EXPECT_THROW(estimate_miner_rate(zero, 1.0), EstimationError);
  const std::vector<StatusReport> one{report("a", 0.1)};
  EXPECT_THROW(estimate_miner_rate(one, 0.0), InvalidArgument);
}

TEST(BoundedEstimate, UsesBothTails) {
  std::vector<StatusReport> rs;
  for (int i = 0; i < 40; ++i) rs.push_back(report("m", 0.001 * (1 + i % 3)));
  const auto e = bounded_estimate(rs, 1.0, 0.05);
  ASSERT_TRUE(e.bounded);
  const double up = solve_pi({40, 0.05, Tail::upper});
  const double lo = solve_pi({40, 0.05, Tail::lower});
  EXPECT_DOUBLE_EQ(e.theta_high, e.theta_point * (1.0 + up));
  EXPECT_DOUBLE_EQ(e.theta_low, e.theta_point / (1.0 + lo));
  EXPECT_LT(e.rate_low, e.rate_point);
  EXPECT_GT(e.rate_high, e.rate_point);
}

// Property: each Chernoff side misses the truth in at most epsilon of trials.
TEST(BoundedEstimate, EmpiricalMissRateWithinEpsilon) {
  std::mt19937_64 rng(99);
  const double theta = 1e6;
  const std::size_t n = 20;
  const int trials = 4000;
  int above = 0;
  int below = 0;
  for (int t = 0; t < trials; ++t) {
    std::vector<StatusReport> rs;
    for (std::size_t i = 0; i < n; ++i) rs.push_back(report("m", sample_min_hash_unit(theta, 0.0, rng)));
    const auto e = bounded_estimate(rs, 1.0, 0.05);
    above += e.theta_low > theta ? 1 : 0;
    below += e.theta_high < theta ? 1 : 0;
  }
  // Slack of three binomial standard errors at p = 0.05.
  const double slack = 3.0 * std::sqrt(0.05 * 0.95 / trials);
  EXPECT_LE(static_cast<double>(above) / trials, 0.05 + slack);
  EXPECT_LE(static_cast<double>(below) / trials, 0.05 + slack);
}

std::vector<StatusReport> chained(const std::string& miner, const Digest256& prior, int count) {
  std::vector<StatusReport> out;
  Digest256 prev = prior;
  for (int i = 0; i < count; ++i) {
    auto r = report(miner, 0.01, 1.0, static_cast<std::uint64_t>(i));
    r.prior_block_id = prior;
    r.report_nonce = sha256(miner + std::to_string(i));
    r.chained_nonce = chain_nonce(prev, r.report_nonce);
    prev = r.chained_nonce;
    out.push_back(r);
  }
  return out;
}

TEST(ReportChain, DetectsTamperingAndRestartsPerPriorBlock) {
  auto rs = chained("m", sha256(std::string_view("p1")), 5);
  const auto more = chained("m", sha256(std::string_view("p2")), 3);
  rs.insert(rs.end(), more.begin(), more.end());
  EXPECT_TRUE(verify_report_chain(rs).ok);

  rs[2].report_nonce = sha256(std::string_view("forged"));
  const auto v = verify_report_chain(rs);
  EXPECT_FALSE(v.ok);
  ASSERT_TRUE(v.first_mismatch.has_value());
  EXPECT_EQ(*v.first_mismatch, 2u);
  // Everything after the forgery in the same segment fails; the next segment is clean.
  EXPECT_EQ(v.mismatches, (std::vector<std::size_t>{2, 3, 4}));
  EXPECT_TRUE(verify_report_chain({}).ok);
}

TEST(ByMiner, NetworkIsTheSumAndFilterApplies) {
  std::vector<StatusReport> rs{report("b", 0.002), report("a", 0.001), report("b", 0.002), report("c", 0.004)};
  const auto all = estimate_by_miner(rs, 1.0, 0.05);
  ASSERT_EQ(all.miners.size(), 3u);
  EXPECT_EQ(all.miners[0].label, "a");
  EXPECT_EQ(all.miners[2].label, "c");
  double point = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  for (const auto& m : all.miners) {
    point += m.theta_point;
    lo += m.theta_low;
    hi += m.theta_high;
  }
  EXPECT_DOUBLE_EQ(all.network.theta_point, point);
  EXPECT_DOUBLE_EQ(all.network.theta_low, lo);
  EXPECT_DOUBLE_EQ(all.network.theta_high, hi);
  EXPECT_EQ(all.network.sample_size, 4u);

  const auto some = estimate_by_miner(rs, 1.0, std::nullopt, {"a", "c"});
  EXPECT_EQ(some.miners.size(), 2u);
  EXPECT_FALSE(some.network.bounded);
  EXPECT_NEAR(some.network.theta_point, 1000.0 + 250.0, 1e-6);
  EXPECT_THROW(estimate_by_miner(rs, 1.0, std::nullopt, {"zz"}), EstimationError);
}

} // namespace
} // namespace hashrate
