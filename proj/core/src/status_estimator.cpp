#include "hashrate/status_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "hashrate/errors.hpp"

namespace hashrate {

namespace {

constexpr double kPiMin = 1e-9;
constexpr double kPiMax = 1e9;

double solve_pi_uncached(const ChernoffQuery& q) {
  auto bound = [&](double pi) { return chernoff_bound(q.tail, q.n, pi); };
  if (bound(kPiMax) > q.epsilon) {
    throw EstimationError("unachievable confidence: no pi <= 1e9 brings the bound under " +
                          std::to_string(q.epsilon) + " with n = " + std::to_string(q.n));
  }
  if (bound(kPiMin) <= q.epsilon) return kPiMin;
  // Invariant: bound(lo) > epsilon >= bound(hi).
  double lo = kPiMin;
  double hi = kPiMax;
  while (hi - lo > 1e-9 * hi) {
    const double mid = lo * 10.0 < hi ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    if (bound(mid) <= q.epsilon) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

} // namespace

std::string_view to_string(Tail tail) { return tail == Tail::upper ? "upper" : "lower"; }

double chernoff_upper_tail(std::size_t n, double pi) {
  const double nn = static_cast<double>(n);
  return std::exp(nn * (pi / (1.0 + pi) - std::log1p(pi)));
}

double chernoff_lower_tail(std::size_t n, double pi) {
  const double nn = static_cast<double>(n);
  return std::exp(-std::log1p(pi) - nn * (pi - std::log1p(pi)));
}

double chernoff_bound(Tail tail, std::size_t n, double pi) {
  return tail == Tail::upper ? chernoff_upper_tail(n, pi) : chernoff_lower_tail(n, pi);
}

double solve_pi(const ChernoffQuery& query) {
  if (query.n == 0) throw InvalidArgument("report count must be at least 1");
  if (!(query.epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (query.epsilon >= 1.0) throw InvalidArgument("epsilon must be below 1 (pi = 0 already satisfies it)");

  static std::mutex mutex;
  static std::map<std::tuple<std::size_t, double, int>, double> cache;
  const auto key = std::make_tuple(query.n, query.epsilon, static_cast<int>(query.tail));
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const double pi = solve_pi_uncached(query);
  std::lock_guard lock(mutex);
  cache.emplace(key, pi);
  return pi;
}

HashRateEstimate estimate_miner_rate(std::span<const StatusReport> reports, double sigma) {
  if (reports.empty()) throw EstimationError("no reports");
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  const std::string& label = reports.front().miner;
  double sum = 0.0;
  for (const auto& r : reports) {
    if (r.miner != label) throw InvalidArgument("reports from more than one miner: '" + label + "' and '" + r.miner + "'");
    if (r.min_hash == HashValue()) throw EstimationError("degenerate report: min_hash is zero");
    if (!(r.interval_seconds > 0.0)) throw InvalidArgument("report interval_seconds must be positive");
    sum += r.min_hash.unit() * (r.interval_seconds / sigma);
  }
  const double beta_unit = sum / static_cast<double>(reports.size());
  auto e = HashRateEstimate::from_theta(theta_from_unit_beta(beta_unit), sigma, EstimateMethod::status_reports,
                                        reports.size());
  e.label = label;
  return e;
}

HashRateEstimate bounded_estimate(std::span<const StatusReport> reports, double sigma, double epsilon) {
  auto e = estimate_miner_rate(reports, sigma);
  const double pi_up = solve_pi({reports.size(), epsilon, Tail::upper});
  const double pi_lo = solve_pi({reports.size(), epsilon, Tail::lower});
  // beta_L = beta_hat / (1 + pi_up) gives the high hash count, and
  // beta_H = beta_hat * (1 + pi_lo) the low one.
  e.set_bounds(e.theta_point / (1.0 + pi_lo), e.theta_point * (1.0 + pi_up));
  return e;
}

ChainVerdict verify_report_chain(std::span<const StatusReport> reports) {
  ChainVerdict verdict;
  Digest256 expected_prev;
  const Digest256* prior = nullptr;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    if (!prior || r.prior_block_id != *prior) {
      prior = &r.prior_block_id;
      expected_prev = r.prior_block_id;
    }
    const Digest256 expected = chain_nonce(expected_prev, r.report_nonce);
    if (expected != r.chained_nonce) {
      verdict.ok = false;
      if (!verdict.first_mismatch) verdict.first_mismatch = i;
      verdict.mismatches.push_back(i);
    }
    expected_prev = expected;
  }
  return verdict;
}

MinerBreakdown estimate_by_miner(std::span<const StatusReport> reports, double sigma, std::optional<double> epsilon,
                                 const std::vector<std::string>& only) {
  std::map<std::string, std::vector<StatusReport>> groups;
  for (const auto& r : reports) {
    if (!only.empty() && std::find(only.begin(), only.end(), r.miner) == only.end()) continue;
    groups[r.miner].push_back(r);
  }
  if (groups.empty()) throw EstimationError("no reports");

  MinerBreakdown out;
  double theta = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 0;
  for (const auto& [label, group] : groups) {
    auto e = epsilon ? bounded_estimate(group, sigma, *epsilon) : estimate_miner_rate(group, sigma);
    theta += e.theta_point;
    lo += e.theta_low;
    hi += e.theta_high;
    n += e.sample_size;
    out.miners.push_back(std::move(e));
  }
  out.network = HashRateEstimate::from_theta(theta, sigma, EstimateMethod::status_reports, n);
  out.network.label = "network";
  if (epsilon) out.network.set_bounds(lo, hi);
  return out;
}

} // namespace hashrate
