#include "hashrate/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <tuple>

#include <boost/math/special_functions/gamma.hpp>

#include "hashrate/errors.hpp"
#include "hashrate/status_estimator.hpp"

namespace hashrate {

namespace {

// P(K > z) + sum_{k<=z} Pois(k; lambda) r^(z-k), which is the race formula
// 1 - sum_{k<=z} Pois(k; lambda) (1 - r^(z-k)) rearranged so that no term
// cancels. Terms are accumulated in log space.
double race_probability(double lambda, double r, std::uint64_t z) {
  if (z == 0) return 1.0;
  const double zz = static_cast<double>(z);
  if (lambda == 0.0) return std::pow(r, zz);
  const double tail = boost::math::gamma_p(zz + 1.0, lambda); // P(K > z)
  const double log_lambda = std::log(lambda);
  const double log_r = std::log(r);
  double sum = 0.0;
  for (std::uint64_t k = 0; k <= z; ++k) {
    const double kk = static_cast<double>(k);
    const double log_term = kk * log_lambda - lambda - std::lgamma(kk + 1.0) + (zz - kk) * log_r;
    sum += std::exp(log_term);
  }
  return std::clamp(tail + sum, 0.0, 1.0);
}

void check_fraction(double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("attacker fraction must lie in [0, 1]");
}

} // namespace

std::string_view to_string(BoundMode mode) {
  switch (mode) {
  case BoundMode::point:
    return "point";
  case BoundMode::worst:
    return "worst";
  case BoundMode::best:
    return "best";
  }
  return "point";
}

BoundMode bound_mode_from_string(std::string_view name) {
  if (name == "point") return BoundMode::point;
  if (name == "worst" || name == "worst-case") return BoundMode::worst;
  if (name == "best" || name == "best-case") return BoundMode::best;
  throw InvalidArgument("unknown bound mode '" + std::string(name) + "'");
}

std::string_view to_string(RiskEstimator estimator) {
  switch (estimator) {
  case RiskEstimator::automatic:
    return "auto";
  case RiskEstimator::mom:
    return "mom";
  case RiskEstimator::status_reports:
    return "status-reports";
  case RiskEstimator::combined:
    return "combined";
  }
  return "auto";
}

RiskEstimator risk_estimator_from_string(std::string_view name) {
  if (name == "auto") return RiskEstimator::automatic;
  if (name == "mom") return RiskEstimator::mom;
  if (name == "status-reports") return RiskEstimator::status_reports;
  if (name == "combined") return RiskEstimator::combined;
  throw InvalidArgument("unknown estimator '" + std::string(name) + "'");
}

void RiskParams::validate() const {
  if (!(q_star > 0.0 && q_star < 0.5)) throw InvalidArgument("q_star must lie in (0, 0.5)");
  if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidArgument("threshold must lie in (0, 1)");
  if (pre_window_blocks < 1) throw InvalidArgument("pre-window needs at least one block");
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");
  bootstrap.validate();
}

DoubleSpendQuery::DoubleSpendQuery(double q_, std::uint64_t z_) : q(q_), z(z_) {
  check_fraction(q);
  lambda = q < 1.0 ? static_cast<double>(z) * q / (1.0 - q) : std::numeric_limits<double>::infinity();
}

double nakamoto_double_spend(double q, std::uint64_t z) {
  const DoubleSpendQuery query(q, z);
  if (q >= 0.5) return 1.0;
  return race_probability(query.lambda, q / (1.0 - q), z);
}

double revised_double_spend(double q_i, std::uint64_t z, double q_star) {
  const DoubleSpendQuery query(q_i, z);
  if (!(q_star > 0.0 && q_star < 0.5)) throw InvalidArgument("q_star must lie in (0, 0.5)");
  if (q_i >= 0.5) return 1.0;
  return race_probability(query.lambda, q_star / (1.0 - q_star), z);
}

double attacker_fraction(double theta_0, double theta_i) {
  if (!(theta_0 > 0.0)) throw EstimationError("empty pre-window estimate");
  if (theta_i < 0.0) throw InvalidArgument("post-window estimate must be non-negative");
  return std::clamp(1.0 - theta_i / theta_0, 0.0, 1.0);
}

std::pair<double, double> bounded_attacker_fractions(const HashRateEstimate& pre, const HashRateEstimate& post) {
  if (!pre.bounded || !post.bounded) throw InvalidArgument("bounds required");
  if (!(pre.theta_high > 0.0) || !(pre.theta_low > 0.0)) throw EstimationError("empty pre-window estimate");
  const double worst = attacker_fraction(pre.theta_high, post.theta_low);
  const double best = attacker_fraction(pre.theta_low, post.theta_high);
  return {worst, best};
}

RiskContext::RiskContext(const ChainIndex& index, std::span<const StatusReport> reports) : index_(index) {
  for (const auto& r : reports) by_prior_[r.prior_block_id].push_back(&r);
}

std::vector<StatusReport> RiskContext::reports_on(std::size_t from_height, std::size_t to_height) const {
  std::vector<StatusReport> out;
  for (std::size_t h = from_height; h < to_height; ++h) {
    auto it = by_prior_.find(index_.main_at(h).id);
    if (it == by_prior_.end()) continue;
    for (const auto* r : it->second) out.push_back(*r);
  }
  return out;
}

HashRateEstimate RiskContext::estimate_span(std::size_t from_height, std::size_t to_height,
                                            const RiskParams& params) const {
  const TimeWindow window = index_.window_between(from_height, to_height);
  std::vector<BlockHeader> headers;
  for (const auto* h : index_.headers_in(window)) headers.push_back(*h);
  const auto reports = reports_on(from_height, to_height);

  RiskEstimator kind = params.estimator;
  if (kind == RiskEstimator::automatic) kind = reports.empty() ? RiskEstimator::mom : RiskEstimator::combined;

  switch (kind) {
  case RiskEstimator::status_reports:
    return estimate_by_miner(reports, params.sigma, params.epsilon).network;
  case RiskEstimator::combined:
    return combined_estimate(headers, reports, window, params.sigma, params.epsilon, params.solve, params.bootstrap);
  default: {
    const auto grid = build_interval_grid(headers, window, params.sigma);
    if (grid.observations.size() >= 2) return estimate_from_grid(grid, params.solve, params.bootstrap);
    // One block cannot be resampled; bound it by "no hashing" and the
    // largest feasible hash count.
    auto e = estimate_from_grid(grid, params.solve);
    e.set_bounds(0.0, std::max(e.theta_point, 1.0 / peak_beta(grid.target)));
    return e;
  }
  }
}

std::vector<RiskAssessment> RiskContext::assess(const Digest256& block_id, const RiskParams& params) const {
  params.validate();
  const auto h1 = index_.height_of(block_id);
  if (!h1) throw InvalidArgument("block " + block_id.to_hex() + " is not on the main chain");
  if (*h1 == 0) throw InvalidArgument("block has no parent");
  const std::size_t h0 = *h1 - 1;
  if (h0 < params.pre_window_blocks) {
    throw InvalidArgument("insufficient pre-window history: block " + block_id.to_hex() + " has " +
                          std::to_string(h0) + " ancestors before its parent, need " +
                          std::to_string(params.pre_window_blocks));
  }
  const auto pre = estimate_span(h0 - params.pre_window_blocks, h0, params);

  std::vector<RiskAssessment> rows;
  RiskAssessment zero;
  zero.block_id = block_id;
  zero.theta_0 = pre.theta_point;
  zero.theta_0_low = pre.theta_low;
  zero.theta_0_high = pre.theta_high;
  rows.push_back(zero);

  for (std::size_t i = 1; i <= params.max_depth && h0 + i < index_.main_length(); ++i) {
    const auto post = estimate_span(h0, h0 + i, params);
    RiskAssessment row = zero;
    row.depth = i;
    row.theta_i = post.theta_point;
    row.theta_i_low = post.theta_low;
    row.theta_i_high = post.theta_high;
    row.q_i = attacker_fraction(pre.theta_point, post.theta_point);
    std::tie(row.q_iL, row.q_iH) = bounded_attacker_fractions(pre, post);
    row.probability_point = revised_double_spend(row.q_i, i, params.q_star);
    row.probability_worst = revised_double_spend(row.q_iL, i, params.q_star);
    row.probability_best = revised_double_spend(row.q_iH, i, params.q_star);
    const double selected = params.mode == BoundMode::worst  ? row.probability_worst
                            : params.mode == BoundMode::best ? row.probability_best
                                                             : row.probability_point;
    row.release = selected <= params.threshold;
    rows.push_back(row);
  }
  return rows;
}

std::vector<RiskAssessment> assess_block(const ChainIndex& index, std::span<const StatusReport> reports,
                                         const Digest256& block_id, const RiskParams& params) {
  return RiskContext(index, reports).assess(block_id, params);
}

std::optional<std::uint64_t> DepthDistribution::quantile(double p) const {
  for (const auto& point : cdf) {
    if (point.fraction >= p - 1e-12) return point.depth;
  }
  return std::nullopt;
}

DepthDistribution depth_to_threshold(const ChainIndex& index, std::span<const StatusReport> reports,
                                     std::span<const Digest256> sampled_blocks, const RiskParams& params) {
  if (sampled_blocks.empty()) throw InvalidArgument("no blocks sampled");
  const RiskContext ctx(index, reports);
  DepthDistribution out;
  std::uint64_t deepest = 0;
  for (const auto& id : sampled_blocks) {
    const auto rows = ctx.assess(id, params);
    DepthSample s;
    s.block_id = id;
    auto hit = std::find_if(rows.begin(), rows.end(), [](const RiskAssessment& r) { return r.release; });
    if (hit != rows.end()) {
      s.depth = hit->depth;
    } else {
      s.depth = rows.back().depth;
      s.censored = true;
    }
    deepest = std::max(deepest, s.depth);
    out.samples.push_back(s);
  }
  const double total = static_cast<double>(out.samples.size());
  for (std::uint64_t d = 0; d <= deepest; ++d) {
    std::size_t released = 0;
    for (const auto& s : out.samples) released += (!s.censored && s.depth <= d) ? 1 : 0;
    out.cdf.push_back({d, static_cast<double>(released) / total});
  }
  return out;
}

std::vector<Digest256> sample_blocks(const ChainIndex& index, std::size_t count, const RiskParams& params,
                                     std::uint64_t seed) {
  const std::size_t first = params.pre_window_blocks + 1;
  if (index.main_length() <= first) throw InvalidArgument("chain too short for the pre-window");
  std::size_t last = index.main_length() - 1;
  if (last >= first + params.max_depth) last -= params.max_depth;
  std::vector<std::size_t> heights(last - first + 1);
  std::iota(heights.begin(), heights.end(), first);
  if (count < heights.size()) {
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (heights.size() - i));
      std::swap(heights[i], heights[j]);
    }
    heights.resize(count);
    std::sort(heights.begin(), heights.end());
  }
  std::vector<Digest256> out;
  for (auto h : heights) out.push_back(index.main_at(h).id);
  return out;
}

MonteCarloEstimate monte_carlo_double_spend(double q, std::uint64_t z, std::size_t trials, std::uint64_t seed,
                                            std::optional<double> q_star) {
  check_fraction(q);
  if (trials == 0) throw InvalidArgument("trials must be at least 1");
  MonteCarloEstimate out;
  out.trials = trials;
  if (q >= 0.5 || z == 0) {
    out.probability = 1.0;
    return out;
  }
  const double lambda = static_cast<double>(z) * q / (1.0 - q);
  const double residual = q_star ? *q_star : q;
  const double ratio = residual / (1.0 - residual);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t wins = 0;
  if (lambda == 0.0) {
    // No progress during the z honest blocks; only the catch-up remains.
    const double catch_up = std::pow(ratio, static_cast<double>(z));
    for (std::size_t i = 0; i < trials; ++i) wins += unit(rng) < catch_up ? 1 : 0;
  } else {
    std::poisson_distribution<std::uint64_t> attacker(lambda);
    for (std::size_t i = 0; i < trials; ++i) {
      const std::uint64_t k = attacker(rng);
      if (k > z) {
        ++wins;
        continue;
      }
      const double catch_up = std::pow(ratio, static_cast<double>(z - k));
      wins += unit(rng) < catch_up ? 1 : 0;
    }
  }
  const double n = static_cast<double>(trials);
  out.probability = static_cast<double>(wins) / n;
  out.standard_error = std::sqrt(out.probability * (1.0 - out.probability) / n);
  return out;
}

} // namespace hashrate
