#include "hashrate/mom_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "hashrate/errors.hpp"
#include "hashrate/status_estimator.hpp"

namespace hashrate {

namespace {

double percentile(const std::vector<double>& sorted, double pct) {
  const double pos = pct / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

// Theta for a resampled mean: no blocks means no evidence of hashing, and a
// mean above the E[Y] maximum maps to the argmax.
double theta_for_resample(double y_bar, double t, const MomSolveConfig& solve) {
  if (y_bar <= 0.0) return 0.0;
  if (y_bar > max_expected_y(t)) return 1.0 / peak_beta(t);
  return 1.0 / solve_beta(y_bar, t, solve);
}

std::string bracket_text(double a, double b) {
  std::ostringstream os;
  os.precision(17);
  os << "[" << a << ", " << b << "]";
  return os.str();
}

} // namespace

std::string_view to_string(BootstrapScheme scheme) {
  return scheme == BootstrapScheme::poisson_count ? "poisson-count" : "fixed-count";
}

BootstrapScheme bootstrap_scheme_from_string(std::string_view name) {
  if (name == "poisson-count") return BootstrapScheme::poisson_count;
  if (name == "fixed-count") return BootstrapScheme::fixed_count;
  throw InvalidArgument("unknown bootstrap scheme '" + std::string(name) + "'");
}

void BootstrapConfig::validate() const {
  if (resamples == 0) throw InvalidArgument("bootstrap needs at least one resample");
  if (!(low_percentile > 0.0 && low_percentile < high_percentile && high_percentile < 100.0)) {
    throw InvalidArgument("percentiles must satisfy 0 < low < high < 100");
  }
}

IntervalGrid build_interval_grid(std::span<const BlockHeader> headers, const TimeWindow& window, double sigma,
                                 const MinerFilter& filter) {
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  if (!(window.end > window.start)) throw InvalidArgument("window must have positive length");
  IntervalGrid grid;
  grid.window = window;
  grid.sigma = sigma;
  grid.interval_count = static_cast<std::uint64_t>(std::ceil(window.length() / sigma));

  std::int64_t latest_ts = 0;
  bool any = false;
  for (const auto& h : headers) {
    const auto ts = static_cast<double>(h.timestamp);
    if (!window.contains(ts)) continue;
    if (!any || h.timestamp >= latest_ts) {
      latest_ts = h.timestamp;
      grid.target = h.target.unit();
      any = true;
    }
    if (filter && !filter(h.miner)) continue;
    auto idx = static_cast<std::uint64_t>(std::ceil((ts - window.start) / sigma));
    idx = idx == 0 ? 0 : idx - 1;
    if (idx >= grid.interval_count) idx = grid.interval_count - 1;
    grid.observations.push_back({idx, h.pow_hash.unit()});
  }
  std::stable_sort(grid.observations.begin(), grid.observations.end(),
                   [](const GridObservation& a, const GridObservation& b) { return a.interval_index < b.interval_index; });
  return grid;
}

double expected_y(double beta, double t) {
  if (!(beta > 0.0)) return 0.0;
  const double x = t / beta;
  if (x <= 1.0) {
    // beta * e^{-x} * sum_{k>=2} x^k / k!, free of the 1 - (1 + x) e^{-x}
    // cancellation.
    double term = 0.5 * x * x;
    double sum = term;
    for (int k = 3; k < 60; ++k) {
      term *= x / k;
      sum += term;
      if (term < sum * 1e-18) break;
    }
    return beta * std::exp(-x) * sum;
  }
  return beta * (1.0 - std::exp(-x) * (1.0 + x));
}

double peak_beta(double t) {
  // Positive root of e^x = 1 + x + x^2, where d E[Y] / d beta vanishes.
  constexpr double x_peak = 1.7932821329007610;
  return t / x_peak;
}

double max_expected_y(double t) { return expected_y(peak_beta(t), t); }

double solve_beta(double y_bar, double t, const MomSolveConfig& config) {
  if (!(t > 0.0)) throw InvalidArgument("target must be positive");
  if (!(config.tau > 0.0)) throw InvalidArgument("tau must be positive");
  if (std::isnan(y_bar) || y_bar < 0.0) throw InvalidArgument("sample mean must be non-negative");
  if (y_bar == 0.0) throw EstimationError("no blocks observed");
  const double y_max = max_expected_y(t);
  if (y_bar >= y_max) {
    if (config.clamp_infeasible || y_bar <= y_max * (1.0 + 1e-12)) return peak_beta(t);
    throw EstimationError("no solution: sample mean exceeds maximum of E[Y]");
  }

  // Work in theta = 1/beta. E[Y] rises with theta up to the peak (plus
  // branch) and falls beyond it (minus branch). Geometric bisection keeps the
  // step count independent of the scale of theta.
  const double f_scale = y_bar;
  auto f = [&](double theta) { return expected_y(1.0 / theta, t); };
  const double theta_peak = 1.0 / peak_beta(t);
  const bool plus = config.branch == Branch::plus;

  double below = theta_peak; // f(below) < y_bar
  double above = theta_peak; // f(above) >= y_bar
  int iterations = 0;
  for (;;) {
    below = plus ? below / 16.0 : below * 16.0;
    if (f(below) < y_bar) break;
    above = below;
    if (++iterations > config.max_iterations || below == 0.0 || std::isinf(below)) {
      throw EstimationError("could not bracket the moment equation");
    }
  }

  for (;;) {
    const double mid = std::sqrt(below) * std::sqrt(above);
    const double fm = f(mid);
    if (std::abs(fm - y_bar) <= config.tau * f_scale) return 1.0 / mid;
    if (mid == below || mid == above) return 1.0 / mid; // bracket at double resolution
    if (fm < y_bar) {
      below = mid;
    } else {
      above = mid;
    }
    if (++iterations > config.max_iterations) {
      throw EstimationError("moment equation did not converge within " + std::to_string(config.max_iterations) +
                            " iterations; beta bracket " + bracket_text(1.0 / std::max(below, above),
                                                                         1.0 / std::min(below, above)));
    }
  }
}

BootstrapResult bootstrap_bounds(const IntervalGrid& grid, const MomSolveConfig& solve, const BootstrapConfig& boot) {
  boot.validate();
  if (grid.observations.size() < 2) throw EstimationError("bootstrap needs at least 2 observations");
  if (!(grid.target > 0.0)) throw InvalidArgument("grid has no target");

  const double cells = static_cast<double>(grid.interval_count);
  std::vector<double> values;
  for (const auto& obs : grid.observations) values.push_back(obs.value);

  std::mt19937_64 rng(boot.seed);
  const std::uint64_t pool = values.size();
  std::vector<double> means(boot.resamples);
  std::poisson_distribution<std::uint64_t> count(static_cast<double>(pool));
  for (std::size_t r = 0; r < boot.resamples; ++r) {
    const std::uint64_t picks = boot.scheme == BootstrapScheme::poisson_count ? count(rng) : pool;
    double sum = 0.0;
    for (std::uint64_t k = 0; k < picks; ++k) sum += values[rng() % pool];
    means[r] = sum / cells;
  }
  std::sort(means.begin(), means.end());

  BootstrapResult out;
  const double y_max = max_expected_y(grid.target);
  out.infeasible = static_cast<std::size_t>(means.end() - std::upper_bound(means.begin(), means.end(), y_max));
  const double a = theta_for_resample(percentile(means, boot.low_percentile), grid.target, solve);
  const double b = theta_for_resample(percentile(means, boot.high_percentile), grid.target, solve);
  out.theta_low = std::min(a, b);
  out.theta_high = std::max(a, b);
  out.beta_low = 1.0 / out.theta_high;
  out.beta_high = out.theta_low > 0.0 ? 1.0 / out.theta_low : std::numeric_limits<double>::infinity();
  return out;
}

HashRateEstimate estimate_from_grid(const IntervalGrid& grid, const MomSolveConfig& solve,
                                    const std::optional<BootstrapConfig>& boot) {
  if (grid.observations.empty()) throw EstimationError("no blocks observed");
  const double beta = solve_beta(grid.y_bar(), grid.target, solve);
  auto e = HashRateEstimate::from_theta(1.0 / beta, grid.sigma, EstimateMethod::mom, grid.observations.size());
  if (boot) {
    const auto b = bootstrap_bounds(grid, solve, *boot);
    e.set_bounds(std::min(b.theta_low, e.theta_point), std::max(b.theta_high, e.theta_point));
    e.infeasible_resamples = b.infeasible;
  }
  return e;
}

HashRateEstimate estimate_network_rate(std::span<const BlockHeader> headers, const TimeWindow& window, double sigma,
                                       const MomSolveConfig& solve, const std::optional<BootstrapConfig>& boot) {
  auto e = estimate_from_grid(build_interval_grid(headers, window, sigma), solve, boot);
  e.label = "network";
  return e;
}

HashRateEstimate estimate_subset_rate(std::span<const BlockHeader> headers, const std::vector<std::string>& miners,
                                      const TimeWindow& window, double sigma, const MomSolveConfig& solve,
                                      const std::optional<BootstrapConfig>& boot) {
  const std::set<std::string> wanted(miners.begin(), miners.end());
  const auto grid =
      build_interval_grid(headers, window, sigma, [&](const std::string& m) { return wanted.count(m) > 0; });
  auto e = estimate_from_grid(grid, solve, boot);
  std::string label;
  for (const auto& m : wanted) label += (label.empty() ? "" : ",") + m;
  e.label = label;
  return e;
}

HashRateEstimate combined_estimate(std::span<const BlockHeader> headers, std::span<const StatusReport> reports,
                                   const TimeWindow& window, double sigma, std::optional<double> epsilon,
                                   const MomSolveConfig& solve, const std::optional<BootstrapConfig>& boot) {
  std::set<std::string> reporting;
  for (const auto& r : reports) reporting.insert(r.miner);

  double theta = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 0;
  std::size_t infeasible = 0;
  if (!reporting.empty()) {
    const auto part = estimate_by_miner(reports, sigma, epsilon);
    theta += part.network.theta_point;
    lo += part.network.theta_low;
    hi += part.network.theta_high;
    n += part.network.sample_size;
  }

  const auto grid = build_interval_grid(headers, window, sigma,
                                        [&](const std::string& m) { return reporting.count(m) == 0; });
  if (!grid.observations.empty()) {
    const bool can_bootstrap = boot && grid.observations.size() >= 2;
    const auto part = estimate_from_grid(grid, solve, can_bootstrap ? boot : std::nullopt);
    theta += part.theta_point;
    // A single non-reporting block gives no bootstrap spread; its bounds run
    // from nothing to the largest feasible count.
    const bool degenerate = boot && !can_bootstrap;
    lo += degenerate ? 0.0 : part.theta_low;
    hi += degenerate ? 1.0 / peak_beta(grid.target) : part.theta_high;
    n += part.sample_size;
    infeasible = part.infeasible_resamples;
  } else if (reporting.empty()) {
    throw EstimationError("no blocks observed");
  }

  auto e = HashRateEstimate::from_theta(theta, sigma, EstimateMethod::combined, n);
  e.label = "network";
  if (epsilon || boot) e.set_bounds(lo, hi);
  e.infeasible_resamples = infeasible;
  return e;
}

double naive_difficulty_rate(double difficulty, double block_interval_seconds, ChainKind) {
  if (!(difficulty > 0.0)) throw InvalidArgument("difficulty must be positive");
  if (!(block_interval_seconds > 0.0)) throw InvalidArgument("block interval must be positive");
  return std::ldexp(difficulty, 32) / block_interval_seconds;
}

} // namespace hashrate
