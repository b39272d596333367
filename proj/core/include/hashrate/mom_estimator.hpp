#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hashrate/chain.hpp"

namespace hashrate {

/// plus: beta above the E[Y] peak, where E[Y] falls as beta grows (the
/// realistic regime, beta >> t). minus: beta below the peak.
enum class Branch { plus, minus };

struct MomSolveConfig {
  /// Stop once |E[Y] - y_bar| <= tau * y_bar.
  double tau = 1e-12;
  Branch branch = Branch::plus;
  int max_iterations = 200;
  /// Return the argmax peak_beta(t) instead of throwing when y_bar is above the
  /// E[Y] maximum. Off by default; the risk engine turns it on because short
  /// post-windows hit this regularly.
  bool clamp_infeasible = false;
};

/// poisson_count draws each resample's block count from Poisson(n), as a
/// fresh window of the same length would, then picks that many observed
/// blocks. fixed_count always picks exactly n.
enum class BootstrapScheme { poisson_count, fixed_count };

std::string_view to_string(BootstrapScheme scheme);
BootstrapScheme bootstrap_scheme_from_string(std::string_view name);

struct BootstrapConfig {
  std::size_t resamples = 10000;
  double low_percentile = 5.0;
  double high_percentile = 95.0;
  std::uint64_t seed = 0;
  BootstrapScheme scheme = BootstrapScheme::poisson_count;

  void validate() const;
};

using MinerFilter = std::function<bool(const std::string&)>;

/// Every header with start < ts <= end that passes the filter (ommers too)
/// becomes one observation in cell ceil((ts - start) / sigma) - 1. The grid
/// target is that of the latest in-window header, filtered or not.
IntervalGrid build_interval_grid(std::span<const BlockHeader> headers, const TimeWindow& window, double sigma,
                                 const MinerFilter& filter = {});

/// E[Y] = beta - beta e^{-t/beta} (t/beta + 1), evaluated without
/// cancellation when beta >> t. Normalized units.
double expected_y(double beta, double t);

/// Argmax of E[Y] over beta: t / x with e^x = 1 + x + x^2 (x ~ 1.79328).
/// Note beta = t is only the inflection point.
double peak_beta(double t);

/// Largest attainable E[Y] over beta, about 0.298426 t.
double max_expected_y(double t);

/// Inverts expected_y on the configured branch by bisection in log theta.
double solve_beta(double y_bar, double t, const MomSolveConfig& config = {});

struct BootstrapResult {
  double beta_low = 0.0;  // normalized; pairs with theta_high
  double beta_high = 0.0; // normalized; pairs with theta_low
  double theta_low = 0.0;
  double theta_high = 0.0;
  std::size_t infeasible = 0; // resamples whose y_bar exceeded the maximum
};

/// Percentile bootstrap. Resampled y_bar values are ranked, the low/high
/// percentiles are interpolated linearly and then inverted; the inversion is
/// monotone, so this equals ranking the inverted values.
BootstrapResult bootstrap_bounds(const IntervalGrid& grid, const MomSolveConfig& solve = {},
                                 const BootstrapConfig& boot = {});

/// Point estimate from a prebuilt grid, with bootstrap bounds when `boot` is set.
HashRateEstimate estimate_from_grid(const IntervalGrid& grid, const MomSolveConfig& solve = {},
                                    const std::optional<BootstrapConfig>& boot = std::nullopt);

HashRateEstimate estimate_network_rate(std::span<const BlockHeader> headers, const TimeWindow& window, double sigma,
                                       const MomSolveConfig& solve = {},
                                       const std::optional<BootstrapConfig>& boot = std::nullopt);

HashRateEstimate estimate_subset_rate(std::span<const BlockHeader> headers, const std::vector<std::string>& miners,
                                      const TimeWindow& window, double sigma, const MomSolveConfig& solve = {},
                                      const std::optional<BootstrapConfig>& boot = std::nullopt);

/// Status-report rates of the reporting miners plus a MoM estimate over the
/// blocks of everyone else. Reporting miners are those with at least one
/// report in `reports`; the caller selects which reports apply to the window.
/// A non-reporting remainder with no blocks in the window contributes zero.
/// With epsilon, reporting miners carry Chernoff bounds; with `boot`, the MoM
/// part carries bootstrap bounds; the combined bounds are their sums.
HashRateEstimate combined_estimate(std::span<const BlockHeader> headers, std::span<const StatusReport> reports,
                                   const TimeWindow& window, double sigma, std::optional<double> epsilon,
                                   const MomSolveConfig& solve = {},
                                   const std::optional<BootstrapConfig>& boot = std::nullopt);

/// 2^32 * D / block_interval_seconds.
double naive_difficulty_rate(double difficulty, double block_interval_seconds, ChainKind kind = ChainKind::bitcoin);

} // namespace hashrate
