#pragma once

// Reproduction harnesses. Each runner is deterministic in its seed and
// returns raw per-trial data; summary statistics are left to the caller.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hashrate/chain_index.hpp"
#include "hashrate/mom_estimator.hpp"
#include "hashrate/risk.hpp"

namespace hashrate::experiments {

/// Linear-interpolation quantile, p in [0, 1]. Sorts a copy.
double quantile(std::vector<double> values, double p);
double median(std::vector<double> values);
/// P90 - P10.
double interdecile_range(const std::vector<double>& values);
double mean(const std::vector<double>& values);
/// Half-width of the normal 95% interval for the mean.
double ci95_half_width(const std::vector<double>& values);

/// Estimated / true rate for one setting (report count or window length).
struct RatioSeries {
  double parameter = 0.0;
  std::vector<double> ratios;
  std::size_t infeasible = 0; // windows whose mean exceeded the E[Y] maximum
};

// Status-report estimator over independent trials of n reports each.
struct StatusAccuracyConfig {
  std::vector<std::size_t> report_counts{40, 240, 480, 720};
  std::size_t trials = 10000;
  double hash_rate = 1e4;
  double sigma = 10.0;
  std::uint64_t seed = 1;
};

std::vector<RatioSeries> status_report_accuracy(const StatusAccuracyConfig& config);

// Empirical tail frequencies of beta-hat against the Chernoff bounds.
struct ChernoffValidityConfig {
  std::vector<std::size_t> report_counts{40, 240, 720};
  std::vector<double> pis{0.05, 0.1, 0.2, 0.5};
  std::size_t trials = 100000;
  double theta = 1e6;
  std::uint64_t seed = 2;
};

struct ChernoffCell {
  std::size_t n = 0;
  double pi = 0.0;
  double upper_bound = 0.0;
  double upper_frequency = 0.0;
  double lower_bound = 0.0;
  double lower_frequency = 0.0;
};

std::vector<ChernoffCell> chernoff_validity(const ChernoffValidityConfig& config);

// MoM network estimate over disjoint windows of several lengths on one
// synthetic chain. Windows without any block are skipped.
struct MomWindowConfig {
  std::vector<double> window_seconds{100, 500, 1000, 5000};
  std::size_t windows = 600; // per length
  std::size_t miners = 10;
  double network_rate = 1e12;
  double block_interval = 600.0;
  double sigma = 1.0;
  std::uint64_t seed = 3;
};

std::vector<RatioSeries> mom_window_accuracy(const MomWindowConfig& config);

// Mean relative error of the combined estimator as more miners report.
struct DeploymentConfig {
  std::size_t miners = 10;
  double network_rate = 1e12;
  double block_interval = 600.0;
  std::size_t window_blocks = 8;
  double report_sigma = 15.0;
  std::size_t traces = 500;
  std::size_t windows_per_trace = 6;
  double sigma = 1.0;
  std::uint64_t seed = 5;
};

struct DeploymentPoint {
  std::size_t reporters = 0;
  std::vector<double> errors; // |rate / true - 1| per window
};

/// Every trace is shared by all reporter counts (common random numbers); the
/// first k miners are the reporting ones.
std::vector<DeploymentPoint> incremental_deployment(const DeploymentConfig& config);

// Bootstrap percentile interval coverage over disjoint time windows.
struct CoverageConfig {
  std::size_t windows = 1000;
  double window_seconds = 30000.0; // 50 blocks expected
  std::size_t miners = 10;
  double network_rate = 1e12;
  double block_interval = 600.0;
  double sigma = 1.0;
  BootstrapConfig bootstrap;
  std::uint64_t seed = 7;
};

struct CoverageResult {
  std::size_t windows = 0;
  std::size_t covered = 0;
  std::size_t true_below = 0; // truth under theta_L
  std::size_t true_above = 0; // truth over theta_H
  std::size_t infeasible_resamples = 0;
  std::vector<double> relative_widths;

  double coverage() const { return windows ? static_cast<double>(covered) / static_cast<double>(windows) : 0.0; }
};

CoverageResult bootstrap_coverage(const CoverageConfig& config);

// Release-depth distribution on an honest synthetic chain with reports.
struct DepthExperimentConfig {
  std::size_t miners = 10;
  double network_rate = 1e12;
  double block_interval = 600.0;
  double reports_per_block = 10.0;
  std::size_t chain_blocks = 1200;
  std::size_t samples = 300;
  RiskParams params;
  std::uint64_t seed = 11;
};

DepthDistribution depth_experiment(const DepthExperimentConfig& config);

// MoM against the naive difficulty estimate on consecutive block windows of
// a recorded chain, plus bootstrap widths with and without ommers.
struct FixtureWindowConfig {
  std::size_t window_blocks = 50;
  double block_interval = 600.0;
  double sigma = 1.0;
  std::optional<BootstrapConfig> bootstrap; // widths are computed only when set
};

struct FixtureWindow {
  std::size_t end_height = 0;
  double mom_rate = 0.0;
  double naive_rate = 0.0;
  std::size_t observations = 0;
  std::size_t ommers = 0;
  double width_with_ommers = 0.0;    // (theta_H - theta_L) / theta_point
  double width_without_ommers = 0.0;
};

std::vector<FixtureWindow> fixture_windows(const ChainIndex& index, const FixtureWindowConfig& config);

} // namespace hashrate::experiments
