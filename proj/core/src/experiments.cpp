#include "hashrate/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include "hashrate/errors.hpp"
#include "hashrate/simulator.hpp"
#include "hashrate/status_estimator.hpp"

namespace hashrate::experiments {

namespace {

std::vector<MinerSpec> equal_miners(std::size_t count, double network_rate, double reports_per_block) {
  std::vector<MinerSpec> miners;
  for (std::size_t i = 0; i < count; ++i) {
    miners.push_back({"m" + std::to_string(i), network_rate / static_cast<double>(count), reports_per_block});
  }
  return miners;
}

std::vector<BlockHeader> copy_headers(const ChainIndex& index, const TimeWindow& window, bool keep_ommers = true) {
  std::vector<BlockHeader> out;
  for (const auto* h : index.headers_in(window)) {
    if (keep_ommers || !h->is_ommer) out.push_back(*h);
  }
  return out;
}

// Theta from a grid, mapping an infeasible mean to the argmax of E[Y].
double grid_theta(const IntervalGrid& grid, bool& infeasible) {
  infeasible = grid.y_bar() > max_expected_y(grid.target);
  if (infeasible) return 1.0 / peak_beta(grid.target);
  return 1.0 / solve_beta(grid.y_bar(), grid.target);
}

} // namespace

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw InvalidArgument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= values.size()) return values.back();
  return values[i] + (pos - static_cast<double>(i)) * (values[i + 1] - values[i]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

double interdecile_range(const std::vector<double>& values) { return quantile(values, 0.9) - quantile(values, 0.1); }

double mean(const std::vector<double>& values) {
  if (values.empty()) throw InvalidArgument("mean of an empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double ci95_half_width(const std::vector<double>& values) {
  if (values.size() < 2) return std::numeric_limits<double>::infinity();
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  const double n = static_cast<double>(values.size());
  return 1.96 * std::sqrt(ss / (n - 1.0) / n);
}

std::vector<RatioSeries> status_report_accuracy(const StatusAccuracyConfig& config) {
  std::mt19937_64 rng(config.seed);
  const double theta = config.hash_rate * config.sigma;
  std::vector<RatioSeries> out;
  std::vector<StatusReport> reports;
  for (const std::size_t n : config.report_counts) {
    RatioSeries series;
    series.parameter = static_cast<double>(n);
    series.ratios.reserve(config.trials);
    reports.assign(n, StatusReport{});
    for (auto& r : reports) {
      r.miner = "m";
      r.interval_seconds = config.sigma;
    }
    for (std::size_t trial = 0; trial < config.trials; ++trial) {
      for (auto& r : reports) r.min_hash = HashValue::from_unit(sample_min_hash_unit(theta, 0.0, rng));
      const auto e = estimate_miner_rate(reports, config.sigma);
      series.ratios.push_back(e.rate_point / config.hash_rate);
    }
    out.push_back(std::move(series));
  }
  return out;
}

std::vector<ChernoffCell> chernoff_validity(const ChernoffValidityConfig& config) {
  std::mt19937_64 rng(config.seed);
  // The survival mean is S / theta; the exact mean of a uniform minimum,
  // 1 / (theta + 1), differs by 1e-6 relative at the default theta.
  const double beta = 1.0 / config.theta;
  std::vector<ChernoffCell> out;
  for (const std::size_t n : config.report_counts) {
    std::vector<std::size_t> upper(config.pis.size(), 0);
    std::vector<std::size_t> lower(config.pis.size(), 0);
    for (std::size_t trial = 0; trial < config.trials; ++trial) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += sample_min_hash_unit(config.theta, 0.0, rng);
      const double beta_hat = sum / static_cast<double>(n);
      const double up = (beta - beta_hat) / beta_hat;
      const double down = (beta_hat - beta) / beta;
      for (std::size_t k = 0; k < config.pis.size(); ++k) {
        upper[k] += up >= config.pis[k] ? 1 : 0;
        lower[k] += down >= config.pis[k] ? 1 : 0;
      }
    }
    for (std::size_t k = 0; k < config.pis.size(); ++k) {
      const double trials = static_cast<double>(config.trials);
      out.push_back({n, config.pis[k], chernoff_upper_tail(n, config.pis[k]), static_cast<double>(upper[k]) / trials,
                     chernoff_lower_tail(n, config.pis[k]), static_cast<double>(lower[k]) / trials});
    }
  }
  return out;
}

std::vector<RatioSeries> mom_window_accuracy(const MomWindowConfig& config) {
  if (config.window_seconds.empty()) throw InvalidArgument("no window lengths given");
  const double longest = *std::max_element(config.window_seconds.begin(), config.window_seconds.end());
  const double duration = static_cast<double>(config.windows) * longest + longest;
  const auto trace = simulate(make_sim_config(equal_miners(config.miners, config.network_rate, 0.0),
                                              config.block_interval, duration, config.seed));
  const ChainIndex index(trace.headers);

  std::vector<RatioSeries> out;
  for (const double length : config.window_seconds) {
    RatioSeries series;
    series.parameter = length;
    for (std::size_t k = 0; series.ratios.size() < config.windows; ++k) {
      const TimeWindow window{static_cast<double>(k) * length, static_cast<double>(k + 1) * length};
      if (window.end > duration) break;
      const auto headers = copy_headers(index, window);
      if (headers.empty()) continue;
      const auto grid = build_interval_grid(headers, window, config.sigma);
      bool infeasible = false;
      const double theta = grid_theta(grid, infeasible);
      series.infeasible += infeasible ? 1 : 0;
      series.ratios.push_back(theta / config.sigma / trace.ground_truth.mean_network_rate(window));
    }
    out.push_back(std::move(series));
  }
  return out;
}

std::vector<DeploymentPoint> incremental_deployment(const DeploymentConfig& config) {
  std::vector<DeploymentPoint> out(config.miners + 1);
  for (std::size_t r = 0; r <= config.miners; ++r) out[r].reporters = r;

  const double reports_per_block = config.block_interval / config.report_sigma;
  const double duration = 1.25 * static_cast<double>(config.windows_per_trace * config.window_blocks + 2) *
                          config.block_interval;
  for (std::size_t t = 0; t < config.traces; ++t) {
    auto cfg = make_sim_config(equal_miners(config.miners, config.network_rate, reports_per_block),
                               config.block_interval, duration, config.seed * 1000003ULL + t);
    cfg.report_sigma = config.report_sigma;
    const auto trace = simulate(cfg);
    const ChainIndex index(trace.headers);
    std::unordered_map<Digest256, std::vector<const StatusReport*>, Digest256Hasher> by_prior;
    for (const auto& r : trace.reports) by_prior[r.prior_block_id].push_back(&r);

    for (std::size_t w = 0; w < config.windows_per_trace; ++w) {
      const std::size_t from = w * config.window_blocks;
      const std::size_t to = from + config.window_blocks;
      if (to >= index.main_length()) break;
      const TimeWindow window = index.window_between(from, to);
      const auto headers = copy_headers(index, window);
      const double truth = trace.ground_truth.mean_network_rate(window);

      std::vector<double> errors;
      try {
        for (std::size_t r = 0; r <= config.miners; ++r) {
          std::set<std::string> reporting;
          for (std::size_t i = 0; i < r; ++i) reporting.insert("m" + std::to_string(i));
          std::vector<StatusReport> reports;
          for (std::size_t h = from; h < to; ++h) {
            auto it = by_prior.find(index.main_at(h).id);
            if (it == by_prior.end()) continue;
            for (const auto* rep : it->second) {
              if (reporting.count(rep->miner)) reports.push_back(*rep);
            }
          }
          const auto e = combined_estimate(headers, reports, window, config.sigma, std::nullopt);
          errors.push_back(std::abs(e.rate_point / truth - 1.0));
        }
      } catch (const EstimationError&) {
        continue; // infeasible moment equation; drop the window for every reporter count
      }
      for (std::size_t r = 0; r <= config.miners; ++r) out[r].errors.push_back(errors[r]);
    }
  }
  return out;
}

CoverageResult bootstrap_coverage(const CoverageConfig& config) {
  const double duration = static_cast<double>(config.windows + 1) * config.window_seconds;
  const auto trace = simulate(make_sim_config(equal_miners(config.miners, config.network_rate, 0.0),
                                              config.block_interval, duration, config.seed));
  const ChainIndex index(trace.headers);
  CoverageResult out;
  for (std::size_t k = 0; k < config.windows; ++k) {
    const TimeWindow window{static_cast<double>(k) * config.window_seconds,
                            static_cast<double>(k + 1) * config.window_seconds};
    const auto grid = build_interval_grid(copy_headers(index, window), window, config.sigma);
    if (grid.observations.size() < 2) continue;
    auto boot = config.bootstrap;
    boot.seed = config.bootstrap.seed + k;
    const auto e = estimate_from_grid(grid, {}, boot);
    const double truth = trace.ground_truth.mean_network_rate(window) * config.sigma;
    ++out.windows;
    if (truth < e.theta_low) {
      ++out.true_below;
    } else if (truth > e.theta_high) {
      ++out.true_above;
    } else {
      ++out.covered;
    }
    out.infeasible_resamples += e.infeasible_resamples;
    out.relative_widths.push_back((e.theta_high - e.theta_low) / e.theta_point);
  }
  return out;
}

DepthDistribution depth_experiment(const DepthExperimentConfig& config) {
  const double duration = static_cast<double>(config.chain_blocks) * config.block_interval;
  const auto trace = simulate(make_sim_config(equal_miners(config.miners, config.network_rate, config.reports_per_block),
                                              config.block_interval, duration, config.seed));
  const ChainIndex index(trace.headers);
  const auto blocks = sample_blocks(index, config.samples, config.params, config.seed + 1);
  return depth_to_threshold(index, trace.reports, blocks, config.params);
}

std::vector<FixtureWindow> fixture_windows(const ChainIndex& index, const FixtureWindowConfig& config) {
  if (config.window_blocks == 0) throw InvalidArgument("window must span at least one block");
  std::vector<FixtureWindow> out;
  for (std::size_t end = config.window_blocks; end < index.main_length(); end += config.window_blocks) {
    const TimeWindow window = index.window_between(end - config.window_blocks, end);
    const auto headers = copy_headers(index, window);
    const auto grid = build_interval_grid(headers, window, config.sigma);
    if (grid.observations.empty()) continue;
    FixtureWindow w;
    w.end_height = end;
    bool infeasible = false;
    w.mom_rate = grid_theta(grid, infeasible) / config.sigma;
    w.naive_rate = naive_difficulty_rate(index.main_at(end).target.difficulty(), config.block_interval);
    w.observations = grid.observations.size();
    w.ommers = static_cast<std::size_t>(
        std::count_if(headers.begin(), headers.end(), [](const BlockHeader& h) { return h.is_ommer; }));
    if (config.bootstrap && grid.observations.size() >= 2) {
      auto boot = *config.bootstrap;
      boot.seed += end;
      const auto with = estimate_from_grid(grid, {}, boot);
      w.width_with_ommers = (with.theta_high - with.theta_low) / with.theta_point;
      const auto stripped = build_interval_grid(copy_headers(index, window, false), window, config.sigma);
      if (stripped.observations.size() >= 2) {
        const auto without = estimate_from_grid(stripped, {}, boot);
        w.width_without_ommers = (without.theta_high - without.theta_low) / without.theta_point;
      }
    }
    out.push_back(w);
  }
  return out;
}

} // namespace hashrate::experiments
