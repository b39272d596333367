#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hashrate/chain.hpp"
#include "hashrate/chain_index.hpp"
#include "hashrate/mom_estimator.hpp"

namespace hashrate {

enum class BoundMode { point, worst, best };

std::string_view to_string(BoundMode mode);
BoundMode bound_mode_from_string(std::string_view name);

/// Which estimator feeds theta_0 and theta_i. automatic uses the combined
/// estimator when any reports fall into the window and MoM otherwise.
enum class RiskEstimator { automatic, mom, status_reports, combined };

std::string_view to_string(RiskEstimator estimator);
RiskEstimator risk_estimator_from_string(std::string_view name);

struct RiskParams {
  double q_star = 0.127;
  double threshold = 0.001;
  std::size_t pre_window_blocks = 100;
  double sigma = 1.0;
  BoundMode mode = BoundMode::point;
  RiskEstimator estimator = RiskEstimator::automatic;
  double epsilon = 0.05; // Chernoff level for report-based bounds
  BootstrapConfig bootstrap;
  MomSolveConfig solve{.clamp_infeasible = true};
  std::size_t max_depth = 40;

  void validate() const;
};

struct DoubleSpendQuery {
  double q = 0.0;
  std::uint64_t z = 0;
  double lambda = 0.0; // z q / (1 - q)

  DoubleSpendQuery(double q, std::uint64_t z);
};

/// Attacker success probability against z confirmations (Nakamoto's race).
double nakamoto_double_spend(double q, std::uint64_t z);

/// Race where the attacker held q_i during the observed z blocks and keeps a
/// residual q_star afterwards.
double revised_double_spend(double q_i, std::uint64_t z, double q_star);

/// max(0, 1 - theta_i / theta_0).
double attacker_fraction(double theta_0, double theta_i);

/// (q_iL, q_iH): q_iL pairs the high pre-window bound with the low
/// post-window bound (worst case); q_iH the reverse (best case).
std::pair<double, double> bounded_attacker_fractions(const HashRateEstimate& pre, const HashRateEstimate& post);

struct RiskAssessment {
  Digest256 block_id;
  std::uint64_t depth = 0;
  double theta_0 = 0.0;
  double theta_0_low = 0.0;
  double theta_0_high = 0.0;
  double theta_i = 0.0;
  double theta_i_low = 0.0;
  double theta_i_high = 0.0;
  double q_i = 0.0;
  double q_iL = 0.0; // worst case, >= q_i
  double q_iH = 0.0; // best case, <= q_i
  double probability_point = 1.0;
  double probability_worst = 1.0;
  double probability_best = 1.0;
  bool release = false;

  friend bool operator==(const RiskAssessment&, const RiskAssessment&) = default;
};

/// Chain plus reports indexed by the block they were mined on top of.
class RiskContext {
public:
  RiskContext(const ChainIndex& index, std::span<const StatusReport> reports);

  const ChainIndex& index() const { return index_; }

  /// Reports whose prior block is main-chain block from_height .. to_height - 1.
  std::vector<StatusReport> reports_on(std::size_t from_height, std::size_t to_height) const;

  /// Estimate over (ts(from_height), ts(to_height)] with the reports mined on
  /// top of blocks from_height .. to_height - 1. Always carries bounds.
  HashRateEstimate estimate_span(std::size_t from_height, std::size_t to_height, const RiskParams& params) const;

  /// Rows for depth 0 .. max_depth (or the chain tip) for block B1.
  std::vector<RiskAssessment> assess(const Digest256& block_id, const RiskParams& params) const;

private:
  const ChainIndex& index_;
  std::unordered_map<Digest256, std::vector<const StatusReport*>, Digest256Hasher> by_prior_;
};

std::vector<RiskAssessment> assess_block(const ChainIndex& index, std::span<const StatusReport> reports,
                                         const Digest256& block_id, const RiskParams& params);

struct DepthSample {
  Digest256 block_id;
  std::uint64_t depth = 0;
  bool censored = false; // never cleared; depth is the deepest row examined
};

struct CdfPoint {
  std::uint64_t depth = 0;
  double fraction = 0.0; // share of sampled blocks released at or before depth
};

struct DepthDistribution {
  std::vector<DepthSample> samples;
  std::vector<CdfPoint> cdf;

  /// Smallest depth d with fraction(d) >= p (p in (0, 1]); censored samples
  /// count as never released.
  std::optional<std::uint64_t> quantile(double p) const;
};

DepthDistribution depth_to_threshold(const ChainIndex& index, std::span<const StatusReport> reports,
                                     std::span<const Digest256> sampled_blocks, const RiskParams& params);

/// `count` distinct main-chain blocks with a full pre-window and, where the
/// chain allows, max_depth descendants. Sorted by height.
std::vector<Digest256> sample_blocks(const ChainIndex& index, std::size_t count, const RiskParams& params,
                                     std::uint64_t seed);

struct MonteCarloEstimate {
  double probability = 0.0;
  double standard_error = 0.0;
  std::size_t trials = 0;
};

/// Simulated race: attacker blocks while the honest chain makes z ~ Poisson(lambda),
/// then gambler's-ruin catch-up at ratio q/p (or the q_star ratio when set).
MonteCarloEstimate monte_carlo_double_spend(double q, std::uint64_t z, std::size_t trials, std::uint64_t seed,
                                            std::optional<double> q_star = std::nullopt);

} // namespace hashrate
