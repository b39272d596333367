#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hashrate/chain.hpp"

namespace hashrate {

struct MinerSpec {
  std::string label;
  double hash_rate = 0.0;         // hashes per second
  double reports_per_block = 0.0; // 0 = does not report
};

/// A miner that mines honestly until fork_time and then withholds
/// divert_fraction of its power for a private fork.
struct AttackerSpec {
  std::string label;
  double total_rate = 0.0;
  double divert_fraction = 0.0;
  double fork_time = 0.0;
  double reports_per_block = 0.0;
};

struct SimConfig {
  std::vector<MinerSpec> miners;
  Target target = Target::from_hash(HashValue::max());
  double block_interval_seconds = 600.0;
  /// Reporting period for every reporting miner; 0 derives it per miner as
  /// block_interval_seconds / reports_per_block.
  double report_sigma = 0.0;
  double duration_seconds = 0.0;
  std::uint64_t seed = 0;
  std::optional<AttackerSpec> attacker;
  ChainKind kind = ChainKind::bitcoin;
  /// A block found less than this many seconds after the current tip arrived
  /// is recorded as an ommer of the tip's parent.
  double propagation_window_seconds = 1.0;

  /// Throws InvalidArgument naming the first broken invariant.
  void validate() const;

  /// Sum of honest rates plus the attacker's full rate.
  double total_rate() const;
};

/// Config whose target yields `block_interval_seconds` for the summed miner rates.
SimConfig make_sim_config(std::vector<MinerSpec> miners, double block_interval_seconds,
                          double duration_seconds, std::uint64_t seed,
                          ChainKind kind = ChainKind::bitcoin);

struct MinerRate {
  std::string label;
  double rate = 0.0;
};

/// Rates in force over [start, end). network_rate counts only power that
/// reaches the public chain.
struct RateSegment {
  double start = 0.0;
  double end = 0.0;
  std::vector<MinerRate> miners;
  double network_rate = 0.0;
};

struct GroundTruth {
  std::vector<RateSegment> segments;

  double network_rate_at(double time) const;
  double miner_rate_at(const std::string& label, double time) const;
  /// Time-averaged public rate over the window.
  double mean_network_rate(const TimeWindow& window) const;
  /// Time-averaged rate of one miner over the window.
  double mean_miner_rate(const std::string& label, const TimeWindow& window) const;
};

struct SyntheticTrace {
  SimConfig config;
  std::vector<BlockHeader> headers; // genesis first, then in arrival order
  std::vector<StatusReport> reports;
  GroundTruth ground_truth;
};

SyntheticTrace simulate(const SimConfig& config);

/// Re-runs the trace's configuration with `attacker` added. The target is
/// rescaled so that the pre-fork block interval is unchanged. Up to the fork
/// time the random stream is shared with the divert_fraction = 0 run.
SyntheticTrace inject_attacker(const SyntheticTrace& trace, const AttackerSpec& attacker);

/// Minimum of theta uniform draws on [floor, 1] (normalized hash units) by
/// inverse transform. With floor = 0 this is the unconditioned first order
/// statistic.
double sample_min_hash_unit(double theta, double floor_unit, std::mt19937_64& rng);

/// Running nonce chain of one miner since its last prior block.
struct ReportChainState {
  Digest256 prior_block_id;
  Digest256 last_chained;   // starts at prior_block_id
  std::uint64_t next_index = 0;

  explicit ReportChainState(const Digest256& prior) : prior_block_id(prior), last_chained(prior) {}
};

/// One status report for an interval of `interval_seconds` in which the miner
/// performed round(hash_rate * interval_seconds) hashes, all above floor_unit.
/// Advances `state`. Throws when that count is below one.
StatusReport emit_report(const MinerSpec& miner, double interval_seconds, ReportChainState& state,
                         double floor_unit, std::mt19937_64& rng);

} // namespace hashrate
