#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hashrate/digest.hpp"
#include "hashrate/hash_value.hpp"

namespace hashrate {

enum class ChainKind { bitcoin, ethereum };

std::string_view to_string(ChainKind kind);
ChainKind chain_kind_from_string(std::string_view name);

/// Per-chain defaults. Both kinds quote difficulty as 2^224 / t.
struct ChainParams {
  ChainKind kind = ChainKind::bitcoin;
  double block_interval_seconds = 600.0;
  double propagation_window_seconds = 1.0;
  int difficulty_exponent = 224;
};

ChainParams chain_params(ChainKind kind);

/// Block target t > 0 together with its difficulty D = 2^224 / t.
class Target {
public:
  /// Throws InvalidArgument when t == 0.
  static Target from_hash(const HashValue& t);

  /// t = floor(2^224 / D). Throws when D <= 0 or when t would round to 0.
  static Target from_difficulty(double difficulty);

  const HashValue& value() const { return t_; }
  double difficulty() const { return difficulty_; }
  /// t / S.
  double unit() const { return unit_; }

  friend bool operator==(const Target& a, const Target& b) { return a.t_ == b.t_; }

private:
  Target(const HashValue& t, double difficulty);

  HashValue t_;
  double difficulty_ = 0.0;
  double unit_ = 0.0;
};

Target target_from_difficulty(double difficulty, ChainKind kind = ChainKind::bitcoin);

/// 2^224 / t, correctly rounded to double.
double difficulty_from_target(const HashValue& t);

/// Target for which a network hashing at `hashes_per_second` finds a block
/// every `block_interval_seconds` on average: t = S / (rate * interval).
Target target_for_rate(double hashes_per_second, double block_interval_seconds);

struct BlockHeader {
  Digest256 id;
  Digest256 parent_id;
  std::int64_t timestamp = 0;
  HashValue pow_hash;
  Target target = Target::from_hash(HashValue::max());
  std::string miner;
  bool is_ommer = false;
};

struct ValidationResult {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Context-free checks: pow <= target, positive target, non-empty miner,
/// id distinct from parent. Never throws.
ValidationResult validate_header(const BlockHeader& header);

/// One miner's minimum-hash announcement for one reporting interval.
/// interval_seconds is the mining time the interval actually covered; the
/// last interval before a tip change can be shorter than the nominal period.
struct StatusReport {
  std::string miner;
  std::uint64_t interval_index = 0;
  double interval_seconds = 0.0;
  HashValue min_hash;
  Digest256 report_nonce;
  Digest256 chained_nonce;
  Digest256 prior_block_id;

  friend bool operator==(const StatusReport&, const StatusReport&) = default;
};

/// n'_i = SHA256(n'_{i-1} || n_i); the chain starts from the prior block id.
Digest256 chain_nonce(const Digest256& previous_chained, const Digest256& report_nonce);

/// Half-open on the left: a timestamp ts belongs to the window when
/// start < ts <= end.
struct TimeWindow {
  double start = 0.0;
  double end = 0.0;

  bool contains(double ts) const { return ts > start && ts <= end; }
  double length() const { return end - start; }
};

struct GridObservation {
  std::uint64_t interval_index = 0;
  double value = 0.0; // normalized hash, pow / S
};

/// Time segmented into sigma-second intervals with the observed block hashes
/// placed into the interval they were mined in.
struct IntervalGrid {
  TimeWindow window;
  double sigma = 1.0;
  std::uint64_t interval_count = 0;
  double target = 0.0; // normalized target t / S
  std::vector<GridObservation> observations;

  /// Sum of observed normalized hashes divided by interval_count.
  double y_bar() const;
  double observed_sum() const;
};

enum class EstimateMethod { status_reports, mom, combined, naive_difficulty };

std::string_view to_string(EstimateMethod method);
EstimateMethod estimate_method_from_string(std::string_view name);

/// Hash count per sigma-second interval with optional bounds. beta_point is
/// the survival mean in absolute hash units, so beta_point * theta_point = S.
struct HashRateEstimate {
  double theta_point = 0.0;
  double theta_low = 0.0;
  double theta_high = 0.0;
  double rate_point = 0.0;
  double rate_low = 0.0;
  double rate_high = 0.0;
  EstimateMethod method = EstimateMethod::mom;
  std::size_t sample_size = 0;
  double beta_point = 0.0;
  double sigma = 1.0;
  bool bounded = false;
  std::size_t infeasible_resamples = 0;
  std::string label; // miner label, subset description or "network"

  /// Point estimate with low = high = point and unset bounds.
  static HashRateEstimate from_theta(double theta, double sigma, EstimateMethod method,
                                     std::size_t sample_size);

  void set_bounds(double theta_lo, double theta_hi);

  friend bool operator==(const HashRateEstimate&, const HashRateEstimate&) = default;
};

/// theta for S / beta when beta is a normalized survival mean.
inline double theta_from_unit_beta(double beta_unit) { return 1.0 / beta_unit; }

/// Absolute survival mean S / theta as a double.
double beta_from_theta(double theta);

} // namespace hashrate
