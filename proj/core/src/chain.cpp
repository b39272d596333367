#include "hashrate/chain.hpp"

#include <cmath>
#include <limits>

#include "hashrate/errors.hpp"

namespace hashrate {

namespace mp = boost::multiprecision;

std::string_view to_string(ChainKind kind) {
  switch (kind) {
  case ChainKind::bitcoin:
    return "bitcoin";
  case ChainKind::ethereum:
    return "ethereum";
  }
  return "bitcoin";
}

ChainKind chain_kind_from_string(std::string_view name) {
  if (name == "bitcoin" || name == "bitcoin-style") return ChainKind::bitcoin;
  if (name == "ethereum" || name == "ethereum-style") return ChainKind::ethereum;
  throw InvalidArgument("unknown chain kind '" + std::string(name) + "'");
}

ChainParams chain_params(ChainKind kind) {
  if (kind == ChainKind::ethereum) return {ChainKind::ethereum, 13.0, 1.2, 224};
  return {ChainKind::bitcoin, 600.0, 1.0, 224};
}

Target::Target(const HashValue& t, double difficulty)
    : t_(t), difficulty_(difficulty), unit_(t.unit()) {}

Target Target::from_hash(const HashValue& t) {
  if (t == HashValue()) throw InvalidArgument("target must be positive");
  return Target(t, difficulty_from_target(t));
}

Target Target::from_difficulty(double difficulty) {
  if (!(difficulty > 0.0) || !std::isfinite(difficulty)) {
    throw InvalidArgument("difficulty must be a positive finite number");
  }
  // difficulty = m * 2^e with integer m, so 2^224 / difficulty = 2^(224 - e) / m.
  int exponent = 0;
  const double mantissa = std::frexp(difficulty, &exponent);
  const auto m = static_cast<std::uint64_t>(std::ldexp(mantissa, 53));
  const int e = exponent - 53;
  const int shift = 224 - e;
  if (shift < 0) throw InvalidArgument("difficulty exceeds hash space");
  mp::cpp_int numerator = mp::cpp_int(1) << shift;
  mp::cpp_int t = numerator / m;
  if (t == 0) throw InvalidArgument("difficulty exceeds hash space");
  const mp::cpp_int s = (mp::cpp_int(1) << 256) - 1;
  if (t > s) t = s;
  const HashValue value(t.convert_to<uint256>());
  return Target(value, difficulty_from_target(value));
}

Target target_from_difficulty(double difficulty, ChainKind) {
  return Target::from_difficulty(difficulty);
}

double difficulty_from_target(const HashValue& t) {
  if (t == HashValue()) throw InvalidArgument("target must be positive");
  const UnitReal numerator = mp::ldexp(UnitReal(1), 224);
  return (numerator / UnitReal(t.value())).convert_to<double>();
}

Target target_for_rate(double hashes_per_second, double block_interval_seconds) {
  if (!(hashes_per_second > 0.0) || !(block_interval_seconds > 0.0)) {
    throw InvalidArgument("hash rate and block interval must be positive");
  }
  return Target::from_hash(HashValue::from_unit(1.0 / (hashes_per_second * block_interval_seconds)));
}

ValidationResult validate_header(const BlockHeader& header) {
  ValidationResult result;
  if (header.target.value() == HashValue()) {
    result.violations.emplace_back("target must be positive");
  }
  if (header.pow_hash > header.target.value()) {
    result.violations.emplace_back("POW does not meet target");
  }
  if (header.miner.empty()) {
    result.violations.emplace_back("miner label is empty");
  }
  if (header.id == header.parent_id) {
    result.violations.emplace_back("header is its own parent");
  }
  return result;
}

Digest256 chain_nonce(const Digest256& previous_chained, const Digest256& report_nonce) {
  return sha256_concat(previous_chained, report_nonce);
}

double IntervalGrid::observed_sum() const {
  double sum = 0.0;
  for (const auto& obs : observations) sum += obs.value;
  return sum;
}

double IntervalGrid::y_bar() const {
  if (interval_count == 0) return 0.0;
  return observed_sum() / static_cast<double>(interval_count);
}

std::string_view to_string(EstimateMethod method) {
  switch (method) {
  case EstimateMethod::status_reports:
    return "status-reports";
  case EstimateMethod::mom:
    return "mom";
  case EstimateMethod::combined:
    return "combined";
  case EstimateMethod::naive_difficulty:
    return "naive-difficulty";
  }
  return "mom";
}

EstimateMethod estimate_method_from_string(std::string_view name) {
  if (name == "status-reports") return EstimateMethod::status_reports;
  if (name == "mom") return EstimateMethod::mom;
  if (name == "combined") return EstimateMethod::combined;
  if (name == "naive-difficulty") return EstimateMethod::naive_difficulty;
  throw InvalidArgument("unknown estimate method '" + std::string(name) + "'");
}

double beta_from_theta(double theta) { return std::ldexp(1.0, 256) / theta; }

HashRateEstimate HashRateEstimate::from_theta(double theta, double sigma, EstimateMethod method,
                                              std::size_t sample_size) {
  HashRateEstimate e;
  e.theta_point = e.theta_low = e.theta_high = theta;
  e.sigma = sigma;
  e.rate_point = e.rate_low = e.rate_high = theta / sigma;
  e.method = method;
  e.sample_size = sample_size;
  e.beta_point = theta > 0.0 ? beta_from_theta(theta) : std::numeric_limits<double>::infinity();
  return e;
}

void HashRateEstimate::set_bounds(double theta_lo, double theta_hi) {
  theta_low = theta_lo;
  theta_high = theta_hi;
  rate_low = theta_lo / sigma;
  rate_high = theta_hi / sigma;
  bounded = true;
}

} // namespace hashrate
