#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hashrate/chain.hpp"

namespace hashrate {

enum class Tail { upper, lower };

std::string_view to_string(Tail tail);

/// Merchant query: smallest relative deviation pi whose tail bound over n
/// reports is at most epsilon.
struct ChernoffQuery {
  std::size_t n = 1;
  double epsilon = 0.05;
  Tail tail = Tail::upper;
};

/// P((beta - beta_hat) / beta_hat >= pi) <= exp[n pi/(1+pi) - n ln(1+pi)].
double chernoff_upper_tail(std::size_t n, double pi);

/// P((beta_hat - beta) / beta >= pi) <= exp[-n (pi - ln(1+pi))] / (1+pi).
double chernoff_lower_tail(std::size_t n, double pi);

double chernoff_bound(Tail tail, std::size_t n, double pi);

/// Bisection over pi in [1e-9, 1e9] to relative width 1e-9. The returned pi
/// satisfies bound(pi) <= epsilon. Results are cached per (n, epsilon, tail).
double solve_pi(const ChernoffQuery& query);

/// beta_hat is the mean of V_i * sigma_i / sigma, so partial intervals are
/// rescaled to the nominal sigma; with uniform intervals this is V-bar.
/// All reports must carry the same miner label.
HashRateEstimate estimate_miner_rate(std::span<const StatusReport> reports, double sigma);

/// Point estimate plus Chernoff bounds at epsilon per tail.
HashRateEstimate bounded_estimate(std::span<const StatusReport> reports, double sigma, double epsilon);

struct ChainVerdict {
  bool ok = true;
  std::optional<std::size_t> first_mismatch;
  std::vector<std::size_t> mismatches; // positions in the input sequence
};

/// Recomputes chained nonces. The chain restarts from prior_block_id at each
/// change of prior block; after a mismatch it continues from the recomputed
/// value, so every later report in that segment also fails.
ChainVerdict verify_report_chain(std::span<const StatusReport> reports);

struct MinerBreakdown {
  std::vector<HashRateEstimate> miners; // sorted by label
  HashRateEstimate network;             // sum of per-miner values
};

/// Per-miner estimates, summed as rates into a network row. With epsilon set,
/// each miner gets Chernoff bounds and the network bounds are their sums.
/// `only` restricts to the listed labels when non-empty.
MinerBreakdown estimate_by_miner(std::span<const StatusReport> reports, double sigma,
                                 std::optional<double> epsilon = std::nullopt,
                                 const std::vector<std::string>& only = {});

} // namespace hashrate
