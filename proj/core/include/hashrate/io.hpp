#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hashrate/chain.hpp"
#include "hashrate/risk.hpp"
#include "hashrate/simulator.hpp"

namespace hashrate {

struct ChainDataset {
  std::vector<BlockHeader> headers; // parents before children
  std::vector<StatusReport> reports;
  ChainKind kind = ChainKind::bitcoin;
  std::string provenance;
};

/// Headers as JSON Lines. Besides the native keys (id, parent, ts, pow,
/// target | difficulty, miner, ommer) common export names are accepted:
/// hash, previousblockhash / parentHash, time / timestamp, pow_hash,
/// bits (compact target), coinbase / pool for miner, uncle / is_ommer.
/// For bitcoin, a missing pow defaults to the block hash read as a number.
/// Blank lines and lines starting with '#' are skipped.
ChainDataset parse_headers(std::istream& in, ChainKind kind = ChainKind::bitcoin);
ChainDataset read_headers(const std::filesystem::path& path, ChainKind kind = ChainKind::bitcoin);

void write_headers(std::ostream& out, std::span<const BlockHeader> headers);
void write_headers(const std::filesystem::path& path, std::span<const BlockHeader> headers);

/// Reports as JSON Lines: miner, idx, sigma, min_hash, nonce, chained,
/// prior_block. Chain validity is not checked here.
std::vector<StatusReport> parse_reports(std::istream& in);
std::vector<StatusReport> read_reports(const std::filesystem::path& path);

void write_reports(std::ostream& out, std::span<const StatusReport> reports);
void write_reports(const std::filesystem::path& path, std::span<const StatusReport> reports);

/// Bitcoin nBits: mantissa * 256^(exponent - 3).
HashValue target_from_compact(std::uint32_t bits);

/// Simulation config as JSON: chain, block_interval_seconds,
/// duration_seconds, report_sigma, propagation_window_seconds, seed, an
/// optional target (hex) and miners [{label, hash_rate, reports_per_block}]
/// plus an optional attacker object. Without a target one is derived from
/// the summed rates.
SimConfig parse_sim_config(const std::string& json_text);
SimConfig read_sim_config(const std::filesystem::path& path);
std::string sim_config_json(const SimConfig& config);

std::string ground_truth_json(const GroundTruth& truth);

// ---------------------------------------------------------------------------
// Tabular results

enum class OutputFormat { json, csv };

std::string_view to_string(OutputFormat format);
OutputFormat output_format_from_string(std::string_view name);

using Cell = std::variant<std::string, double, std::int64_t, bool>;

/// Homogeneous records with a fixed column order.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
};

Table estimates_table(std::span<const HashRateEstimate> estimates);
Table assessments_table(std::span<const RiskAssessment> assessments);
Table depth_cdf_table(const DepthDistribution& distribution);
Table depth_samples_table(const DepthDistribution& distribution);

/// JSON: array of objects keyed in column order. CSV: header line, then one
/// line per row with numbers at 12 significant digits.
void write_table(std::ostream& out, const Table& table, OutputFormat format);
std::string format_table(const Table& table, OutputFormat format);

/// Writes to `path`; throws Error when the file cannot be written.
void export_results(const Table& table, OutputFormat format, const std::filesystem::path& path);

std::vector<HashRateEstimate> estimates_from_json(const std::string& json_text);
std::vector<RiskAssessment> assessments_from_json(const std::string& json_text);

} // namespace hashrate
