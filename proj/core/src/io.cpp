#include "hashrate/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "hashrate/errors.hpp"
#include <nlohmann/json.hpp>

namespace hashrate {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

const json* find_field(const json& obj, std::initializer_list<const char*> names) {
  for (const char* name : names) {
    auto it = obj.find(name);
    if (it != obj.end() && !it->is_null()) return &*it;
  }
  return nullptr;
}

const json& require_field(const json& obj, std::initializer_list<const char*> names, std::size_t line) {
  if (const json* f = find_field(obj, names)) return *f;
  throw ParseError(std::string("missing field '") + *names.begin() + "'", line);
}

std::string require_string(const json& v, const char* name, std::size_t line) {
  if (!v.is_string()) throw ParseError(std::string("field '") + name + "' must be a string", line);
  return v.get<std::string>();
}

template <class Fn>
auto wrap(const char* name, std::size_t line, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("field '") + name + "': " + e.what(), line);
  }
}

Digest256 parse_digest(const json& v, const char* name, std::size_t line) {
  const std::string s = require_string(v, name, line);
  return wrap(name, line, [&] { return Digest256::from_hex(s); });
}

HashValue parse_hash(const json& v, const char* name, std::size_t line) {
  const std::string s = require_string(v, name, line);
  return wrap(name, line, [&] { return HashValue::from_hex(s); });
}

double parse_number(const json& v, const char* name, std::size_t line) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    return wrap(name, line, [&] {
      std::size_t used = 0;
      const double d = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument("not a decimal number: '" + s + "'");
      return d;
    });
  }
  throw ParseError(std::string("field '") + name + "' must be a number or decimal string", line);
}

std::int64_t parse_integer(const json& v, const char* name, std::size_t line) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    return wrap(name, line, [&] {
      std::size_t used = 0;
      const long long x = std::stoll(s, &used);
      if (used != s.size()) throw std::invalid_argument("not an integer: '" + s + "'");
      return static_cast<std::int64_t>(x);
    });
  }
  throw ParseError(std::string("field '") + name + "' must be an integer", line);
}

Target parse_target(const json& obj, std::size_t line) {
  if (const json* t = find_field(obj, {"target"})) {
    const HashValue v = parse_hash(*t, "target", line);
    return wrap("target", line, [&] { return Target::from_hash(v); });
  }
  if (const json* d = find_field(obj, {"difficulty"})) {
    const double diff = parse_number(*d, "difficulty", line);
    return wrap("difficulty", line, [&] { return Target::from_difficulty(diff); });
  }
  if (const json* b = find_field(obj, {"bits"})) {
    std::uint32_t bits = 0;
    if (b->is_number_unsigned() || b->is_number_integer()) {
      bits = b->get<std::uint32_t>();
    } else {
      const std::string s = require_string(*b, "bits", line);
      bits = wrap("bits", line, [&] { return static_cast<std::uint32_t>(std::stoul(s, nullptr, 16)); });
    }
    return wrap("bits", line, [&] { return Target::from_hash(target_from_compact(bits)); });
  }
  throw ParseError("missing field 'target' (or 'difficulty' / 'bits')", line);
}

json parse_line(const std::string& text, std::size_t line) {
  try {
    json v = json::parse(text);
    if (!v.is_object()) throw ParseError("expected a JSON object", line);
    return v;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line);
  }
}

bool skip_line(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r");
  return first == std::string::npos || text[first] == '#';
}

// Parents before children, otherwise keeping input order.
std::vector<BlockHeader> topological_order(std::vector<BlockHeader> headers) {
  std::unordered_map<Digest256, std::size_t, Digest256Hasher> pos;
  for (std::size_t i = 0; i < headers.size(); ++i) pos.emplace(headers[i].id, i);
  std::vector<int> state(headers.size(), 0); // 0 new, 1 on path, 2 emitted
  std::vector<std::size_t> order;
  order.reserve(headers.size());
  std::vector<std::size_t> path;
  for (std::size_t i = 0; i < headers.size(); ++i) {
    std::size_t cur = i;
    while (state[cur] == 0) {
      state[cur] = 1;
      path.push_back(cur);
      auto it = pos.find(headers[cur].parent_id);
      if (it == pos.end()) break;
      cur = it->second;
      if (state[cur] == 1) throw ParseError("cycle detected in header parents at " + headers[cur].id.to_hex(), 0);
    }
    while (!path.empty()) {
      state[path.back()] = 2;
      order.push_back(path.back());
      path.pop_back();
    }
  }
  std::vector<BlockHeader> out;
  out.reserve(headers.size());
  for (auto i : order) out.push_back(std::move(headers[i]));
  return out;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

ordered_json cell_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> ordered_json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(v)) return nullptr;
        }
        return v;
      },
      c);
}

std::string cell_csv(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return csv_escape(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else {
          return std::to_string(v);
        }
      },
      c);
}

double json_double(const json& row, const char* key) {
  const auto& v = row.at(key);
  if (v.is_null()) return std::numeric_limits<double>::infinity();
  return v.get<double>();
}

} // namespace

// ---------------------------------------------------------------------------
// Headers

ChainDataset parse_headers(std::istream& in, ChainKind kind) {
  ChainDataset ds;
  ds.kind = kind;
  std::unordered_map<Digest256, std::size_t, Digest256Hasher> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (skip_line(text)) continue;
    const json obj = parse_line(text, line);
    BlockHeader h;
    const json& id_field = require_field(obj, {"id", "hash"}, line);
    h.id = parse_digest(id_field, "id", line);
    h.parent_id = parse_digest(require_field(obj, {"parent", "previousblockhash", "parentHash", "prev"}, line),
                               "parent", line);
    h.timestamp = parse_integer(require_field(obj, {"ts", "time", "timestamp"}, line), "ts", line);
    if (const json* pow = find_field(obj, {"pow", "pow_hash"})) {
      h.pow_hash = parse_hash(*pow, "pow", line);
    } else if (kind == ChainKind::bitcoin) {
      h.pow_hash = parse_hash(id_field, "id", line); // the displayed block hash is the POW value
    } else {
      throw ParseError("missing field 'pow'", line);
    }
    h.target = parse_target(obj, line);
    h.miner = require_string(require_field(obj, {"miner", "coinbase", "pool"}, line), "miner", line);
    if (const json* o = find_field(obj, {"ommer", "is_ommer", "uncle"})) {
      if (!o->is_boolean()) throw ParseError("field 'ommer' must be a boolean", line);
      h.is_ommer = o->get<bool>();
    }
    const auto verdict = validate_header(h);
    if (!verdict.ok()) throw ParseError("header " + h.id.to_hex() + ": " + verdict.violations.front(), line);
    if (!seen.emplace(h.id, line).second) {
      throw ParseError("duplicate header id " + h.id.to_hex() + " (first seen on line " +
                           std::to_string(seen[h.id]) + ")",
                       line);
    }
    ds.headers.push_back(std::move(h));
  }
  ds.headers = topological_order(std::move(ds.headers));
  return ds;
}

ChainDataset read_headers(const std::filesystem::path& path, ChainKind kind) {
  auto in = open_for_read(path);
  auto ds = parse_headers(in, kind);
  ds.provenance = path.string();
  return ds;
}

void write_headers(std::ostream& out, std::span<const BlockHeader> headers) {
  for (const auto& h : headers) {
    ordered_json o;
    o["id"] = h.id.to_hex();
    o["parent"] = h.parent_id.to_hex();
    o["ts"] = h.timestamp;
    o["pow"] = h.pow_hash.to_hex();
    o["target"] = h.target.value().to_hex();
    o["miner"] = h.miner;
    o["ommer"] = h.is_ommer;
    out << o.dump() << '\n';
  }
}

void write_headers(const std::filesystem::path& path, std::span<const BlockHeader> headers) {
  auto out = open_for_write(path);
  write_headers(out, headers);
  if (!out) throw Error("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Reports

std::vector<StatusReport> parse_reports(std::istream& in) {
  std::vector<StatusReport> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (skip_line(text)) continue;
    const json obj = parse_line(text, line);
    StatusReport r;
    r.miner = require_string(require_field(obj, {"miner"}, line), "miner", line);
    const auto idx = parse_integer(require_field(obj, {"idx"}, line), "idx", line);
    if (idx < 0) throw ParseError("field 'idx' must be non-negative", line);
    r.interval_index = static_cast<std::uint64_t>(idx);
    r.interval_seconds = parse_number(require_field(obj, {"sigma"}, line), "sigma", line);
    if (!(r.interval_seconds > 0.0)) throw ParseError("field 'sigma' must be positive", line);
    r.min_hash = parse_hash(require_field(obj, {"min_hash"}, line), "min_hash", line);
    r.report_nonce = parse_digest(require_field(obj, {"nonce"}, line), "nonce", line);
    r.chained_nonce = parse_digest(require_field(obj, {"chained"}, line), "chained", line);
    r.prior_block_id = parse_digest(require_field(obj, {"prior_block"}, line), "prior_block", line);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<StatusReport> read_reports(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  return parse_reports(in);
}

void write_reports(std::ostream& out, std::span<const StatusReport> reports) {
  for (const auto& r : reports) {
    ordered_json o;
    o["miner"] = r.miner;
    o["idx"] = r.interval_index;
    o["sigma"] = r.interval_seconds;
    o["min_hash"] = r.min_hash.to_hex();
    o["nonce"] = r.report_nonce.to_hex();
    o["chained"] = r.chained_nonce.to_hex();
    o["prior_block"] = r.prior_block_id.to_hex();
    out << o.dump() << '\n';
  }
}

void write_reports(const std::filesystem::path& path, std::span<const StatusReport> reports) {
  auto out = open_for_write(path);
  write_reports(out, reports);
  if (!out) throw Error("failed writing " + path.string());
}

HashValue target_from_compact(std::uint32_t bits) {
  if (bits & 0x00800000u) throw InvalidArgument("compact target is negative");
  const std::uint32_t exponent = bits >> 24;
  const uint256 mantissa = bits & 0x007fffffu;
  if (mantissa == 0) throw InvalidArgument("compact target is zero");
  if (exponent <= 3) return HashValue(uint256(mantissa >> (8 * (3 - exponent))));
  if (exponent > 34 || (exponent == 34 && mantissa > 0xff) || (exponent == 33 && mantissa > 0xffff)) {
    throw InvalidArgument("compact target exceeds 256 bits");
  }
  return HashValue(uint256(mantissa << (8 * (exponent - 3))));
}

// ---------------------------------------------------------------------------
// Simulation config and ground truth

SimConfig parse_sim_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed config JSON: ") + e.what(), 0);
  }
  if (!j.is_object()) throw ParseError("config must be a JSON object", 0);
  try {
    std::vector<MinerSpec> miners;
    for (const auto& m : j.at("miners")) {
      miners.push_back({m.at("label").get<std::string>(), m.at("hash_rate").get<double>(),
                        m.value("reports_per_block", 0.0)});
    }
    const ChainKind kind = chain_kind_from_string(j.value("chain", std::string("bitcoin")));
    const double interval = j.value("block_interval_seconds", chain_params(kind).block_interval_seconds);
    SimConfig cfg = make_sim_config(std::move(miners), interval, j.at("duration_seconds").get<double>(),
                                    j.value("seed", std::uint64_t{0}), kind);
    cfg.report_sigma = j.value("report_sigma", 0.0);
    cfg.propagation_window_seconds = j.value("propagation_window_seconds", cfg.propagation_window_seconds);
    if (j.contains("attacker") && !j["attacker"].is_null()) {
      const auto& a = j["attacker"];
      cfg.attacker = AttackerSpec{a.at("label").get<std::string>(), a.at("total_rate").get<double>(),
                                  a.value("divert_fraction", 0.0), a.value("fork_time", 0.0),
                                  a.value("reports_per_block", 0.0)};
      cfg.target = target_for_rate(cfg.total_rate(), interval);
    }
    if (j.contains("target")) cfg.target = Target::from_hash(HashValue::from_hex(j["target"].get<std::string>()));
    return cfg;
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid config: ") + e.what(), 0);
  }
}

SimConfig read_sim_config(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_sim_config(ss.str());
}

std::string sim_config_json(const SimConfig& c) {
  ordered_json j;
  j["chain"] = std::string(to_string(c.kind));
  j["block_interval_seconds"] = c.block_interval_seconds;
  j["duration_seconds"] = c.duration_seconds;
  j["report_sigma"] = c.report_sigma;
  j["propagation_window_seconds"] = c.propagation_window_seconds;
  j["seed"] = c.seed;
  j["target"] = c.target.value().to_hex();
  ordered_json miners = ordered_json::array();
  for (const auto& m : c.miners) {
    ordered_json o;
    o["label"] = m.label;
    o["hash_rate"] = m.hash_rate;
    o["reports_per_block"] = m.reports_per_block;
    miners.push_back(o);
  }
  j["miners"] = miners;
  if (c.attacker) {
    ordered_json a;
    a["label"] = c.attacker->label;
    a["total_rate"] = c.attacker->total_rate;
    a["divert_fraction"] = c.attacker->divert_fraction;
    a["fork_time"] = c.attacker->fork_time;
    a["reports_per_block"] = c.attacker->reports_per_block;
    j["attacker"] = a;
  }
  return j.dump(2);
}

std::string ground_truth_json(const GroundTruth& truth) {
  ordered_json segments = ordered_json::array();
  for (const auto& s : truth.segments) {
    ordered_json o;
    o["start"] = s.start;
    o["end"] = s.end;
    o["network_rate"] = s.network_rate;
    ordered_json miners = ordered_json::array();
    for (const auto& m : s.miners) {
      ordered_json mo;
      mo["label"] = m.label;
      mo["rate"] = m.rate;
      miners.push_back(mo);
    }
    o["miners"] = miners;
    segments.push_back(o);
  }
  ordered_json j;
  j["segments"] = segments;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Tables

std::string_view to_string(OutputFormat format) { return format == OutputFormat::json ? "json" : "csv"; }

OutputFormat output_format_from_string(std::string_view name) {
  if (name == "json") return OutputFormat::json;
  if (name == "csv") return OutputFormat::csv;
  throw InvalidArgument("unknown output format '" + std::string(name) + "'");
}

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw InvalidArgument("row width does not match the table columns");
  rows.push_back(std::move(row));
}

Table estimates_table(std::span<const HashRateEstimate> estimates) {
  Table t;
  t.columns = {"label",      "method",    "theta_point", "theta_low",   "theta_high", "rate_point",
               "rate_low",   "rate_high", "beta_point",  "sigma",       "sample_size", "bounded",
               "infeasible_resamples"};
  for (const auto& e : estimates) {
    t.add_row({e.label, std::string(to_string(e.method)), e.theta_point, e.theta_low, e.theta_high, e.rate_point,
               e.rate_low, e.rate_high, e.beta_point, e.sigma, static_cast<std::int64_t>(e.sample_size), e.bounded,
               static_cast<std::int64_t>(e.infeasible_resamples)});
  }
  return t;
}

Table assessments_table(std::span<const RiskAssessment> assessments) {
  Table t;
  t.columns = {"block_id",     "depth",        "theta_0",   "theta_0_low",       "theta_0_high",
               "theta_i",      "theta_i_low",  "theta_i_high", "q_i",            "q_iL",
               "q_iH",         "probability_point", "probability_worst", "probability_best", "decision"};
  for (const auto& a : assessments) {
    t.add_row({a.block_id.to_hex(), static_cast<std::int64_t>(a.depth), a.theta_0, a.theta_0_low, a.theta_0_high,
               a.theta_i, a.theta_i_low, a.theta_i_high, a.q_i, a.q_iL, a.q_iH, a.probability_point,
               a.probability_worst, a.probability_best, std::string(a.release ? "release" : "hold")});
  }
  return t;
}

Table depth_cdf_table(const DepthDistribution& distribution) {
  Table t;
  t.columns = {"depth", "fraction_released"};
  for (const auto& p : distribution.cdf) t.add_row({static_cast<std::int64_t>(p.depth), p.fraction});
  return t;
}

Table depth_samples_table(const DepthDistribution& distribution) {
  Table t;
  t.columns = {"block_id", "release_depth", "censored"};
  for (const auto& s : distribution.samples) {
    t.add_row({s.block_id.to_hex(), static_cast<std::int64_t>(s.depth), s.censored});
  }
  return t;
}

void write_table(std::ostream& out, const Table& table, OutputFormat format) {
  if (format == OutputFormat::csv) {
    for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << csv_escape(table.columns[i]);
    out << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << cell_csv(row[i]);
      out << '\n';
    }
    return;
  }
  ordered_json arr = ordered_json::array();
  for (const auto& row : table.rows) {
    ordered_json o = ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) o[table.columns[i]] = cell_json(row[i]);
    arr.push_back(std::move(o));
  }
  out << arr.dump(2) << '\n';
}

std::string format_table(const Table& table, OutputFormat format) {
  std::ostringstream os;
  write_table(os, table, format);
  return os.str();
}

void export_results(const Table& table, OutputFormat format, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  write_table(out, table, format);
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<HashRateEstimate> estimates_from_json(const std::string& json_text) {
  std::vector<HashRateEstimate> out;
  try {
    for (const auto& row : json::parse(json_text)) {
      HashRateEstimate e;
      e.label = row.at("label").get<std::string>();
      e.method = estimate_method_from_string(row.at("method").get<std::string>());
      e.theta_point = json_double(row, "theta_point");
      e.theta_low = json_double(row, "theta_low");
      e.theta_high = json_double(row, "theta_high");
      e.rate_point = json_double(row, "rate_point");
      e.rate_low = json_double(row, "rate_low");
      e.rate_high = json_double(row, "rate_high");
      e.beta_point = json_double(row, "beta_point");
      e.sigma = json_double(row, "sigma");
      e.sample_size = row.at("sample_size").get<std::size_t>();
      e.bounded = row.at("bounded").get<bool>();
      e.infeasible_resamples = row.at("infeasible_resamples").get<std::size_t>();
      out.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid estimate records: ") + e.what(), 0);
  }
  return out;
}

std::vector<RiskAssessment> assessments_from_json(const std::string& json_text) {
  std::vector<RiskAssessment> out;
  try {
    for (const auto& row : json::parse(json_text)) {
      RiskAssessment a;
      a.block_id = Digest256::from_hex(row.at("block_id").get<std::string>());
      a.depth = row.at("depth").get<std::uint64_t>();
      a.theta_0 = json_double(row, "theta_0");
      a.theta_0_low = json_double(row, "theta_0_low");
      a.theta_0_high = json_double(row, "theta_0_high");
      a.theta_i = json_double(row, "theta_i");
      a.theta_i_low = json_double(row, "theta_i_low");
      a.theta_i_high = json_double(row, "theta_i_high");
      a.q_i = json_double(row, "q_i");
      a.q_iL = json_double(row, "q_iL");
      a.q_iH = json_double(row, "q_iH");
      a.probability_point = json_double(row, "probability_point");
      a.probability_worst = json_double(row, "probability_worst");
      a.probability_best = json_double(row, "probability_best");
      a.release = row.at("decision").get<std::string>() == "release";
      out.push_back(a);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid assessment records: ") + e.what(), 0);
  }
  return out;
}

} // namespace hashrate
