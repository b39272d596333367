#include "hashrate_cli/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hashrate/chain_index.hpp"
#include "hashrate/errors.hpp"
#include "hashrate/experiments.hpp"
#include "hashrate/io.hpp"
#include "hashrate/mom_estimator.hpp"
#include "hashrate/risk.hpp"
#include "hashrate/simulator.hpp"
#include "hashrate/status_estimator.hpp"

#ifndef HASHRATE_VERSION
#define HASHRATE_VERSION "0.0.0"
#endif

namespace hashrate::cli {

std::string version() { return HASHRATE_VERSION; }

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
namespace ex = hashrate::experiments;

class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string file_digest(const fs::path& path) { return sha256(read_file(path)).to_hex(); }

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

Digest256 parse_id(const std::string& flag, const std::string& text) {
  try {
    return Digest256::from_hex(text);
  } catch (const Error& e) {
    throw UsageError(flag + ": " + e.what());
  }
}

std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }

// ---------------------------------------------------------------------------
// Per-invocation state: global flags, the resolved parameters and input
// digests that go into the run manifest.

struct GlobalOptions {
  std::string format = "json";
  bool quiet = false;
  std::string out;
  std::string manifest;
};

class Session {
public:
  Session(std::vector<std::string> argv, std::ostream& out, std::ostream& err)
      : argv_(std::move(argv)), out_(out), err_(err) {}

  GlobalOptions global;
  std::string subcommand;
  ordered_json params = ordered_json::object();

  std::ostream& out() { return out_; }

  const std::string& input(const std::string& flag, const std::string& path) {
    inputs_.push_back({{"flag", flag}, {"path", path}, {"sha256", file_digest(path)}});
    return path;
  }

  void note(const std::string& message) {
    if (!global.quiet) err_ << message << '\n';
  }

  OutputFormat format() const { return output_format_from_string(global.format); }

  void emit(const Table& table) {
    ordered_json outputs = ordered_json::array();
    if (global.out.empty()) {
      const std::string text = format_table(table, format());
      out_ << text;
      outputs.push_back({{"name", "-"}, {"sha256", sha256(text).to_hex()}});
      if (!global.manifest.empty()) write_manifest(global.manifest, "stdout", outputs);
      return;
    }
    export_results(table, format(), global.out);
    outputs.push_back({{"name", fs::path(global.out).filename().string()}, {"sha256", file_digest(global.out)}});
    write_manifest(global.manifest.empty() ? global.out + ".manifest.json" : global.manifest, "file", outputs);
    note("wrote " + global.out);
  }

  void emit_directory(const fs::path& dir, const std::vector<std::string>& files) {
    ordered_json outputs = ordered_json::array();
    for (const auto& f : files) outputs.push_back({{"name", f}, {"sha256", file_digest(dir / f)}});
    write_manifest(global.manifest.empty() ? (dir / "manifest.json").string() : global.manifest, "directory",
                   outputs);
  }

private:
  void write_manifest(const fs::path& path, const std::string& kind, const ordered_json& outputs) const {
    ordered_json m;
    m["tool"] = "hashrate";
    m["version"] = version();
    m["subcommand"] = subcommand;
    m["argv"] = argv_;
    m["parameters"] = params;
    m["inputs"] = inputs_;
    m["output_kind"] = kind;
    m["outputs"] = outputs;
    write_file(path, m.dump(2) + "\n");
  }

  std::vector<std::string> argv_;
  std::ostream& out_;
  std::ostream& err_;
  ordered_json inputs_ = ordered_json::array();
};

// ---------------------------------------------------------------------------
// Shared option groups

struct WindowOptions {
  std::optional<double> start;
  std::optional<double> end;
  std::optional<std::size_t> blocks;
  std::string at;
};

void add_window_options(CLI::App* app, WindowOptions& w) {
  app->add_option("--window-start", w.start, "Window start in seconds (exclusive)");
  app->add_option("--window-end", w.end, "Window end in seconds (inclusive)");
  app->add_option("--window-blocks", w.blocks, "Window spanning N main-chain blocks that ends at --at");
  app->add_option("--at", w.at, "Block id closing the window (default: chain tip)");
}

TimeWindow resolve_window(const ChainIndex& index, const WindowOptions& w, Session& s) {
  const bool by_time = w.start || w.end;
  TimeWindow window;
  if (by_time && w.blocks) throw UsageError("give either --window-start/--window-end or --window-blocks, not both");
  if (by_time) {
    if (!w.start || !w.end) throw UsageError("--window-start and --window-end must be given together");
    if (!w.at.empty()) throw UsageError("--at only applies together with --window-blocks");
    if (!(*w.end > *w.start)) throw UsageError("--window-end must be after --window-start");
    window = {*w.start, *w.end};
  } else if (w.blocks) {
    if (*w.blocks == 0) throw UsageError("--window-blocks must be at least 1");
    std::size_t end_height = index.main_length() - 1;
    if (!w.at.empty()) {
      const auto h = index.height_of(parse_id("--at", w.at));
      if (!h) throw Error("block " + w.at + " is not on the main chain");
      end_height = *h;
    }
    if (end_height < *w.blocks) {
      throw Error("a " + std::to_string(*w.blocks) + "-block window ending at height " + std::to_string(end_height) +
                  " reaches past genesis");
    }
    window = index.window_ending_at(end_height, *w.blocks);
    s.params["window_blocks"] = *w.blocks;
    s.params["window_end_block"] = index.main_at(end_height).id.to_hex();
  } else {
    throw UsageError("no window given; use --window-blocks N or --window-start/--window-end");
  }
  s.params["window_start"] = window.start;
  s.params["window_end"] = window.end;
  return window;
}

std::vector<BlockHeader> headers_in(const ChainIndex& index, const TimeWindow& window) {
  std::vector<BlockHeader> out;
  for (const auto* h : index.headers_in(window)) out.push_back(*h);
  return out;
}

// Reports mined on top of a main-chain block with start <= ts < end. For a
// block window this is exactly the set mined during it.
std::vector<StatusReport> reports_in(const ChainIndex& index, const std::vector<StatusReport>& all,
                                     const TimeWindow& window) {
  std::vector<StatusReport> out;
  for (const auto& r : all) {
    const auto h = index.height_of(r.prior_block_id);
    if (!h) continue;
    const auto ts = static_cast<double>(index.main_at(*h).timestamp);
    if (ts >= window.start && ts < window.end) out.push_back(r);
  }
  return out;
}

struct BootOptions {
  std::size_t resamples = 10000;
  std::vector<double> percentiles{5.0, 95.0};
  std::string scheme = "poisson-count";
  std::uint64_t seed = 0;
};

void add_boot_options(CLI::App* app, BootOptions& b, bool with_seed = true) {
  app->add_option("--bootstrap", b.resamples, "Bootstrap resamples, 0 disables bounds")->capture_default_str();
  app->add_option("--percentiles", b.percentiles, "Low,high bootstrap percentiles")
      ->delimiter(',')
      ->expected(2)
      ->capture_default_str();
  app->add_option("--bootstrap-scheme", b.scheme, "poisson-count or fixed-count")
      ->check(CLI::IsMember({"poisson-count", "fixed-count"}))
      ->capture_default_str();
  if (with_seed) app->add_option("--seed", b.seed, "Seed for all randomness")->capture_default_str();
}

std::optional<BootstrapConfig> resolve_boot(const BootOptions& b, Session& s) {
  s.params["bootstrap"] = b.resamples;
  if (b.resamples == 0) return std::nullopt;
  BootstrapConfig cfg;
  cfg.resamples = b.resamples;
  cfg.low_percentile = b.percentiles.at(0);
  cfg.high_percentile = b.percentiles.at(1);
  cfg.scheme = bootstrap_scheme_from_string(b.scheme);
  cfg.seed = b.seed;
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  s.params["percentiles"] = b.percentiles;
  s.params["bootstrap_scheme"] = b.scheme;
  s.params["seed"] = b.seed;
  return cfg;
}

struct SolveOptions {
  double tau = 1e-12;
  std::string branch = "plus";
};

void add_solve_options(CLI::App* app, SolveOptions& o) {
  app->add_option("--tau", o.tau, "Relative tolerance of the moment equation")->capture_default_str();
  app->add_option("--branch", o.branch, "Root of the moment equation: plus (beta > t) or minus")
      ->check(CLI::IsMember({"plus", "minus"}))
      ->capture_default_str();
}

MomSolveConfig resolve_solve(const SolveOptions& o, Session& s) {
  if (!(o.tau > 0.0)) throw UsageError("--tau must be positive");
  s.params["tau"] = o.tau;
  s.params["branch"] = o.branch;
  MomSolveConfig cfg;
  cfg.tau = o.tau;
  cfg.branch = o.branch == "minus" ? Branch::minus : Branch::plus;
  return cfg;
}

double checked_sigma(double sigma, Session& s) {
  if (!(sigma > 0.0)) throw UsageError("--sigma must be positive");
  s.params["sigma"] = sigma;
  return sigma;
}

std::optional<double> checked_epsilon(std::optional<double> epsilon, Session& s) {
  if (epsilon) {
    if (!(*epsilon > 0.0 && *epsilon < 1.0)) throw UsageError("--epsilon must lie in (0, 1)");
    s.params["epsilon"] = *epsilon;
  }
  return epsilon;
}

struct ChainOptions {
  std::string headers;
  std::string chain = "bitcoin";
};

void add_chain_options(CLI::App* app, ChainOptions& c, bool required = true) {
  auto* opt = app->add_option("--headers", c.headers, "Headers file (JSON Lines)");
  if (required) opt->required();
  app->add_option("--chain", c.chain, "bitcoin or ethereum")
      ->check(CLI::IsMember({"bitcoin", "ethereum"}))
      ->capture_default_str();
}

ChainDataset load_chain(const ChainOptions& c, Session& s) {
  s.params["chain"] = c.chain;
  return read_headers(s.input("--headers", c.headers), chain_kind_from_string(c.chain));
}

struct RiskOptions {
  ChainOptions chain;
  std::string reports;
  double q_star = 0.127;
  double threshold = 0.001;
  std::size_t pre_window = 100;
  double sigma = 1.0;
  std::string mode = "point";
  std::string estimator = "auto";
  double epsilon = 0.05;
  std::size_t max_depth = 40;
  BootOptions boot;
  SolveOptions solve;
};

void add_risk_options(CLI::App* app, RiskOptions& r) {
  add_chain_options(app, r.chain);
  app->add_option("--reports", r.reports, "Status reports file (JSON Lines)");
  app->add_option("--qstar", r.q_star, "Residual attacker fraction")->capture_default_str();
  app->add_option("--threshold", r.threshold, "Acceptable double-spend probability")->capture_default_str();
  app->add_option("--pre-window", r.pre_window, "Blocks in the baseline window")->capture_default_str();
  app->add_option("--sigma", r.sigma, "Seconds per estimation interval")->capture_default_str();
  app->add_option("--mode", r.mode, "point, worst or best")
      ->check(CLI::IsMember({"point", "worst", "worst-case", "best"}))
      ->capture_default_str();
  app->add_option("--estimator", r.estimator, "auto, mom, status-reports or combined")
      ->check(CLI::IsMember({"auto", "mom", "status-reports", "combined"}))
      ->capture_default_str();
  app->add_option("--epsilon", r.epsilon, "Chernoff level for report bounds")->capture_default_str();
  app->add_option("--max-depth", r.max_depth, "Deepest confirmation examined")->capture_default_str();
  add_boot_options(app, r.boot);
  add_solve_options(app, r.solve);
}

RiskParams resolve_risk(const RiskOptions& o, Session& s) {
  RiskParams p;
  p.q_star = o.q_star;
  p.threshold = o.threshold;
  p.pre_window_blocks = o.pre_window;
  p.sigma = o.sigma;
  p.mode = bound_mode_from_string(o.mode);
  p.estimator = risk_estimator_from_string(o.estimator);
  p.epsilon = o.epsilon;
  p.max_depth = o.max_depth;
  const auto boot = resolve_boot(o.boot, s);
  if (!boot) throw UsageError("risk bounds need --bootstrap >= 1");
  p.bootstrap = *boot;
  p.solve = resolve_solve(o.solve, s);
  p.solve.clamp_infeasible = true;
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  s.params["qstar"] = p.q_star;
  s.params["threshold"] = p.threshold;
  s.params["pre_window"] = p.pre_window_blocks;
  s.params["sigma"] = p.sigma;
  s.params["mode"] = std::string(to_string(p.mode));
  s.params["estimator"] = std::string(to_string(p.estimator));
  s.params["epsilon"] = p.epsilon;
  s.params["max_depth"] = p.max_depth;
  return p;
}

std::vector<StatusReport> load_reports(const std::string& path, Session& s) {
  if (path.empty()) return {};
  return read_reports(s.input("--reports", path));
}

// ---------------------------------------------------------------------------
// Subcommands

struct SimulateOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
};

void cmd_simulate(const SimulateOptions& o, Session& s) {
  if (s.global.out.empty()) throw UsageError("simulate writes a directory; pass --out DIR");
  SimConfig cfg = read_sim_config(s.input("--config", o.config));
  if (o.seed) cfg.seed = *o.seed;
  if (o.duration) cfg.duration_seconds = *o.duration;
  const auto trace = simulate(cfg);
  s.params["config"] = ordered_json::parse(sim_config_json(trace.config));

  const fs::path dir = s.global.out;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  write_headers(dir / "headers.jsonl", trace.headers);
  write_reports(dir / "reports.jsonl", trace.reports);
  write_file(dir / "ground_truth.json", ground_truth_json(trace.ground_truth) + "\n");
  write_file(dir / "config.json", sim_config_json(trace.config) + "\n");
  s.emit_directory(dir, {"headers.jsonl", "reports.jsonl", "ground_truth.json", "config.json"});

  const auto ommers = std::count_if(trace.headers.begin(), trace.headers.end(),
                                    [](const BlockHeader& h) { return h.is_ommer; });
  s.note("simulated " + std::to_string(trace.headers.size()) + " headers (" + std::to_string(ommers) +
         " ommers) and " + std::to_string(trace.reports.size()) + " reports into " + dir.string());
}

struct StatusOptions {
  std::string reports;
  double sigma = 1.0;
  std::optional<double> epsilon;
  std::vector<std::string> miners;
  bool verify = false;
};

void cmd_estimate_status(const StatusOptions& o, Session& s) {
  const auto reports = read_reports(s.input("--reports", o.reports));
  const double sigma = checked_sigma(o.sigma, s);
  const auto epsilon = checked_epsilon(o.epsilon, s);
  s.params["miners"] = o.miners;
  if (o.verify) {
    // Chains are per miner, so check each miner's sequence on its own.
    std::vector<std::string> labels;
    for (const auto& r : reports) labels.push_back(r.miner);
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    for (const auto& label : labels) {
      std::vector<StatusReport> own;
      for (const auto& r : reports) {
        if (r.miner == label) own.push_back(r);
      }
      const auto verdict = verify_report_chain(own);
      if (!verdict.ok) {
        throw Error("report chain of miner '" + label + "' breaks at its report " +
                    std::to_string(*verdict.first_mismatch) + " (" + std::to_string(verdict.mismatches.size()) +
                    " reports fail)");
      }
    }
  }
  const auto breakdown = estimate_by_miner(reports, sigma, epsilon, o.miners);
  auto rows = breakdown.miners;
  rows.push_back(breakdown.network);
  s.emit(estimates_table(rows));
}

struct MomOptions {
  ChainOptions chain;
  WindowOptions window;
  double sigma = 1.0;
  std::vector<std::string> miners;
  BootOptions boot;
  SolveOptions solve;
  std::string reports;
  std::optional<double> epsilon;
};

void cmd_estimate_mom(const MomOptions& o, Session& s, bool combined) {
  const auto data = load_chain(o.chain, s);
  const ChainIndex index(data.headers);
  const TimeWindow window = resolve_window(index, o.window, s);
  const double sigma = checked_sigma(o.sigma, s);
  const auto boot = resolve_boot(o.boot, s);
  const auto solve = resolve_solve(o.solve, s);
  const auto headers = headers_in(index, window);

  HashRateEstimate e;
  if (combined) {
    const auto epsilon = checked_epsilon(o.epsilon, s);
    const auto reports = reports_in(index, read_reports(s.input("--reports", o.reports)), window);
    e = combined_estimate(headers, reports, window, sigma, epsilon, solve, boot);
  } else if (!o.miners.empty()) {
    s.params["miners"] = o.miners;
    e = estimate_subset_rate(headers, o.miners, window, sigma, solve, boot);
  } else {
    e = estimate_network_rate(headers, window, sigma, solve, boot);
  }
  if (e.infeasible_resamples > 0) {
    s.note(std::to_string(e.infeasible_resamples) + " bootstrap resamples exceeded the E[Y] maximum");
  }
  s.emit(estimates_table(std::span<const HashRateEstimate>(&e, 1)));
}

struct BoundsOptions {
  std::vector<std::size_t> counts{40, 240, 480, 720};
  std::vector<double> epsilons{0.05};
};

void cmd_bounds(const BoundsOptions& o, Session& s) {
  s.params["n"] = o.counts;
  s.params["epsilon"] = o.epsilons;
  Table t;
  t.columns = {"n", "epsilon", "tail", "pi", "bound_at_pi", "theta_factor"};
  for (const std::size_t n : o.counts) {
    if (n == 0) throw UsageError("--n values must be positive");
    for (const double eps : o.epsilons) {
      if (!(eps > 0.0 && eps < 1.0)) throw UsageError("--epsilon values must lie in (0, 1)");
      for (const Tail tail : {Tail::upper, Tail::lower}) {
        const double pi = solve_pi({n, eps, tail});
        // Multiplier applied to the point estimate of theta.
        const double factor = tail == Tail::upper ? 1.0 + pi : 1.0 / (1.0 + pi);
        t.add_row({as_int(n), eps, std::string(to_string(tail)), pi, chernoff_bound(tail, n, pi), factor});
      }
    }
  }
  s.emit(t);
}

struct RiskCmdOptions {
  RiskOptions risk;
  std::string block;
};

void cmd_risk(const RiskCmdOptions& o, Session& s) {
  const auto params = resolve_risk(o.risk, s);
  const auto id = parse_id("--block", o.block);
  s.params["block"] = o.block;
  const auto data = load_chain(o.risk.chain, s);
  const auto reports = load_reports(o.risk.reports, s);
  const ChainIndex index(data.headers);
  s.emit(assessments_table(assess_block(index, reports, id, params)));
}

struct DepthOptions {
  RiskOptions risk;
  std::size_t sample = 300;
  bool per_block = false;
};

void cmd_depth(const DepthOptions& o, Session& s) {
  const auto params = resolve_risk(o.risk, s);
  s.params["sample"] = o.sample;
  if (o.sample == 0) throw UsageError("--sample must be positive");
  const auto data = load_chain(o.risk.chain, s);
  const auto reports = load_reports(o.risk.reports, s);
  const ChainIndex index(data.headers);
  const auto blocks = sample_blocks(index, o.sample, params, o.risk.boot.seed);
  const auto dist = depth_to_threshold(index, reports, blocks, params);
  for (const double p : {0.5, 0.9, 0.99}) {
    const auto q = dist.quantile(p);
    s.note("p" + std::to_string(static_cast<int>(p * 100)) + " release depth: " +
           (q ? std::to_string(*q) : std::string("not reached")));
  }
  s.emit(o.per_block ? depth_samples_table(dist) : depth_cdf_table(dist));
}

// ---------------------------------------------------------------------------
// Experiments: plot-ready tables for the reproduction scripts.

Cell optional_depth(std::optional<std::uint64_t> d) {
  if (d) return static_cast<std::int64_t>(*d);
  return std::string("not reached");
}

Table ratio_table(const std::vector<ex::RatioSeries>& series, const std::string& parameter, bool summary,
                  double band) {
  Table t;
  if (!summary) {
    t.columns = {parameter, "ratio"};
    for (const auto& s : series) {
      for (const double r : s.ratios) t.add_row({s.parameter, r});
    }
    return t;
  }
  t.columns = {parameter, "trials", "p10", "median", "p90", "interdecile_range", "within_band", "infeasible"};
  for (const auto& s : series) {
    const auto within = std::count_if(s.ratios.begin(), s.ratios.end(),
                                      [&](double r) { return std::abs(r - 1.0) <= band; });
    t.add_row({s.parameter, as_int(s.ratios.size()), ex::quantile(s.ratios, 0.1), ex::median(s.ratios),
               ex::quantile(s.ratios, 0.9), ex::interdecile_range(s.ratios),
               static_cast<double>(within) / static_cast<double>(s.ratios.size()), as_int(s.infeasible)});
  }
  return t;
}

struct ExperimentOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  bool summary = false;
  // double-spend
  std::vector<double> qs{0.05, 0.1, 0.127, 0.15, 0.2, 0.25, 0.3};
  std::uint64_t max_z = 30;
  double q_star = 0.127;
  std::size_t mc_trials = 0;
  // depth
  double reports_per_block = 10.0;
  std::string mode = "worst";
  std::size_t chain_blocks = 1200;
  // coverage / fixture windows
  BootOptions boot;
  ChainOptions chain;
  std::size_t window_blocks = 50;
  std::optional<double> interval;
};

void cmd_experiment(const std::string& name, const ExperimentOptions& o, Session& s) {
  s.params["experiment"] = name;
  if (o.seed) s.params["seed"] = *o.seed;
  if (o.trials) s.params["trials"] = *o.trials;
  s.params["summary"] = o.summary;

  if (name == "double-spend") {
    s.params["q"] = o.qs;
    s.params["max_z"] = o.max_z;
    s.params["qstar"] = o.q_star;
    s.params["mc_trials"] = o.mc_trials;
    Table t;
    t.columns = {"q", "z", "nakamoto", "revised"};
    if (o.mc_trials > 0) {
      t.columns.push_back("monte_carlo");
      t.columns.push_back("monte_carlo_se");
    }
    std::uint64_t seed = o.seed.value_or(1);
    for (const double q : o.qs) {
      for (std::uint64_t z = 0; z <= o.max_z; ++z) {
        std::vector<Cell> row{q, as_int(z), nakamoto_double_spend(q, z), revised_double_spend(q, z, o.q_star)};
        if (o.mc_trials > 0) {
          const auto mc = monte_carlo_double_spend(q, z, o.mc_trials, seed++);
          row.push_back(mc.probability);
          row.push_back(mc.standard_error);
        }
        t.add_row(std::move(row));
      }
    }
    s.emit(t);
  } else if (name == "status-accuracy") {
    ex::StatusAccuracyConfig cfg;
    if (o.seed) cfg.seed = *o.seed;
    if (o.trials) cfg.trials = *o.trials;
    s.emit(ratio_table(ex::status_report_accuracy(cfg), "n", o.summary, 0.1));
  } else if (name == "chernoff") {
    ex::ChernoffValidityConfig cfg;
    if (o.seed) cfg.seed = *o.seed;
    if (o.trials) cfg.trials = *o.trials;
    Table t;
    t.columns = {"n", "pi", "upper_bound", "upper_frequency", "lower_bound", "lower_frequency"};
    for (const auto& c : ex::chernoff_validity(cfg)) {
      t.add_row({as_int(c.n), c.pi, c.upper_bound, c.upper_frequency, c.lower_bound, c.lower_frequency});
    }
    s.emit(t);
  } else if (name == "mom-windows") {
    ex::MomWindowConfig cfg;
    if (o.seed) cfg.seed = *o.seed;
    if (o.trials) cfg.windows = *o.trials;
    s.emit(ratio_table(ex::mom_window_accuracy(cfg), "window_seconds", o.summary, 0.15));
  } else if (name == "deployment") {
    ex::DeploymentConfig cfg;
    if (o.seed) cfg.seed = *o.seed;
    if (o.trials) cfg.traces = *o.trials;
    Table t;
    t.columns = {"reporters", "windows", "mean_error", "ci95_half_width"};
    for (const auto& p : ex::incremental_deployment(cfg)) {
      t.add_row({as_int(p.reporters), as_int(p.errors.size()), ex::mean(p.errors), ex::ci95_half_width(p.errors)});
    }
    s.emit(t);
  } else if (name == "coverage") {
    ex::CoverageConfig cfg;
    if (o.seed) cfg.seed = *o.seed;
    if (o.trials) cfg.windows = *o.trials;
    const auto boot = resolve_boot(o.boot, s);
    if (!boot) throw UsageError("coverage needs --bootstrap >= 1");
    cfg.bootstrap = *boot;
    const auto r = ex::bootstrap_coverage(cfg);
    Table t;
    t.columns = {"windows", "covered", "coverage", "true_below", "true_above", "infeasible_resamples",
                 "median_relative_width"};
    t.add_row({as_int(r.windows), as_int(r.covered), r.coverage(), as_int(r.true_below), as_int(r.true_above),
               as_int(r.infeasible_resamples),
               r.relative_widths.empty() ? 0.0 : ex::median(r.relative_widths)});
    s.emit(t);
  } else if (name == "depth") {
    ex::DepthExperimentConfig cfg;
    if (o.seed) cfg.seed = *o.seed;
    if (o.trials) cfg.samples = *o.trials;
    cfg.reports_per_block = o.reports_per_block;
    cfg.chain_blocks = o.chain_blocks;
    cfg.params.mode = bound_mode_from_string(o.mode);
    s.params["reports_per_block"] = o.reports_per_block;
    s.params["mode"] = o.mode;
    s.params["chain_blocks"] = o.chain_blocks;
    const auto dist = ex::depth_experiment(cfg);
    if (o.summary) {
      Table t;
      t.columns = {"reports_per_block", "mode", "samples", "censored", "p50", "p90", "p99"};
      const auto censored = std::count_if(dist.samples.begin(), dist.samples.end(),
                                          [](const DepthSample& d) { return d.censored; });
      t.add_row({o.reports_per_block, o.mode, as_int(dist.samples.size()), as_int(static_cast<std::size_t>(censored)),
                 optional_depth(dist.quantile(0.5)), optional_depth(dist.quantile(0.9)),
                 optional_depth(dist.quantile(0.99))});
      s.emit(t);
    } else {
      s.emit(depth_cdf_table(dist));
    }
  } else if (name == "fixture-windows") {
    if (o.chain.headers.empty()) throw UsageError("fixture-windows needs --headers FILE");
    const auto data = load_chain(o.chain, s);
    const ChainIndex index(data.headers);
    ex::FixtureWindowConfig cfg;
    cfg.window_blocks = o.window_blocks;
    cfg.block_interval = o.interval.value_or(chain_params(data.kind).block_interval_seconds);
    cfg.bootstrap = resolve_boot(o.boot, s);
    s.params["window_blocks"] = cfg.window_blocks;
    s.params["block_interval"] = cfg.block_interval;
    Table t;
    t.columns = {"end_height", "mom_rate",           "naive_rate",          "ratio",
                 "observations", "ommers", "width_with_ommers", "width_without_ommers"};
    for (const auto& w : ex::fixture_windows(index, cfg)) {
      t.add_row({as_int(w.end_height), w.mom_rate, w.naive_rate, w.mom_rate / w.naive_rate, as_int(w.observations),
                 as_int(w.ommers), w.width_with_ommers, w.width_without_ommers});
    }
    s.emit(t);
  } else {
    throw UsageError("unknown experiment '" + name + "'");
  }
}

int replay(const std::string& manifest_path, Session& s, std::ostream& out, std::ostream& err);

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Session s(args, out, err);
  CLI::App app{"Hash-rate estimation and double-spend risk from block headers and status reports", "hashrate"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", version());
  app.add_option("--format", s.global.format, "Output format: json or csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  app.add_flag("--quiet", s.global.quiet, "Suppress informational messages on stderr");
  app.add_option("--out", s.global.out, "Output file (a directory for simulate)");
  app.add_option("--manifest", s.global.manifest, "Manifest path (default: next to --out)");

  SimulateOptions sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Generate a synthetic chain with status reports");
  simulate_cmd->add_option("--config", sim.config, "Simulation config (JSON)")->required();
  simulate_cmd->add_option("--seed", sim.seed, "Override the config seed");
  simulate_cmd->add_option("--duration", sim.duration, "Override the simulated duration in seconds");

  auto* estimate_cmd = app.add_subcommand("estimate", "Hash-rate estimates");
  estimate_cmd->require_subcommand(1);
  StatusOptions status;
  auto* status_cmd = estimate_cmd->add_subcommand("status-reports", "Per-miner rates from status reports");
  status_cmd->add_option("--reports", status.reports, "Status reports file (JSON Lines)")->required();
  status_cmd->add_option("--sigma", status.sigma, "Seconds per estimation interval")->capture_default_str();
  status_cmd->add_option("--epsilon", status.epsilon, "Attach Chernoff bounds at this level per tail");
  status_cmd->add_option("--miner,--miners", status.miners, "Only these miners (comma separated)")->delimiter(',');
  status_cmd->add_flag("--verify", status.verify, "Check every miner's nonce chain first");

  MomOptions mom;
  auto* mom_cmd = estimate_cmd->add_subcommand("mom", "Network or subset rate from block hashes");
  add_chain_options(mom_cmd, mom.chain);
  add_window_options(mom_cmd, mom.window);
  mom_cmd->add_option("--sigma", mom.sigma, "Seconds per interval")->capture_default_str();
  mom_cmd->add_option("--miners", mom.miners, "Only blocks of these miners (comma separated)")->delimiter(',');
  add_boot_options(mom_cmd, mom.boot);
  add_solve_options(mom_cmd, mom.solve);

  MomOptions comb;
  auto* comb_cmd = estimate_cmd->add_subcommand("combined", "Status reports plus MoM for non-reporting miners");
  add_chain_options(comb_cmd, comb.chain);
  add_window_options(comb_cmd, comb.window);
  comb_cmd->add_option("--reports", comb.reports, "Status reports file (JSON Lines)")->required();
  comb_cmd->add_option("--epsilon", comb.epsilon, "Chernoff level for the reporting miners");
  comb_cmd->add_option("--sigma", comb.sigma, "Seconds per interval")->capture_default_str();
  add_boot_options(comb_cmd, comb.boot);
  add_solve_options(comb_cmd, comb.solve);

  BoundsOptions bounds;
  auto* bounds_cmd = app.add_subcommand("bounds", "Chernoff deviation pi for n reports at level epsilon");
  bounds_cmd->add_option("--n", bounds.counts, "Report counts (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  bounds_cmd->add_option("--epsilon", bounds.epsilons, "Levels (comma separated)")
      ->delimiter(',')
      ->capture_default_str();

  RiskCmdOptions risk;
  auto* risk_cmd = app.add_subcommand("risk", "Per-depth double-spend assessment of one block");
  add_risk_options(risk_cmd, risk.risk);
  risk_cmd->add_option("--block", risk.block, "Block id to assess")->required();

  DepthOptions depth;
  auto* depth_cmd = app.add_subcommand("depth-analysis", "Release-depth distribution over sampled blocks");
  add_risk_options(depth_cmd, depth.risk);
  depth_cmd->add_option("--sample", depth.sample, "Blocks to sample")->capture_default_str();
  depth_cmd->add_flag("--per-block", depth.per_block, "Emit one row per sampled block instead of the CDF");

  ExperimentOptions exp;
  std::string experiment_name;
  auto* exp_cmd = app.add_subcommand("experiment", "Reproduction experiments (plot-ready tables)");
  exp_cmd->add_option("name", experiment_name,
                      "double-spend, status-accuracy, chernoff, mom-windows, deployment, coverage, depth, "
                      "fixture-windows")
      ->required()
      ->check(CLI::IsMember({"double-spend", "status-accuracy", "chernoff", "mom-windows", "deployment", "coverage",
                             "depth", "fixture-windows"}));
  exp_cmd->add_option("--seed", exp.seed, "Seed");
  exp_cmd->add_option("--trials", exp.trials, "Trials, windows, traces or samples, depending on the experiment");
  exp_cmd->add_flag("--summary", exp.summary, "Summary rows instead of raw per-trial values");
  exp_cmd->add_option("--q", exp.qs, "Attacker fractions (double-spend)")->delimiter(',');
  exp_cmd->add_option("--max-z", exp.max_z, "Deepest confirmation (double-spend)");
  exp_cmd->add_option("--qstar", exp.q_star, "Residual attacker fraction (double-spend)");
  exp_cmd->add_option("--mc-trials", exp.mc_trials, "Monte Carlo trials per cell, 0 skips (double-spend)");
  exp_cmd->add_option("--reports-per-block", exp.reports_per_block, "Reports per block per miner (depth)");
  exp_cmd->add_option("--mode", exp.mode, "point, worst or best (depth)")
      ->check(CLI::IsMember({"point", "worst", "best"}));
  exp_cmd->add_option("--chain-blocks", exp.chain_blocks, "Synthetic chain length (depth)");
  exp_cmd->add_option("--bootstrap", exp.boot.resamples, "Bootstrap resamples (coverage, fixture-windows)");
  exp_cmd->add_option("--percentiles", exp.boot.percentiles, "Low,high percentiles")->delimiter(',')->expected(2);
  exp_cmd->add_option("--bootstrap-scheme", exp.boot.scheme, "poisson-count or fixed-count")
      ->check(CLI::IsMember({"poisson-count", "fixed-count"}));
  add_chain_options(exp_cmd, exp.chain, false);
  exp_cmd->add_option("--window-blocks", exp.window_blocks, "Blocks per window (fixture-windows)");
  exp_cmd->add_option("--interval", exp.interval, "Nominal block interval for the naive estimate");

  std::string manifest_in;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a manifest and check outputs are byte-identical");
  replay_cmd->add_option("manifest", manifest_in, "Manifest written by an earlier run")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\nRun with --help for usage.\n";
    return exit_usage_error;
  }

  if (exp.boot.seed == 0 && exp.seed) exp.boot.seed = *exp.seed;

  if (simulate_cmd->parsed()) {
    s.subcommand = "simulate";
    cmd_simulate(sim, s);
  } else if (status_cmd->parsed()) {
    s.subcommand = "estimate status-reports";
    cmd_estimate_status(status, s);
  } else if (mom_cmd->parsed()) {
    s.subcommand = "estimate mom";
    cmd_estimate_mom(mom, s, false);
  } else if (comb_cmd->parsed()) {
    s.subcommand = "estimate combined";
    cmd_estimate_mom(comb, s, true);
  } else if (bounds_cmd->parsed()) {
    s.subcommand = "bounds";
    cmd_bounds(bounds, s);
  } else if (risk_cmd->parsed()) {
    s.subcommand = "risk";
    cmd_risk(risk, s);
  } else if (depth_cmd->parsed()) {
    s.subcommand = "depth-analysis";
    cmd_depth(depth, s);
  } else if (exp_cmd->parsed()) {
    s.subcommand = "experiment";
    cmd_experiment(experiment_name, exp, s);
  } else if (replay_cmd->parsed()) {
    return replay(manifest_in, s, out, err);
  }
  return exit_ok;
}

// Argument list of the recorded run without its output locations.
std::vector<std::string> strip_outputs(const std::vector<std::string>& argv) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < argv.size(); ++i) {
    const auto& a = argv[i];
    if (a == "--out" || a == "--manifest") {
      ++i;
      continue;
    }
    if (a.rfind("--out=", 0) == 0 || a.rfind("--manifest=", 0) == 0) continue;
    out.push_back(a);
  }
  return out;
}

int replay(const std::string& manifest_path, Session& s, std::ostream& out, std::ostream& err) {
  ordered_json m;
  try {
    m = ordered_json::parse(read_file(manifest_path));
  } catch (const ordered_json::exception& e) {
    throw Error("malformed manifest " + manifest_path + ": " + e.what());
  }
  if (m.value("tool", "") != "hashrate" || !m.contains("argv")) {
    throw Error(manifest_path + " is not a hashrate manifest");
  }
  if (m.value("version", "") != version()) {
    s.note("manifest was written by version " + m.value("version", "?") + ", this is " + version());
  }
  for (const auto& input : m["inputs"]) {
    const auto path = input.at("path").get<std::string>();
    if (file_digest(path) != input.at("sha256").get<std::string>()) {
      throw Error("input " + path + " changed since the manifest was written");
    }
  }

  auto args = strip_outputs(m["argv"].get<std::vector<std::string>>());
  const std::string kind = m.value("output_kind", "");
  if (kind == "directory" && s.global.out.empty()) throw UsageError("replaying simulate needs --out DIR");
  if (!s.global.out.empty()) {
    args.push_back("--out");
    args.push_back(s.global.out);
  }
  if (s.global.quiet && std::find(args.begin(), args.end(), "--quiet") == args.end()) args.push_back("--quiet");

  std::ostringstream captured;
  const int code = run(args, captured, err);
  if (code != exit_ok) return code;

  const auto& outputs = m["outputs"];
  std::size_t checked = 0;
  for (const auto& o : outputs) {
    const auto name = o.at("name").get<std::string>();
    std::string digest;
    if (s.global.out.empty()) {
      digest = sha256(captured.str()).to_hex();
    } else if (kind == "directory") {
      digest = file_digest(fs::path(s.global.out) / name);
    } else {
      digest = file_digest(s.global.out);
    }
    if (digest != o.at("sha256").get<std::string>()) throw Error("output " + name + " differs from the manifest");
    ++checked;
  }
  out << captured.str();
  s.note("replay reproduced " + std::to_string(checked) + " output(s) byte-identically");
  return exit_ok;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\nRun with --help for usage.\n";
    return exit_usage_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_data_error;
  }
}

} // namespace hashrate::cli
