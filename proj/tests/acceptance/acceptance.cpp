// Acceptance suite. Runs every criterion at full scale, prints one PASS/FAIL
// line each and exits non-zero when any fails.
//
// usage: hashrate_acceptance FIXTURE_DIR [criterion ...]

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hashrate/chain_index.hpp"
#include "hashrate/experiments.hpp"
#include "hashrate/io.hpp"
#include "hashrate/mom_estimator.hpp"
#include "hashrate/risk.hpp"

namespace {

using namespace hashrate;
namespace ex = hashrate::experiments;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome double_spend_closed_form() {
  const double p = nakamoto_double_spend(0.127, 6);
  bool ok = p >= 0.0005 && p <= 0.0015;
  std::ostringstream detail;
  detail << fmt("P(0.127, 6) = %.6g", p);

  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> q_dist(0.02, 0.45);
  std::uniform_int_distribution<int> z_dist(1, 20);
  const std::size_t trials = 1'000'000;
  int agree = 0;
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double q = q_dist(rng);
    const auto z = static_cast<std::uint64_t>(z_dist(rng));
    const double exact = nakamoto_double_spend(q, z);
    const auto mc = monte_carlo_double_spend(q, z, trials, 100 + static_cast<std::uint64_t>(i));
    // Standard error of the estimator itself, so a zero-win run is judged fairly.
    const double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(trials));
    const double score = se > 0.0 ? std::abs(mc.probability - exact) / se : 0.0;
    worst = std::max(worst, score);
    agree += score <= 3.0 ? 1 : 0;
  }
  ok = ok && agree == 20;
  detail << fmt("; MC within 3 SE for %d/20 pairs (max %.2f SE)", agree, worst);
  return {ok, detail.str()};
}

Outcome status_consistency() {
  ex::StatusAccuracyConfig cfg; // n = 40, 240, 480, 720 at 10^4 trials
  const auto series = ex::status_report_accuracy(cfg);
  bool tightening = true;
  std::ostringstream detail;
  detail << "P90-P10:";
  double prev = INFINITY;
  for (const auto& s : series) {
    const double idr = ex::interdecile_range(s.ratios);
    tightening = tightening && idr < prev;
    prev = idr;
    detail << fmt(" n=%g %.4f", s.parameter, idr);
  }
  const auto& last = series.back().ratios;
  std::size_t inside = 0;
  for (double r : last) inside += (r >= 0.9 && r <= 1.1) ? 1 : 0;
  const double frac = static_cast<double>(inside) / static_cast<double>(last.size());
  detail << fmt("; n=720 within [0.9, 1.1]: %.4f", frac);
  return {tightening && frac >= 0.99, detail.str()};
}

Outcome chernoff_validity() {
  ex::ChernoffValidityConfig cfg; // {40, 240, 720} x {0.05, 0.1, 0.2, 0.5} at 10^5 trials
  const auto cells = ex::chernoff_validity(cfg);
  std::size_t ok = 0;
  double margin = INFINITY;
  for (const auto& c : cells) {
    const bool cell = c.upper_frequency <= c.upper_bound && c.lower_frequency <= c.lower_bound;
    ok += cell ? 1 : 0;
    margin = std::min({margin, c.upper_bound - c.upper_frequency, c.lower_bound - c.lower_frequency});
  }
  return {ok == cells.size(),
          fmt("%zu/%zu cells with both tails under the bound (smallest slack %.3g)", ok, cells.size(), margin)};
}

double quadrature_expected_y(double beta, double t) {
  auto f = [beta](double y) { return y * std::exp(-y / beta) / beta; };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, t, 15, 1e-14);
}

Outcome mom_inversion() {
  const double t = 1e-9;
  const MomSolveConfig plus;
  MomSolveConfig minus;
  minus.branch = Branch::minus;
  bool ok = true;
  double worst_residual = 0.0;
  double worst_quad = 0.0;
  for (double ratio : {1e-2, 0.5, 1.0, 2.0, 10.0, 1e3, 1e6}) {
    const double beta = ratio * t;
    const double y = expected_y(beta, t);
    const auto& cfg = beta < peak_beta(t) ? minus : plus;
    const double solved = solve_beta(y, t, cfg);
    // Tolerance induced by tau: the residual is bounded by construction, and
    // the relative beta error by tau over the local elasticity of E[Y].
    const double residual = std::abs(expected_y(solved, t) - y) / y;
    worst_residual = std::max(worst_residual, residual);
    ok = ok && residual <= cfg.tau;
    const double h = 1e-4 * beta;
    const double elasticity = std::abs((expected_y(beta + h, t) - expected_y(beta - h, t)) / (2.0 * h) * beta / y);
    ok = ok && std::abs(solved / beta - 1.0) <= 10.0 * cfg.tau / elasticity + 1e-15;
    const double q = std::abs(y / quadrature_expected_y(beta, t) - 1.0);
    worst_quad = std::max(worst_quad, q);
    ok = ok && q <= 1e-10;
  }
  return {ok, fmt("max relative residual %.2g (tau %.0g); max quadrature error %.2g", worst_residual, plus.tau,
                  worst_quad)};
}

Outcome mom_accuracy() {
  ex::MomWindowConfig cfg; // 100, 500, 1000, 5000 s windows, 600 each
  const auto series = ex::mom_window_accuracy(cfg);
  bool ok = true;
  double prev = INFINITY;
  std::ostringstream detail;
  detail << "P90-P10:";
  for (const auto& s : series) {
    const double idr = ex::interdecile_range(s.ratios);
    ok = ok && s.ratios.size() >= 500 && idr < prev;
    prev = idr;
    detail << fmt(" %gs %.3f (n=%zu)", s.parameter, idr, s.ratios.size());
  }
  const double med = ex::median(series.back().ratios);
  ok = ok && med >= 0.85 && med <= 1.15;
  detail << fmt("; median at 5000 s %.3f", med);
  return {ok, detail.str()};
}

Outcome incremental_deployment() {
  ex::DeploymentConfig cfg; // 10 miners, 8-block windows, 15 s reports, 500 traces x 6 windows
  const auto points = ex::incremental_deployment(cfg);
  std::vector<double> means;
  std::vector<double> halves;
  std::size_t fewest = SIZE_MAX;
  for (const auto& p : points) {
    means.push_back(ex::mean(p.errors));
    halves.push_back(ex::ci95_half_width(p.errors));
    fewest = std::min(fewest, p.errors.size());
  }
  bool monotone = true;
  for (std::size_t i = 1; i < means.size(); ++i) {
    // An increase only counts when the two intervals separate.
    if (means[i] - halves[i] > means[i - 1] + halves[i - 1]) monotone = false;
  }
  const bool start = means.front() >= 0.30 && means.front() <= 0.40;
  return {start && monotone && fewest >= 1000,
          fmt("mean error %.3f at 0 reporters -> %.4f at %zu; monotone within CIs: %s; windows per point %zu",
              means.front(), means.back(), points.size() - 1, monotone ? "yes" : "no", fewest)};
}

Outcome bootstrap_coverage() {
  ex::CoverageConfig cfg; // 1000 windows of 50 expected blocks, 5/95, 10^4 resamples
  const auto r = ex::bootstrap_coverage(cfg);
  const double c = r.coverage();
  return {r.windows >= 1000 && c >= 0.85 && c <= 0.95,
          fmt("coverage %.3f over %zu windows (truth below %zu, above %zu)", c, r.windows, r.true_below,
              r.true_above)};
}

Outcome depth_analysis() {
  ex::DepthExperimentConfig worst; // 10 miners, 1200 blocks, 300 samples
  worst.reports_per_block = 10.0;
  worst.params.mode = BoundMode::worst;
  const auto a = ex::depth_experiment(worst);
  ex::DepthExperimentConfig point;
  point.reports_per_block = 1.0;
  point.params.mode = BoundMode::point;
  const auto b = ex::depth_experiment(point);
  const auto p99 = a.quantile(0.99);
  const auto p90 = b.quantile(0.90);
  const bool ok = a.samples.size() >= 300 && b.samples.size() >= 300 && p99 && *p99 <= 15 && p90 && *p90 <= 6;
  auto show = [](const std::optional<std::uint64_t>& v) { return v ? std::to_string(*v) : std::string("never"); };
  return {ok, "worst-case, 10 reports/block: P99 depth " + show(p99) + "; point, 1 report/block: P90 depth " +
                  show(p90) + fmt(" (%zu samples each)", a.samples.size())};
}

Outcome zero_fraction_collapse() {
  namespace mp = boost::multiprecision;
  bool exact = true;
  double worst = 0.0;
  for (unsigned z = 0; z <= 30; ++z) {
    const double got = revised_double_spend(0.0, z, 0.127);
    const double oracle = static_cast<double>(mp::cpp_rational(mp::pow(mp::cpp_int(127), z), mp::pow(mp::cpp_int(873), z)));
    const double rel = std::abs(got - oracle) / oracle;
    worst = std::max(worst, rel);
    // Exact up to rounding of the double inputs 0.127 and 0.873.
    exact = exact && rel <= 64 * std::numeric_limits<double>::epsilon();
  }
  std::uint64_t minimal = 0;
  while (revised_double_spend(0.0, minimal, 0.127) > 1e-3) ++minimal;
  return {exact && minimal == 4, fmt("max relative deviation %.2g; minimal z = %llu", worst,
                                     static_cast<unsigned long long>(minimal))};
}

Outcome fixture_sanity(const std::filesystem::path& dir) {
  struct Fixture {
    const char* file;
    ChainKind kind;
  };
  bool ok = true;
  std::ostringstream detail;
  for (const Fixture f : {Fixture{"bitcoin_headers.jsonl", ChainKind::bitcoin},
                          Fixture{"ethereum_headers.jsonl", ChainKind::ethereum}}) {
    const auto ds = read_headers(dir / f.file, f.kind);
    const ChainIndex index(ds.headers);
    ex::FixtureWindowConfig cfg;
    cfg.window_blocks = 50;
    cfg.block_interval = chain_params(f.kind).block_interval_seconds;
    if (f.kind == ChainKind::ethereum) cfg.bootstrap = BootstrapConfig{};
    const auto windows = ex::fixture_windows(index, cfg);
    std::size_t within = 0;
    std::size_t narrower = 0;
    std::size_t compared = 0;
    for (const auto& w : windows) {
      const double ratio = w.mom_rate / w.naive_rate;
      within += (ratio >= 0.5 && ratio <= 2.0) ? 1 : 0;
      if (cfg.bootstrap && w.width_without_ommers > 0.0) {
        ++compared;
        narrower += w.width_with_ommers < w.width_without_ommers ? 1 : 0;
      }
    }
    const double share = windows.empty() ? 0.0 : static_cast<double>(within) / static_cast<double>(windows.size());
    ok = ok && !windows.empty() && share >= 0.9;
    detail << fmt("%s: %zu/%zu windows within 2x of naive", to_string(f.kind).data(), within, windows.size());
    if (cfg.bootstrap) {
      const double n = compared ? static_cast<double>(narrower) / static_cast<double>(compared) : 0.0;
      ok = ok && compared > 0 && n >= 0.8;
      detail << fmt(", narrower with ommers in %zu/%zu", narrower, compared);
    }
    detail << "; ";
  }
  std::string d = detail.str();
  d.resize(d.size() - 2);
  return {ok, d};
}

} // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s FIXTURE_DIR [criterion ...]\n", argv[0]);
    return 2;
  }
  const std::filesystem::path fixtures = argv[1];
  std::set<int> only;
  for (int i = 2; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<Criterion> criteria{
      {1, "double-spend closed form", 30, double_spend_closed_form},
      {2, "status-report consistency", 60, status_consistency},
      {3, "Chernoff validity", 120, chernoff_validity},
      {4, "MoM inversion", 10, mom_inversion},
      {5, "MoM accuracy ordering", 120, mom_accuracy},
      {6, "incremental deployment", 300, incremental_deployment},
      {7, "bootstrap coverage", 600, bootstrap_coverage},
      {8, "depth analysis with reports", 600, depth_analysis},
      {9, "zero-fraction collapse", 1, zero_fraction_collapse},
      {10, "fixture sanity", 60, [&] { return fixture_sanity(fixtures); }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.time_limit_seconds;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("%s C%d %s: %s [%.2f s, limit %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), secs, c.time_limit_seconds, in_time ? "" : ", too slow");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
