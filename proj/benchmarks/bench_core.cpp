#include <benchmark/benchmark.h>

#include <random>
#include <sstream>

#include "hashrate/chain_index.hpp"
#include "hashrate/io.hpp"
#include "hashrate/mom_estimator.hpp"
#include "hashrate/risk.hpp"
#include "hashrate/simulator.hpp"
#include "hashrate/status_estimator.hpp"

namespace {

using namespace hashrate;

SimConfig bench_config(double blocks, double reports_per_block) {
  std::vector<MinerSpec> miners;
  for (int i = 0; i < 10; ++i) miners.push_back({"m" + std::to_string(i), 1e11, reports_per_block});
  return make_sim_config(miners, 600.0, 600.0 * blocks, 1);
}

const SyntheticTrace& shared_trace() {
  static const SyntheticTrace trace = simulate(bench_config(400, 2.0));
  return trace;
}

void BM_ExpectedY(benchmark::State& state) {
  double beta = 1e-3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(expected_y(beta, 1e-9));
    beta *= 1.0000001;
  }
}
BENCHMARK(BM_ExpectedY);

void BM_SolveBeta(benchmark::State& state) {
  const double t = 1e-9;
  const double y = expected_y(1e3 * t, t);
  for (auto _ : state) benchmark::DoNotOptimize(solve_beta(y, t));
}
BENCHMARK(BM_SolveBeta);

void BM_Bootstrap(benchmark::State& state) {
  const ChainIndex index(shared_trace().headers);
  const auto window = index.window_ending_at(300, 50);
  const auto grid = build_interval_grid(index.headers(), window, 1.0);
  BootstrapConfig boot;
  boot.resamples = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(bootstrap_bounds(grid, {}, boot));
}
BENCHMARK(BM_Bootstrap)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_StatusEstimate(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::vector<StatusReport> reports(static_cast<std::size_t>(state.range(0)));
  for (auto& r : reports) {
    r.miner = "m";
    r.interval_seconds = 1.0;
    r.min_hash = HashValue::from_unit(sample_min_hash_unit(1e6, 0.0, rng));
  }
  for (auto _ : state) benchmark::DoNotOptimize(bounded_estimate(reports, 1.0, 0.05));
}
BENCHMARK(BM_StatusEstimate)->Arg(40)->Arg(720);

void BM_DoubleSpend(benchmark::State& state) {
  const auto z = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(revised_double_spend(0.2, z, 0.127));
}
BENCHMARK(BM_DoubleSpend)->Arg(6)->Arg(40);

void BM_Simulate(benchmark::State& state) {
  const auto cfg = bench_config(static_cast<double>(state.range(0)), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(simulate(cfg));
}
BENCHMARK(BM_Simulate)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_AssessBlock(benchmark::State& state) {
  const auto& trace = shared_trace();
  const ChainIndex index(trace.headers);
  RiskParams params;
  params.max_depth = 20;
  params.bootstrap.resamples = 1000;
  const auto id = index.main_at(200).id;
  for (auto _ : state) benchmark::DoNotOptimize(assess_block(index, trace.reports, id, params));
}
BENCHMARK(BM_AssessBlock)->Unit(benchmark::kMillisecond);

void BM_ParseHeaders(benchmark::State& state) {
  std::ostringstream out;
  write_headers(out, shared_trace().headers);
  const std::string text = out.str();
  for (auto _ : state) {
    std::istringstream in(text);
    benchmark::DoNotOptimize(parse_headers(in));
  }
}
BENCHMARK(BM_ParseHeaders)->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();
