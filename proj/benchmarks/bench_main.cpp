#include <random>

#include <benchmark/benchmark.h>

#include "stefan/conditions.hpp"
#include "stefan/rng.hpp"
#include "stefan/solver.hpp"

using namespace stefan;

static void BM_Philox(benchmark::State& state) {
  const CounterRng rng(7);
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(rng.normal(StreamPurpose::particle_increment, i++, 0));
}
BENCHMARK(BM_Philox);

static void BM_JumpScan(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-0.01, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(gen);
  for (auto _ : state) benchmark::DoNotOptimize(physical_jump_scan(v, n));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_JumpScan)->Arg(1 << 10)->Arg(1 << 17);

static void BM_Particles(benchmark::State& state) {
  const Density d = make_piecewise(0.5, 1.05, 0.5, 0.5);
  SolverConfig c;
  c.n_particles = static_cast<std::size_t>(state.range(0));
  c.T = 0.05;
  c.dt = 5e-4;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_particles(d, c).frontier.lambda.back());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.n_particles * c.steps()));
}
BENCHMARK(BM_Particles)->Arg(10'000)->Arg(100'000)->Unit(benchmark::kMillisecond);

static void BM_PsiRowSine(benchmark::State& state) {
  const Density d = PeriodicOscillatoryDensity::make(1.0, PeriodicProfile::sine());
  std::vector<double> mu(256);
  for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = static_cast<double>(i) / 255.0;
  for (auto _ : state) benchmark::DoNotOptimize(psi_row(d, 1e-3, mu));
}
BENCHMARK(BM_PsiRowSine)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
