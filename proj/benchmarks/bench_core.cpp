#include <benchmark/benchmark.h>

#include "mcghd/gig.hpp"
#include "mcghd/inference.hpp"
#include "mcghd/simulate.hpp"
#include "mcghd/specfun.hpp"

using namespace mcghd;

namespace {

Scenario make_data(int p, int n_per) {
  ScenarioSpec spec;
  spec.generator = Generator::kGHD;
  spec.p = p;
  spec.G = 2;
  spec.n_per_component = n_per;
  spec.seed = 7;
  return generate_scenario(spec);
}

}  // namespace

static void BM_LogBesselK(benchmark::State& state) {
  const double nu = static_cast<double>(state.range(0)) / 4.0;
  double x = 0.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_bessel_k(nu, x));
    x = x < 500.0 ? x * 1.1 : 0.01;
  }
}
BENCHMARK(BM_LogBesselK)->Arg(2)->Arg(6)->Arg(40)->Arg(200);

static void BM_GIGExpectations(benchmark::State& state) {
  double omega = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gig_expectations(GIGParams{omega, 1.3, -0.7}));
    omega = omega < 50.0 ? omega * 1.05 : 0.1;
  }
}
BENCHMARK(BM_GIGExpectations);

static void BM_EStep(benchmark::State& state) {
  const Scenario s = make_data(static_cast<int>(state.range(0)), 200);
  FitConfig cfg;
  cfg.family = Family::MCGHD;
  cfg.G = 2;
  cfg.max_iter = 5;
  const MixtureModel model = fit(s.data, cfg).model;
  for (auto _ : state) benchmark::DoNotOptimize(e_step(s.data, model));
  state.SetItemsProcessed(state.iterations() * s.data.rows());
}
BENCHMARK(BM_EStep)->Arg(2)->Arg(5)->Arg(10)->Unit(benchmark::kMicrosecond);

static void BM_Fit(benchmark::State& state) {
  const Scenario s = make_data(5, 200);
  FitConfig cfg;
  cfg.family = kAllFamilies[state.range(0)];
  cfg.G = 2;
  cfg.max_iter = 50;
  for (auto _ : state) benchmark::DoNotOptimize(fit(s.data, cfg));
  state.SetLabel(std::string(family_name(cfg.family)));
}
BENCHMARK(BM_Fit)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
