#include <benchmark/benchmark.h>

#include "imphopf/curves.hpp"
#include "imphopf/equilibria.hpp"
#include "imphopf/flow.hpp"
#include "imphopf/globalbif.hpp"

using namespace imphopf;

namespace {

ModelParams make(PerturbationKind k, double mu, double nu, double eps = 1.0) {
  ModelParams p;
  p.kind = k;
  p.mu = mu;
  p.nu = nu;
  p.epsilon = eps;
  p.alpha0 = kPi / 4;
  return p;
}

const PerturbationKind kKinds[] = {PerturbationKind::constant(), PerturbationKind::zm(2), PerturbationKind::mixed(),
                                   PerturbationKind::quadratic(), PerturbationKind::zm(3), PerturbationKind::zm(5)};

void BM_Rhs(benchmark::State& state) {
  const ModelParams p = make(kKinds[state.range(0)], 0.4, 0.3);
  State s{0.3, -0.2};
  for (auto _ : state) {
    s = rhs(p, s);
    s = {0.3 + 1e-3 * s.x, -0.2 + 1e-3 * s.y};
    benchmark::DoNotOptimize(s);
  }
  state.SetLabel(p.kind.name());
}
BENCHMARK(BM_Rhs)->DenseRange(0, 5);

void BM_FixedPoints(benchmark::State& state) {
  const PerturbationKind k = kKinds[state.range(0)];
  const ModelParams p = k.tag() == PerturbationTag::ZmResidual && k.m() >= 4 ? make(k, 0.7, 0.7, 0.01) : make(k, 1.6, 0.19);
  for (auto _ : state) benchmark::DoNotOptimize(fixed_points(p));
  state.SetLabel(k.name());
}
BENCHMARK(BM_FixedPoints)->DenseRange(0, 5);

void BM_CurvesConst(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(curves_const(kPi / 4));
}
BENCHMARK(BM_CurvesConst)->Unit(benchmark::kMillisecond);

void BM_Integrate(benchmark::State& state) {
  const ModelParams p = make(PerturbationKind::zm(2), 1.6, 0.19);
  for (auto _ : state) benchmark::DoNotOptimize(integrate(p, {2.0, 0.0}, 100.0));
}
BENCHMARK(BM_Integrate)->Unit(benchmark::kMillisecond);

void BM_LimitCycle(benchmark::State& state) {
  const ModelParams p = make(PerturbationKind::zm(2), 1.6, 0.19);
  for (auto _ : state) benchmark::DoNotOptimize(find_limit_cycle(p, {2.0, 0.0}));
}
BENCHMARK(BM_LimitCycle)->Unit(benchmark::kMillisecond);

void BM_Portrait(benchmark::State& state) {
  const ModelParams p = make(PerturbationKind::zm(2), 0.5, -0.66);
  PortraitOptions opt;
  opt.jobs = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(portrait(p, opt));
}
BENCHMARK(BM_Portrait)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_LocateBoundary(benchmark::State& state) {
  const ParamPath path{make(PerturbationKind::zm(2), 0, 0), {3.0, 1.3}, {3.0, 1.7}};
  for (auto _ : state) benchmark::DoNotOptimize(locate_boundary(path));
}
BENCHMARK(BM_LocateBoundary)->Unit(benchmark::kMillisecond);

void BM_DegenerateTB(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(degenerate_tb_check(kPi / 4));
}
BENCHMARK(BM_DegenerateTB)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
