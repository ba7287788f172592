#include <benchmark/benchmark.h>

#include "tic/families.hpp"
#include "tic/pde_solver.hpp"
#include "tic/simulate.hpp"

using namespace tic;

namespace {

ExecPolicy policy_of(const benchmark::State& st) { return st.range(0) ? ExecPolicy::openmp : ExecPolicy::serial; }

void BM_Theta0Family(benchmark::State& st) {
  const auto spec = discount_problem({});
  GridSpec g;
  g.x_lo = -2.5;
  g.x_hi = 2.5;
  g.nx = 81;
  g.nt = 81;
  const auto psi = StrategyTable::closed_form([](double, double x) { return -x; }, spec.u_lo, spec.u_hi);
  PdeOptions o;
  o.policy = policy_of(st);
  const auto th = solve_theta(spec, psi, g, o);
  const auto guess = extract_diagonal(terminal_theta0_family(spec, th, g), th);
  for (auto _ : st) benchmark::DoNotOptimize(solve_theta0_family(spec, psi, th, guess, g, o));
}

void BM_DifferenceQuotients(benchmark::State& st) {
  MeanVarParams p;
  const auto spec = meanvar_problem(p);
  const auto mv = meanvar_equilibrium(p.r, p.mu, p.sigma, p.gamma, p.T);
  MCConfig c;
  c.paths = 20000;
  c.policy = policy_of(st);
  std::vector<Spike> spikes;
  for (double e : c.eps)
    for (double u : c.u_grid) spikes.push_back({e, u});
  for (auto _ : st) benchmark::DoNotOptimize(difference_quotients(spec, mv.strategy, 0.25, p.x0, spikes, c));
}

void BM_SimulateForward(benchmark::State& st) {
  MeanVarParams p;
  const auto spec = meanvar_problem(p);
  const auto mv = meanvar_equilibrium(p.r, p.mu, p.sigma, p.gamma, p.T);
  MCConfig c;
  c.paths = 50000;
  c.policy = policy_of(st);
  for (auto _ : st) benchmark::DoNotOptimize(simulate_forward(spec, mv.strategy, 0.0, p.x0, c));
}

}  // namespace

// Argument 0 = serial reference, 1 = OpenMP.
BENCHMARK(BM_Theta0Family)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DifferenceQuotients)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateForward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
