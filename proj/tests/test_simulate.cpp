#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tic/families.hpp"
#include "tic/ode_riccati.hpp"
#include "tic/simulate.hpp"

using namespace tic;

namespace {

StrategyTable constant_law(double c, double lo = -10, double hi = 10) {
  return StrategyTable::closed_form([c](double, double) { return c; }, lo, hi);
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double sd(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

// dX = μX ds + σX dW, no control, cost E[X(T)].
ControlProblemSpec gbm(double mu, double sigma) {
  ControlProblemSpec s;
  s.name = "gbm";
  s.b = [mu](double, double x, double) { return mu * x; };
  s.sigma = [sigma](double, double x, double) { return sigma * x; };
  s.g = [](double, double, double, const Vec&, const Vec&) { return Vec{0, 0}; };
  s.h = [](double x) { return Vec{x, 0}; };
  s.g0 = [](double, double, double, double, double, const Vec&, const Vec&, double, double) { return 0.0; };
  s.h0 = [](double, double, double x, const Vec&) { return x; };
  s.cost_class = CostClass::bolza_condexp;
  s.cost_depends_on_anchor_time = false;
  s.cost_depends_on_anchor_state = false;
  s.x0 = 1.0;
  return s;
}

MCConfig mc(std::size_t paths, int steps = 80) {
  MCConfig c;
  c.paths = paths;
  c.steps_per_unit = steps;
  return c;
}

}  // namespace

TEST_CASE("zero coefficients keep every path at x0") {
  auto spec = gbm(0.0, 0.0);
  const auto e = simulate_forward(spec, constant_law(0), 0.0, 1.7, mc(64));
  for (double v : e.paths) CHECK(v == 1.7);
  CHECK(e.steps == 80);
  CHECK(e.terminal.size() == 64);
}

TEST_CASE("GBM terminal mean and weak order one") {
  const double mu = 1.0, sigma = 0.2;
  const auto spec = gbm(mu, sigma);
  const auto e = simulate_forward(spec, constant_law(0), 0.0, 1.0, mc(100000));
  const double m = mean(e.terminal), se = sd(e.terminal) / std::sqrt(e.terminal.size());
  // Euler's mean is (1 + μΔ)^N exactly.
  CHECK(std::abs(m - std::pow(1.0 + mu / 80, 80)) < 3 * se);

  auto bias = [&](int steps) {
    const auto en = simulate_forward(spec, constant_law(0), 0.0, 1.0, mc(100000, steps));
    return std::exp(mu) - mean(en.terminal);
  };
  const double ratio = bias(4) / bias(8);
  CHECK(ratio > 2.0 * 0.7);
  CHECK(ratio < 2.0 * 1.3);
}

TEST_CASE("mean-variance equilibrium mean follows the linear ODE") {
  MeanVarParams p;
  const auto spec = meanvar_problem(p);
  const auto mv = meanvar_equilibrium(p.r, p.mu, p.sigma, p.gamma, p.T);
  const auto e = simulate_forward(spec, mv.strategy, 0.0, p.x0, mc(100000));
  const double k = (p.mu - p.r) / (p.gamma * p.sigma * p.sigma);
  const double m_exact = p.x0 * std::exp(p.r * p.T) + (p.mu - p.r) * k * p.T;
  const double m = mean(e.terminal), se = sd(e.terminal) / std::sqrt(e.terminal.size());
  CHECK(std::abs(m - m_exact) < 3 * se);
}

TEST_CASE("paths are deterministic and independent of the execution policy") {
  MeanVarParams p;
  const auto spec = meanvar_problem(p);
  auto c = mc(5000);
  const auto a = simulate_forward(spec, constant_law(0.4), 0.0, 1.0, c);
  const auto b = simulate_forward(spec, constant_law(0.4), 0.0, 1.0, c);
  c.policy = ExecPolicy::serial;
  const auto s = simulate_forward(spec, constant_law(0.4), 0.0, 1.0, c);
  CHECK(a.paths == b.paths);
  CHECK(a.paths == s.paths);
  c.seed += 1;
  CHECK(simulate_forward(spec, constant_law(0.4), 0.0, 1.0, c).paths != a.paths);

  const std::vector<Spike> spikes{{0.1, -1.0}, {0.05, 1.0}};
  auto cq = mc(4000);
  const auto qa = difference_quotients(spec, constant_law(0.4), 0.25, 1.0, spikes, cq);
  cq.policy = ExecPolicy::serial;
  const auto qs = difference_quotients(spec, constant_law(0.4), 0.25, 1.0, spikes, cq);
  REQUIRE(qa.size() == qs.size());
  for (std::size_t i = 0; i < qa.size(); ++i) {
    CHECK(qa[i].quotient == qs[i].quotient);
    CHECK(qa[i].se == qs[i].se);
  }
}

TEST_CASE("antithetic pairs share normals with opposite signs") {
  auto spec = gbm(0.0, 1.0);
  spec.sigma = [](double, double, double) { return 1.0; };
  auto c = mc(1000);
  c.antithetic = true;
  const auto e = simulate_forward(spec, constant_law(0), 0.0, 0.0, c);
  for (std::size_t p = 0; p < 1000; p += 2) CHECK(e.terminal[p] == doctest::Approx(-e.terminal[p + 1]));
}

TEST_CASE("antithetic sampling lowers the standard error of a monotone functional") {
  MeanVarParams p;
  const auto spec = meanvar_problem(p);
  auto c = mc(20000);
  const auto plain = evaluate_cost(spec, constant_law(0.6), 0.0, 1.0, c);
  c.antithetic = true;
  const auto anti = evaluate_cost(spec, constant_law(0.6), 0.0, 1.0, c);
  CHECK(anti.se < plain.se);
  CHECK(std::abs(anti.value - plain.value) < 3 * (anti.se + plain.se));
}

TEST_CASE("quadrature costs of the deterministic examples") {
  const auto ex31 = example31_problem();
  const auto law = StrategyTable::closed_form([](double s, double) { return (s - 1.0) / 2.0; }, -10, 10);
  const auto j = evaluate_cost(ex31, law, 0.0, 0.0, mc(2));
  CHECK(std::abs(j.value - (-1.0 / 12.0)) < 1e-10);
  CHECK(j.se == 0.0);

  const auto st = stackelberg_problem();
  const auto leader = stackelberg_leader();
  auto F = [](double v) { return v * std::pow(std::log(v) + 1.0, 2) - 2.0 * v * std::log(v); };
  for (double t : {0.0, 0.3, 0.7}) {
    const auto pre = StrategyTable::closed_form([&leader, t](double s, double) { return leader.precommitted(s, t); },
                                                -10, 10);
    const double c = 2.0 - t;
    const double oracle = -(c / 4.0) * (F(1.0) - F(1.0 / c));
    CHECK(std::abs(evaluate_cost(st, pre, t, 0.0, mc(2)).value - oracle) < 1e-10);
  }
}

TEST_CASE("mean-field LQ cost under the open-loop optimum") {
  const auto spec = lq_problem(example41_lq(1.0), 1.0);
  const auto j = evaluate_cost(spec, constant_law(-0.5), 0.0, 1.0, mc(100000));
  CHECK(j.se > 0.0);
  CHECK(std::abs(j.value - 0.5) < 3 * j.se);
}

TEST_CASE("pre-committed mean-variance cost") {
  MeanVarParams p;
  const auto spec = meanvar_problem(p, -1e3, 1e3);
  const auto law = meanvar_precommitted(p, 0.0, p.x0);
  const auto j = evaluate_cost(spec, law, 0.0, p.x0, mc(100000));
  CHECK(std::abs(j.value - meanvar_precommitted_cost(p, 0.0, p.x0)) < 3 * j.se);
  CHECK(meanvar_precommitted_cost(p, 0.0, p.x0) < meanvar_equilibrium_cost(p, 0.0, p.x0));
}

TEST_CASE("general cost class is refused") {
  RecursiveParams rp;
  rp.kappa = 0.3;
  const auto spec = recursive_problem(rp);
  REQUIRE(spec.cost_class == CostClass::general);
  try {
    evaluate_cost(spec, constant_law(0, -5, 5), 0.0, 0.0, mc(100));
    FAIL("expected unsupported");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::unsupported);
  }
}

TEST_CASE("perturbed strategy semantics") {
  const auto base = StrategyTable::closed_form([](double s, double x) { return s + x; }, -10, 10);
  const auto pe = perturbed_strategy(base, 0.25, 0.125, -3.0, 1.0);
  CHECK(pe(0.25, 0.7) == -3.0);
  CHECK(pe(0.3, 0.7) == -3.0);
  CHECK(pe(0.375, 0.7) == base(0.375, 0.7));
  CHECK(pe(0.9, 0.7) == base(0.9, 0.7));
  CHECK(pe(0.2, 0.7) == base(0.2, 0.7));

  const auto flat = constant_law(0.4);
  const auto same = perturbed_strategy(flat, 0.5, 0.25, 0.4, 1.0);
  for (double s : {0.0, 0.5, 0.6, 0.75, 0.99})
    for (double x : {-1.0, 2.0}) CHECK(same(s, x) == flat(s, x));

  CHECK_THROWS_AS(perturbed_strategy(base, 0.9, 0.2, 0.0, 1.0), Error);
}

TEST_CASE("common random numbers: a spike equal to the strategy gives zero") {
  MeanVarParams p;
  const auto spec = meanvar_problem(p);
  const auto rows = difference_quotients(spec, constant_law(0.5), 0.25, 1.0, {{0.1, 0.5}, {0.05, 0.5}}, mc(2000));
  for (const auto& r : rows) {
    CHECK(r.quotient == 0.0);
    CHECK(r.j_eps == r.j_bar);
  }
}

TEST_CASE("MC grid checks") {
  auto c = mc(10);
  CHECK(mc_step_index(0.25, c) == 20);
  CHECK_THROWS_AS(mc_step_index(0.2501, c), Error);
  c.paths = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("pairwise summation") {
  std::vector<double> v(100001, 0.1);
  CHECK(pairwise_sum(v.data(), v.size()) == doctest::Approx(10000.1).epsilon(1e-14));
  CHECK(pairwise_sum(v.data(), 0) == 0.0);
}

TEST_CASE("stackelberg equilibrium passes the deterministic check") {
  const auto spec = stackelberg_problem();
  auto c = mc(2);
  c.u_grid = {-1.0, -0.5, 0.0, 0.5};
  const auto rep = verify_equilibrium(spec, constant_law(-0.5), {0.0, 0.25, 0.5}, c);
  CHECK(rep.pass);
  double at_vertex = INFINITY;
  for (const auto& r : rep.rows) {
    CHECK(r.quotient >= -1e-8);
    if (r.u == -0.5) at_vertex = std::min(at_vertex, std::abs(r.quotient));
  }
  CHECK(at_vertex < 1e-8);
  CHECK(rep.warnings.empty());
}

TEST_CASE("mean-variance verdicts: equilibrium passes, zero strategy fails") {
  MeanVarParams p;
  p.mu = 0.15;
  p.gamma = 1.0;
  const auto spec = meanvar_problem(p);
  const auto mv = meanvar_equilibrium(p.r, p.mu, p.sigma, p.gamma, p.T);
  const auto c = mc(20000);
  const auto good = verify_equilibrium(spec, mv.strategy, {0.0, 0.5}, c);
  CHECK(good.pass);
  for (const auto& r : good.rows) CHECK(r.se > 0.0);
  const auto bad = verify_equilibrium(spec, constant_law(0.0), {0.0}, c);
  CHECK_FALSE(bad.pass);
  CHECK(bad.min_quotient_smallest_eps < -0.05);
  CHECK_FALSE(bad.warnings.empty());
}

TEST_CASE("small ensembles raise a warning") {
  MeanVarParams p;
  auto c = mc(50);
  c.eps = {0.1};
  c.u_grid = {0.0};
  const auto rep = verify_equilibrium(meanvar_problem(p), constant_law(0.5), {0.5}, c);
  CHECK_FALSE(rep.warnings.empty());
}

TEST_CASE("inconsistency gaps") {
  InconsistencyOptions o;
  o.mc.paths = 2000;
  auto ex31 = demonstrate_inconsistency("ex31", o);
  for (const auto& r : ex31.rows) CHECK(r.gap == doctest::Approx(r.tau / 2).epsilon(1e-14));
  auto st = demonstrate_inconsistency("stackelberg", o);
  for (const auto& r : st.rows)
    CHECK(r.gap == doctest::Approx(0.5 * (std::log(2.0) - std::log(2.0 - r.tau))).epsilon(1e-12));
  auto ex41 = demonstrate_inconsistency("ex41", o);
  CHECK(ex41.rows[0].gap == 0.0);
  for (std::size_t i = 1; i < ex41.rows.size(); ++i) CHECK(ex41.rows[i].fraction > 0.95);
  auto mvp = demonstrate_inconsistency("meanvar_precommit", o);
  CHECK(mvp.rows[0].gap == 0.0);
  CHECK(mvp.rows.back().gap > 0.0);
  CHECK_THROWS_AS(demonstrate_inconsistency("nope", o), Error);
}

TEST_CASE("Feynman-Kac: linear terminal") {
  LinearParams lp;
  lp.a = 0.5;
  const auto spec = linear_problem(lp);
  GridSpec g;
  g.x_lo = -5;
  g.x_hi = 5;
  g.nx = 81;
  g.nt = 81;
  const auto psi = constant_law(0, -1, 1);
  const auto th = solve_theta(spec, psi, g);
  const auto th0 = solve_theta0_family(spec, psi, th, extract_diagonal(terminal_theta0_family(spec, th, g), th), g);
  const auto rep = check_feynman_kac(spec, psi, th, th0, {{0.0, 0.0}, {0.5, 1.0}}, mc(20000));
  for (const auto& pt : rep.points) CHECK(pt.theta == doctest::Approx(pt.x).epsilon(1e-12));
  CHECK(rep.max_abs_z <= 3.0);
}

TEST_CASE("Feynman-Kac refuses nonlinear generators") {
  RecursiveParams rp;
  rp.rho = 0.0;
  rp.kappa = 0.3;
  const auto spec = recursive_problem(rp);
  GridSpec g;
  g.x_lo = -4;
  g.x_hi = 4;
  g.nx = 41;
  g.nt = 41;
  const auto psi = constant_law(0, -5, 5);
  const auto th = solve_theta(spec, psi, g);
  const auto th0 = terminal_theta0_family(spec, th, g);
  CHECK_THROWS_AS(check_feynman_kac(spec, psi, th, th0, {{0.0, 0.0}}, mc(100)), Error);
}
