#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "tic/families.hpp"
#include "tic/ode_riccati.hpp"
#include "tic/pde_solver.hpp"

using namespace tic;

namespace {

GridSpec grid(double lo, double hi, int nx, int nt, double T = 1.0) {
  GridSpec g;
  g.x_lo = lo;
  g.x_hi = hi;
  g.nx = nx;
  g.nt = nt;
  g.T = T;
  return g;
}

const auto kZeroPsi = StrategyTable::closed_form([](double, double) { return 0.0; }, -1.0, 1.0);

// b = u, σ = 1, g = u²/2, h = cos x, cost Y(t). Used with a prescribed constant strategy.
ControlProblemSpec controlled_spec() {
  ControlProblemSpec s;
  s.name = "controlled";
  s.u_lo = -2;
  s.u_hi = 2;
  s.b = [](double, double, double u) { return u; };
  s.sigma = [](double, double, double) { return 1.0; };
  s.g = [](double, double x, double u, const Vec&, const Vec&) { return Vec{0.5 * u * u + 0.1 * x, 0}; };
  s.h = [](double x) { return Vec{std::cos(x), 0}; };
  s.g0 = [](double, double, double, double, double, const Vec&, const Vec&, double, double) { return 0.0; };
  s.h0 = [](double, double, double, const Vec& y) { return y[0]; };
  s.cost_class = CostClass::bolza_condexp;
  s.cost_depends_on_anchor_time = false;
  s.cost_depends_on_anchor_state = false;
  return s;
}

}  // namespace

TEST_CASE("step_parabolic keeps linear data exact") {
  const int n = 41;
  const double dx = 0.25, dt = 0.01;
  std::vector<double> next(n), a(n, 1.3), drift(n, 0.0), src(n, 0.0);
  for (int i = 0; i < n; ++i) next[i] = 2.0 - 0.7 * i * dx;
  for (Closure c : {Closure::linear, Closure::quadratic}) {
    const auto u = step_parabolic(next, a, drift, src, dt, dx, c);
    for (int i = 0; i < n; ++i) CHECK(std::abs(u[i] - next[i]) < 1e-12);
  }
  // A constant source adds dt per step.
  std::fill(src.begin(), src.end(), 1.0);
  const auto u = step_parabolic(next, a, drift, src, dt, dx);
  for (int i = 0; i < n; ++i) CHECK(std::abs(u[i] - next[i] - dt) < 1e-12);
}

TEST_CASE("step_parabolic rejects degenerate interior diffusion") {
  std::vector<double> next(10, 1.0), a(10, 0.0), z(10, 0.0);
  CHECK_THROWS_AS(step_parabolic(next, a, z, z, 0.01, 0.1), Error);
}

TEST_CASE("solve_theta: linear terminal, time source and quadratic terminal") {
  LinearParams p;
  p.a = 1.0;
  const auto g = grid(-5, 5, 201, 1001);

  p.terminal = LinearTerminal::x;
  auto th = solve_theta(linear_problem(p), kZeroPsi, g);
  for (int j = 0; j < g.nt; j += 100)
    for (int i = 0; i < g.nx; ++i) CHECK(std::abs(th.value(0, j, i) - g.x(i)) < 1e-12);

  p.terminal = LinearTerminal::zero;
  p.source = 1.0;
  th = solve_theta(linear_problem(p), kZeroPsi, g);
  for (int j = 0; j < g.nt; j += 100)
    for (int i = 0; i < g.nx; i += 10) CHECK(std::abs(th.value(0, j, i) - (g.T - g.s(j))) < 1e-12);

  p.source = 0.0;
  p.terminal = LinearTerminal::x2;
  auto err_on = [&](Closure c, double half_width) {
    auto gc = g;
    gc.closure = c;
    th = solve_theta(linear_problem(p), kZeroPsi, gc);
    double err = 0.0;
    for (int j = 0; j < gc.nt; ++j)
      for (int i = 0; i < gc.nx; ++i) {
        const double x = gc.x(i);
        if (std::abs(x) <= half_width) err = std::max(err, std::abs(th.value(0, j, i) - (x * x + 2 * (gc.T - gc.s(j)))));
      }
    return err;
  };
  CHECK(err_on(Closure::quadratic, 5.0) < 5e-3);
  // u_xx = 2 at the ends, so zero-curvature extrapolation pollutes the edges.
  CHECK(err_on(Closure::linear, 2.0) < 0.05);
  CHECK(err_on(Closure::linear, 4.5) > 0.1);
}

TEST_CASE("solve_theta obeys the maximum principle") {
  LinearParams p;
  p.a = 0.6;
  p.drift = 0.4;
  p.terminal = LinearTerminal::bumps;
  const auto g = grid(-4, 4, 161, 401);
  const auto th = solve_theta(linear_problem(p), kZeroPsi, g);
  double lo = INFINITY, hi = -INFINITY;
  for (int i = 0; i < g.nx; ++i) lo = std::min(lo, bumps(g.x(i))), hi = std::max(hi, bumps(g.x(i)));
  for (double v : th.v[0]) {
    CHECK(v >= lo - 1e-3);
    CHECK(v <= hi + 1e-3);
  }
}

TEST_CASE("Volterra kernel solve") {
  LinearParams p;
  p.a = 1.0;
  p.terminal = LinearTerminal::x;
  const auto g = grid(-8, 8, 81, 11);
  auto k = kernel_solve_linear(linear_problem(p), g);
  CHECK(std::abs(k.theta.at(0, 0.0, 0.5) - 0.5) < 1e-6);
  p.terminal = LinearTerminal::x2;
  k = kernel_solve_linear(linear_problem(p), g);
  CHECK(std::abs(k.theta.at(0, 0.0, 0.0) - 2.0) < 1e-4);
}

TEST_CASE("Volterra kernel agrees with finite differences") {
  LinearParams p;
  p.a = 0.5;
  p.drift = 0.3;
  p.source = 0.2;
  p.terminal = LinearTerminal::bumps;
  const auto g = grid(-6, 6, 241, 801);
  const auto fd = solve_theta(linear_problem(p), kZeroPsi, g);
  const auto k = kernel_solve_linear(linear_problem(p), grid(-6, 6, 241, 11));
  double err = 0.0;
  for (double x = -2; x <= 2; x += 0.25) err = std::max(err, std::abs(fd.at(0, 0.0, x) - k.theta.at(0, 0.0, x)));
  CHECK(err < 5e-3);
}

TEST_CASE("theta0 with identity terminal reproduces theta") {
  LinearParams p;
  p.a = 1.0;
  p.terminal = LinearTerminal::bumps;
  const auto spec = linear_problem(p);
  const auto g = grid(-5, 5, 101, 201);
  const auto th = solve_theta(spec, kZeroPsi, g);
  const auto guess = extract_diagonal(terminal_theta0_family(spec, th, g), th);
  const auto th0 = solve_theta0_family(spec, kZeroPsi, th, guess, g);
  const auto d = extract_diagonal(th0, th);
  for (std::size_t q = 0; q < d.d.size(); ++q) {
    CHECK(std::abs(d.d[q] - th.v[0][q]) < 1e-10);
    CHECK(std::abs(d.dy[0][q] - 1.0) < 1e-10);
    CHECK(std::abs(d.dx[q]) < 1e-10);
  }
}

TEST_CASE("theta0 refuses anchors above the diagonal") {
  DiscountParams p;
  const auto spec = discount_problem(p);
  const auto g = grid(-2.5, 2.5, 41, 41);
  const auto th = solve_theta(spec, kZeroPsi, g);
  const auto fam = terminal_theta0_family(spec, th, g);
  REQUIRE(fam.time_anchored());
  CHECK_NOTHROW(fam.raw(5, 0, 0, 5, 3));
  try {
    fam.raw(6, 0, 0, 5, 3);
    FAIL("expected upper_triangle");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::upper_triangle);
  }
}

TEST_CASE("separable terminal carries y analytically") {
  SeparableParams p;
  const auto spec = separable_problem(p);
  const auto g = grid(-2, 2, 81, 81);
  FixedPointOptions o;
  const auto fp = equilibrium_fixed_point(spec, g, o);
  REQUIRE(fp.theta0.separable());
  const auto& sep = *spec.separable;
  double var = 0.0;
  for (int k : {0, 20, 40})
    for (int l : {10, 40, 70})
      for (int j : {40, 60}) {
        if (fp.theta0.time_anchored() && k > j) continue;
        for (int i : {5, 40, 75}) {
          const double t = fp.theta0.time_anchored() ? g.s(k) : 0.0;
          const double xt = g.x(l);
          const double base = fp.theta0.value(k, l, j, i, {0.0, 0}) - sep.g(t, xt, {0.0, 0});
          for (double y : {-1.0, 0.5, 2.0})
            var = std::max(var, std::abs(fp.theta0.value(k, l, j, i, {y, 0}) - sep.g(t, xt, {y, 0}) - base));
        }
      }
  CHECK(var <= 1e-10);
  // q0 on the diagonal equals the analytic partial.
  for (int j : {0, 40, 79})
    for (int i : {10, 40, 70}) {
      const auto q = fp.bundle.at(j, i);
      const double y = fp.theta.value(0, j, i);
      CHECK(std::abs(fp.bundle.dy[0][q] - sep.g_y(g.s(j), g.x(i), {y, 0})[0]) < 1e-8);
    }
}

TEST_CASE("minimize_hamiltonian") {
  ControlProblemSpec s;
  s.u_lo = -10;
  s.u_hi = 10;
  s.b = [](double, double, double) { return 0.0; };
  s.sigma = [](double, double, double) { return 0.0; };
  s.g = [](double, double, double, const Vec&, const Vec&) { return Vec{0, 0}; };
  s.h = [](double) { return Vec{0, 0}; };
  s.g0 = [](double, double, double, double, double u, const Vec&, const Vec&, double, double) { return u * u - u; };
  s.h0 = [](double, double, double, const Vec&) { return 0.0; };
  CHECK(minimize_hamiltonian(s, DiagonalPoint{}) == doctest::Approx(0.5).epsilon(1e-8));

  // Minimizer at the boundary of U.
  s.u_hi = 0.2;
  CHECK(minimize_hamiltonian(s, DiagonalPoint{}) == doctest::Approx(0.2).epsilon(1e-8));

  const auto st = stackelberg_problem();
  for (double sv : {0.0, 0.4, 0.9})
    for (double y : {-1.0, 0.0, 3.0}) {
      DiagonalPoint dp;
      dp.s = sv;
      dp.theta = {y, 0};
      CHECK(minimize_hamiltonian(st, dp) == doctest::Approx(-0.5).epsilon(1e-8));
    }
}

TEST_CASE("fixed point: control-free problem converges at once") {
  LinearParams p;
  p.terminal = LinearTerminal::bumps;
  const auto fp = equilibrium_fixed_point(linear_problem(p), grid(-5, 5, 81, 81));
  CHECK(fp.converged);
  CHECK(fp.fixed_point_iterate <= 1);
}

TEST_CASE("fixed point: mean-variance strategy matches the closed form") {
  MeanVarParams p;
  const auto spec = meanvar_problem(p);
  auto g = default_grid(spec, p.sigma);
  FixedPointOptions o;
  o.pde.freeze_control_diffusion = true;
  const auto fp = equilibrium_fixed_point(spec, g, o);
  REQUIRE(fp.converged);
  CHECK(fp.log.back().max() < 1e-6);
  CHECK(fp.log.size() <= 50);
  const double k = (p.mu - p.r) / (p.gamma * p.sigma * p.sigma);
  double err = 0.0;
  for (int j = 0; j < g.nt - 1; ++j)
    for (int i = g.nx / 4; i < 3 * g.nx / 4; ++i) {
      const double exact = k * std::exp(-p.r * (p.T - g.s(j)));
      err = std::max(err, std::abs(fp.psi_nodes[static_cast<std::size_t>(j) * g.nx + i] - exact) / exact);
    }
  CHECK(err < 1e-2);
}

TEST_CASE("fixed point: recursive cost solves the classical HJB") {
  RecursiveParams p;
  const auto spec = recursive_problem(p);
  const auto g = grid(-5, 5, 161, 801);
  const auto fp = equilibrium_fixed_point(spec, g);
  REQUIRE(fp.converged);
  // Cost Y(t): the diagonal value is Θ itself.
  for (std::size_t q = 0; q < fp.bundle.d.size(); q += 97) CHECK(std::abs(fp.bundle.d[q] - fp.theta.v[0][q]) < 1e-10);

  // Θ_s + ½σ²Θ_xx + min_u[uΘ_x + u²/2] − ρΘ + ℓ sin x = 0 with the minimum −Θ_x²/2.
  double res = 0.0;
  const double a = 0.5 * p.sigma * p.sigma;
  for (int j = 1; j < g.nt - 1; j += 20)
    for (int i = 40; i < g.nx - 40; ++i) {
      const double ts = (fp.theta.value(0, j + 1, i) - fp.theta.value(0, j - 1, i)) / (2 * g.dt());
      const double tx = fp.theta.dx(0, j, i), txx = fp.theta.dxx(0, j, i), th = fp.theta.value(0, j, i);
      const double r = ts + a * txx - 0.5 * tx * tx - p.rho * th + p.ell * std::sin(g.x(i));
      res = std::max(res, std::abs(r));
    }
  CHECK(res < 5e-3);
}

TEST_CASE("perturbation with the unperturbed control changes nothing") {
  const auto spec = controlled_spec();
  const auto g = grid(-5, 5, 101, 101);
  const double c = 0.3;
  const std::vector<double> psi(static_cast<std::size_t>(g.nx) * g.nt, c);
  const auto th = solve_theta(spec, psi, g);
  const auto guess = extract_diagonal(terminal_theta0_family(spec, th, g), th);
  const auto th0 = solve_theta0_family(spec, psi, th, guess, g);
  const auto bundle = extract_diagonal(th0, th);
  const auto pr = solve_perturbation(spec, th, th0, bundle, psi, 0.2, 0.1, c, g);
  CHECK(pr.theta_gap <= 1e-10);
  for (std::size_t i = 0; i < pr.j_eps.size(); ++i) CHECK(std::abs(pr.j_eps[i] - pr.j_bar[i]) <= 1e-10);
  CHECK(std::abs(pr.quotient(0.4)) <= 1e-8);

  // A different control moves the window field, less so for shorter windows.
  const auto p1 = solve_perturbation(spec, th, th0, bundle, psi, 0.2, 0.2, -1.0, g);
  const auto p2 = solve_perturbation(spec, th, th0, bundle, psi, 0.2, 0.1, -1.0, g);
  const auto p3 = solve_perturbation(spec, th, th0, bundle, psi, 0.2, 0.05, -1.0, g);
  CHECK(p1.theta_gap > p2.theta_gap);
  CHECK(p2.theta_gap > p3.theta_gap);
  CHECK(p3.theta_gap > 0.0);
  // Observed rate at least ε^{1/4}.
  CHECK(p3.theta_gap / p1.theta_gap <= std::pow(0.25, 0.25) + 1e-12);
}

TEST_CASE("perturbation window must sit on the grid") {
  const auto spec = controlled_spec();
  const auto g = grid(-5, 5, 41, 41);
  const std::vector<double> psi(static_cast<std::size_t>(g.nx) * g.nt, 0.0);
  const auto th = solve_theta(spec, psi, g);
  const auto th0 = solve_theta0_family(spec, psi, th, extract_diagonal(terminal_theta0_family(spec, th, g), th), g);
  CHECK_THROWS_AS(solve_perturbation(spec, th, th0, extract_diagonal(th0, th), psi, 0.2013, 0.1, 0.0, g), Error);
}

TEST_CASE("serial and OpenMP fixed points are bit-identical") {
  DiscountParams p;
  const auto spec = discount_problem(p);
  const auto g = grid(-2.5, 2.5, 41, 41);
  FixedPointOptions a, b;
  a.pde.policy = ExecPolicy::serial;
  b.pde.policy = ExecPolicy::openmp;
  const auto fa = equilibrium_fixed_point(spec, g, a);
  const auto fb = equilibrium_fixed_point(spec, g, b);
  CHECK(fa.psi_nodes == fb.psi_nodes);
  CHECK(fa.bundle.d == fb.bundle.d);
  CHECK(fa.log.size() == fb.log.size());
}

TEST_CASE("grid validation") {
  auto g = grid(1, 0, 41, 41);
  CHECK_THROWS_AS(g.validate(), Error);
  g = grid(0, 1, 2, 41);
  CHECK_THROWS_AS(g.validate(), Error);
  g = grid(-1, 1, 21, 11);
  CHECK(g.x(g.nx - 1) == 1.0);
  CHECK(g.s(g.nt - 1) == 1.0);
}

TEST_CASE("cubic interpolation is exact for cubics") {
  std::vector<double> v;
  for (int i = 0; i < 20; ++i) {
    const double x = -1 + 0.1 * i;
    v.push_back(x * x * x - 2 * x + 1);
  }
  for (double x : {-0.73, 0.0, 0.41, 0.66}) CHECK(cubic_uniform(v, -1, 0.1, x) == doctest::Approx(x * x * x - 2 * x + 1));
}
