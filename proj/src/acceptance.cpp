#include "tic/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "tic/families.hpp"
#include "tic/io.hpp"
#include "tic/ode_riccati.hpp"
#include "tic/simulate.hpp"

namespace tic {

namespace {

std::string sci(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

/// Accumulates named checks into one verdict.
struct Checks {
  bool ok = true;
  std::vector<std::string> parts;

  void le(const std::string& name, double v, double tol) {
    const bool p = v <= tol;  // NaN fails
    ok = ok && p;
    parts.push_back(name + "=" + sci(v) + (p ? "<=" : " NOT<=") + sci(tol));
  }
  void ge(const std::string& name, double v, double tol) {
    const bool p = v >= tol;
    ok = ok && p;
    parts.push_back(name + "=" + sci(v) + (p ? ">=" : " NOT>=") + sci(tol));
  }
  void flag(const std::string& name, bool p) {
    ok = ok && p;
    parts.push_back(name + (p ? " ok" : " FAILED"));
  }
  void info(const std::string& s) { parts.push_back(s); }
  std::string str() const {
    std::string s;
    for (std::size_t k = 0; k < parts.size(); ++k) s += (k ? "; " : "") + parts[k];
    return s;
  }
};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

MeanVarParams mv_params() {
  MeanVarParams p;
  p.mu = 0.15;
  p.r = 0.03;
  p.sigma = 0.2;
  p.gamma = 1.0;
  p.T = 1.0;
  p.x0 = 1.0;
  return p;
}

double mv_closed_form(const MeanVarParams& p, double s) {
  return (p.mu - p.r) / (p.gamma * p.sigma * p.sigma) * std::exp(-p.r * (p.T - s));
}

GridSpec mv_grid(int nx, int nt) {
  GridSpec g;
  g.x_lo = -2.0;
  g.x_hi = 4.0;
  g.nx = nx;
  g.nt = nt;
  g.T = 1.0;
  return g;
}

struct Context {
  AcceptanceOptions opt;
  std::filesystem::path dir;
  std::optional<FixedPointResult> mv_fp;  // shared by criteria 6, 8, 10

  MCConfig mc() const {
    MCConfig c;
    c.paths = opt.paths;
    c.steps_per_unit = opt.steps_per_unit;
    c.seed = opt.seed;
    c.policy = opt.policy;
    return c;
  }
  FixedPointOptions fp_options() const {
    FixedPointOptions o;
    o.pde.freeze_control_diffusion = true;
    o.pde.policy = opt.policy;
    return o;
  }
  const FixedPointResult& meanvar_fp() {
    if (!mv_fp) mv_fp = equilibrium_fixed_point(meanvar_problem(mv_params()), mv_grid(121, 201), fp_options());
    return *mv_fp;
  }
  std::filesystem::path file(const std::string& name) const { return dir / name; }
};

// 1. Mean-variance Riccati system against its closed forms.
void c1(Context& ctx, CriterionResult& res, Checks& ck) {
  const double r = 0.03, mu = 0.08, sigma = 0.2, gamma = 2.0, T = 1.0;
  const auto mv = meanvar_equilibrium(r, mu, sigma, gamma, T, 10000);
  const auto tr = solve_riccati_lq(meanvar_lq(r, mu, sigma, gamma, T), 10000);
  double e1 = 0, ev = 0, e2 = 0, e3 = 0, e16 = 0;
  for (std::size_t n = 0; n < tr.t.size(); ++n) {
    const double t = tr.t[n];
    e1 = std::max(e1, rel(tr.phi[0][n], gamma * std::exp(2.0 * r * (T - t))));
    ev = std::max(ev, rel(tr.v[n], (mu - r) / (gamma * sigma * sigma) * std::exp(-r * (T - t))));
    e2 = std::max(e2, std::abs(tr.phi[1][n] + gamma));
    e3 = std::max(e3, std::abs(tr.phi[2][n]));
    e16 = std::max(e16, std::abs(tr.phi[0][n] - gamma * tr.phi[5][n] * tr.phi[5][n]));
  }
  ck.le("phi1 rel err", e1, 1e-8);
  ck.le("v rel err", ev, 1e-8);
  ck.le("reduced-system phi1 rel err", mv.max_rel_err_phi1, 1e-8);
  ck.le("reduced-system v rel err", mv.max_rel_err_v, 1e-8);
  ck.le("|phi2+gamma|", e2, 1e-8);
  ck.le("|phi3|", e3, 1e-8);
  ck.le("|phi1-gamma*phi6^2|", e16, 1e-8);
  write_lq_csv(ctx.file("c1_meanvar_riccati.csv"), tr);
  res.files.push_back("c1_meanvar_riccati.csv");
}

// 2. Seven-equation LQ system with the mean-field substitution vs the two-equation solver.
void c2(Context& ctx, CriterionResult& res, Checks& ck) {
  auto cross = [](const LQSpec& lq) {
    const auto sub = meanfield_from_riccati(solve_riccati_lq(lq, 10000));
    const auto mf = solve_meanfield_riccati(lq.A, lq.B, lq.C, lq.D, lq.Q, lq.R, lq.G1, lq.G2, lq.T, 10000);
    double d = 0.0;
    for (std::size_t n = 0; n < mf.t.size(); ++n)
      d = std::max({d, std::abs(sub.phi[n] - mf.phi[n]), std::abs(sub.phihat[n] - mf.phihat[n])});
    return std::make_pair(d, mf);
  };
  const auto [d41, mf41] = cross(example41_lq(1.0));
  ck.le("ex41 max diff", d41, 1e-8);

  CsvWriter w(ctx.file("c2_lq_crossroute.csv"), {"draw", "A", "B", "C", "D", "Q", "R", "G1", "G2", "max_diff"});
  std::mt19937_64 eng(ctx.opt.seed);
  std::uniform_real_distribution<double> sym(-1.0, 1.0), pos(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double A = sym(eng), B = sym(eng), C = sym(eng), D = sym(eng);
    const double Q = pos(eng), R = 1.0 + pos(eng), G1 = pos(eng), G2 = pos(eng);
    LQSpec lq;
    lq.A = constant(A);
    lq.B = constant(B);
    lq.C = constant(C);
    lq.D = constant(D);
    lq.Q = constant(Q);
    lq.R = constant(R);
    lq.G1 = G1;
    lq.G2 = G2;
    lq.H = 1.0;
    lq.T = 1.0;
    const double d = cross(lq).first;
    worst = std::max(worst, d);
    w.row({static_cast<double>(k), A, B, C, D, Q, R, G1, G2, d});
  }
  w.close();
  ck.le("random draws max diff", worst, 1e-8);
  CsvWriter m(ctx.file("c2_example41_meanfield.csv"), {"t", "phi", "phihat", "psi"});
  for (std::size_t n = 0; n < mf41.t.size(); ++n) m.row({mf41.t[n], mf41.phi[n], mf41.phihat[n], mf41.psi[n]});
  m.close();
  res.files = {"c2_lq_crossroute.csv", "c2_example41_meanfield.csv"};
}

// 3. Stackelberg leader: equilibrium, pre-committed control, gap and leader cost.
void c3(Context& ctx, CriterionResult& res, Checks& ck) {
  const double T = 1.0;
  const auto st = stackelberg_leader(T);
  const auto spec = stackelberg_problem(T, 0.0);
  ck.flag("equilibrium == -1/2", st.equilibrium == -0.5);

  MCConfig cfg = ctx.mc();
  cfg.steps_per_unit = 80;
  const auto eq = StrategyTable::closed_form([](double, double) { return -0.5; }, spec.u_lo, spec.u_hi);
  const auto vr = verify_equilibrium(spec, eq, {0.0, 0.25, 0.5}, cfg, 0.05);
  double at_eq = 0.0;
  for (const auto& r : vr.rows)
    if (r.u == -0.5) at_eq = std::max(at_eq, std::abs(r.quotient));
  double qmin = INFINITY;
  for (const auto& r : vr.rows) qmin = std::min(qmin, r.quotient);
  ck.ge("min quotient", qmin, -1e-8);
  ck.le("|quotient| at u=-1/2", at_eq, 1e-8);
  write_verify_csv(ctx.file("c3_stackelberg_verify.csv"), vr.rows);

  // Pre-committed control: formula, and optimality of the quadrature cost under bumps.
  double ef = 0.0, dmin = INFINITY;
  for (double t : {0.0, 0.25, 0.5}) {
    for (int q = 0; q <= 20; ++q) {
      const double s = t + (T - t) * q / 20.0;
      ef = std::max(ef, std::abs(st.precommitted(s, t) - (std::log(2.0 - t) - std::log(2.0 - s) - 1.0) / 2.0));
    }
    auto law = [&st, t](double delta) {
      return StrategyTable::closed_form(
          [&st, t, delta](double s, double) { return st.precommitted(s, t) + delta * std::sin(3.0 * s); }, -10.0,
          10.0);
    };
    const double j0 = evaluate_cost(spec, law(0.0), t, 0.0, cfg).value;
    for (double delta : {-0.05, 0.05}) dmin = std::min(dmin, evaluate_cost(spec, law(delta), t, 0.0, cfg).value - j0);
  }
  ck.le("pre-committed formula", ef, 1e-14);
  ck.ge("cost increase under bumps", dmin, 0.0);

  InconsistencyOptions io;
  io.T = T;
  io.taus = {0.0, 0.25, 0.5, 0.75};
  const auto gap = demonstrate_inconsistency("stackelberg", io);
  const double exact = 0.5 * std::log(4.0 / 3.0);
  ck.le("gap(0.5)-ln(4/3)/2", std::abs(gap.rows[2].gap - exact), 1e-9);
  ck.info("gap(0.5)=" + fmt17(gap.rows[2].gap));
  write_gap_csv(ctx.file("c3_stackelberg_gap.csv"), gap.rows);

  // J2(t) = -(c/4)[F(1) - F(1/c)], F(v) = v(ln v + 1)^2 - 2 v ln v, c = 2 - t.
  double eq_err = 0.0;
  for (double t : {0.0, 0.5}) {
    const double c = 2.0 - t;
    auto F = [](double v) { return v * std::pow(std::log(v) + 1.0, 2) - 2.0 * v * std::log(v); };
    const double oracle = -c * (F(1.0) - F(1.0 / c)) / 4.0;
    const auto pre = StrategyTable::closed_form([&st, t](double s, double) { return st.precommitted(s, t); },
                                                -10.0, 10.0);
    eq_err = std::max(eq_err, std::abs(evaluate_cost(spec, pre, t, 0.0, cfg).value - oracle));
  }
  ck.le("leader cost vs antiderivative", eq_err, 1e-10);
  res.files = {"c3_stackelberg_verify.csv", "c3_stackelberg_gap.csv"};
}

// 4. ex31 (deterministic Y tracking): optimal cost, gap and verification of the re-optimized strategy.
void c4(Context& ctx, CriterionResult& res, Checks& ck) {
  const auto spec = example31_problem(1.0, 0.0);
  MCConfig cfg = ctx.mc();
  const auto pre = StrategyTable::closed_form([](double s, double) { return (s - 1.0) / 2.0; }, -10.0, 10.0);
  const double j = evaluate_cost(spec, pre, 0.0, 0.0, cfg).value;
  ck.le("|J(0,0)+1/12|", std::abs(j + 1.0 / 12.0), 1e-10);

  InconsistencyOptions io;
  const auto gap = demonstrate_inconsistency("ex31", io);
  double ge = 0.0;
  for (const auto& r : gap.rows) ge = std::max(ge, std::abs(r.gap - r.tau / 2.0));
  ck.le("|gap-tau/2|", ge, 1e-15);
  write_gap_csv(ctx.file("c4_ex31_gap.csv"), gap.rows);

  // Re-optimizing at every instant gives u(s; s) = -1/2.
  const auto reopt = StrategyTable::closed_form([](double, double) { return -0.5; }, -10.0, 10.0);
  const auto vr = verify_equilibrium(spec, reopt, {0.0, 0.25, 0.5}, cfg, 0.05);
  double qmin = INFINITY;
  for (const auto& r : vr.rows) qmin = std::min(qmin, r.quotient);
  ck.ge("min quotient", qmin, -1e-8);
  write_verify_csv(ctx.file("c4_ex31_verify.csv"), vr.rows);
  res.files = {"c4_ex31_gap.csv", "c4_ex31_verify.csv"};
}

// 5. Linear validation of the parabolic solver and the kernel route.
void c5(Context& ctx, CriterionResult& res, Checks& ck) {
  PdeOptions po;
  po.policy = ctx.opt.policy;
  GridSpec g;
  g.x_lo = -5.0;
  g.x_hi = 5.0;
  g.nx = 201;   // dx = 0.05
  g.nt = 1001;  // dt = 1e-3
  g.T = 1.0;
  LinearParams lp;
  lp.a = 1.0;
  const auto zero = StrategyTable::closed_form([](double, double) { return 0.0; }, -1.0, 1.0);

  lp.terminal = LinearTerminal::x;
  const auto th_x = solve_theta(linear_problem(lp), zero, g, po);
  double ex = 0.0;
  for (int j = 0; j < g.nt; ++j)
    for (int i = 0; i < g.nx; ++i) ex = std::max(ex, std::abs(th_x.value(0, j, i) - g.x(i)));
  ck.le("h=x max err", ex, 1e-12);

  lp.terminal = LinearTerminal::x2;
  const auto th_x2 = solve_theta(linear_problem(lp), zero, g, po);
  double ex2 = 0.0;
  for (int j = 0; j < g.nt; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (std::abs(g.x(i)) <= 4.0)
        ex2 = std::max(ex2, std::abs(th_x2.value(0, j, i) - (g.x(i) * g.x(i) + 2.0 * (g.T - g.s(j)))));
  ck.le("h=x^2 interior err", ex2, 5e-3);

  lp.terminal = LinearTerminal::bumps;
  const auto spec_b = linear_problem(lp);
  const auto fd = solve_theta(spec_b, zero, g, po);
  GridSpec gk = g;
  gk.nx = 101;
  gk.nt = 41;
  const auto kr = kernel_solve_linear(spec_b, gk);
  double kd = 0.0;
  CsvWriter w(ctx.file("c5_kernel_vs_fd.csv"), {"s", "x", "kernel", "fd"});
  for (int j = 0; j < gk.nt; ++j)
    for (int i = 0; i < gk.nx; ++i) {
      const double s = gk.s(j), x = gk.x(i), k = kr.theta.value(0, j, i), f = fd.at(0, s, x);
      w.row({s, x, k, f});
      if (std::abs(x) <= 4.0) kd = std::max(kd, std::abs(k - f));
    }
  w.close();
  ck.le("kernel vs FD interior", kd, 5e-3);

  // ∫ Ξ(s, x, r, μ) dμ = 1 for a = 1 and a state-dependent a.
  double norm = 0.0;
  for (auto a_fn : {std::function<double(double, double)>([](double, double) { return 1.0; }),
                    std::function<double(double, double)>([](double, double) { return 0.7; })}) {
    const double s = 0.2, x = 0.3, r = 0.9;
    const int n = 4000;
    const double lo = -15.0, hi = 15.0, h = (hi - lo) / n;
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double c = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      acc += c * heat_kernel(a_fn, s, x, r, lo + k * h);
    }
    norm = std::max(norm, std::abs(acc * h / 3.0 - 1.0));
  }
  ck.le("heat kernel normalization", norm, 1e-8);
  res.files = {"c5_kernel_vs_fd.csv"};
}

double strategy_error(const FixedPointResult& fp, const GridSpec& g, const MeanVarParams& p) {
  double e = 0.0;
  for (int j = 0; j < g.nt; ++j) {
    const double cf = mv_closed_form(p, g.s(j));
    for (int i = 0; i < g.nx; ++i) e = std::max(e, rel(fp.psi_nodes[static_cast<std::size_t>(j) * g.nx + i], cf));
  }
  return e;
}

// 6. Equilibrium fixed point on the mean-variance problem.
void c6(Context& ctx, CriterionResult& res, Checks& ck) {
  const auto p = mv_params();
  const auto& fp = ctx.meanvar_fp();
  const auto g = mv_grid(121, 201);
  ck.flag("converged", fp.converged);
  ck.le("iterations", static_cast<double>(fp.log.size() - 1), 50);
  ck.le("final residual", fp.log.back().max(), 1e-6);
  const double e1 = strategy_error(fp, g, p);
  ck.le("strategy rel err", e1, 1e-2);
  const auto g2 = mv_grid(241, 401);
  const auto fp2 = equilibrium_fixed_point(meanvar_problem(p), g2, ctx.fp_options());
  const double e2 = strategy_error(fp2, g2, p);
  ck.flag("halved grid converged", fp2.converged);
  ck.ge("halving ratio", e1 / e2, 1.8);
  write_strategy_csv(ctx.file("c6_strategy.csv"), g, fp.psi_nodes);
  write_iteration_csv(ctx.file("c6_iterations.csv"), fp.log);
  write_theta_csv(ctx.file("c6_theta.csv"), fp.theta);
  res.files = {"c6_strategy.csv", "c6_iterations.csv", "c6_theta.csv"};
}

// 7. Monte Carlo equilibrium verification: the equilibrium passes, Ψ ≡ 0 fails.
void c7(Context& ctx, CriterionResult& res, Checks& ck) {
  const auto p = mv_params();
  const auto spec = meanvar_problem(p);
  MCConfig cfg = ctx.mc();
  const std::vector<double> ts{0.0, 0.25, 0.5};
  const auto eq = StrategyTable::closed_form([p](double s, double) { return mv_closed_form(p, s); }, spec.u_lo,
                                             spec.u_hi);
  const auto ok = verify_equilibrium(spec, eq, ts, cfg, 0.05);
  const auto zero = StrategyTable::closed_form([](double, double) { return 0.0; }, spec.u_lo, spec.u_hi);
  const auto bad = verify_equilibrium(spec, zero, ts, cfg, 0.05);
  ck.ge("equilibrium min quotient (smallest eps)", ok.min_quotient_smallest_eps, -0.05);
  ck.flag("equilibrium verdict PASS", ok.pass);
  ck.le("zero strategy min quotient (smallest eps)", bad.min_quotient_smallest_eps, -0.05);
  ck.flag("zero strategy verdict FAIL", !bad.pass);
  write_verify_csv(ctx.file("c7_verify_equilibrium.csv"), ok.rows);
  write_verify_csv(ctx.file("c7_verify_zero.csv"), bad.rows);
  res.files = {"c7_verify_equilibrium.csv", "c7_verify_zero.csv"};
}

// 8. Perturbation PDE against the Monte Carlo quotient, and window shrinkage.
void c8(Context& ctx, CriterionResult& res, Checks& ck) {
  const auto p = mv_params();
  const auto spec = meanvar_problem(p);
  const auto& fp = ctx.meanvar_fp();
  const auto g = mv_grid(121, 201);
  PerturbationOptions po;
  po.pde = ctx.fp_options().pde;
  po.allow_degenerate_window = true;  // u = 0 switches the diffusion off inside the window
  const double t = 0.0, u = 0.0;
  CsvWriter w(ctx.file("c8_perturbation.csv"), {"eps", "theta_gap", "pde_quotient"});
  std::vector<double> gaps;
  double q01 = 0.0;
  for (double eps : {0.1, 0.05, 0.025}) {
    const auto pr = solve_perturbation(spec, fp.theta, fp.theta0, fp.bundle, fp.psi_nodes, t, eps, u, g, po);
    gaps.push_back(pr.theta_gap);
    if (eps == 0.1) q01 = pr.quotient(p.x0);
    w.row({eps, pr.theta_gap, pr.quotient(p.x0)});
  }
  w.close();
  const auto mc = difference_quotients(spec, fp.strategy, t, p.x0, {{0.1, u}}, ctx.mc());
  const double z = std::abs(q01 - mc[0].quotient) / mc[0].se;
  ck.info("pde=" + sci(q01) + " mc=" + sci(mc[0].quotient) + "+-" + sci(mc[0].se));
  ck.le("|pde-mc|/se", z, 3.0);
  ck.flag("theta gap decreasing in eps", gaps[1] < gaps[0] && gaps[2] < gaps[1]);
  ck.info("gaps " + sci(gaps[0]) + "," + sci(gaps[1]) + "," + sci(gaps[2]));
  res.files = {"c8_perturbation.csv"};
}

// 9. Planner ODE: symmetry, ordering, Merton reduction, positivity on random draws.
void c9(Context& ctx, CriterionResult& res, Checks& ck) {
  PlannerParams sym;
  sym.rho1 = sym.rho2 = 0.04;
  const auto s1 = solve_planner(sym, 10000);
  double d = 0.0;
  for (std::size_t n = 0; n < s1.t.size(); ++n) d = std::max(d, std::abs(s1.theta1[n] - s1.theta2[n]));
  ck.le("symmetry", d, 1e-12);

  PlannerParams ord;
  ord.rho1 = 0.08;
  ord.rho2 = 0.02;
  const auto s2 = solve_planner(ord, 10000);
  double worst = -INFINITY;
  for (std::size_t n = 0; n < s2.t.size(); ++n) worst = std::max(worst, s2.theta1[n] - s2.theta2[n]);
  ck.le("max(theta1-theta2)", worst, 0.0);
  write_planner_csv(ctx.file("c9_planner.csv"), s2);

  // α = 1 − γ, ρ₁ = ρ₂ = ρ: θ = f^γ, f = 1/ν + (1 − 1/ν) e^{−ν(T−t)}, ν = (ρ − (1−γ)K)/γ.
  PlannerParams m;
  m.gamma = 0.5;
  m.alpha = 1.0 - m.gamma;
  m.rho1 = m.rho2 = 0.05;
  const auto s3 = solve_planner(m, 10000);
  const double K = m.r + std::pow(m.mu - m.r, 2) / (2.0 * m.gamma * m.sigma * m.sigma);
  const double nu = (m.rho1 - (1.0 - m.gamma) * K) / m.gamma;
  double em = 0.0;
  for (std::size_t n = 0; n < s3.t.size(); ++n) {
    const double f = 1.0 / nu + (1.0 - 1.0 / nu) * std::exp(-nu * (m.T - s3.t[n]));
    em = std::max(em, rel(s3.theta1[n], std::pow(f, m.gamma)));
  }
  ck.le("Merton rel err", em, 1e-6);

  std::mt19937_64 eng(ctx.opt.seed ^ 0x9u);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int guard = 0, misorder = 0;
  CsvWriter w(ctx.file("c9_planner_draws.csv"),
              {"draw", "r", "mu", "sigma", "gamma", "alpha", "rho1", "rho2", "lambda", "min_theta", "guard"});
  for (int k = 0; k < 10; ++k) {
    PlannerParams q;
    q.r = 0.01 + 0.04 * U(eng);
    q.mu = q.r + 0.02 + 0.08 * U(eng);
    q.sigma = 0.15 + 0.25 * U(eng);
    q.gamma = 0.2 + 0.7 * U(eng);
    q.alpha = 0.1 + 0.8 * U(eng);
    q.rho1 = 0.01 + 0.09 * U(eng);
    q.rho2 = 0.01 + 0.09 * U(eng);
    q.lambda = U(eng);
    q.T = 1.0;
    double mn = NAN;
    bool hit = false;
    try {
      const auto sol = solve_planner(q, 10000);
      mn = std::min(*std::min_element(sol.theta1.begin(), sol.theta1.end()),
                    *std::min_element(sol.theta2.begin(), sol.theta2.end()));
      for (std::size_t n = 0; n < sol.t.size(); ++n) {
        const double diff = sol.theta1[n] - sol.theta2[n];
        if ((q.rho1 >= q.rho2 && diff > 0.0) || (q.rho1 < q.rho2 && diff < 0.0)) {
          ++misorder;
          break;
        }
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::positivity) throw;
      hit = true;
      ++guard;
    }
    w.row({static_cast<double>(k), q.r, q.mu, q.sigma, q.gamma, q.alpha, q.rho1, q.rho2, q.lambda, mn,
           hit ? 1.0 : 0.0});
  }
  w.close();
  ck.le("positivity guard triggers", guard, 0);
  ck.le("ordering violations in draws", misorder, 0);
  res.files = {"c9_planner.csv", "c9_planner_draws.csv"};
}

// 10. Feynman–Kac representation: PDE fields against Monte Carlo.
void c10(Context& ctx, CriterionResult& res, Checks& ck) {
  const auto p = mv_params();
  const auto spec = meanvar_problem(p);
  const auto& fp = ctx.meanvar_fp();
  const std::vector<std::pair<double, double>> pts{{0.0, 1.0}, {0.25, 0.9}, {0.25, 1.1}, {0.5, 1.0}, {0.75, 1.2}};
  const auto fk = check_feynman_kac(spec, fp.strategy, fp.theta, fp.theta0, pts, ctx.mc());
  CsvWriter w(ctx.file("c10_feynman_kac.csv"),
              {"r", "x", "theta", "mc_y", "se_y", "z_y", "d", "mc_y0", "se_y0", "z_y0"});
  for (const auto& q : fk.points)
    w.row({q.r, q.x, q.theta, q.mc_y, q.se_y, q.z_y, q.d, q.mc_y0, q.se_y0, q.z_y0});
  w.close();
  ck.le("max |z|", fk.max_abs_z, 3.0);
  res.files = {"c10_feynman_kac.csv"};
}

using CriterionFn = void (*)(Context&, CriterionResult&, Checks&);

struct Entry {
  int id;
  const char* name;
  CriterionFn fn;
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> e{
      {1, "mean-variance Riccati", c1},   {2, "LQ cross-route", c2},
      {3, "Stackelberg", c3},             {4, "ex31 deterministic example", c4},
      {5, "linear PDE validation", c5},   {6, "mean-variance fixed point", c6},
      {7, "Monte Carlo equilibrium test", c7}, {8, "perturbation PDE vs Monte Carlo", c8},
      {9, "planner", c9},                 {10, "Feynman-Kac", c10},
  };
  return e;
}

bool wanted(const AcceptanceOptions& o, int id) {
  return o.only.empty() || std::find(o.only.begin(), o.only.end(), id) != o.only.end();
}

std::vector<CriterionResult> run_set(const AcceptanceOptions& opt, const std::filesystem::path& dir,
                                     std::ostream* log) {
  std::filesystem::create_directories(dir);
  Context ctx{opt, dir, std::nullopt};
  std::vector<CriterionResult> out;
  for (const auto& e : entries()) {
    if (!wanted(opt, e.id)) continue;
    CriterionResult r;
    r.id = e.id;
    r.name = e.name;
    Checks ck;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      e.fn(ctx, r, ck);
      r.pass = ck.ok;
      r.detail = ck.str();
    } catch (const std::exception& ex) {
      r.pass = false;
      r.detail = (ck.parts.empty() ? "" : ck.str() + "; ") + "error: " + ex.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (log) *log << format_result(r) << std::endl;
    out.push_back(std::move(r));
  }
  return out;
}

std::optional<std::string> read_all(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) return std::nullopt;
  return std::string(std::istreambuf_iterator<char>(f), {});
}

}  // namespace

std::string format_result(const CriterionResult& r) {
  char t[32];
  std::snprintf(t, sizeof t, "%.1f", r.seconds);
  return "criterion " + std::to_string(r.id) + " [" + (r.pass ? "PASS" : "FAIL") + "] " + r.name + ": " +
         r.detail + " (" + t + " s)";
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt, std::ostream& log) {
  auto results = run_set(opt, opt.out, &log);
  if (!wanted(opt, 11)) return results;

  // 11. A second run with the same seed must reproduce every CSV byte for byte.
  CriterionResult r;
  r.id = 11;
  r.name = "reproducibility";
  const auto t0 = std::chrono::steady_clock::now();
  try {
    AcceptanceOptions again = opt;
    if (again.only.empty())
      for (const auto& e : entries()) again.only.push_back(e.id);
    std::erase(again.only, 11);
    const auto dir2 = opt.out / "rerun";
    run_set(again, dir2, nullptr);
    std::size_t n = 0, diff = 0;
    std::string first;
    for (const auto& res : results)
      for (const auto& f : res.files) {
        ++n;
        const auto a = read_all(opt.out / f), b = read_all(dir2 / f);
        if (!a || !b || *a != *b) {
          ++diff;
          if (first.empty()) first = f;
        }
        r.files.push_back(f);
      }
    r.pass = n > 0 && diff == 0;
    r.detail = std::to_string(n) + " CSV files compared, " + std::to_string(diff) + " differ" +
               (first.empty() ? "" : " (first: " + first + ")");
  } catch (const std::exception& ex) {
    r.pass = false;
    r.detail = std::string("error: ") + ex.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  log << format_result(r) << std::endl;
  results.push_back(std::move(r));
  return results;
}

}  // namespace tic
