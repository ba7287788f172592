#include "tic/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "tic/acceptance.hpp"
#include "tic/families.hpp"
#include "tic/io.hpp"
#include "tic/ode_riccati.hpp"
#include "tic/pde_solver.hpp"
#include "tic/simulate.hpp"

namespace fs = std::filesystem;

namespace tic {

namespace {

struct RunConfig {
  std::string subcommand;
  std::string config_path;
  std::string out = "out";
  std::string replay;
  std::uint64_t seed = 20240611;
  std::optional<std::size_t> paths;
  std::optional<int> steps;
  std::optional<int> nx, nt, ny;
  std::optional<double> x_lo, x_hi;
  std::vector<double> eps;
  std::vector<double> u_grid;
  std::vector<double> t_list;
  std::optional<double> tol;
  double tol_eq = 0.05;
  // mean-variance overrides
  std::optional<double> r, mu, sigma, gamma, T;
  std::string example;
  std::string strategy = "equilibrium";
  std::vector<std::string> points;
  bool serial = false;
  bool antithetic = false;
};

std::string num(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.10g", v);
  return b;
}

/// Problem config from --config, else the default document for the subcommand.
ProblemConfig load_problem(const RunConfig& rc, const std::string& fallback_family) {
  nlohmann::json doc;
  if (!rc.config_path.empty()) {
    std::ifstream f(rc.config_path);
    if (!f) throw Error(ErrorKind::config, "cannot open config " + rc.config_path);
    try {
      doc = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::config, std::string("config is not valid JSON: ") + e.what());
    }
  } else {
    doc = {{"family", fallback_family}};
  }
  auto cfg = parse_problem_config(doc);
  if (rc.T) cfg.T = *rc.T;
  auto set = [&](const char* k, const std::optional<double>& v) {
    if (v) cfg.params[k] = *v;
  };
  set("r", rc.r);
  set("mu", rc.mu);
  set("sigma", rc.sigma);
  set("gamma", rc.gamma);
  return cfg;
}

LQSpec lq_from_config(const ProblemConfig& c) {
  if (c.family == "ex41") return example41_lq(c.T);
  if (c.family == "meanvar") {
    MeanVarParams p;
    return meanvar_lq(c.param("r", p.r), c.param("mu", p.mu), c.param("sigma", p.sigma), c.param("gamma", p.gamma),
                      c.T);
  }
  if (c.family != "lq") throw Error(ErrorKind::config, "expected family lq, ex41 or meanvar, got " + c.family);
  LQSpec lq;
  lq.A = constant(c.param("A", 0));
  lq.B = constant(c.param("B", 0));
  lq.C = constant(c.param("C", 0));
  lq.D = constant(c.param("D", 0));
  lq.Ahat = constant(c.param("Ahat", 0));
  lq.Bhat = constant(c.param("Bhat", 0));
  lq.Chat = constant(c.param("Chat", 0));
  lq.Dhat = constant(c.param("Dhat", 0));
  lq.Q = constant(c.param("Q", 0));
  lq.M = constant(c.param("M", 0));
  lq.N = constant(c.param("N", 0));
  lq.R = constant(c.param("R", 0));
  lq.H = c.param("H", 1);
  lq.G1 = c.param("G1", 0);
  lq.G2 = c.param("G2", 0);
  lq.G3 = c.param("G3", 0);
  lq.g = c.param("g", 0);
  lq.T = c.T;
  return lq;
}

MCConfig mc_config(const RunConfig& rc) {
  MCConfig c;
  c.seed = rc.seed;
  if (rc.paths) c.paths = *rc.paths;
  if (rc.steps) c.steps_per_unit = *rc.steps;
  if (!rc.eps.empty()) c.eps = rc.eps;
  if (!rc.u_grid.empty()) c.u_grid = rc.u_grid;
  c.antithetic = rc.antithetic;
  c.policy = rc.serial ? ExecPolicy::serial : ExecPolicy::openmp;
  c.validate();
  return c;
}

GridSpec grid_for(const RunConfig& rc, const ControlProblemSpec& spec) {
  // Diffusion scale: largest |σ| near x0 over controls in U ∩ [−1, 1].
  double sb = 0.0;
  for (double u : {-1.0, 0.0, 1.0})
    for (double dx : {-1.0, 0.0, 1.0})
      sb = std::max(sb, std::abs(spec.sigma(0.0, spec.x0 + dx, std::clamp(u, spec.u_lo, spec.u_hi))));
  GridSpec g = default_grid(spec, std::max(sb, 0.2), rc.nx.value_or(121), rc.nt.value_or(201));
  if (rc.x_lo) g.x_lo = *rc.x_lo;
  if (rc.x_hi) g.x_hi = *rc.x_hi;
  if (rc.ny) g.ny = *rc.ny;
  g.validate();
  return g;
}

FixedPointOptions fp_options(const RunConfig& rc, const ControlProblemSpec& spec) {
  FixedPointOptions o;
  if (rc.tol) o.tol = *rc.tol;
  o.pde.freeze_control_diffusion = !spec.diffusion_control_free;
  o.pde.policy = rc.serial ? ExecPolicy::serial : ExecPolicy::openmp;
  return o;
}

struct Output {
  fs::path dir;
  std::vector<std::string> files;
  nlohmann::json config = nlohmann::json::object();
  fs::path add(const std::string& name) {
    files.push_back(name);
    return dir / name;
  }
};

void print_verify(std::ostream& out, const VerifyReport& v) {
  for (const auto& [e, m] : v.min_by_eps) out << "  eps=" << num(e) << " min quotient " << num(m) << "\n";
  out << "  verdict: " << (v.pass ? "PASS" : "FAIL") << " (tol_eq " << num(v.tol_eq) << ")\n";
  for (const auto& w : v.warnings) out << "  warning: " << w << "\n";
}

int cmd_lq(const RunConfig& rc, Output& o, std::ostream& out) {
  const auto cfg = load_problem(rc, "ex41");
  o.config = to_json(cfg);
  const auto tr = solve_riccati_lq(lq_from_config(cfg), rc.steps.value_or(10000));
  write_lq_csv(o.add("lq_riccati.csv"), tr);
  out << "lq-riccati (" << cfg.family << "), " << tr.t.size() - 1 << " RK4 steps\n";
  for (int k = 0; k < 7; ++k) out << "  phi" << k + 1 << "(0) = " << num(tr.phi[k][0]) << "\n";
  out << "  equilibrium control at t=0: " << num(tr.psi[0]) << " x + " << num(tr.v[0]) << "\n";
  return kExitOk;
}

int cmd_meanfield(const RunConfig& rc, Output& o, std::ostream& out) {
  const auto cfg = load_problem(rc, "ex41");
  o.config = to_json(cfg);
  const auto lq = lq_from_config(cfg);
  const auto mf = solve_meanfield_riccati(lq.A, lq.B, lq.C, lq.D, lq.Q, lq.R, lq.G1, lq.G2, lq.T,
                                          rc.steps.value_or(10000));
  CsvWriter w(o.add("meanfield.csv"), {"t", "phi", "phihat", "psi"});
  for (std::size_t n = 0; n < mf.t.size(); ++n) w.row({mf.t[n], mf.phi[n], mf.phihat[n], mf.psi[n]});
  w.close();
  out << "meanfield-lq (" << cfg.family << ")\n  phi(0) = " << num(mf.phi[0]) << "\n  phihat(0) = "
      << num(mf.phihat[0]) << "\n  psi(0) = " << num(mf.psi[0]) << "\n";
  return kExitOk;
}

int cmd_meanvar(const RunConfig& rc, Output& o, std::ostream& out) {
  const auto cfg = load_problem(rc, "meanvar");
  o.config = to_json(cfg);
  MeanVarParams p;
  p.r = cfg.param("r", p.r);
  p.mu = cfg.param("mu", p.mu);
  p.sigma = cfg.param("sigma", p.sigma);
  p.gamma = cfg.param("gamma", p.gamma);
  p.x0 = cfg.param("x0", p.x0);
  p.T = cfg.T;
  const auto mv = meanvar_equilibrium(p.r, p.mu, p.sigma, p.gamma, p.T, 10000, cfg.u_lo, cfg.u_hi);
  write_lq_csv(o.add("meanvar_riccati.csv"), solve_riccati_lq(meanvar_lq(p.r, p.mu, p.sigma, p.gamma, p.T), 10000));
  out << "meanvar r=" << num(p.r) << " mu=" << num(p.mu) << " sigma=" << num(p.sigma) << " gamma=" << num(p.gamma)
      << " T=" << num(p.T) << "\n";
  out << "  v(0) = " << num(mv.v_num.front()) << " (closed form " << num(mv.v_exact.front()) << ")\n";
  out << "  Phi1(0) = " << num(mv.phi1.front()) << " (closed form " << num(mv.phi1_exact.front()) << ")\n";
  out << "  max rel err phi1 " << num(mv.max_rel_err_phi1) << ", v " << num(mv.max_rel_err_v) << "\n";
  out << "  alternative exponent forms differ from the solution by up to " << num(mv.variant_rel_gap_v)
      << " (relative, v)\n";

  const auto spec = meanvar_problem(p, cfg.u_lo, cfg.u_hi);
  RunConfig grc = rc;
  if (!grc.x_lo) grc.x_lo = p.x0 - 3.0;
  if (!grc.x_hi) grc.x_hi = p.x0 + 3.0;
  const auto g = grid_for(grc, spec);
  const auto fp = equilibrium_fixed_point(spec, g, fp_options(rc, spec));
  double err = 0.0;
  for (int j = 0; j < g.nt; ++j) {
    const double cf = mv.strategy(g.s(j), 0.0);
    for (int i = 0; i < g.nx; ++i)
      err = std::max(err, std::abs(fp.psi_nodes[static_cast<std::size_t>(j) * g.nx + i] - cf) / std::abs(cf));
  }
  write_strategy_csv(o.add("pde_strategy.csv"), g, fp.psi_nodes);
  write_iteration_csv(o.add("pde_iterations.csv"), fp.log);
  out << "  PDE fixed point: " << (fp.converged ? "converged" : "NOT converged") << " after " << fp.log.size() - 1
      << " iterations, strategy max rel err vs closed form " << num(err) << "\n";

  const auto mc = mc_config(rc);
  const std::vector<double> ts = rc.t_list.empty() ? std::vector<double>{0.0, 0.25, 0.5} : rc.t_list;
  const auto vr = verify_equilibrium(spec, mv.strategy, ts, mc, rc.tol_eq);
  write_verify_csv(o.add("verify.csv"), vr.rows);
  out << "  Monte Carlo equilibrium check (" << mc.paths << " paths):\n";
  print_verify(out, vr);
  return vr.pass && fp.converged ? kExitOk : kExitVerdict;
}

int cmd_planner(const RunConfig& rc, Output& o, std::ostream& out) {
  const auto cfg = load_problem(rc, "planner_ode");
  o.config = to_json(cfg);
  PlannerParams p;
  p.r = cfg.param("r", p.r);
  p.mu = cfg.param("mu", p.mu);
  p.sigma = cfg.param("sigma", p.sigma);
  p.gamma = cfg.param("gamma", p.gamma);
  p.alpha = cfg.param("alpha", p.alpha);
  p.rho1 = cfg.param("rho1", p.rho1);
  p.rho2 = cfg.param("rho2", p.rho2);
  p.lambda = cfg.param("lambda", p.lambda);
  p.T = cfg.T;
  const auto sol = solve_planner(p, rc.steps.value_or(10000));
  write_planner_csv(o.add("planner.csv"), sol);
  out << "planner\n  theta1(0) = " << num(sol.theta1.front()) << "\n  theta2(0) = " << num(sol.theta2.front())
      << "\n  consumption coefficient c(0) = " << num(sol.consumption.front())
      << "\n  investment per unit wealth = " << num(sol.investment) << "\n";
  return kExitOk;
}

void print_gap(std::ostream& out, const GapReport& g) {
  out << "  " << g.id << " gap table:\n    tau        gap\n";
  for (const auto& r : g.rows) {
    out << "    " << num(r.tau) << "  " << num(r.gap);
    if (g.id == "ex41" || g.id == "meanvar_precommit") out << "  (moved fraction " << num(r.fraction) << ")";
    out << "\n";
  }
  for (const auto& [k, v] : g.values) out << "  " << k << " = " << num(v) << "\n";
  for (const auto& n : g.notes) out << "  note: " << n << "\n";
}

InconsistencyOptions inconsistency_options(const RunConfig& rc) {
  InconsistencyOptions io;
  if (rc.T) io.T = *rc.T;
  io.mc = mc_config(rc);
  if (!rc.t_list.empty()) io.taus = rc.t_list;
  if (rc.r) io.mv.r = *rc.r;
  if (rc.mu) io.mv.mu = *rc.mu;
  if (rc.sigma) io.mv.sigma = *rc.sigma;
  if (rc.gamma) io.mv.gamma = *rc.gamma;
  return io;
}

int cmd_stackelberg(const RunConfig& rc, Output& o, std::ostream& out) {
  const double T = rc.T.value_or(1.0);
  o.config = {{"T", T}};
  const auto st = stackelberg_leader(T);
  auto io = inconsistency_options(rc);
  io.T = T;
  const auto gap = demonstrate_inconsistency("stackelberg", io);
  write_gap_csv(o.add("stackelberg_gap.csv"), gap.rows);
  out << "stackelberg T=" << num(T) << "\n  equilibrium strategy of the leader: " << num(st.equilibrium) << "\n";
  print_gap(out, gap);
  return kExitOk;
}

int cmd_pde(const RunConfig& rc, Output& o, std::ostream& out) {
  const auto cfg = load_problem(rc, "meanvar");
  o.config = to_json(cfg);
  const auto spec = make_problem(cfg);
  const auto g = grid_for(rc, spec);
  const auto fp = equilibrium_fixed_point(spec, g, fp_options(rc, spec));
  write_theta_csv(o.add("theta.csv"), fp.theta);
  write_theta0_csv(o.add("theta0.csv"), fp.theta0, fp.theta);
  write_strategy_csv(o.add("strategy.csv"), g, fp.psi_nodes);
  write_iteration_csv(o.add("iterations.csv"), fp.log);
  out << "pde-solve (" << cfg.family << ") grid x in [" << num(g.x_lo) << ", " << num(g.x_hi) << "], nx=" << g.nx
      << ", nt=" << g.nt << "\n";
  out << "  " << (fp.converged ? "converged" : "NOT converged") << " after " << fp.log.size() - 1
      << " iterations; final residual " << num(fp.log.back().max()) << "\n";
  out << "  strategy at (0, x0): " << num(fp.strategy(0.0, spec.x0)) << "\n";
  for (const auto& n : fp.notes) out << "  note: " << n << "\n";
  return fp.converged ? kExitOk : kExitVerdict;
}

/// Strategy for mc-verify: "equilibrium" (closed form when known, else PDE), "pde", or "zero".
StrategyTable pick_strategy(const RunConfig& rc, const ProblemConfig& cfg, const ControlProblemSpec& spec,
                            std::ostream& out) {
  if (rc.strategy == "zero")
    return StrategyTable::closed_form([](double, double) { return 0.0; }, spec.u_lo, spec.u_hi);
  if (rc.strategy == "equilibrium") {
    if (cfg.family == "meanvar") {
      const double k = (cfg.param("mu", MeanVarParams{}.mu) - cfg.param("r", MeanVarParams{}.r)) /
                       (cfg.param("gamma", MeanVarParams{}.gamma) * std::pow(cfg.param("sigma", MeanVarParams{}.sigma), 2));
      const double r = cfg.param("r", MeanVarParams{}.r), T = cfg.T;
      return StrategyTable::closed_form([k, r, T](double s, double) { return k * std::exp(-r * (T - s)); },
                                        spec.u_lo, spec.u_hi);
    }
    if (cfg.family == "stackelberg" || cfg.family == "ex31")
      return StrategyTable::closed_form([](double, double) { return -0.5; }, spec.u_lo, spec.u_hi);
  } else if (rc.strategy != "pde") {
    throw Error(ErrorKind::config, "--strategy must be equilibrium, pde or zero");
  }
  const auto fp = equilibrium_fixed_point(spec, grid_for(rc, spec), fp_options(rc, spec));
  out << "  strategy from the PDE fixed point (" << (fp.converged ? "converged" : "NOT converged") << ")\n";
  return fp.strategy;
}

int cmd_mc_verify(const RunConfig& rc, Output& o, std::ostream& out) {
  const auto cfg = load_problem(rc, "meanvar");
  o.config = to_json(cfg);
  const auto spec = make_problem(cfg);
  out << "mc-verify (" << cfg.family << "), strategy " << rc.strategy << "\n";
  const auto psi = pick_strategy(rc, cfg, spec, out);
  const auto mc = mc_config(rc);
  const std::vector<double> ts = rc.t_list.empty() ? std::vector<double>{0.0, 0.25, 0.5} : rc.t_list;
  const auto vr = verify_equilibrium(spec, psi, ts, mc, rc.tol_eq);
  write_verify_csv(o.add("verify.csv"), vr.rows);
  print_verify(out, vr);
  return vr.pass ? kExitOk : kExitVerdict;
}

int cmd_inconsistency(const RunConfig& rc, Output& o, std::ostream& out) {
  const auto io = inconsistency_options(rc);
  std::vector<std::string> ids{"ex31", "ex41", "stackelberg", "meanvar_precommit"};
  if (!rc.example.empty()) ids = {rc.example};
  o.config = {{"examples", ids}, {"T", io.T}, {"taus", io.taus}};
  out << "inconsistency\n";
  for (const auto& id : ids) {
    const auto g = demonstrate_inconsistency(id, io);
    write_gap_csv(o.add("gap_" + id + ".csv"), g.rows);
    print_gap(out, g);
  }
  return kExitOk;
}

int cmd_fk(const RunConfig& rc, Output& o, std::ostream& out) {
  auto cfg = load_problem(rc, "meanvar");
  o.config = to_json(cfg);
  const auto spec = make_problem(cfg);
  const auto g = grid_for(rc, spec);
  const auto fp = equilibrium_fixed_point(spec, g, fp_options(rc, spec));
  std::vector<std::pair<double, double>> pts;
  for (const auto& s : rc.points) {
    const auto c = s.find(':');
    if (c == std::string::npos) throw Error(ErrorKind::config, "--points expects r:x entries");
    try {
      pts.emplace_back(std::stod(s.substr(0, c)), std::stod(s.substr(c + 1)));
    } catch (const std::exception&) {
      throw Error(ErrorKind::config, "bad --points entry '" + s + "'");
    }
  }
  if (pts.empty()) pts = {{0.0, spec.x0}, {0.25, spec.x0 - 0.1}, {0.25, spec.x0 + 0.1}, {0.5, spec.x0}, {0.75, spec.x0 + 0.2}};
  const auto fk = check_feynman_kac(spec, fp.strategy, fp.theta, fp.theta0, pts, mc_config(rc));
  CsvWriter w(o.add("feynman_kac.csv"), {"r", "x", "theta", "mc_y", "se_y", "z_y", "d", "mc_y0", "se_y0", "z_y0"});
  out << "fk-check (" << cfg.family << ")\n     r        x     z(Y)    z(Y0)\n";
  for (const auto& q : fk.points) {
    w.row({q.r, q.x, q.theta, q.mc_y, q.se_y, q.z_y, q.d, q.mc_y0, q.se_y0, q.z_y0});
    char b[96];
    std::snprintf(b, sizeof b, "  %6.3f  %6.3f  %7.3f  %7.3f\n", q.r, q.x, q.z_y, q.z_y0);
    out << b;
  }
  w.close();
  out << "  max |z| = " << num(fk.max_abs_z) << (fk.max_abs_z <= 3.0 ? " (ok)" : " (exceeds 3)") << "\n";
  return fk.max_abs_z <= 3.0 ? kExitOk : kExitVerdict;
}

int cmd_selftest(const RunConfig& rc, Output& o, std::ostream& out) {
  AcceptanceOptions ao;
  ao.out = o.dir;
  ao.seed = rc.seed;
  if (rc.paths) ao.paths = *rc.paths;
  if (rc.steps) ao.steps_per_unit = *rc.steps;
  ao.policy = rc.serial ? ExecPolicy::serial : ExecPolicy::openmp;
  o.config = {{"paths", ao.paths}, {"steps_per_unit", ao.steps_per_unit}};
  const auto res = run_acceptance(ao, out);
  bool ok = true;
  for (const auto& r : res) {
    ok = ok && r.pass;
    for (const auto& f : r.files)
      if (r.id != 11) o.files.push_back(f);
  }
  out << (ok ? "selftest: all criteria passed\n" : "selftest: FAILED\n");
  return ok ? kExitOk : kExitVerdict;
}

}  // namespace

int run(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args = args_in;
  RunConfig rc;
  CLI::App app{"Equilibrium strategies for time-inconsistent recursive control problems", "tic"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  app.add_option("--config", rc.config_path, "problem config (JSON)");
  app.add_option("--out", rc.out, "output directory");
  app.add_option("--replay", rc.replay, "rerun the command recorded in a manifest.json");
  app.add_option("--seed", rc.seed, "base seed");
  app.add_option("--paths", rc.paths, "Monte Carlo paths")->check(CLI::Range(static_cast<std::size_t>(2), static_cast<std::size_t>(1) << 40));
  app.add_option("--steps", rc.steps, "time steps per unit time (Monte Carlo), or RK4 steps (ODE commands)")
      ->check(CLI::PositiveNumber);
  app.add_option("--grid-nx", rc.nx, "space nodes")->check(CLI::Range(8, 100000));
  app.add_option("--grid-nt", rc.nt, "time nodes")->check(CLI::Range(8, 1000000));
  app.add_option("--grid-ny", rc.ny, "y nodes")->check(CLI::Range(4, 10000));
  app.add_option("--x-lo", rc.x_lo, "left end of the space grid");
  app.add_option("--x-hi", rc.x_hi, "right end of the space grid");
  app.add_option("--eps", rc.eps, "perturbation window widths")->delimiter(',');
  app.add_option("--u-grid", rc.u_grid, "perturbation values")->delimiter(',');
  app.add_option("--t-list", rc.t_list, "evaluation times (verification) or tau grid (inconsistency)")->delimiter(',');
  app.add_option("--tol", rc.tol, "fixed-point tolerance");
  app.add_option("--tol-eq", rc.tol_eq, "equilibrium tolerance for the verdict");
  app.add_option("--r", rc.r, "risk-free rate");
  app.add_option("--mu", rc.mu, "stock drift");
  app.add_option("--sigma", rc.sigma, "volatility");
  app.add_option("--gamma", rc.gamma, "risk aversion");
  app.add_option("--T", rc.T, "horizon");
  app.add_option("--example", rc.example, "ex31, ex41, stackelberg or meanvar_precommit");
  app.add_option("--strategy", rc.strategy, "equilibrium, pde or zero");
  app.add_option("--points", rc.points, "r:x sample points")->delimiter(',');
  app.add_flag("--serial", rc.serial, "disable OpenMP kernels");
  app.add_flag("--antithetic", rc.antithetic, "antithetic path pairs");

  const std::vector<std::pair<std::string, std::string>> subs{
      {"lq-riccati", "seven-equation LQ Riccati system"},
      {"meanfield-lq", "two-equation mean-field Riccati system"},
      {"meanvar", "mean-variance equilibrium, PDE cross-check and Monte Carlo verification"},
      {"planner", "social planner ODE system"},
      {"stackelberg", "leader problem and its inconsistency gap"},
      {"pde-solve", "equilibrium fixed point of the HJB system"},
      {"mc-verify", "Monte Carlo equilibrium verification"},
      {"inconsistency", "pre-committed vs re-optimized controls"},
      {"fk-check", "Feynman-Kac check of the PDE fields"},
      {"selftest", "acceptance suite"},
  };
  for (const auto& [name, help] : subs)
    app.add_subcommand(name, help)->callback([&rc, n = name] { rc.subcommand = n; });

  auto parse = [&](std::vector<std::string> a) -> std::optional<int> {
    std::reverse(a.begin(), a.end());
    try {
      app.parse(a);
    } catch (const CLI::CallForHelp& e) {
      out << app.help();
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << "\n" << app.help();
      return kExitConfig;
    }
    return std::nullopt;
  };
  if (auto code = parse(args)) return *code;
  if (rc.subcommand.empty() && rc.replay.empty()) {
    err << "error: a subcommand is required\n" << app.help();
    return kExitConfig;
  }

  if (!rc.replay.empty()) {
    std::ifstream f(rc.replay);
    if (!f) {
      err << "error: cannot read manifest " << rc.replay << "\n";
      return kExitConfig;
    }
    nlohmann::json m;
    try {
      m = nlohmann::json::parse(f);
      args = m.at("args").get<std::vector<std::string>>();
    } catch (const std::exception& e) {
      err << "error: bad manifest: " << e.what() << "\n";
      return kExitConfig;
    }
    const std::string out_dir = rc.out;
    rc = RunConfig{};
    app.clear();
    if (auto code = parse(args)) return *code;
    if (rc.subcommand.empty()) {
      err << "error: manifest records no subcommand\n";
      return kExitConfig;
    }
    rc.out = out_dir;
  }

  // Recorded arguments exclude the output location so a replay can write elsewhere.
  std::vector<std::string> recorded;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--out" || args[k] == "--replay") {
      ++k;
      continue;
    }
    if (args[k].rfind("--out=", 0) == 0 || args[k].rfind("--replay=", 0) == 0) continue;
    recorded.push_back(args[k]);
  }

  Output o;
  o.dir = rc.out;
  try {
    fs::create_directories(o.dir);
    int code = kExitOk;
    const auto& s = rc.subcommand;
    if (s == "lq-riccati") code = cmd_lq(rc, o, out);
    else if (s == "meanfield-lq") code = cmd_meanfield(rc, o, out);
    else if (s == "meanvar") code = cmd_meanvar(rc, o, out);
    else if (s == "planner") code = cmd_planner(rc, o, out);
    else if (s == "stackelberg") code = cmd_stackelberg(rc, o, out);
    else if (s == "pde-solve") code = cmd_pde(rc, o, out);
    else if (s == "mc-verify") code = cmd_mc_verify(rc, o, out);
    else if (s == "inconsistency") code = cmd_inconsistency(rc, o, out);
    else if (s == "fk-check") code = cmd_fk(rc, o, out);
    else if (s == "selftest") code = cmd_selftest(rc, o, out);
    write_manifest(o.dir, s, recorded, o.config, rc.seed, o.files);
    return code;
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what();
    if (!std::isnan(e.where())) err << " [at " << num(e.where()) << "]";
    err << "\n";
    return e.kind() == ErrorKind::config ? kExitConfig : kExitSolver;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitSolver;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace tic
