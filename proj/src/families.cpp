#include "tic/families.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace tic {

double ProblemConfig::param(const std::string& key, double fallback) const {
  if (!params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (!v.is_number()) throw Error(ErrorKind::config, "parameter '" + key + "' must be a number");
  return v.get<double>();
}

ProblemConfig parse_problem_config(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::config, "problem config must be a JSON object");
  ProblemConfig cfg;
  if (!doc.contains("family") || !doc.at("family").is_string())
    throw Error(ErrorKind::config, "problem config needs a string 'family'");
  cfg.family = doc.at("family").get<std::string>();
  if (doc.contains("params")) {
    if (!doc.at("params").is_object()) throw Error(ErrorKind::config, "'params' must be an object");
    cfg.params = doc.at("params");
  }
  if (doc.contains("T")) {
    if (!doc.at("T").is_number()) throw Error(ErrorKind::config, "'T' must be a number");
    cfg.T = doc.at("T").get<double>();
  }
  if (!(cfg.T > 0.0)) throw Error(ErrorKind::config, "'T' must be positive");
  if (doc.contains("U")) {
    const auto& u = doc.at("U");
    if (!u.is_array() || u.size() != 2 || !u[0].is_number() || !u[1].is_number())
      throw Error(ErrorKind::config, "'U' must be [lo, hi]");
    cfg.u_lo = u[0].get<double>();
    cfg.u_hi = u[1].get<double>();
  }
  if (!(cfg.u_lo < cfg.u_hi)) throw Error(ErrorKind::config, "'U' needs lo < hi");
  return cfg;
}

nlohmann::json to_json(const ProblemConfig& cfg) {
  return {{"family", cfg.family}, {"params", cfg.params}, {"T", cfg.T}, {"U", {cfg.u_lo, cfg.u_hi}}};
}

namespace {

const Vec kZero{0.0, 0.0};

CostTerminalFn separable_h0(const SeparableTerminal& sep) {
  return [sep](double t, double xt, double x, const Vec& y) { return sep.f(t, xt, x) + sep.g(t, xt, y); };
}

std::map<std::string, FamilyBuilder>& registry() {
  static std::map<std::string, FamilyBuilder> reg;
  return reg;
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

void register_builtins_locked() {
  auto& reg = registry();
  if (!reg.empty()) return;
  reg["meanvar"] = [](const ProblemConfig& c) {
    MeanVarParams p;
    p.r = c.param("r", p.r);
    p.mu = c.param("mu", p.mu);
    p.sigma = c.param("sigma", p.sigma);
    p.gamma = c.param("gamma", p.gamma);
    p.x0 = c.param("x0", p.x0);
    p.T = c.T;
    return meanvar_problem(p, c.u_lo, c.u_hi);
  };
  reg["lq"] = [](const ProblemConfig& c) {
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
    return lq_problem(lq, c.param("x0", 1.0), c.u_lo, c.u_hi);
  };
  reg["ex41"] = [](const ProblemConfig& c) {
    return lq_problem(example41_lq(c.T), c.param("x0", 1.0), c.u_lo, c.u_hi);
  };
  reg["stackelberg"] = [](const ProblemConfig& c) {
    auto s = stackelberg_problem(c.T, c.param("x0", 0.0));
    s.u_lo = c.u_lo;
    s.u_hi = c.u_hi;
    return s;
  };
  reg["ex31"] = [](const ProblemConfig& c) {
    auto s = example31_problem(c.T, c.param("x0", 0.0));
    s.u_lo = c.u_lo;
    s.u_hi = c.u_hi;
    return s;
  };
  reg["linear"] = [](const ProblemConfig& c) {
    LinearParams p;
    p.a = c.param("a", p.a);
    p.drift = c.param("drift", p.drift);
    p.source = c.param("source", p.source);
    p.x0 = c.param("x0", p.x0);
    p.T = c.T;
    const std::string term = c.params.value("terminal", std::string("x"));
    if (term == "zero") p.terminal = LinearTerminal::zero;
    else if (term == "x") p.terminal = LinearTerminal::x;
    else if (term == "x2") p.terminal = LinearTerminal::x2;
    else if (term == "bumps") p.terminal = LinearTerminal::bumps;
    else throw Error(ErrorKind::config, "linear: unknown terminal '" + term + "'");
    return linear_problem(p);
  };
  reg["recursive"] = [](const ProblemConfig& c) {
    RecursiveParams p;
    p.rho = c.param("rho", p.rho);
    p.kappa = c.param("kappa", p.kappa);
    p.sigma = c.param("sigma", p.sigma);
    p.amp = c.param("amp", p.amp);
    p.ell = c.param("ell", p.ell);
    p.x0 = c.param("x0", p.x0);
    p.T = c.T;
    return recursive_problem(p, c.u_lo, c.u_hi);
  };
  reg["separable"] = [](const ProblemConfig& c) {
    SeparableParams p;
    p.r = c.param("r", p.r);
    p.sigma = c.param("sigma", p.sigma);
    p.c = c.param("c", p.c);
    p.x0 = c.param("x0", p.x0);
    p.T = c.T;
    return separable_problem(p, c.u_lo, c.u_hi);
  };
  reg["discount"] = [](const ProblemConfig& c) {
    DiscountParams p;
    p.k = c.param("k", p.k);
    p.sigma = c.param("sigma", p.sigma);
    p.x0 = c.param("x0", p.x0);
    p.T = c.T;
    return discount_problem(p, c.u_lo, c.u_hi);
  };
  reg["variance_target"] = [](const ProblemConfig& c) {
    VarianceTargetParams p;
    p.sigma = c.param("sigma", p.sigma);
    p.c = c.param("c", p.c);
    p.x0 = c.param("x0", p.x0);
    p.T = c.T;
    return variance_target_problem(p, c.u_lo, c.u_hi);
  };
}

}  // namespace

void register_family(const std::string& name, FamilyBuilder builder) {
  std::lock_guard lock(registry_mutex());
  register_builtins_locked();
  registry()[name] = std::move(builder);
}

std::vector<std::string> registered_families() {
  std::lock_guard lock(registry_mutex());
  register_builtins_locked();
  std::vector<std::string> names;
  for (const auto& [k, v] : registry()) names.push_back(k);
  return names;
}

ControlProblemSpec make_problem(const ProblemConfig& cfg) {
  FamilyBuilder builder;
  {
    std::lock_guard lock(registry_mutex());
    register_builtins_locked();
    auto it = registry().find(cfg.family);
    if (it == registry().end()) {
      if (cfg.family == "planner")
        throw Error(ErrorKind::config, "family 'planner' is solved by the ODE route (planner subcommand)");
      throw Error(ErrorKind::config, "unknown problem family '" + cfg.family + "'");
    }
    builder = it->second;
  }
  return builder(cfg);
}

ControlProblemSpec meanvar_problem(const MeanVarParams& p, double u_lo, double u_hi) {
  ControlProblemSpec s;
  s.name = "meanvar";
  s.m = 1;
  s.T = p.T;
  s.u_lo = u_lo;
  s.u_hi = u_hi;
  s.x0 = p.x0;
  const double r = p.r, ex = p.mu - p.r, sg = p.sigma, gm = p.gamma;
  s.b = [r, ex](double, double x, double u) { return r * x + ex * u; };
  s.sigma = [sg](double, double, double u) { return sg * u; };
  s.g = [](double, double, double, const Vec&, const Vec&) { return kZero; };
  s.h = [](double x) { return Vec{x, 0.0}; };
  s.g0 = [](double, double, double, double, double, const Vec&, const Vec&, double, double) { return 0.0; };
  SeparableTerminal sep;
  sep.f = [gm](double, double, double x) { return -x + 0.5 * gm * x * x; };
  sep.g = [gm](double, double, const Vec& y) { return -0.5 * gm * y[0] * y[0]; };
  sep.g_y = [gm](double, double, const Vec& y) { return Vec{-gm * y[0], 0.0}; };
  s.h0 = separable_h0(sep);
  s.separable = sep;
  s.diffusion_control_free = false;
  s.cost_class = CostClass::bolza_condexp;
  s.cost_depends_on_anchor_time = false;
  s.cost_depends_on_anchor_state = false;
  return s;
}

LQSpec example41_lq(double T) {
  LQSpec lq;
  lq.A = constant(0.0);
  lq.B = constant(1.0);
  lq.C = constant(1.0);
  lq.D = constant(0.0);
  lq.R = constant(2.0);
  lq.H = 1.0;
  lq.G1 = 0.0;
  lq.G2 = 2.0;
  lq.T = T;
  return lq;
}

ControlProblemSpec lq_problem(const LQSpec& lq, double x0, double u_lo, double u_hi) {
  ControlProblemSpec s;
  s.name = "lq";
  s.m = 1;
  s.T = lq.T;
  s.u_lo = u_lo;
  s.u_hi = u_hi;
  s.x0 = x0;
  s.b = [lq](double t, double x, double u) { return lq.A(t) * x + lq.B(t) * u; };
  s.sigma = [lq](double t, double x, double u) { return lq.C(t) * x + lq.D(t) * u; };
  s.g = [lq](double t, double x, double u, const Vec& y, const Vec& z) {
    return Vec{lq.Ahat(t) * x + lq.Bhat(t) * u + lq.Chat(t) * y[0] + lq.Dhat(t) * z[0], 0.0};
  };
  const double H = lq.H;
  s.h = [H](double x) { return Vec{H * x, 0.0}; };
  s.g0 = [lq](double, double t, double, double x, double u, const Vec& y, const Vec& z, double, double) {
    return 0.5 * (lq.Q(t) * x * x + lq.M(t) * y[0] * y[0] + lq.N(t) * z[0] * z[0] + lq.R(t) * u * u);
  };
  SeparableTerminal sep;
  const double G1 = lq.G1, G2 = lq.G2, G3 = lq.G3, gl = lq.g;
  sep.f = [G1, gl](double, double, double x) { return 0.5 * G1 * x * x + gl * x; };
  sep.g = [G2, G3](double, double xt, const Vec& y) { return 0.5 * G2 * y[0] * y[0] + 0.5 * G3 * xt * y[0]; };
  sep.g_y = [G2, G3](double, double xt, const Vec& y) { return Vec{G2 * y[0] + 0.5 * G3 * xt, 0.0}; };
  s.h0 = separable_h0(sep);
  s.separable = sep;

  bool d_zero = true, condexp = true;
  for (double t : {0.0, 0.5 * lq.T, lq.T}) {
    if (lq.D(t) != 0.0) d_zero = false;
    if (lq.M(t) != 0.0 || lq.N(t) != 0.0 || lq.Dhat(t) != 0.0 || lq.Chat(t) != lq.Chat(0.0))
      condexp = false;
  }
  s.diffusion_control_free = d_zero;
  s.cost_class = condexp ? CostClass::bolza_condexp : CostClass::general;
  s.cost_depends_on_anchor_time = false;
  s.cost_depends_on_anchor_state = (G3 != 0.0);
  return s;
}

ControlProblemSpec stackelberg_problem(double T, double x0) {
  ControlProblemSpec s;
  s.name = "stackelberg";
  s.m = 1;
  s.T = T;
  s.x0 = x0;
  s.b = [](double, double, double u) { return u; };
  s.sigma = [](double, double, double) { return 0.0; };
  s.g = [T](double t, double, double u, const Vec& y, const Vec&) {
    return Vec{-(y[0] + u) / (T + 1.0 - t), 0.0};
  };
  s.h = [](double) { return kZero; };
  s.g0 = [](double, double, double, double, double u, const Vec& y, const Vec&, double, double) {
    return y[0] + u + u * u;
  };
  s.h0 = [](double, double, double, const Vec&) { return 0.0; };
  s.diffusion_control_free = true;
  s.cost_class = CostClass::deterministic;
  s.cost_depends_on_anchor_time = false;
  s.cost_depends_on_anchor_state = false;
  return s;
}

ControlProblemSpec example31_problem(double T, double x0) {
  ControlProblemSpec s;
  s.name = "ex31";
  s.m = 1;
  s.T = T;
  s.x0 = x0;
  s.b = [](double, double, double) { return 0.0; };
  s.sigma = [](double, double, double) { return 0.0; };
  s.g = [](double, double, double u, const Vec&, const Vec&) { return Vec{-u, 0.0}; };
  s.h = [](double) { return kZero; };
  s.g0 = [](double, double, double, double, double u, const Vec& y, const Vec&, double, double) {
    return y[0] + u + u * u;
  };
  s.h0 = [](double, double, double, const Vec&) { return 0.0; };
  s.diffusion_control_free = true;
  s.cost_class = CostClass::deterministic;
  s.cost_depends_on_anchor_time = false;
  s.cost_depends_on_anchor_state = false;
  return s;
}

double bumps(double x) {
  return 0.6 * std::exp(-(x - 0.7) * (x - 0.7) / 0.5) - 0.4 * std::exp(-(x + 1.1) * (x + 1.1) / 0.8);
}

namespace {

SeparableTerminal identity_in_y() {
  SeparableTerminal sep;
  sep.f = [](double, double, double) { return 0.0; };
  sep.g = [](double, double, const Vec& y) { return y[0]; };
  sep.g_y = [](double, double, const Vec&) { return Vec{1.0, 0.0}; };
  return sep;
}

}  // namespace

ControlProblemSpec linear_problem(const LinearParams& p) {
  ControlProblemSpec s;
  s.name = "linear";
  s.m = 1;
  s.T = p.T;
  s.u_lo = -1.0;
  s.u_hi = 1.0;
  s.x0 = p.x0;
  const double drift = p.drift, source = p.source, sg = std::sqrt(2.0 * p.a);
  s.b = [drift](double, double, double) { return drift; };
  s.sigma = [sg](double, double, double) { return sg; };
  s.g = [source](double, double, double, const Vec&, const Vec&) { return Vec{source, 0.0}; };
  switch (p.terminal) {
    case LinearTerminal::zero: s.h = [](double) { return kZero; }; break;
    case LinearTerminal::x: s.h = [](double x) { return Vec{x, 0.0}; }; break;
    case LinearTerminal::x2: s.h = [](double x) { return Vec{x * x, 0.0}; }; break;
    case LinearTerminal::bumps: s.h = [](double x) { return Vec{bumps(x), 0.0}; }; break;
  }
  s.g0 = [](double, double, double, double, double, const Vec&, const Vec&, double, double) { return 0.0; };
  s.separable = identity_in_y();
  s.h0 = separable_h0(*s.separable);
  s.closed_form_minimizer = [](const DiagonalPoint&) { return 0.0; };
  s.diffusion_control_free = true;
  s.cost_class = CostClass::bolza_condexp;
  s.cost_depends_on_anchor_time = false;
  s.cost_depends_on_anchor_state = false;
  return s;
}

ControlProblemSpec recursive_problem(const RecursiveParams& p, double u_lo, double u_hi) {
  ControlProblemSpec s;
  s.name = "recursive";
  s.m = 1;
  s.T = p.T;
  s.u_lo = u_lo;
  s.u_hi = u_hi;
  s.x0 = p.x0;
  const double rho = p.rho, kappa = p.kappa, sg = p.sigma, amp = p.amp, ell = p.ell;
  s.b = [](double, double, double u) { return u; };
  s.sigma = [sg](double, double, double) { return sg; };
  s.g = [rho, kappa, ell](double, double x, double u, const Vec& y, const Vec& z) {
    return Vec{-rho * y[0] + kappa * z[0] + 0.5 * u * u + ell * std::sin(x), 0.0};
  };
  s.h = [amp](double x) { return Vec{amp * std::cos(x), 0.0}; };
  s.g0 = [](double, double, double, double, double, const Vec&, const Vec&, double, double) { return 0.0; };
  s.separable = identity_in_y();
  s.h0 = separable_h0(*s.separable);
  s.diffusion_control_free = true;
  s.cost_class = kappa == 0.0 ? CostClass::bolza_condexp : CostClass::general;
  s.cost_depends_on_anchor_time = false;
  s.cost_depends_on_anchor_state = false;
  return s;
}

ControlProblemSpec separable_problem(const SeparableParams& p, double u_lo, double u_hi) {
  ControlProblemSpec s;
  s.name = "separable";
  s.m = 1;
  s.T = p.T;
  s.u_lo = u_lo;
  s.u_hi = u_hi;
  s.x0 = p.x0;
  const double r = p.r, sg = p.sigma, c = p.c;
  s.b = [r](double, double x, double u) { return r * x + u; };
  s.sigma = [sg](double, double, double) { return sg; };
  s.g = [](double, double, double, const Vec&, const Vec&) { return kZero; };
  s.h = [](double x) { return Vec{x, 0.0}; };
  s.g0 = [c](double, double, double, double, double u, const Vec&, const Vec&, double, double) {
    return 0.5 * c * u * u;
  };
  SeparableTerminal sep;
  sep.f = [](double, double xt, double x) { return -x + 0.5 * (x - xt) * (x - xt); };
  sep.g = [](double, double xt, const Vec& y) { return -0.5 * y[0] * y[0] + 0.25 * xt * y[0]; };
  sep.g_y = [](double, double xt, const Vec& y) { return Vec{-y[0] + 0.25 * xt, 0.0}; };
  s.separable = sep;
  s.h0 = separable_h0(sep);
  s.diffusion_control_free = true;
  s.cost_class = CostClass::bolza_condexp;
  s.cost_depends_on_anchor_time = false;
  s.cost_depends_on_anchor_state = true;
  return s;
}

ControlProblemSpec discount_problem(const DiscountParams& p, double u_lo, double u_hi) {
  ControlProblemSpec s;
  s.name = "discount";
  s.m = 1;
  s.T = p.T;
  s.u_lo = u_lo;
  s.u_hi = u_hi;
  s.x0 = p.x0;
  const double k = p.k, sg = p.sigma, T = p.T;
  s.b = [](double, double, double u) { return u; };
  s.sigma = [sg](double, double, double) { return sg; };
  s.g = [](double, double, double, const Vec&, const Vec&) { return kZero; };
  s.h = [](double) { return kZero; };
  s.g0 = [k](double t, double r, double, double x, double u, const Vec&, const Vec&, double, double) {
    return 0.5 * (u * u + x * x) / (1.0 + k * (r - t));
  };
  SeparableTerminal sep;
  sep.f = [k, T](double t, double, double x) { return 0.5 * x * x / (1.0 + k * (T - t)); };
  sep.g = [](double, double, const Vec&) { return 0.0; };
  sep.g_y = [](double, double, const Vec&) { return kZero; };
  s.separable = sep;
  s.h0 = separable_h0(sep);
  s.diffusion_control_free = true;
  s.cost_class = CostClass::bolza_condexp;
  s.cost_depends_on_anchor_time = true;
  s.cost_depends_on_anchor_state = false;
  return s;
}

ControlProblemSpec variance_target_problem(const VarianceTargetParams& p, double u_lo, double u_hi) {
  ControlProblemSpec s;
  s.name = "variance_target";
  s.m = 1;
  s.T = p.T;
  s.u_lo = u_lo;
  s.u_hi = u_hi;
  s.x0 = p.x0;
  const double sg = p.sigma, c = p.c;
  s.b = [](double, double, double u) { return u; };
  s.sigma = [sg](double, double, double) { return sg; };
  s.g = [](double, double, double, const Vec&, const Vec&) { return kZero; };
  s.h = [](double x) { return Vec{x, 0.0}; };
  s.g0 = [c](double, double, double, double, double u, const Vec&, const Vec&, double, double) {
    return 0.5 * c * u * u;
  };
  s.h0 = [](double, double, double x, const Vec& y) { return 0.5 * (x - y[0]) * (x - y[0]); };
  s.diffusion_control_free = true;
  s.cost_class = CostClass::bolza_condexp;
  s.cost_depends_on_anchor_time = false;
  s.cost_depends_on_anchor_state = false;
  return s;
}

}  // namespace tic
