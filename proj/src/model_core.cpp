#include "tic/model_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tic {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::evaluation: return "evaluation";
    case ErrorKind::domain: return "domain";
    case ErrorKind::degeneracy: return "degeneracy";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::blow_up: return "blow-up";
    case ErrorKind::singular: return "singular";
    case ErrorKind::positivity: return "positivity";
    case ErrorKind::y_range: return "y-range";
    case ErrorKind::upper_triangle: return "upper-triangle";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

const char* to_string(CostClass c) noexcept {
  switch (c) {
    case CostClass::deterministic: return "deterministic";
    case CostClass::bolza_condexp: return "bolza_condexp";
    case CostClass::general: return "general";
  }
  return "unknown";
}

namespace {

double checked(double v, const char* coefficient) {
  if (!std::isfinite(v))
    throw Error(ErrorKind::evaluation, std::string("coefficient ") + coefficient + " is not finite");
  return v;
}

}  // namespace

Vec hamiltonian_H(const ControlProblemSpec& spec, double s, double x, double u, const Vec& theta,
                  const Vec& p, const Vec& P) {
  const double bv = checked(spec.b(s, x, u), "b");
  const double sg = checked(spec.sigma(s, x, u), "sigma");
  const double a = 0.5 * sg * sg;
  Vec z{};
  for (int i = 0; i < spec.m; ++i) z[i] = p[i] * sg;
  const Vec gv = spec.g(s, x, u, theta, z);
  Vec out{};
  for (int i = 0; i < spec.m; ++i) out[i] = P[i] * a + p[i] * bv + checked(gv[i], "g");
  return out;
}

double hamiltonian_H0(const ControlProblemSpec& spec, double t, double s, double xt, double x,
                      double u, const Vec& theta, const Vec& p, double theta0, double p0,
                      double P0) {
  const double bv = checked(spec.b(s, x, u), "b");
  const double sg = checked(spec.sigma(s, x, u), "sigma");
  Vec z{};
  for (int i = 0; i < spec.m; ++i) z[i] = p[i] * sg;
  const double g0 = checked(spec.g0(t, s, xt, x, u, theta, z, theta0, p0 * sg), "g0");
  return P0 * 0.5 * sg * sg + p0 * bv + g0;
}

double hamiltonian_H0_hat(const ControlProblemSpec& spec, double t, double s, double xt, double x,
                          double u, const Vec& theta, const Vec& p, const Vec& P, double theta0,
                          double p0, const Vec& q0, double P0) {
  double out = hamiltonian_H0(spec, t, s, xt, x, u, theta, p, theta0, p0, P0);
  const Vec hv = hamiltonian_H(spec, s, x, u, theta, p, P);
  for (int i = 0; i < spec.m; ++i) out += q0[i] * hv[i];
  return out;
}

double hamiltonian_at_diagonal(const ControlProblemSpec& spec, const DiagonalPoint& dp, double u) {
  return hamiltonian_H0_hat(spec, dp.s, dp.s, dp.x, dp.x, u, dp.theta, dp.theta_x, dp.theta_xx,
                            dp.d, dp.dx, dp.dy, dp.dxx);
}

double heat_kernel(const std::function<double(double r, double mu)>& a_fn, double s, double x,
                   double r, double mu, double lambda0) {
  if (!(r > s)) throw Error(ErrorKind::domain, "heat kernel needs r > s", s);
  const double a = a_fn(r, mu);
  if (!(a >= lambda0) || a <= 0.0)
    throw Error(ErrorKind::degeneracy, "heat kernel: a(r,mu) below lambda0", r);
  const double tau = r - s;
  const double d = x - mu;
  return std::exp(-d * d / (4.0 * a * tau)) / std::sqrt(4.0 * std::numbers::pi * tau * a);
}

ProbeGrid make_probe(const ControlProblemSpec& spec, double x_lo, double x_hi, int ns, int nx,
                     int nu, double u_cap) {
  ProbeGrid p;
  for (int k = 0; k < ns; ++k) p.s.push_back(spec.T * k / std::max(ns - 1, 1));
  for (int k = 0; k < nx; ++k) p.x.push_back(x_lo + (x_hi - x_lo) * k / std::max(nx - 1, 1));
  const double lo = std::max(spec.u_lo, -u_cap);
  const double hi = std::min(spec.u_hi, u_cap);
  for (int k = 0; k < nu; ++k) p.u.push_back(lo + (hi - lo) * k / std::max(nu - 1, 1));
  return p;
}

std::optional<double> detect_linear_backward(const ControlProblemSpec& spec, const ProbeGrid& probe) {
  if (spec.m != 1) return std::nullopt;
  std::optional<double> rate;
  for (double s : probe.s)
    for (double x : probe.x)
      for (double u : probe.u) {
        const double g00 = spec.g(s, x, u, Vec{0.0, 0.0}, Vec{0.0, 0.0})[0];
        const double g10 = spec.g(s, x, u, Vec{1.0, 0.0}, Vec{0.0, 0.0})[0];
        const double g20 = spec.g(s, x, u, Vec{-2.0, 0.0}, Vec{0.0, 0.0})[0];
        const double g01 = spec.g(s, x, u, Vec{0.0, 0.0}, Vec{1.0, 0.0})[0];
        const double k = g10 - g00;
        const double scale = 1e-10 * (1.0 + std::abs(g00) + std::abs(k));
        if (std::abs((g20 - g00) + 2.0 * k) > scale) return std::nullopt;
        if (std::abs(g01 - g00) > scale) return std::nullopt;
        if (rate && std::abs(*rate - k) > scale) return std::nullopt;
        rate = k;
      }
  return rate;
}

SpecDiagnostics validate_spec(const ControlProblemSpec& spec, const ProbeGrid& probe) {
  SpecDiagnostics d;
  if (probe.s.empty() || probe.x.empty() || probe.u.empty())
    throw Error(ErrorKind::domain, "validate_spec: empty probe grid");
  auto flag = [&](const char* name) {
    if (std::find(d.non_finite.begin(), d.non_finite.end(), name) == d.non_finite.end())
      d.non_finite.emplace_back(name);
    d.all_finite = false;
  };

  const double dx = 1e-5 * (1.0 + std::abs(probe.x.back() - probe.x.front()));
  d.lambda0 = std::numeric_limits<double>::infinity();
  bool sigma_zero = true;
  bool g0_condexp = true;  // g⁰ free of (y, z, y⁰, z⁰)
  const Vec y0{0.3, -0.2}, y1{1.1, 0.7}, z0{0.0, 0.0}, z1{0.5, -0.4};

  for (double s : probe.s)
    for (double x : probe.x) {
      const Vec hv = spec.h(x);
      for (int i = 0; i < spec.m; ++i)
        if (!std::isfinite(hv[i])) flag("h");
      for (double u : probe.u) {
        const double bv = spec.b(s, x, u);
        const double sv = spec.sigma(s, x, u);
        const Vec gv = spec.g(s, x, u, y0, z1);
        if (!std::isfinite(bv)) flag("b");
        if (!std::isfinite(sv)) flag("sigma");
        for (int i = 0; i < spec.m; ++i)
          if (!std::isfinite(gv[i])) flag("g");
        const double g0v = spec.g0(0.0, s, x, x, u, y0, z0, 0.1, 0.2);
        if (!std::isfinite(g0v)) flag("g0");
        const double h0v = spec.h0(0.0, x, x, y0);
        if (!std::isfinite(h0v)) flag("h0");

        d.lipschitz_b = std::max(d.lipschitz_b, std::abs(spec.b(s, x + dx, u) - bv) / dx);
        d.lipschitz_sigma =
            std::max(d.lipschitz_sigma, std::abs(spec.sigma(s, x + dx, u) - sv) / dx);
        const Vec gp = spec.g(s, x + dx, u, y0, z1);
        for (int i = 0; i < spec.m; ++i)
          d.lipschitz_g = std::max(d.lipschitz_g, std::abs(gp[i] - gv[i]) / dx);

        d.lambda0 = std::min(d.lambda0, 0.5 * sv * sv);
        if (sv != 0.0) sigma_zero = false;
        if (sv != spec.sigma(s, x, probe.u.front())) d.control_free_observed = false;

        const double g0b = spec.g0(0.0, s, x, x, u, y1, z1, 0.9, -0.3);
        if (std::abs(g0b - g0v) > 1e-12 * (1.0 + std::abs(g0v))) g0_condexp = false;

        const double t_alt = 0.5 * s;
        if (std::abs(spec.g0(t_alt, s, x, x, u, y0, z0, 0.1, 0.2) - g0v) > 1e-12 * (1.0 + std::abs(g0v)) ||
            std::abs(spec.h0(0.5 * spec.T, x, x, y0) - h0v) > 1e-12 * (1.0 + std::abs(h0v)))
          d.anchor_time_dependence = true;
        const double xt_alt = x + 0.37;
        if (std::abs(spec.g0(0.0, s, xt_alt, x, u, y0, z0, 0.1, 0.2) - g0v) > 1e-12 * (1.0 + std::abs(g0v)) ||
            std::abs(spec.h0(0.0, xt_alt, x, y0) - h0v) > 1e-12 * (1.0 + std::abs(h0v)))
          d.anchor_state_dependence = true;
      }
    }

  if (spec.diffusion_control_free && !d.control_free_observed) {
    d.control_free_flag_consistent = false;
    d.notes.emplace_back("diffusion_control_free is set but sigma varies with u on the probe");
  }
  if (!spec.cost_depends_on_anchor_time && d.anchor_time_dependence)
    d.notes.emplace_back("cost declared free of the anchor time but the probe sees dependence");
  if (!spec.cost_depends_on_anchor_state && d.anchor_state_dependence)
    d.notes.emplace_back("cost declared free of the anchor state but the probe sees dependence");

  d.nondegenerate = std::isfinite(d.lambda0) && d.lambda0 > 0.0;
  d.pde_route_enabled = d.nondegenerate && d.all_finite;
  if (sigma_zero) {
    d.suggested_route = "ode";
    d.notes.emplace_back("zero diffusion: PDE route disabled, use the ODE/quadrature route");
  } else if (!d.nondegenerate) {
    d.suggested_route = "monte-carlo";
    d.notes.emplace_back("diffusion vanishes somewhere on the probe: PDE route disabled");
  } else {
    d.suggested_route = "pde";
  }

  d.linear_backward_rate = detect_linear_backward(spec, probe);
  if (sigma_zero)
    d.detected_cost_class = CostClass::deterministic;
  else if (spec.m == 1 && g0_condexp && d.linear_backward_rate)
    d.detected_cost_class = CostClass::bolza_condexp;
  else
    d.detected_cost_class = CostClass::general;
  return d;
}

StrategyTable StrategyTable::closed_form(Fn fn, double u_lo, double u_hi, bool clamp) {
  if (!(u_lo < u_hi)) throw Error(ErrorKind::domain, "strategy: u_lo must be below u_hi");
  StrategyTable t;
  t.fn_ = std::move(fn);
  t.u_lo_ = u_lo;
  t.u_hi_ = u_hi;
  t.clamp_ = clamp;
  return t;
}

StrategyTable StrategyTable::grid(std::vector<double> s_nodes, std::vector<double> x_nodes,
                                  std::vector<double> values, double u_lo, double u_hi,
                                  bool clamp) {
  if (!(u_lo < u_hi)) throw Error(ErrorKind::domain, "strategy: u_lo must be below u_hi");
  if (s_nodes.empty() || x_nodes.empty() || values.size() != s_nodes.size() * x_nodes.size())
    throw Error(ErrorKind::domain, "strategy grid: shape mismatch");
  if (!std::is_sorted(s_nodes.begin(), s_nodes.end()) ||
      !std::is_sorted(x_nodes.begin(), x_nodes.end()))
    throw Error(ErrorKind::domain, "strategy grid: nodes must be increasing");
  for (double v : values)
    if (!std::isfinite(v)) throw Error(ErrorKind::evaluation, "strategy grid: non-finite sample");
  StrategyTable t;
  t.s_ = std::move(s_nodes);
  t.x_ = std::move(x_nodes);
  t.v_ = std::move(values);
  t.u_lo_ = u_lo;
  t.u_hi_ = u_hi;
  t.clamp_ = clamp;
  return t;
}

double StrategyTable::bound(double u) const {
  if (u >= u_lo_ && u <= u_hi_) return u;
  if (!clamp_ || !std::isfinite(u))
    throw Error(ErrorKind::domain, "strategy value outside the control set");
  return std::clamp(u, u_lo_, u_hi_);
}

namespace {

// Cell index and weight for linear interpolation with flat extrapolation.
void locate(const std::vector<double>& nodes, double q, std::size_t& i, double& w) {
  if (nodes.size() == 1 || q <= nodes.front()) {
    i = 0;
    w = 0.0;
    return;
  }
  if (q >= nodes.back()) {
    i = nodes.size() - 2;
    w = 1.0;
    return;
  }
  i = static_cast<std::size_t>(std::upper_bound(nodes.begin(), nodes.end(), q) - nodes.begin()) - 1;
  w = (q - nodes[i]) / (nodes[i + 1] - nodes[i]);
}

}  // namespace

double StrategyTable::operator()(double s, double x) const {
  if (fn_) return bound(fn_(s, x));
  const std::size_t nx = x_.size();
  std::size_t j, i;
  double ws, wx;
  locate(s_, s, j, ws);
  locate(x_, x, i, wx);
  auto at = [&](std::size_t jj, std::size_t ii) { return v_[jj * nx + ii]; };
  const std::size_t j1 = s_.size() > 1 ? j + 1 : j;
  const std::size_t i1 = nx > 1 ? i + 1 : i;
  // Exact at nodes: a zero weight never touches the neighbour.
  auto lerp = [](double a, double b, double w) { return w == 0.0 ? a : (w == 1.0 ? b : a + w * (b - a)); };
  const double lo = lerp(at(j, i), at(j, i1), wx);
  const double hi = lerp(at(j1, i), at(j1, i1), wx);
  return bound(lerp(lo, hi, ws));
}

}  // namespace tic
