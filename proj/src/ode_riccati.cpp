#include "tic/ode_riccati.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tic {

TimeFn constant(double c) {
  return [c](double) { return c; };
}

Trajectory rk4_backward(const OdeRhs& rhs, const std::vector<double>& terminal, double T, int steps) {
  if (steps < 1) throw Error(ErrorKind::domain, "rk4_backward: steps must be >= 1");
  if (!(T > 0.0)) throw Error(ErrorKind::domain, "rk4_backward: T must be positive");
  const std::size_t n = terminal.size();
  Trajectory out;
  out.t.resize(static_cast<std::size_t>(steps) + 1);
  out.y.assign(static_cast<std::size_t>(steps) + 1, std::vector<double>(n));
  for (int k = 0; k <= steps; ++k) out.t[k] = T * static_cast<double>(k) / steps;
  out.t[steps] = T;
  out.y[steps] = terminal;

  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (int k = steps - 1; k >= 0; --k) {
    const double s = out.t[k + 1];
    const double h = s - out.t[k];
    const std::vector<double>& y = out.y[k + 1];
    rhs(s, y, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] - 0.5 * h * k1[i];
    rhs(s - 0.5 * h, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] - 0.5 * h * k2[i];
    rhs(s - 0.5 * h, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] - h * k3[i];
    rhs(out.t[k], tmp, k4);
    std::vector<double>& yn = out.y[k];
    for (std::size_t i = 0; i < n; ++i) {
      yn[i] = y[i] - h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!std::isfinite(yn[i])) {
        std::ostringstream msg;
        msg << "ODE solution blew up at t = " << out.t[k] << " (component " << i << ")";
        throw Error(ErrorKind::blow_up, msg.str(), out.t[k]);
      }
    }
  }
  return out;
}

StrategyPair lq_strategy(const LQSpec& lq, double s, const std::array<double, 7>& phi, double tol) {
  const double B = lq.B(s), C = lq.C(s), D = lq.D(s);
  const double Bh = lq.Bhat(s), Dh = lq.Dhat(s), N = lq.N(s), R = lq.R(s);
  const auto& [p1, p2, p3, p4, p5, p6, p7] = phi;
  (void)p5;
  const double den = D * D * p1 + R + D * D * p6 * p6 * N;
  if (!(std::abs(den) >= tol)) {
    std::ostringstream msg;
    msg << "singular strategy denominator " << den << " at t = " << s;
    throw Error(ErrorKind::singular, msg.str(), s);
  }
  const double num_psi = D * p1 * C + D * p6 * p6 * N * C + B * p1 + B * p6 * p6 * p2 +
                         Bh * p2 * p6 + D * p6 * Dh * p2 * p6 + 0.5 * B * p6 * p3 + 0.5 * Bh * p3 +
                         0.5 * D * p6 * Dh * p3;
  const double num_v = B * p4 + (B * p6 + Bh + D * p6 * Dh) * p2 * p7;
  return {-num_psi / den, -num_v / den};
}

namespace {

void riccati_rhs(const LQSpec& lq, double s, std::span<const double> y, std::span<double> dy) {
  std::array<double, 7> phi;
  std::copy(y.begin(), y.end(), phi.begin());
  const auto [psi, v] = lq_strategy(lq, s, phi);
  const double A = lq.A(s), B = lq.B(s), C = lq.C(s), D = lq.D(s);
  const double Ah = lq.Ahat(s), Bh = lq.Bhat(s), Ch = lq.Chat(s), Dh = lq.Dhat(s);
  const double Q = lq.Q(s), M = lq.M(s), N = lq.N(s), R = lq.R(s);
  const auto& [p1, p2, p3, p4, p5, p6, p7] = phi;
  (void)p2;
  (void)p3;
  (void)p5;
  const double K = A + B * psi;
  const double L = C + D * psi;
  dy[0] = -(2.0 * p1 * K + L * L * p1 + Q + M * p6 * p6 + L * L * p6 * p6 * N + R * psi * psi);
  dy[1] = 0.0;
  dy[2] = 0.0;
  dy[3] = -(v * B * p1 + p4 * K + v * D * p1 * L + p7 * M * p6 + v * p6 * p6 * N * L + v * R * psi);
  dy[4] = -(p4 * B * v + 0.5 * D * D * p1 * v * v + 0.5 * p6 * p6 * N * v * v + 0.5 * R * v * v +
            0.5 * M * p7 * p7);
  dy[5] = -(p6 * K + Ah + Bh * psi + Ch * p6 + Dh * p6 * L);
  dy[6] = -(p6 * B * v + Bh * v + Ch * p7 + Dh * p6 * D * v);
}

}  // namespace

RiccatiTrajectory solve_riccati_lq(const LQSpec& lq, int steps) {
  const std::vector<double> terminal{lq.G1, lq.G2, lq.G3, lq.g, 0.0, lq.H, 0.0};
  const Trajectory tr = rk4_backward(
      [&lq](double s, std::span<const double> y, std::span<double> dy) { riccati_rhs(lq, s, y, dy); },
      terminal, lq.T, steps);
  RiccatiTrajectory out;
  out.t = tr.t;
  out.ds = lq.T / steps;
  const std::size_t n = tr.t.size();
  for (auto& c : out.phi) c.resize(n);
  out.psi.resize(n);
  out.v.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::array<double, 7> phi;
    for (int i = 0; i < 7; ++i) {
      phi[i] = tr.y[k][i];
      out.phi[i][k] = phi[i];
    }
    const auto [psi, v] = lq_strategy(lq, tr.t[k], phi);
    out.psi[k] = psi;
    out.v[k] = v;
    out.phi2_drift = std::max(out.phi2_drift, std::abs(phi[1] - lq.G2));
    out.phi3_drift = std::max(out.phi3_drift, std::abs(phi[2] - lq.G3));
  }
  for (int i = 0; i < 7; ++i)
    out.terminal_residual = std::max(out.terminal_residual, std::abs(out.phi[i].back() - terminal[i]));
  return out;
}

MeanFieldTrajectory solve_meanfield_riccati(const TimeFn& A, const TimeFn& B, const TimeFn& C,
                                            const TimeFn& D, const TimeFn& Q, const TimeFn& R,
                                            double G1, double G2, double T, int steps) {
  auto psi_of = [&](double s, double phi, double phihat) {
    const double d = D(s);
    const double den = d * phi * d + R(s);
    if (!(std::abs(den) >= 1e-12)) {
      std::ostringstream msg;
      msg << "singular strategy denominator " << den << " at t = " << s;
      throw Error(ErrorKind::singular, msg.str(), s);
    }
    return -(d * phi * C(s) + B(s) * phihat) / den;
  };
  const Trajectory tr = rk4_backward(
      [&](double s, std::span<const double> y, std::span<double> dy) {
        const double psi = psi_of(s, y[0], y[1]);
        const double K = A(s) + B(s) * psi;
        const double L = C(s) + D(s) * psi;
        const double common = L * L * y[0] + Q(s) + R(s) * psi * psi;
        dy[0] = -(2.0 * y[0] * K + common);
        dy[1] = -(2.0 * y[1] * K + common);
      },
      {G1, G1 + G2}, T, steps);
  MeanFieldTrajectory out;
  out.t = tr.t;
  for (const auto& y : tr.y) {
    out.phi.push_back(y[0]);
    out.phihat.push_back(y[1]);
  }
  for (std::size_t k = 0; k < out.t.size(); ++k)
    out.psi.push_back(psi_of(out.t[k], out.phi[k], out.phihat[k]));
  return out;
}

MeanFieldTrajectory meanfield_from_riccati(const RiccatiTrajectory& traj) {
  MeanFieldTrajectory out;
  out.t = traj.t;
  out.psi = traj.psi;
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    out.phi.push_back(traj.phi[0][k]);
    out.phihat.push_back(traj.phi[0][k] + traj.phi[5][k] * traj.phi[1][k] * traj.phi[5][k]);
  }
  return out;
}

LQSpec meanvar_lq(double r, double mu, double sigma, double gamma, double T) {
  LQSpec lq;
  lq.A = constant(r);
  lq.B = constant(mu - r);
  lq.C = constant(0.0);
  lq.D = constant(sigma);
  lq.H = 1.0;
  lq.G1 = gamma;
  lq.G2 = -gamma;
  lq.G3 = 0.0;
  lq.g = -1.0;
  lq.T = T;
  return lq;
}

MeanVarResult meanvar_equilibrium(double r, double mu, double sigma, double gamma, double T,
                                  int steps, double u_lo, double u_hi) {
  if (!(sigma > 0.0) || !(gamma > 0.0))
    throw Error(ErrorKind::domain, "meanvar_equilibrium: sigma and gamma must be positive");
  const double ex = mu - r;
  // y = (Φ₁, Φ₄, Φ₆, Φ₇); A := Φ₄ − γΦ₆Φ₇ and v̄ = −(μ−r)A/(σ²Φ₁).
  const Trajectory tr = rk4_backward(
      [=](double, std::span<const double> y, std::span<double> dy) {
        const double a = y[1] - gamma * y[2] * y[3];
        dy[0] = -2.0 * r * y[0];
        dy[1] = ex * ex * a / (sigma * sigma) - r * y[1];
        dy[2] = -r * y[2];
        dy[3] = ex * ex * y[2] * a / (sigma * sigma * y[0]);
      },
      {gamma, -1.0, 1.0, 0.0}, T, steps);

  MeanVarResult out;
  out.t = tr.t;
  const double coef = ex / (gamma * sigma * sigma);
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    const auto& y = tr.y[k];
    const double tau = T - tr.t[k];
    const double a = y[1] - gamma * y[2] * y[3];
    out.phi1.push_back(y[0]);
    out.phi4.push_back(y[1]);
    out.phi6.push_back(y[2]);
    out.phi7.push_back(y[3]);
    out.a_num.push_back(a);
    out.v_num.push_back(-ex * a / (sigma * sigma * y[0]));
    out.phi1_exact.push_back(gamma * std::exp(2.0 * r * tau));
    out.a_exact.push_back(-std::exp(r * tau));
    out.v_exact.push_back(coef * std::exp(-r * tau));
    out.phi1_variant.push_back(std::exp(2.0 * gamma * tau));
    out.v_variant.push_back(coef * std::exp(r * tau));
    out.max_rel_err_phi1 = std::max(
        out.max_rel_err_phi1, std::abs(out.phi1.back() - out.phi1_exact.back()) / std::abs(out.phi1_exact.back()));
    if (coef != 0.0) {
      out.max_rel_err_v = std::max(out.max_rel_err_v,
                                   std::abs(out.v_num.back() - out.v_exact.back()) / std::abs(out.v_exact.back()));
      out.variant_rel_gap_v = std::max(
          out.variant_rel_gap_v, std::abs(out.v_variant.back() - out.v_exact.back()) / std::abs(out.v_exact.back()));
    } else {
      out.max_rel_err_v = std::max(out.max_rel_err_v, std::abs(out.v_num.back()));
    }
  }
  out.strategy = StrategyTable::closed_form(
      [=](double s, double) { return coef * std::exp(-r * (T - s)); }, u_lo, u_hi);
  return out;
}

double planner_consumption(const PlannerParams& p, double theta1, double theta2) {
  const double e = (1.0 - p.gamma - p.alpha) / (1.0 - p.gamma);
  const double S = p.lambda * theta1 + (1.0 - p.lambda) * theta2;
  const double W = p.lambda * std::pow(theta1, e) + (1.0 - p.lambda) * std::pow(theta2, e);
  return std::pow(S / W, 1.0 / (p.alpha - 1.0));
}

void planner_rhs(const PlannerParams& p, double theta1, double theta2, double& d1, double& d2) {
  const double g1 = 1.0 - p.gamma;
  const double e = (1.0 - p.gamma - p.alpha) / (1.0 - p.gamma);
  const double S = p.lambda * theta1 + (1.0 - p.lambda) * theta2;
  const double W = p.lambda * std::pow(theta1, e) + (1.0 - p.lambda) * std::pow(theta2, e);
  const double c = std::pow(S / W, 1.0 / (p.alpha - 1.0));
  const double ratio = std::pow(S / W, p.alpha / (p.alpha - 1.0));
  const double K = p.r + (p.mu - p.r) * (p.mu - p.r) / (2.0 * p.gamma * p.sigma * p.sigma);
  auto one = [&](double th, double rho) {
    return -(g1 * th * (K - c) - g1 * rho * th / p.alpha + g1 / p.alpha * std::pow(th, e) * ratio);
  };
  d1 = one(theta1, p.rho1);
  d2 = one(theta2, p.rho2);
}

PlannerSolution solve_planner(const PlannerParams& p, int steps) {
  if (!(p.gamma > 0.0) || p.gamma == 1.0)
    throw Error(ErrorKind::domain, "solve_planner: need gamma > 0 and gamma != 1");
  if (!(p.alpha / (1.0 - p.gamma) > 0.0) || p.alpha == 1.0)
    throw Error(ErrorKind::domain, "solve_planner: need alpha/(1-gamma) > 0 and alpha != 1");
  if (!(p.lambda >= 0.0 && p.lambda <= 1.0))
    throw Error(ErrorKind::domain, "solve_planner: lambda must lie in [0,1]");
  if (!(p.sigma > 0.0)) throw Error(ErrorKind::domain, "solve_planner: sigma must be positive");

  auto guard = [](double s, double th) {
    if (!(th > 0.0)) {
      std::ostringstream msg;
      msg << "planner positivity guard: theta = " << th << " at t = " << s;
      throw Error(ErrorKind::positivity, msg.str(), s);
    }
  };
  const Trajectory tr = rk4_backward(
      [&](double s, std::span<const double> y, std::span<double> dy) {
        guard(s, y[0]);
        guard(s, y[1]);
        planner_rhs(p, y[0], y[1], dy[0], dy[1]);
      },
      {1.0, 1.0}, p.T, steps);

  PlannerSolution out;
  out.params = p;
  out.t = tr.t;
  out.investment = (p.mu - p.r) / (p.gamma * p.sigma * p.sigma);
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    guard(tr.t[k], tr.y[k][0]);
    guard(tr.t[k], tr.y[k][1]);
    out.theta1.push_back(tr.y[k][0]);
    out.theta2.push_back(tr.y[k][1]);
    out.consumption.push_back(planner_consumption(p, tr.y[k][0], tr.y[k][1]));
  }
  return out;
}

double StackelbergResult::precommitted(double s, double t) const {
  return (std::log(T + 1.0 - t) - std::log(T + 1.0 - s) - 1.0) / 2.0;
}

double StackelbergResult::reduced_integrand(double s, double t, double u) const {
  return (std::log(T + 1.0 - s) - std::log(T + 1.0 - t) + 1.0) * u + u * u;
}

double StackelbergResult::gap(double tau) const {
  return (std::log(T + 1.0) - std::log(T + 1.0 - tau)) / 2.0;
}

StackelbergResult stackelberg_leader(double T) {
  if (!(T > 0.0)) throw Error(ErrorKind::domain, "stackelberg_leader: T must be positive");
  StackelbergResult r;
  r.T = T;
  return r;
}

}  // namespace tic
