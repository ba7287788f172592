#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tic/errors.hpp"

namespace tic {

/// Stand-in for an infinite control bound. Only legal together with a
/// closed-form minimizer; numeric scans refuse it.
inline constexpr double kControlInfinity = 1e12;

/// Backward-state vector. Only the first `m` entries are meaningful (m <= 2).
using Vec = std::array<double, 2>;

enum class CostClass { deterministic, bolza_condexp, general };
const char* to_string(CostClass c) noexcept;

using CoefficientFn = std::function<double(double s, double x, double u)>;
using BackwardFn = std::function<Vec(double s, double x, double u, const Vec& y, const Vec& z)>;
using TerminalFn = std::function<Vec(double x)>;
using CostRateFn = std::function<double(double t, double s, double xt, double x, double u,
                                        const Vec& y, const Vec& z, double y0, double z0)>;
using CostTerminalFn = std::function<double(double t, double xt, double x, const Vec& y)>;

/// Everything the minimisation of the hatted cost Hamiltonian needs at a
/// diagonal point (s, s, x, x, Θ(s,x)).
struct DiagonalPoint {
  double s = 0.0;
  double x = 0.0;
  Vec theta{};
  Vec theta_x{};
  Vec theta_xx{};
  double d = 0.0;    ///< Θ⁰ on the diagonal
  double dx = 0.0;   ///< Θ⁰_x on the diagonal
  double dxx = 0.0;  ///< Θ⁰_xx on the diagonal
  Vec dy{};          ///< Θ⁰_y on the diagonal (q⁰)
};

/// Cost terminal of the form h⁰(t,x̃,x,y) = f(t,x̃,x) + g(t,x̃,y).
/// Θ⁰ then splits into a field solved in (s,x) plus g(t,x̃,y) carried analytically.
struct SeparableTerminal {
  std::function<double(double t, double xt, double x)> f;
  std::function<double(double t, double xt, const Vec& y)> g;
  std::function<Vec(double t, double xt, const Vec& y)> g_y;
};

/// Coefficient bundle of a controlled forward-backward problem with a
/// recursive (Volterra-type) cost; state dimension 1, m backward components.
struct ControlProblemSpec {
  std::string name;
  int m = 1;
  double T = 1.0;
  double u_lo = -1.0;
  double u_hi = 1.0;
  double x0 = 0.0;  ///< reference initial state used by verification routines

  CoefficientFn b;
  CoefficientFn sigma;
  BackwardFn g;
  TerminalFn h;
  CostRateFn g0;
  CostTerminalFn h0;

  bool diffusion_control_free = true;
  CostClass cost_class = CostClass::general;
  // Conservative defaults: the anchor family is collapsed only when a
  // builder declares the cost free of the anchor time or anchor state.
  bool cost_depends_on_anchor_time = true;
  bool cost_depends_on_anchor_state = true;
  std::optional<SeparableTerminal> separable;
  std::function<double(const DiagonalPoint&)> closed_form_minimizer;

  double a(double s, double x, double u) const {
    const double sg = sigma(s, x, u);
    return 0.5 * sg * sg;
  }
};

/// tr[P a] + p b + g(s,x,u,θ,pσ), componentwise for the m backward equations.
Vec hamiltonian_H(const ControlProblemSpec& spec, double s, double x, double u, const Vec& theta,
                  const Vec& p, const Vec& P);

/// P⁰ a + p⁰ b + g⁰(t,s,x̃,x,u,θ,pσ,θ⁰,p⁰σ).
double hamiltonian_H0(const ControlProblemSpec& spec, double t, double s, double xt, double x,
                      double u, const Vec& theta, const Vec& p, double theta0, double p0,
                      double P0);

/// H⁰ + q⁰·H.
double hamiltonian_H0_hat(const ControlProblemSpec& spec, double t, double s, double xt, double x,
                          double u, const Vec& theta, const Vec& p, const Vec& P, double theta0,
                          double p0, const Vec& q0, double P0);

/// Ĥ⁰ at a diagonal point: t = s, x̃ = x, P = Θ_xx, P⁰ = Θ⁰_xx, q⁰ = Θ⁰_y.
double hamiltonian_at_diagonal(const ControlProblemSpec& spec, const DiagonalPoint& dp, double u);

/// Gaussian kernel of the operator ∂_s + a ∂_xx (n = 1):
/// (4π(r−s))^{-1/2} a(r,μ)^{-1/2} exp(−(x−μ)² / (4 a(r,μ)(r−s))).
double heat_kernel(const std::function<double(double r, double mu)>& a_fn, double s, double x,
                   double r, double mu, double lambda0 = 1e-12);

struct ProbeGrid {
  std::vector<double> s;
  std::vector<double> x;
  std::vector<double> u;
};

/// Probe over [0,T] x [x_lo,x_hi] x U (infinite control bounds replaced by ±u_cap).
ProbeGrid make_probe(const ControlProblemSpec& spec, double x_lo, double x_hi, int ns = 5,
                     int nx = 9, int nu = 5, double u_cap = 10.0);

struct SpecDiagnostics {
  bool all_finite = true;
  std::vector<std::string> non_finite;  ///< names of coefficients that produced NaN/Inf
  double lipschitz_b = 0.0;             ///< finite-difference estimate in x
  double lipschitz_sigma = 0.0;
  double lipschitz_g = 0.0;
  double lambda0 = 0.0;  ///< min of a(s,x,u) over the probe
  bool nondegenerate = false;
  bool control_free_observed = true;
  bool control_free_flag_consistent = true;
  bool pde_route_enabled = false;
  std::string suggested_route;
  CostClass detected_cost_class = CostClass::general;
  bool anchor_time_dependence = false;
  bool anchor_state_dependence = false;
  std::optional<double> linear_backward_rate;  ///< g = g(s,x,u,0,0) + rate·y, z-free (m = 1)
  std::vector<std::string> notes;
};

SpecDiagnostics validate_spec(const ControlProblemSpec& spec, const ProbeGrid& probe);

/// Returns rate if g(s,x,u,y,z) = g(s,x,u,0,0) + rate·y with no z-dependence on the probe.
std::optional<double> detect_linear_backward(const ControlProblemSpec& spec, const ProbeGrid& probe);

/// Feedback strategy Ψ(s,x): a callable or a bilinear table. Outputs always lie in U.
class StrategyTable {
 public:
  using Fn = std::function<double(double s, double x)>;

  StrategyTable() = default;
  static StrategyTable closed_form(Fn fn, double u_lo, double u_hi, bool clamp = true);
  /// `values` is row-major in time: values[j * x_nodes.size() + i] = Ψ(s_j, x_i).
  static StrategyTable grid(std::vector<double> s_nodes, std::vector<double> x_nodes,
                            std::vector<double> values, double u_lo, double u_hi,
                            bool clamp = true);

  double operator()(double s, double x) const;

  bool is_grid() const { return !fn_; }
  double u_lo() const { return u_lo_; }
  double u_hi() const { return u_hi_; }
  const std::vector<double>& s_nodes() const { return s_; }
  const std::vector<double>& x_nodes() const { return x_; }
  const std::vector<double>& values() const { return v_; }

 private:
  double bound(double u) const;

  Fn fn_;
  std::vector<double> s_, x_, v_;
  double u_lo_ = -kControlInfinity;
  double u_hi_ = kControlInfinity;
  bool clamp_ = true;
};

}  // namespace tic
