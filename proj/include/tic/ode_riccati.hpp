#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "tic/model_core.hpp"

namespace tic {

/// Samples of an ODE solution on the uniform grid t_k = k T / steps.
struct Trajectory {
  std::vector<double> t;
  std::vector<std::vector<double>> y;  ///< y[k] is the state at t[k]
};

/// dy/ds = rhs(s, y); the callback writes dy into the output span.
using OdeRhs = std::function<void(double s, std::span<const double> y, std::span<double> dy)>;

/// Classical fixed-step RK4 from s = T down to s = 0. The terminal sample is
/// stored verbatim. Throws ErrorKind::blow_up carrying the first bad time.
Trajectory rk4_backward(const OdeRhs& rhs, const std::vector<double>& terminal, double T, int steps);

using TimeFn = std::function<double(double s)>;
TimeFn constant(double c);

/// Scalar coefficients of the forward-backward LQ problem.
struct LQSpec {
  TimeFn A = constant(0), B = constant(0), C = constant(0), D = constant(0);
  TimeFn Ahat = constant(0), Bhat = constant(0), Chat = constant(0), Dhat = constant(0);
  TimeFn Q = constant(0), M = constant(0), N = constant(0), R = constant(0);
  double H = 1.0;
  double G1 = 0.0, G2 = 0.0, G3 = 0.0, g = 0.0;
  double T = 1.0;
};

/// Φ₁..Φ₇ and the strategy pair (Ψ̄, v̄): the equilibrium control is Ψ̄(s)x + v̄(s).
struct RiccatiTrajectory {
  std::vector<double> t;
  std::array<std::vector<double>, 7> phi;
  std::vector<double> psi;
  std::vector<double> v;
  double ds = 0.0;
  double terminal_residual = 0.0;  ///< max |Φ(T) − terminal data|, zero by construction
  double phi2_drift = 0.0;         ///< max |Φ₂(t) − G₂|
  double phi3_drift = 0.0;         ///< max |Φ₃(t) − G₃|
};

struct StrategyPair {
  double psi;
  double v;
};

/// Ψ̄ and v̄ from the current Φ values; throws ErrorKind::singular when the
/// denominator D²Φ₁ + R + D²Φ₆²N falls below `tol` in magnitude.
StrategyPair lq_strategy(const LQSpec& lq, double s, const std::array<double, 7>& phi,
                         double tol = 1e-12);

RiccatiTrajectory solve_riccati_lq(const LQSpec& lq, int steps = 10000);

struct MeanFieldTrajectory {
  std::vector<double> t;
  std::vector<double> phi;
  std::vector<double> phihat;
  std::vector<double> psi;
};

MeanFieldTrajectory solve_meanfield_riccati(const TimeFn& A, const TimeFn& B, const TimeFn& C,
                                            const TimeFn& D, const TimeFn& Q, const TimeFn& R,
                                            double G1, double G2, double T, int steps = 10000);

/// (Φ, Φ̂) = (Φ₁, Φ₁ + Φ₆Φ₂Φ₆) formed from a full seven-equation solution.
MeanFieldTrajectory meanfield_from_riccati(const RiccatiTrajectory& traj);

/// LQ data of the mean-variance portfolio problem (J = −E X(T) + γ/2 Var X(T)).
LQSpec meanvar_lq(double r, double mu, double sigma, double gamma, double T);

struct MeanVarResult {
  std::vector<double> t;
  // numeric solution of the reduced four-equation system
  std::vector<double> phi1, phi4, phi6, phi7, a_num, v_num;
  // closed forms
  std::vector<double> phi1_exact, a_exact, v_exact;
  // Alternative closed forms Φ₁ = e^{2γ(T−t)}, v = (μ−r)/(γσ²) e^{r(T−t)}.
  // They do not solve the system; kept so reports can show the discrepancy.
  std::vector<double> phi1_variant, v_variant;
  double max_rel_err_phi1 = 0.0;
  double max_rel_err_v = 0.0;
  double variant_rel_gap_v = 0.0;
  StrategyTable strategy;  ///< closed-form equilibrium control v̄(s) (x-independent)
};

MeanVarResult meanvar_equilibrium(double r, double mu, double sigma, double gamma, double T,
                                  int steps = 10000, double u_lo = -10.0, double u_hi = 10.0);

struct PlannerParams {
  double r = 0.03, mu = 0.08, sigma = 0.2, gamma = 0.5, alpha = 0.4;
  double rho1 = 0.05, rho2 = 0.03, lambda = 0.5, T = 1.0;
};

struct PlannerSolution {
  std::vector<double> t;
  std::vector<double> theta1, theta2;
  std::vector<double> consumption;  ///< c(t): consumption per unit wealth
  double investment = 0.0;          ///< (μ−r)/(γσ²): investment per unit wealth
  PlannerParams params;
};

/// θ̇ᵢ right-hand side of the coupled planner system (exposed for tests).
void planner_rhs(const PlannerParams& p, double theta1, double theta2, double& d1, double& d2);
double planner_consumption(const PlannerParams& p, double theta1, double theta2);

PlannerSolution solve_planner(const PlannerParams& p, int steps = 10000);

/// Leader problem of the two-player example after the follower's response.
struct StackelbergResult {
  double T = 1.0;
  double equilibrium = -0.5;
  /// pre-committed optimum at (t, x): [ln(T+1−t) − ln(T+1−s) − 1] / 2
  double precommitted(double s, double t) const;
  /// reduced running cost [ln(T+1−s) − ln(T+1−t) + 1] u + u²
  double reduced_integrand(double s, double t, double u) const;
  /// ū(s;0) − ū(s;τ), constant in s ≥ τ
  double gap(double tau) const;
};

StackelbergResult stackelberg_leader(double T = 1.0);

}  // namespace tic
