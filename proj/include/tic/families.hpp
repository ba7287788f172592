#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tic/model_core.hpp"
#include "tic/ode_riccati.hpp"

namespace tic {

/// Serialized problem: {"family": "...", "params": {...}, "T": ..., "U": [lo, hi]}.
struct ProblemConfig {
  std::string family;
  nlohmann::json params = nlohmann::json::object();
  double T = 1.0;
  double u_lo = -10.0;
  double u_hi = 10.0;

  double param(const std::string& key, double fallback) const;
};

/// Throws ErrorKind::config on malformed documents.
ProblemConfig parse_problem_config(const nlohmann::json& doc);
nlohmann::json to_json(const ProblemConfig& cfg);

using FamilyBuilder = std::function<ControlProblemSpec(const ProblemConfig&)>;

/// Code-registered problems; the built-in families are registered on first use.
void register_family(const std::string& name, FamilyBuilder builder);
std::vector<std::string> registered_families();
ControlProblemSpec make_problem(const ProblemConfig& cfg);

struct MeanVarParams {
  double r = 0.03, mu = 0.08, sigma = 0.2, gamma = 2.0, T = 1.0, x0 = 1.0;
};

/// dX = (rX + (μ−r)u)ds + σu dW, Y = E_s[X(T)], J = E_t[−X(T) + γ/2 X(T)²] − γ/2 Y(t)².
ControlProblemSpec meanvar_problem(const MeanVarParams& p, double u_lo = -10.0, double u_hi = 10.0);

/// General scalar LQ data (time-dependent coefficients evaluated pointwise).
ControlProblemSpec lq_problem(const LQSpec& lq, double x0, double u_lo = -10.0, double u_hi = 10.0);
LQSpec example41_lq(double T = 1.0);

/// Deterministic leader problem: Ẏ = (Y+u)/(T+1−s), Y(T) = 0, running cost Y + u + u².
ControlProblemSpec stackelberg_problem(double T = 1.0, double x0 = 0.0);

/// Ẋ = 0, Ẏ = u, Y(T) = 0, running cost Y + u + u².
ControlProblemSpec example31_problem(double T = 1.0, double x0 = 0.0);

enum class LinearTerminal { zero, x, x2, bumps };

struct LinearParams {
  double a = 1.0;       ///< diffusion coefficient a = σ²/2
  double drift = 0.0;   ///< constant drift
  double source = 0.0;  ///< constant source in the Θ equation
  LinearTerminal terminal = LinearTerminal::x;
  double T = 1.0;
  double x0 = 0.0;
};

/// Control-free linear problem with cost Y(t) (h⁰ = y, g⁰ = 0).
ControlProblemSpec linear_problem(const LinearParams& p);
/// 0.6 exp(−(x−0.7)²/0.5) − 0.4 exp(−(x+1.1)²/0.8), the bounded terminal used by tests.
double bumps(double x);

struct RecursiveParams {
  double rho = 0.2, kappa = 0.0, sigma = 1.0, amp = 1.0, ell = 0.5, T = 1.0, x0 = 0.0;
};

/// b = u, σ const, g = −ρy + κz + u²/2 + ℓ sin x, h = amp cos x, cost Y(t).
ControlProblemSpec recursive_problem(const RecursiveParams& p, double u_lo = -5.0, double u_hi = 5.0);

struct SeparableParams {
  double r = 0.05, sigma = 0.4, c = 1.0, T = 1.0, x0 = 0.0;
};

/// b = rx + u, σ const, h = x, g⁰ = c u²/2, h⁰ = −x + (x−x̃)²/2 − y²/2 + x̃y/4.
ControlProblemSpec separable_problem(const SeparableParams& p, double u_lo = -5.0, double u_hi = 5.0);

struct DiscountParams {
  double k = 1.0, sigma = 0.5, T = 1.0, x0 = 0.0;
};

/// b = u, σ const, hyperbolic discount: g⁰ = (u² + x²)/(2(1 + k(s−t))), h⁰ = x²/(2(1 + k(T−t))).
ControlProblemSpec discount_problem(const DiscountParams& p, double u_lo = -5.0, double u_hi = 5.0);

struct VarianceTargetParams {
  double sigma = 0.5, c = 1.0, T = 1.0, x0 = 0.0;
};

/// b = u, σ const, h = x, g⁰ = c u²/2, h⁰ = (x − y)²/2 declared non-separable,
/// so the y-grid route is exercised.
ControlProblemSpec variance_target_problem(const VarianceTargetParams& p, double u_lo = -5.0,
                                           double u_hi = 5.0);

}  // namespace tic
