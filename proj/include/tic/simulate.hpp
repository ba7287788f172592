#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tic/families.hpp"
#include "tic/model_core.hpp"
#include "tic/pde_solver.hpp"

namespace tic {

struct MCConfig {
  std::size_t paths = 100000;
  int steps_per_unit = 80;  ///< Δ = 1 / steps_per_unit; window ends must fall on this grid
  std::uint64_t seed = 20240611;
  bool antithetic = false;
  std::vector<double> eps = {0.1, 0.05, 0.025};
  std::vector<double> u_grid = {-1.0, -0.5, 0.0, 0.5, 1.0};
  ExecPolicy policy = ExecPolicy::openmp;

  double dt() const { return 1.0 / steps_per_unit; }
  void validate() const;
};

/// Forward paths under a feedback strategy. Path i draws its normals from
/// mt19937_64(seed ^ i); with antithetic pairing paths 2p and 2p+1 share
/// seed ^ p and the second one negates every increment.
struct PathEnsemble {
  double t0 = 0.0;
  double x0 = 0.0;
  double dt = 0.0;
  int k0 = 0;     ///< global step index of t0
  int steps = 0;  ///< number of Euler steps from t0 to T
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  bool antithetic = false;
  std::vector<double> paths;     ///< n_paths × (steps + 1), path-major
  std::vector<double> terminal;  ///< X(T) per path

  double time(int k) const { return (k0 + k) * dt; }
  double x(std::size_t p, int k) const { return paths[p * (steps + 1) + k]; }
  std::vector<double> slice(int k) const;
};

/// Global step index of time s on the MC grid; throws ErrorKind::domain off-grid.
int mc_step_index(double s, const MCConfig& cfg);

PathEnsemble simulate_forward(const ControlProblemSpec& spec, const StrategyTable& psi, double t0,
                              double x0, const MCConfig& cfg);

struct CostEstimate {
  double value = 0.0;
  double se = 0.0;  ///< zero for quadrature
  std::size_t samples = 0;
  double y = 0.0;  ///< estimate of Y(t)
  double y_se = 0.0;
};

struct CostOptions {
  /// Θ(s, x) used for the y-slot of g⁰ when g⁰ depends on y.
  std::function<double(double s, double x)> theta;
  /// Use this value for the y-argument of h⁰ instead of the estimate of Y(t).
  std::optional<double> y_fixed;
  /// Quadrature: panels per unit time for the deterministic class.
  int quadrature_panels_per_unit = 4096;
};

/// J(t, x; Ψ). Deterministic problems use RK4 + Simpson on the ODE flow; the
/// conditional-expectation class uses Monte Carlo. CostClass::general throws
/// ErrorKind::unsupported (use solve_perturbation).
CostEstimate evaluate_cost(const ControlProblemSpec& spec, const StrategyTable& psi, double t,
                           double x, const MCConfig& cfg, const CostOptions& opt = {});

/// Constant u on [t, t+ε), Ψ elsewhere. Window edges are matched to 1e-12.
StrategyTable perturbed_strategy(const StrategyTable& psi, double t, double eps, double u, double T);

/// Spike perturbation for the common-random-number kernel.
struct Spike {
  double eps = 0.0;
  double u = 0.0;
};

struct QuotientRow {
  double t = 0.0;
  double x = 0.0;
  int state = 0;  ///< evaluation state index at this t
  double eps = 0.0;
  double u = 0.0;
  double quotient = 0.0;
  double se = 0.0;
  double j_eps = 0.0;
  double j_bar = 0.0;
};

/// [J(t,x;Ψᵉ) − J(t,x;Ψ)]/ε for every spike, all strategies driven by the same
/// normals (or the same quadrature) so the differences are coupled.
std::vector<QuotientRow> difference_quotients(const ControlProblemSpec& spec, const StrategyTable& psi,
                                              double t, double x, const std::vector<Spike>& spikes,
                                              const MCConfig& cfg, const CostOptions& opt = {});

struct VerifyReport {
  std::vector<QuotientRow> rows;
  std::vector<std::pair<double, double>> min_by_eps;  ///< (ε, min quotient)
  double tol_eq = 0.05;
  double min_quotient_smallest_eps = 0.0;
  bool pass = false;
  std::vector<std::string> warnings;
};

/// Finite-ε check of the equilibrium condition: X̄ from (0, x0) under Ψ, then
/// at each t the ensemble mean and the 25/50/75% path states are perturbed.
VerifyReport verify_equilibrium(const ControlProblemSpec& spec, const StrategyTable& psi,
                                const std::vector<double>& t_list, const MCConfig& cfg,
                                double tol_eq = 0.05, const CostOptions& opt = {});

struct GapRow {
  double tau = 0.0;
  double gap = 0.0;
  double fraction = 1.0;  ///< share of paths whose re-optimized control moved (ex41)
};

struct GapReport {
  std::string id;
  std::vector<GapRow> rows;
  std::vector<std::pair<std::string, double>> values;  ///< named scalars for the summary
  std::vector<std::string> notes;
};

struct InconsistencyOptions {
  double T = 1.0;
  double x0 = 1.0;
  std::vector<double> taus = {0.0, 0.25, 0.5, 0.75};
  MCConfig mc;
  MeanVarParams mv;
};

/// ex31, ex41, stackelberg, meanvar_precommit.
GapReport demonstrate_inconsistency(const std::string& id, const InconsistencyOptions& opt = {});

/// Pre-committed mean-variance optimum from (t, x): u(s, X) = (μ−r)/σ² (λ e^{−r(T−s)} − X)
/// with λ = x e^{r(T−t)} + e^{θ²(T−t)}/γ, θ = (μ−r)/σ.
StrategyTable meanvar_precommitted(const MeanVarParams& p, double t, double x, double u_lo = -1e3,
                                   double u_hi = 1e3);
/// −x e^{r(T−t)} − (e^{θ²(T−t)} − 1)/(2γ)
double meanvar_precommitted_cost(const MeanVarParams& p, double t, double x);
/// −x e^{r(T−t)} − θ²(T−t)/(2γ)
double meanvar_equilibrium_cost(const MeanVarParams& p, double t, double x);

struct FKPoint {
  double r = 0.0, x = 0.0;
  double theta = 0.0, mc_y = 0.0, se_y = 0.0, z_y = 0.0;
  double d = 0.0, mc_y0 = 0.0, se_y0 = 0.0, z_y0 = 0.0;
};

struct FKReport {
  std::vector<FKPoint> points;
  double max_abs_z = 0.0;
};

/// Compares Monte Carlo estimates of Y(r) and Y⁰(r) from (r, x) with Θ(r, x)
/// and Θ⁰(r, r, x, x, Θ(r, x)). Requires g free of (y, z) and g⁰ free of (y⁰, z⁰).
FKReport check_feynman_kac(const ControlProblemSpec& spec, const StrategyTable& psi,
                           const FieldTheta& theta, const FieldTheta0& theta0,
                           const std::vector<std::pair<double, double>>& points, const MCConfig& cfg);

/// Sum in a fixed pairwise order (independent of thread count).
double pairwise_sum(const double* v, std::size_t n);

}  // namespace tic
