#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tic/model_core.hpp"

namespace tic {

enum class ExecPolicy { serial, openmp };

/// Boundary treatment at x_lo and x_hi.
/// linear: zero second derivative (u₀ = 2u₁ − u₂).
/// quadratic: zero third derivative (u₀ = 3u₁ − 3u₂ + u₃); exact for quadratics.
enum class Closure { linear, quadratic };

struct GridSpec {
  double x_lo = -5.0;
  double x_hi = 5.0;
  int nx = 121;
  int nt = 201;  ///< time nodes on [0, T] including both ends
  double T = 1.0;
  std::optional<std::pair<double, double>> y_range;  ///< general y path; auto-sized when empty
  int ny = 17;
  Closure closure = Closure::quadratic;

  double dx() const { return (x_hi - x_lo) / (nx - 1); }
  double dt() const { return T / (nt - 1); }
  double x(int i) const { return i == nx - 1 ? x_hi : x_lo + i * dx(); }
  double s(int j) const { return j == nt - 1 ? T : j * dt(); }
  std::vector<double> x_nodes() const;
  std::vector<double> s_nodes() const;
  /// Δt·max a/Δx², informational only.
  double diffusion_number(double a_max) const { return dt() * a_max / (dx() * dx()); }
  void validate() const;
};

/// [x0 − 5σ̄√T, x0 + 5σ̄√T].
GridSpec default_grid(const ControlProblemSpec& spec, double sigma_bar, int nx = 121, int nt = 201);

/// Θ(s_j, x_i) for each backward component, stored row-major in time.
struct FieldTheta {
  int m = 1;
  GridSpec grid;
  std::array<std::vector<double>, 2> v;

  FieldTheta() = default;
  FieldTheta(const GridSpec& g, int m_);

  double value(int c, int j, int i) const { return v[c][static_cast<std::size_t>(j) * grid.nx + i]; }
  double& value(int c, int j, int i) { return v[c][static_cast<std::size_t>(j) * grid.nx + i]; }
  double dx(int c, int j, int i) const;
  double dxx(int c, int j, int i) const;
  Vec values(int j, int i) const;
  Vec dxs(int j, int i) const;
  Vec dxxs(int j, int i) const;
  /// Linear in s, cubic in x; flat outside the grid.
  double at(int c, double s, double x) const;
};

/// Θ⁰ as a family of (s,x)-fields indexed by anchors (t_k, x̃_l, y_r).
/// Anchor grids are the time and space grids. When the cost ignores the anchor
/// time (or state) a single field serves every anchor in that coordinate.
/// With a separable cost terminal the y-dependence is carried analytically:
/// Θ⁰ = field + G(t, x̃, y).
class FieldTheta0 {
 public:
  FieldTheta0() = default;
  FieldTheta0(const GridSpec& g, bool time_anchored, bool state_anchored,
              std::optional<SeparableTerminal> sep, std::vector<double> y_nodes);

  const GridSpec& grid() const { return grid_; }
  bool time_anchored() const { return time_anchored_; }
  bool state_anchored() const { return state_anchored_; }
  bool separable() const { return sep_.has_value(); }
  const std::vector<double>& y_nodes() const { return y_; }
  int n_time_anchors() const { return time_anchored_ ? grid_.nt : 1; }
  int n_state_anchors() const { return state_anchored_ ? grid_.nx : 1; }
  int n_y() const { return sep_ ? 1 : static_cast<int>(y_.size()); }
  std::size_t n_fields() const;
  /// First time level populated for stored time-anchor index fk.
  int start_level(int fk) const { return time_anchored_ ? fk : 0; }

  /// Anchor time / state values passed to the cost for stored indices.
  double anchor_t(int fk) const;
  double anchor_xt(int fl) const;

  /// Raw stored sample. k is the anchor time index on the time grid; reading
  /// an anchor later than the level j throws ErrorKind::upper_triangle.
  double raw(int k, int l, int r, int j, int i) const;
  double raw_dx(int k, int l, int r, int j, int i) const;
  double raw_dxx(int k, int l, int r, int j, int i) const;

  /// Θ⁰(t_k, s_j, x̃_l, x_i, y) and its partials; y is interpolated (cubic)
  /// on the y grid or handled analytically. Out-of-range y throws ErrorKind::y_range.
  double value(int k, int l, int j, int i, const Vec& y) const;
  double dx(int k, int l, int j, int i, const Vec& y) const;
  double dxx(int k, int l, int j, int i, const Vec& y) const;
  Vec dy(int k, int l, int j, int i, const Vec& y) const;

  std::vector<double>& field(int fk, int fl, int r);
  const std::vector<double>& field(int fk, int fl, int r) const;

 private:
  void guard(int k, int j) const;
  template <class Sample>
  double interp_y(double y, int j, int i, Sample&& sample, bool derivative) const;

  GridSpec grid_;
  bool time_anchored_ = false;
  bool state_anchored_ = false;
  std::optional<SeparableTerminal> sep_;
  std::vector<double> y_;
  std::vector<std::vector<double>> fields_;
};

/// Values of Θ⁰ on the diagonal (s, s, x, x, Θ(s,x)) over the full (s,x) grid.
struct DiagonalBundle {
  GridSpec grid;
  std::vector<double> d, dx, dxx;
  std::array<std::vector<double>, 2> dy;

  DiagonalBundle() = default;
  explicit DiagonalBundle(const GridSpec& g);
  std::size_t at(int j, int i) const { return static_cast<std::size_t>(j) * grid.nx + i; }
};

struct PdeOptions {
  ExecPolicy policy = ExecPolicy::openmp;
  /// Permit σ(s,x,u) depending on u by freezing u = Ψ(s,x) inside the diffusion.
  bool freeze_control_diffusion = false;
  double lambda0 = 1e-12;
};

/// One backward IMEX step of ∂ₛu + a u_xx + b u_x + f = 0:
/// (I − Δt a D²) uʲ = uʲ⁺¹ + Δt (b D¹uʲ⁺¹ + f). `a` belongs to the new level,
/// `drift` and `source` to the old one. Interior nodes need a ≥ lambda0.
std::vector<double> step_parabolic(std::span<const double> next, std::span<const double> a,
                                   std::span<const double> drift, std::span<const double> source,
                                   double dt, double dx, Closure closure = Closure::quadratic,
                                   double lambda0 = 1e-12);

/// Node values of a strategy on the grid, row-major in time.
std::vector<double> sample_strategy(const StrategyTable& psi, const GridSpec& grid);

FieldTheta solve_theta(const ControlProblemSpec& spec, const StrategyTable& psi,
                       const GridSpec& grid, const PdeOptions& opt = {});
FieldTheta solve_theta(const ControlProblemSpec& spec, const std::vector<double>& psi_nodes,
                       const GridSpec& grid, const PdeOptions& opt = {});

/// y grid used by the general path: the configured range, or the range of Θ padded.
std::vector<double> y_grid_for(const FieldTheta& theta, const GridSpec& grid);

FieldTheta0 solve_theta0_family(const ControlProblemSpec& spec, const StrategyTable& psi,
                                const FieldTheta& theta, const DiagonalBundle& guess,
                                const GridSpec& grid, const PdeOptions& opt = {});
FieldTheta0 solve_theta0_family(const ControlProblemSpec& spec, const std::vector<double>& psi_nodes,
                                const FieldTheta& theta, const DiagonalBundle& guess,
                                const GridSpec& grid, const PdeOptions& opt = {});

/// Θ⁰ family with every level equal to the terminal data (iteration-0 warm start).
FieldTheta0 terminal_theta0_family(const ControlProblemSpec& spec, const FieldTheta& theta,
                                   const GridSpec& grid);
/// Θ with every level equal to h.
FieldTheta terminal_theta(const ControlProblemSpec& spec, const GridSpec& grid);

DiagonalBundle extract_diagonal(const FieldTheta0& theta0, const FieldTheta& theta);

DiagonalPoint diagonal_point(const FieldTheta& theta, const DiagonalBundle& bundle, int j, int i);

struct MinimizeOptions {
  int scan_points = 64;
  double tol = 1e-10;
};

/// argmin over U of Ĥ⁰ at the diagonal point. Uses the closed-form minimizer
/// when the spec provides one; otherwise scan, golden section, parabolic polish.
double minimize_hamiltonian(const ControlProblemSpec& spec, const DiagonalPoint& dp,
                            const MinimizeOptions& opt = {});

struct IterationRecord {
  int iter = 0;
  double residual_d = 0.0;
  double residual_dx = 0.0;
  double residual_dy = 0.0;
  double residual_psi = 0.0;
  double max() const;
};

struct FixedPointOptions {
  int max_iters = 50;
  double tol = 1e-6;
  double damping = 1.0;  ///< ω in B ← ωB_new + (1−ω)B
  PdeOptions pde;
  MinimizeOptions minimize;
};

struct FixedPointResult {
  FieldTheta theta;
  FieldTheta0 theta0;
  DiagonalBundle bundle;
  std::vector<double> psi_nodes;
  StrategyTable strategy;
  std::vector<IterationRecord> log;
  bool converged = false;
  int fixed_point_iterate = -1;       ///< index of the first iterate reproduced within tol
  double minimizer_max_jump = 0.0;    ///< max |Ψ(s, x_{i+1}) − Ψ(s, x_i)|
  std::vector<std::string> notes;
};

FixedPointResult equilibrium_fixed_point(const ControlProblemSpec& spec, const GridSpec& grid,
                                         const FixedPointOptions& opt = {});

struct PerturbationOptions {
  PdeOptions pde;
  /// A constant control with σ(s,x,u) = 0 makes the window equations first order.
  /// When set, the window steps run with λ₀ = 0 (pure transport where a = 0).
  bool allow_degenerate_window = false;
};

/// Window fields on [t, t+ε] for the spike perturbation u.
struct PerturbationResult {
  int j_begin = 0;  ///< level of t
  int j_end = 0;    ///< level of t + ε
  double t = 0.0, eps = 0.0, u = 0.0;
  FieldTheta theta_e;  ///< only levels j_begin..j_end are meaningful
  /// Window cost field: J(t, x_i; Ψᵉ) = Θ⁰ᵉ(t, t, x_i, x_i, Θᵉ(t, x_i)).
  std::vector<double> j_eps;
  /// Unperturbed cost D(t, x_i).
  std::vector<double> j_bar;
  double theta_gap = 0.0;  ///< max |Θᵉ − Θ| over the window
  std::vector<double> x_nodes;

  /// (J_ε − J)/ε at arbitrary x (cubic in x).
  double quotient(double x) const;
};

/// t and t + ε must lie on the time grid.
PerturbationResult solve_perturbation(const ControlProblemSpec& spec, const FieldTheta& theta,
                                      const FieldTheta0& theta0, const DiagonalBundle& bundle,
                                      const std::vector<double>& psi_nodes, double t, double eps,
                                      double u, const GridSpec& grid,
                                      const PerturbationOptions& opt = {});

struct KernelOptions {
  int terminal_panels = 2048;
  int volterra_panels = 128;
  int max_sweeps = 20;
  double sweep_tol = 1e-12;
  double z_max = 8.0;
};

struct KernelResult {
  FieldTheta theta;
  int sweeps = 0;
  double tail_mass = 0.0;  ///< max Gaussian mass falling outside [x_lo, x_hi]
  std::vector<std::string> warnings;
};

/// Volterra integral form with the Gaussian kernel: constant a = ½σ², b and g
/// free of (y, z). Used to validate the finite-difference route.
KernelResult kernel_solve_linear(const ControlProblemSpec& spec, const GridSpec& grid,
                                 const KernelOptions& opt = {});

/// 1-D cubic interpolation on a uniform grid (4-point Lagrange), flat outside.
double cubic_uniform(std::span<const double> v, double x0, double h, double x);

}  // namespace tic
