#include <algorithm>
#include <cmath>
#include <string>

#include "pde_internal.hpp"

namespace tic {

double IterationRecord::max() const {
  return std::max({residual_d, residual_dx, residual_dy, residual_psi});
}

double minimize_hamiltonian(const ControlProblemSpec& spec, const DiagonalPoint& dp,
                            const MinimizeOptions& opt) {
  const double lo = spec.u_lo, hi = spec.u_hi;
  if (spec.closed_form_minimizer) {
    const double u = spec.closed_form_minimizer(dp);
    require_finite(u, "closed-form minimizer");
    return std::clamp(u, lo, hi);
  }
  if (lo <= -kControlInfinity || hi >= kControlInfinity)
    throw Error(ErrorKind::unsupported, "minimize_hamiltonian: unbounded control set needs a closed-form minimizer");

  auto f = [&](double u) {
    const double v = hamiltonian_at_diagonal(spec, dp, u);
    if (!std::isfinite(v))
      throw Error(ErrorKind::evaluation, "minimize_hamiltonian: non-finite Hamiltonian at u=" + std::to_string(u));
    return v;
  };

  const int n = std::max(opt.scan_points, 3);
  const double step = (hi - lo) / (n - 1);
  auto node = [&](int k) { return k == n - 1 ? hi : lo + k * step; };
  int best = 0;
  double fbest = f(lo);
  for (int k = 1; k < n; ++k) {
    const double v = f(node(k));
    if (v < fbest) {
      fbest = v;
      best = k;
    }
  }

  double a = node(std::max(best - 1, 0)), b = node(std::min(best + 1, n - 1));
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  const double width = std::max(1e4 * opt.tol, 1e-9);
  while (b - a > width) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    }
  }
  double c = f1 <= f2 ? x1 : x2;
  double fc = std::min(f1, f2);
  const double br_lo = node(std::max(best - 1, 0)), br_hi = node(std::min(best + 1, n - 1));

  for (double h : {1e-3, 1e-5}) {
    if (c - h < lo || c + h > hi) break;
    const double fm = f(c - h), fp = f(c + h);
    const double den = fm - 2.0 * fc + fp;
    if (!(den > 0.0)) break;
    const double cand = std::clamp(c - h * (fp - fm) / (2.0 * den), br_lo, br_hi);
    const double fcand = f(cand);
    if (fcand <= fc) {
      c = cand;
      fc = fcand;
    }
  }
  // Edges of U are candidates when the scan put the minimum there.
  if (best == 0 && f(lo) <= fc) return lo;
  if (best == n - 1 && f(hi) < fc) return hi;
  return c;
}

namespace {

std::vector<double> minimize_all(const ControlProblemSpec& spec, const FieldTheta& theta,
                                 const DiagonalBundle& bundle, const FixedPointOptions& opt) {
  const GridSpec& g = theta.grid;
  std::vector<double> psi(static_cast<std::size_t>(g.nt) * g.nx);
  detail::for_each_index(psi.size(), opt.pde.policy, [&](std::size_t q) {
    const int j = static_cast<int>(q / g.nx), i = static_cast<int>(q % g.nx);
    psi[q] = minimize_hamiltonian(spec, diagonal_point(theta, bundle, j, i), opt.minimize);
  });
  return psi;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t q = 0; q < a.size(); ++q) m = std::max(m, std::abs(a[q] - b[q]));
  return m;
}

void damp(std::vector<double>& out, const std::vector<double>& prev, double w) {
  if (w == 1.0) return;
  for (std::size_t q = 0; q < out.size(); ++q) out[q] = w * out[q] + (1.0 - w) * prev[q];
}

}  // namespace

FixedPointResult equilibrium_fixed_point(const ControlProblemSpec& spec, const GridSpec& grid,
                                         const FixedPointOptions& opt) {
  detail::check_grid(spec, grid);
  if (!spec.diffusion_control_free && !opt.pde.freeze_control_diffusion)
    throw Error(ErrorKind::unsupported,
                "equilibrium_fixed_point: diffusion depends on the control; enable freeze_control_diffusion");
  if (!(opt.damping > 0.0 && opt.damping <= 1.0))
    throw Error(ErrorKind::config, "equilibrium_fixed_point: damping must lie in (0, 1]");
  if (opt.max_iters < 1) throw Error(ErrorKind::config, "equilibrium_fixed_point: max_iters must be >= 1");

  FixedPointResult res;
  if (opt.damping != 1.0) res.notes.push_back("diagonal damping omega=" + std::to_string(opt.damping));
  if (opt.pde.freeze_control_diffusion && !spec.diffusion_control_free)
    res.notes.push_back("control-dependent diffusion frozen at the current strategy");

  // Iteration 0: fields from the terminal data.
  res.theta = terminal_theta(spec, grid);
  res.theta0 = terminal_theta0_family(spec, res.theta, grid);
  res.bundle = extract_diagonal(res.theta0, res.theta);
  res.psi_nodes = minimize_all(spec, res.theta, res.bundle, opt);
  res.log.push_back({0, 0.0, 0.0, 0.0, 0.0});

  for (int k = 1; k <= opt.max_iters; ++k) {
    FieldTheta th = solve_theta(spec, res.psi_nodes, grid, opt.pde);
    FieldTheta0 th0 = solve_theta0_family(spec, res.psi_nodes, th, res.bundle, grid, opt.pde);
    DiagonalBundle b = extract_diagonal(th0, th);
    damp(b.d, res.bundle.d, opt.damping);
    damp(b.dx, res.bundle.dx, opt.damping);
    damp(b.dxx, res.bundle.dxx, opt.damping);
    damp(b.dy[0], res.bundle.dy[0], opt.damping);
    damp(b.dy[1], res.bundle.dy[1], opt.damping);
    std::vector<double> psi = minimize_all(spec, th, b, opt);

    IterationRecord rec;
    rec.iter = k;
    rec.residual_d = sup_diff(b.d, res.bundle.d);
    rec.residual_dx = sup_diff(b.dx, res.bundle.dx);
    rec.residual_dy = std::max(sup_diff(b.dy[0], res.bundle.dy[0]), sup_diff(b.dy[1], res.bundle.dy[1]));
    rec.residual_psi = sup_diff(psi, res.psi_nodes);
    res.log.push_back(rec);

    res.theta = std::move(th);
    res.theta0 = std::move(th0);
    res.bundle = std::move(b);
    res.psi_nodes = std::move(psi);
    if (!std::isfinite(rec.max())) throw Error(ErrorKind::numeric, "equilibrium_fixed_point: residual is not finite");
    if (rec.max() < opt.tol) {
      res.converged = true;
      res.fixed_point_iterate = k - 1;
      break;
    }
  }
  if (!res.converged)
    res.notes.push_back("no convergence within " + std::to_string(opt.max_iters) +
                        " iterations; last residual " + std::to_string(res.log.back().max()));

  for (int j = 0; j < grid.nt; ++j)
    for (int i = 0; i + 1 < grid.nx; ++i) {
      const std::size_t q = static_cast<std::size_t>(j) * grid.nx + i;
      res.minimizer_max_jump = std::max(res.minimizer_max_jump, std::abs(res.psi_nodes[q + 1] - res.psi_nodes[q]));
    }
  res.strategy = StrategyTable::grid(grid.s_nodes(), grid.x_nodes(), res.psi_nodes, spec.u_lo, spec.u_hi);
  return res;
}

}  // namespace tic
