#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pde_internal.hpp"

namespace tic {

namespace {

// Composite Simpson weights on n (even) panels over [-zmax, zmax] times e^{-z²}/√π.
struct GaussRule {
  std::vector<double> z, w;
};

GaussRule gauss_rule(int panels, double zmax) {
  if (panels % 2) ++panels;
  GaussRule g;
  const double h = 2.0 * zmax / panels;
  for (int k = 0; k <= panels; ++k) {
    const double z = -zmax + k * h;
    const double c = (k == 0 || k == panels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    g.z.push_back(z);
    g.w.push_back(c * h / 3.0 * std::exp(-z * z) / std::sqrt(std::numbers::pi));
  }
  return g;
}

// Quadrature weights over equally spaced nodes: Simpson, with a 3/8 tail for an
// odd panel count and the trapezoid rule for a single panel.
std::vector<double> time_weights(int panels, double h) {
  std::vector<double> w(panels + 1, 0.0);
  if (panels == 0) return w;
  if (panels == 1) {
    w[0] = w[1] = 0.5 * h;
    return w;
  }
  const int simpson = panels % 2 ? panels - 3 : panels;
  for (int k = 0; k < simpson; k += 2) {
    w[k] += h / 3.0;
    w[k + 1] += 4.0 * h / 3.0;
    w[k + 2] += h / 3.0;
  }
  if (simpson != panels) {
    const int k = simpson;
    w[k] += 3.0 * h / 8.0;
    w[k + 1] += 9.0 * h / 8.0;
    w[k + 2] += 9.0 * h / 8.0;
    w[k + 3] += 3.0 * h / 8.0;
  }
  return w;
}

}  // namespace

KernelResult kernel_solve_linear(const ControlProblemSpec& spec, const GridSpec& grid,
                                 const KernelOptions& opt) {
  detail::check_grid(spec, grid);
  if (spec.m != 1) throw Error(ErrorKind::unsupported, "kernel_solve_linear: m = 1 only");
  const double u0 = std::clamp(0.0, spec.u_lo, spec.u_hi);
  const double a = spec.a(0.0, grid.x(0), u0);
  if (!(a > 0.0)) throw Error(ErrorKind::degeneracy, "kernel_solve_linear: a must be positive");
  // Constant diffusion and a (y,z)-free generator are preconditions; spot-check them.
  for (int j = 0; j < grid.nt; j += std::max(1, grid.nt / 4))
    for (int i = 0; i < grid.nx; i += std::max(1, grid.nx / 4)) {
      const double s = grid.s(j), x = grid.x(i);
      if (std::abs(spec.a(s, x, u0) - a) > 1e-14 * std::max(1.0, a))
        throw Error(ErrorKind::unsupported, "kernel_solve_linear: diffusion must be constant");
      const Vec g1 = spec.g(s, x, u0, Vec{0.0, 0.0}, Vec{0.0, 0.0});
      const Vec g2 = spec.g(s, x, u0, Vec{1.0, 0.0}, Vec{1.0, 0.0});
      if (g1[0] != g2[0]) throw Error(ErrorKind::unsupported, "kernel_solve_linear: g must not depend on (y, z)");
    }

  KernelResult res;
  res.tail_mass = std::erfc(opt.z_max);
  if (res.tail_mass > 1e-6)
    res.warnings.push_back("kernel quadrature truncated at |z|=" + std::to_string(opt.z_max) +
                           ", tail mass " + std::to_string(res.tail_mass));

  const int nt = grid.nt, nx = grid.nx;
  const GaussRule term = gauss_rule(opt.terminal_panels, opt.z_max);
  const GaussRule volt = gauss_rule(opt.volterra_panels, opt.z_max);

  // Terminal term does not change between sweeps.
  std::vector<double> base(static_cast<std::size_t>(nt) * nx);
  for (int j = 0; j < nt; ++j) {
    const double tau = grid.T - grid.s(j);
    for (int i = 0; i < nx; ++i) {
      const double x = grid.x(i);
      double acc = 0.0;
      if (tau <= 0.0) {
        acc = spec.h(x)[0];
      } else {
        const double sc = 2.0 * std::sqrt(a * tau);
        for (std::size_t k = 0; k < term.z.size(); ++k) acc += term.w[k] * spec.h(x + sc * term.z[k])[0];
      }
      base[static_cast<std::size_t>(j) * nx + i] = acc;
    }
  }

  FieldTheta th(grid, 1);
  th.v[0] = base;
  std::vector<double> px(static_cast<std::size_t>(nt) * nx, 0.0);  // Θ_x of the previous sweep
  auto recompute_px = [&](std::vector<double>& out) {
    for (int j = 0; j < nt; ++j)
      for (int i = 0; i < nx; ++i) out[static_cast<std::size_t>(j) * nx + i] = th.dx(0, j, i);
  };
  recompute_px(px);

  for (int sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
    std::vector<double> next(base);
    for (int j = 0; j < nt - 1; ++j) {
      const int panels = nt - 1 - j;
      const auto wt = time_weights(panels, grid.dt());
      for (int i = 0; i < nx; ++i) {
        const double x = grid.x(i);
        double acc = 0.0;
        for (int q = 0; q <= panels; ++q) {
          const int jr = j + q;
          const double r = grid.s(jr), tau = r - grid.s(j);
          auto integrand = [&](double mu) {
            const double p = cubic_uniform(detail::row(px, grid, jr), grid.x_lo, grid.dx(), mu);
            return p * spec.b(r, mu, u0) + spec.g(r, mu, u0, Vec{0.0, 0.0}, Vec{0.0, 0.0})[0];
          };
          double inner = 0.0;
          if (tau <= 0.0) {
            inner = integrand(x);
          } else {
            const double sc = 2.0 * std::sqrt(a * tau);
            for (std::size_t k = 0; k < volt.z.size(); ++k) inner += volt.w[k] * integrand(x + sc * volt.z[k]);
          }
          acc += wt[q] * inner;
        }
        next[static_cast<std::size_t>(j) * nx + i] += acc;
      }
    }
    double change = 0.0;
    for (std::size_t q = 0; q < next.size(); ++q) {
      require_finite(next[q], "kernel iterate");
      change = std::max(change, std::abs(next[q] - th.v[0][q]));
    }
    th.v[0] = std::move(next);
    res.sweeps = sweep;
    std::vector<double> np(px.size());
    recompute_px(np);
    px = std::move(np);
    if (change <= opt.sweep_tol && sweep > 1) break;
  }
  res.theta = std::move(th);
  return res;
}

}  // namespace tic
