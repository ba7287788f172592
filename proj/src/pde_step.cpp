#include <cmath>
#include <string>

#include "pde_internal.hpp"

namespace tic {

namespace detail {

void rethrow_at(const Error& e, double s) {
  throw Error(e.kind(), std::string(e.what()) + " (s=" + std::to_string(s) + ")", s);
}

void check_grid(const ControlProblemSpec& spec, const GridSpec& grid) {
  grid.validate();
  if (std::abs(grid.T - spec.T) > 1e-12 * std::max(1.0, spec.T))
    throw Error(ErrorKind::config, "grid horizon does not match the problem horizon");
}

void check_strategy_nodes(const std::vector<double>& psi, const GridSpec& grid) {
  if (psi.size() != static_cast<std::size_t>(grid.nt) * grid.nx)
    throw Error(ErrorKind::domain, "strategy samples do not match the grid");
}

LevelCoefficients level_coefficients(const ControlProblemSpec& spec, const GridSpec& grid,
                                     std::span<const double> psi_j, std::span<const double> psi_next,
                                     const FieldTheta& theta, int j) {
  const int n = grid.nx;
  const double s = grid.s(j), s1 = grid.s(j + 1);
  LevelCoefficients c;
  c.a.resize(n);
  c.drift.resize(n);
  c.sigma.resize(n);
  c.u.assign(psi_next.begin(), psi_next.end());
  c.y.resize(n);
  c.z.resize(n);
  for (int i = 0; i < n; ++i) {
    const double x = grid.x(i);
    c.a[i] = spec.a(s, x, psi_j[i]);
    c.drift[i] = spec.b(s1, x, psi_next[i]);
    c.sigma[i] = spec.sigma(s1, x, psi_next[i]);
    require_finite(c.a[i], "sigma");
    require_finite(c.drift[i], "b");
    require_finite(c.sigma[i], "sigma");
    c.y[i] = theta.values(j + 1, i);
    const Vec p = theta.dxs(j + 1, i);
    for (int k = 0; k < theta.m; ++k) c.z[i][k] = p[k] * c.sigma[i];
  }
  return c;
}

void theta_level(const ControlProblemSpec& spec, const GridSpec& grid, const LevelCoefficients& c,
                 FieldTheta& theta, int j, double lambda0) {
  const int n = grid.nx;
  const double s1 = grid.s(j + 1);
  std::vector<std::vector<double>> source(theta.m, std::vector<double>(n));
  for (int i = 0; i < n; ++i) {
    const Vec gv = spec.g(s1, grid.x(i), c.u[i], c.y[i], c.z[i]);
    for (int k = 0; k < theta.m; ++k) {
      require_finite(gv[k], "g");
      source[k][i] = gv[k];
    }
  }
  for (int k = 0; k < theta.m; ++k) {
    auto next = row(theta.v[k], grid, j + 1);
    auto out = step_parabolic(next, c.a, c.drift, source[k], grid.dt(), grid.dx(), grid.closure,
                              lambda0);
    for (int i = 0; i < n; ++i) theta.value(k, j, i) = out[i];
  }
}

std::vector<double> theta0_level(const ControlProblemSpec& spec, const GridSpec& grid,
                                 const LevelCoefficients& c, double t, double xt,
                                 std::span<const double> next, std::span<const double> y0, int j,
                                 double lambda0) {
  const int n = grid.nx;
  const double s1 = grid.s(j + 1);
  const double h = grid.dx();
  std::vector<double> source(n, 0.0);
  for (int i = 1; i < n - 1; ++i) {
    const double p0 = (next[i + 1] - next[i - 1]) / (2.0 * h);
    source[i] = spec.g0(t, s1, xt, grid.x(i), c.u[i], c.y[i], c.z[i], y0[i], p0 * c.sigma[i]);
    require_finite(source[i], "g0");
  }
  return step_parabolic(next, c.a, c.drift, source, grid.dt(), h, grid.closure, lambda0);
}

}  // namespace detail

std::vector<double> step_parabolic(std::span<const double> next, std::span<const double> a,
                                   std::span<const double> drift, std::span<const double> source,
                                   double dt, double dx, Closure closure, double lambda0) {
  const std::size_t n = next.size();
  if (n < 6 || a.size() != n || drift.size() != n || source.size() != n)
    throw Error(ErrorKind::domain, "step_parabolic: rows need equal length >= 6");
  if (!(dt > 0.0) || !(dx > 0.0)) throw Error(ErrorKind::domain, "step_parabolic: dt, dx must be positive");

  const double mu = dt / (dx * dx);
  std::vector<double> lam(n, 0.0), rhs(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(a[i] >= lambda0))
      throw Error(ErrorKind::degeneracy,
                  "diffusion a=" + std::to_string(a[i]) + " below lambda0 at interior node " +
                      std::to_string(i));
    lam[i] = mu * a[i];
    rhs[i] = next[i] + dt * (drift[i] * (next[i + 1] - next[i - 1]) / (2.0 * dx) + source[i]);
  }

  // Unknowns u_1..u_{n-2}; rows stored at their node index.
  std::vector<double> lo(n, 0.0), di(n, 1.0), up(n, 0.0), r(rhs);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    lo[i] = -lam[i];
    di[i] = 1.0 + 2.0 * lam[i];
    up[i] = -lam[i];
  }
  const std::size_t L = 1, R = n - 2;
  if (closure == Closure::linear) {
    // u_0 = 2u_1 - u_2 turns row 1 into u_1 = r_1 (and symmetrically at the right).
    lo[L] = 0.0, di[L] = 1.0, up[L] = 0.0;
    lo[R] = 0.0, di[R] = 1.0, up[R] = 0.0;
  } else {
    // u_0 = 3u_1 - 3u_2 + u_3; eliminating u_3 with row 2 leaves u_1 - ρ u_2 = r_1 - ρ r_2.
    auto ratio = [&](std::size_t edge, std::size_t inner) {
      if (lam[edge] == 0.0) return 0.0;
      if (lam[inner] == 0.0)
        throw Error(ErrorKind::degeneracy, "step_parabolic: boundary closure needs a > 0 next to the edge");
      return lam[edge] / lam[inner];
    };
    const double rl = ratio(L, L + 1);
    lo[L] = 0.0, di[L] = 1.0, up[L] = -rl;
    r[L] = rhs[L] - rl * rhs[L + 1];
    const double rr = ratio(R, R - 1);
    lo[R] = -rr, di[R] = 1.0, up[R] = 0.0;
    r[R] = rhs[R] - rr * rhs[R - 1];
  }

  // Thomas algorithm on rows L..R.
  std::vector<double> cp(n, 0.0), dp(n, 0.0);
  double piv = di[L];
  if (std::abs(piv) < 1e-300) throw Error(ErrorKind::numeric, "step_parabolic: zero pivot");
  cp[L] = up[L] / piv;
  dp[L] = r[L] / piv;
  for (std::size_t i = L + 1; i <= R; ++i) {
    piv = di[i] - lo[i] * cp[i - 1];
    if (std::abs(piv) < 1e-300 || !std::isfinite(piv))
      throw Error(ErrorKind::numeric, "step_parabolic: tridiagonal solve failed");
    cp[i] = up[i] / piv;
    dp[i] = (r[i] - lo[i] * dp[i - 1]) / piv;
  }
  std::vector<double> u(n, 0.0);
  u[R] = dp[R];
  for (std::size_t i = R; i-- > L;) u[i] = dp[i] - cp[i] * u[i + 1];

  if (closure == Closure::linear) {
    u[0] = 2.0 * u[1] - u[2];
    u[n - 1] = 2.0 * u[n - 2] - u[n - 3];
  } else {
    u[0] = 3.0 * u[1] - 3.0 * u[2] + u[3];
    u[n - 1] = 3.0 * u[n - 2] - 3.0 * u[n - 3] + u[n - 4];
  }
  for (double v : u)
    if (!std::isfinite(v)) throw Error(ErrorKind::numeric, "step_parabolic: non-finite result");
  return u;
}

std::vector<double> sample_strategy(const StrategyTable& psi, const GridSpec& grid) {
  std::vector<double> out(static_cast<std::size_t>(grid.nt) * grid.nx);
  for (int j = 0; j < grid.nt; ++j)
    for (int i = 0; i < grid.nx; ++i) out[static_cast<std::size_t>(j) * grid.nx + i] = psi(grid.s(j), grid.x(i));
  return out;
}

FieldTheta terminal_theta(const ControlProblemSpec& spec, const GridSpec& grid) {
  FieldTheta th(grid, spec.m);
  for (int i = 0; i < grid.nx; ++i) {
    const Vec hv = spec.h(grid.x(i));
    for (int c = 0; c < spec.m; ++c) {
      require_finite(hv[c], "h");
      for (int j = 0; j < grid.nt; ++j) th.value(c, j, i) = hv[c];
    }
  }
  return th;
}

FieldTheta solve_theta(const ControlProblemSpec& spec, const StrategyTable& psi,
                       const GridSpec& grid, const PdeOptions& opt) {
  return solve_theta(spec, sample_strategy(psi, grid), grid, opt);
}

FieldTheta solve_theta(const ControlProblemSpec& spec, const std::vector<double>& psi_nodes,
                       const GridSpec& grid, const PdeOptions& opt) {
  detail::check_grid(spec, grid);
  detail::check_strategy_nodes(psi_nodes, grid);
  if (!spec.diffusion_control_free && !opt.freeze_control_diffusion)
    throw Error(ErrorKind::unsupported,
                "solve_theta: diffusion depends on the control; enable freeze_control_diffusion");
  FieldTheta th(grid, spec.m);
  for (int i = 0; i < grid.nx; ++i) {
    const Vec hv = spec.h(grid.x(i));
    for (int c = 0; c < spec.m; ++c) {
      require_finite(hv[c], "h");
      th.value(c, grid.nt - 1, i) = hv[c];
    }
  }
  for (int j = grid.nt - 2; j >= 0; --j) {
    try {
      auto c = detail::level_coefficients(spec, grid, detail::row(psi_nodes, grid, j),
                                          detail::row(psi_nodes, grid, j + 1), th, j);
      detail::theta_level(spec, grid, c, th, j, opt.lambda0);
    } catch (const Error& e) {
      detail::rethrow_at(e, grid.s(j));
    }
  }
  return th;
}

}  // namespace tic
