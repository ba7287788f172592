#include <algorithm>
#include <cmath>
#include <string>

#include "pde_internal.hpp"

namespace tic {

double PerturbationResult::quotient(double x) const {
  std::vector<double> q(j_eps.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = (j_eps[i] - j_bar[i]) / eps;
  const double h = x_nodes.size() > 1 ? x_nodes[1] - x_nodes[0] : 1.0;
  return cubic_uniform(q, x_nodes.front(), h, x);
}

namespace {

int level_of(const GridSpec& g, double s, const char* what) {
  const double p = s / g.dt();
  const long j = std::lround(p);
  if (j < 0 || j > g.nt - 1 || std::abs(p - j) > 1e-9)
    throw Error(ErrorKind::domain, std::string("solve_perturbation: ") + what + " is not on the time grid", s);
  return static_cast<int>(j);
}

}  // namespace

PerturbationResult solve_perturbation(const ControlProblemSpec& spec, const FieldTheta& theta,
                                      const FieldTheta0& theta0, const DiagonalBundle& bundle,
                                      const std::vector<double>& psi_nodes, double t, double eps,
                                      double u, const GridSpec& grid,
                                      const PerturbationOptions& opt) {
  detail::check_grid(spec, grid);
  detail::check_strategy_nodes(psi_nodes, grid);
  if (!(eps > 0.0) || t < 0.0 || t + eps > spec.T + 1e-12)
    throw Error(ErrorKind::domain, "solve_perturbation: window must lie inside [0, T]", t);
  if (u < spec.u_lo || u > spec.u_hi) throw Error(ErrorKind::domain, "solve_perturbation: u outside U");
  if (bundle.d.size() != psi_nodes.size()) throw Error(ErrorKind::domain, "solve_perturbation: bundle shape");

  PerturbationResult res;
  res.t = t;
  res.eps = eps;
  res.u = u;
  res.j_begin = level_of(grid, t, "t");
  res.j_end = level_of(grid, t + eps, "t + eps");
  if (res.j_end <= res.j_begin) throw Error(ErrorKind::domain, "solve_perturbation: window shorter than one step", t);
  res.x_nodes = grid.x_nodes();
  const int nx = grid.nx, jb = res.j_begin, je = res.j_end;
  const double lambda0 = opt.allow_degenerate_window ? 0.0 : opt.pde.lambda0;

  // Strategy inside the window is the constant u; outside it is Ψ̄.
  std::vector<double> psi_e(psi_nodes);
  for (int j = jb; j < je; ++j)
    std::fill_n(psi_e.begin() + static_cast<std::ptrdiff_t>(j) * nx, nx, u);
  const auto psi_row = [&](int j) { return detail::row(psi_e, grid, j); };
  // Level je keeps Ψ̄: the spike acts on [t, t+ε).

  res.theta_e = theta;
  std::vector<detail::LevelCoefficients> coeffs(je - jb);
  for (int j = je - 1; j >= jb; --j) {
    try {
      coeffs[j - jb] = detail::level_coefficients(spec, grid, psi_row(j), psi_row(j + 1), res.theta_e, j);
      detail::theta_level(spec, grid, coeffs[j - jb], res.theta_e, j, lambda0);
    } catch (const Error& e) {
      detail::rethrow_at(e, grid.s(j));
    }
  }
  for (int j = jb; j <= je; ++j)
    for (int c = 0; c < theta.m; ++c)
      for (int i = 0; i < nx; ++i)
        res.theta_gap = std::max(res.theta_gap, std::abs(res.theta_e.value(c, j, i) - theta.value(c, j, i)));

  // Window family with terminal data Θ⁰(r, t+ε, ·). The y⁰-slot is the window's
  // own diagonal, available one level ahead, so every anchor steps together.
  FieldTheta0 win(grid, theta0.time_anchored(), theta0.state_anchored(),
                  theta0.separable() ? spec.separable : std::nullopt, theta0.y_nodes());
  struct Id {
    int fk, fl, r;
  };
  std::vector<Id> ids;
  const int k_lo = theta0.time_anchored() ? jb : 0;
  const int k_hi = theta0.time_anchored() ? je : 0;
  for (int fk = k_lo; fk <= k_hi; ++fk)
    for (int fl = 0; fl < win.n_state_anchors(); ++fl)
      for (int r = 0; r < win.n_y(); ++r) ids.push_back({fk, fl, r});
  for (const auto& id : ids) {
    auto& fld = win.field(id.fk, id.fl, id.r);
    for (int i = 0; i < nx; ++i)
      fld[static_cast<std::size_t>(je) * nx + i] = theta0.raw(id.fk, id.fl, id.r, je, i);
  }

  std::vector<double> y0(nx);
  auto window_diagonal = [&](int L) {
    for (int i = 0; i < nx; ++i) y0[i] = win.value(L, i, L, i, res.theta_e.values(L, i));
  };
  std::vector<Id> active;
  for (int j = je - 1; j >= jb; --j) {
    try {
      window_diagonal(j + 1);
      active.clear();
      for (const auto& id : ids)
        if (win.start_level(id.fk) <= j) active.push_back(id);
      detail::for_each_index(active.size(), opt.pde.policy, [&](std::size_t q) {
        const auto& id = active[q];
        auto& fld = win.field(id.fk, id.fl, id.r);
        auto out = detail::theta0_level(spec, grid, coeffs[j - jb], win.anchor_t(id.fk), win.anchor_xt(id.fl),
                                        detail::row(fld, grid, j + 1), y0, j, lambda0);
        std::copy(out.begin(), out.end(), fld.begin() + static_cast<std::ptrdiff_t>(j) * nx);
      });
    } catch (const Error& e) {
      detail::rethrow_at(e, grid.s(j));
    }
  }

  res.j_eps.resize(nx);
  res.j_bar.resize(nx);
  for (int i = 0; i < nx; ++i) {
    res.j_eps[i] = win.value(jb, i, jb, i, res.theta_e.values(jb, i));
    res.j_bar[i] = theta0.value(jb, i, jb, i, theta.values(jb, i));
  }
  return res;
}

}  // namespace tic
