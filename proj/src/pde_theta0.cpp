#include <algorithm>
#include <cmath>

#include "pde_internal.hpp"

namespace tic {

std::vector<double> y_grid_for(const FieldTheta& theta, const GridSpec& grid) {
  double lo, hi;
  if (grid.y_range) {
    lo = grid.y_range->first;
    hi = grid.y_range->second;
  } else {
    const auto [mn, mx] = std::minmax_element(theta.v[0].begin(), theta.v[0].end());
    lo = *mn;
    hi = *mx;
    const double pad = std::max(0.1 * (hi - lo), 0.05 * std::max({1.0, std::abs(lo), std::abs(hi)}));
    lo -= pad;
    hi += pad;
  }
  std::vector<double> y(grid.ny);
  for (int r = 0; r < grid.ny; ++r) y[r] = r == grid.ny - 1 ? hi : lo + r * (hi - lo) / (grid.ny - 1);
  return y;
}

namespace {

FieldTheta0 empty_family(const ControlProblemSpec& spec, const FieldTheta& theta, const GridSpec& grid) {
  if (!spec.separable && spec.m != 1)
    throw Error(ErrorKind::unsupported,
                "theta0: the y grid supports m = 1 only; provide a separable cost terminal");
  std::vector<double> y;
  if (!spec.separable) y = y_grid_for(theta, grid);
  return FieldTheta0(grid, spec.cost_depends_on_anchor_time, spec.cost_depends_on_anchor_state,
                     spec.separable, std::move(y));
}

double terminal_value(const ControlProblemSpec& spec, const FieldTheta0& f, int fk, int fl, int r,
                      double x) {
  const double t = f.anchor_t(fk), xt = f.anchor_xt(fl);
  const double v = f.separable() ? spec.separable->f(t, xt, x)
                                 : spec.h0(t, xt, x, Vec{f.y_nodes()[r], 0.0});
  require_finite(v, "h0");
  return v;
}

struct FieldId {
  int fk, fl, r;
};

std::vector<FieldId> field_ids(const FieldTheta0& f) {
  std::vector<FieldId> ids;
  for (int fk = 0; fk < f.n_time_anchors(); ++fk)
    for (int fl = 0; fl < f.n_state_anchors(); ++fl)
      for (int r = 0; r < f.n_y(); ++r) ids.push_back({fk, fl, r});
  return ids;
}

}  // namespace

FieldTheta0 terminal_theta0_family(const ControlProblemSpec& spec, const FieldTheta& theta,
                                   const GridSpec& grid) {
  detail::check_grid(spec, grid);
  FieldTheta0 f = empty_family(spec, theta, grid);
  const int nt = grid.nt, nx = grid.nx;
  for (const auto& id : field_ids(f)) {
    auto& fld = f.field(id.fk, id.fl, id.r);
    for (int i = 0; i < nx; ++i) {
      const double v = terminal_value(spec, f, id.fk, id.fl, id.r, grid.x(i));
      for (int j = f.start_level(id.fk); j < nt; ++j) fld[static_cast<std::size_t>(j) * nx + i] = v;
    }
  }
  return f;
}

FieldTheta0 solve_theta0_family(const ControlProblemSpec& spec, const StrategyTable& psi,
                                const FieldTheta& theta, const DiagonalBundle& guess,
                                const GridSpec& grid, const PdeOptions& opt) {
  return solve_theta0_family(spec, sample_strategy(psi, grid), theta, guess, grid, opt);
}

FieldTheta0 solve_theta0_family(const ControlProblemSpec& spec, const std::vector<double>& psi_nodes,
                                const FieldTheta& theta, const DiagonalBundle& guess,
                                const GridSpec& grid, const PdeOptions& opt) {
  detail::check_grid(spec, grid);
  detail::check_strategy_nodes(psi_nodes, grid);
  if (!spec.diffusion_control_free && !opt.freeze_control_diffusion)
    throw Error(ErrorKind::unsupported,
                "solve_theta0_family: diffusion depends on the control; enable freeze_control_diffusion");
  if (guess.d.size() != psi_nodes.size()) throw Error(ErrorKind::domain, "diagonal guess does not match the grid");
  for (double v : guess.d) require_finite(v, "diagonal guess");

  FieldTheta0 f = empty_family(spec, theta, grid);
  const int nt = grid.nt, nx = grid.nx;
  const auto ids = field_ids(f);
  for (const auto& id : ids) {
    auto& fld = f.field(id.fk, id.fl, id.r);
    for (int i = 0; i < nx; ++i)
      fld[static_cast<std::size_t>(nt - 1) * nx + i] = terminal_value(spec, f, id.fk, id.fl, id.r, grid.x(i));
  }

  std::vector<FieldId> active;
  for (int j = nt - 2; j >= 0; --j) {
    try {
      const auto c = detail::level_coefficients(spec, grid, detail::row(psi_nodes, grid, j),
                                                detail::row(psi_nodes, grid, j + 1), theta, j);
      const auto y0 = detail::row(guess.d, grid, j + 1);
      active.clear();
      for (const auto& id : ids)
        if (f.start_level(id.fk) <= j) active.push_back(id);
      detail::for_each_index(active.size(), opt.policy, [&](std::size_t q) {
        const auto& id = active[q];
        auto& fld = f.field(id.fk, id.fl, id.r);
        auto out = detail::theta0_level(spec, grid, c, f.anchor_t(id.fk), f.anchor_xt(id.fl),
                                        detail::row(fld, grid, j + 1), y0, j, opt.lambda0);
        std::copy(out.begin(), out.end(), fld.begin() + static_cast<std::ptrdiff_t>(j) * nx);
      });
    } catch (const Error& e) {
      detail::rethrow_at(e, grid.s(j));
    }
  }
  return f;
}

DiagonalBundle extract_diagonal(const FieldTheta0& theta0, const FieldTheta& theta) {
  const GridSpec& g = theta0.grid();
  DiagonalBundle b(g);
  for (int j = 0; j < g.nt; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const Vec y = theta.values(j, i);
      const std::size_t q = b.at(j, i);
      b.d[q] = theta0.value(j, i, j, i, y);
      b.dx[q] = theta0.dx(j, i, j, i, y);
      b.dxx[q] = theta0.dxx(j, i, j, i, y);
      const Vec dy = theta0.dy(j, i, j, i, y);
      b.dy[0][q] = dy[0];
      b.dy[1][q] = dy[1];
    }
  }
  return b;
}

DiagonalPoint diagonal_point(const FieldTheta& theta, const DiagonalBundle& bundle, int j, int i) {
  DiagonalPoint dp;
  dp.s = theta.grid.s(j);
  dp.x = theta.grid.x(i);
  dp.theta = theta.values(j, i);
  dp.theta_x = theta.dxs(j, i);
  dp.theta_xx = theta.dxxs(j, i);
  const std::size_t q = bundle.at(j, i);
  dp.d = bundle.d[q];
  dp.dx = bundle.dx[q];
  dp.dxx = bundle.dxx[q];
  dp.dy = Vec{bundle.dy[0][q], bundle.dy[1][q]};
  return dp;
}

}  // namespace tic
