#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tic/pde_solver.hpp"

namespace tic {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Upper bound on stored Θ⁰ samples (doubles) before we refuse the layout.
constexpr std::size_t kMaxTheta0Samples = 60'000'000;

std::string node_name(const GridSpec& g, int j, int i) {
  return "(s=" + std::to_string(g.s(j)) + ", x=" + std::to_string(g.x(i)) + ")";
}

// Lagrange weights (and derivative weights) on nodes 0..3 at local coordinate q.
void lagrange4(double q, double w[4], double dw[4]) {
  const double n[4] = {0.0, 1.0, 2.0, 3.0};
  for (int a = 0; a < 4; ++a) {
    double num = 1.0, den = 1.0;
    for (int b = 0; b < 4; ++b) {
      if (b == a) continue;
      num *= q - n[b];
      den *= n[a] - n[b];
    }
    w[a] = num / den;
    double d = 0.0;
    for (int c = 0; c < 4; ++c) {
      if (c == a) continue;
      double p = 1.0;
      for (int b = 0; b < 4; ++b)
        if (b != a && b != c) p *= q - n[b];
      d += p;
    }
    dw[a] = d / den;
  }
}

}  // namespace

std::vector<double> GridSpec::x_nodes() const {
  std::vector<double> v(nx);
  for (int i = 0; i < nx; ++i) v[i] = x(i);
  return v;
}

std::vector<double> GridSpec::s_nodes() const {
  std::vector<double> v(nt);
  for (int j = 0; j < nt; ++j) v[j] = s(j);
  return v;
}

void GridSpec::validate() const {
  if (nx < 8) throw Error(ErrorKind::config, "grid: nx must be at least 8");
  if (nt < 8) throw Error(ErrorKind::config, "grid: nt must be at least 8");
  if (!(x_lo < x_hi)) throw Error(ErrorKind::config, "grid: x_lo must be below x_hi");
  if (!(T > 0.0)) throw Error(ErrorKind::config, "grid: T must be positive");
  if (ny < 4) throw Error(ErrorKind::config, "grid: ny must be at least 4");
  if (y_range && !(y_range->first < y_range->second))
    throw Error(ErrorKind::config, "grid: y range must be increasing");
}

GridSpec default_grid(const ControlProblemSpec& spec, double sigma_bar, int nx, int nt) {
  GridSpec g;
  const double half = 5.0 * sigma_bar * std::sqrt(spec.T);
  g.x_lo = spec.x0 - half;
  g.x_hi = spec.x0 + half;
  g.nx = nx;
  g.nt = nt;
  g.T = spec.T;
  g.validate();
  return g;
}

double cubic_uniform(std::span<const double> v, double x0, double h, double x) {
  const int n = static_cast<int>(v.size());
  if (n == 0) return kNaN;
  if (n == 1 || x <= x0) return v[0];
  if (x >= x0 + (n - 1) * h) return v[n - 1];
  const double p = (x - x0) / h;
  if (n < 4) {
    const int i = std::min(static_cast<int>(p), n - 2);
    const double w = p - i;
    return v[i] + w * (v[i + 1] - v[i]);
  }
  const int st = std::clamp(static_cast<int>(std::floor(p)) - 1, 0, n - 4);
  double w[4], dw[4];
  lagrange4(p - st, w, dw);
  return w[0] * v[st] + w[1] * v[st + 1] + w[2] * v[st + 2] + w[3] * v[st + 3];
}

// ---------------------------------------------------------------- FieldTheta

FieldTheta::FieldTheta(const GridSpec& g, int m_) : m(m_), grid(g) {
  const std::size_t n = static_cast<std::size_t>(g.nt) * g.nx;
  for (int c = 0; c < m; ++c) v[c].assign(n, kNaN);
}

double FieldTheta::dx(int c, int j, int i) const {
  const double h = grid.dx();
  const int n = grid.nx;
  if (i == 0) return (-3.0 * value(c, j, 0) + 4.0 * value(c, j, 1) - value(c, j, 2)) / (2.0 * h);
  if (i == n - 1)
    return (3.0 * value(c, j, n - 1) - 4.0 * value(c, j, n - 2) + value(c, j, n - 3)) / (2.0 * h);
  return (value(c, j, i + 1) - value(c, j, i - 1)) / (2.0 * h);
}

double FieldTheta::dxx(int c, int j, int i) const {
  const double h2 = grid.dx() * grid.dx();
  const int n = grid.nx;
  if (i == 0)
    return (2.0 * value(c, j, 0) - 5.0 * value(c, j, 1) + 4.0 * value(c, j, 2) - value(c, j, 3)) / h2;
  if (i == n - 1)
    return (2.0 * value(c, j, n - 1) - 5.0 * value(c, j, n - 2) + 4.0 * value(c, j, n - 3) -
            value(c, j, n - 4)) /
           h2;
  return (value(c, j, i + 1) - 2.0 * value(c, j, i) + value(c, j, i - 1)) / h2;
}

Vec FieldTheta::values(int j, int i) const {
  Vec out{};
  for (int c = 0; c < m; ++c) out[c] = value(c, j, i);
  return out;
}

Vec FieldTheta::dxs(int j, int i) const {
  Vec out{};
  for (int c = 0; c < m; ++c) out[c] = dx(c, j, i);
  return out;
}

Vec FieldTheta::dxxs(int j, int i) const {
  Vec out{};
  for (int c = 0; c < m; ++c) out[c] = dxx(c, j, i);
  return out;
}

double FieldTheta::at(int c, double s, double x) const {
  const double ds = grid.dt();
  double p = std::clamp(s / ds, 0.0, static_cast<double>(grid.nt - 1));
  int j = std::min(static_cast<int>(p), grid.nt - 2);
  double w = p - j;
  auto row = [&](int jj) {
    std::span<const double> r(v[c].data() + static_cast<std::size_t>(jj) * grid.nx, grid.nx);
    return cubic_uniform(r, grid.x_lo, grid.dx(), x);
  };
  if (w == 0.0) return row(j);
  if (w == 1.0) return row(j + 1);
  return (1.0 - w) * row(j) + w * row(j + 1);
}

// --------------------------------------------------------------- FieldTheta0

FieldTheta0::FieldTheta0(const GridSpec& g, bool time_anchored, bool state_anchored,
                         std::optional<SeparableTerminal> sep, std::vector<double> y_nodes)
    : grid_(g),
      time_anchored_(time_anchored),
      state_anchored_(state_anchored),
      sep_(std::move(sep)),
      y_(std::move(y_nodes)) {
  if (!sep_ && y_.size() < 4) throw Error(ErrorKind::config, "theta0: the y grid needs at least 4 nodes");
  const std::size_t per = static_cast<std::size_t>(g.nt) * g.nx;
  if (n_fields() * per > kMaxTheta0Samples)
    throw Error(ErrorKind::unsupported,
                "theta0: anchor family too large for this grid (cost depends on both anchor time "
                "and anchor state); use a coarser grid");
  fields_.assign(n_fields(), std::vector<double>(per, kNaN));
}

std::size_t FieldTheta0::n_fields() const {
  return static_cast<std::size_t>(n_time_anchors()) * n_state_anchors() * n_y();
}

double FieldTheta0::anchor_t(int fk) const { return time_anchored_ ? grid_.s(fk) : 0.0; }
double FieldTheta0::anchor_xt(int fl) const { return state_anchored_ ? grid_.x(fl) : 0.0; }

std::vector<double>& FieldTheta0::field(int fk, int fl, int r) {
  return fields_[(static_cast<std::size_t>(fk) * n_state_anchors() + fl) * n_y() + r];
}

const std::vector<double>& FieldTheta0::field(int fk, int fl, int r) const {
  return fields_[(static_cast<std::size_t>(fk) * n_state_anchors() + fl) * n_y() + r];
}

void FieldTheta0::guard(int k, int j) const {
  if (k > j)
    throw Error(ErrorKind::upper_triangle,
                "theta0 read at anchor t=" + std::to_string(grid_.s(k)) +
                    " later than s=" + std::to_string(grid_.s(j)),
                grid_.s(j));
}

double FieldTheta0::raw(int k, int l, int r, int j, int i) const {
  guard(k, j);
  const auto& f = field(time_anchored_ ? k : 0, state_anchored_ ? l : 0, r);
  return f[static_cast<std::size_t>(j) * grid_.nx + i];
}

double FieldTheta0::raw_dx(int k, int l, int r, int j, int i) const {
  guard(k, j);
  const auto& f = field(time_anchored_ ? k : 0, state_anchored_ ? l : 0, r);
  const double* row = f.data() + static_cast<std::size_t>(j) * grid_.nx;
  const double h = grid_.dx();
  const int n = grid_.nx;
  if (i == 0) return (-3.0 * row[0] + 4.0 * row[1] - row[2]) / (2.0 * h);
  if (i == n - 1) return (3.0 * row[n - 1] - 4.0 * row[n - 2] + row[n - 3]) / (2.0 * h);
  return (row[i + 1] - row[i - 1]) / (2.0 * h);
}

double FieldTheta0::raw_dxx(int k, int l, int r, int j, int i) const {
  guard(k, j);
  const auto& f = field(time_anchored_ ? k : 0, state_anchored_ ? l : 0, r);
  const double* row = f.data() + static_cast<std::size_t>(j) * grid_.nx;
  const double h2 = grid_.dx() * grid_.dx();
  const int n = grid_.nx;
  if (i == 0) return (2.0 * row[0] - 5.0 * row[1] + 4.0 * row[2] - row[3]) / h2;
  if (i == n - 1) return (2.0 * row[n - 1] - 5.0 * row[n - 2] + 4.0 * row[n - 3] - row[n - 4]) / h2;
  return (row[i + 1] - 2.0 * row[i] + row[i - 1]) / h2;
}

template <class Sample>
double FieldTheta0::interp_y(double y, int j, int i, Sample&& sample, bool derivative) const {
  const int n = static_cast<int>(y_.size());
  const double lo = y_.front(), hi = y_.back();
  if (!(y >= lo && y <= hi))
    throw Error(ErrorKind::y_range,
                "theta0: y=" + std::to_string(y) + " outside [" + std::to_string(lo) + ", " +
                    std::to_string(hi) + "] at node " + node_name(grid_, j, i) +
                    "; widen the y grid",
                grid_.s(j));
  const double h = (hi - lo) / (n - 1);
  const double p = (y - lo) / h;
  const int st = std::clamp(static_cast<int>(std::floor(p)) - 1, 0, n - 4);
  double w[4], dw[4];
  lagrange4(p - st, w, dw);
  double out = 0.0;
  for (int a = 0; a < 4; ++a) out += (derivative ? dw[a] / h : w[a]) * sample(st + a);
  return out;
}

double FieldTheta0::value(int k, int l, int j, int i, const Vec& y) const {
  if (sep_) return raw(k, l, 0, j, i) + sep_->g(grid_.s(k), grid_.x(l), y);
  return interp_y(y[0], j, i, [&](int r) { return raw(k, l, r, j, i); }, false);
}

double FieldTheta0::dx(int k, int l, int j, int i, const Vec& y) const {
  if (sep_) return raw_dx(k, l, 0, j, i);
  return interp_y(y[0], j, i, [&](int r) { return raw_dx(k, l, r, j, i); }, false);
}

double FieldTheta0::dxx(int k, int l, int j, int i, const Vec& y) const {
  if (sep_) return raw_dxx(k, l, 0, j, i);
  return interp_y(y[0], j, i, [&](int r) { return raw_dxx(k, l, r, j, i); }, false);
}

Vec FieldTheta0::dy(int k, int l, int j, int i, const Vec& y) const {
  if (sep_) {
    guard(k, j);
    return sep_->g_y(grid_.s(k), grid_.x(l), y);
  }
  return Vec{interp_y(y[0], j, i, [&](int r) { return raw(k, l, r, j, i); }, true), 0.0};
}

DiagonalBundle::DiagonalBundle(const GridSpec& g) : grid(g) {
  const std::size_t n = static_cast<std::size_t>(g.nt) * g.nx;
  d.assign(n, 0.0);
  dx.assign(n, 0.0);
  dxx.assign(n, 0.0);
  dy[0].assign(n, 0.0);
  dy[1].assign(n, 0.0);
}

}  // namespace tic
