#include "tic/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "pde_internal.hpp"
#include "sim_internal.hpp"

namespace tic {

double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

void MCConfig::validate() const {
  if (paths < 2) throw Error(ErrorKind::config, "mc: need at least 2 paths");
  if (antithetic && paths % 2) throw Error(ErrorKind::config, "mc: antithetic pairing needs an even path count");
  if (steps_per_unit < 1) throw Error(ErrorKind::config, "mc: steps per unit time must be >= 1");
}

int mc_step_index(double s, const MCConfig& cfg) {
  const double p = s * cfg.steps_per_unit;
  const long k = std::lround(p);
  if (std::abs(p - k) > 1e-9)
    throw Error(ErrorKind::domain, "time " + std::to_string(s) + " is not on the Monte Carlo grid", s);
  return static_cast<int>(k);
}

std::vector<double> PathEnsemble::slice(int k) const {
  std::vector<double> out(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p) out[p] = x(p, k);
  return out;
}

namespace detail {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

G0Dependence g0_dependence(const ControlProblemSpec& spec, double t, double x) {
  G0Dependence dep;
  const double u = std::clamp(0.3, spec.u_lo, spec.u_hi);
  for (double s : {t, 0.5 * (t + spec.T)}) {
    for (double xx : {x - 1.0, x, x + 1.3}) {
      const Vec y{0.4, 0.0}, z{0.2, 0.0};
      const double base = spec.g0(t, s, x, xx, u, y, z, 0.1, 0.3);
      dep.y |= spec.g0(t, s, x, xx, u, Vec{1.7, 0.0}, z, 0.1, 0.3) != base;
      dep.z |= spec.g0(t, s, x, xx, u, y, Vec{-1.1, 0.0}, 0.1, 0.3) != base;
      dep.y0 |= spec.g0(t, s, x, xx, u, y, z, 2.1, 0.3) != base;
      dep.z0 |= spec.g0(t, s, x, xx, u, y, z, 0.1, -0.9) != base;
    }
  }
  return dep;
}

namespace {

// RK4 + Simpson on the deterministic flow, one control law per segment.
CostEstimate quadrature_cost(const ControlProblemSpec& spec, const std::vector<Segment>& segs,
                             double t, double x, int panels_per_unit) {
  struct Seg {
    double a, h;
    int n;
    std::vector<double> xh;  // X at half nodes: 2n + 1 values
    std::vector<double> y;   // Y at nodes: n + 1 values
  };
  std::vector<Seg> ss;
  double X = x;
  for (const auto& sg : segs) {
    const double len = sg.b - sg.a;
    if (!(len > 0.0)) continue;
    int n = static_cast<int>(std::ceil(len * panels_per_unit / 2.0)) * 2;
    n = std::max(n, 2);
    Seg s{sg.a, len / n, n, {}, {}};
    s.xh.resize(2 * n + 1);
    s.xh[0] = X;
    const double hh = 0.5 * s.h;
    auto f = [&](double tt, double xx) { return spec.b(tt, xx, sg.law(tt, xx)); };
    for (int k = 0; k < 2 * n; ++k) {
      const double tt = sg.a + k * hh;
      const double k1 = f(tt, X);
      const double k2 = f(tt + 0.5 * hh, X + 0.5 * hh * k1);
      const double k3 = f(tt + 0.5 * hh, X + 0.5 * hh * k2);
      const double k4 = f(tt + hh, X + hh * k3);
      X += hh * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
      if (!std::isfinite(X)) throw Error(ErrorKind::blow_up, "quadrature: state blew up", tt + hh);
      s.xh[k + 1] = X;
    }
    ss.push_back(std::move(s));
  }
  if (ss.empty()) throw Error(ErrorKind::domain, "quadrature: empty horizon");

  double Y = spec.h(X)[0];
  require_finite(Y, "h");
  for (std::size_t q = ss.size(); q-- > 0;) {
    auto& s = ss[q];
    const auto& law = segs[q].law;
    s.y.assign(s.n + 1, 0.0);
    s.y[s.n] = Y;
    auto f = [&](double tt, double xx, double yy) {
      return -spec.g(tt, xx, law(tt, xx), Vec{yy, 0.0}, Vec{0.0, 0.0})[0];
    };
    for (int i = s.n; i > 0; --i) {
      const double s1 = s.a + i * s.h, sm = s1 - 0.5 * s.h, s0 = s1 - s.h;
      const double x1 = s.xh[2 * i], xm = s.xh[2 * i - 1], x0 = s.xh[2 * i - 2];
      const double k1 = f(s1, x1, Y);
      const double k2 = f(sm, xm, Y - 0.5 * s.h * k1);
      const double k3 = f(sm, xm, Y - 0.5 * s.h * k2);
      const double k4 = f(s0, x0, Y - s.h * k3);
      Y -= s.h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
      if (!std::isfinite(Y)) throw Error(ErrorKind::blow_up, "quadrature: backward value blew up", s0);
      s.y[i - 1] = Y;
    }
  }

  double total = 0.0;
  for (std::size_t q = 0; q < ss.size(); ++q) {
    const auto& s = ss[q];
    const auto& law = segs[q].law;
    double acc = 0.0;
    for (int i = 0; i <= s.n; ++i) {
      const double tt = s.a + i * s.h, xx = s.xh[2 * i];
      const double v = spec.g0(t, tt, x, xx, law(tt, xx), Vec{s.y[i], 0.0}, Vec{0.0, 0.0}, 0.0, 0.0);
      require_finite(v, "g0");
      const double c = (i == 0 || i == s.n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      acc += c * v;
    }
    total += acc * s.h / 3.0;
  }
  const double y_t = ss.front().y[0];
  CostEstimate out;
  out.value = total + spec.h0(t, x, X, Vec{y_t, 0.0});
  out.y = y_t;
  out.samples = 1;
  return out;
}

}  // namespace

CostEstimate deterministic_cost(const ControlProblemSpec& spec, const std::vector<Segment>& segs,
                                double t, double x, const CostOptions& opt) {
  const auto dep = g0_dependence(spec, t, x);
  if (dep.y0 || dep.z0)
    throw Error(ErrorKind::unsupported, "quadrature cost: g0 depends on the cost value; use the PDE route");
  return quadrature_cost(spec, segs, t, x, opt.quadrature_panels_per_unit);
}

Prepared prepare_mc(const ControlProblemSpec& spec, double t, double x, const CostOptions& opt) {
  if (spec.m != 1) throw Error(ErrorKind::unsupported, "Monte Carlo cost: m = 1 only");
  Prepared p;
  const auto probe = make_probe(spec, x - 5.0, x + 5.0);
  const auto rate = detect_linear_backward(spec, probe);
  if (!rate)
    throw Error(ErrorKind::unsupported,
                "Monte Carlo cost: backward generator must be linear in y and free of z; use the PDE route");
  p.rate = *rate;
  const auto dep = g0_dependence(spec, t, x);
  if (dep.z || dep.y0 || dep.z0)
    throw Error(ErrorKind::unsupported,
                "Monte Carlo cost: g0 depends on z, the cost value or its loading; use the PDE route");
  if (dep.y && !opt.theta)
    throw Error(ErrorKind::unsupported, "Monte Carlo cost: g0 depends on y; supply theta");
  p.g0_uses_y = dep.y;
  p.theta = opt.theta;
  return p;
}

LockstepOut lockstep(const ControlProblemSpec& spec, const std::vector<Law>& laws, double t, double x,
                     const MCConfig& cfg, const Prepared& prep, std::uint64_t seed) {
  cfg.validate();
  const int k0 = mc_step_index(t, cfg), kT = mc_step_index(spec.T, cfg);
  if (kT <= k0) throw Error(ErrorKind::domain, "Monte Carlo: start time must precede T", t);
  const int n = kT - k0;
  const double dt = cfg.dt(), sq = std::sqrt(dt);
  const int K = static_cast<int>(laws.size());
  const std::size_t N = cfg.paths;

  LockstepOut out;
  out.K = K;
  out.n_paths = N;
  out.xT.assign(N * K, 0.0);
  out.H.assign(N * K, 0.0);
  out.G0.assign(N * K, 0.0);

  const std::size_t units = cfg.antithetic ? N / 2 : N;
  for_each_index(units, cfg.policy, [&](std::size_t w) {
    std::mt19937_64 eng(seed ^ static_cast<std::uint64_t>(w));
    std::normal_distribution<double> nd;
    std::vector<double> xi(n);
    for (int k = 0; k < n; ++k) xi[k] = nd(eng);
    const int members = cfg.antithetic ? 2 : 1;
    std::vector<double> X(K), H(K), G(K);
    for (int mbr = 0; mbr < members; ++mbr) {
      const std::size_t path = cfg.antithetic ? 2 * w + mbr : w;
      const double sign = mbr == 0 ? 1.0 : -1.0;
      std::fill(X.begin(), X.end(), x);
      std::fill(H.begin(), H.end(), 0.0);
      std::fill(G.begin(), G.end(), 0.0);
      for (int k = 0; k < n; ++k) {
        const int kg = k0 + k;
        const double s = kg * dt;
        const double disc = prep.rate == 0.0 ? 1.0 : std::exp(prep.rate * (s - t));
        for (int q = 0; q < K; ++q) {
          const Law& L = laws[q];
          const double xs = X[q];
          const double u = (kg >= L.k_begin && kg < L.k_end) ? L.u : (*L.psi)(s, xs);
          const Vec y{prep.g0_uses_y ? prep.theta(s, xs) : 0.0, 0.0};
          G[q] += spec.g0(t, s, x, xs, u, y, Vec{0.0, 0.0}, 0.0, 0.0) * dt;
          H[q] += disc * spec.g(s, xs, u, Vec{0.0, 0.0}, Vec{0.0, 0.0})[0] * dt;
          X[q] = xs + spec.b(s, xs, u) * dt + spec.sigma(s, xs, u) * sq * sign * xi[k];
          if (!std::isfinite(X[q]))
            throw Error(ErrorKind::blow_up, "path " + std::to_string(path) + " blew up", s + dt);
        }
      }
      const double discT = prep.rate == 0.0 ? 1.0 : std::exp(prep.rate * (spec.T - t));
      for (int q = 0; q < K; ++q) {
        out.xT[path * K + q] = X[q];
        out.H[path * K + q] = discT * spec.h(X[q])[0] + H[q];
        out.G0[path * K + q] = G[q];
      }
    }
  }, 256);
  return out;
}

// Per-sample φ = f + c (H − Ŷ) for law q; pair averages under antithetic pairing.
std::vector<double> influence(const ControlProblemSpec& spec, const LockstepOut& o, int q, double t,
                              double x, const MCConfig& cfg, const std::optional<double>& y_fixed,
                              double& j_mean, double& y_mean, double& y_se) {
  const std::size_t N = o.n_paths;
  const int K = o.K;
  std::vector<double> H(N), f(N), dh(N);
  for (std::size_t p = 0; p < N; ++p) H[p] = o.H[p * K + q];
  y_mean = pairwise_sum(H.data(), N) / N;
  const double y_use = y_fixed ? *y_fixed : y_mean;
  const double hy = 1e-6 * std::max(1.0, std::abs(y_use));
  for (std::size_t p = 0; p < N; ++p) {
    const double xT = o.xT[p * K + q];
    f[p] = spec.h0(t, x, xT, Vec{y_use, 0.0}) + o.G0[p * K + q];
    if (!y_fixed)
      dh[p] = (spec.h0(t, x, xT, Vec{y_use + hy, 0.0}) - spec.h0(t, x, xT, Vec{y_use - hy, 0.0})) / (2.0 * hy);
  }
  j_mean = pairwise_sum(f.data(), N) / N;
  const double c = y_fixed ? 0.0 : pairwise_sum(dh.data(), N) / N;
  std::vector<double> phi(N);
  for (std::size_t p = 0; p < N; ++p) phi[p] = f[p] + c * (H[p] - y_mean);
  auto pair = [&](std::vector<double>& v) {
    if (!cfg.antithetic) return;
    std::vector<double> w(N / 2);
    for (std::size_t k = 0; k < N / 2; ++k) w[k] = 0.5 * (v[2 * k] + v[2 * k + 1]);
    v = std::move(w);
  };
  pair(phi);
  pair(H);
  y_se = std_error(H);
  return phi;
}

double std_error(const std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  const double m = pairwise_sum(v.data(), n) / n;
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = (v[i] - m) * (v[i] - m);
  return std::sqrt(pairwise_sum(d.data(), n) / (n - 1) / n);
}

}  // namespace detail

PathEnsemble simulate_forward(const ControlProblemSpec& spec, const StrategyTable& psi, double t0,
                              double x0, const MCConfig& cfg) {
  cfg.validate();
  PathEnsemble e;
  e.t0 = t0;
  e.x0 = x0;
  e.dt = cfg.dt();
  e.k0 = mc_step_index(t0, cfg);
  const int kT = mc_step_index(spec.T, cfg);
  if (kT <= e.k0) throw Error(ErrorKind::domain, "simulate_forward: t0 must precede T", t0);
  e.steps = kT - e.k0;
  e.n_paths = cfg.paths;
  e.seed = cfg.seed;
  e.antithetic = cfg.antithetic;
  const int n = e.steps;
  e.paths.assign(e.n_paths * (n + 1), 0.0);
  e.terminal.assign(e.n_paths, 0.0);
  const double sq = std::sqrt(e.dt);
  const std::size_t units = cfg.antithetic ? cfg.paths / 2 : cfg.paths;
  detail::for_each_index(units, cfg.policy, [&](std::size_t w) {
    std::mt19937_64 eng(cfg.seed ^ static_cast<std::uint64_t>(w));
    std::normal_distribution<double> nd;
    std::vector<double> xi(n);
    for (int k = 0; k < n; ++k) xi[k] = nd(eng);
    const int members = cfg.antithetic ? 2 : 1;
    for (int mbr = 0; mbr < members; ++mbr) {
      const std::size_t p = cfg.antithetic ? 2 * w + mbr : w;
      const double sign = mbr == 0 ? 1.0 : -1.0;
      double* row = e.paths.data() + p * (n + 1);
      double X = x0;
      row[0] = X;
      for (int k = 0; k < n; ++k) {
        const double s = (e.k0 + k) * e.dt;
        const double u = psi(s, X);
        X += spec.b(s, X, u) * e.dt + spec.sigma(s, X, u) * sq * sign * xi[k];
        if (!std::isfinite(X))
          throw Error(ErrorKind::blow_up, "simulate_forward: path " + std::to_string(p) + " blew up", s + e.dt);
        row[k + 1] = X;
      }
      e.terminal[p] = X;
    }
  }, 256);
  return e;
}

CostEstimate evaluate_cost(const ControlProblemSpec& spec, const StrategyTable& psi, double t,
                           double x, const MCConfig& cfg, const CostOptions& opt) {
  if (spec.cost_class == CostClass::general)
    throw Error(ErrorKind::unsupported,
                "evaluate_cost: general cost class is not simulated; use solve_perturbation (PDE route)");
  if (!(t >= 0.0 && t < spec.T)) throw Error(ErrorKind::domain, "evaluate_cost: t outside [0, T)", t);
  auto law = [&psi](double s, double xx) { return psi(s, xx); };
  if (spec.cost_class == CostClass::deterministic)
    return detail::deterministic_cost(spec, {{t, spec.T, law}}, t, x, opt);

  const auto prep = detail::prepare_mc(spec, t, x, opt);
  const std::vector<detail::Law> laws{{&psi, -1, -1, 0.0}};
  const auto o = detail::lockstep(spec, laws, t, x, cfg, prep, detail::derive_seed(cfg.seed, 1));
  CostEstimate est;
  const auto phi = detail::influence(spec, o, 0, t, x, cfg, opt.y_fixed, est.value, est.y, est.y_se);
  est.se = detail::std_error(phi);
  est.samples = phi.size();
  return est;
}

StrategyTable perturbed_strategy(const StrategyTable& psi, double t, double eps, double u, double T) {
  if (!(eps > 0.0) || t < 0.0 || t + eps > T + 1e-12)
    throw Error(ErrorKind::domain, "perturbed_strategy: window [t, t+eps) must lie in [0, T]", t);
  if (u < psi.u_lo() || u > psi.u_hi()) throw Error(ErrorKind::domain, "perturbed_strategy: u outside U");
  const double a = t - 1e-12, b = t + eps - 1e-12;
  return StrategyTable::closed_form(
      [psi, a, b, u](double s, double x) { return (s >= a && s < b) ? u : psi(s, x); }, psi.u_lo(),
      psi.u_hi());
}

std::vector<QuotientRow> difference_quotients(const ControlProblemSpec& spec, const StrategyTable& psi,
                                              double t, double x, const std::vector<Spike>& spikes,
                                              const MCConfig& cfg, const CostOptions& opt) {
  if (spec.cost_class == CostClass::general)
    throw Error(ErrorKind::unsupported,
                "difference_quotients: general cost class is not simulated; use solve_perturbation (PDE route)");
  for (const auto& sp : spikes) {
    if (!(sp.eps > 0.0) || t + sp.eps > spec.T + 1e-12)
      throw Error(ErrorKind::domain, "difference_quotients: window outside the horizon", t);
    if (sp.u < spec.u_lo || sp.u > spec.u_hi) throw Error(ErrorKind::domain, "difference_quotients: u outside U");
  }
  std::vector<QuotientRow> rows;
  auto base_law = [&psi](double s, double xx) { return psi(s, xx); };

  if (spec.cost_class == CostClass::deterministic) {
    const double jb = detail::deterministic_cost(spec, {{t, spec.T, base_law}}, t, x, opt).value;
    for (const auto& sp : spikes) {
      const double u = sp.u;
      std::vector<detail::Segment> segs{{t, t + sp.eps, [u](double, double) { return u; }}};
      if (t + sp.eps < spec.T - 1e-12) segs.push_back({t + sp.eps, spec.T, base_law});
      const double je = detail::deterministic_cost(spec, segs, t, x, opt).value;
      rows.push_back({t, x, 0, sp.eps, sp.u, (je - jb) / sp.eps, 0.0, je, jb});
    }
    return rows;
  }

  const auto prep = detail::prepare_mc(spec, t, x, opt);
  const int kt = mc_step_index(t, cfg);
  std::vector<detail::Law> laws{{&psi, -1, -1, 0.0}};
  for (const auto& sp : spikes) laws.push_back({&psi, kt, mc_step_index(t + sp.eps, cfg), sp.u});
  const auto o = detail::lockstep(spec, laws, t, x, cfg, prep, detail::derive_seed(cfg.seed, 2));
  double jb, yb, yse;
  const auto phi0 = detail::influence(spec, o, 0, t, x, cfg, opt.y_fixed, jb, yb, yse);
  for (std::size_t q = 0; q < spikes.size(); ++q) {
    double je, ye, yese;
    const auto phi = detail::influence(spec, o, static_cast<int>(q + 1), t, x, cfg, opt.y_fixed, je, ye, yese);
    std::vector<double> d(phi.size());
    for (std::size_t p = 0; p < d.size(); ++p) d[p] = phi[p] - phi0[p];
    const double e = spikes[q].eps;
    rows.push_back({t, x, 0, e, spikes[q].u, (je - jb) / e, detail::std_error(d) / e, je, jb});
  }
  return rows;
}

}  // namespace tic
