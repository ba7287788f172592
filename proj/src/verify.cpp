#include <algorithm>
#include <cmath>
#include <string>

#include "pde_internal.hpp"
#include "sim_internal.hpp"
#include "tic/ode_riccati.hpp"
#include "tic/simulate.hpp"

namespace tic {

namespace {

double mean_of(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()) / v.size(); }

}  // namespace

VerifyReport verify_equilibrium(const ControlProblemSpec& spec, const StrategyTable& psi,
                                const std::vector<double>& t_list, const MCConfig& cfg, double tol_eq,
                                const CostOptions& opt) {
  cfg.validate();
  if (cfg.eps.empty() || cfg.u_grid.empty()) throw Error(ErrorKind::config, "verify: empty eps or u grid");
  VerifyReport rep;
  rep.tol_eq = tol_eq;
  const bool stochastic = spec.cost_class != CostClass::deterministic;
  if (stochastic && cfg.paths < 100)
    rep.warnings.push_back("only " + std::to_string(cfg.paths) + " paths; quotients are imprecise");

  // The deterministic class needs a single reference path.
  MCConfig ref_cfg = cfg;
  ref_cfg.seed = detail::derive_seed(cfg.seed, 0);
  if (!stochastic) ref_cfg.paths = 2, ref_cfg.antithetic = false;
  const auto ref = simulate_forward(spec, psi, 0.0, spec.x0, ref_cfg);

  std::vector<Spike> spikes;
  for (double e : cfg.eps)
    for (double u : cfg.u_grid) spikes.push_back({e, u});

  bool zero_se_warned = false;
  for (double t : t_list) {
    const int k = mc_step_index(t, cfg) - ref.k0;
    if (k < 0 || k >= ref.steps) throw Error(ErrorKind::domain, "verify: t outside [0, T)", t);
    auto xs = ref.slice(k);
    std::vector<double> states{mean_of(xs)};
    std::sort(xs.begin(), xs.end());
    for (double q : {0.25, 0.5, 0.75})
      states.push_back(xs[static_cast<std::size_t>(std::floor(q * (xs.size() - 1)))]);
    std::vector<double> uniq;
    for (double s : states)
      if (std::find(uniq.begin(), uniq.end(), s) == uniq.end()) uniq.push_back(s);
    for (std::size_t si = 0; si < uniq.size(); ++si) {
      auto rows = difference_quotients(spec, psi, t, uniq[si], spikes, cfg, opt);
      for (auto& r : rows) {
        r.state = static_cast<int>(si);
        if (stochastic && r.se == 0.0 && !zero_se_warned) {
          rep.warnings.push_back("zero standard error in a stochastic problem (t=" + std::to_string(t) +
                                 "); paths under the strategy may be deterministic");
          zero_se_warned = true;
        }
        rep.rows.push_back(r);
      }
    }
  }

  for (double e : cfg.eps) {
    double mn = INFINITY;
    for (const auto& r : rep.rows)
      if (r.eps == e) mn = std::min(mn, r.quotient);
    rep.min_by_eps.emplace_back(e, mn);
  }
  const double e_min = *std::min_element(cfg.eps.begin(), cfg.eps.end());
  for (const auto& [e, mn] : rep.min_by_eps)
    if (e == e_min) rep.min_quotient_smallest_eps = mn;
  rep.pass = rep.min_quotient_smallest_eps >= -tol_eq;
  return rep;
}

StrategyTable meanvar_precommitted(const MeanVarParams& p, double t, double x, double u_lo, double u_hi) {
  const double th2 = std::pow((p.mu - p.r) / p.sigma, 2);
  const double k = (p.mu - p.r) / (p.sigma * p.sigma);
  const double lam = x * std::exp(p.r * (p.T - t)) + std::exp(th2 * (p.T - t)) / p.gamma;
  const double r = p.r, T = p.T;
  return StrategyTable::closed_form(
      [=](double s, double X) { return k * (lam * std::exp(-r * (T - s)) - X); }, u_lo, u_hi);
}

double meanvar_precommitted_cost(const MeanVarParams& p, double t, double x) {
  const double th2 = std::pow((p.mu - p.r) / p.sigma, 2), tau = p.T - t;
  return -x * std::exp(p.r * tau) - (std::exp(th2 * tau) - 1.0) / (2.0 * p.gamma);
}

double meanvar_equilibrium_cost(const MeanVarParams& p, double t, double x) {
  const double th2 = std::pow((p.mu - p.r) / p.sigma, 2), tau = p.T - t;
  return -x * std::exp(p.r * tau) - th2 * tau / (2.0 * p.gamma);
}

GapReport demonstrate_inconsistency(const std::string& id, const InconsistencyOptions& opt) {
  GapReport rep;
  rep.id = id;
  const double T = opt.T;
  for (double tau : opt.taus)
    if (tau < 0.0 || tau >= T) throw Error(ErrorKind::config, "inconsistency: tau must lie in [0, T)");

  if (id == "ex31") {
    // ū(s; t) = (s − t − 1)/2, so the gap is τ/2 for every s in [τ, T].
    for (double tau : opt.taus) {
      double gap = 0.0;
      for (int q = 0; q <= 64; ++q) {
        const double s = tau + (T - tau) * q / 64.0;
        gap = std::max(gap, std::abs((s - 1.0) / 2.0 - (s - tau - 1.0) / 2.0));
      }
      rep.rows.push_back({tau, gap, 1.0});
    }
    return rep;
  }
  if (id == "stackelberg") {
    const auto st = stackelberg_leader(T);
    for (double tau : opt.taus) {
      double gap = 0.0;
      for (int q = 0; q <= 64; ++q) {
        const double s = tau + (T - tau) * q / 64.0;
        gap = std::max(gap, std::abs(st.precommitted(s, 0.0) - st.precommitted(s, tau)));
      }
      rep.rows.push_back({tau, gap, 1.0});
    }
    rep.values.emplace_back("equilibrium", st.equilibrium);
    return rep;
  }
  if (id == "ex41") {
    const auto spec = lq_problem(example41_lq(T), opt.x0);
    const double u_open = -opt.x0 / (T + 1.0);
    const auto open = StrategyTable::closed_form([u_open](double, double) { return u_open; }, spec.u_lo, spec.u_hi);
    const auto ens = simulate_forward(spec, open, 0.0, opt.x0, opt.mc);
    for (double tau : opt.taus) {
      const auto xs = ens.slice(mc_step_index(tau, opt.mc) - ens.k0);
      std::vector<double> gaps(xs.size());
      std::size_t moved = 0;
      for (std::size_t p = 0; p < xs.size(); ++p) {
        const double re = -xs[p] / (T - tau + 1.0);
        gaps[p] = std::abs(re - u_open);
        if (gaps[p] > 1e-3 * std::max(std::abs(u_open), 1e-300)) ++moved;
      }
      rep.rows.push_back({tau, mean_of(gaps), static_cast<double>(moved) / xs.size()});
    }
    rep.notes.push_back("gap is the path average of |re-optimized - open-loop| control at tau");
    return rep;
  }
  if (id == "meanvar_precommit") {
    MeanVarParams p = opt.mv;
    p.T = T;
    p.x0 = opt.x0;
    const auto spec = meanvar_problem(p, -1e3, 1e3);
    const auto pre = meanvar_precommitted(p, 0.0, p.x0);
    const auto ens = simulate_forward(spec, pre, 0.0, p.x0, opt.mc);
    const double k = (p.mu - p.r) / (p.sigma * p.sigma);
    const double th2 = std::pow((p.mu - p.r) / p.sigma, 2);
    const double lam0 = p.x0 * std::exp(p.r * T) + std::exp(th2 * T) / p.gamma;
    for (double tau : opt.taus) {
      const auto xs = ens.slice(mc_step_index(tau, opt.mc) - ens.k0);
      std::vector<double> gaps(xs.size());
      std::size_t moved = 0;
      // The feedback laws differ by k (λ₀ − λ_τ) e^{−r(T−s)}; the sup over [τ, T] sits at s = T.
      for (std::size_t q = 0; q < xs.size(); ++q) {
        const double lam = xs[q] * std::exp(p.r * (T - tau)) + std::exp(th2 * (T - tau)) / p.gamma;
        gaps[q] = k * std::abs(lam0 - lam);
        if (gaps[q] > 1e-3 * k * std::abs(lam0)) ++moved;
      }
      rep.rows.push_back({tau, mean_of(gaps), static_cast<double>(moved) / xs.size()});
    }
    rep.values.emplace_back("precommitted_cost", meanvar_precommitted_cost(p, 0.0, p.x0));
    rep.values.emplace_back("equilibrium_cost", meanvar_equilibrium_cost(p, 0.0, p.x0));
    rep.notes.push_back("at the mean state the two laws coincide; the gap is driven by the spread of X(tau)");
    return rep;
  }
  throw Error(ErrorKind::config, "inconsistency: unknown example '" + id +
                                     "' (ex31, ex41, stackelberg, meanvar_precommit)");
}

FKReport check_feynman_kac(const ControlProblemSpec& spec, const StrategyTable& psi,
                           const FieldTheta& theta, const FieldTheta0& theta0,
                           const std::vector<std::pair<double, double>>& points, const MCConfig& cfg) {
  if (spec.m != 1) throw Error(ErrorKind::unsupported, "fk-check: m = 1 only");
  const auto probe = make_probe(spec, theta.grid.x_lo, theta.grid.x_hi);
  const auto rate = detect_linear_backward(spec, probe);
  if (!rate || *rate != 0.0)
    throw Error(ErrorKind::unsupported, "fk-check: g must not depend on (y, z)");
  if (spec.cost_class == CostClass::general)
    throw Error(ErrorKind::unsupported, "fk-check: general cost class; g0 must be free of (y0, z0)");

  const auto bundle = extract_diagonal(theta0, theta);
  FieldTheta diag(theta.grid, 1);
  diag.v[0] = bundle.d;

  FKReport rep;
  for (const auto& [r, x] : points) {
    FKPoint pt;
    pt.r = r;
    pt.x = x;
    pt.theta = theta.at(0, r, x);
    pt.d = diag.at(0, r, x);
    CostOptions co;
    co.theta = [&theta](double s, double xx) { return theta.at(0, s, xx); };
    co.y_fixed = pt.theta;
    const auto est = evaluate_cost(spec, psi, r, x, cfg, co);
    pt.mc_y = est.y;
    pt.se_y = est.y_se;
    pt.mc_y0 = est.value;
    pt.se_y0 = est.se;
    auto z = [](double diff, double se) {
      if (se > 0.0) return diff / se;
      return diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
    };
    pt.z_y = z(pt.mc_y - pt.theta, pt.se_y);
    pt.z_y0 = z(pt.mc_y0 - pt.d, pt.se_y0);
    rep.max_abs_z = std::max({rep.max_abs_z, std::abs(pt.z_y), std::abs(pt.z_y0)});
    rep.points.push_back(pt);
  }
  return rep;
}

}  // namespace tic
