#include <doctest.h>

#include <cmath>
#include <random>

#include "tic/ode_riccati.hpp"

using namespace tic;

namespace {

Trajectory scalar(std::function<double(double, double)> f, double yT, double T, int steps) {
  return rk4_backward([f](double s, std::span<const double> y, std::span<double> dy) { dy[0] = f(s, y[0]); },
                      {yT}, T, steps);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Heun's method on the classical scalar Riccati equation
// P' = −(2A + C²)P − Q + B²P²/R, P(T) = G, stepped backwards.
double classical_riccati_at0(double A, double B, double C, double Q, double R, double G, double T, int n) {
  auto f = [&](double P) { return -(2 * A + C * C) * P - Q + B * B * P * P / R; };
  const double h = T / n;
  double P = G;
  for (int k = 0; k < n; ++k) {
    const double k1 = f(P);
    const double k2 = f(P - h * k1);
    P -= 0.5 * h * (k1 + k2);
  }
  return P;
}

}  // namespace

TEST_CASE("rk4_backward on closed-form scalar equations") {
  SUBCASE("constant") {
    const auto tr = scalar([](double, double) { return 0.0; }, 3.5, 1.0, 10);
    for (const auto& y : tr.y) CHECK(y[0] == 3.5);
    CHECK(tr.t.size() == 11);
    CHECK(tr.t.back() == 1.0);
  }
  SUBCASE("linear decay") {
    const double r = 0.03, g = 2.0;
    const auto tr = scalar([r](double, double y) { return -2 * r * y; }, g, 1.0, 10000);
    for (std::size_t k = 0; k < tr.t.size(); k += 500)
      CHECK(rel(tr.y[k][0], g * std::exp(2 * r * (1.0 - tr.t[k]))) < 1e-10);
  }
  SUBCASE("Bernoulli") {
    const auto tr = scalar([](double, double y) { return y * y; }, 1.0, 1.0, 10000);
    CHECK(rel(tr.y[0][0], 0.5) < 1e-10);
  }
}

TEST_CASE("rk4_backward is fourth order") {
  auto err = [](int n) {
    const auto tr = scalar([](double s, double y) { return y * y + std::sin(s); }, 1.0, 1.0, n);
    const auto ref = scalar([](double s, double y) { return y * y + std::sin(s); }, 1.0, 1.0, 20000);
    return std::abs(tr.y[0][0] - ref.y[0][0]);
  };
  const double e1 = err(40), e2 = err(80), e3 = err(160);
  CHECK(std::log2(e1 / e2) == doctest::Approx(4.0).epsilon(0.05));
  CHECK(std::log2(e2 / e3) == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("rk4_backward reports blow-up with its time") {
  try {
    scalar([](double, double y) { return -y * y; }, 1.0, 2.0, 2000);
    FAIL("expected blow-up");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::blow_up);
    CHECK(e.where() >= 0.99);
    CHECK(e.where() < 2.0);
  }
}

TEST_CASE("LQ Riccati: scalar closed form") {
  LQSpec lq;
  lq.B = constant(1);
  lq.R = constant(1);
  lq.G1 = 1;
  lq.T = 1;
  const auto tr = solve_riccati_lq(lq, 10000);
  for (std::size_t k = 0; k < tr.t.size(); k += 1000) CHECK(rel(tr.phi[0][k], 1.0 / (1.0 - tr.t[k] + 1.0)) < 1e-8);
  CHECK(tr.terminal_residual == 0.0);
}

TEST_CASE("LQ Riccati: classical oracle when the nonlocal data vanish") {
  LQSpec lq;
  const double A = 0.2, B = 0.8, Q = 0.5, R = 1.5, G = 0.7;
  lq.A = constant(A);
  lq.B = constant(B);
  lq.Q = constant(Q);
  lq.R = constant(R);
  lq.G1 = G;
  lq.T = 1;
  const auto tr = solve_riccati_lq(lq, 10000);
  const double P0 = classical_riccati_at0(A, B, 0.0, Q, R, G, 1.0, 200000);
  CHECK(tr.phi[0][0] == doctest::Approx(P0).epsilon(1e-8));
  CHECK(tr.psi[0] == doctest::Approx(-B * P0 / R).epsilon(1e-8));
}

TEST_CASE("mean-variance reduction") {
  const double r = 0.03, mu = 0.08, sigma = 0.2, gamma = 2.0, T = 1.0;
  const auto tr = solve_riccati_lq(meanvar_lq(r, mu, sigma, gamma, T), 10000);
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    CHECK(tr.phi[1][k] == doctest::Approx(-gamma).epsilon(1e-12));
    CHECK(std::abs(tr.phi[2][k]) < 1e-8);
    CHECK(std::abs(tr.phi[0][k] - gamma * tr.phi[5][k] * tr.phi[5][k]) < 1e-8);
    CHECK(std::abs(tr.psi[k]) < 1e-8);
  }

  const auto mv = meanvar_equilibrium(r, mu, sigma, gamma, T);
  const double v0 = (mu - r) / (gamma * sigma * sigma) * std::exp(-r * T);
  CHECK(mv.v_num.front() == doctest::Approx(v0).epsilon(1e-10));
  CHECK(mv.v_num.front() == doctest::Approx(0.6065307).epsilon(1e-5));
  CHECK(mv.phi1.front() == doctest::Approx(2 * std::exp(0.06)).epsilon(1e-10));
  CHECK(mv.phi1.front() == doctest::Approx(2.1236).epsilon(1e-4));
  CHECK(mv.max_rel_err_v < 1e-10);
  CHECK(mv.strategy(0.0, 5.0) == doctest::Approx(v0).epsilon(1e-10));
  CHECK(mv.variant_rel_gap_v > 1e-3);
}

TEST_CASE("mean-variance with zero rate is flat") {
  const auto mv = meanvar_equilibrium(0.0, 0.08, 0.2, 2.0, 1.0);
  for (double v : mv.v_num) CHECK(v == doctest::Approx(0.08 / (2.0 * 0.04)).epsilon(1e-12));
}

TEST_CASE("mean-field system matches the seven-equation route") {
  for (int seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5), pos(0.5, 2.0);
    const double A = u(rng), B = u(rng) + 1.0, C = u(rng), D = u(rng), Q = pos(rng), R = pos(rng);
    const double G1 = pos(rng), G2 = u(rng);
    LQSpec lq;
    lq.A = constant(A);
    lq.B = constant(B);
    lq.C = constant(C);
    lq.D = constant(D);
    lq.Q = constant(Q);
    lq.R = constant(R);
    lq.G1 = G1;
    lq.G2 = G2;
    const auto mf = solve_meanfield_riccati(lq.A, lq.B, lq.C, lq.D, lq.Q, lq.R, G1, G2, 1.0, 4000);
    const auto via = meanfield_from_riccati(solve_riccati_lq(lq, 4000));
    for (std::size_t k = 0; k < mf.t.size(); k += 200) {
      CHECK_MESSAGE(std::abs(mf.phi[k] - via.phi[k]) < 1e-8, "seed " << seed);
      CHECK_MESSAGE(std::abs(mf.phihat[k] - via.phihat[k]) < 1e-8, "seed " << seed);
      CHECK_MESSAGE(std::abs(mf.psi[k] - via.psi[k]) < 1e-8, "seed " << seed);
    }
  }
}

TEST_CASE("mean-field: G2 = 0 makes the pair coincide") {
  const auto mf = solve_meanfield_riccati(constant(0.1), constant(1), constant(0.2), constant(0.3), constant(1),
                                          constant(2), 0.5, 0.0, 1.0, 2000);
  for (std::size_t k = 0; k < mf.t.size(); ++k) CHECK(std::abs(mf.phi[k] - mf.phihat[k]) < 1e-12);
}

TEST_CASE("lq_strategy rejects a vanishing denominator") {
  LQSpec lq;  // R = D = 0
  std::array<double, 7> phi{};
  try {
    lq_strategy(lq, 0.0, phi);
    FAIL("expected singular");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::singular);
  }
}

TEST_CASE("planner: symmetry and ordering") {
  PlannerParams p;
  p.rho1 = p.rho2 = 0.04;
  const auto same = solve_planner(p, 4000);
  for (std::size_t k = 0; k < same.t.size(); ++k) CHECK(std::abs(same.theta1[k] - same.theta2[k]) < 1e-12);

  p.rho1 = 0.08;
  p.rho2 = 0.02;
  const auto ord = solve_planner(p, 4000);
  for (std::size_t k = 0; k < ord.t.size(); ++k) CHECK(ord.theta1[k] <= ord.theta2[k] + 1e-15);
  CHECK(ord.investment == doctest::Approx((p.mu - p.r) / (p.gamma * p.sigma * p.sigma)));
}

TEST_CASE("planner reduces to the Merton problem") {
  std::mt19937_64 rng(7);
  auto draw = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  for (int trial = 0; trial < 10; ++trial) {
    PlannerParams p;
    p.r = draw(0.01, 0.05);
    p.mu = p.r + draw(0.02, 0.1);
    p.sigma = draw(0.15, 0.4);
    p.gamma = draw(0.2, 0.9);
    p.alpha = 1.0 - p.gamma;
    p.rho1 = p.rho2 = draw(0.01, 0.1);
    p.lambda = draw(0.0, 1.0);
    const auto sol = solve_planner(p, 10000);
    const double K = p.r + std::pow(p.mu - p.r, 2) / (2 * p.gamma * p.sigma * p.sigma);
    const double nu = (p.rho1 - (1 - p.gamma) * K) / p.gamma;
    for (std::size_t k = 0; k < sol.t.size(); k += 1000) {
      const double tau = p.T - sol.t[k];
      const double f = std::abs(nu) < 1e-12 ? 1.0 + tau : 1.0 / nu + (1.0 - 1.0 / nu) * std::exp(-nu * tau);
      CHECK_MESSAGE(rel(sol.theta1[k], std::pow(f, p.gamma)) < 1e-6, "trial " << trial);
    }
  }
}

TEST_CASE("stackelberg leader closed forms") {
  const auto st = stackelberg_leader(1.0);
  CHECK(st.equilibrium == -0.5);
  CHECK(st.gap(0.5) == doctest::Approx(0.5 * std::log(4.0 / 3.0)).epsilon(1e-14));
  for (double s : {0.5, 0.7, 1.0}) CHECK(st.precommitted(s, 0.0) - st.precommitted(s, 0.5) == doctest::Approx(st.gap(0.5)));
  // At s = t the pre-committed control equals the equilibrium value.
  for (double t : {0.0, 0.3, 0.9}) CHECK(st.precommitted(t, t) == doctest::Approx(-0.5));
  // The reduced integrand is minimized by the pre-committed control.
  const double s = 0.6, t = 0.2, u = st.precommitted(s, t);
  CHECK(st.reduced_integrand(s, t, u) < st.reduced_integrand(s, t, u + 1e-3));
  CHECK(st.reduced_integrand(s, t, u) < st.reduced_integrand(s, t, u - 1e-3));
}
