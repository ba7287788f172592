#include <doctest.h>

#include <cmath>
#include <numbers>

#include "tic/families.hpp"
#include "tic/model_core.hpp"

using namespace tic;

namespace {

ControlProblemSpec simple_spec() {
  ControlProblemSpec s;
  s.name = "simple";
  s.b = [](double, double, double u) { return u; };
  s.sigma = [](double, double, double) { return 1.0; };
  s.g = [](double, double, double, const Vec&, const Vec&) { return Vec{0.0, 0.0}; };
  s.h = [](double x) { return Vec{x, 0.0}; };
  s.g0 = [](double, double, double, double, double, const Vec&, const Vec&, double, double) { return 0.0; };
  s.h0 = [](double, double, double, const Vec& y) { return y[0]; };
  s.u_lo = -10;
  s.u_hi = 10;
  return s;
}

}  // namespace

TEST_CASE("H reduces to the hand-evaluated three-term sum") {
  auto s = simple_spec();
  const Vec h = hamiltonian_H(s, 0.3, 0.1, 3.0, {0.0, 0.0}, {2.0, 0.0}, {4.0, 0.0});
  CHECK(h[0] == doctest::Approx(8.0).epsilon(1e-15));
}

TEST_CASE("H vanishes when every coefficient does") {
  auto s = simple_spec();
  s.b = [](double, double, double) { return 0.0; };
  s.sigma = [](double, double, double) { return 0.0; };
  for (double th : {-1.0, 0.0, 2.5})
    CHECK(hamiltonian_H(s, 0.5, 1.0, 0.7, {th, 0}, {3.0, 0}, {-2.0, 0})[0] == 0.0);
  CHECK(hamiltonian_H0_hat(s, 0.1, 0.5, 0.0, 1.0, 0.7, {1, 0}, {2, 0}, {3, 0}, 0.4, 0.5, {0, 0}, 0.6) == 0.0);
}

TEST_CASE("H0 hat adds q0 times H") {
  auto s = simple_spec();
  s.g = [](double, double x, double u, const Vec& y, const Vec&) { return Vec{x * u - y[0], 0.0}; };
  s.g0 = [](double, double, double, double, double u, const Vec&, const Vec&, double, double) { return u * u; };
  const double t = 0.1, sv = 0.4, xt = 0.2, x = 0.7, u = -1.3;
  const Vec th{0.5, 0}, p{1.5, 0}, P{-0.4, 0}, q0{0.8, 0};
  const double base = hamiltonian_H0(s, t, sv, xt, x, u, th, p, 0.3, 0.2, 0.9);
  // Independent hand evaluation: P0 a + p0 b + g0 with a = 1/2.
  CHECK(base == doctest::Approx(0.9 * 0.5 + 0.2 * u + u * u));
  const double hat = hamiltonian_H0_hat(s, t, sv, xt, x, u, th, p, P, 0.3, 0.2, q0, 0.9);
  const double Hval = -0.4 * 0.5 + 1.5 * u + (x * u - 0.5);
  CHECK(hat == doctest::Approx(base + 0.8 * Hval));
}

TEST_CASE("diagonal Hamiltonian uses the diagonal slots") {
  auto s = simple_spec();
  s.g0 = [](double t, double sv, double xt, double x, double u, const Vec&, const Vec&, double, double) {
    return (sv - t) + (x - xt) + u * u;
  };
  DiagonalPoint dp;
  dp.s = 0.3;
  dp.x = 0.2;
  dp.theta = {0.2, 0};
  dp.theta_x = {1, 0};
  dp.dxx = 2.0;
  dp.dx = 0.5;
  dp.dy = {1.0, 0};
  const double u = 0.4;
  const double expect = hamiltonian_H0_hat(s, 0.3, 0.3, 0.2, 0.2, u, dp.theta, dp.theta_x, dp.theta_xx, dp.d,
                                           dp.dx, dp.dy, dp.dxx);
  CHECK(hamiltonian_at_diagonal(s, dp, u) == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("heat kernel point values") {
  auto half = [](double, double) { return 0.5; };
  auto one = [](double, double) { return 1.0; };
  CHECK(heat_kernel(half, 0.0, 0.3, 1.0, 0.3) == doctest::Approx(1.0 / std::sqrt(2 * std::numbers::pi)));
  CHECK(heat_kernel(half, 0.0, 0.3, 1.0, 0.3) == doctest::Approx(0.3989423).epsilon(1e-7));
  CHECK(heat_kernel(one, 0.0, 1.0, 0.25, 0.0) == doctest::Approx(0.2075537).epsilon(1e-6));
  CHECK_THROWS_AS(heat_kernel(one, 0.5, 0.0, 0.5, 0.0), Error);
}

TEST_CASE("heat kernel integrates to one in the target variable") {
  auto a = [](double, double mu) { return 0.7 + 0.0 * mu; };
  double sum = 0.0;
  const double h = 0.01;
  for (int k = -1000; k <= 1000; ++k) sum += heat_kernel(a, 0.0, 0.4, 0.6, 0.4 + k * h) * h;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("validate_spec flags") {
  SUBCASE("mean-variance is degenerate at u = 0") {
    const auto spec = meanvar_problem({});
    const auto d = validate_spec(spec, make_probe(spec, 0.0, 2.0));
    CHECK_FALSE(d.nondegenerate);
    CHECK(d.lambda0 == 0.0);
    CHECK_FALSE(d.control_free_observed);
  }
  SUBCASE("linear heat problem") {
    LinearParams p;
    p.a = 1.0;
    const auto spec = linear_problem(p);
    const auto d = validate_spec(spec, make_probe(spec, -3, 3));
    CHECK(d.nondegenerate);
    CHECK(d.lambda0 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(d.pde_route_enabled);
    CHECK(d.linear_backward_rate.has_value());
  }
  SUBCASE("stackelberg has no diffusion") {
    const auto spec = stackelberg_problem();
    const auto d = validate_spec(spec, make_probe(spec, -1, 1));
    CHECK_FALSE(d.nondegenerate);
    CHECK_FALSE(d.pde_route_enabled);
    CHECK(d.suggested_route == "ode");
  }
  SUBCASE("non-finite coefficients are named") {
    auto spec = simple_spec();
    spec.b = [](double, double x, double) { return 1.0 / (x - x); };
    const auto d = validate_spec(spec, make_probe(spec, -1, 1));
    CHECK_FALSE(d.all_finite);
    CHECK_FALSE(d.non_finite.empty());
  }
}

TEST_CASE("detect_linear_backward") {
  auto spec = simple_spec();
  spec.g = [](double, double x, double u, const Vec& y, const Vec&) { return Vec{x + u - 0.3 * y[0], 0}; };
  auto rate = detect_linear_backward(spec, make_probe(spec, -1, 1));
  REQUIRE(rate.has_value());
  CHECK(*rate == doctest::Approx(-0.3));
  spec.g = [](double, double, double, const Vec& y, const Vec& z) { return Vec{y[0] + z[0], 0}; };
  CHECK_FALSE(detect_linear_backward(spec, make_probe(spec, -1, 1)).has_value());
}

TEST_CASE("strategy table clamps and interpolates") {
  auto cf = StrategyTable::closed_form([](double s, double x) { return s + x; }, -1.0, 1.0);
  CHECK(cf(0.2, 0.3) == doctest::Approx(0.5));
  CHECK(cf(0.5, 3.0) == 1.0);
  CHECK(cf(0.5, -3.0) == -1.0);

  // Bilinear data reproduce a bilinear function exactly.
  std::vector<double> s{0, 0.5, 1}, x{-1, 0, 1, 2}, v;
  for (double si : s)
    for (double xi : x) v.push_back(0.1 * si + 0.2 * xi + 0.3 * si * xi);
  auto g = StrategyTable::grid(s, x, v, -5, 5);
  CHECK(g.is_grid());
  for (double si : {0.1, 0.4, 0.77})
    for (double xi : {-0.6, 0.2, 1.9}) CHECK(g(si, xi) == doctest::Approx(0.1 * si + 0.2 * xi + 0.3 * si * xi));

  CHECK_THROWS_AS(StrategyTable::grid(s, x, {1.0}, -1, 1), Error);
  CHECK_THROWS_AS(StrategyTable::closed_form([](double, double) { return 0.0; }, 1, -1), Error);
}

TEST_CASE("problem config parsing") {
  const auto cfg = parse_problem_config(nlohmann::json::parse(R"({"family":"meanvar","params":{"r":0.05},"T":2,"U":[-3,4]})"));
  CHECK(cfg.family == "meanvar");
  CHECK(cfg.T == 2.0);
  CHECK(cfg.u_lo == -3.0);
  CHECK(cfg.u_hi == 4.0);
  CHECK(cfg.param("r", 0) == 0.05);
  CHECK(cfg.param("mu", 0.11) == 0.11);
  CHECK(parse_problem_config(to_json(cfg)).T == 2.0);

  auto kind_of = [](const char* text) {
    try {
      parse_problem_config(nlohmann::json::parse(text));
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::evaluation;
  };
  CHECK(kind_of("[]") == ErrorKind::config);
  CHECK(kind_of(R"({"params":{}})") == ErrorKind::config);
  CHECK(kind_of(R"({"family":"x","T":-1})") == ErrorKind::config);
  CHECK(kind_of(R"({"family":"x","U":[1,0]})") == ErrorKind::config);
  CHECK(kind_of(R"({"family":"x","U":[1]})") == ErrorKind::config);
  CHECK(kind_of(R"({"family":"x","params":[1]})") == ErrorKind::config);

  ProblemConfig bad;
  bad.family = "no-such-family";
  CHECK_THROWS_AS(make_problem(bad), Error);
}

TEST_CASE("registered families build valid specs") {
  register_family("unit-test-family", [](const ProblemConfig& c) {
    auto s = simple_spec();
    s.T = c.T;
    return s;
  });
  ProblemConfig c;
  c.family = "unit-test-family";
  c.T = 0.5;
  CHECK(make_problem(c).T == 0.5);

  for (const auto& name : registered_families()) {
    if (name == "planner") continue;
    ProblemConfig fc;
    fc.family = name;
    const auto spec = make_problem(fc);
    CHECK_MESSAGE(static_cast<bool>(spec.b), name);
    CHECK_MESSAGE(static_cast<bool>(spec.h0), name);
    const auto d = validate_spec(spec, make_probe(spec, spec.x0 - 1, spec.x0 + 1));
    CHECK_MESSAGE(d.all_finite, name);
  }
}

TEST_CASE("error kinds have names") {
  CHECK(std::string(to_string(ErrorKind::upper_triangle)).size() > 0);
  CHECK(std::string(to_string(CostClass::bolza_condexp)).size() > 0);
  Error e(ErrorKind::blow_up, "x", 0.25);
  CHECK(e.where() == 0.25);
}
