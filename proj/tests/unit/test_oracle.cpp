/// @file test_oracle.cpp
/// @brief Rate fitting and finite-difference oracles on closed-form functionals.

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kortlab/oracle.hpp"

using namespace kortlab;

TEST_CASE("fit_rate recovers exact power laws") {
  std::vector<double> xs{1, 2, 4, 8, 16};
  auto fit = fit_rate(xs, xs);
  CHECK(fit.slope == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-14));

  std::vector<double> inv;
  for (double x : xs) inv.push_back(3.0 / x);
  CHECK(fit_rate(xs, inv).slope == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(std::exp(fit_rate(xs, inv).intercept) == doctest::Approx(3.0));
}

TEST_CASE("fit_rate with 10 percent noise on an inverse law") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> noise(-0.1, 0.1);
  std::vector<double> alphas{25, 50, 100, 200, 400}, errs;
  for (double a : alphas) errs.push_back(2.0 / a * (1 + noise(rng)));
  auto fit = fit_rate(alphas, errs);
  CHECK(fit.slope >= -1.15);
  CHECK(fit.slope <= -0.85);
}

TEST_CASE("fit_rate input validation") {
  CHECK_THROWS_AS(fit_rate({1, 2}, {1, 2}), Error);
  CHECK_THROWS_AS(fit_rate({1, 2, 3}, {1, 0, 2}), Error);
  CHECK_THROWS_AS(fit_rate({1, -2, 3}, {1, 1, 2}), Error);
  CHECK_THROWS_AS(fit_rate({1, 3, 2}, {1, 1, 2}), Error);
  CHECK_THROWS_AS(fit_rate({1, 2, 3}, {1, 2}), Error);
  // decreasing sequences are monotone too
  CHECK(fit_rate({4, 2, 1}, {16, 4, 1}).slope == doctest::Approx(2.0));
}

TEST_CASE("gateaux oracle") {
  auto g = TorusGrid::create(1, 32, 2 * std::numbers::pi);
  auto rho = ScalarField::from_function(g, [](auto x) { return 1 + 0.3 * std::sin(x[0]); });
  auto psi = ScalarField::from_function(g, [](auto x) { return std::cos(2 * x[0]); });
  auto zero = ScalarField::constant(g, 0.0);

  Functional cubic = [](const ScalarField& f) {
    return integrate(f.map([](double v) { return v * v * v; }));
  };
  CHECK(gateaux_fd(cubic, rho, zero, 1e-3) == 0.0);

  Functional quadratic = [](const ScalarField& f) { return inner(f, f); };
  // exact: 2 <rho, psi>
  const double exact = 2 * inner(rho, psi);
  for (double tau : {1e-1, 1e-3, 1e-5})
    CHECK(std::abs(gateaux_fd(quadratic, rho, psi, tau) - exact) < 1e-10);

  // cubic: exact derivative 3 <rho^2, psi>, error tau^2 int psi^3
  auto shifted = psi + 0.5;
  const double d = 3 * inner(rho * rho, shifted);
  std::vector<double> taus{1e-1, 5e-2, 2.5e-2, 1.25e-2}, errs;
  for (double t : taus) errs.push_back(std::abs(gateaux_fd(cubic, rho, shifted, t) - d));
  CHECK(fit_rate(taus, errs).slope == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("second variation oracle") {
  auto g = TorusGrid::create(1, 32, 2 * std::numbers::pi);
  auto rho = ScalarField::from_function(g, [](auto x) { return 1 + 0.3 * std::sin(x[0]); });
  auto psi = ScalarField::from_function(g, [](auto x) { return std::cos(2 * x[0]); });
  auto phi = ScalarField::from_function(g, [](auto x) { return std::sin(3 * x[0] + 1); });
  auto zero = ScalarField::constant(g, 0.0);
  Functional quartic = [](const ScalarField& f) {
    return integrate(f.map([](double v) { return v * v * v * v; }));
  };
  CHECK(second_variation_fd(quartic, rho, psi, zero, 1e-3, 1e-3) == 0.0);
  const double exact = 12 * inner(rho * rho * psi, phi);
  const double a = second_variation_fd(quartic, rho, psi, phi, 1e-3, 1e-3);
  const double b = second_variation_fd(quartic, rho, phi, psi, 1e-3, 1e-3);
  CHECK(std::abs(a - exact) < 1e-5);
  CHECK(std::abs(a - b) < 1e-9);
}

TEST_CASE("remainder order of analytic functions") {
  auto quad = remainder_order([](double s) { return 3 * s * s; }, {1e-1, 5e-2, 2.5e-2});
  CHECK(quad.slope == doctest::Approx(2.0).epsilon(1e-12));
  // h(rho) = rho^3: remainder about 1 is 3 s^2 + s^3
  auto cubic = remainder_order(
      [](double s) {
        auto h = [](double r) { return r * r * r; };
        return h(1 + s) - h(1) - 3 * s;
      },
      {1e-1, 5e-2, 2.5e-2, 1.25e-2});
  CHECK(cubic.slope >= 1.9);
  CHECK(cubic.slope <= 2.1);
  CHECK_THROWS_AS(remainder_order([](double s) { return s; }, {1e-1, 1e-2}), Error);
}
