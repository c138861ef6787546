/// @file test_energy_models.cpp
/// @brief Energies, variational derivatives, stresses, Taylor remainders and
///        convexity checks, each against an independent oracle or closed form.

#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "kortlab/energy_models.hpp"
#include "kortlab/oracle.hpp"

using namespace kortlab;
using std::numbers::pi;

namespace {

ScalarField smooth_density(const GridPtr& g, std::mt19937_64& rng, double amp = 0.3) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::array<double, 4> a{}, ph{};
  double sum = 0;
  for (int i = 0; i < 4; ++i) {
    a[i] = u(rng);
    ph[i] = 2 * pi * u(rng);
    sum += a[i];
  }
  for (double& v : a) v *= amp / sum;
  std::array<double, 4> ky{};
  for (int i = 0; i < 4; ++i) ky[i] = double(rng() % 3);
  return ScalarField::from_function(g, [&](std::span<const double> x) {
    double s = 1.0;
    for (int i = 0; i < 4; ++i) {
      double phase = (i + 1) * x[0] + ph[i];
      if (x.size() > 1) phase += ky[i] * x[1];
      s += a[i] * std::cos(phase);
    }
    return s;
  });
}

ScalarField smooth_direction(const GridPtr& g, std::mt19937_64& rng) {
  return smooth_density(g, rng, 1.0) - 1.0;
}

std::vector<EnergyModel> model_battery() {
  const auto h14 = LocalEnergy::gamma_law(1.0, 1.4);
  const auto h3 = LocalEnergy::gamma_law(0.5, 3.0);
  return {
      EnergyModel(KortewegModel{h14, Capillarity::constant(0.05)}),
      EnergyModel(KortewegModel{h3, Capillarity::quadratic(1.0, 1.0)}),
      EnergyModel(KortewegModel{h14, Capillarity::rational(0.02, 0.03)}),
      EnergyModel(KortewegModel{LocalEnergy::double_well(0.5, 1.5, 0.1),
                                Capillarity::constant(0.01)}),
      EnergyModel(QhdModel{h14, 0.5}),
      EnergyModel(EulerPoissonModel{h3, 0.0}),
      EnergyModel(EulerPoissonModel{h14, 1.0}),
      EnergyModel(LowerOrderModel{h14, 0.01, 50.0}),
  };
}

double max_abs(const ScalarField& f) { return linf_norm(f); }

double max_tensor_diff(const TensorField& a, const TensorField& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.components.size(); ++i)
    m = std::max(m, linf_norm(a.components[i] - b.components[i]));
  return m;
}

double max_tensor(const TensorField& a) {
  double m = 0;
  for (const auto& c : a.components) m = std::max(m, linf_norm(c));
  return m;
}

}  // namespace

TEST_CASE("pressure from the Gibbs-Duhem relation") {
  auto h2 = LocalEnergy::gamma_law(1.0, 2.0);
  CHECK(pressure(h2, 2.0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(h2.h(3.0) == doctest::Approx(9.0));
  auto h14 = LocalEnergy::gamma_law(2.0, 1.4);
  CHECK(h14.h(1.7) == doctest::Approx(2.0 * std::pow(1.7, 1.4) / 0.4));

  auto linear = LocalEnergy::custom({"linear", [](double r) { return 3 * r; },
                                     [](double) { return 3.0; },
                                     [](double) { return 0.0; },
                                     [](double) { return 0.0; }});
  for (double r : {0.1, 1.0, 7.0}) CHECK(pressure(linear, r) == 0.0);

  auto dw = LocalEnergy::double_well(0.5, 1.5, 0.2);
  for (double r : {0.3, 0.9, 1.1, 2.0}) {
    const double t = 1e-5;
    const double fd = (pressure(dw, r + t) - pressure(dw, r - t)) / (2 * t);
    CHECK(std::abs(fd - dw.dp(r)) <= 1e-6 * std::max(1.0, std::abs(dw.dp(r))));
    CHECK(dw.dp(r) == doctest::Approx(r * dw.d2h(r)));
    const double fd2 = (dw.dh(r + t) - dw.dh(r - t)) / (2 * t);
    CHECK(fd2 == doctest::Approx(dw.d2h(r)).epsilon(1e-8));
    const double fd3 = (dw.d2h(r + t) - dw.d2h(r - t)) / (2 * t);
    CHECK(fd3 == doctest::Approx(dw.d3h(r)).epsilon(1e-8));
  }
  CHECK_THROWS_AS(pressure(h2, 0.0), Error);
  CHECK_THROWS_AS(pressure(h2, -1.0), Error);
}

TEST_CASE("capillarity derivatives against finite differences") {
  for (const auto& cap : {Capillarity::constant(0.3), Capillarity::qhd(0.5),
                          Capillarity::quadratic(1, 1), Capillarity::rational(0.2, 0.7)}) {
    for (double r : {0.4, 1.0, 2.5}) {
      const double t = 1e-5;
      CHECK((cap.k(r + t) - cap.k(r - t)) / (2 * t) ==
            doctest::Approx(cap.dk(r)).epsilon(1e-8));
      CHECK((cap.dk(r + t) - cap.dk(r - t)) / (2 * t) ==
            doctest::Approx(cap.d2k(r)).epsilon(1e-8));
    }
  }
  CHECK_THROWS_AS(Capillarity::constant(0.0), Error);
  CHECK_THROWS_AS(Capillarity::qhd(-1.0), Error);
}

TEST_CASE("model parameter validation") {
  auto h = LocalEnergy::gamma_law(1, 2);
  CHECK_THROWS_AS(EnergyModel(QhdModel{h, 0.0}), Error);
  CHECK_THROWS_AS(EnergyModel(EulerPoissonModel{h, -1.0}), Error);
  CHECK_THROWS_AS(EnergyModel(LowerOrderModel{h, 0.01, 0.0}), Error);
  CHECK_THROWS_AS(EnergyModel(LowerOrderModel{h, -0.01, 10.0}), Error);
  CHECK_THROWS_AS(LocalEnergy::gamma_law(1.0, 1.0), Error);
  CHECK_THROWS_AS(LocalEnergy::double_well(1.5, 0.5, 0.0), Error);
}

TEST_CASE("energy of constant states") {
  auto g = TorusGrid::create(1, 32, 2 * pi);
  auto rho = ScalarField::constant(g, 1.3);
  auto h = LocalEnergy::gamma_law(1.0, 1.4);
  EnergyModel k(KortewegModel{h, Capillarity::constant(0.2)});
  EnergyModel ep(EulerPoissonModel{h, 0.0});
  EnergyModel lo(LowerOrderModel{h, 0.1, 20.0});
  CHECK(energy_total(k, rho) == doctest::Approx(2 * pi * h.h(1.3)));
  CHECK(energy_total(ep, rho) == doctest::Approx(2 * pi * h.h(1.3)));
  CHECK(energy_total(lo, rho) == doctest::Approx(2 * pi * h.h(1.3)));
  CHECK(max_abs(variational_derivative(k, rho) - h.dh(1.3)) < 1e-13);
  auto s = stress_tensor(k, rho);
  CHECK(max_abs(s(0, 0) + pressure(h, 1.3)) < 1e-13);
}

TEST_CASE("vacuum is rejected") {
  auto g = TorusGrid::create(1, 16, 2 * pi);
  auto rho = ScalarField::from_function(g, [](auto x) { return 0.5 + std::sin(x[0]); });
  EnergyModel m(KortewegModel{LocalEnergy::gamma_law(1, 2), Capillarity::constant(1)},
                DensityBand{0.01, 10});
  CHECK_THROWS_AS(energy_total(m, rho), Error);
  try {
    variational_derivative(m, rho);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Vacuum);
  }
}

TEST_CASE("lower-order energy forms agree") {
  auto g = TorusGrid::create(1, 256, 2 * pi);
  std::mt19937_64 rng(17);
  for (double alpha : {10.0, 100.0, 1000.0}) {
    LowerOrderModel lo{LocalEnergy::double_well(0.5, 1.5, 0.1), 0.01, alpha};
    auto rho = smooth_density(g, rng);
    const double e1 = lower_order_energy(lo, rho, 1);
    const double e2 = lower_order_energy(lo, rho, 2);
    const double e3 = lower_order_energy(lo, rho, 3);
    CHECK(std::abs(e1 - e2) <= 1e-10 * std::abs(e1));
    CHECK(std::abs(e1 - e3) <= 1e-10 * std::abs(e1));
    CHECK(energy_total(EnergyModel(lo), rho) == doctest::Approx(e1).epsilon(1e-12));
  }
}

TEST_CASE("variational derivative matches the Gateaux oracle") {
  auto g = TorusGrid::create(1, 128, 2 * pi);
  std::mt19937_64 rng(23);
  for (const auto& model : model_battery()) {
    CAPTURE(model.kind());
    Functional e = [&](const ScalarField& r) { return energy_total(model, r); };
    for (int trial = 0; trial < 3; ++trial) {
      auto rho = smooth_density(g, rng);
      auto psi = smooth_direction(g, rng);
      const double analytic = inner(variational_derivative(model, rho), psi);
      const double fd = gateaux_fd(e, rho, psi, 1e-4);
      CHECK(std::abs(analytic - fd) <= 1e-6 * std::max(1.0, std::abs(analytic)));
    }
  }
}

TEST_CASE("gateaux agreement is second order in the step") {
  auto g = TorusGrid::create(1, 128, 2 * pi);
  std::mt19937_64 rng(29);
  for (const auto& model : model_battery()) {
    CAPTURE(model.kind());
    Functional e = [&](const ScalarField& r) { return energy_total(model, r); };
    auto rho = smooth_density(g, rng);
    auto psi = smooth_direction(g, rng);
    const double analytic = inner(variational_derivative(model, rho), psi);
    std::vector<double> taus{1e-2, 5e-3, 2.5e-3, 1.25e-3}, errs;
    for (double t : taus) errs.push_back(std::abs(gateaux_fd(e, rho, psi, t) - analytic));
    CHECK(fit_rate(taus, errs).slope >= 1.9);
  }
}

TEST_CASE("second variation: oracle, symmetry and positivity") {
  auto g = TorusGrid::create(1, 64, 2 * pi);
  std::mt19937_64 rng(31);
  for (const auto& model : model_battery()) {
    CAPTURE(model.kind());
    Functional e = [&](const ScalarField& r) { return energy_total(model, r); };
    auto rho = smooth_density(g, rng);
    auto psi = smooth_direction(g, rng), phi = smooth_direction(g, rng);
    const double quad = second_variation(model, rho, psi, phi);
    CHECK(second_variation(model, rho, phi, psi) == doctest::Approx(quad).epsilon(1e-10));
    const double fd = second_variation_fd(e, rho, psi, phi, 1e-3, 1e-3);
    const double sw = second_variation_fd(e, rho, phi, psi, 1e-3, 1e-3);
    CHECK(std::abs(fd - sw) <= 1e-6 * std::max(1.0, std::abs(fd)));
    CHECK(std::abs(fd - quad) <= 1e-4 * std::max(1.0, std::abs(quad)));
  }
  // convex Korteweg energy: positive on random directions
  EnergyModel convex(KortewegModel{LocalEnergy::gamma_law(1, 2), Capillarity::constant(0.1)});
  for (int i = 0; i < 10; ++i) {
    auto rho = smooth_density(g, rng);
    auto psi = smooth_direction(g, rng);
    CHECK(second_variation(convex, rho, psi, psi) > 0);
  }
}

TEST_CASE("QHD: general capillarity path equals the Bohm path") {
  auto g = TorusGrid::create(1, 256, 2 * pi);
  auto rho = ScalarField::from_function(g, [](auto x) { return 1 + 0.1 * std::sin(x[0]); });
  auto h = LocalEnergy::gamma_law(1.0, 2.0);
  const double eps = 0.5;
  EnergyModel bohm(QhdModel{h, eps});
  EnergyModel general(KortewegModel{h, Capillarity::qhd(eps)});
  CHECK(max_abs(variational_derivative(bohm, rho) - variational_derivative(general, rho)) <
        1e-10);
  CHECK(max_tensor_diff(stress_tensor(bohm, rho), stress_tensor(general, rho)) < 1e-10);
  CHECK(energy_total(bohm, rho) == doctest::Approx(energy_total(general, rho)).epsilon(1e-13));
}

TEST_CASE("Noether identity for every model") {
  std::mt19937_64 rng(37);
  for (int dim : {1, 2}) {
    auto g = TorusGrid::create(dim, dim == 1 ? 256 : 128, 2 * pi);
    for (const auto& model : model_battery()) {
      CAPTURE(model.kind());
      CAPTURE(dim);
      auto rho = smooth_density(g, rng);
      CHECK(noether_residual(model, rho) <= 1e-8);
      auto s = stress_tensor(model, rho);
      CHECK(s.symmetric);
      if (dim == 2) CHECK(max_abs(s(0, 1) - s(1, 0)) < 1e-14);
    }
  }
}

TEST_CASE("stress variation is the derivative of the stress") {
  auto g = TorusGrid::create(1, 128, 2 * pi);
  std::mt19937_64 rng(41);
  for (const auto& model : model_battery()) {
    CAPTURE(model.kind());
    auto rho = smooth_density(g, rng);
    auto psi = smooth_direction(g, rng);
    const double t = 1e-4;
    auto fd = (1.0 / (2 * t)) * (stress_tensor(model, rho + t * psi) -
                                 stress_tensor(model, rho - t * psi));
    auto an = stress_variation(model, rho, psi);
    CHECK(max_tensor_diff(fd, an) <= 1e-6 * std::max(1.0, max_tensor(an)));
  }
}

TEST_CASE("relative functions: base point, gamma = 2 and quadratic smallness") {
  KortewegModel m{LocalEnergy::gamma_law(1.0, 2.0), Capillarity::quadratic(1.0, 1.0)};
  std::array<double, 2> q{0.3, -0.2}, qb{0.1, 0.4};
  for (auto c : {Constituent::H, Constituent::P, Constituent::S, Constituent::Kappa,
                 Constituent::A, Constituent::B})
    CHECK(relative_scalar(c, m, 1.2, q, 1.2, q) == 0.0);
  CHECK(relative_density(m, 1.2, q, 1.2, q) == 0.0);

  for (double r : {0.2, 0.9, 1.7, 4.0})
    for (double rb : {0.5, 1.0, 3.0})
      CHECK(relative_scalar(Constituent::H, m, r, q, rb, qb) ==
            doctest::Approx((r - rb) * (r - rb)).epsilon(1e-12));

  KortewegModel v{LocalEnergy::gamma_law(1.0, 3.0), Capillarity::quadratic(1.0, 1.0)};
  const double rb = 1.1;
  for (auto c : {Constituent::H, Constituent::P, Constituent::S, Constituent::Kappa,
                 Constituent::A, Constituent::B}) {
    CAPTURE(int(c));
    auto at = [&](double s) {
      std::array<double, 2> qs{qb[0] + s * 0.7, qb[1] - s * 0.4};
      return relative_scalar(c, v, rb + s * 0.5, qs, rb, qb);
    };
    const double r1 = at(1e-2), r2 = at(5e-3);
    CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.1));
    auto fit = remainder_order(at, {4e-2, 2e-2, 1e-2, 5e-3});
    CHECK(fit.slope >= 1.9);
    CHECK(fit.slope <= 2.1);
  }
  auto hcomp = [&](double s) {
    std::array<double, 2> qs{qb[0] + s * 0.7, qb[1] - s * 0.4};
    return relative_h_tensor(v, rb + s * 0.5, qs, rb, qb)[1];
  };
  auto fit = remainder_order(hcomp, {4e-2, 2e-2, 1e-2, 5e-3});
  CHECK(fit.slope >= 1.9);
  CHECK(fit.slope <= 2.1);
}

TEST_CASE("relative s, r, H against the expanded closed forms") {
  KortewegModel m{LocalEnergy::gamma_law(1.0, 1.4), Capillarity::rational(0.3, 0.5)};
  const auto& cap = m.cap;
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 50; ++i) {
    const double r = 1 + 0.5 * u(rng), rb = 1 + 0.5 * u(rng);
    std::array<double, 2> q{u(rng), u(rng)}, qb{u(rng), u(rng)};
    std::array<double, 2> dq{q[0] - qb[0], q[1] - qb[1]};
    const double qb2 = qb[0] * qb[0] + qb[1] * qb[1];
    const double dq2 = dq[0] * dq[0] + dq[1] * dq[1];
    const double qbdq = qb[0] * dq[0] + qb[1] * dq[1];
    auto rel = [](auto f, auto df, double x, double xb) {
      return f(x) - f(xb) - df(xb) * (x - xb);
    };
    const double p_rel = rel([&](double x) { return m.local.p(x); },
                             [&](double x) { return m.local.dp(x); }, r, rb);
    const double a_rel = rel([&](double x) { return cap.a(x); },
                             [&](double x) { return cap.da(x); }, r, rb);
    const double k_rel = rel([&](double x) { return cap.k(x); },
                             [&](double x) { return cap.dk(x); }, r, rb);
    const double b_rel = rel([&](double x) { return cap.b(x); },
                             [&](double x) { return cap.db(x); }, r, rb);
    const double s_closed =
        p_rel + a_rel * qb2 + cap.a(r) * dq2 + (cap.a(r) - cap.a(rb)) * 2 * qbdq;
    CHECK(relative_scalar(Constituent::S, m, r, q, rb, qb) ==
          doctest::Approx(s_closed).epsilon(1e-12));
    auto h = relative_h_tensor(m, r, q, rb, qb);
    auto rv = relative_r(m, r, q, rb, qb);
    for (int a = 0; a < 2; ++a) {
      CHECK(rv[a] == doctest::Approx(b_rel * qb[a] + (cap.b(r) - cap.b(rb)) * dq[a])
                         .epsilon(1e-12));
      for (int b = 0; b < 2; ++b) {
        const double closed = cap.k(r) * dq[a] * dq[b] + k_rel * qb[a] * qb[b] +
                              (cap.k(r) - cap.k(rb)) * (qb[a] * dq[b] + dq[a] * qb[b]);
        CHECK(h[a * 2 + b] == doctest::Approx(closed).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("relative stress") {
  auto g = TorusGrid::create(1, 128, 2 * pi);
  std::mt19937_64 rng(47);
  auto rho = smooth_density(g, rng), rho_bar = smooth_density(g, rng);
  for (const auto& model : model_battery()) {
    CAPTURE(model.kind());
    CHECK(max_tensor(relative_stress(model, rho, rho)) < 1e-12);
    auto abstract = relative_stress(model, rho, rho_bar);
    auto special = relative_stress_specialized(model, rho, rho_bar);
    CHECK(max_tensor_diff(abstract, special) <= 1e-9 * std::max(1.0, max_tensor(abstract)));
    // second-order smallness along rho_bar + s (rho - rho_bar)
    auto size = [&](double s) {
      return max_tensor(relative_stress(model, rho_bar + s * (rho - rho_bar), rho_bar));
    };
    auto fit = remainder_order(size, {0.2, 0.1, 0.05, 0.025});
    CHECK(fit.slope >= 1.9);
    CHECK(fit.slope <= 2.1);
  }

  // constant capillarity: H(|) = C (grad rho - grad rho_bar)^2
  const double c = 0.07;
  KortewegModel km{LocalEnergy::gamma_law(1, 2), Capillarity::constant(c)};
  auto hf = relative_h_field(km, rho, rho_bar);
  auto d = gradient(rho - rho_bar)[0];
  CHECK(max_abs(hf(0, 0) - c * d * d) < 1e-12);
}

TEST_CASE("convexity checks") {
  DensityBand band{0.2, 5.0};
  auto h = LocalEnergy::gamma_law(1, 2);
  auto constant = check_convexity(Capillarity::constant(0.1), h, band);
  CHECK(constant.local_convex);
  CHECK(constant.h4c);
  CHECK(constant.hessian_positive);
  CHECK(constant.decomposition_residual < 1e-12);

  auto qhd = check_convexity(Capillarity::qhd(0.5), h, band);
  CHECK(std::abs(qhd.min_h4c) < 1e-12);
  for (double r : {0.2, 0.7, 1.0, 3.3}) {
    auto cap = Capillarity::qhd(0.5);
    CHECK(std::abs(cap.k(r) * cap.d2k(r) - 2 * cap.dk(r) * cap.dk(r)) < 1e-12);
  }
  auto rational = check_convexity(Capillarity::rational(0.02, 0.03), h, band);
  CHECK(rational.h4uc);
  CHECK(rational.min_h4uc == doctest::Approx(0.02).epsilon(1e-9));
  CHECK(rational.decomposition_residual < 1e-10);

  auto dw = check_convexity(Capillarity::constant(0.01),
                            LocalEnergy::double_well(0.5, 1.5, 0.0), band);
  CHECK_FALSE(dw.local_convex);
  CHECK(dw.min_h2 < 0);
  CHECK_FALSE(dw.hessian_positive);
}

TEST_CASE("kinetic energy Hessian") {
  std::array<double, 3> m0{0, 0, 0};
  auto e = kinetic_hessian_eigenvalues(1.0, m0);
  REQUIRE(e.size() == 4);
  CHECK(std::abs(e[0]) < 1e-12);
  for (int i = 1; i < 4; ++i) CHECK(std::abs(e[i] - 1.0) < 1e-12);

  std::array<double, 1> m1{2.0};
  auto e1 = kinetic_hessian_eigenvalues(2.0, m1);  // 1/2 + 4/8
  CHECK(std::abs(e1[0]) < 1e-12);
  CHECK(std::abs(e1[1] - 1.0) < 1e-12);

  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(-2, 2), pos(0.1, 3);
  for (int i = 0; i < 10000; ++i) {
    const double rho = pos(rng);
    std::array<double, 2> m{u(rng), u(rng)}, b{u(rng), u(rng)};
    auto [matrix, closed] = kinetic_quadratic_form(rho, m, u(rng), b);
    CHECK(closed >= 0);
    CHECK(std::abs(matrix - closed) <= 1e-10 * std::max(1.0, closed));
  }
  for (int i = 0; i < 100; ++i) {
    const double rho = pos(rng);
    std::array<double, 2> m{u(rng), u(rng)};
    auto ev = kinetic_hessian_eigenvalues(rho, m);
    const double m2 = m[0] * m[0] + m[1] * m[1];
    CHECK(std::abs(ev[0]) < 1e-12 * (1 + m2 / (rho * rho * rho)));
    CHECK(std::abs(ev[1] - 1 / rho) < 1e-12 * (1 + m2 / (rho * rho * rho)));
    CHECK(std::abs(ev[2] - (1 / rho + m2 / (rho * rho * rho))) <
          1e-12 * (1 + m2 / (rho * rho * rho)));
  }
}

TEST_CASE("relative pressure bounded by relative internal energy") {
  for (double gamma : {1.4, 2.0, 3.0}) {
    auto h = LocalEnergy::gamma_law(1.0, gamma);
    // A = sup |p''| rho / p'
    double a = 0;
    for (int i = 0; i <= 400; ++i) {
      const double r = 0.05 * std::pow(1.02, i);
      a = std::max(a, std::abs(h.d2p(r)) * r / h.dp(r));
    }
    CHECK(a == doctest::Approx(std::abs(gamma - 1)).epsilon(1e-9));
    KortewegModel m{h, Capillarity::constant(1)};
    std::array<double, 1> q{0};
    for (int i = 0; i <= 60; ++i)
      for (int j = 0; j <= 60; ++j) {
        const double r = 0.05 * std::pow(1.1, i), rb = 0.05 * std::pow(1.1, j);
        const double pr = relative_scalar(Constituent::P, m, r, q, rb, q);
        const double hr = relative_scalar(Constituent::H, m, r, q, rb, q);
        CHECK(std::abs(pr) <= a * hr * (1 + 1e-9) + 1e-14);
      }
  }
}

TEST_CASE("relative internal energy: quadratic near, gamma-power far") {
  for (double gamma : {1.4, 2.0, 3.0}) {
    CAPTURE(gamma);
    KortewegModel m{LocalEnergy::gamma_law(1.0, gamma), Capillarity::constant(1)};
    std::array<double, 1> q{0};
    const double r0 = 4.0;  // reference densities in K = [0.5, 2]
    double c1 = 1e300, c2 = 1e300;
    for (int j = 0; j <= 20; ++j) {
      const double rb = 0.5 + 1.5 * j / 20;
      for (int i = 1; i <= 400; ++i) {
        const double r = 0.025 * i;
        if (std::abs(r - rb) < 1e-6) continue;
        const double hr = relative_scalar(Constituent::H, m, r, q, rb, q);
        if (r <= r0)
          c1 = std::min(c1, hr / ((r - rb) * (r - rb)));
        else
          c2 = std::min(c2, hr / std::pow(std::abs(r - rb), gamma));
      }
      for (int i = 0; i <= 100; ++i) {
        const double r = r0 * std::pow(1.1, i);
        const double hr = relative_scalar(Constituent::H, m, r, q, rb, q);
        c2 = std::min(c2, hr / std::pow(std::abs(r - rb), gamma));
      }
    }
    CHECK(c1 > 0);
    CHECK(c2 > 0);
  }
}
