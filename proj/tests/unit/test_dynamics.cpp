/// @file test_dynamics.cpp
/// @brief Right-hand sides and time stepping against exact solutions and
///        conservation laws.

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kortlab/dynamics.hpp"
#include "kortlab/oracle.hpp"

using namespace kortlab;
using std::numbers::pi;

namespace {

SystemSpec make_spec(SystemKind sys, EnergyModel model) {
  return SystemSpec{.system = sys, .model = std::move(model)};
}

std::vector<SystemSpec> system_battery() {
  const auto h = LocalEnergy::gamma_law(1.0, 1.4);
  std::vector<SystemSpec> out;
  out.push_back(make_spec(SystemKind::EulerKorteweg,
                          EnergyModel(KortewegModel{h, Capillarity::constant(0.01)})));
  auto nsk = make_spec(SystemKind::NavierStokesKorteweg,
                       EnergyModel(KortewegModel{LocalEnergy::double_well(0.5, 1.5, 0.1),
                                                 Capillarity::constant(0.01)}));
  nsk.lambda = 0.05;
  nsk.mu = 0.02;
  out.push_back(nsk);
  out.push_back(make_spec(SystemKind::QuantumHydrodynamics, EnergyModel(QhdModel{h, 0.3})));
  out.push_back(make_spec(SystemKind::EulerPoisson, EnergyModel(EulerPoissonModel{h, 1.0})));
  auto lo = make_spec(SystemKind::LowerOrder, EnergyModel(LowerOrderModel{h, 0.01, 50.0}));
  lo.lambda = 0.05;
  lo.mu = 0.02;
  out.push_back(lo);
  return out;
}

State smooth_state(const GridPtr& g, double amp_rho = 0.2, double amp_u = 0.3) {
  auto rho = ScalarField::from_function(g, [&](auto x) {
    double v = 1 + amp_rho * std::cos(x[0]) + 0.05 * std::sin(2 * x[0] + 0.3);
    if (x.size() > 1) v += 0.05 * std::cos(x[1] - x[0]);
    return v;
  });
  VectorField m = VectorField::zeros(g);
  m[0] = rho * ScalarField::from_function(
                   g, [&](auto x) { return amp_u * std::sin(x[0]) + 0.1; });
  if (g->dim() > 1)
    m[1] = rho * ScalarField::from_function(g, [&](auto x) { return 0.1 * std::cos(x[1]); });
  return State{rho, m};
}

double max_vec(const VectorField& v) {
  double m = 0;
  for (int i = 0; i < v.dim(); ++i) m = std::max(m, linf_norm(v[i]));
  return m;
}

}  // namespace

TEST_CASE("spec validation") {
  const auto h = LocalEnergy::gamma_law(1.0, 1.4);
  auto ek = make_spec(SystemKind::EulerKorteweg,
                      EnergyModel(KortewegModel{h, Capillarity::constant(0.01)}));
  CHECK_NOTHROW(ek.validate(1));
  auto bad = ek;
  bad.system = SystemKind::EulerPoisson;
  CHECK_THROWS_AS(bad.validate(1), Error);
  bad = ek;
  bad.mu = 0.1;  // viscosity is for NSK and the lower-order system only
  CHECK_THROWS_AS(bad.validate(1), Error);
  bad = ek;
  bad.dt = 0;
  CHECK_THROWS_AS(bad.validate(1), Error);
  bad = ek;
  bad.zeta = -1;
  CHECK_THROWS_AS(bad.validate(1), Error);

  auto nsk = ek;
  nsk.system = SystemKind::NavierStokesKorteweg;
  nsk.mu = -0.1;
  CHECK_THROWS_AS(nsk.validate(1), Error);
  nsk.mu = 0.3;
  nsk.lambda = -0.3;  // lambda + 2 mu / d >= 0 holds in 2D only with equality
  CHECK_NOTHROW(nsk.validate(2));
  CHECK_THROWS_AS(nsk.validate(3), Error);
  try {
    bad.validate(1);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
  }
}

TEST_CASE("constant state is stationary for every system") {
  for (int dim : {1, 2}) {
    auto g = TorusGrid::create(dim, 32, 2 * pi);
    for (auto spec : system_battery()) {
      CAPTURE(std::string(to_string(spec.system)));
      spec.zeta = 0.5;
      State s{ScalarField::constant(g, 1.3), VectorField::zeros(g)};
      auto r = rhs(spec, s);
      CHECK(linf_norm(r.drho) == 0.0);
      CHECK(max_vec(r.dm) < 1e-13);
      CHECK(r.ddissipated == 0.0);
    }
  }
}

TEST_CASE("uniform friction decay at Runge-Kutta order") {
  auto g = TorusGrid::create(1, 16, 2 * pi);
  const double zeta = 2.0, u0 = 0.7, t_end = 1.0;
  auto spec = make_spec(SystemKind::EulerKorteweg,
                        EnergyModel(KortewegModel{LocalEnergy::gamma_law(1.0, 2.0),
                                                  Capillarity::constant(0.01)}));
  spec.zeta = zeta;
  spec.t_end = t_end;
  spec.c_cfl = 10.0;
  State s0{ScalarField::constant(g, 1.2), VectorField::zeros(g)};
  s0.m[0] = ScalarField::constant(g, 1.2 * u0);
  const double exact = 1.2 * u0 * std::exp(-zeta * t_end);

  for (auto [integ, lo, hi] : {std::tuple{Integrator::RK4, 3.7, 4.3},
                               std::tuple{Integrator::SSPRK3, 2.7, 3.3}}) {
    CAPTURE(std::string(to_string(integ)));
    spec.integrator = integ;
    std::vector<double> dts, errs, balance;
    for (int n : {10, 20, 40, 80}) {
      spec.dt = t_end / n;
      auto traj = integrate(spec, s0, {}, false);
      REQUIRE(traj.samples.size() == 2);
      const auto& last = traj.samples.back();
      CHECK(last.time == doctest::Approx(t_end).epsilon(1e-14));
      dts.push_back(traj.dt);
      errs.push_back(std::abs(last.m[0][3] - exact));
      // energy lost to friction equals the accumulated dissipation
      const double e0 = total_energy(spec, s0), e1 = total_energy(spec, last);
      balance.push_back(std::abs(e1 + last.dissipated - e0));
    }
    auto fit = fit_rate(dts, errs);
    CHECK(fit.slope >= lo);
    CHECK(fit.slope <= hi);
    auto bal = fit_rate(dts, balance);
    CHECK(bal.slope >= lo);
    CHECK(bal.slope <= hi);
  }
}

TEST_CASE("conservative and primitive force assembly agree") {
  for (int dim : {1, 2}) {
    auto g = TorusGrid::create(dim, dim == 1 ? 256 : 96, 2 * pi);
    auto s = smooth_state(g);
    for (auto spec : system_battery()) {
      CAPTURE(std::string(to_string(spec.system)));
      CAPTURE(dim);
      auto a = rhs(spec, s);
      spec.force_form = ForceForm::Primitive;
      auto b = rhs(spec, s);
      CHECK(linf_norm(a.drho - b.drho) == 0.0);
      CHECK(max_vec(a.dm - b.dm) <= 1e-8 * max_vec(a.dm));
    }
  }
}

TEST_CASE("viscous stress") {
  auto g = TorusGrid::create(1, 64, 2 * pi);
  VectorField rigid = VectorField::zeros(g);
  rigid[0] = ScalarField::constant(g, 0.4);
  CHECK(linf_norm(viscous_stress(rigid, 0.3, 0.2)(0, 0)) == 0.0);

  VectorField u = VectorField::zeros(g);
  u[0] = ScalarField::from_function(g, [](auto x) { return std::sin(x[0]); });
  for (auto [lam, mu] : {std::pair{0.3, 0.2}, std::pair{-0.1, 0.5}, std::pair{1.0, 0.0}})
    CHECK(integrate(viscous_dissipation(u, lam, mu)) ==
          doctest::Approx((lam + 2 * mu) * pi).epsilon(1e-12));

  // nonnegative dissipation density for admissible coefficients
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> c(-1, 1), pos(0, 1);
  for (int dim : {2, 3}) {
    auto gd = TorusGrid::create(dim, 8, 2 * pi);
    for (int trial = 0; trial < (dim == 2 ? 700 : 300); ++trial) {
      const double mu = pos(rng);
      const double lam = -2.0 / dim * mu + pos(rng) * 0.1 * (trial % 2);
      std::vector<double> a(dim * dim * 2);
      for (double& v : a) v = c(rng);
      VectorField w = VectorField::zeros(gd);
      for (int i = 0; i < dim; ++i)
        w[i] = ScalarField::from_function(gd, [&](auto x) {
          double s = 0;
          for (int j = 0; j < dim; ++j)
            s += a[(i * dim + j) * 2] * std::sin(x[j] + a[(i * dim + j) * 2 + 1]);
          return s;
        });
      CHECK(viscous_dissipation(w, lam, mu).min() >= -1e-12);
    }
  }
}

TEST_CASE("mass and momentum conservation") {
  auto g = TorusGrid::create(1, 64, 2 * pi);
  auto s0 = smooth_state(g);
  for (auto spec : system_battery()) {
    CAPTURE(std::string(to_string(spec.system)));
    spec.dt = 2e-4;
    spec.t_end = 1000 * spec.dt;
    spec.observe_every = 100;
    const double mass0 = integrate(s0.rho);
    const auto mom0 = integrate(s0.m);
    auto traj = integrate(spec, s0);
    CHECK(traj.steps == 1000);
    CHECK(traj.samples.size() == 11);
    for (const auto& s : traj.samples) {
      CHECK(std::abs(integrate(s.rho) - mass0) <= 1e-11 * mass0);
      CHECK(std::abs(integrate(s.m)[0] - mom0[0]) <= 1e-10 * std::abs(mom0[0]));
    }
  }
}

TEST_CASE("energy balance residual converges at integrator order") {
  auto g = TorusGrid::create(1, 64, 2 * pi, false);
  auto s0 = smooth_state(g, 0.3, 0.8);
  for (auto spec : system_battery()) {
    if (spec.system == SystemKind::QuantumHydrodynamics) continue;
    CAPTURE(std::string(to_string(spec.system)));
    spec.zeta = 0.5;
    spec.t_end = 0.5;
    const double e0 = total_energy(spec, s0);
    std::vector<double> dts, drift;
    for (double dt : {4e-3, 2e-3, 1e-3}) {
      spec.dt = dt;
      double worst = 0;
      Observer watch = [&](const State& s, std::size_t) {
        worst = std::max(worst, std::abs(total_energy(spec, s) + s.dissipated - e0));
      };
      auto traj = integrate(spec, s0, {watch}, false);
      dts.push_back(traj.dt);
      drift.push_back(worst);
    }
    CAPTURE(drift[0]);
    CAPTURE(drift[2]);
    for (int i = 0; i < 2; ++i) {
      CHECK(drift[i] / drift[i + 1] >= 8);
      CHECK(drift[i] / drift[i + 1] <= 32);
    }
  }
}

TEST_CASE("stable_dt scales with the stiffest term") {
  const auto h = LocalEnergy::gamma_law(1.0, 2.0);
  auto spec = make_spec(SystemKind::EulerKorteweg,
                        EnergyModel(KortewegModel{h, Capillarity::constant(1.0)}));
  auto g64 = TorusGrid::create(1, 64, 2 * pi);
  auto g128 = TorusGrid::create(1, 128, 2 * pi);
  State a{ScalarField::constant(g64, 1.0), VectorField::zeros(g64)};
  State b{ScalarField::constant(g128, 1.0), VectorField::zeros(g128)};
  // capillary bound dx^2 / sqrt(C rho_max) dominates
  CHECK(stable_dt(spec, a) / stable_dt(spec, b) == doctest::Approx(4.0));
}

TEST_CASE("vacuum and non-finite states abort with the failing time") {
  auto g = TorusGrid::create(1, 32, 2 * pi);
  auto spec = system_battery()[0];
  State s{ScalarField::from_function(g, [](auto x) { return 1 + std::sin(x[0]); }),
          VectorField::zeros(g)};
  try {
    rhs(spec, s);
    FAIL("expected vacuum error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Vacuum);
  }

  // strong compression drives the density out of the band during the run
  auto spec2 = spec;
  spec2.model = EnergyModel(KortewegModel{LocalEnergy::gamma_law(1e-3, 1.4),
                                          Capillarity::constant(1e-4)},
                            DensityBand{0.2, 10});
  spec2.dt = 1e-3;
  spec2.t_end = 3.0;
  spec2.c_cfl = 100;
  State s2{ScalarField::constant(g, 1.0), VectorField::zeros(g)};
  s2.m[0] = ScalarField::from_function(g, [](auto x) { return -std::sin(x[0]); });
  try {
    integrate(spec2, s2, {}, false);
    FAIL("expected vacuum error");
  } catch (const Error& e) {
    CHECK((e.code() == ErrorCode::Vacuum || e.code() == ErrorCode::Domain ||
           e.code() == ErrorCode::NonFinite));
    CHECK(std::string(e.what()).find("t = ") != std::string::npos);
  }
}

TEST_CASE("runs are bitwise deterministic") {
  auto g = TorusGrid::create(1, 64, 2 * pi);
  auto spec = system_battery()[1];
  spec.dt = 1e-3;
  spec.t_end = 0.05;
  auto s0 = smooth_state(g);
  auto a = integrate(spec, s0, {}, false).samples.back();
  auto b = integrate(spec, s0, {}, false).samples.back();
  for (std::size_t i = 0; i < a.rho.size(); ++i) {
    CHECK(a.rho[i] == b.rho[i]);
    CHECK(a.m[0][i] == b.m[0][i]);
  }
}
