#include "kortlab/energy_models.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace kortlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void positive(double v, const char* what) {
  require(std::isfinite(v) && v > 0, ErrorCode::InvalidArgument,
          std::string(what) + " must be positive");
}

double norm2(std::span<const double> q) {
  double s = 0;
  for (double v : q) s += v * v;
  return s;
}

double dotp(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// g(x) - g(xb) - g'(xb)(x - xb)
template <class G, class DG>
double remainder1(G g, DG dg, double x, double xb) {
  return g(x) - g(xb) - dg(xb) * (x - xb);
}

}  // namespace

// ---------------------------------------------------------------------------

void DensityBand::check(double rho) const {
  if (!(rho >= min)) {
    std::ostringstream os;
    os << "density " << rho << " below admissible minimum " << min;
    fail(ErrorCode::Vacuum, os.str());
  }
  if (!(rho <= max)) {
    std::ostringstream os;
    os << "density " << rho << " above admissible maximum " << max;
    fail(ErrorCode::Domain, os.str());
  }
}

void DensityBand::check(const ScalarField& rho) const {
  check(rho.min());
  check(rho.max());
}

LocalEnergy LocalEnergy::gamma_law(double k, double gamma) {
  positive(k, "gamma-law coefficient k");
  require(std::isfinite(gamma) && gamma > 1, ErrorCode::InvalidArgument,
          "gamma-law exponent must exceed 1");
  return LocalEnergy(GammaLaw{k, gamma});
}

LocalEnergy LocalEnergy::double_well(double a, double b, double c0) {
  require(std::isfinite(a) && std::isfinite(b) && a < b, ErrorCode::InvalidArgument,
          "double-well needs a < b");
  require(std::isfinite(c0) && c0 >= 0, ErrorCode::InvalidArgument,
          "double-well linear coefficient must be nonnegative");
  return LocalEnergy(DoubleWell{a, b, c0});
}

LocalEnergy LocalEnergy::custom(Custom c) {
  require(c.h && c.dh && c.d2h && c.d3h, ErrorCode::InvalidArgument,
          "custom local energy needs h and three derivatives");
  return LocalEnergy(std::move(c));
}

double LocalEnergy::h(double r) const {
  return std::visit(
      overloaded{
          [r](const GammaLaw& g) { return g.k * std::pow(r, g.gamma) / (g.gamma - 1); },
          [r](const DoubleWell& w) {
            const double u = r - w.a, v = r - w.b;
            return u * u * v * v + w.c0 * r;
          },
          [r](const Custom& c) { return c.h(r); }},
      form_);
}

double LocalEnergy::dh(double r) const {
  return std::visit(
      overloaded{[r](const GammaLaw& g) {
                   return g.k * g.gamma * std::pow(r, g.gamma - 1) / (g.gamma - 1);
                 },
                 [r](const DoubleWell& w) {
                   const double u = r - w.a, v = r - w.b;
                   return 2 * u * v * (u + v) + w.c0;
                 },
                 [r](const Custom& c) { return c.dh(r); }},
      form_);
}

double LocalEnergy::d2h(double r) const {
  return std::visit(
      overloaded{[r](const GammaLaw& g) { return g.k * g.gamma * std::pow(r, g.gamma - 2); },
                 [r](const DoubleWell& w) {
                   const double u = r - w.a, v = r - w.b;
                   return 2 * (u * u + 4 * u * v + v * v);
                 },
                 [r](const Custom& c) { return c.d2h(r); }},
      form_);
}

double LocalEnergy::d3h(double r) const {
  return std::visit(
      overloaded{[r](const GammaLaw& g) {
                   return g.k * g.gamma * (g.gamma - 2) * std::pow(r, g.gamma - 3);
                 },
                 [r](const DoubleWell& w) { return 12 * ((r - w.a) + (r - w.b)); },
                 [r](const Custom& c) { return c.d3h(r); }},
      form_);
}

double LocalEnergy::p(double r) const { return r * dh(r) - h(r); }
double LocalEnergy::dp(double r) const { return r * d2h(r); }
double LocalEnergy::d2p(double r) const { return d2h(r) + r * d3h(r); }

std::string LocalEnergy::label() const {
  return std::visit(overloaded{[](const GammaLaw&) { return std::string("gamma_law"); },
                               [](const DoubleWell&) { return std::string("double_well"); },
                               [](const Custom& c) { return "custom:" + c.name; }},
                    form_);
}

Capillarity Capillarity::constant(double c) {
  positive(c, "capillarity constant");
  return Capillarity(Constant{c});
}
Capillarity Capillarity::qhd(double epsilon) {
  positive(epsilon, "QHD epsilon");
  return Capillarity(Qhd{epsilon});
}
Capillarity Capillarity::quadratic(double c0, double c2) {
  positive(c0, "quadratic capillarity c0");
  require(std::isfinite(c2) && c2 >= 0, ErrorCode::InvalidArgument,
          "quadratic capillarity c2 must be nonnegative");
  return Capillarity(Quadratic{c0, c2});
}
Capillarity Capillarity::rational(double a, double b) {
  positive(a, "rational capillarity a");
  require(std::isfinite(b) && b >= 0, ErrorCode::InvalidArgument,
          "rational capillarity b must be nonnegative");
  return Capillarity(Rational{a, b});
}
Capillarity Capillarity::custom(Custom c) {
  require(c.k && c.dk && c.d2k, ErrorCode::InvalidArgument,
          "custom capillarity needs kappa and two derivatives");
  return Capillarity(std::move(c));
}

double Capillarity::k(double r) const {
  return std::visit(
      overloaded{[](const Constant& c) { return c.c; },
                 [r](const Qhd& q) { return q.epsilon * q.epsilon / (4 * r); },
                 [r](const Quadratic& q) { return q.c0 + q.c2 * r * r; },
                 [r](const Rational& q) { return q.a + q.b / r; },
                 [r](const Custom& c) { return c.k(r); }},
      form_);
}

double Capillarity::dk(double r) const {
  return std::visit(
      overloaded{[](const Constant&) { return 0.0; },
                 [r](const Qhd& q) { return -q.epsilon * q.epsilon / (4 * r * r); },
                 [r](const Quadratic& q) { return 2 * q.c2 * r; },
                 [r](const Rational& q) { return -q.b / (r * r); },
                 [r](const Custom& c) { return c.dk(r); }},
      form_);
}

double Capillarity::d2k(double r) const {
  return std::visit(
      overloaded{[](const Constant&) { return 0.0; },
                 [r](const Qhd& q) { return q.epsilon * q.epsilon / (2 * r * r * r); },
                 [](const Quadratic& q) { return 2 * q.c2; },
                 [r](const Rational& q) { return 2 * q.b / (r * r * r); },
                 [r](const Custom& c) { return c.d2k(r); }},
      form_);
}

std::string Capillarity::label() const {
  return std::visit(overloaded{[](const Constant&) { return std::string("constant"); },
                               [](const Qhd&) { return std::string("qhd"); },
                               [](const Quadratic&) { return std::string("quadratic"); },
                               [](const Rational&) { return std::string("rational"); },
                               [](const Custom& c) { return "custom:" + c.name; }},
                    form_);
}

EnergyModel::EnergyModel(Variant v, DensityBand band) : v_(std::move(v)), band_(band) {
  require(band_.min > 0 && band_.max > band_.min && std::isfinite(band_.max),
          ErrorCode::InvalidArgument, "admissible band must satisfy 0 < min < max");
  std::visit(overloaded{[](const KortewegModel&) {},
                        [](const QhdModel& m) { positive(m.epsilon, "QHD epsilon"); },
                        [](const EulerPoissonModel& m) {
                          require(std::isfinite(m.beta) && m.beta >= 0,
                                  ErrorCode::InvalidArgument,
                                  "Euler-Poisson beta must be nonnegative");
                        },
                        [](const LowerOrderModel& m) {
                          positive(m.c_kappa, "lower-order C_kappa");
                          positive(m.alpha, "lower-order alpha");
                        }},
             v_);
}

const LocalEnergy& EnergyModel::local() const {
  return std::visit([](const auto& m) -> const LocalEnergy& { return m.local; }, v_);
}

std::string EnergyModel::kind() const {
  return std::visit(overloaded{[](const KortewegModel& m) {
                                 return "korteweg/" + m.local.label() + "/" + m.cap.label();
                               },
                               [](const QhdModel& m) { return "qhd/" + m.local.label(); },
                               [](const EulerPoissonModel& m) {
                                 return "euler_poisson/" + m.local.label();
                               },
                               [](const LowerOrderModel& m) {
                                 return "lower_order/" + m.local.label();
                               }},
                    v_);
}

std::optional<KortewegModel> EnergyModel::korteweg_form() const {
  if (auto* k = std::get_if<KortewegModel>(&v_)) return *k;
  if (auto* q = std::get_if<QhdModel>(&v_))
    return KortewegModel{q->local, Capillarity::qhd(q->epsilon)};
  return std::nullopt;
}

double pressure(const LocalEnergy& local, double rho) {
  require(rho > 0, ErrorCode::Domain, "pressure needs rho > 0");
  return local.p(rho);
}

// ---------------------------------------------------------------------------

namespace {

ScalarField lift(const ScalarField& rho, double (LocalEnergy::*f)(double) const,
                 const LocalEnergy& local) {
  return rho.map([&](double r) { return (local.*f)(r); });
}

ScalarField lift(const ScalarField& rho, double (Capillarity::*f)(double) const,
                 const Capillarity& cap) {
  return rho.map([&](double r) { return (cap.*f)(r); });
}

ScalarField grad_sq(const VectorField& q) { return dot(q, q); }

TensorField symmetric_outer(const VectorField& a, const VectorField& b) {
  TensorField t = outer(a, b) + outer(b, a);
  t.symmetric = true;
  return t;
}

// Korteweg family with q = grad rho.
ScalarField korteweg_mu(const KortewegModel& m, const ScalarField& rho) {
  auto q = gradient(rho);
  auto kq = lift(rho, &Capillarity::k, m.cap) * q;
  return lift(rho, &LocalEnergy::dh, m.local) +
         0.5 * lift(rho, &Capillarity::dk, m.cap) * grad_sq(q) - divergence(kq);
}

TensorField korteweg_stress(const KortewegModel& m, const ScalarField& rho) {
  auto q = gradient(rho);
  auto kappa = lift(rho, &Capillarity::k, m.cap);
  auto iso = -lift(rho, &LocalEnergy::p, m.local) -
             lift(rho, &Capillarity::a, m.cap) * grad_sq(q) +
             divergence((rho * kappa) * q);
  TensorField s = TensorField::isotropic(iso) - kappa * outer(q, q);
  s.symmetric = true;
  return s;
}

TensorField korteweg_stress_variation(const KortewegModel& m, const ScalarField& rho,
                                      const ScalarField& psi) {
  auto q = gradient(rho);
  auto dpsi = gradient(psi);
  auto kappa = lift(rho, &Capillarity::k, m.cap);
  auto b1 = lift(rho, &Capillarity::db, m.cap);  // kappa + rho kappa'
  auto iso = -lift(rho, &LocalEnergy::dp, m.local) * psi -
             lift(rho, &Capillarity::da, m.cap) * psi * grad_sq(q) -
             b1 * dot(q, dpsi) + divergence(b1 * psi * q + (rho * kappa) * dpsi);
  TensorField s = TensorField::isotropic(iso) -
                  (lift(rho, &Capillarity::dk, m.cap) * psi) * outer(q, q) -
                  kappa * symmetric_outer(dpsi, q);
  s.symmetric = true;
  return s;
}

ScalarField qhd_mu(const QhdModel& m, const ScalarField& rho) {
  auto sq = rho.map([](double r) { return std::sqrt(r); });
  const double e2 = m.epsilon * m.epsilon;
  return lift(rho, &LocalEnergy::dh, m.local) - (0.5 * e2) * (laplacian(sq) / sq);
}

TensorField qhd_stress(const QhdModel& m, const ScalarField& rho) {
  auto q = gradient(rho);
  const double c = 0.25 * m.epsilon * m.epsilon;
  auto iso = -lift(rho, &LocalEnergy::p, m.local) + c * laplacian(rho);
  TensorField s = TensorField::isotropic(iso) - (c * rho.map([](double r) { return 1 / r; })) *
                                                    outer(q, q);
  s.symmetric = true;
  return s;
}

TensorField qhd_stress_variation(const QhdModel& m, const ScalarField& rho,
                                 const ScalarField& psi) {
  auto q = gradient(rho);
  auto dpsi = gradient(psi);
  const double c = 0.25 * m.epsilon * m.epsilon;
  auto inv = rho.map([](double r) { return 1 / r; });
  auto iso = -lift(rho, &LocalEnergy::dp, m.local) * psi + c * laplacian(psi);
  TensorField s = TensorField::isotropic(iso) - (c * inv) * symmetric_outer(dpsi, q) +
                  (c * psi * inv * inv) * outer(q, q);
  s.symmetric = true;
  return s;
}

// Stress of (1/2)|grad c|^2 + (w/2) c^2 type potential terms:
// (|grad c|^2/2 + w c^2/2) I - grad c (x) grad c.
TensorField potential_stress(const ScalarField& c, double w) {
  auto dc = gradient(c);
  TensorField s = TensorField::isotropic(0.5 * grad_sq(dc) + (0.5 * w) * c * c) -
                  outer(dc, dc);
  s.symmetric = true;
  return s;
}

TensorField potential_stress_variation(const ScalarField& c, const ScalarField& dc_dir,
                                       double w) {
  auto dc = gradient(c);
  auto dC = gradient(dc_dir);
  TensorField s = TensorField::isotropic(dot(dc, dC) + w * c * dc_dir) -
                  symmetric_outer(dC, dc);
  s.symmetric = true;
  return s;
}

}  // namespace

ScalarField potential_field(const EnergyModel& model, const ScalarField& rho) {
  if (auto* ep = std::get_if<EulerPoissonModel>(&model.variant()))
    return screened_poisson_mean_free(rho, ep->beta);
  if (auto* lo = std::get_if<LowerOrderModel>(&model.variant()))
    return helmholtz_inverse(rho, lo->alpha);
  fail(ErrorCode::InvalidArgument, "model has no elliptic potential");
}

ScalarField energy_density(const KortewegModel& m, const ScalarField& rho) {
  auto q = gradient(rho);
  return lift(rho, &LocalEnergy::h, m.local) +
         0.5 * lift(rho, &Capillarity::k, m.cap) * grad_sq(q);
}

double lower_order_energy(const LowerOrderModel& m, const ScalarField& rho, int form) {
  auto c = helmholtz_inverse(rho, m.alpha);
  const double hint = integrate(lift(rho, &LocalEnergy::h, m.local));
  const double ca = m.c_kappa * m.alpha;
  switch (form) {
    case 1: {
      auto d = rho - c;
      return hint + 0.5 * ca * inner(d, d) + 0.5 * m.c_kappa * std::pow(h1_seminorm(c), 2);
    }
    case 2:
      return hint + 0.5 * ca * inner(rho, rho) - 0.5 * ca * inner(rho, c);
    case 3:
      return hint + 0.5 * m.c_kappa * integrate(dot(gradient(rho), gradient(c)));
    default:
      fail(ErrorCode::InvalidArgument, "lower-order energy form must be 1, 2 or 3");
  }
}

double energy_total(const EnergyModel& model, const ScalarField& rho) {
  model.band().check(rho);
  return std::visit(
      overloaded{
          [&](const KortewegModel& m) { return integrate(energy_density(m, rho)); },
          [&](const QhdModel& m) {
            auto sq = rho.map([](double r) { return std::sqrt(r); });
            return integrate(lift(rho, &LocalEnergy::h, m.local)) +
                   0.5 * m.epsilon * m.epsilon * std::pow(h1_seminorm(sq), 2);
          },
          [&](const EulerPoissonModel& m) {
            auto c = screened_poisson_mean_free(rho, m.beta);
            return integrate(lift(rho, &LocalEnergy::h, m.local)) - 0.5 * inner(rho, c);
          },
          [&](const LowerOrderModel& m) { return lower_order_energy(m, rho, 1); }},
      model.variant());
}

ScalarField variational_derivative(const EnergyModel& model, const ScalarField& rho) {
  model.band().check(rho);
  return std::visit(
      overloaded{[&](const KortewegModel& m) { return korteweg_mu(m, rho); },
                 [&](const QhdModel& m) { return qhd_mu(m, rho); },
                 [&](const EulerPoissonModel& m) {
                   return lift(rho, &LocalEnergy::dh, m.local) -
                          screened_poisson_mean_free(rho, m.beta);
                 },
                 [&](const LowerOrderModel& m) {
                   auto c = helmholtz_inverse(rho, m.alpha);
                   return lift(rho, &LocalEnergy::dh, m.local) +
                          (m.c_kappa * m.alpha) * (rho - c);
                 }},
      model.variant());
}

TensorField stress_tensor(const EnergyModel& model, const ScalarField& rho) {
  model.band().check(rho);
  return std::visit(
      overloaded{[&](const KortewegModel& m) { return korteweg_stress(m, rho); },
                 [&](const QhdModel& m) { return qhd_stress(m, rho); },
                 [&](const EulerPoissonModel& m) {
                   auto c = screened_poisson_mean_free(rho, m.beta);
                   auto iso = -lift(rho, &LocalEnergy::p, m.local) + mean(rho) * c;
                   return TensorField::isotropic(iso) + potential_stress(c, m.beta);
                 },
                 [&](const LowerOrderModel& m) {
                   auto c = helmholtz_inverse(rho, m.alpha);
                   const double ca = m.c_kappa * m.alpha;
                   auto iso = -lift(rho, &LocalEnergy::p, m.local) - (0.5 * ca) * rho * rho;
                   return TensorField::isotropic(iso) +
                          m.c_kappa * potential_stress(c, m.alpha);
                 }},
      model.variant());
}

TensorField stress_variation(const EnergyModel& model, const ScalarField& rho,
                             const ScalarField& psi) {
  model.band().check(rho);
  return std::visit(
      overloaded{[&](const KortewegModel& m) {
                   return korteweg_stress_variation(m, rho, psi);
                 },
                 [&](const QhdModel& m) { return qhd_stress_variation(m, rho, psi); },
                 [&](const EulerPoissonModel& m) {
                   auto c = screened_poisson_mean_free(rho, m.beta);
                   auto dc = screened_poisson_mean_free(psi, m.beta);
                   auto iso = -lift(rho, &LocalEnergy::dp, m.local) * psi +
                              mean(psi) * c + mean(rho) * dc;
                   return TensorField::isotropic(iso) +
                          potential_stress_variation(c, dc, m.beta);
                 },
                 [&](const LowerOrderModel& m) {
                   auto c = helmholtz_inverse(rho, m.alpha);
                   auto dc = helmholtz_inverse(psi, m.alpha);
                   const double ca = m.c_kappa * m.alpha;
                   auto iso = -(lift(rho, &LocalEnergy::dp, m.local) + ca * rho) * psi;
                   return TensorField::isotropic(iso) +
                          m.c_kappa * potential_stress_variation(c, dc, m.alpha);
                 }},
      model.variant());
}

double second_variation(const EnergyModel& model, const ScalarField& rho,
                        const ScalarField& psi, const ScalarField& phi) {
  model.band().check(rho);
  auto local_part = [&](const LocalEnergy& l) {
    return inner(lift(rho, &LocalEnergy::d2h, l) * psi, phi);
  };
  if (auto k = model.korteweg_form()) {
    auto q = gradient(rho);
    auto dpsi = gradient(psi), dphi = gradient(phi);
    auto f_rr = lift(rho, &LocalEnergy::d2h, k->local) +
                0.5 * lift(rho, &Capillarity::d2k, k->cap) * grad_sq(q);
    auto f_rq = lift(rho, &Capillarity::dk, k->cap);
    auto f_qq = lift(rho, &Capillarity::k, k->cap);
    return integrate(f_rr * psi * phi + f_rq * (psi * dot(q, dphi) + phi * dot(q, dpsi)) +
                     f_qq * dot(dpsi, dphi));
  }
  if (auto* ep = std::get_if<EulerPoissonModel>(&model.variant()))
    return local_part(ep->local) - inner(psi, screened_poisson_mean_free(phi, ep->beta));
  const auto& lo = std::get<LowerOrderModel>(model.variant());
  const double ca = lo.c_kappa * lo.alpha;
  return local_part(lo.local) + ca * inner(psi, phi) -
         ca * inner(psi, helmholtz_inverse(phi, lo.alpha));
}

double noether_residual(const EnergyModel& model, const ScalarField& rho) {
  auto div_s = divergence(stress_tensor(model, rho));
  auto force = rho * gradient(variational_derivative(model, rho));
  return linf_norm(force + div_s) / linf_norm(div_s);
}

// ---------------------------------------------------------------------------

double relative_scalar(Constituent g, const KortewegModel& m, double r,
                       std::span<const double> q, double rb,
                       std::span<const double> qb) {
  const auto& l = m.local;
  const auto& c = m.cap;
  switch (g) {
    case Constituent::H:
      return remainder1([&](double x) { return l.h(x); }, [&](double x) { return l.dh(x); },
                        r, rb);
    case Constituent::P:
      return remainder1([&](double x) { return l.p(x); }, [&](double x) { return l.dp(x); },
                        r, rb);
    case Constituent::Kappa:
      return remainder1([&](double x) { return c.k(x); }, [&](double x) { return c.dk(x); },
                        r, rb);
    case Constituent::A:
      return remainder1([&](double x) { return c.a(x); }, [&](double x) { return c.da(x); },
                        r, rb);
    case Constituent::B:
      return remainder1([&](double x) { return c.b(x); }, [&](double x) { return c.db(x); },
                        r, rb);
    case Constituent::S: {
      // s = p + A |q|^2
      const double qq = norm2(q), qbqb = norm2(qb);
      const double s = l.p(r) + c.a(r) * qq;
      const double sb = l.p(rb) + c.a(rb) * qbqb;
      const double s_rho = l.dp(rb) + c.da(rb) * qbqb;
      const double s_q_dq = 2 * c.a(rb) * (dotp(qb, q) - qbqb);
      return s - sb - s_rho * (r - rb) - s_q_dq;
    }
  }
  return 0;
}

double relative_density(const KortewegModel& m, double r, std::span<const double> q,
                        double rb, std::span<const double> qb) {
  const auto& l = m.local;
  const auto& c = m.cap;
  const double qq = norm2(q), qbqb = norm2(qb);
  const double f = l.h(r) + 0.5 * c.k(r) * qq;
  const double fb = l.h(rb) + 0.5 * c.k(rb) * qbqb;
  const double f_rho = l.dh(rb) + 0.5 * c.dk(rb) * qbqb;
  const double f_q_dq = c.k(rb) * (dotp(qb, q) - qbqb);
  return f - fb - f_rho * (r - rb) - f_q_dq;
}

std::vector<double> relative_r(const KortewegModel& m, double r, std::span<const double> q,
                               double rb, std::span<const double> qb) {
  const auto& c = m.cap;
  const double b = c.b(r), bb = c.b(rb), dbb = c.db(rb);
  std::vector<double> out(q.size());
  for (std::size_t k = 0; k < q.size(); ++k)
    out[k] = b * q[k] - bb * qb[k] - dbb * qb[k] * (r - rb) - bb * (q[k] - qb[k]);
  return out;
}

std::vector<double> relative_h_tensor(const KortewegModel& m, double r,
                                      std::span<const double> q, double rb,
                                      std::span<const double> qb) {
  const auto& c = m.cap;
  const double k = c.k(r), kb = c.k(rb), dkb = c.dk(rb);
  const std::size_t d = q.size();
  std::vector<double> out(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double dqi = q[i] - qb[i], dqj = q[j] - qb[j];
      out[i * d + j] = k * q[i] * q[j] - kb * qb[i] * qb[j] - dkb * qb[i] * qb[j] * (r - rb) -
                       kb * (dqi * qb[j] + qb[i] * dqj);
    }
  return out;
}

namespace {

// Evaluates fn(rho, q, rho_bar, q_bar) at every grid point.
template <class Fn>
void pointwise(const ScalarField& rho, const ScalarField& rho_bar, Fn&& fn) {
  rho.check_same_grid(rho_bar);
  auto q = gradient(rho), qb = gradient(rho_bar);
  const int d = rho.grid().dim();
  std::vector<double> qi(d), qbi(d);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    for (int a = 0; a < d; ++a) {
      qi[a] = q[a][i];
      qbi[a] = qb[a][i];
    }
    fn(i, rho[i], std::span<const double>(qi), rho_bar[i], std::span<const double>(qbi));
  }
}

}  // namespace

ScalarField relative_scalar_field(Constituent g, const KortewegModel& m,
                                  const ScalarField& rho, const ScalarField& rho_bar) {
  std::vector<double> out(rho.size());
  pointwise(rho, rho_bar, [&](std::size_t i, double r, auto q, double rb, auto qb) {
    out[i] = relative_scalar(g, m, r, q, rb, qb);
  });
  return ScalarField(rho.grid_ptr(), std::move(out));
}

ScalarField relative_density_field(const KortewegModel& m, const ScalarField& rho,
                                   const ScalarField& rho_bar) {
  std::vector<double> out(rho.size());
  pointwise(rho, rho_bar, [&](std::size_t i, double r, auto q, double rb, auto qb) {
    out[i] = relative_density(m, r, q, rb, qb);
  });
  return ScalarField(rho.grid_ptr(), std::move(out));
}

VectorField relative_r_field(const KortewegModel& m, const ScalarField& rho,
                             const ScalarField& rho_bar) {
  const int d = rho.grid().dim();
  std::vector<std::vector<double>> out(d, std::vector<double>(rho.size()));
  pointwise(rho, rho_bar, [&](std::size_t i, double r, auto q, double rb, auto qb) {
    auto v = relative_r(m, r, q, rb, qb);
    for (int a = 0; a < d; ++a) out[a][i] = v[a];
  });
  VectorField f;
  for (auto& c : out) f.components.emplace_back(rho.grid_ptr(), std::move(c));
  return f;
}

TensorField relative_h_field(const KortewegModel& m, const ScalarField& rho,
                             const ScalarField& rho_bar) {
  const int d = rho.grid().dim();
  std::vector<std::vector<double>> out(d * d, std::vector<double>(rho.size()));
  pointwise(rho, rho_bar, [&](std::size_t i, double r, auto q, double rb, auto qb) {
    auto v = relative_h_tensor(m, r, q, rb, qb);
    for (int a = 0; a < d * d; ++a) out[a][i] = v[a];
  });
  TensorField t{d, {}, true};
  for (auto& c : out) t.components.emplace_back(rho.grid_ptr(), std::move(c));
  return t;
}

TensorField relative_stress(const EnergyModel& model, const ScalarField& rho,
                            const ScalarField& rho_bar) {
  model.band().check(rho);
  model.band().check(rho_bar);
  TensorField s = stress_tensor(model, rho) - stress_tensor(model, rho_bar) -
                  stress_variation(model, rho_bar, rho - rho_bar);
  s.symmetric = true;
  return s;
}

TensorField relative_stress_specialized(const EnergyModel& model, const ScalarField& rho,
                                        const ScalarField& rho_bar) {
  model.band().check(rho);
  model.band().check(rho_bar);
  const auto& local = model.local();
  auto p_rel = [&]() {
    return rho.zip(rho_bar, [&](double r, double rb) {
      return local.p(r) - local.p(rb) - local.dp(rb) * (r - rb);
    });
  };
  TensorField out = std::visit(
      overloaded{
          [&](const KortewegModel& m) {
            auto iso = -relative_scalar_field(Constituent::S, m, rho, rho_bar) +
                       divergence(relative_r_field(m, rho, rho_bar));
            return TensorField::isotropic(iso) - relative_h_field(m, rho, rho_bar);
          },
          [&](const QhdModel& m) {
            // s(|) = p(|), r(|) = 0, H(|) = (eps^2/4) rho w (x) w, w = q/rho - qb/rho_bar
            auto w = gradient(rho) / rho - gradient(rho_bar) / rho_bar;
            const double c = 0.25 * m.epsilon * m.epsilon;
            return TensorField::isotropic(-p_rel()) - (c * rho) * outer(w, w);
          },
          [&](const EulerPoissonModel& m) {
            auto dc = screened_poisson_mean_free(rho, m.beta) -
                      screened_poisson_mean_free(rho_bar, m.beta);
            auto iso = -p_rel() + mean(rho - rho_bar) * dc;
            return TensorField::isotropic(iso) + potential_stress(dc, m.beta);
          },
          [&](const LowerOrderModel& m) {
            auto dc = helmholtz_inverse(rho, m.alpha) - helmholtz_inverse(rho_bar, m.alpha);
            auto d = rho - rho_bar;
            auto iso = -p_rel() - (0.5 * m.c_kappa * m.alpha) * d * d;
            return TensorField::isotropic(iso) + m.c_kappa * potential_stress(dc, m.alpha);
          }},
      model.variant());
  out.symmetric = true;
  return out;
}

// ---------------------------------------------------------------------------

ConvexityReport check_convexity(const Capillarity& cap, const LocalEnergy& local,
                                const DensityBand& band, int samples, double q_max,
                                int dim) {
  require(band.min > 0 && band.max > band.min, ErrorCode::InvalidArgument,
          "convexity band must satisfy 0 < min < max");
  require(samples >= 2 && dim >= 1 && dim <= 3, ErrorCode::InvalidArgument,
          "convexity sampling parameters out of range");
  ConvexityReport rep;
  rep.min_h2 = rep.min_kappa = rep.min_h4c = rep.min_h4uc = rep.min_d2kappa =
      rep.min_hessian_eig = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> u(-1, 1);
  const double ratio = std::log(band.max / band.min) / (samples - 1);
  const int nq = 11;
  for (int i = 0; i < samples; ++i) {
    const double r = band.min * std::exp(ratio * i);
    const double h2 = local.d2h(r), k = cap.k(r), k1 = cap.dk(r), k2 = cap.d2k(r);
    rep.min_h2 = std::min(rep.min_h2, h2);
    rep.min_kappa = std::min(rep.min_kappa, k);
    rep.min_d2kappa = std::min(rep.min_d2kappa, k2);
    rep.min_h4c = std::min(rep.min_h4c, k * k2 - 2 * k1 * k1);
    if (k2 > 0) rep.min_h4uc = std::min(rep.min_h4uc, k - 2 * k1 * k1 / k2);
    for (int j = 0; j < nq; ++j) {
      const double qn = q_max * j / (nq - 1);
      Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(dim + 1, dim + 1);
      hess(0, 0) = h2 + 0.5 * k2 * qn * qn;
      hess(0, 1) = hess(1, 0) = k1 * qn;
      for (int a = 1; a <= dim; ++a) hess(a, a) = k;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess, Eigen::EigenvaluesOnly);
      rep.min_hessian_eig = std::min(rep.min_hessian_eig, es.eigenvalues()(0));

      if (k2 != 0 || k1 == 0) {
        Eigen::VectorXd v(dim + 1);
        for (int a = 0; a <= dim; ++a) v(a) = u(rng);
        const double a = v(0);
        Eigen::VectorXd b = v.tail(dim);
        Eigen::VectorXd q = Eigen::VectorXd::Zero(dim);
        q(0) = qn;
        const double matrix_form = v.dot(hess * v);
        double closed;
        if (k2 != 0)
          closed = h2 * a * a + (k * k2 - 2 * k1 * k1) / k2 * b.squaredNorm() +
                   2 / k2 * (0.5 * k2 * a * q + k1 * b).squaredNorm();
        else
          closed = h2 * a * a + k * b.squaredNorm();
        rep.decomposition_residual =
            std::max(rep.decomposition_residual,
                     std::abs(matrix_form - closed) / std::max(1.0, std::abs(matrix_form)));
      }
    }
  }
  if (!std::isfinite(rep.min_h4uc)) rep.min_h4uc = 0;
  rep.local_convex = rep.min_h2 > 0;
  rep.capillarity_positive = rep.min_kappa > 0;
  rep.h4c = rep.local_convex && rep.capillarity_positive && rep.min_h4c >= -1e-12;
  rep.h4uc = rep.local_convex && rep.min_d2kappa > 0 && rep.min_h4uc > 0;
  rep.hessian_positive = rep.min_hessian_eig > 0;
  return rep;
}

std::vector<double> kinetic_hessian_eigenvalues(double rho, std::span<const double> m) {
  require(rho > 0, ErrorCode::Vacuum, "kinetic Hessian needs rho > 0");
  const int d = static_cast<int>(m.size());
  Eigen::MatrixXd hess(d + 1, d + 1);
  hess(0, 0) = norm2(m) / (rho * rho * rho);
  for (int i = 0; i < d; ++i) {
    hess(0, i + 1) = hess(i + 1, 0) = -m[i] / (rho * rho);
    for (int j = 0; j < d; ++j) hess(i + 1, j + 1) = i == j ? 1 / rho : 0.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess, Eigen::EigenvaluesOnly);
  std::vector<double> ev(d + 1);
  for (int i = 0; i <= d; ++i) ev[i] = es.eigenvalues()(i);
  return ev;
}

std::pair<double, double> kinetic_quadratic_form(double rho, std::span<const double> m,
                                                 double a, std::span<const double> b) {
  require(rho > 0, ErrorCode::Vacuum, "kinetic Hessian needs rho > 0");
  const double matrix_form =
      a * a * norm2(m) / (rho * rho * rho) - 2 * a * dotp(m, b) / (rho * rho) + norm2(b) / rho;
  double closed = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double w = m[i] / rho * a - b[i];
    closed += w * w;
  }
  return {matrix_form, closed / rho};
}

}  // namespace kortlab
