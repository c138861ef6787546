#include "kortlab/relative_energy.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

namespace kortlab {

namespace {

ScalarField local_remainder(const LocalEnergy& local, const ScalarField& rho,
                            const ScalarField& rho_bar) {
  return rho.zip(rho_bar, [&](double r, double rb) {
    return local.h(r) - local.h(rb) - local.dh(rb) * (r - rb);
  });
}

ScalarField pressure_remainder(const LocalEnergy& local, const ScalarField& rho,
                               const ScalarField& rho_bar) {
  return rho.zip(rho_bar, [&](double r, double rb) {
    return local.p(r) - local.p(rb) - local.dp(rb) * (r - rb);
  });
}

ScalarField dh_field(const LocalEnergy& local, const ScalarField& rho) {
  return rho.map([&](double r) { return local.dh(r); });
}

// sum_ij grad(v)_ij a_i b_j with grad(v)_ij = d_j v_i
ScalarField grad_contract(const TensorField& grad_v, const VectorField& a, const VectorField& b) {
  return double_dot(grad_v, outer(a, b));
}

void check_pair(const EnergyModel& model, const State& s, const State& sb) {
  s.rho.check_same_grid(sb.rho);
  model.band().check(s.rho);
  model.band().check(sb.rho);
}

double viscous_term(const SystemSpec& spec, const VectorField& u, const VectorField& ub,
                    const ScalarField& rho, const ScalarField& rho_bar) {
  if (!spec.viscous()) return 0;
  auto dsig = divergence(viscous_stress(u, spec.lambda, spec.mu));
  auto dsigb = divergence(viscous_stress(ub, spec.lambda, spec.mu));
  auto diff = ub - u;
  return integrate(dot(dsigb / rho_bar, diff) * (rho - rho_bar) + dot(diff, dsigb - dsig));
}

}  // namespace

double relative_kinetic(const State& s, const State& sb) {
  s.rho.check_same_grid(sb.rho);
  auto w = s.m / s.rho - sb.m / sb.rho;
  return 0.5 * integrate(s.rho * dot(w, w));
}

double relative_kinetic_bregman(const State& s, const State& sb) {
  s.rho.check_same_grid(sb.rho);
  // k = |m|^2 / (2 rho), k_rho = -|m|^2 / (2 rho^2), k_m = m / rho
  auto k = 0.5 * dot(s.m, s.m) / s.rho;
  auto kb = 0.5 * dot(sb.m, sb.m) / sb.rho;
  auto kb_rho = -1.0 * kb / sb.rho;
  auto ub = sb.m / sb.rho;
  return integrate(k - kb - kb_rho * (s.rho - sb.rho) - dot(ub, s.m - sb.m));
}

RelativePotential relative_potential_parts(const EnergyModel& model, const ScalarField& rho,
                                           const ScalarField& rho_bar) {
  rho.check_same_grid(rho_bar);
  model.band().check(rho);
  model.band().check(rho_bar);
  RelativePotential out;
  out.local = integrate(local_remainder(model.local(), rho, rho_bar));
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, KortewegModel>) {
          out.value = integrate(relative_density_field(m, rho, rho_bar));
        } else if constexpr (std::is_same_v<M, QhdModel>) {
          auto w = gradient(rho) / rho - gradient(rho_bar) / rho_bar;
          out.value = out.local + 0.125 * m.epsilon * m.epsilon * integrate(rho * dot(w, w));
        } else if constexpr (std::is_same_v<M, EulerPoissonModel>) {
          auto dc = screened_poisson_mean_free(rho, m.beta) -
                    screened_poisson_mean_free(rho_bar, m.beta);
          out.electric = -0.5 * std::pow(h1_seminorm(dc), 2) - 0.5 * m.beta * inner(dc, dc);
          out.value = out.local + out.electric;
        } else {
          auto dc = helmholtz_inverse(rho, m.alpha) - helmholtz_inverse(rho_bar, m.alpha);
          auto gap = (rho - rho_bar) - dc;
          out.value = out.local + 0.5 * m.c_kappa * m.alpha * inner(gap, gap) +
                      0.5 * m.c_kappa * std::pow(h1_seminorm(dc), 2);
        }
      },
      model.variant());
  return out;
}

double relative_potential(const EnergyModel& model, const ScalarField& rho,
                          const ScalarField& rho_bar) {
  return relative_potential_parts(model, rho, rho_bar).value;
}

double relative_potential_bregman(const EnergyModel& model, const ScalarField& rho,
                                  const ScalarField& rho_bar) {
  return energy_total(model, rho) - energy_total(model, rho_bar) -
         inner(variational_derivative(model, rho_bar), rho - rho_bar);
}

IdentityRhs identity_rhs(const SystemSpec& spec, const State& s, const State& sb) {
  check_pair(spec.model, s, sb);
  auto u = s.m / s.rho;
  auto ub = sb.m / sb.rho;
  auto w = u - ub;
  auto grad_ub = jacobian(ub);
  double common = -integrate(s.rho * grad_contract(grad_ub, w, w));
  if (spec.zeta > 0) common -= spec.zeta * integrate(s.rho * dot(w, w));
  common += viscous_term(spec, u, ub, s.rho, sb.rho);

  IdentityRhs out;
  out.abstract = common + integrate(double_dot(grad_ub, relative_stress(spec.model, s.rho, sb.rho)));

  const auto& v = spec.model.variant();
  if (const auto* km = std::get_if<KortewegModel>(&v)) {
    auto div_ub = divergence(ub);
    auto s_rel = relative_scalar_field(Constituent::S, *km, s.rho, sb.rho);
    auto r_rel = relative_r_field(*km, s.rho, sb.rho);
    auto h_rel = relative_h_field(*km, s.rho, sb.rho);
    out.specialized = common - integrate(div_ub * s_rel) - integrate(dot(gradient(div_ub), r_rel)) -
                      integrate(double_dot(grad_ub, h_rel));
  } else {
    out.specialized = common + integrate(double_dot(
                                   grad_ub, relative_stress_specialized(spec.model, s.rho, sb.rho)));
  }
  return out;
}

double reduced_relative_energy(const EnergyModel& model, const State& s, const State& sb) {
  check_pair(model, s, sb);
  auto parts = relative_potential_parts(model, s.rho, sb.rho);
  return relative_kinetic(s, sb) + parts.value - parts.local;
}

ReducedLowerOrder reduced_relative_energy_lo(const State& nsk, const State& lo, double c_kappa,
                                             double alpha) {
  nsk.rho.check_same_grid(lo.rho);
  auto c = helmholtz_inverse(lo.rho, alpha);
  auto gap = lo.rho - c;
  ReducedLowerOrder out;
  out.gradient = 0.5 * c_kappa * std::pow(h1_seminorm(c - nsk.rho), 2);
  out.coupling = 0.5 * alpha * c_kappa * inner(gap, gap);
  out.kinetic = relative_kinetic(lo, nsk);
  return out;
}

double relative_energy_lo(const LocalEnergy& local, const State& nsk, const State& lo,
                          double c_kappa, double alpha) {
  return integrate(local_remainder(local, lo.rho, nsk.rho)) +
         reduced_relative_energy_lo(nsk, lo, c_kappa, alpha).total();
}

std::array<double, 6> rate_terms_nsk(const State& s, const State& sb, const LocalEnergy& local,
                                     double c_kappa) {
  s.rho.check_same_grid(sb.rho);
  auto ub = sb.m / sb.rho;
  auto wt = ub - s.m / s.rho;  // ub - u
  auto delta = s.rho - sb.rho;
  auto qb = gradient(sb.rho);
  auto p_rel = pressure_remainder(local, s.rho, sb.rho);
  auto div_mb = divergence(sb.m);
  auto dh = dh_field(local, s.rho), dhb = dh_field(local, sb.rho);
  auto d2hb = sb.rho.map([&](double r) { return local.d2h(r); });

  std::array<double, 6> a{};
  a[0] = -c_kappa * integrate(delta * dot(ub, grad_laplacian(delta)));
  a[1] = integrate(dot(qb, wt) * dot(ub, wt) * s.rho / sb.rho + dot(qb, ub) / sb.rho * p_rel);
  a[2] = -integrate(s.rho / sb.rho * grad_contract(jacobian(sb.m), wt, wt));
  a[3] = -integrate(div_mb / sb.rho * p_rel);
  a[4] = integrate(div_mb * (dh - dhb - d2hb * delta));
  a[5] = integrate((dh - dhb) * (divergence(s.m) - div_mb));
  return a;
}

std::array<double, 8> rate_terms_lo(const State& nsk, const State& lo, const LocalEnergy& local,
                                    double c_kappa, double alpha, double lambda, double mu) {
  nsk.rho.check_same_grid(lo.rho);
  const auto& rho = nsk.rho;
  const auto& ra = lo.rho;
  auto u = nsk.m / rho;
  auto ua = lo.m / ra;
  auto w = u - ua;
  auto c = helmholtz_inverse(ra, alpha);
  auto p_rel = pressure_remainder(local, ra, rho);
  auto q = gradient(rho);
  auto div_m = divergence(nsk.m), div_ma = divergence(lo.m);
  auto dh = dh_field(local, rho), dha = dh_field(local, ra);
  auto d2h = rho.map([&](double r) { return local.d2h(r); });

  std::array<double, 8> a{};
  if (lambda != 0 || mu != 0) {
    auto dsig = divergence(viscous_stress(u, lambda, mu));
    auto dsiga = divergence(viscous_stress(ua, lambda, mu));
    a[0] = integrate(dot(dsig / rho, w) * (ra - rho) + dot(w, dsig - dsiga));
  }
  a[1] = -c_kappa * integrate(dot(u, grad_laplacian(rho - c)) * (rho - ra));
  a[2] = integrate(dot(q, w) * dot(u, w) * ra / rho + dot(q, u) / rho * p_rel);
  a[3] = -integrate(ra / rho * grad_contract(jacobian(nsk.m), w, w));
  a[4] = -integrate(div_m / rho * p_rel);
  // rho_t - c_t of the lower-order solution, paired with the NSK Laplacian
  auto ra_t = -1.0 * div_ma;
  a[5] = -c_kappa * integrate((ra_t - helmholtz_inverse(ra_t, alpha)) * laplacian(rho));
  a[6] = integrate(div_m * (dha - dh - d2h * (ra - rho)));
  a[7] = integrate((dha - dh) * (div_ma - div_m));
  return a;
}

const char* to_string(TwinDistance d) {
  switch (d) {
    case TwinDistance::RelativeTotal: return "relative_total";
    case TwinDistance::H1: return "h1";
    case TwinDistance::Qhd: return "qhd";
    case TwinDistance::Reduced: return "reduced";
  }
  return "?";
}

double twin_distance(TwinDistance d, const EnergyModel& model, const State& s, const State& sb) {
  check_pair(model, s, sb);
  const double k = relative_kinetic(s, sb);
  switch (d) {
    case TwinDistance::RelativeTotal: return k + relative_potential(model, s.rho, sb.rho);
    case TwinDistance::H1: {
      auto delta = s.rho - sb.rho;
      return k + inner(delta, delta) + std::pow(h1_seminorm(delta), 2);
    }
    case TwinDistance::Qhd: {
      auto w = gradient(s.rho) / s.rho - gradient(sb.rho) / sb.rho;
      return k + integrate(local_remainder(model.local(), s.rho, sb.rho)) +
             0.5 * integrate(s.rho * dot(w, w));
    }
    case TwinDistance::Reduced: return reduced_relative_energy(model, s, sb);
  }
  return 0;
}

RelativeEnergyReport relative_energy_snapshot(const SystemSpec& spec, const State& s,
                                              const State& sb) {
  check_pair(spec.model, s, sb);
  RelativeEnergyReport r;
  r.time = s.time;
  auto parts = relative_potential_parts(spec.model, s.rho, sb.rho);
  r.rel_kinetic = relative_kinetic(s, sb);
  r.rel_potential = parts.value;
  r.rel_electric = parts.electric;
  r.rel_total = r.rel_kinetic + r.rel_potential;
  r.reduced = r.rel_total - parts.local;
  return r;
}

std::vector<RelativeEnergyReport> identity_residual(const SystemSpec& spec,
                                                    const std::vector<State>& traj,
                                                    const std::vector<State>& traj_bar) {
  require(traj.size() == traj_bar.size(), ErrorCode::InsufficientData,
          "trajectories have different numbers of samples");
  require(traj.size() >= 3, ErrorCode::InsufficientData,
          "identity residual needs at least three samples");
  for (std::size_t i = 0; i < traj.size(); ++i)
    require(std::abs(traj[i].time - traj_bar[i].time) <= 1e-12 * std::max(1.0, traj[i].time),
            ErrorCode::InsufficientData, "trajectories are sampled at different times");

  std::vector<RelativeEnergyReport> snaps;
  for (std::size_t i = 0; i < traj.size(); ++i)
    snaps.push_back(relative_energy_snapshot(spec, traj[i], traj_bar[i]));
  std::vector<RelativeEnergyReport> rows;
  for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
    auto row = snaps[i];
    row.lhs_rate =
        (snaps[i + 1].rel_total - snaps[i - 1].rel_total) / (snaps[i + 1].time - snaps[i - 1].time);
    row.rhs_value = identity_rhs(spec, traj[i], traj_bar[i]).abstract;
    row.residual = row.lhs_rate - row.rhs_value;
    rows.push_back(row);
  }
  return rows;
}

VectorField relative_flux(const KortewegModel& km, const State& s, const State& sb) {
  s.rho.check_same_grid(sb.rho);
  const EnergyModel model(km);
  const auto& cap = km.cap;
  auto ub = sb.m / sb.rho;
  auto w = s.m / s.rho - ub;
  auto delta = s.rho - sb.rho;
  auto q = gradient(s.rho), qb = gradient(sb.rho);
  auto kappa = s.rho.map([&](double r) { return cap.k(r); });
  auto kappa_b = sb.rho.map([&](double r) { return cap.k(r); });
  auto dkappa_b = sb.rho.map([&](double r) { return cap.dk(r); });
  auto fq = kappa * q, fq_b = kappa_b * qb;
  auto grad_delta = gradient(delta);
  auto lin = dkappa_b * delta * qb + kappa_b * grad_delta;

  VectorField j = (variational_derivative(model, s.rho) - variational_derivative(model, sb.rho)) * s.m;
  j = j + divergence(s.m) * (fq - fq_b);
  j = j + apply(stress_tensor(model, s.rho) - stress_tensor(model, sb.rho), ub);
  j = j - divergence(sb.m) * lin;
  j = j + dot(ub, qb) * lin;
  j = j - (divergence(delta * fq_b) * ub - dot(ub, grad_delta) * fq_b);
  j = j - divergence(ub) * relative_r_field(km, s.rho, sb.rho);
  return j + (0.5 * dot(w, w)) * s.m;
}

LocalIdentity local_identity(const KortewegModel& km, const std::array<State, 3>& s,
                             const std::array<State, 3>& sb) {
  const double dt = s[1].time - s[0].time;
  require(dt > 0, ErrorCode::InsufficientData, "samples must advance in time");
  for (int i = 0; i < 3; ++i)
    require(std::abs(s[i].time - sb[i].time) <= 1e-12 * std::max(1.0, std::abs(s[i].time)),
            ErrorCode::InsufficientData, "trajectories are sampled at different times");
  require(std::abs((s[2].time - s[1].time) - dt) <= 1e-9 * dt, ErrorCode::InsufficientData,
          "local identity needs equally spaced samples");

  auto density = [&](const State& a, const State& b) {
    auto w = a.m / a.rho - b.m / b.rho;
    return 0.5 * a.rho * dot(w, w) + relative_density_field(km, a.rho, b.rho);
  };
  const auto& mid = s[1];
  const auto& midb = sb[1];
  auto rate = (0.5 / dt) * (density(s[2], sb[2]) - density(s[0], sb[0]));

  auto ub = midb.m / midb.rho;
  auto w = mid.m / mid.rho - ub;
  auto grad_ub = jacobian(ub);
  auto div_ub = divergence(ub);
  auto rhs = -1.0 * (mid.rho * grad_contract(grad_ub, w, w)) -
             div_ub * relative_scalar_field(Constituent::S, km, mid.rho, midb.rho) -
             double_dot(grad_ub, relative_h_field(km, mid.rho, midb.rho)) -
             dot(gradient(div_ub), relative_r_field(km, mid.rho, midb.rho));

  LocalIdentity out{rate, relative_flux(km, mid, midb)};
  auto div_flux = divergence(out.flux);
  out.residual = rate + div_flux - rhs;
  out.flux_divergence_integral = integrate(div_flux);
  out.flux_scale = linf_norm(out.flux);
  out.rate_scale = linf_norm(rate);
  return out;
}

void write_relative_energy_csv(const std::string& path,
                               const std::vector<RelativeEnergyReport>& rows) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path);
  out << "t,rel_kinetic,rel_potential,rel_total,reduced,lhs_rate,rhs_value,residual";
  for (int i = 1; i <= 8; ++i) out << ",A" << i;
  out << '\n' << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.time << ',' << r.rel_kinetic << ',' << r.rel_potential << ',' << r.rel_total << ','
        << r.reduced << ',' << r.lhs_rate << ',' << r.rhs_value << ',' << r.residual;
    for (int i = 1; i <= 8; ++i) {
      out << ',';
      auto it = r.terms.find("A" + std::to_string(i));
      if (it != r.terms.end()) out << it->second;
    }
    out << '\n';
  }
  require(static_cast<bool>(out), ErrorCode::Io, "failed writing " + path);
}

}  // namespace kortlab
