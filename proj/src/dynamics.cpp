#include "kortlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kortlab {

const char* to_string(SystemKind k) {
  switch (k) {
    case SystemKind::EulerKorteweg: return "euler_korteweg";
    case SystemKind::NavierStokesKorteweg: return "navier_stokes_korteweg";
    case SystemKind::QuantumHydrodynamics: return "quantum_hydrodynamics";
    case SystemKind::EulerPoisson: return "euler_poisson";
    case SystemKind::LowerOrder: return "lower_order";
  }
  return "?";
}

const char* to_string(Integrator k) {
  return k == Integrator::RK4 ? "rk4" : "ssprk3";
}

void SystemSpec::validate(int dim) const {
  auto need = [](bool ok, const std::string& msg) { require(ok, ErrorCode::Config, msg); };
  need(dim >= 1 && dim <= 3, "dimension must be 1, 2 or 3");
  need(std::isfinite(dt) && dt > 0, "dt must be positive");
  need(std::isfinite(t_end) && t_end > 0, "t_end must be positive");
  need(std::isfinite(zeta) && zeta >= 0, "friction zeta must be nonnegative");
  need(std::isfinite(c_cfl) && c_cfl > 0, "c_cfl must be positive");
  need(observe_every >= 1, "observe_every must be at least 1");

  const auto& v = model.variant();
  bool match = false;
  switch (system) {
    case SystemKind::EulerKorteweg:
    case SystemKind::NavierStokesKorteweg:
      match = std::holds_alternative<KortewegModel>(v);
      break;
    case SystemKind::QuantumHydrodynamics: match = std::holds_alternative<QhdModel>(v); break;
    case SystemKind::EulerPoisson: match = std::holds_alternative<EulerPoissonModel>(v); break;
    case SystemKind::LowerOrder: match = std::holds_alternative<LowerOrderModel>(v); break;
  }
  need(match, std::string("model ") + model.kind() + " does not fit system " + to_string(system));

  const bool allows_viscosity =
      system == SystemKind::NavierStokesKorteweg || system == SystemKind::LowerOrder;
  need(std::isfinite(lambda) && std::isfinite(mu), "viscosities must be finite");
  if (viscous()) {
    need(allows_viscosity, std::string("system ") + to_string(system) + " is inviscid");
    need(mu >= 0, "shear viscosity mu must be nonnegative");
    need(lambda + 2.0 / dim * mu >= -1e-14 * std::max(1.0, mu),
         "viscosities must satisfy lambda + 2 mu / d >= 0");
  }
}

VectorField velocity(const EnergyModel& model, const State& s) {
  model.band().check(s.rho);
  return s.m / s.rho;
}

TensorField viscous_stress(const VectorField& u, double lambda, double mu) {
  auto grad = jacobian(u);
  const int d = u.dim();
  TensorField t = TensorField::isotropic(lambda * divergence(u));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) t(i, j) += mu * (grad(i, j) + grad(j, i));
  t.symmetric = true;
  return t;
}

ScalarField viscous_dissipation(const VectorField& u, double lambda, double mu) {
  return double_dot(viscous_stress(u, lambda, mu), jacobian(u));
}

Rate rhs(const SystemSpec& spec, const State& s) {
  s.rho.check_same_grid(s.m[0]);
  auto u = velocity(spec.model, s);

  VectorField force = spec.force_form == ForceForm::Conservative
                          ? divergence(stress_tensor(spec.model, s.rho))
                          : -1.0 * (s.rho * gradient(variational_derivative(spec.model, s.rho)));
  VectorField dm = force - divergence(outer(s.m, u));
  double ddiss = 0;
  if (spec.zeta > 0) {
    dm = dm - spec.zeta * s.m;
    ddiss += spec.zeta * integrate(dot(s.m, u));
  }
  if (spec.viscous()) {
    auto sigma = viscous_stress(u, spec.lambda, spec.mu);
    dm = dm + divergence(sigma);
    ddiss += integrate(double_dot(sigma, jacobian(u)));
  }
  Rate r{-1.0 * divergence(s.m), std::move(dm), ddiss};
  if (s.rho.grid().dealias()) {
    r.drho = dealias_filter(r.drho);
    r.dm = dealias_filter(r.dm);
  }
  bool finite = r.drho.all_finite() && std::isfinite(r.ddissipated);
  for (int i = 0; i < r.dm.dim(); ++i) finite = finite && r.dm[i].all_finite();
  require(finite, ErrorCode::NonFinite, "right-hand side is not finite");
  return r;
}

double kinetic_energy(const State& s) { return 0.5 * integrate(dot(s.m, s.m) / s.rho); }

double total_energy(const SystemSpec& spec, const State& s) {
  return kinetic_energy(s) + energy_total(spec.model, s.rho);
}

double stable_dt(const SystemSpec& spec, const State& s) {
  const auto& grid = s.rho.grid();
  const double dx = grid.spacing();
  auto u = velocity(spec.model, s);
  const double umax = std::sqrt(linf_norm(dot(u, u)));
  const double rmin = s.rho.min();
  const auto& local = spec.model.local();

  double c2 = 0, dispersion = 0;
  for (std::size_t i = 0; i < s.rho.size(); ++i) {
    const double r = s.rho[i];
    double sound = local.dp(r);
    std::visit(
        [&](const auto& m) {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, KortewegModel>)
            dispersion = std::max(dispersion, std::sqrt(std::abs(m.cap.k(r)) * r));
          else if constexpr (std::is_same_v<M, QhdModel>)
            dispersion = std::max(dispersion, 0.5 * m.epsilon);
          else if constexpr (std::is_same_v<M, LowerOrderModel>)
            sound += m.c_kappa * m.alpha * r;
        },
        spec.model.variant());
    c2 = std::max(c2, sound);
  }
  double bound = dx / (umax + std::sqrt(std::max(c2, 0.0)) + 1e-300);
  if (spec.viscous())
    bound = std::min(bound, dx * dx * rmin / (std::abs(spec.lambda) + 2 * spec.mu));
  if (dispersion > 0) bound = std::min(bound, dx * dx / dispersion);
  return spec.c_cfl * bound;
}

namespace {

State advance(const State& s, double a, const Rate& r) {
  State out{s.rho + a * r.drho, s.m + a * r.dm, s.time + a,
            s.dissipated + a * r.ddissipated};
  return out;
}

State blend(double wa, const State& a, double wb, const State& b) {
  return State{wa * a.rho + wb * b.rho, wa * a.m + wb * b.m, wa * a.time + wb * b.time,
               wa * a.dissipated + wb * b.dissipated};
}

}  // namespace

State step(const SystemSpec& spec, const State& s, double dt) {
  if (spec.integrator == Integrator::RK4) {
    const Rate k1 = rhs(spec, s);
    const Rate k2 = rhs(spec, advance(s, 0.5 * dt, k1));
    const Rate k3 = rhs(spec, advance(s, 0.5 * dt, k2));
    const Rate k4 = rhs(spec, advance(s, dt, k3));
    State out{s.rho + (dt / 6) * (k1.drho + 2.0 * k2.drho + 2.0 * k3.drho + k4.drho),
              s.m + (dt / 6) * (k1.dm + 2.0 * k2.dm + 2.0 * k3.dm + k4.dm), s.time + dt,
              s.dissipated + dt / 6 *
                                 (k1.ddissipated + 2 * k2.ddissipated + 2 * k3.ddissipated +
                                  k4.ddissipated)};
    return out;
  }
  const State u1 = advance(s, dt, rhs(spec, s));
  const State u2 = blend(0.75, s, 0.25, advance(u1, dt, rhs(spec, u1)));
  State out = blend(1.0 / 3, s, 2.0 / 3, advance(u2, dt, rhs(spec, u2)));
  out.time = s.time + dt;
  return out;
}

Trajectory integrate(const SystemSpec& spec, const State& s0,
                     const std::vector<Observer>& observers, bool record) {
  spec.validate(s0.rho.grid().dim());
  const double bound = stable_dt(spec, s0);
  const auto steps = static_cast<std::size_t>(std::ceil(spec.t_end / spec.dt - 1e-9));
  const double dt = spec.t_end / steps;
  if (dt > bound) {
    std::ostringstream os;
    os << "dt = " << dt << " exceeds the stability bound " << bound
       << " (raise c_cfl to override)";
    fail(ErrorCode::Config, os.str());
  }

  Trajectory traj;
  traj.dt = dt;
  traj.steps = steps;
  auto emit = [&](const State& s, std::size_t n) {
    for (const auto& ob : observers) ob(s, n);
    if (record || n == 0 || n == steps) traj.samples.push_back(s);
  };
  State s = s0;
  emit(s, 0);
  for (std::size_t n = 1; n <= steps; ++n) {
    try {
      s = step(spec, s, dt);
      if (n == steps) s.time = s0.time + spec.t_end;
      bool finite = s.rho.all_finite();
      for (int i = 0; i < s.m.dim(); ++i) finite = finite && s.m[i].all_finite();
      require(finite, ErrorCode::NonFinite, "state is not finite");
      spec.model.band().check(s.rho);
    } catch (const Error& e) {
      std::ostringstream os;
      os << e.what() << " (t = " << s.time << ", step " << n << ")";
      throw Error(e.code(), os.str());
    }
    if (n % spec.observe_every == 0 || n == steps) emit(s, n);
  }
  return traj;
}

}  // namespace kortlab
