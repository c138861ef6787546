#pragma once

// Conservative-variable right-hand sides for the potential-energy Euler
// family and explicit Runge-Kutta time stepping.

#include <cstddef>
#include <functional>
#include <vector>

#include "kortlab/energy_models.hpp"

namespace kortlab {

enum class SystemKind { EulerKorteweg, NavierStokesKorteweg, QuantumHydrodynamics, EulerPoisson, LowerOrder };
enum class Integrator { RK4, SSPRK3 };
enum class ForceForm { Conservative, Primitive };

const char* to_string(SystemKind k);
const char* to_string(Integrator k);

struct SystemSpec {
  SystemKind system = SystemKind::EulerKorteweg;
  EnergyModel model;
  double zeta = 0;    // friction
  double lambda = 0;  // bulk viscosity
  double mu = 0;      // shear viscosity
  double dt = 1e-3;
  double t_end = 1.0;
  Integrator integrator = Integrator::RK4;
  ForceForm force_form = ForceForm::Conservative;
  double c_cfl = 0.3;
  int observe_every = 1;

  // Throws Config on incompatible system/model pairs or invalid parameters.
  void validate(int dim) const;
  bool viscous() const { return lambda != 0 || mu != 0; }
};

// dissipated accumulates int_0^t (zeta int rho|u|^2 + int sigma[u]:grad u).
struct State {
  ScalarField rho;
  VectorField m;
  double time = 0;
  double dissipated = 0;
};

struct Rate {
  ScalarField drho;
  VectorField dm;
  double ddissipated = 0;
};

// Checks the band and finiteness; returns u = m / rho.
VectorField velocity(const EnergyModel& model, const State& s);

TensorField viscous_stress(const VectorField& u, double lambda, double mu);
ScalarField viscous_dissipation(const VectorField& u, double lambda, double mu);

Rate rhs(const SystemSpec& spec, const State& s);

double kinetic_energy(const State& s);
double total_energy(const SystemSpec& spec, const State& s);

// c_cfl * min(dx / (|u| + c_s), dx^2 / nu_eff, dx^2 / dispersion scale)
double stable_dt(const SystemSpec& spec, const State& s);

State step(const SystemSpec& spec, const State& s, double dt);

using Observer = std::function<void(const State&, std::size_t step)>;

struct Trajectory {
  std::vector<State> samples;  // every observe_every steps, first and last included
  double dt = 0;               // step actually used (t_end / steps)
  std::size_t steps = 0;
};

// Advances s0 to t_end in equal steps no larger than spec.dt. Observers run
// on every sample. Aborts with Vacuum/NonFinite naming the failing time.
Trajectory integrate(const SystemSpec& spec, const State& s0,
                     const std::vector<Observer>& observers = {}, bool record = true);

}  // namespace kortlab
