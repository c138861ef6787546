#pragma once

// Relative energies between two states, the right-hand side of the relative
// energy identity, rate-term decompositions of the reduced relative energy
// and the pointwise transport identity with its flux.
//
// In every two-state function the second argument is the reference
// ("strong") state; its velocity is the one differentiated.

#include <array>
#include <map>
#include <string>
#include <vector>

#include "kortlab/dynamics.hpp"

namespace kortlab {

// int 1/2 rho |m/rho - mb/rhob|^2
double relative_kinetic(const State& s, const State& sb);
// Same quantity as the Taylor remainder of k(rho, m) = |m|^2 / (2 rho).
double relative_kinetic_bregman(const State& s, const State& sb);

struct RelativePotential {
  double value = 0;     // full relative potential energy
  double electric = 0;  // Euler-Poisson part -1/2 int (rho - rhob) K (rho - rhob); else 0
  double local = 0;     // int h(rho | rhob)
};

RelativePotential relative_potential_parts(const EnergyModel& model, const ScalarField& rho,
                                           const ScalarField& rho_bar);
double relative_potential(const EnergyModel& model, const ScalarField& rho,
                          const ScalarField& rho_bar);
// E(rho) - E(rhob) - <dE/drho(rhob), rho - rhob>
double relative_potential_bregman(const EnergyModel& model, const ScalarField& rho,
                                  const ScalarField& rho_bar);

struct IdentityRhs {
  double abstract = 0;     // through the relative stress tensor
  double specialized = 0;  // through s, r, H (Korteweg) or the closed relative stress
};

// d/dt (relative kinetic + relative potential) for two solutions of `spec`,
// including friction and viscous contributions.
IdentityRhs identity_rhs(const SystemSpec& spec, const State& s, const State& sb);

// Relative energy with the local part int h(rho | rhob) removed.
double reduced_relative_energy(const EnergyModel& model, const State& s, const State& sb);

// Lower-order state against the NSK reference state.
struct ReducedLowerOrder {
  double gradient = 0;  // C/2 |grad(c - rho)|^2
  double coupling = 0;  // alpha C/2 |rho_lo - c|^2
  double kinetic = 0;   // rho_lo/2 |u - u_lo|^2
  double total() const { return gradient + coupling + kinetic; }
};
ReducedLowerOrder reduced_relative_energy_lo(const State& nsk, const State& lo,
                                             double c_kappa, double alpha);
// Relative energy of the lower-order state with respect to NSK, local part included.
double relative_energy_lo(const LocalEnergy& local, const State& nsk, const State& lo,
                          double c_kappa, double alpha);

// Integrated rate terms. For two frictionless, inviscid constant-capillarity
// Euler-Korteweg solutions: sum of the first four is d/dt of the relative
// energy, all six give d/dt of the reduced relative energy.
std::array<double, 6> rate_terms_nsk(const State& s, const State& sb, const LocalEnergy& local,
                                     double c_kappa);

// Lower-order state `lo` against NSK reference `nsk` with shared viscosities.
// Terms 1..6 give d/dt of relative_energy_lo, 1..8 of the reduced version.
std::array<double, 8> rate_terms_lo(const State& nsk, const State& lo, const LocalEnergy& local,
                                    double c_kappa, double alpha, double lambda, double mu);

// Yardsticks for twin-stability runs.
enum class TwinDistance {
  RelativeTotal,  // relative kinetic + relative potential
  H1,             // relative kinetic + |rho - rhob|^2 + |grad(rho - rhob)|^2
  Qhd,            // relative kinetic + h(|) + 1/2 rho |grad rho/rho - grad rhob/rhob|^2
  Reduced,        // reduced_relative_energy
};
const char* to_string(TwinDistance d);
double twin_distance(TwinDistance d, const EnergyModel& model, const State& s, const State& sb);

struct RelativeEnergyReport {
  double time = 0;
  double rel_kinetic = 0;
  double rel_potential = 0;
  double rel_electric = 0;
  double rel_total = 0;
  double reduced = 0;
  double lhs_rate = 0;
  double rhs_value = 0;
  double residual = 0;
  std::map<std::string, double> terms;
};

RelativeEnergyReport relative_energy_snapshot(const SystemSpec& spec, const State& s,
                                              const State& sb);

// Central-difference rate of rel_total against identity_rhs at every interior
// sample. Both trajectories must share their sample times.
std::vector<RelativeEnergyReport> identity_residual(const SystemSpec& spec,
                                                    const std::vector<State>& traj,
                                                    const std::vector<State>& traj_bar);

// Relative energy flux (transport part included) and the pointwise residual
// of the local relative energy identity at the middle of three equally spaced
// samples of two frictionless, inviscid Euler-Korteweg solutions.
VectorField relative_flux(const KortewegModel& model, const State& s, const State& sb);

struct LocalIdentity {
  ScalarField residual;
  VectorField flux;
  double flux_divergence_integral = 0;  // int div(flux)
  double flux_scale = 0;                // max |flux|
  double rate_scale = 0;                // max |d/dt density|
};
LocalIdentity local_identity(const KortewegModel& model, const std::array<State, 3>& s,
                             const std::array<State, 3>& sb);

// t, rel_kinetic, rel_potential, rel_total, reduced, lhs_rate, rhs_value,
// residual, A1..A8 (blank when absent).
void write_relative_energy_csv(const std::string& path,
                               const std::vector<RelativeEnergyReport>& rows);

}  // namespace kortlab
