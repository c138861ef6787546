#pragma once

// Finite-difference and fitting oracles. These only evaluate the functionals
// they are handed, never the analytic derivatives they are used to check.

#include <functional>
#include <vector>

#include "kortlab/torus_field.hpp"

namespace kortlab {

using Functional = std::function<double(const ScalarField&)>;

struct ConvergenceFit {
  std::vector<double> xs;
  std::vector<double> errors;
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
};

// Least squares of log(error) against log(x).
ConvergenceFit fit_rate(const std::vector<double>& xs, const std::vector<double>& errors);

// Default step sqrt(machine epsilon) * scale.
double default_step(double scale = 1.0);

// (E(rho + tau psi) - E(rho - tau psi)) / (2 tau)
double gateaux_fd(const Functional& energy, const ScalarField& rho,
                  const ScalarField& psi, double tau);

// Central difference in direction phi of the Gateaux oracle along psi.
double second_variation_fd(const Functional& energy, const ScalarField& rho,
                           const ScalarField& psi, const ScalarField& phi, double eps,
                           double tau);

// |fn(s)| for each scale s, fitted against s; fn(s) is the remainder at
// base + s * direction.
ConvergenceFit remainder_order(const std::function<double(double)>& fn,
                               const std::vector<double>& scales);

}  // namespace kortlab
