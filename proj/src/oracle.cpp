#include "kortlab/oracle.hpp"

#include <cmath>
#include <limits>

namespace kortlab {

ConvergenceFit fit_rate(const std::vector<double>& xs, const std::vector<double>& errors) {
  require(xs.size() == errors.size(), ErrorCode::InvalidArgument,
          "fit_rate: xs and errors differ in length");
  require(xs.size() >= 3, ErrorCode::DegenerateFit, "fit_rate needs at least 3 points");
  for (std::size_t i = 0; i < xs.size(); ++i)
    require(xs[i] > 0 && errors[i] > 0 && std::isfinite(xs[i]) && std::isfinite(errors[i]),
            ErrorCode::InvalidArgument, "fit_rate needs positive finite inputs");
  const bool up = xs[1] > xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i)
    require(up ? xs[i] > xs[i - 1] : xs[i] < xs[i - 1], ErrorCode::InvalidArgument,
            "fit_rate needs strictly monotone xs");

  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += std::log(xs[i]);
    sy += std::log(errors[i]);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = std::log(xs[i]) - mx, dy = std::log(errors[i]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  ConvergenceFit fit{xs, errors};
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return fit;
}

double default_step(double scale) {
  return std::sqrt(std::numeric_limits<double>::epsilon()) * scale;
}

double gateaux_fd(const Functional& energy, const ScalarField& rho,
                  const ScalarField& psi, double tau) {
  require(tau > 0, ErrorCode::InvalidArgument, "gateaux_fd needs tau > 0");
  if (linf_norm(psi) == 0.0) return 0.0;
  return (energy(rho + tau * psi) - energy(rho - tau * psi)) / (2 * tau);
}

double second_variation_fd(const Functional& energy, const ScalarField& rho,
                           const ScalarField& psi, const ScalarField& phi, double eps,
                           double tau) {
  require(eps > 0, ErrorCode::InvalidArgument, "second_variation_fd needs eps > 0");
  if (linf_norm(phi) == 0.0 || linf_norm(psi) == 0.0) return 0.0;
  return (gateaux_fd(energy, rho + eps * phi, psi, tau) -
          gateaux_fd(energy, rho - eps * phi, psi, tau)) /
         (2 * eps);
}

ConvergenceFit remainder_order(const std::function<double(double)>& fn,
                               const std::vector<double>& scales) {
  require(scales.size() >= 3, ErrorCode::DegenerateFit,
          "remainder_order needs at least 3 scales");
  std::vector<double> errs;
  for (double s : scales) errs.push_back(std::abs(fn(s)));
  return fit_rate(scales, errs);
}

}  // namespace kortlab
