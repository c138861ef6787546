#pragma once

// Energy functionals E(rho) = int F(rho, grad rho) and their derived
// quantities: variational derivatives, pressures, stresses and Taylor
// remainders ("relative" functions) about a reference state.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "kortlab/torus_field.hpp"

namespace kortlab {

struct DensityBand {
  double min = 1e-6;
  double max = 1e6;

  void check(double rho) const;
  void check(const ScalarField& rho) const;
};

// Internal energy density h(rho) with three derivatives; p = rho h' - h.
class LocalEnergy {
 public:
  struct GammaLaw {
    double k;
    double gamma;
  };
  // (rho - a)^2 (rho - b)^2 + c0 rho
  struct DoubleWell {
    double a;
    double b;
    double c0;
  };
  struct Custom {
    std::string name;
    std::function<double(double)> h, dh, d2h, d3h;
  };
  using Form = std::variant<GammaLaw, DoubleWell, Custom>;

  static LocalEnergy gamma_law(double k, double gamma);
  static LocalEnergy double_well(double a, double b, double c0);
  static LocalEnergy custom(Custom c);

  double h(double rho) const;
  double dh(double rho) const;
  double d2h(double rho) const;
  double d3h(double rho) const;
  double p(double rho) const;
  double dp(double rho) const;
  double d2p(double rho) const;

  const Form& form() const { return form_; }
  std::string label() const;

 private:
  explicit LocalEnergy(Form f) : form_(std::move(f)) {}
  Form form_;
};

// Capillarity coefficient kappa(rho) with two derivatives.
class Capillarity {
 public:
  struct Constant {
    double c;
  };
  // eps^2 / (4 rho)
  struct Qhd {
    double epsilon;
  };
  // c0 + c2 rho^2
  struct Quadratic {
    double c0;
    double c2;
  };
  // a + b / rho
  struct Rational {
    double a;
    double b;
  };
  struct Custom {
    std::string name;
    std::function<double(double)> k, dk, d2k;
  };
  using Form = std::variant<Constant, Qhd, Quadratic, Rational, Custom>;

  static Capillarity constant(double c);
  static Capillarity qhd(double epsilon);
  static Capillarity quadratic(double c0, double c2);
  static Capillarity rational(double a, double b);
  static Capillarity custom(Custom c);

  double k(double rho) const;
  double dk(double rho) const;
  double d2k(double rho) const;
  // A = (rho k' + k)/2 and B = rho k, the coefficients of s and r.
  double a(double rho) const { return 0.5 * (rho * dk(rho) + k(rho)); }
  double da(double rho) const { return 0.5 * (rho * d2k(rho) + 2 * dk(rho)); }
  double b(double rho) const { return rho * k(rho); }
  double db(double rho) const { return k(rho) + rho * dk(rho); }

  const Form& form() const { return form_; }
  std::string label() const;

 private:
  explicit Capillarity(Form f) : form_(std::move(f)) {}
  Form form_;
};

struct KortewegModel {
  LocalEnergy local;
  Capillarity cap;
};
struct QhdModel {
  LocalEnergy local;
  double epsilon;
};
struct EulerPoissonModel {
  LocalEnergy local;
  double beta;
};
struct LowerOrderModel {
  LocalEnergy local;
  double c_kappa;
  double alpha;
};

class EnergyModel {
 public:
  using Variant =
      std::variant<KortewegModel, QhdModel, EulerPoissonModel, LowerOrderModel>;

  EnergyModel(Variant v, DensityBand band = {});

  const Variant& variant() const { return v_; }
  const DensityBand& band() const { return band_; }
  const LocalEnergy& local() const;
  std::string kind() const;
  // h + kappa |q|^2 / 2 view; QHD maps to kappa = eps^2/(4 rho).
  std::optional<KortewegModel> korteweg_form() const;

 private:
  Variant v_;
  DensityBand band_;
};

double pressure(const LocalEnergy& local, double rho);

// Elliptic potential c of Euler-Poisson and lower-order models.
ScalarField potential_field(const EnergyModel& model, const ScalarField& rho);

double energy_total(const EnergyModel& model, const ScalarField& rho);
// Three algebraically equal expressions of the lower-order energy (form 1, 2, 3).
double lower_order_energy(const LowerOrderModel& model, const ScalarField& rho,
                          int form);
ScalarField energy_density(const KortewegModel& model, const ScalarField& rho);

ScalarField variational_derivative(const EnergyModel& model, const ScalarField& rho);
TensorField stress_tensor(const EnergyModel& model, const ScalarField& rho);
// Directional derivative of the stress at rho along psi.
TensorField stress_variation(const EnergyModel& model, const ScalarField& rho,
                             const ScalarField& psi);
// Quadrature of the Hessian bilinear form of E at rho.
double second_variation(const EnergyModel& model, const ScalarField& rho,
                        const ScalarField& psi, const ScalarField& phi);

// Noether residual max|rho grad(dE/drho) + div S| / max|div S|.
double noether_residual(const EnergyModel& model, const ScalarField& rho);

// ---------------------------------------------------------------------------
// Taylor remainders g(rho, q | rho_bar, q_bar) for the h + kappa|q|^2/2 family.

enum class Constituent { H, P, S, Kappa, A, B };

double relative_scalar(Constituent g, const KortewegModel& model, double rho,
                       std::span<const double> q, double rho_bar,
                       std::span<const double> q_bar);
// F(rho, q | rho_bar, q_bar)
double relative_density(const KortewegModel& model, double rho,
                        std::span<const double> q, double rho_bar,
                        std::span<const double> q_bar);
// r = rho kappa q
std::vector<double> relative_r(const KortewegModel& model, double rho,
                               std::span<const double> q, double rho_bar,
                               std::span<const double> q_bar);
// H = kappa q (x) q, row-major
std::vector<double> relative_h_tensor(const KortewegModel& model, double rho,
                                      std::span<const double> q, double rho_bar,
                                      std::span<const double> q_bar);

// Pointwise remainders evaluated with q = grad rho.
ScalarField relative_scalar_field(Constituent g, const KortewegModel& model,
                                  const ScalarField& rho, const ScalarField& rho_bar);
ScalarField relative_density_field(const KortewegModel& model, const ScalarField& rho,
                                   const ScalarField& rho_bar);
VectorField relative_r_field(const KortewegModel& model, const ScalarField& rho,
                             const ScalarField& rho_bar);
TensorField relative_h_field(const KortewegModel& model, const ScalarField& rho,
                             const ScalarField& rho_bar);

// S(rho) - S(rho_bar) - dS(rho_bar; rho - rho_bar)
TensorField relative_stress(const EnergyModel& model, const ScalarField& rho,
                            const ScalarField& rho_bar);
// Same quantity assembled from model-specific closed forms
// (-s + div r) I - H for the Korteweg family, potential differences otherwise.
TensorField relative_stress_specialized(const EnergyModel& model,
                                        const ScalarField& rho,
                                        const ScalarField& rho_bar);

// ---------------------------------------------------------------------------

struct ConvexityReport {
  double min_h2 = 0;         // min h''
  double min_kappa = 0;      // min kappa
  double min_h4c = 0;        // min kappa kappa'' - 2 kappa'^2
  double min_h4uc = 0;       // min kappa - 2 kappa'^2/kappa'' (if kappa'' > 0)
  double min_d2kappa = 0;    // min kappa''
  double min_hessian_eig = 0;
  double decomposition_residual = 0;
  bool local_convex = false;       // h'' > 0
  bool capillarity_positive = false;
  bool h4c = false;                // strict convexity hypothesis
  bool h4uc = false;               // uniform convexity hypothesis
  bool hessian_positive = false;   // sampled Hessian eigenvalues > 0
};

// Samples rho over the band (geometric spacing) and |q| <= q_max.
ConvexityReport check_convexity(const Capillarity& cap, const LocalEnergy& local,
                                const DensityBand& band, int samples = 200,
                                double q_max = 10.0, int dim = 1);

// Eigenvalues of the Hessian of m^2/(2 rho) in (rho, m), ascending.
std::vector<double> kinetic_hessian_eigenvalues(double rho, std::span<const double> m);
// a^2 (.) b form through the explicit Hessian and through (1/rho)|(m/rho)a - b|^2.
std::pair<double, double> kinetic_quadratic_form(double rho, std::span<const double> m,
                                                 double a, std::span<const double> b);

}  // namespace kortlab
