#pragma once

// Periodic-torus fields and Fourier-spectral operators.

#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kortlab/error.hpp"

namespace kortlab {

class TorusGrid;
using GridPtr = std::shared_ptr<const TorusGrid>;
using Complex = std::complex<double>;

class TorusGrid {
 public:
  static GridPtr create(int dim, int points_per_axis, double period,
                        bool dealias = true);
  ~TorusGrid();
  TorusGrid(const TorusGrid&) = delete;
  TorusGrid& operator=(const TorusGrid&) = delete;

  int dim() const { return dim_; }
  int n() const { return n_; }
  double period() const { return period_; }
  bool dealias() const { return dealias_; }
  std::size_t size() const { return size_; }
  std::size_t spectral_size() const { return spectral_size_; }
  double spacing() const { return period_ / n_; }
  double cell_volume() const;
  double volume() const;

  // Coordinate of sample `flat` along `axis`; row-major, last axis fastest.
  double coordinate(std::size_t flat, int axis) const;
  bool same_shape(const TorusGrid& other) const;

  // Half-complex spectrum of size spectral_size(), unnormalized.
  void forward(std::span<const double> in, std::span<Complex> out) const;
  // Consumes `in`; result divided by size().
  void inverse(std::span<Complex> in, std::span<double> out) const;

  // Wavenumber 2*pi*j/L of spectral index `s` along `axis`, j in (-N/2, N/2].
  double wavenumber(std::size_t s, int axis) const {
    return wavenumbers_[axis][s];
  }
  bool nyquist(std::size_t s, int axis) const { return nyquist_[axis][s]; }
  double wavenumber_squared(std::size_t s) const { return k2_[s]; }
  // True for modes removed by the 2/3 rule.
  bool truncated(std::size_t s) const { return truncated_[s]; }

 private:
  TorusGrid(int dim, int n, double period, bool dealias);
  struct Plans;

  int dim_;
  int n_;
  double period_;
  bool dealias_;
  std::size_t size_;
  std::size_t spectral_size_;
  std::vector<std::vector<double>> wavenumbers_;
  std::vector<std::vector<bool>> nyquist_;
  std::vector<double> k2_;
  std::vector<bool> truncated_;
  std::unique_ptr<Plans> plans_;
};

class ScalarField {
 public:
  ScalarField(GridPtr grid, std::vector<double> values);
  static ScalarField constant(GridPtr grid, double value);
  static ScalarField from_function(
      GridPtr grid, const std::function<double(std::span<const double>)>& f);

  const TorusGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  template <class F>
  ScalarField map(F&& f) const {
    std::vector<double> out(values_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(values_[i]);
    return ScalarField(grid_, std::move(out), Unchecked{});
  }
  template <class F>
  ScalarField zip(const ScalarField& other, F&& f) const {
    check_same_grid(other);
    std::vector<double> out(values_.size());
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = f(values_[i], other.values_[i]);
    return ScalarField(grid_, std::move(out), Unchecked{});
  }

  void check_same_grid(const ScalarField& other) const;
  bool all_finite() const;
  double min() const;
  double max() const;

  ScalarField operator-() const;
  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(const ScalarField& o);
  ScalarField& operator*=(double a);

  struct Unchecked {};
  ScalarField(GridPtr grid, std::vector<double> values, Unchecked);

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(ScalarField a, const ScalarField& b);
ScalarField operator/(const ScalarField& a, const ScalarField& b);
ScalarField operator*(double a, ScalarField f);
ScalarField operator*(ScalarField f, double a);
ScalarField operator+(ScalarField f, double a);
ScalarField operator-(ScalarField f, double a);

struct VectorField {
  std::vector<ScalarField> components;

  static VectorField zeros(const GridPtr& grid);
  int dim() const { return static_cast<int>(components.size()); }
  const ScalarField& operator[](int i) const { return components[i]; }
  ScalarField& operator[](int i) { return components[i]; }
  const GridPtr& grid_ptr() const { return components.front().grid_ptr(); }
};

VectorField operator+(const VectorField& a, const VectorField& b);
VectorField operator-(const VectorField& a, const VectorField& b);
VectorField operator*(const ScalarField& f, const VectorField& v);
VectorField operator*(double a, const VectorField& v);
VectorField operator/(const VectorField& v, const ScalarField& f);

// dim x dim components, row-major.
struct TensorField {
  int dim = 0;
  std::vector<ScalarField> components;
  bool symmetric = false;

  static TensorField zeros(const GridPtr& grid);
  static TensorField isotropic(const ScalarField& f);
  const ScalarField& operator()(int i, int j) const {
    return components[i * dim + j];
  }
  ScalarField& operator()(int i, int j) { return components[i * dim + j]; }
  const GridPtr& grid_ptr() const { return components.front().grid_ptr(); }
};

TensorField operator+(const TensorField& a, const TensorField& b);
TensorField operator-(const TensorField& a, const TensorField& b);
TensorField operator*(double a, const TensorField& t);
TensorField operator*(const ScalarField& f, const TensorField& t);

ScalarField dot(const VectorField& a, const VectorField& b);
TensorField outer(const VectorField& a, const VectorField& b);
ScalarField double_dot(const TensorField& a, const TensorField& b);
VectorField apply(const TensorField& t, const VectorField& v);
ScalarField trace(const TensorField& t);

// Spectral operators.
ScalarField partial(const ScalarField& f, int axis);
VectorField gradient(const ScalarField& f);
ScalarField divergence(const VectorField& v);
ScalarField laplacian(const ScalarField& f);
VectorField grad_div(const VectorField& v);
VectorField grad_laplacian(const ScalarField& f);
// (grad v)_{ij} = d_j v_i
TensorField jacobian(const VectorField& v);
// (div T)_i = sum_j d_j T_ij
VectorField divergence(const TensorField& t);
// sqrt of the summed squared L2 norms of all second derivatives.
double h2_seminorm(const ScalarField& f);

ScalarField helmholtz_inverse(const ScalarField& f, double alpha);
ScalarField screened_poisson_mean_free(const ScalarField& rho, double beta);
ScalarField dealias_filter(const ScalarField& f);
VectorField dealias_filter(const VectorField& v);

double integrate(const ScalarField& f);
double mean(const ScalarField& f);
double inner(const ScalarField& f, const ScalarField& g);
double l2_norm(const ScalarField& f);
double l2_norm(const VectorField& v);
double h1_seminorm(const ScalarField& f);
double linf_norm(const ScalarField& f);
double linf_norm(const VectorField& v);
std::vector<double> integrate(const VectorField& v);

// Snapshot: <dir>/<stem>.json header plus <dir>/<stem>.<field>.bin per field.
struct Snapshot {
  GridPtr grid;
  double time = 0.0;
  std::vector<std::pair<std::string, ScalarField>> fields;
};

void write_snapshot(const std::string& dir, const std::string& stem,
                    const Snapshot& snap);
Snapshot read_snapshot(const std::string& dir, const std::string& stem,
                       bool dealias = true);

}  // namespace kortlab
