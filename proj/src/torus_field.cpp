#include "kortlab/torus_field.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>
#include <json.hpp>

namespace kortlab {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::GridMismatch: return "grid mismatch";
    case ErrorCode::Domain: return "domain error";
    case ErrorCode::Vacuum: return "vacuum";
    case ErrorCode::NonFinite: return "non-finite value";
    case ErrorCode::Config: return "configuration error";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::InsufficientData: return "insufficient data";
    case ErrorCode::DegenerateFit: return "degenerate fit";
  }
  return "unknown";
}

namespace {
// The FFTW planner is not thread-safe; execution with new-array calls is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct TorusGrid::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
  }
};

GridPtr TorusGrid::create(int dim, int points_per_axis, double period,
                          bool dealias) {
  require(dim >= 1 && dim <= 3, ErrorCode::InvalidArgument,
          "grid dimension must be 1, 2 or 3");
  require(points_per_axis >= 8 && points_per_axis % 2 == 0,
          ErrorCode::InvalidArgument, "points per axis must be even and >= 8");
  require(std::isfinite(period) && period > 0, ErrorCode::InvalidArgument,
          "period must be positive");
  return GridPtr(new TorusGrid(dim, points_per_axis, period, dealias));
}

TorusGrid::TorusGrid(int dim, int n, double period, bool dealias)
    : dim_(dim), n_(n), period_(period), dealias_(dealias) {
  size_ = 1;
  for (int a = 0; a < dim; ++a) size_ *= n;
  spectral_size_ = size_ / n * (n / 2 + 1);

  const double k0 = 2 * std::numbers::pi / period;
  wavenumbers_.assign(dim, std::vector<double>(spectral_size_));
  nyquist_.assign(dim, std::vector<bool>(spectral_size_));
  k2_.assign(spectral_size_, 0.0);
  truncated_.assign(spectral_size_, false);
  const int last = n / 2 + 1;
  for (std::size_t s = 0; s < spectral_size_; ++s) {
    std::size_t rest = s;
    for (int a = dim - 1; a >= 0; --a) {
      const int extent = a == dim - 1 ? last : n;
      const int j = static_cast<int>(rest % extent);
      rest /= extent;
      const int signed_j = j <= n / 2 ? j : j - n;
      wavenumbers_[a][s] = k0 * signed_j;
      nyquist_[a][s] = j == n / 2;
      k2_[s] += wavenumbers_[a][s] * wavenumbers_[a][s];
      if (3 * std::abs(signed_j) > n) truncated_[s] = true;
    }
  }

  std::vector<int> shape(dim, n);
  std::vector<double> rbuf(size_);
  std::vector<Complex> cbuf(spectral_size_);
  auto* c = reinterpret_cast<fftw_complex*>(cbuf.data());
  plans_ = std::make_unique<Plans>();
  std::lock_guard lock(planner_mutex());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plans_->r2c = fftw_plan_dft_r2c(dim, shape.data(), rbuf.data(), c, flags);
  plans_->c2r = fftw_plan_dft_c2r(dim, shape.data(), c, rbuf.data(), flags);
  if (!plans_->r2c || !plans_->c2r)
    fail(ErrorCode::InvalidArgument, "FFT planning failed");
}

TorusGrid::~TorusGrid() = default;

double TorusGrid::cell_volume() const { return std::pow(spacing(), dim_); }
double TorusGrid::volume() const { return std::pow(period_, dim_); }

double TorusGrid::coordinate(std::size_t flat, int axis) const {
  std::size_t stride = 1;
  for (int a = dim_ - 1; a > axis; --a) stride *= n_;
  return spacing() * static_cast<double>((flat / stride) % n_);
}

bool TorusGrid::same_shape(const TorusGrid& o) const {
  return dim_ == o.dim_ && n_ == o.n_ && period_ == o.period_;
}

void TorusGrid::forward(std::span<const double> in, std::span<Complex> out) const {
  fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void TorusGrid::inverse(std::span<Complex> in, std::span<double> out) const {
  fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(in.data()),
                       out.data());
  const double scale = 1.0 / static_cast<double>(size_);
  for (double& v : out) v *= scale;
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  require(grid_ != nullptr, ErrorCode::InvalidArgument, "null grid");
  require(values_.size() == grid_->size(), ErrorCode::GridMismatch,
          "field length does not match grid size");
  require(all_finite(), ErrorCode::NonFinite, "field contains non-finite values");
}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values, Unchecked)
    : grid_(std::move(grid)), values_(std::move(values)) {}

ScalarField ScalarField::constant(GridPtr grid, double value) {
  const std::size_t n = grid->size();
  return ScalarField(std::move(grid), std::vector<double>(n, value));
}

ScalarField ScalarField::from_function(
    GridPtr grid, const std::function<double(std::span<const double>)>& f) {
  std::vector<double> v(grid->size());
  std::vector<double> x(grid->dim());
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (int a = 0; a < grid->dim(); ++a) x[a] = grid->coordinate(i, a);
    v[i] = f(x);
  }
  return ScalarField(std::move(grid), std::move(v));
}

void ScalarField::check_same_grid(const ScalarField& o) const {
  if (grid_ != o.grid_ && !grid_->same_shape(*o.grid_))
    fail(ErrorCode::GridMismatch, "fields live on different grids");
}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

double ScalarField::min() const {
  return *std::min_element(values_.begin(), values_.end());
}
double ScalarField::max() const {
  return *std::max_element(values_.begin(), values_.end());
}

ScalarField ScalarField::operator-() const {
  return map([](double v) { return -v; });
}
ScalarField& ScalarField::operator+=(const ScalarField& o) {
  check_same_grid(o);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}
ScalarField& ScalarField::operator-=(const ScalarField& o) {
  check_same_grid(o);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}
ScalarField& ScalarField::operator*=(const ScalarField& o) {
  check_same_grid(o);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] *= o.values_[i];
  return *this;
}
ScalarField& ScalarField::operator*=(double a) {
  for (double& v : values_) v *= a;
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(ScalarField a, const ScalarField& b) { return a *= b; }
ScalarField operator/(const ScalarField& a, const ScalarField& b) {
  return a.zip(b, [](double x, double y) { return x / y; });
}
ScalarField operator*(double a, ScalarField f) { return f *= a; }
ScalarField operator*(ScalarField f, double a) { return f *= a; }
ScalarField operator+(ScalarField f, double a) {
  return f.map([a](double v) { return v + a; });
}
ScalarField operator-(ScalarField f, double a) {
  return f.map([a](double v) { return v - a; });
}

// ---------------------------------------------------------------------------

VectorField VectorField::zeros(const GridPtr& grid) {
  return VectorField{std::vector<ScalarField>(grid->dim(),
                                              ScalarField::constant(grid, 0.0))};
}

VectorField operator+(const VectorField& a, const VectorField& b) {
  VectorField r = a;
  for (int i = 0; i < r.dim(); ++i) r[i] += b[i];
  return r;
}
VectorField operator-(const VectorField& a, const VectorField& b) {
  VectorField r = a;
  for (int i = 0; i < r.dim(); ++i) r[i] -= b[i];
  return r;
}
VectorField operator*(const ScalarField& f, const VectorField& v) {
  VectorField r = v;
  for (int i = 0; i < r.dim(); ++i) r[i] *= f;
  return r;
}
VectorField operator*(double a, const VectorField& v) {
  VectorField r = v;
  for (int i = 0; i < r.dim(); ++i) r[i] *= a;
  return r;
}
VectorField operator/(const VectorField& v, const ScalarField& f) {
  VectorField r = v;
  for (int i = 0; i < r.dim(); ++i) r[i] = v[i] / f;
  return r;
}

TensorField TensorField::zeros(const GridPtr& grid) {
  const int d = grid->dim();
  return TensorField{d, std::vector<ScalarField>(d * d, ScalarField::constant(grid, 0.0)),
                     true};
}

TensorField TensorField::isotropic(const ScalarField& f) {
  TensorField t = zeros(f.grid_ptr());
  for (int i = 0; i < t.dim; ++i) t(i, i) = f;
  return t;
}

TensorField operator+(const TensorField& a, const TensorField& b) {
  TensorField r = a;
  for (std::size_t i = 0; i < r.components.size(); ++i) r.components[i] += b.components[i];
  r.symmetric = a.symmetric && b.symmetric;
  return r;
}
TensorField operator-(const TensorField& a, const TensorField& b) {
  TensorField r = a;
  for (std::size_t i = 0; i < r.components.size(); ++i) r.components[i] -= b.components[i];
  r.symmetric = a.symmetric && b.symmetric;
  return r;
}
TensorField operator*(double a, const TensorField& t) {
  TensorField r = t;
  for (auto& c : r.components) c *= a;
  return r;
}
TensorField operator*(const ScalarField& f, const TensorField& t) {
  TensorField r = t;
  for (auto& c : r.components) c *= f;
  return r;
}

ScalarField dot(const VectorField& a, const VectorField& b) {
  ScalarField r = a[0] * b[0];
  for (int i = 1; i < a.dim(); ++i) r += a[i] * b[i];
  return r;
}

TensorField outer(const VectorField& a, const VectorField& b) {
  const int d = a.dim();
  TensorField t{d, {}, false};
  t.components.reserve(d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) t.components.push_back(a[i] * b[j]);
  return t;
}

ScalarField double_dot(const TensorField& a, const TensorField& b) {
  ScalarField r = a.components[0] * b.components[0];
  for (std::size_t i = 1; i < a.components.size(); ++i)
    r += a.components[i] * b.components[i];
  return r;
}

VectorField apply(const TensorField& t, const VectorField& v) {
  VectorField r = v;
  for (int i = 0; i < t.dim; ++i) {
    ScalarField s = t(i, 0) * v[0];
    for (int j = 1; j < t.dim; ++j) s += t(i, j) * v[j];
    r[i] = std::move(s);
  }
  return r;
}

ScalarField trace(const TensorField& t) {
  ScalarField r = t(0, 0);
  for (int i = 1; i < t.dim; ++i) r += t(i, i);
  return r;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<Complex> spectrum(const ScalarField& f) {
  std::vector<Complex> out(f.grid().spectral_size());
  f.grid().forward(f.values(), out);
  return out;
}

ScalarField synthesize(const GridPtr& g, std::vector<Complex> spec) {
  std::vector<double> out(g->size());
  g->inverse(spec, out);
  return ScalarField(g, std::move(out), ScalarField::Unchecked{});
}

template <class Multiplier>
ScalarField spectral_apply(const ScalarField& f, Multiplier&& mult) {
  const TorusGrid& g = f.grid();
  auto spec = spectrum(f);
  for (std::size_t s = 0; s < spec.size(); ++s) spec[s] *= mult(g, s);
  return synthesize(f.grid_ptr(), std::move(spec));
}

const Complex I{0.0, 1.0};

}  // namespace

ScalarField partial(const ScalarField& f, int axis) {
  require(axis >= 0 && axis < f.grid().dim(), ErrorCode::InvalidArgument,
          "axis out of range");
  return spectral_apply(f, [axis](const TorusGrid& g, std::size_t s) -> Complex {
    if (g.nyquist(s, axis)) return 0.0;
    return I * g.wavenumber(s, axis);
  });
}

VectorField gradient(const ScalarField& f) {
  const TorusGrid& g = f.grid();
  auto spec = spectrum(f);
  VectorField out;
  for (int a = 0; a < g.dim(); ++a) {
    auto d = spec;
    for (std::size_t s = 0; s < d.size(); ++s)
      d[s] *= g.nyquist(s, a) ? Complex(0.0) : I * g.wavenumber(s, a);
    out.components.push_back(synthesize(f.grid_ptr(), std::move(d)));
  }
  return out;
}

ScalarField divergence(const VectorField& v) {
  const GridPtr& gp = v.grid_ptr();
  const TorusGrid& g = *gp;
  require(v.dim() == g.dim(), ErrorCode::GridMismatch, "vector dimension mismatch");
  std::vector<Complex> acc(g.spectral_size(), 0.0);
  for (int a = 0; a < g.dim(); ++a) {
    v[0].check_same_grid(v[a]);
    auto spec = spectrum(v[a]);
    for (std::size_t s = 0; s < acc.size(); ++s)
      if (!g.nyquist(s, a)) acc[s] += I * g.wavenumber(s, a) * spec[s];
  }
  return synthesize(gp, std::move(acc));
}

ScalarField laplacian(const ScalarField& f) {
  return spectral_apply(f, [](const TorusGrid& g, std::size_t s) -> Complex {
    return -g.wavenumber_squared(s);
  });
}

VectorField grad_div(const VectorField& v) {
  const GridPtr& gp = v.grid_ptr();
  const TorusGrid& g = *gp;
  std::vector<std::vector<Complex>> specs;
  for (int a = 0; a < g.dim(); ++a) specs.push_back(spectrum(v[a]));
  VectorField out;
  for (int i = 0; i < g.dim(); ++i) {
    std::vector<Complex> acc(g.spectral_size(), 0.0);
    for (int j = 0; j < g.dim(); ++j)
      for (std::size_t s = 0; s < acc.size(); ++s) {
        if (i != j && (g.nyquist(s, i) || g.nyquist(s, j))) continue;
        acc[s] -= g.wavenumber(s, i) * g.wavenumber(s, j) * specs[j][s];
      }
    out.components.push_back(synthesize(gp, std::move(acc)));
  }
  return out;
}

VectorField grad_laplacian(const ScalarField& f) {
  const TorusGrid& g = f.grid();
  auto spec = spectrum(f);
  VectorField out;
  for (int a = 0; a < g.dim(); ++a) {
    auto d = spec;
    for (std::size_t s = 0; s < d.size(); ++s)
      d[s] *= g.nyquist(s, a) ? Complex(0.0)
                              : -I * g.wavenumber(s, a) * g.wavenumber_squared(s);
    out.components.push_back(synthesize(f.grid_ptr(), std::move(d)));
  }
  return out;
}

TensorField jacobian(const VectorField& v) {
  const int d = v.dim();
  TensorField t{d, {}, false};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) t.components.push_back(partial(v[i], j));
  return t;
}

VectorField divergence(const TensorField& t) {
  VectorField out;
  for (int i = 0; i < t.dim; ++i) {
    VectorField row;
    for (int j = 0; j < t.dim; ++j) row.components.push_back(t(i, j));
    out.components.push_back(divergence(row));
  }
  return out;
}

double h2_seminorm(const ScalarField& f) {
  const TorusGrid& g = f.grid();
  auto spec = spectrum(f);
  double sum = 0;
  for (int i = 0; i < g.dim(); ++i)
    for (int j = 0; j < g.dim(); ++j) {
      auto d = spec;
      for (std::size_t s = 0; s < d.size(); ++s) {
        const bool odd = i != j && (g.nyquist(s, i) || g.nyquist(s, j));
        d[s] *= odd ? 0.0 : -g.wavenumber(s, i) * g.wavenumber(s, j);
      }
      const double n = l2_norm(synthesize(f.grid_ptr(), std::move(d)));
      sum += n * n;
    }
  return std::sqrt(sum);
}

ScalarField helmholtz_inverse(const ScalarField& f, double alpha) {
  require(std::isfinite(alpha) && alpha > 0, ErrorCode::InvalidArgument,
          "helmholtz parameter alpha must be positive");
  return spectral_apply(f, [alpha](const TorusGrid& g, std::size_t s) -> Complex {
    return 1.0 / (1.0 + g.wavenumber_squared(s) / alpha);
  });
}

ScalarField screened_poisson_mean_free(const ScalarField& rho, double beta) {
  require(std::isfinite(beta) && beta >= 0, ErrorCode::InvalidArgument,
          "screening parameter beta must be nonnegative");
  return spectral_apply(rho, [beta](const TorusGrid& g, std::size_t s) -> Complex {
    if (s == 0) return 0.0;
    return 1.0 / (g.wavenumber_squared(s) + beta);
  });
}

ScalarField dealias_filter(const ScalarField& f) {
  if (!f.grid().dealias()) return f;
  return spectral_apply(f, [](const TorusGrid& g, std::size_t s) -> Complex {
    return g.truncated(s) ? 0.0 : 1.0;
  });
}

VectorField dealias_filter(const VectorField& v) {
  VectorField r;
  for (const auto& c : v.components) r.components.push_back(dealias_filter(c));
  return r;
}

// Sums accumulate in extended precision so energy budgets resolve below
// the double round-off of a plain loop.
double integrate(const ScalarField& f) {
  long double s = 0;
  for (double v : f.values()) s += v;
  return static_cast<double>(s * f.grid().cell_volume());
}

double mean(const ScalarField& f) {
  long double s = 0;
  for (double v : f.values()) s += v;
  return static_cast<double>(s / f.size());
}

double inner(const ScalarField& f, const ScalarField& g) {
  f.check_same_grid(g);
  long double s = 0;
  for (std::size_t i = 0; i < f.size(); ++i) s += static_cast<long double>(f[i]) * g[i];
  return static_cast<double>(s * f.grid().cell_volume());
}

double l2_norm(const ScalarField& f) { return std::sqrt(inner(f, f)); }

double l2_norm(const VectorField& v) {
  double s = 0;
  for (const auto& c : v.components) s += inner(c, c);
  return std::sqrt(s);
}

double h1_seminorm(const ScalarField& f) { return l2_norm(gradient(f)); }

double linf_norm(const ScalarField& f) {
  double m = 0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

double linf_norm(const VectorField& v) {
  double m = 0;
  for (const auto& c : v.components) m = std::max(m, linf_norm(c));
  return m;
}

std::vector<double> integrate(const VectorField& v) {
  std::vector<double> r;
  for (const auto& c : v.components) r.push_back(integrate(c));
  return r;
}

// ---------------------------------------------------------------------------

namespace {

void to_little_endian(std::vector<double>& v) {
  if constexpr (std::endian::native == std::endian::big) {
    for (double& x : v) {
      auto bits = std::bit_cast<std::uint64_t>(x);
      bits = __builtin_bswap64(bits);
      x = std::bit_cast<double>(bits);
    }
  }
}

}  // namespace

void write_snapshot(const std::string& dir, const std::string& stem,
                    const Snapshot& snap) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  nlohmann::json header;
  header["dim"] = snap.grid->dim();
  header["N"] = snap.grid->n();
  header["L"] = snap.grid->period();
  header["time"] = snap.time;
  header["fields"] = nlohmann::json::array();
  for (const auto& [name, field] : snap.fields) {
    header["fields"].push_back(name);
    std::vector<double> data(field.values().begin(), field.values().end());
    to_little_endian(data);
    std::ofstream out(fs::path(dir) / (stem + "." + name + ".bin"), std::ios::binary);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
    require(out.good(), ErrorCode::Io, "cannot write snapshot field " + name);
  }
  std::ofstream out(fs::path(dir) / (stem + ".json"));
  out << header.dump(2) << "\n";
  require(out.good(), ErrorCode::Io, "cannot write snapshot header " + stem);
}

Snapshot read_snapshot(const std::string& dir, const std::string& stem, bool dealias) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / (stem + ".json"));
  require(in.good(), ErrorCode::Io, "cannot open snapshot header " + stem);
  nlohmann::json header;
  try {
    in >> header;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Io, std::string("bad snapshot header: ") + e.what());
  }
  Snapshot snap;
  snap.grid = TorusGrid::create(header.at("dim"), header.at("N"), header.at("L"), dealias);
  snap.time = header.value("time", 0.0);
  for (const auto& name : header.at("fields")) {
    const std::string n = name.get<std::string>();
    std::ifstream bin(fs::path(dir) / (stem + "." + n + ".bin"), std::ios::binary);
    require(bin.good(), ErrorCode::Io, "cannot open snapshot field " + n);
    std::vector<double> data(snap.grid->size());
    bin.read(reinterpret_cast<char*>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(double)));
    require(bin.gcount() == static_cast<std::streamsize>(data.size() * sizeof(double)),
            ErrorCode::Io, "truncated snapshot field " + n);
    to_little_endian(data);
    snap.fields.emplace_back(n, ScalarField(snap.grid, std::move(data)));
  }
  return snap;
}

}  // namespace kortlab
