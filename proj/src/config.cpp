#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>

#include "kortlab/experiments.hpp"

namespace kortlab {

namespace {

const Json& empty_object() {
  static const Json e = Json::object();
  return e;
}

const Json& null_value() {
  static const Json n;
  return n;
}

}  // namespace

ConfigReader::ConfigReader(const Json& node, std::string path)
    : node_(node.is_null() ? empty_object() : node), path_(std::move(path)) {
  require(node_.is_object(), ErrorCode::Config, path_ + " must be an object");
}

bool ConfigReader::has(const std::string& key) const { return node_.contains(key); }

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

}  // namespace

double ConfigReader::number(const std::string& key, double fallback) {
  used_.push_back(key);
  double v = fallback;
  if (has(key)) {
    require(node_.at(key).is_number(), ErrorCode::Config, join(path_, key) + " must be a number");
    v = node_.at(key).get<double>();
  }
  require(std::isfinite(v), ErrorCode::Config, join(path_, key) + " must be finite");
  resolved_[key] = v;
  return v;
}

double ConfigReader::number(const std::string& key) {
  require(has(key), ErrorCode::Config, "missing " + join(path_, key));
  return number(key, 0.0);
}

int ConfigReader::integer(const std::string& key, int fallback) {
  used_.push_back(key);
  int v = fallback;
  if (has(key)) {
    require(node_.at(key).is_number_integer(), ErrorCode::Config,
            join(path_, key) + " must be an integer");
    v = node_.at(key).get<int>();
  }
  resolved_[key] = v;
  return v;
}

bool ConfigReader::flag(const std::string& key, bool fallback) {
  used_.push_back(key);
  bool v = fallback;
  if (has(key)) {
    require(node_.at(key).is_boolean(), ErrorCode::Config, join(path_, key) + " must be a boolean");
    v = node_.at(key).get<bool>();
  }
  resolved_[key] = v;
  return v;
}

std::string ConfigReader::text(const std::string& key, const std::string& fallback) {
  used_.push_back(key);
  std::string v = fallback;
  if (has(key)) {
    require(node_.at(key).is_string(), ErrorCode::Config, join(path_, key) + " must be a string");
    v = node_.at(key).get<std::string>();
  }
  resolved_[key] = v;
  return v;
}

std::string ConfigReader::text(const std::string& key) {
  require(has(key), ErrorCode::Config, "missing " + join(path_, key));
  return text(key, "");
}

std::vector<double> ConfigReader::numbers(const std::string& key,
                                          const std::vector<double>& fallback) {
  used_.push_back(key);
  std::vector<double> v = fallback;
  if (has(key)) {
    const auto& a = node_.at(key);
    require(a.is_array(), ErrorCode::Config, join(path_, key) + " must be an array");
    v.clear();
    for (const auto& x : a) {
      require(x.is_number(), ErrorCode::Config, join(path_, key) + " must hold numbers");
      v.push_back(x.get<double>());
    }
  }
  resolved_[key] = v;
  return v;
}

ConfigReader ConfigReader::child(const std::string& key) {
  used_.push_back(key);
  return ConfigReader(has(key) ? node_.at(key) : empty_object(), join(path_, key));
}

const Json& ConfigReader::raw(const std::string& key) {
  used_.push_back(key);
  if (!has(key)) return null_value();
  resolved_[key] = node_.at(key);
  return node_.at(key);
}

void ConfigReader::adopt(const std::string& key, Json resolved) {
  resolved_[key] = std::move(resolved);
}

Json ConfigReader::finish() const {
  for (const auto& [key, value] : node_.items()) {
    (void)value;
    require(std::find(used_.begin(), used_.end(), key) != used_.end(), ErrorCode::Config,
            "unknown key " + join(path_, key));
  }
  return resolved_;
}

GridPtr GridConfig::make() const { return TorusGrid::create(dim, n, period, dealias); }

SystemKind parse_system_kind(const std::string& name) {
  for (auto k : {SystemKind::EulerKorteweg, SystemKind::NavierStokesKorteweg,
                 SystemKind::QuantumHydrodynamics, SystemKind::EulerPoisson,
                 SystemKind::LowerOrder})
    if (name == to_string(k)) return k;
  fail(ErrorCode::Config, "unknown system kind '" + name + "'");
}

namespace {

LocalEnergy parse_local(ConfigReader r, Json& resolved) {
  auto kind = r.text("kind", "gamma_law");
  std::optional<LocalEnergy> out;
  if (kind == "gamma_law") {
    const double k = r.number("k", 1.0);
    out = LocalEnergy::gamma_law(k, r.number("gamma", 1.4));
  } else if (kind == "double_well") {
    const double a = r.number("a");
    const double b = r.number("b");
    out = LocalEnergy::double_well(a, b, r.number("c0", 0.0));
  } else {
    fail(ErrorCode::Config, "unknown " + r.path() + ".kind '" + kind + "'");
  }
  resolved = r.finish();
  return *out;
}

Capillarity parse_capillarity(ConfigReader r, Json& resolved) {
  auto kind = r.text("kind", "constant");
  std::optional<Capillarity> out;
  if (kind == "constant") {
    out = Capillarity::constant(r.number("c"));
  } else if (kind == "quadratic") {
    const double c0 = r.number("c0");
    out = Capillarity::quadratic(c0, r.number("c2"));
  } else if (kind == "rational") {
    const double a = r.number("a");
    out = Capillarity::rational(a, r.number("b"));
  } else if (kind == "qhd") {
    out = Capillarity::qhd(r.number("epsilon"));
  } else {
    fail(ErrorCode::Config, "unknown " + r.path() + ".kind '" + kind + "'");
  }
  resolved = r.finish();
  return *out;
}

template <class F>
auto as_config_error(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw;
    throw Error(ErrorCode::Config, e.what());
  }
}

}  // namespace

EnergyModel parse_model(ConfigReader& r) {
  return as_config_error([&] {
    auto kind = r.text("kind", "korteweg");
    Json sub;
    auto local = parse_local(r.child("local"), sub);
    r.adopt("local", sub);
    auto band_r = r.child("band");
    const double lo = band_r.number("min", 1e-6);
    DensityBand band{lo, band_r.number("max", 1e6)};
    r.adopt("band", band_r.finish());
    std::optional<EnergyModel> out;
    if (kind == "korteweg") {
      auto cap = parse_capillarity(r.child("capillarity"), sub);
      r.adopt("capillarity", sub);
      out.emplace(KortewegModel{local, cap}, band);
    } else if (kind == "qhd") {
      out.emplace(QhdModel{local, r.number("epsilon")}, band);
    } else if (kind == "euler_poisson") {
      out.emplace(EulerPoissonModel{local, r.number("beta")}, band);
    } else if (kind == "lower_order") {
      const double c = r.number("c_kappa");
      out.emplace(LowerOrderModel{local, c, r.number("alpha")}, band);
    } else {
      fail(ErrorCode::Config, "unknown " + r.path() + ".kind '" + kind + "'");
    }
    return *out;
  });
}

EnergyModel parse_model(const Json& block) {
  ConfigReader r(block, "model");
  auto m = parse_model(r);
  r.finish();
  return m;
}

namespace {

std::vector<Mode> parse_modes(const Json& list, const std::string& path, int dim, bool velocity) {
  std::vector<Mode> out;
  if (list.is_null()) return out;
  require(list.is_array(), ErrorCode::Config, path + " must be an array");
  for (std::size_t i = 0; i < list.size(); ++i) {
    ConfigReader r(list[i], path + "[" + std::to_string(i) + "]");
    Mode m;
    for (double w : r.numbers("wave", {1.0})) {
      require(w == std::round(w), ErrorCode::Config, r.path() + ".wave must hold integers");
      m.wave.push_back(static_cast<int>(w));
    }
    require(static_cast<int>(m.wave.size()) == dim, ErrorCode::Config,
            r.path() + ".wave needs one entry per dimension");
    m.amp = r.number("amp");
    m.phase = r.number("phase", 0.0);
    if (velocity) {
      m.axis = r.integer("axis", 0);
      require(m.axis >= 0 && m.axis < dim, ErrorCode::Config, r.path() + ".axis out of range");
    }
    r.finish();
    out.push_back(m);
  }
  return out;
}

}  // namespace

RunConfig parse_config(const Json& root) {
  ConfigReader r(root, "");
  Json resolved = Json::object();

  GridConfig grid;
  {
    auto g = r.child("grid");
    grid.dim = g.integer("dim", 1);
    grid.n = g.integer("n", 128);
    grid.period = g.number("period", 2 * std::numbers::pi);
    grid.dealias = g.flag("dealias", true);
    require(grid.dim >= 1 && grid.dim <= 3, ErrorCode::Config, "grid.dim must be 1, 2 or 3");
    require(grid.n >= 4 && grid.n % 2 == 0, ErrorCode::Config, "grid.n must be even and >= 4");
    require(grid.period > 0, ErrorCode::Config, "grid.period must be positive");
    resolved["grid"] = g.finish();
  }

  auto mr = r.child("model");
  auto model = parse_model(mr);
  Json model_block = mr.finish();
  resolved["model"] = model_block;

  auto sr = r.child("system");
  SystemSpec spec{.system = parse_system_kind(sr.text("kind", "euler_korteweg")),
                  .model = model};
  spec.zeta = sr.number("zeta", 0.0);
  spec.lambda = sr.number("lambda", 0.0);
  spec.mu = sr.number("mu", 0.0);
  spec.dt = sr.number("dt", 1e-3);
  spec.t_end = sr.number("t_end", 1.0);
  auto integ = sr.text("integrator", "rk4");
  require(integ == "rk4" || integ == "ssprk3", ErrorCode::Config,
          "system.integrator must be rk4 or ssprk3");
  spec.integrator = integ == "rk4" ? Integrator::RK4 : Integrator::SSPRK3;
  auto force = sr.text("force_form", "conservative");
  require(force == "conservative" || force == "primitive", ErrorCode::Config,
          "system.force_form must be conservative or primitive");
  spec.force_form = force == "conservative" ? ForceForm::Conservative : ForceForm::Primitive;
  spec.c_cfl = sr.number("c_cfl", 0.3);
  const int every = sr.integer("observe_every", 1);
  require(every >= 1, ErrorCode::Config, "system.observe_every must be at least 1");
  spec.observe_every = static_cast<std::size_t>(every);
  resolved["system"] = sr.finish();
  spec.validate(grid.dim);

  InitialConfig init;
  {
    auto ir = r.child("initial");
    init.rho_mean = ir.number("rho_mean", 1.0);
    require(init.rho_mean > 0, ErrorCode::Config, "initial.rho_mean must be positive");
    init.rho_modes = parse_modes(ir.raw("rho_modes"), "initial.rho_modes", grid.dim, false);
    init.velocity_modes =
        parse_modes(ir.raw("velocity_modes"), "initial.velocity_modes", grid.dim, true);
    init.random_rho = ir.number("random_rho", 0.0);
    init.random_velocity = ir.number("random_velocity", 0.0);
    init.random_max_mode = ir.integer("random_max_mode", 4);
    require(init.random_max_mode >= 1 && 2 * init.random_max_mode < grid.n, ErrorCode::Config,
            "initial.random_max_mode must lie in [1, n/2)");
    resolved["initial"] = ir.finish();
  }

  std::string experiment;
  Json params = Json::object();
  {
    auto er = r.child("experiment");
    experiment = er.text("name", "simulate");
    params = er.raw("params");
    if (params.is_null()) params = Json::object();
    require(params.is_object(), ErrorCode::Config, "experiment.params must be an object");
    resolved["experiment"] = er.finish();
  }

  OutputConfig output;
  {
    auto orr = r.child("output");
    output.dir = orr.text("dir", "");
    const int every = orr.integer("snapshot_every", 0);
    require(every >= 0, ErrorCode::Config, "output.snapshot_every must be nonnegative");
    output.snapshot_every = static_cast<std::size_t>(every);
    output.write_csv = orr.flag("csv", true);
    resolved["output"] = orr.finish();
  }

  const int seed = r.integer("seed", 1);
  require(seed >= 0, ErrorCode::Config, "seed must be nonnegative");
  resolved["seed"] = seed;
  r.finish();

  return RunConfig{grid,   std::move(spec),   std::move(model_block), std::move(init),
                   experiment, std::move(params), output, static_cast<std::uint64_t>(seed),
                   std::move(resolved)};
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open config " + path);
  Json root;
  try {
    root = Json::parse(in);
  } catch (const Json::exception& e) {
    fail(ErrorCode::Config, path + ": " + e.what());
  }
  return parse_config(root);
}

ScalarField random_band_limited(const GridPtr& grid, std::mt19937_64& rng, int max_mode) {
  const int d = grid->dim();
  std::uniform_real_distribution<double> coef(-1.0, 1.0), phase(0.0, 2 * std::numbers::pi);
  struct Term {
    std::vector<int> k;
    double a, ph;
  };
  std::vector<Term> terms;
  std::vector<int> k(d, -max_mode);
  // enumerate the half space of wave vectors with |k_i| <= max_mode
  while (true) {
    bool positive = false;
    for (int i = 0; i < d; ++i) {
      if (k[i] != 0) {
        positive = k[i] > 0;
        break;
      }
    }
    if (positive) {
      double k2 = 0;
      for (int v : k) k2 += v * v;
      const double a = coef(rng) / std::sqrt(k2);
      terms.push_back({k, a, phase(rng)});
    }
    int i = d - 1;
    while (i >= 0 && k[i] == max_mode) k[i--] = -max_mode;
    if (i < 0) break;
    ++k[i];
  }
  const double base = 2 * std::numbers::pi / grid->period();
  auto f = ScalarField::from_function(grid, [&](std::span<const double> x) {
    double s = 0;
    for (const auto& t : terms) {
      double arg = t.ph;
      for (int i = 0; i < d; ++i) arg += base * t.k[i] * x[i];
      s += t.a * std::cos(arg);
    }
    return s;
  });
  const double peak = linf_norm(f);
  require(peak > 0, ErrorCode::InvalidArgument, "random field vanished");
  return (1.0 / peak) * f;
}

namespace {

ScalarField modes_field(const GridPtr& grid, const std::vector<const Mode*>& modes) {
  const double base = 2 * std::numbers::pi / grid->period();
  return ScalarField::from_function(grid, [&](std::span<const double> x) {
    double s = 0;
    for (const auto* m : modes) {
      double arg = m->phase;
      for (std::size_t i = 0; i < m->wave.size(); ++i) arg += base * m->wave[i] * x[i];
      s += m->amp * std::cos(arg);
    }
    return s;
  });
}

}  // namespace

State initial_state(const RunConfig& cfg, const GridPtr& grid) {
  const auto& ic = cfg.initial;
  std::mt19937_64 rng(cfg.seed);
  std::vector<const Mode*> rm;
  for (const auto& m : ic.rho_modes) rm.push_back(&m);
  auto rho = modes_field(grid, rm) + ic.rho_mean;
  if (ic.random_rho != 0) rho += ic.random_rho * random_band_limited(grid, rng, ic.random_max_mode);

  VectorField m = VectorField::zeros(grid);
  for (int axis = 0; axis < grid->dim(); ++axis) {
    std::vector<const Mode*> vm;
    for (const auto& v : ic.velocity_modes)
      if (v.axis == axis) vm.push_back(&v);
    auto u = modes_field(grid, vm);
    if (ic.random_velocity != 0)
      u += ic.random_velocity * random_band_limited(grid, rng, ic.random_max_mode);
    m[axis] = rho * u;
  }
  State s{rho, m};
  cfg.system.model.band().check(s.rho);
  return s;
}

State perturbed(const State& s, double delta) {
  const auto& grid = s.rho.grid_ptr();
  const double base = 2 * std::numbers::pi / grid->period();
  auto bump = ScalarField::from_function(
      grid, [&](std::span<const double> x) { return delta * std::sin(base * x[0]); });
  auto rho = s.rho + bump;
  VectorField m = VectorField::zeros(grid);
  for (int i = 0; i < s.m.dim(); ++i) m[i] = rho * (s.m[i] / s.rho + bump);
  return State{rho, m, s.time, 0.0};
}

}  // namespace kortlab
