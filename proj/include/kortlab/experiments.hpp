#pragma once

// Run configurations and the verification commands behind the CLI.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "kortlab/dynamics.hpp"

namespace kortlab {

using Json = nlohmann::ordered_json;

// Reads a JSON object key by key, records every value it hands out (defaults
// included) and rejects keys nobody asked for.
class ConfigReader {
 public:
  ConfigReader(const Json& node, std::string path);

  bool has(const std::string& key) const;
  double number(const std::string& key, double fallback);
  double number(const std::string& key);
  int integer(const std::string& key, int fallback);
  bool flag(const std::string& key, bool fallback);
  std::string text(const std::string& key, const std::string& fallback);
  std::string text(const std::string& key);
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback);
  ConfigReader child(const std::string& key);  // missing key reads as {}
  // Raw sub-tree, recorded as given; null when absent.
  const Json& raw(const std::string& key);
  void adopt(const std::string& key, Json resolved);

  // Throws Config on any unread key; returns the resolved object.
  Json finish() const;
  const std::string& path() const { return path_; }

 private:
  const Json& node_;
  std::string path_;
  Json resolved_ = Json::object();
  std::vector<std::string> used_;
};

struct GridConfig {
  int dim = 1;
  int n = 128;
  double period = 6.283185307179586;
  bool dealias = true;

  GridPtr make() const;
};

// amp * cos(2 pi wave.x / L + phase); for velocity modes `axis` picks the component.
struct Mode {
  std::vector<int> wave;
  double amp = 0;
  double phase = 0;
  int axis = 0;
};

struct InitialConfig {
  double rho_mean = 1.0;
  std::vector<Mode> rho_modes;
  std::vector<Mode> velocity_modes;
  double random_rho = 0;       // amplitude of a seeded band-limited density part
  double random_velocity = 0;  // same for every velocity component
  int random_max_mode = 4;
};

struct OutputConfig {
  std::string dir;                 // default artifact directory
  std::size_t snapshot_every = 0;  // steps; 0 = first and last only
  bool write_csv = true;
};

struct RunConfig {
  GridConfig grid;
  SystemSpec system;
  Json model;  // resolved model block, reused for batteries
  InitialConfig initial;
  std::string experiment;
  Json params = Json::object();
  OutputConfig output;
  std::uint64_t seed = 1;
  Json resolved;  // full config with defaults filled in
};

RunConfig parse_config(const Json& root);
RunConfig load_config(const std::string& path);

EnergyModel parse_model(ConfigReader& r);
EnergyModel parse_model(const Json& block);
SystemKind parse_system_kind(const std::string& name);

// Zero-mean field with max |f| = 1 and modes |k_i| <= max_mode.
ScalarField random_band_limited(const GridPtr& grid, std::mt19937_64& rng, int max_mode);
State initial_state(const RunConfig& cfg, const GridPtr& grid);
// rho + delta sin(2 pi x_0 / L), u + delta sin(2 pi x_0 / L) on every component.
State perturbed(const State& s, double delta);

struct RunOptions {
  std::string out_dir;
  int threads = 1;
};

struct CommandResult {
  bool passed = false;
  Json report;
};

const std::vector<std::string>& command_names();
// Writes config.json and report.json plus command artifacts under out_dir.
CommandResult run_command(const std::string& name, const RunConfig& cfg, const RunOptions& opt);

// Runs fn(0..n-1) on up to `threads` workers; errors are rethrown in index order.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace kortlab
