// kortlab command-line driver. Exit status: 0 all checks pass, 1 tolerance
// failure, 2 configuration or runtime error.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kortlab/kortlab.h"

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kError = 2;

int env_threads() {
  const char* v = std::getenv("KORTLAB_THREADS");
  if (!v || !*v) return 0;
  char* end = nullptr;
  long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1 || n > 1024) {
    std::cerr << "ignoring KORTLAB_THREADS='" << v << "'\n";
    return 0;
  }
  return static_cast<int>(n);
}

std::string env_out_dir() {
  const char* v = std::getenv("KORTLAB_OUT_DIR");
  return v ? v : "";
}

int execute(const std::string& command, const std::string& config_path, std::string out_dir,
            int threads) {
  kl_config* cfg = nullptr;
  if (kl_config_load(config_path.c_str(), &cfg) != KL_OK) {
    std::cerr << "error: " << kl_last_error() << '\n';
    return kError;
  }
  if (out_dir.empty()) out_dir = env_out_dir();
  if (out_dir.empty()) out_dir = kl_config_output_dir(cfg);
  if (out_dir.empty()) out_dir = "out/" + command;
  if (threads <= 0) threads = env_threads();
  if (threads <= 0) threads = 1;

  const std::string wanted = kl_config_experiment(cfg);
  if (wanted != command)
    std::cerr << "note: config names experiment '" << wanted << "', running '" << command << "'\n";

  const auto start = std::chrono::steady_clock::now();
  kl_report* report = nullptr;
  const kl_status st = kl_run(command.c_str(), cfg, out_dir.c_str(), threads, &report);
  kl_config_free(cfg);
  if (st != KL_OK) {
    std::cerr << "error (" << kl_status_name(st) << "): " << kl_last_error() << '\n';
    return kError;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool passed = kl_report_passed(report) != 0;
  std::cout << command << ": " << (passed ? "PASS" : "FAIL") << "  (" << out_dir
            << "/report.json, " << secs << " s)\n";
  kl_report_free(report);
  return passed ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kortlab: Korteweg-type fluid solvers and relative-energy verification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kl_version()));

  std::string config, out;
  int threads = 0;
  std::string chosen;
  for (std::size_t i = 0; i < kl_command_count(); ++i) {
    const std::string name = kl_command_name(i);
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config, "JSON run configuration")->required()->check(
        CLI::ExistingFile);
    sub->add_option("--out", out, "artifact directory (else KORTLAB_OUT_DIR, output.dir)");
    sub->add_option("--threads", threads, "worker threads (else KORTLAB_THREADS)")
        ->check(CLI::Range(1, 1024));
    sub->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kError;
  }
  return execute(chosen, config, out, threads);
}
