#include "kortlab/kortlab.h"

#include <cstring>
#include <string>

#include "kortlab/experiments.hpp"

struct kl_config {
  kortlab::RunConfig cfg;
  std::string resolved;
};

struct kl_report {
  bool passed;
  std::string json;
};

struct kl_field {
  kortlab::ScalarField field;
};

namespace {

thread_local std::string last_error;

kl_status code_of(kortlab::ErrorCode c) {
  using kortlab::ErrorCode;
  switch (c) {
    case ErrorCode::InvalidArgument: return KL_ERR_INVALID_ARGUMENT;
    case ErrorCode::GridMismatch: return KL_ERR_GRID_MISMATCH;
    case ErrorCode::Domain: return KL_ERR_DOMAIN;
    case ErrorCode::Vacuum: return KL_ERR_VACUUM;
    case ErrorCode::NonFinite: return KL_ERR_NON_FINITE;
    case ErrorCode::Config: return KL_ERR_CONFIG;
    case ErrorCode::Io: return KL_ERR_IO;
    case ErrorCode::InsufficientData: return KL_ERR_INSUFFICIENT_DATA;
    case ErrorCode::DegenerateFit: return KL_ERR_DEGENERATE_FIT;
  }
  return KL_ERR_INTERNAL;
}

template <class F>
kl_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return KL_OK;
  } catch (const kortlab::Error& e) {
    last_error = e.what();
    return code_of(e.code());
  } catch (const std::exception& e) {
    last_error = e.what();
    return KL_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return KL_ERR_INTERNAL;
  }
}

void need(bool ok, const char* what) {
  kortlab::require(ok, kortlab::ErrorCode::InvalidArgument, what);
}

kl_config* wrap(kortlab::RunConfig cfg) {
  auto resolved = cfg.resolved.dump(2);
  return new kl_config{std::move(cfg), std::move(resolved)};
}

}  // namespace

extern "C" {

const char* kl_version(void) { return "1.0.0"; }

const char* kl_status_name(kl_status status) {
  switch (status) {
    case KL_OK: return "ok";
    case KL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case KL_ERR_GRID_MISMATCH: return "grid mismatch";
    case KL_ERR_DOMAIN: return "domain error";
    case KL_ERR_VACUUM: return "vacuum";
    case KL_ERR_NON_FINITE: return "non-finite value";
    case KL_ERR_CONFIG: return "configuration error";
    case KL_ERR_IO: return "i/o error";
    case KL_ERR_INSUFFICIENT_DATA: return "insufficient data";
    case KL_ERR_DEGENERATE_FIT: return "degenerate fit";
    case KL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* kl_last_error(void) { return last_error.c_str(); }

kl_status kl_config_parse(const char* json, kl_config** out) {
  return guarded([&] {
    need(json && out, "null argument");
    *out = nullptr;
    kortlab::Json root;
    try {
      root = kortlab::Json::parse(json);
    } catch (const kortlab::Json::exception& e) {
      kortlab::fail(kortlab::ErrorCode::Config, e.what());
    }
    *out = wrap(kortlab::parse_config(root));
  });
}

kl_status kl_config_load(const char* path, kl_config** out) {
  return guarded([&] {
    need(path && out, "null argument");
    *out = nullptr;
    *out = wrap(kortlab::load_config(path));
  });
}

const char* kl_config_resolved(const kl_config* config) {
  return config ? config->resolved.c_str() : "";
}

const char* kl_config_experiment(const kl_config* config) {
  return config ? config->cfg.experiment.c_str() : "";
}

const char* kl_config_output_dir(const kl_config* config) {
  return config ? config->cfg.output.dir.c_str() : "";
}

void kl_config_free(kl_config* config) { delete config; }

size_t kl_command_count(void) { return kortlab::command_names().size(); }

const char* kl_command_name(size_t index) {
  const auto& names = kortlab::command_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

kl_status kl_run(const char* command, const kl_config* config, const char* out_dir, int threads,
                 kl_report** out) {
  return guarded([&] {
    need(command && config && out_dir && out, "null argument");
    *out = nullptr;
    kortlab::RunOptions opt{out_dir, threads > 0 ? threads : 1};
    auto result = kortlab::run_command(command, config->cfg, opt);
    *out = new kl_report{result.passed, result.report.dump(2)};
  });
}

int kl_report_passed(const kl_report* report) { return report && report->passed ? 1 : 0; }

const char* kl_report_json(const kl_report* report) { return report ? report->json.c_str() : ""; }

void kl_report_free(kl_report* report) { delete report; }

kl_status kl_field_initial_density(const kl_config* config, kl_field** out) {
  return guarded([&] {
    need(config && out, "null argument");
    *out = nullptr;
    auto grid = config->cfg.grid.make();
    *out = new kl_field{kortlab::initial_state(config->cfg, grid).rho};
  });
}

size_t kl_field_size(const kl_field* field) { return field ? field->field.size() : 0; }

kl_status kl_field_values(const kl_field* field, double* out, size_t capacity) {
  return guarded([&] {
    need(field && out, "null argument");
    auto v = field->field.values();
    need(capacity >= v.size(), "buffer too small");
    std::memcpy(out, v.data(), v.size() * sizeof(double));
  });
}

kl_status kl_field_integral(const kl_field* field, double* out) {
  return guarded([&] {
    need(field && out, "null argument");
    *out = kortlab::integrate(field->field);
  });
}

kl_status kl_field_energy(const kl_config* config, const kl_field* field, double* out) {
  return guarded([&] {
    need(config && field && out, "null argument");
    *out = kortlab::energy_total(config->cfg.system.model, field->field);
  });
}

void kl_field_free(kl_field* field) { delete field; }

}  // extern "C"
