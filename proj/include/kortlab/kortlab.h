#ifndef KORTLAB_H
#define KORTLAB_H

/* C interface to the kortlab solvers and verification commands. Every call
 * returns a status; on failure kl_last_error() holds a message for the
 * calling thread. Handles are opaque and owned by the caller. */

#include <stddef.h>

#if defined(_WIN32)
#define KL_API __declspec(dllexport)
#else
#define KL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kl_status {
  KL_OK = 0,
  KL_ERR_INVALID_ARGUMENT = 1,
  KL_ERR_GRID_MISMATCH = 2,
  KL_ERR_DOMAIN = 3,
  KL_ERR_VACUUM = 4,
  KL_ERR_NON_FINITE = 5,
  KL_ERR_CONFIG = 6,
  KL_ERR_IO = 7,
  KL_ERR_INSUFFICIENT_DATA = 8,
  KL_ERR_DEGENERATE_FIT = 9,
  KL_ERR_INTERNAL = 10
} kl_status;

typedef struct kl_config kl_config;
typedef struct kl_report kl_report;
typedef struct kl_field kl_field;

KL_API const char* kl_version(void);
KL_API const char* kl_status_name(kl_status status);
/* Message of the last failed call on this thread; "" when none. */
KL_API const char* kl_last_error(void);

/* Configs: parse JSON text or load a file. Unknown keys are rejected. */
KL_API kl_status kl_config_parse(const char* json, kl_config** out);
KL_API kl_status kl_config_load(const char* path, kl_config** out);
/* Fully resolved configuration as JSON; valid until the handle is freed. */
KL_API const char* kl_config_resolved(const kl_config* config);
KL_API const char* kl_config_experiment(const kl_config* config);
/* output.dir of the config; "" when unset. */
KL_API const char* kl_config_output_dir(const kl_config* config);
KL_API void kl_config_free(kl_config* config);

KL_API size_t kl_command_count(void);
KL_API const char* kl_command_name(size_t index);

/* Runs a command, writing artifacts under out_dir. threads <= 0 means 1. */
KL_API kl_status kl_run(const char* command, const kl_config* config, const char* out_dir,
                        int threads, kl_report** out);
KL_API int kl_report_passed(const kl_report* report);
KL_API const char* kl_report_json(const kl_report* report);
KL_API void kl_report_free(kl_report* report);

/* Initial density of a config sampled on its grid. */
KL_API kl_status kl_field_initial_density(const kl_config* config, kl_field** out);
KL_API size_t kl_field_size(const kl_field* field);
KL_API kl_status kl_field_values(const kl_field* field, double* out, size_t capacity);
/* Integral over the torus. */
KL_API kl_status kl_field_integral(const kl_field* field, double* out);
/* Energy of the config's model evaluated at the field. */
KL_API kl_status kl_field_energy(const kl_config* config, const kl_field* field, double* out);
KL_API void kl_field_free(kl_field* field);

#ifdef __cplusplus
}
#endif

#endif
