/* C interface to the fasim hybrid-automaton simulator.
 *
 * Every function that can fail returns a fasim_status; on failure the
 * message is available from fasim_last_error() on the same thread until
 * the next failing call. Handles are opaque and owned by the caller. */
#ifndef FASIM_H
#define FASIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FASIM_API __declspec(dllexport)
#else
#define FASIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fasim_status {
  FASIM_OK = 0,
  FASIM_ERR_NULL_ARGUMENT,
  FASIM_ERR_PARSE,
  FASIM_ERR_VALIDATION,
  FASIM_ERR_UNBOUND_VARIABLE,
  FASIM_ERR_DOMAIN,
  FASIM_ERR_DIVIDE_BY_ZERO,
  FASIM_ERR_NOT_INVERTIBLE,
  FASIM_ERR_STEP_UNDERFLOW,
  FASIM_ERR_COSINE_SINGULARITY,
  FASIM_ERR_INVARIANT_VIOLATED,
  FASIM_ERR_INVALID_CONFIG,
  FASIM_ERR_ZERO_VARIANCE,
  FASIM_ERR_PRECONDITION,
  FASIM_ERR_IO,
  FASIM_ERR_OUT_OF_RANGE,
  FASIM_ERR_BUFFER_TOO_SMALL,
  FASIM_ERR_INTERNAL
} fasim_status;

typedef enum fasim_engine {
  FASIM_ENGINE_FA = 0,
  FASIM_ENGINE_REFERENCE = 1, /* RK4 with bisection of guard crossings */
  FASIM_ENGINE_NAIVE = 2      /* RK4, guards checked at grid points only */
} fasim_engine;

typedef enum fasim_step_kind { FASIM_STEP_INIT = 0, FASIM_STEP_INTRA = 1, FASIM_STEP_SWITCH = 2 } fasim_step_kind;

typedef struct fasim_model fasim_model;
typedef struct fasim_run fasim_run;

typedef struct fasim_sim_options {
  fasim_engine engine;
  double t_max;       /* <= 0 uses the model's t_max */
  double max_angle;   /* FA: angular cap per step, radians */
  double error_bound; /* FA: step-halving bound */
  double eq_tol;
  double min_dt;      /* FA */
  double dt;          /* reference and naive: fixed step */
  double bisection_tol;
  uint64_t seed;
  uint64_t max_steps;
} fasim_sim_options;

typedef struct fasim_run_stats {
  uint64_t intra_steps;
  uint64_t switch_count;
  uint64_t sample_count;
  double wall_time;         /* seconds spent in the simulate call */
  double final_time;
  double first_switch_time; /* NaN without switches */
  int halted;               /* ended in a location with no edges and zero flows */
} fasim_run_stats;

FASIM_API const char* fasim_version(void);
FASIM_API const char* fasim_last_error(void);
FASIM_API const char* fasim_status_string(fasim_status status);

/* Models */
FASIM_API fasim_status fasim_model_from_text(const char* text, fasim_model** out);
FASIM_API fasim_status fasim_model_from_file(const char* path, fasim_model** out);
FASIM_API fasim_status fasim_model_builtin(const char* name, fasim_model** out);
FASIM_API void fasim_model_free(fasim_model* model);

FASIM_API size_t fasim_builtin_count(void);
FASIM_API const char* fasim_builtin_name(size_t index); /* NULL when out of range */
FASIM_API const char* fasim_builtin_text(const char* name); /* NULL when unknown */

FASIM_API const char* fasim_model_name(const fasim_model* model);
FASIM_API double fasim_model_t_max(const fasim_model* model);
FASIM_API size_t fasim_model_variable_count(const fasim_model* model);
FASIM_API const char* fasim_model_variable_name(const fasim_model* model, size_t index);
FASIM_API size_t fasim_model_output_count(const fasim_model* model);
FASIM_API const char* fasim_model_output(const fasim_model* model, size_t index);

/* Normalisation and guard-angle tables. Writes at most `capacity` bytes
 * including the terminator; `needed` (optional) receives the full size. */
FASIM_API fasim_status fasim_model_translate_dump(const fasim_model* model, char* buffer, size_t capacity,
                                                  size_t* needed);

/* Runs */
FASIM_API void fasim_sim_options_default(fasim_sim_options* options);
FASIM_API fasim_status fasim_simulate(const fasim_model* model, const fasim_sim_options* options, fasim_run** out);
FASIM_API void fasim_run_free(fasim_run* run);

FASIM_API fasim_status fasim_run_get_stats(const fasim_run* run, fasim_run_stats* out);
/* `values` receives fasim_model_variable_count() doubles; any output may be NULL. */
FASIM_API fasim_status fasim_run_sample(const fasim_run* run, size_t index, double* time, double* values,
                                        fasim_step_kind* kind);
FASIM_API const char* fasim_run_sample_location(const fasim_run* run, size_t index);
FASIM_API fasim_status fasim_run_switch(const fasim_run* run, size_t index, double* time, const char** edge_name);
FASIM_API fasim_status fasim_run_write_csv(const fasim_run* run, const char* path);

/* Pearson correlation of `output` (an expression over the model variables)
 * resampled on a uniform grid. FASIM_ERR_ZERO_VARIANCE when undefined. */
FASIM_API fasim_status fasim_correlate(const fasim_run* a, const fasim_run* b, const char* output, double grid_dt,
                                       double* out);

#ifdef __cplusplus
}
#endif

#endif
