/* promptopt — prompt-optimization engine and evaluation harness.
 *
 * C API for the shared library. All functions return a status code;
 * PROMPTOPT_OK means success. On failure, promptopt_engine_last_error()
 * (engine calls) or promptopt_last_error() (engine-less calls and failed
 * construction) returns a message valid until the next call on the same
 * engine/thread. Strings returned through out-parameters are heap-allocated
 * and must be released with promptopt_string_free().
 */

#ifndef PROMPTOPT_H
#define PROMPTOPT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define PROMPTOPT_API __declspec(dllexport)
#else
#define PROMPTOPT_API __attribute__((visibility("default")))
#endif

typedef enum promptopt_status {
  PROMPTOPT_OK = 0,
  PROMPTOPT_ERR_INVALID_ARGUMENT = 1,
  PROMPTOPT_ERR_IO = 2,
  PROMPTOPT_ERR_PARSE = 3,
  PROMPTOPT_ERR_BACKEND = 4,
  PROMPTOPT_ERR_STATE = 5,
  PROMPTOPT_ERR_INTERNAL = 6
} promptopt_status;

/* Opaque experiment engine bound to one config + run directory. */
typedef struct promptopt_engine promptopt_engine;

/* Optional config overrides applied on top of the config file (the CLI's
 * global flags). NULL / has_seed=0 fields keep the config values. */
typedef struct promptopt_overrides {
  const char* run_dir;
  const char* backend; /* http | mock | synthetic */
  int has_seed;
  uint64_t seed;
} promptopt_overrides;

PROMPTOPT_API const char* promptopt_version(void);

/* Message for the most recent failed engine-less call on this thread. */
PROMPTOPT_API const char* promptopt_last_error(void);

PROMPTOPT_API promptopt_status promptopt_engine_new(const char* config_path,
                                                    const promptopt_overrides* overrides,
                                                    promptopt_engine** out_engine);
PROMPTOPT_API promptopt_status promptopt_engine_new_from_json(const char* config_json,
                                                              const char* base_dir,
                                                              const promptopt_overrides* overrides,
                                                              promptopt_engine** out_engine);
PROMPTOPT_API void promptopt_engine_free(promptopt_engine* engine);

/* Message for the most recent failed call on this engine. */
PROMPTOPT_API const char* promptopt_engine_last_error(const promptopt_engine* engine);

/* Phase 0: ingest + clean + stratified split into the run directory. */
PROMPTOPT_API promptopt_status promptopt_run_prepare(promptopt_engine* engine);

/* Phase 1: zero-demo baseline on the test split. out_report_json receives the
 * report document. */
PROMPTOPT_API promptopt_status promptopt_run_baseline(promptopt_engine* engine,
                                                      char** out_report_json);

/* Phase 2/3: compile the named optimizer (baseline, baseline-cot, bootstrap,
 * random-search, tpe, knn, copro, mipro, ensemble). member_paths supplies
 * ensemble members. out_program_path receives the saved program path. */
PROMPTOPT_API promptopt_status promptopt_run_optimize(promptopt_engine* engine,
                                                      const char* optimizer,
                                                      const char* const* member_paths,
                                                      size_t member_count,
                                                      char** out_program_path);

/* Phase 4: evaluate a saved program on a named split (train|validation|test). */
PROMPTOPT_API promptopt_status promptopt_run_evaluate(promptopt_engine* engine,
                                                      const char* program_path,
                                                      const char* split_name,
                                                      char** out_report_json);

/* Phase 5: comparison tables from saved reports plus an optional external
 * scores file (CSV or JSON). out_markdown receives the combined document. */
PROMPTOPT_API promptopt_status promptopt_run_compare(promptopt_engine* engine,
                                                     const char* const* report_paths,
                                                     size_t report_count,
                                                     const char* external_scores_path,
                                                     char** out_markdown);

/* Deterministic synthetic faithfulness dataset (JSON lines), for desk-scale
 * runs against the synthetic-judge backend. */
PROMPTOPT_API promptopt_status promptopt_generate_dataset(const char* out_path, long long n_records,
                                                          uint64_t seed);

PROMPTOPT_API void promptopt_string_free(char* s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* PROMPTOPT_H */
