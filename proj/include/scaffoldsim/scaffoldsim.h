/* scaffoldsim C API.
 *
 * Every function that can fail returns an ss_status and records a message on the
 * context, readable with ss_last_error() until the next call on that context.
 * Strings returned through char** are owned by the caller and released with
 * ss_string_free(). A context must not be used from two threads at once. */
#ifndef SCAFFOLDSIM_H
#define SCAFFOLDSIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SCAFFOLDSIM_BUILDING_LIBRARY)
#    define SS_API __declspec(dllexport)
#  else
#    define SS_API __declspec(dllimport)
#  endif
#else
#  define SS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ss_status {
    SS_OK = 0,
    SS_ERR_INVALID_ARGUMENT = 1,
    SS_ERR_FORMAT = 2,
    SS_ERR_VALIDATION = 3,
    SS_ERR_IO = 4,
    SS_ERR_NETWORK = 5,
    SS_ERR_GENERATION = 6,
    SS_ERR_STRUCTURED_OUTPUT = 7,
    SS_ERR_PROTOCOL = 8,
    SS_ERR_INTERNAL = 9
} ss_status;

typedef struct ss_context ss_context;
typedef struct ss_task_set ss_task_set;

SS_API const char* ss_version(void);
SS_API const char* ss_status_name(ss_status status);

SS_API ss_context* ss_context_create(void);
SS_API void ss_context_destroy(ss_context* ctx);
/* Empty string when the last call succeeded. */
SS_API const char* ss_last_error(const ss_context* ctx);
/* Process exit code (0..3) matching the last error on ctx. */
SS_API int ss_last_exit_code(const ss_context* ctx);

SS_API void ss_string_free(char* s);

/* ---- statistics ---------------------------------------------------------- */

typedef struct ss_group_summary {
    size_t n;
    double mean;
    double sd;
} ss_group_summary;

typedef struct ss_t_test {
    double t;
    int df;
    double p;
    int defined;  /* 0 when both groups have zero variance and equal means */
    int infinite; /* 1 when the variance is zero but the means differ */
} ss_t_test;

typedef struct ss_agreement {
    size_t n;
    double p_o;
    double p_e;
    double kappa;
} ss_agreement;

SS_API ss_status ss_t_two_sided_p(ss_context* ctx, double t, double df, double* p_out);
SS_API ss_status ss_pooled_t_test(ss_context* ctx, const ss_group_summary* a, const ss_group_summary* b,
                                  ss_t_test* out);
/* *defined_out is 0 when the pooled standard deviation is zero. */
SS_API ss_status ss_cohens_d(ss_context* ctx, const ss_group_summary* a, const ss_group_summary* b, double* d_out,
                             int* defined_out);
/* Benjamini-Hochberg over the entries with defined[i] != 0 (all entries when defined is NULL).
 * Undefined entries are left out of the family and come back as NAN. */
SS_API ss_status ss_bh_adjust(ss_context* ctx, const double* p, const int* defined, size_t n, double* adjusted_out);
SS_API ss_status ss_cohen_kappa(ss_context* ctx, const char* const* a, const char* const* b, size_t n,
                                ss_agreement* out);

/* ---- task sets ----------------------------------------------------------- */

SS_API ss_status ss_task_set_load(ss_context* ctx, const char* path, ss_task_set** out);
SS_API size_t ss_task_set_size(const ss_task_set* tasks);
SS_API int ss_task_set_task_id(const ss_task_set* tasks, size_t index);
SS_API void ss_task_set_destroy(ss_task_set* tasks);
/* Canonical JSON of the whole set. */
SS_API ss_status ss_task_set_to_json(ss_context* ctx, const ss_task_set* tasks, char** json_out);

/* ---- commands ------------------------------------------------------------ */

/* Backend selection shared by run and code. NULL / negative fields keep the
 * value from config_file, or the built-in default. */
typedef struct ss_backend_options {
    const char* kind; /* "scripted" or "http" */
    const char* endpoint;
    const char* model;
    const char* api_key_env;
    double timeout_seconds;
} ss_backend_options;

typedef struct ss_run_options {
    const char* tasks;
    const char* out;
    const char* condition; /* "deep_think", "direct_speak" or "both" */
    int replicates;
    int has_seed;
    uint64_t seed;
    int parallel;
    int max_rounds;
    int allow_silence; /* -1 keep, 0 off, 1 on */
    const char* experiment_id;
    const char* config_file;
    const char* manifest; /* replay: everything except out comes from here */
    const char* template_dir;
    ss_backend_options backend;
} ss_run_options;

typedef struct ss_run_result {
    size_t sessions;
    size_t failures;
    int exit_code;
} ss_run_result;

SS_API void ss_run_options_init(ss_run_options* options);
SS_API ss_status ss_run_experiment(ss_context* ctx, const ss_run_options* options, ss_run_result* out);

typedef struct ss_code_options {
    const char* corpus;
    const char* out;
    const char* coder; /* "rule_based" or "model" */
    const char* config_file;
    const char* template_dir;
    ss_backend_options backend;
} ss_code_options;

typedef struct ss_code_result {
    size_t items;
    size_t failures;
    int exit_code;
} ss_code_result;

SS_API void ss_code_options_init(ss_code_options* options);
SS_API ss_status ss_code_corpus(ss_context* ctx, const ss_code_options* options, ss_code_result* out);

typedef struct ss_kappa_result {
    size_t overlap;
    size_t sampled;
    double quality_mean_kappa;
    double behavior_kappa;
    char* report; /* markdown, free with ss_string_free */
} ss_kappa_result;

SS_API ss_status ss_kappa_files(ss_context* ctx, const char* a, const char* b, double sample_fraction,
                                uint64_t seed, const char* out, ss_kappa_result* result);

typedef struct ss_analyze_options {
    const char* const* codes;
    size_t n_codes;
    const char* corpus;
    const char* summary;
    const char* agreement_a;
    const char* agreement_b;
    const char* out;
} ss_analyze_options;

typedef struct ss_analyze_result {
    size_t warnings;
    int exit_code;
} ss_analyze_result;

SS_API ss_status ss_analyze(ss_context* ctx, const ss_analyze_options* options, ss_analyze_result* out);

/* Writes the built-in prompt templates as <name>.txt under dir. */
SS_API ss_status ss_write_templates(ss_context* ctx, const char* dir);

/* Checks a task file; *report_out lists one line per task. */
SS_API ss_status ss_validate_tasks(ss_context* ctx, const char* path, char** report_out);

#ifdef __cplusplus
}
#endif

#endif
