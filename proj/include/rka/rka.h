/*
 * C interface to the randomized Kaczmarz library.
 *
 * All objects are opaque handles created by a *_create / *_load function and
 * released by the matching *_destroy. Every fallible call returns an
 * rka_status; on failure, rka_last_error() returns a message for the calling
 * thread. Output arrays are caller-allocated and their length is checked.
 */
#ifndef RKA_RKA_H
#define RKA_RKA_H

#include <stddef.h>
#include <stdint.h>

#if defined(RKA_BUILDING_LIBRARY)
#define RKA_API __attribute__((visibility("default")))
#else
#define RKA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rka_status {
    RKA_OK = 0,
    RKA_ERR_INVALID_ARGUMENT = 1,
    RKA_ERR_SHAPE_MISMATCH = 2,
    RKA_ERR_RANK_DEFICIENT = 3,
    RKA_ERR_ZERO_ROW = 4,
    RKA_ERR_COUPLING_VIOLATED = 5,
    RKA_ERR_DOMAIN = 6,
    RKA_ERR_PARSE = 7,
    RKA_ERR_IO = 8,
    RKA_ERR_INTERNAL = 9
} rka_status;

typedef enum rka_scheme_kind {
    RKA_SCHEME_UNIFORM_W_ROWNORM_P = 0,
    RKA_SCHEME_ROWNORM_W_UNIFORM_P = 1,
    RKA_SCHEME_UNIFORM_W_UNIFORM_P = 2
} rka_scheme_kind;

typedef enum rka_figure {
    RKA_FIG_THREADS = 0,
    RKA_FIG_ALPHA = 1,
    RKA_FIG_ALPHA_SWEEP = 2,
    RKA_FIG_BOUNDS = 3
} rka_figure;

typedef struct rka_matrix rka_matrix;
typedef struct rka_scheme rka_scheme;
typedef struct rka_trace rka_trace;

/* Error reporting */
RKA_API const char* rka_status_name(rka_status status);
RKA_API const char* rka_last_error(void);

/* Names used on the command line */
RKA_API const char* rka_scheme_kind_name(rka_scheme_kind kind);
RKA_API rka_status rka_scheme_kind_parse(const char* name, rka_scheme_kind* out);
RKA_API const char* rka_figure_name(rka_figure figure);
RKA_API rka_status rka_figure_parse(const char* name, rka_figure* out);

/* Matrices (row-major) and CSV I/O */
RKA_API rka_status rka_matrix_create(size_t rows, size_t cols, const double* row_major, rka_matrix** out);
RKA_API rka_status rka_matrix_load_csv(const char* path, rka_matrix** out);
RKA_API rka_status rka_matrix_save_csv(const rka_matrix* m, const char* path);
RKA_API size_t rka_matrix_rows(const rka_matrix* m);
RKA_API size_t rka_matrix_cols(const rka_matrix* m);
RKA_API rka_status rka_matrix_copy_data(const rka_matrix* m, double* out, size_t len);
RKA_API void rka_matrix_destroy(rka_matrix* m);

RKA_API rka_status rka_vector_save_csv(const double* v, size_t len, const char* path);

/* Dense linear algebra */
typedef struct rka_spectral_info {
    double frob_sq;
    double sigma_min_sq;
    double sigma_max_sq;
    double s_min;
    double s_max;
} rka_spectral_info;

RKA_API rka_status rka_row_norms_sq(const rka_matrix* a, double* out, size_t len);
/* rank_tol <= 0 selects the default (1e-10). */
RKA_API rka_status rka_spectral_extremes(const rka_matrix* a, double rank_tol, rka_spectral_info* out);
RKA_API rka_status rka_least_squares(const rka_matrix* a, const double* b, size_t b_len, double* x_out, size_t x_len);

/* Sampling schemes */
RKA_API rka_status rka_scheme_create(const rka_matrix* a, rka_scheme_kind kind, double alpha, rka_scheme** out);
/* Sets *holds to 1 and *alpha when coupled; otherwise *holds = 0 and the
 * worst relative deviation and its row. Any output pointer may be NULL. */
RKA_API rka_status rka_scheme_check_coupling(const rka_scheme* s, int* holds, double* alpha, double* max_rel_deviation,
                                             size_t* index);
RKA_API void rka_scheme_destroy(rka_scheme* s);

/* Solver */
typedef struct rka_solver_config {
    size_t threads;      /* q, rows averaged per iteration (>= 1) */
    size_t iterations;   /* K */
    double lambda;       /* relaxation, plain RK only */
    uint64_t seed;
    unsigned workers;    /* OS threads for per-row work; results do not depend on it */
    int relaxed;         /* nonzero: plain relaxed RK, one row per iteration */
    double residual_tol; /* stop when ||b - Ax|| <= tol; negative disables */
} rka_solver_config;

RKA_API void rka_solver_config_init(rka_solver_config* config);

/* x_star may be NULL (x_len is then ignored); with it the trace records
 * squared errors. */
RKA_API rka_status rka_solve(const rka_matrix* a, const double* b, size_t b_len, const double* x_star, size_t x_len,
                             const rka_scheme* scheme, const rka_solver_config* config, rka_trace** out);
RKA_API size_t rka_trace_length(const rka_trace* t);
RKA_API int rka_trace_has_error(const rka_trace* t);
RKA_API rka_status rka_trace_sq_err(const rka_trace* t, double* out, size_t len);
RKA_API rka_status rka_trace_sq_res(const rka_trace* t, double* out, size_t len);
RKA_API size_t rka_trace_dimension(const rka_trace* t);
RKA_API rka_status rka_trace_final_iterate(const rka_trace* t, double* out, size_t len);
/* Returns 1 and the stop iteration when the residual tolerance ended the run. */
RKA_API int rka_trace_stopped_early(const rka_trace* t, size_t* iteration);
/* Columns iteration,sq_err,sq_res (sq_err only with x_star). The provenance
 * string, if non-NULL, becomes a leading '#' comment line. */
RKA_API rka_status rka_trace_save_csv(const rka_trace* t, const char* path, const char* provenance);
RKA_API void rka_trace_destroy(rka_trace* t);

/* Convergence theory */
typedef struct rka_bound_report {
    double rate;
    double horizon_step;
    double horizon_limit; /* valid only when has_limit */
    int has_limit;
} rka_bound_report;

RKA_API rka_status rka_p_poly(double sigma, double alpha, double q, double* out);
RKA_API rka_status rka_rate_uniform(double s_min, double s_max, double alpha, double q, double* out);
RKA_API rka_status rka_horizon_uniform(const rka_spectral_info* spectrum, double alpha, double q,
                                       double r_star_norm_sq, rka_bound_report* out);
RKA_API rka_status rka_rate_general(const rka_matrix* a, double alpha, double q, double* out);
RKA_API rka_status rka_rate_consistent_general(const rka_matrix* a, const rka_scheme* scheme, double alpha, double q,
                                               double* out);
RKA_API rka_status rka_optimal_alpha(double s_min, double s_max, double q, double* out);
RKA_API rka_status rka_rt_alpha(double s_max, double q, double* out);

/* Experiments */
typedef struct rka_figure_params {
    size_t rows;
    size_t cols;
    size_t trials;
    uint64_t seed;
    rka_scheme_kind scheme;
    size_t iterations;
    double alpha;
    const size_t* threads;
    size_t threads_len;
    const double* alphas;
    size_t alphas_len;
    unsigned trial_workers;
    unsigned solver_workers;
} rka_figure_params;

/* Array members point at library-owned storage valid for the process lifetime. */
RKA_API rka_status rka_figure_default_params(rka_figure figure, rka_figure_params* out);
/* Writes CSVs and manifest.json into out_dir. */
RKA_API rka_status rka_run_figure(rka_figure figure, const rka_figure_params* params, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* RKA_RKA_H */
