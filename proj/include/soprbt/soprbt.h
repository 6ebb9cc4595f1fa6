/* soprbt — positive-real balanced truncation for symmetric second-order
 * systems, with second-order structure recovery.
 *
 * C interface of the shared library. All functions returning soprbt_status
 * use 0 for success; on failure they leave outputs untouched and store a
 * human-readable message retrievable per thread via soprbt_last_error().
 *
 * Dense matrices cross this boundary in row-major order.
 */
#ifndef SOPRBT_H
#define SOPRBT_H

#include <stdint.h>

#if defined(_WIN32)
#define SOPRBT_API __declspec(dllexport)
#else
#define SOPRBT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Mirrors the library's failure families; values double as CLI exit codes. */
typedef enum soprbt_status {
    SOPRBT_OK = 0,
    SOPRBT_ERR_VALIDATION = 2, /* input violates model-class preconditions  */
    SOPRBT_ERR_SOLVER = 3,     /* KYP/Riccati solve failed or uncertified   */
    SOPRBT_ERR_PLANNING = 4,   /* requested order infeasible                */
    SOPRBT_ERR_STRUCTURE = 5,  /* structure detection / assembly failed     */
    SOPRBT_ERR_IO = 6          /* file parsing or writing failed            */
} soprbt_status;

/* Opaque handles. */
typedef struct soprbt_system soprbt_system;  /* second-order system (M, D, K, B) */
typedef struct soprbt_result soprbt_result;  /* finished reduction               */

SOPRBT_API const char* soprbt_version(void);

/* Message of the most recent failure on the calling thread ("" if none).
 * The pointer stays valid until the next failing call on the same thread. */
SOPRBT_API const char* soprbt_last_error(void);

/* ------------------------------------------------------------------ */
/* Systems                                                             */
/* ------------------------------------------------------------------ */

/* Builds a system from row-major arrays: m_/d_/k_ are n*n, b_ is n*m. */
SOPRBT_API soprbt_status soprbt_system_create(int64_t n, int64_t m, const double* m_,
                                              const double* d_, const double* k_,
                                              const double* b_, soprbt_system** out);

/* Triple-chain benchmark oscillator with the built-in parameter set;
 * the resulting system has 3*n_per_row + 1 degrees of freedom, one input. */
SOPRBT_API soprbt_status soprbt_system_triple_chain(int64_t n_per_row, soprbt_system** out);

/* Directory I/O: M.mtx, D.mtx, K.mtx, B.mtx (+ meta.json on save). */
SOPRBT_API soprbt_status soprbt_system_load(const char* dir, soprbt_system** out);
SOPRBT_API soprbt_status soprbt_system_save(const soprbt_system* sys, const char* dir);

SOPRBT_API soprbt_status soprbt_system_dims(const soprbt_system* sys, int64_t* n, int64_t* m);

/* Copies one coefficient ('M', 'D', 'K' or 'B') into buf.
 * If buf is NULL, only *rows / *cols are set; otherwise they must already
 * hold the dimensions and buf receives rows*cols row-major values. */
SOPRBT_API soprbt_status soprbt_system_matrix(const soprbt_system* sys, char which, double* buf,
                                              int64_t* rows, int64_t* cols);

SOPRBT_API void soprbt_system_free(soprbt_system* sys);

/* ------------------------------------------------------------------ */
/* Reduction                                                           */
/* ------------------------------------------------------------------ */

typedef struct soprbt_config {
    int64_t target_r;        /* requested retained order (per sign)          */
    double cluster_tol;      /* relative singular-value clustering tolerance */
    double tol_one;          /* sigma = 1 detection                          */
    double rank_tol;         /* certificate factor rank cut                  */
    double path_tol;         /* regularization-path monotonicity slack       */
    double assembly_tol;     /* final second-order assembly residual         */
    double semi_simple_cond; /* eigenvector basis condition bound            */
    int emit_transforms;     /* nonzero: keep per-stage transform factors    */
} soprbt_config;

/* Fills cfg with the library defaults (target_r = 0 must be overwritten). */
SOPRBT_API void soprbt_config_default(soprbt_config* cfg);

/* Full pipeline: validate, lift, minimal KYP certificate, balanced
 * truncation to cfg->target_r (adjusted to the nearest feasible order),
 * second-order recovery, and internal re-verification of the result. */
SOPRBT_API soprbt_status soprbt_reduce(const soprbt_system* sys, const soprbt_config* cfg,
                                       soprbt_result** out);

/* reduced_r: retained order before padding; final_r: recovered dimension. */
SOPRBT_API soprbt_status soprbt_result_dims(const soprbt_result* res, int64_t* reduced_r,
                                            int64_t* final_r, int64_t* m);

/* A-priori gap-metric bound 2 * (sum of truncated characteristic values). */
SOPRBT_API soprbt_status soprbt_result_error_bound(const soprbt_result* res, double* bound);

/* Copies one recovered matrix: 'D' damping, 'G' stiffness factor,
 * 'K' stiffness G*G^T, 'B' input map. Protocol as soprbt_system_matrix. */
SOPRBT_API soprbt_status soprbt_result_matrix(const soprbt_result* res, char which, double* buf,
                                              int64_t* rows, int64_t* cols);

/* Recovered system as a new handle (M = I, D, K = G*G^T, B). */
SOPRBT_API soprbt_status soprbt_result_system(const soprbt_result* res, soprbt_system** out);

/* Machine-readable run report (JSON, schema_version 1) or the value
 * spectrum (CSV). Free the returned string with soprbt_string_free. */
SOPRBT_API soprbt_status soprbt_result_report_json(const soprbt_result* res, char** out);
SOPRBT_API soprbt_status soprbt_result_spectrum_csv(const soprbt_result* res, char** out);

/* Writes M.mtx (identity), D.mtx, K.mtx, B.mtx, G.mtx, report.json and
 * spectrum.csv into dir (created if missing). */
SOPRBT_API soprbt_status soprbt_result_save(const soprbt_result* res, const char* dir);

SOPRBT_API void soprbt_result_free(soprbt_result* res);
SOPRBT_API void soprbt_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Analysis                                                            */
/* ------------------------------------------------------------------ */

/* Compares two systems on a log-spaced grid of count points in
 * [lo, hi] (rad/s). Writes a per-frequency CSV to csv_path and a JSON
 * summary to json_path when the respective path is non-NULL; error_bound
 * is echoed into the summary when >= 0. max_abs / max_rel receive the
 * worst absolute / relative spectral-norm error when non-NULL. */
SOPRBT_API soprbt_status soprbt_analyze(const soprbt_system* original,
                                        const soprbt_system* reduced, double lo, double hi,
                                        int64_t count, const char* csv_path,
                                        const char* json_path, double error_bound,
                                        double* max_abs, double* max_rel);

#ifdef __cplusplus
}
#endif

#endif /* SOPRBT_H */
