#ifndef GRADVI_GRADVI_H
#define GRADVI_GRADVI_H

/* C interface to the gradvi library. Every object is an opaque handle owned
 * by the caller and released with the matching _free function. Functions
 * return a status code; on failure gradvi_last_error() describes the problem
 * (thread-local, valid until the next call on the same thread). */

#include <stddef.h>
#include <stdint.h>

#if defined(GRADVI_BUILDING_LIBRARY)
#define GRADVI_API __attribute__((visibility("default")))
#else
#define GRADVI_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  GRADVI_OK = 0,
  GRADVI_ERR_DOMAIN = 1,
  GRADVI_ERR_CONVERGENCE = 2,
  GRADVI_ERR_NUMERICAL = 3,
  GRADVI_ERR_RANGE = 4,
  GRADVI_ERR_IO = 5,
  GRADVI_ERR_INTERNAL = 6,
  GRADVI_ERR_NULL = 7
} gradvi_status;

typedef enum { GRADVI_METHOD_DIRECT = 0, GRADVI_METHOD_COMPOUND = 1 } gradvi_method;
typedef enum { GRADVI_PRIOR_ASH = 0, GRADVI_PRIOR_POINT_NORMAL = 1 } gradvi_prior_family;
typedef enum { GRADVI_DESIGN_IID = 0, GRADVI_DESIGN_BLOCK = 1 } gradvi_design;

typedef struct gradvi_dataset gradvi_dataset;
typedef struct gradvi_fit gradvi_fit;
typedef struct gradvi_simulation gradvi_simulation;

GRADVI_API const char* gradvi_last_error(void);
GRADVI_API const char* gradvi_status_string(gradvi_status status);
GRADVI_API const char* gradvi_version(void);

/* ---- datasets ---------------------------------------------------------- */

/* X is n x p in row-major order; both arrays are copied. With standardize
 * set, fits centre y and the columns of X and report an intercept. */
GRADVI_API gradvi_status gradvi_dataset_dense(const double* X, size_t n, size_t p,
                                              const double* y, int standardize,
                                              gradvi_dataset** out);
/* Design H^(order+1) on y of length n; order in {0, 1, 2}. */
GRADVI_API gradvi_status gradvi_dataset_trendfilter(const double* y, size_t n, int order,
                                                    int scaled, gradvi_dataset** out);
GRADVI_API void gradvi_dataset_free(gradvi_dataset* data);
GRADVI_API size_t gradvi_dataset_n(const gradvi_dataset* data);
GRADVI_API size_t gradvi_dataset_p(const gradvi_dataset* data);

/* ---- fitting ----------------------------------------------------------- */

typedef struct {
  gradvi_method method;
  gradvi_prior_family prior;
  int k_mix;
  double sigma2_init;
  int max_iters;
  double grad_tol;
  double rel_obj_tol;
  int lbfgs_memory;
  /* -1: 50 prior-only iterations when warm started, none otherwise. */
  int prior_warmup_iters;
} gradvi_fit_options;

GRADVI_API void gradvi_fit_options_default(gradvi_fit_options* opts);

/* `init` (length p) is an optional warm start; pass NULL for a null start. */
GRADVI_API gradvi_status gradvi_fit_run(const gradvi_dataset* data, const gradvi_fit_options* opts,
                                        const double* init, size_t init_len, gradvi_fit** out);
GRADVI_API void gradvi_fit_free(gradvi_fit* fit);

GRADVI_API size_t gradvi_fit_p(const gradvi_fit* fit);
/* Copies p posterior means into `out`. */
GRADVI_API gradvi_status gradvi_fit_coef(const gradvi_fit* fit, double* out, size_t len);
GRADVI_API double gradvi_fit_intercept(const gradvi_fit* fit);
GRADVI_API double gradvi_fit_sigma2(const gradvi_fit* fit);
GRADVI_API double gradvi_fit_elbo(const gradvi_fit* fit);
GRADVI_API double gradvi_fit_elbo_init(const gradvi_fit* fit);
GRADVI_API int gradvi_fit_iterations(const gradvi_fit* fit);
GRADVI_API int gradvi_fit_evaluations(const gradvi_fit* fit);
GRADVI_API int gradvi_fit_warmup_iterations(const gradvi_fit* fit);
GRADVI_API double gradvi_fit_grad_norm(const gradvi_fit* fit);
GRADVI_API const char* gradvi_fit_status(const gradvi_fit* fit);
GRADVI_API int gradvi_fit_converged(const gradvi_fit* fit);
GRADVI_API const char* gradvi_fit_method(const gradvi_fit* fit);

GRADVI_API const char* gradvi_fit_prior_family(const gradvi_fit* fit);
/* Mixture view of the fitted prior: K weights and K component variances.
 * Point-normal reports (1 - w, w) on (0, sigma_1^2). */
GRADVI_API size_t gradvi_fit_prior_size(const gradvi_fit* fit);
GRADVI_API gradvi_status gradvi_fit_prior(const gradvi_fit* fit, double* weights,
                                          double* variances, size_t len);

GRADVI_API size_t gradvi_fit_elbo_trace_size(const gradvi_fit* fit);
GRADVI_API gradvi_status gradvi_fit_elbo_trace(const gradvi_fit* fit, double* out, size_t len);

GRADVI_API void gradvi_fit_timings(const gradvi_fit* fit, double* matvec_seconds,
                                   double* inversion_seconds, double* total_seconds);

/* Fitted values X coef + intercept, length n. */
GRADVI_API gradvi_status gradvi_fit_predict(const gradvi_fit* fit, const gradvi_dataset* data,
                                            double* out, size_t len);

/* ---- coordinate ascent oracle ------------------------------------------ */

/* Coordinate ascent with the prior and sigma2 taken from `fit`, started at
 * zero. Writes p coefficients, the sweep count and the infinity norm of the
 * direct objective's coefficient gradient at the result. */
GRADVI_API gradvi_status gradvi_cavi_check(const gradvi_dataset* data, const gradvi_fit* fit,
                                           double tol, int max_sweeps, double* coef, size_t len,
                                           int* sweeps, double* grad_inf_norm);

/* ---- simulation -------------------------------------------------------- */

typedef struct {
  int n;
  int p;
  int s;
  double pve;
  gradvi_design design;
  uint64_t seed;
  int min_block_size;
} gradvi_linreg_spec;

GRADVI_API void gradvi_linreg_spec_default(gradvi_linreg_spec* spec);
GRADVI_API gradvi_status gradvi_simulate_linreg(const gradvi_linreg_spec* spec,
                                                gradvi_simulation** out);
GRADVI_API gradvi_status gradvi_simulate_trendfilter(int n, int n_changepoints, double sigma,
                                                     uint64_t seed, gradvi_simulation** out);
GRADVI_API void gradvi_simulation_free(gradvi_simulation* sim);

GRADVI_API size_t gradvi_simulation_n(const gradvi_simulation* sim);
/* Zero for trend-filter simulations, which carry no design matrix. */
GRADVI_API size_t gradvi_simulation_p(const gradvi_simulation* sim);
/* Row-major n x p. */
GRADVI_API const double* gradvi_simulation_X(const gradvi_simulation* sim);
GRADVI_API const double* gradvi_simulation_y(const gradvi_simulation* sim);
/* Coefficients (length p) for regression; the noiseless trend (length n)
 * for trend filtering. */
GRADVI_API const double* gradvi_simulation_truth(const gradvi_simulation* sim);
GRADVI_API size_t gradvi_simulation_truth_size(const gradvi_simulation* sim);
GRADVI_API double gradvi_simulation_sigma2(const gradvi_simulation* sim);
/* Causal predictors (regression) or changepoints (trend filtering). */
GRADVI_API size_t gradvi_simulation_support_size(const gradvi_simulation* sim);
GRADVI_API const int* gradvi_simulation_support(const gradvi_simulation* sim);
GRADVI_API size_t gradvi_simulation_block_count(const gradvi_simulation* sim);
GRADVI_API const int* gradvi_simulation_block_sizes(const gradvi_simulation* sim);

/* ---- utilities --------------------------------------------------------- */

GRADVI_API gradvi_status gradvi_rmse(const double* a, const double* b, size_t len, double* out);
GRADVI_API gradvi_status gradvi_default_grid(int K, double* out, size_t len);

#ifdef __cplusplus
}
#endif

#endif
