/* freeconv: free additive convolution, outlier prediction for A + U*BU,
 * and a Haar-unitary Monte Carlo harness.
 *
 * All functions return an fc_status; on failure fc_last_error() holds a
 * message for the calling thread. Objects are opaque handles released with
 * the matching *_free function (NULL is accepted). Complex numbers are passed
 * as (re, im) pairs; matrices as column-major interleaved re/im arrays.
 */
#ifndef FREECONV_FREECONV_H
#define FREECONV_FREECONV_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(FREECONV_BUILDING_LIBRARY)
#define FC_API __declspec(dllexport)
#else
#define FC_API __declspec(dllimport)
#endif
#else
#define FC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fc_status {
  FC_OK = 0,
  FC_ERR_DOMAIN = 1,      /* point in the support / outside an operation's domain */
  FC_ERR_POLE = 2,        /* reciprocal Cauchy transform has a pole */
  FC_ERR_INVERSION = 3,   /* R-transform Newton inversion failed */
  FC_ERR_CONVERGENCE = 4, /* iteration budget exhausted */
  FC_ERR_BOUNDARY = 5,    /* boundary value of omega is not real */
  FC_ERR_FAMILY = 6,      /* no closed-form R-transform */
  FC_ERR_SIZE = 7,
  FC_ERR_CONFIG = 8,
  FC_ERR_SINGULAR = 9,
  FC_ERR_MEASURE = 10, /* malformed or invalid measure */
  FC_ERR_INVALID_ARGUMENT = 20,
  FC_ERR_INTERNAL = 21
} fc_status;

typedef enum fc_transform {
  FC_TRANSFORM_G = 0,
  FC_TRANSFORM_G_PRIME = 1,
  FC_TRANSFORM_F = 2,
  FC_TRANSFORM_H = 3,
  FC_TRANSFORM_H_PRIME = 4,
  FC_TRANSFORM_R = 5
} fc_transform;

typedef enum fc_backend { FC_BACKEND_DEFAULT = 0, FC_BACKEND_NATIVE = 1, FC_BACKEND_LAPACK = 2 } fc_backend;

typedef struct fc_measure fc_measure;
typedef struct fc_support fc_support;
typedef struct fc_predictions fc_predictions;
typedef struct fc_report fc_report;
typedef struct fc_model fc_model;

FC_API const char* fc_version(void);
FC_API const char* fc_status_string(fc_status status);
/* Message of the last failed call on this thread ("" if none). */
FC_API const char* fc_last_error(void);
/* 1 when the library was built with LAPACK. */
FC_API int fc_lapack_available(void);

/* ---- measures ---------------------------------------------------------- */

/* {"family":"semicircle","variance":t}, {"atoms":[[x,w],...]},
 * {"density":{"intervals":[{"a":..,"b":..,"nodes":[..],"values":[..]}]}}, ... */
FC_API fc_status fc_measure_from_json(const char* json, fc_measure** out);
FC_API fc_status fc_measure_semicircle(double variance, fc_measure** out);
FC_API fc_status fc_measure_marchenko_pastur(double ratio, double scale, fc_measure** out);
FC_API fc_status fc_measure_point_mass(double a, fc_measure** out);
FC_API fc_status fc_measure_bernoulli_symmetric(fc_measure** out);
FC_API fc_status fc_measure_empirical(const double* points, size_t n, fc_measure** out);
FC_API void fc_measure_free(fc_measure* m);

/* Writes the canonical JSON spec (NUL-terminated) into buf; *needed receives
 * the required size including the terminator. buf may be NULL when cap is 0. */
FC_API fc_status fc_measure_to_json(const fc_measure* m, char* buf, size_t cap, size_t* needed);
FC_API fc_status fc_measure_radius(const fc_measure* m, double* out);

FC_API fc_status fc_transform_eval(const fc_measure* m, fc_transform which, double re, double im, double* out_re,
                                   double* out_im);
FC_API fc_status fc_quantile_sample(const fc_measure* m, size_t n, double* out);

FC_API fc_status fc_measure_support(const fc_measure* m, fc_support** out);
FC_API size_t fc_support_count(const fc_support* s);
FC_API fc_status fc_support_interval(const fc_support* s, size_t i, double* lo, double* hi);
FC_API fc_status fc_support_enlarge(const fc_support* s, double eps, fc_support** out);
FC_API double fc_support_distance(const fc_support* s, double x);
FC_API void fc_support_free(fc_support* s);

/* ---- subordination ----------------------------------------------------- */

typedef struct fc_subordination_point {
  double z_re, z_im;
  double omega1_re, omega1_im;
  double omega2_re, omega2_im;
  int iterations;
  double residual;
  double derivative_product_re, derivative_product_im;
} fc_subordination_point;

FC_API fc_status fc_denjoy_wolff(const fc_measure* mu, const fc_measure* nu, double z_re, double z_im,
                                 fc_subordination_point* out);
FC_API fc_status fc_convolution_cauchy(const fc_measure* mu, const fc_measure* nu, double z_re, double z_im,
                                       double* out_re, double* out_im);

/* Density of mu boxplus nu on `grid`. ladder may be NULL (default
 * 1e-2..1e-6). ok_out (nullable) gets 0 for points that failed to converge;
 * trace_out (nullable) gets the subordination point at the smallest rung. */
FC_API fc_status fc_convolution_density(const fc_measure* mu, const fc_measure* nu, const double* grid, size_t n,
                                        const double* ladder, size_t ladder_len, int extrapolate, unsigned threads,
                                        double* density_out, int* ok_out, fc_subordination_point* trace_out);
/* cutoff <= 0 selects 1e-8. */
FC_API fc_status fc_convolution_support(const fc_measure* mu, const fc_measure* nu, double cutoff, unsigned threads,
                                        fc_support** out);
FC_API fc_status fc_omega_boundary(const fc_measure* mu, const fc_measure* nu, double x, double* value,
                                   int* is_pole);

/* ---- outliers ---------------------------------------------------------- */

typedef struct fc_spike {
  double theta;
  int multiplicity;
} fc_spike;

typedef struct fc_prediction {
  double rho;
  double theta;
  int multiplicity;
  double derivative_product;
  double residual;
  double distance_to_support;
} fc_prediction;

typedef struct fc_outlier_options {
  int has_window;
  double window_lo, window_hi;
  double grid_step; /* <= 0: automatic */
  unsigned threads;
} fc_outlier_options;

FC_API fc_status fc_spike_residual(const fc_measure* mu, const fc_measure* nu, double theta, double rho,
                                   double* out);
FC_API fc_status fc_derivative_product(const fc_measure* mu, const fc_measure* nu, double theta, double rho,
                                       double* out);
/* opt may be NULL. */
FC_API fc_status fc_solve_outliers(const fc_measure* mu, const fc_measure* nu, const fc_spike* spikes,
                                   size_t n_spikes, const fc_outlier_options* opt, fc_predictions** out);
/* *found = 0 when H'(theta) <= 0. */
FC_API fc_status fc_outliers_infdiv(const fc_measure* mu, const fc_measure* nu, double theta, int* found,
                                    double* rho);
FC_API fc_status fc_outliers_point_mass(const fc_measure* nu, const fc_spike* gammas, size_t n,
                                       fc_predictions** out);
FC_API size_t fc_predictions_count(const fc_predictions* p);
FC_API fc_status fc_predictions_get(const fc_predictions* p, size_t i, fc_prediction* out);
FC_API size_t fc_predictions_dropped_count(const fc_predictions* p);
FC_API const char* fc_predictions_dropped(const fc_predictions* p, size_t i);
/* The support K = supp(mu boxplus nu) used during the search (empty for fc_outliers_point_mass). */
FC_API fc_status fc_predictions_support(const fc_predictions* p, fc_support** out);
FC_API void fc_predictions_free(fc_predictions* p);

/* ---- random matrices --------------------------------------------------- */

FC_API fc_status fc_haar_unitary(size_t n, uint64_t seed, uint64_t stream, fc_backend backend, double* out);
/* h: n*n column-major interleaved; out: n eigenvalues, nonincreasing. */
FC_API fc_status fc_hermitian_eigenvalues(size_t n, const double* h, fc_backend backend, double* out);

FC_API fc_status fc_build_model(const fc_measure* mu, const fc_measure* nu, const fc_spike* spikes, size_t n_spikes,
                                size_t n, uint64_t seed, uint64_t stream, fc_backend backend, fc_model** out);
FC_API size_t fc_model_size(const fc_model* m);
FC_API fc_status fc_model_diagonals(const fc_model* m, double* a_out, double* b_out);
/* X as n*n column-major interleaved. */
FC_API fc_status fc_model_matrix(const fc_model* m, double* out);
/* Computes the spectrum on first use; out gets n values, nonincreasing. */
FC_API fc_status fc_model_eigenvalues(fc_model* m, double* out);
/* block_diag_out (nullable) gets r interleaved complex diagonal entries of P R_N P^t. */
FC_API fc_status fc_model_det_m(const fc_model* m, const fc_spike* spikes, size_t n_spikes, double alpha,
                                double lambda, double* det_re, double* det_im, double* block_diag_out);
FC_API fc_status fc_default_alpha(const fc_measure* mu, double* out);
FC_API void fc_model_free(fc_model* m);

typedef struct fc_verification_config {
  size_t n;
  int trials;
  double epsilon;
  double eta; /* <= 0: 4 N^{-1/3} diam(K) */
  uint64_t seed;
  unsigned threads;
  double pass_threshold;
  fc_backend backend;
} fc_verification_config;

typedef struct fc_window_row {
  int trial;
  double rho;
  double epsilon;
  int expected;
  int observed;
} fc_window_row;

FC_API void fc_verification_config_default(fc_verification_config* cfg);
/* Uses the predictions and support K carried by `predictions`. */
FC_API fc_status fc_run_verification(const fc_measure* mu, const fc_measure* nu, const fc_spike* spikes,
                                     size_t n_spikes, const fc_predictions* predictions,
                                     const fc_verification_config* cfg, fc_report** out);
FC_API double fc_report_pass_fraction(const fc_report* r);
FC_API int fc_report_passed(const fc_report* r);
FC_API double fc_report_eta(const fc_report* r);
FC_API int fc_report_separation_ok(const fc_report* r);
FC_API size_t fc_report_row_count(const fc_report* r);
FC_API fc_status fc_report_row(const fc_report* r, size_t i, fc_window_row* out);
FC_API size_t fc_report_stray_count(const fc_report* r);
FC_API fc_status fc_report_stray(const fc_report* r, size_t i, int* trial, double* eigenvalue);
FC_API size_t fc_report_boundary_flag_count(const fc_report* r);
FC_API double fc_report_boundary_flag(const fc_report* r, size_t i);
FC_API int fc_report_trial_passed(const fc_report* r, size_t trial);
FC_API void fc_report_free(fc_report* r);

#ifdef __cplusplus
}
#endif

#endif /* FREECONV_FREECONV_H */
