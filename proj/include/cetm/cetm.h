#ifndef CETM_H
#define CETM_H

/* C interface to the CETM solver library.
 *
 * Conventions:
 *  - Every fallible call returns a cetm_status; outputs go through pointers.
 *    On failure the output is untouched and cetm_last_error() carries a
 *    thread-local message for the failing call.
 *  - Handles are opaque and owned by the caller; release them with the
 *    matching *_free function.  NULL is always rejected, never dereferenced.
 *  - Array getters use the two-call pattern: pass a NULL buffer to query the
 *    element count, then call again with storage of at least that size.
 *  - Segment indices are 1-based, matching the solver's convention.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CETM_API __declspec(dllexport)
#else
#define CETM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cetm_status {
  CETM_OK = 0,
  CETM_ERR_INVALID_ARGUMENT = 1,
  CETM_ERR_RANGE = 2,
  CETM_ERR_PRECONDITION = 3,
  CETM_ERR_NOT_DIVERGENT = 4,
  CETM_ERR_INVALID_BRACKET = 5,
  CETM_ERR_UNRELIABLE_VERIFICATION = 6,
  CETM_ERR_INSUFFICIENT_DATA = 7,
  CETM_ERR_DEGENERATE_INPUT = 8,
  CETM_ERR_NO_RESULT = 9,
  CETM_ERR_IO = 10,
  CETM_ERR_OVERFLOW = 11,
  CETM_ERR_INTERNAL = 12,
  CETM_ERR_UNKNOWN = 13
} cetm_status;

/* cetm_seed.mode */
enum {
  CETM_SEED_LEFT = 0,
  CETM_SEED_RIGHT = 1,
  CETM_SEED_INTERIOR = 2
};

/* cetm_divergence_report.cls */
enum {
  CETM_CLASS_CONVERGENT = 0,
  CETM_CLASS_ALPHA = 1,
  CETM_CLASS_BETA_PLUS = 2,
  CETM_CLASS_BETA_MINUS = 3
};

/* cetm_record.side / collect side argument */
enum {
  CETM_SIDE_ABOVE = 0,
  CETM_SIDE_BELOW = 1
};

/* cetm_collect_options.pc_mode */
enum {
  CETM_PC_MAGNITUDE = 0,
  CETM_PC_REAL = 1,
  CETM_PC_IMAG = 2
};

/* cetm_oracle_result.method */
enum {
  CETM_ORACLE_NUMEROV = 0,
  CETM_ORACLE_ANALYTIC_HARMONIC = 1,
  CETM_ORACLE_ANALYTIC_WELL = 2
};

typedef struct cetm_potential cetm_potential;
typedef struct cetm_wave cetm_wave;
typedef struct cetm_spectrum cetm_spectrum;
typedef struct cetm_dataset cetm_dataset;

typedef struct cetm_seed {
  int mode;
  int segment;  /* interior mode only */
  double b_re;  /* interior amplitude B_j */
  double b_im;
} cetm_seed;

typedef struct cetm_solver_options {
  double tol;                  /* bisection width target, default 1e-12 */
  int64_t tail_threshold_exp;  /* divergence threshold, default 64 */
  int points_per_segment;      /* sampling density, default 4 */
  double verify_epsilon;       /* 0 = auto */
  int threads;                 /* default 1 */
} cetm_solver_options;

typedef struct cetm_eigen {
  double energy;
  double bracket_lo;
  double bracket_hi;
  int iterations;
  int64_t tail_exponent;
  int verified;
} cetm_eigen;

typedef struct cetm_wave_sample {
  double x;
  double re_m;  /* mantissa of psi */
  double im_m;
  int64_t exp2; /* psi = (re_m + i im_m) * 2^exp2 */
} cetm_wave_sample;

typedef struct cetm_divergence_report {
  int cls;
  int sign_left;  /* +1 / -1, 0 = no divergent tail on that side */
  int sign_right;
  int64_t tail_exponent;
} cetm_divergence_report;

typedef struct cetm_interior_stats {
  double log2_max;
  double x_peak;
} cetm_interior_stats;

typedef struct cetm_collect_options {
  double tau;
  int points_per_segment;
  int64_t tail_threshold_exp;
  int kd_segment_offset;
  int pc_mode;
  double tol;  /* tolerance the reference was solved with */
  int threads;
} cetm_collect_options;

typedef struct cetm_record {
  double e;
  double e_n;
  double delta_e;
  double x_d;
  double delta_x;
  double k_d;
  double p_d_factor;
  double p_c;
  int side;
} cetm_record;

typedef struct cetm_fit {
  double a;
  double median_rel_residual;
  double median_log_residual;
  int n_records;
} cetm_fit;

typedef struct cetm_oracle_result {
  double eigenvalue;
  int method;
  double grid_step;
  int nodes;
} cetm_oracle_result;

typedef struct cetm_comparison {
  double cetm;
  double oracle;
  double abs_diff;
  double rel_diff;
  int pass;
} cetm_comparison;

typedef struct cetm_self_tune {
  int convergent;
  double b;
  double x_d;
} cetm_self_tune;

CETM_API const char* cetm_version(void);

/* Message for the most recent failing call on this thread; empty string if
 * none.  The pointer stays valid until the next failing call. */
CETM_API const char* cetm_last_error(void);

/* ---- defaults ---- */

CETM_API void cetm_seed_left(cetm_seed* s);
CETM_API void cetm_seed_right(cetm_seed* s);
CETM_API void cetm_seed_interior(int segment, double b_re, double b_im,
                                 cetm_seed* s);
CETM_API void cetm_solver_options_init(cetm_solver_options* o);
CETM_API void cetm_collect_options_init(cetm_collect_options* o);

/* ---- potentials ---- */

CETM_API cetm_status cetm_potential_harmonic(double xmin, double xmax,
                                             int n_segments,
                                             cetm_potential** out);
CETM_API cetm_status cetm_potential_finite_well(double depth, double width,
                                                double padding, int n_segments,
                                                cetm_potential** out);
CETM_API cetm_status cetm_potential_hydrogen(double softening, double xmin,
                                             double xmax, int n_segments,
                                             cetm_potential** out);
CETM_API cetm_status cetm_potential_from_samples(const double* xs,
                                                 const double* vs, size_t n,
                                                 cetm_potential** out);
CETM_API cetm_status cetm_potential_load(const char* path,
                                         cetm_potential** out);
CETM_API cetm_status cetm_potential_save(const cetm_potential* p,
                                         const char* path);
CETM_API int cetm_potential_segments(const cetm_potential* p);
CETM_API cetm_status cetm_potential_domain(const cetm_potential* p,
                                           double* xmin, double* xmax);
CETM_API cetm_status cetm_potential_segment_value(const cetm_potential* p,
                                                  int segment, double* value);
CETM_API void cetm_potential_free(cetm_potential* p);

/* ---- propagation and divergence ---- */

/* disable_scaling != 0 folds the running exponent into raw coefficients
 * after every boundary; overflow then surfaces as CETM_ERR_OVERFLOW. */
CETM_API cetm_status cetm_propagate(const cetm_potential* p, double energy,
                                    const cetm_seed* seed, int disable_scaling,
                                    cetm_wave** out);
CETM_API cetm_status cetm_wave_energy(const cetm_wave* w, double* energy);
CETM_API cetm_status cetm_wave_samples(const cetm_wave* w,
                                       int points_per_segment,
                                       cetm_wave_sample* buf, size_t cap,
                                       size_t* count);
CETM_API cetm_status cetm_wave_classify(const cetm_wave* w,
                                        int64_t tail_threshold_exp,
                                        int points_per_segment,
                                        cetm_divergence_report* out);
CETM_API cetm_status cetm_wave_interior_stats(const cetm_wave* w,
                                              int points_per_segment,
                                              cetm_interior_stats* out);
CETM_API cetm_status cetm_wave_detect_xd(const cetm_wave* w,
                                         const cetm_wave* reference,
                                         double tau, int points_per_segment,
                                         double* x_d);
CETM_API cetm_status cetm_hamiltonian_residual(const cetm_wave* w, double step,
                                               double* residual);
CETM_API cetm_status cetm_divergence_sign(const cetm_potential* p,
                                          double energy, const cetm_seed* seed,
                                          int* sign);
CETM_API void cetm_wave_free(cetm_wave* w);

/* ---- eigenvalue search ---- */

CETM_API cetm_status cetm_solve_spectrum(const cetm_potential* p, double e_min,
                                         double e_max, int steps,
                                         const cetm_seed* seed,
                                         const cetm_solver_options* options,
                                         cetm_spectrum** out);
/* Nearest eigenstate to `energy`; the result handle holds one entry. */
CETM_API cetm_status cetm_solve_nearest(const cetm_potential* p, double energy,
                                        const cetm_seed* seed,
                                        const cetm_solver_options* options,
                                        cetm_spectrum** out);
CETM_API cetm_status cetm_verify_cs(const cetm_potential* p, double e_n,
                                    double epsilon, const cetm_seed* seed,
                                    const cetm_solver_options* options,
                                    int* flag);
CETM_API cetm_status cetm_self_tune_bj(const cetm_potential* p, double energy,
                                       int segment, double tau,
                                       const cetm_solver_options* options,
                                       cetm_self_tune* out);
CETM_API size_t cetm_spectrum_size(const cetm_spectrum* s);
CETM_API cetm_status cetm_spectrum_get(const cetm_spectrum* s, size_t index,
                                       cetm_eigen* out);
/* The solved eigenstate's wavefunction as a fresh wave handle. */
CETM_API cetm_status cetm_spectrum_wave(const cetm_spectrum* s, size_t index,
                                        cetm_wave** out);
CETM_API void cetm_spectrum_free(cetm_spectrum* s);

/* ---- uncertainty dataset and fit ---- */

CETM_API cetm_status cetm_dataset_new(cetm_dataset** out);
/* Collect one detuning family off spectrum entry `index` and append it. */
CETM_API cetm_status cetm_dataset_collect(cetm_dataset* d,
                                          const cetm_potential* p,
                                          const cetm_spectrum* s, size_t index,
                                          const double* detunings, size_t n,
                                          int side,
                                          const cetm_collect_options* options);
CETM_API size_t cetm_dataset_size(const cetm_dataset* d);
CETM_API cetm_status cetm_dataset_get(const cetm_dataset* d, size_t index,
                                      cetm_record* out);
CETM_API size_t cetm_dataset_warning_count(const cetm_dataset* d);
/* Warning text owned by the dataset handle; NULL on bad index. */
CETM_API const char* cetm_dataset_warning(const cetm_dataset* d, size_t index);
/* Two-call: *length is set to the byte count excluding the terminator; the
 * buffer is filled and NUL-terminated when cap > *length. */
CETM_API cetm_status cetm_dataset_csv(const cetm_dataset* d, char* buf,
                                      size_t cap, size_t* length);
CETM_API cetm_status cetm_fit_uncertainty(const cetm_dataset* d,
                                          cetm_fit* out);
CETM_API cetm_status cetm_check_inequality(const cetm_record* record, double a,
                                           int* holds);
CETM_API void cetm_dataset_free(cetm_dataset* d);

/* ---- independent oracles ---- */

CETM_API cetm_status cetm_oracle_numerov(const cetm_potential* p,
                                         double bracket_lo, double bracket_hi,
                                         double grid_step, double tol,
                                         cetm_oracle_result* out);
CETM_API cetm_status cetm_oracle_harmonic_energy(int n, double* energy);
CETM_API cetm_status cetm_oracle_harmonic_psi(int n, double x, double* psi);
CETM_API cetm_status cetm_oracle_finite_well(double depth, double width,
                                             double* buf, size_t cap,
                                             size_t* count);
CETM_API cetm_status cetm_oracle_compare(double cetm_energy,
                                         const cetm_oracle_result* oracle,
                                         double tol, cetm_comparison* out);

#ifdef __cplusplus
}
#endif

#endif /* CETM_H */
