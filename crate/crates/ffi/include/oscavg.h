#ifndef OSCAVG_H
#define OSCAVG_H

/* Generated by cbindgen from the oscavg-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum oscavg_status {
  OSCAVG_STATUS_OK = 0,
  // An argument violated a precondition.
  OSCAVG_STATUS_INVALID_INPUT = 1,
  // An argument lies outside a bound's validity domain.
  OSCAVG_STATUS_DOMAIN_ERROR = 2,
  // Integration or root finding failed.
  OSCAVG_STATUS_NUMERICAL_ERROR = 3,
  // A required pointer was null.
  OSCAVG_STATUS_NULL_POINTER = 4,
} oscavg_status;

// How an integration ended: 0 completed, 1 blew up, 2 step limit.
typedef enum oscavg_outcome {
  OSCAVG_OUTCOME_COMPLETED = 0,
  OSCAVG_OUTCOME_BLEW_UP = 1,
  OSCAVG_OUTCOME_STEP_LIMIT = 2,
} oscavg_outcome;

// Opaque integrator configuration handle.
typedef struct oscavg_config oscavg_config;

// Opaque trajectory handle.
typedef struct oscavg_trajectory oscavg_trajectory;

// Hyperbolicity certificate with plain-data fields; `valid` is 1 or 0.
typedef struct oscavg_certificate {
  double r0;
  double r;
  double h;
  double kappa;
  double b_tilde_cap;
  double delta_bound;
  double xi_lower;
  double mu_upper;
  double kappa_threshold;
  int valid;
} oscavg_certificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Logarithmic norm (euclidean) of a 2x2 matrix given row-major.
//
// # Safety
// `m` must point to 4 readable doubles and `out` to a writable double.
enum oscavg_status oscavg_log_norm(const double *m, double *out);

// C0 averaging error bound `b~(t)/|kappa|` on the ball of radius `r`.
//
// # Safety
// `out` must point to a writable double.
enum oscavg_status oscavg_c0_error_closed(double t, double r, double kappa, double *out);

// C1 averaging error bound `B~(t,R)/|kappa|` on the ball of radius `r`.
//
// # Safety
// `out` must point to a writable double.
enum oscavg_status oscavg_c1_error_closed(double t, double r, double kappa, double *out);

// Frequency threshold for hyperbolicity on the ball B(0, r0).
//
// # Safety
// `out` must point to a writable double.
enum oscavg_status oscavg_kappa_threshold(double r0, double *out);

// Fills a hyperbolicity certificate for B(0, r0) at frequency `kappa`.
//
// # Safety
// `out` must point to a writable `OscavgCertificate`.
enum oscavg_status oscavg_certify(double r0, double kappa, struct oscavg_certificate *out);

// Infimum isolating-square half-side R with R^2(R^2-1) > (1/2 + kappa/4)^2.
//
// # Safety
// `out` must point to a writable double.
enum oscavg_status oscavg_segment_radius_bound(double kappa, double *out);

// Squared-norm escape threshold for frequency `kappa > 0`. Pass `delta <= 0`
// to use the optimal angle.
//
// # Safety
// `out` must point to a writable double.
enum oscavg_status oscavg_escape_norm_sq_threshold(double kappa, double delta, double *out);

// Evaluates the generic C0 averaging bound from a constants bundle given as
// JSON ({"l", "c_F", "c_DzF", "c_DzzF", "omega", "terms": [...]}).
//
// # Safety
// `json` must be a NUL-terminated string; `out` a writable double.
enum oscavg_status oscavg_c0_bound_json(const char *json, double t, double *out);

// Evaluates the generic C1 averaging bound from a constants bundle given as
// JSON; same schema as [`oscavg_c0_bound_json`].
//
// # Safety
// `json` must be a NUL-terminated string; `out` a writable double.
enum oscavg_status oscavg_c1_bound_json(const char *json, double t, double *out);

// Creates an integrator configuration with the default tolerances.
struct oscavg_config *oscavg_config_new(void);

// Overrides the relative/absolute tolerances.
//
// # Safety
// `cfg` must be a live pointer from [`oscavg_config_new`].
enum oscavg_status oscavg_config_set_tolerances(struct oscavg_config *cfg,
                                                double rel_tol,
                                                double abs_tol);

// Overrides the blow-up detection norm.
//
// # Safety
// `cfg` must be a live pointer from [`oscavg_config_new`].
enum oscavg_status oscavg_config_set_blowup_norm(struct oscavg_config *cfg, double blowup_norm);

// Releases a configuration handle.
//
// # Safety
// `cfg` must come from [`oscavg_config_new`] and not be used afterwards.
void oscavg_config_free(struct oscavg_config *cfg);

// Integrates the flow from `(x0, y0)` at `t0` over `duration` (may be
// negative). With `variational != 0` the first variational equation is
// co-integrated. On success `*out` owns a trajectory handle.
//
// # Safety
// `cfg` must be live (or null for defaults); `out` must be writable.
enum oscavg_status oscavg_integrate(const struct oscavg_config *cfg,
                                    double kappa,
                                    double t0,
                                    double x0,
                                    double y0,
                                    double duration,
                                    int variational,
                                    struct oscavg_trajectory **out);

// Outcome of a finished integration.
//
// # Safety
// `traj` must be a live pointer from [`oscavg_integrate`].
enum oscavg_outcome oscavg_trajectory_outcome(const struct oscavg_trajectory *traj);

// Final time and state `(t, x, y)` of the trajectory.
//
// # Safety
// `traj` must be live; `out` must point to 3 writable doubles.
enum oscavg_status oscavg_trajectory_final(const struct oscavg_trajectory *traj, double *out);

// First blow-up crossing time; `DomainError` unless the outcome is `BlewUp`.
//
// # Safety
// `traj` must be live; `out` must be writable.
enum oscavg_status oscavg_trajectory_escape_time(const struct oscavg_trajectory *traj, double *out);

// Monodromy matrix as 4 doubles row-major; `DomainError` for trajectories
// integrated without the variational equation.
//
// # Safety
// `traj` must be live; `out` must point to 4 writable doubles.
enum oscavg_status oscavg_trajectory_monodromy(const struct oscavg_trajectory *traj, double *out);

// Number of stored samples.
//
// # Safety
// `traj` must be live.
size_t oscavg_trajectory_sample_count(const struct oscavg_trajectory *traj);

// Copies up to `cap` samples as `(t, x, y)` triples into `out` (row-major,
// `3*cap` doubles) and returns the number of samples written.
//
// # Safety
// `traj` must be live; `out` must point to `3*cap` writable doubles.
size_t oscavg_trajectory_samples(const struct oscavg_trajectory *traj, double *out, size_t cap);

// Releases a trajectory handle.
//
// # Safety
// `traj` must come from [`oscavg_integrate`] and not be used afterwards.
void oscavg_trajectory_free(struct oscavg_trajectory *traj);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OSCAVG_H */
