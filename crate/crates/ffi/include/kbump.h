#ifndef KBUMP_H
#define KBUMP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes shared by every function.
 */
typedef enum KbStatus {
  KB_STATUS_OK = 0,
  KB_STATUS_NULL_POINTER = 1,
  KB_STATUS_INVALID_ARGUMENT = 2,
  KB_STATUS_SUPERCRITICAL = 3,
  KB_STATUS_NUMERICAL_FAILURE = 4,
  KB_STATUS_IO = 5,
  KB_STATUS_PANIC = 6,
} KbStatus;

/*
 Radial ground state `U` of `-ΔU + U = U^p`.
 */
typedef struct KbProfile KbProfile;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failure on this thread, or NULL. Owned by the
 library; valid until the next failing call on the same thread.
 */
const char *kb_last_error(void);

/*
 Library version, static string.
 */
const char *kb_version(void);

/*
 Solves for the ground state in dimension `dimension` with exponent `p`.
 On success `*out_profile` receives a new handle.
 */
enum KbStatus kb_ground_state(size_t dimension,
                              double p,
                              double tol,
                              struct KbProfile **out_profile);

/*
 Releases a handle. NULL is ignored.
 */
void kb_profile_free(struct KbProfile *profile);

/*
 `U(s)` and `U'(s)`; either out pointer may be NULL.
 */
enum KbStatus kb_profile_eval(const struct KbProfile *profile,
                              double s,
                              double *value,
                              double *derivative);

/*
 `U(0)`.
 */
enum KbStatus kb_profile_peak(const struct KbProfile *profile, double *peak);

/*
 `A` and `B1` for `V = 1 + a(1+r²)^{-m/2}`.
 */
enum KbStatus kb_expansion_constants(const struct KbProfile *profile,
                                     double a,
                                     double m,
                                     double *a_out,
                                     double *b1_out);

/*
 Pair interaction `Ψ(d) = ∫U^p(y)U(y - d e_1)`.
 */
enum KbStatus kb_interaction(const struct KbProfile *profile, double d, double *psi);

/*
 Admissible ring radii `[lower, upper]` for `k` bumps.
 */
enum KbStatus kb_admissible_radii(size_t k, double m, double beta, double *lower, double *upper);

/*
 Reduced energy `F(r)` for `k` bumps on a ring of radius `r`, sector grid
 spacing `h`. The profile must be two-dimensional.
 */
enum KbStatus kb_reduced_energy(const struct KbProfile *profile,
                                double a,
                                double m,
                                size_t k,
                                double r,
                                double h,
                                double *f_out);

/*
 Runs every stage of the pipeline for the JSON config at `config_path`
 into `out_dir`.
 */
enum KbStatus kb_run_pipeline(const char *config_path, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KBUMP_H */
