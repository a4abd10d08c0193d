#ifndef SRRSIM_H
#define SRRSIM_H

/* Generated by cbindgen from srrsim-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by fallible calls.
typedef enum SrrsimStatus {
  SRRSIM_STATUS_OK = 0,
  SRRSIM_STATUS_INVALID_ARGUMENT = 1,
  SRRSIM_STATUS_MODEL_VALIDITY = 2,
  SRRSIM_STATUS_NO_RESONANCE = 3,
  SRRSIM_STATUS_NO_TAG_DETECTED = 4,
  SRRSIM_STATUS_ESTIMATOR_INPUT = 5,
  SRRSIM_STATUS_LINK_INFEASIBLE = 6,
  SRRSIM_STATUS_NULL_POINTER = 7,
} SrrsimStatus;

// Opaque tag handle: geometry, material, and band of interest.
typedef struct SrrsimTag SrrsimTag;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates the built-in prototype tag over its default 4.8..5.8 GHz band.
struct SrrsimTag *srrsim_tag_new_prototype(void);

// Creates a tag from explicit dimensions (meters), substrate permittivity,
// a log-linear sensitive-resistance curve (ohm at psi = 0 and psi = 100),
// and the band of interest. Returns `NULL` if any invariant fails.
struct SrrsimTag *srrsim_tag_new(double l_m,
                                 double d_m,
                                 double s_m,
                                 double w_m,
                                 double t_m,
                                 double h_m,
                                 double eps_re,
                                 double tan_delta,
                                 double r_dry_ohm,
                                 double r_wet_ohm,
                                 double band_lo_hz,
                                 double band_hi_hz);

// Frees a tag handle. Passing `NULL` is a no-op.
//
// # Safety
// `tag` must be a pointer previously returned by a constructor and not yet
// freed.
void srrsim_tag_free(struct SrrsimTag *tag);

// Complex scattering coefficient of the tag at `f_hz` and state `psi_pct`.
//
// # Safety
// `tag`, `out_re`, and `out_im` must be valid pointers.
enum SrrsimStatus srrsim_tag_gamma(const struct SrrsimTag *tag,
                                   double f_hz,
                                   double psi_pct,
                                   double *out_re,
                                   double *out_im);

// Scattering coefficient over a caller-supplied frequency grid.
//
// # Safety
// `freq_hz`, `gamma_re`, and `gamma_im` must point to `n` elements each.
enum SrrsimStatus srrsim_tag_spectrum(const struct SrrsimTag *tag,
                                      double psi_pct,
                                      const double *freq_hz,
                                      uintptr_t n,
                                      double *gamma_re,
                                      double *gamma_im);

// Canonical resonance of the tag at state `psi_pct`.
//
// # Safety
// All out-pointers must be valid.
enum SrrsimStatus srrsim_tag_resonance(const struct SrrsimTag *tag,
                                       double psi_pct,
                                       double *out_f0_hz,
                                       double *out_q,
                                       double *out_gamma_min,
                                       double *out_r_total_ohm);

// Two-leg free-space backscatter budget for one tag.
//
// # Safety
// `out_w` must be a valid pointer.
enum SrrsimStatus srrsim_received_power_w(double p_tx_w,
                                          double sigma_m2,
                                          double f_hz,
                                          double gamma_abs,
                                          double g_tx,
                                          double g_rx,
                                          double r_tx_m,
                                          double r_rx_m,
                                          double *out_w);

// Monostatic maximum range against a thermal noise floor.
//
// # Safety
// `out_m` must be a valid pointer.
enum SrrsimStatus srrsim_max_range_m(double p_tx_w,
                                     double sigma_m2,
                                     double f_hz,
                                     double gamma_abs,
                                     double g_tx,
                                     double g_rx,
                                     double snr_threshold_db,
                                     double bandwidth_hz,
                                     double noise_figure_db,
                                     double temperature_k,
                                     double *out_m);

// Matrix Pencil pole extraction over a uniformly sampled complex sequence.
//
// Pass `pencil_l = 0` for the default `n/3`, and `sv_threshold <= 0` for
// the default cutoff. On success `*n_poles` holds how many poles (up to
// `max_poles`) were written, ordered by residue magnitude.
//
// # Safety
// `re`/`im` must point to `n` samples; the four output arrays must hold
// `max_poles` elements; `n_poles` must be valid.
enum SrrsimStatus srrsim_matrix_pencil(const double *re,
                                       const double *im,
                                       uintptr_t n,
                                       double dt_s,
                                       uintptr_t pencil_l,
                                       double sv_threshold,
                                       double *pole_re,
                                       double *pole_im,
                                       double *residue_re,
                                       double *residue_im,
                                       uintptr_t max_poles,
                                       uintptr_t *n_poles);

// Short description of a status code; static storage, never freed.
const char *srrsim_status_message(enum SrrsimStatus status);

// Library version string; static storage, never freed.
const char *srrsim_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SRRSIM_H */
