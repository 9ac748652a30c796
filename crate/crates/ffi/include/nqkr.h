#ifndef NQKR_H
#define NQKR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum NqkrStatus {
  NQKR_STATUS_OK = 0,
  NQKR_STATUS_NULL_POINTER = 1,
  NQKR_STATUS_INVALID_PARAMS = 2,
  NQKR_STATUS_DIMENSION_MISMATCH = 3,
  NQKR_STATUS_NON_FINITE = 4,
  NQKR_STATUS_ZERO_NORM = 5,
  NQKR_STATUS_EIGENSOLVER = 6,
  NQKR_STATUS_FIT = 7,
  NQKR_STATUS_NO_DECAY = 8,
  NQKR_STATUS_NO_GROWING_MODES = 9,
  NQKR_STATUS_BUFFER_TOO_SMALL = 10,
  NQKR_STATUS_INDEX_OUT_OF_RANGE = 11,
  NQKR_STATUS_CONFIG = 12,
  NQKR_STATUS_IO = 13,
  NQKR_STATUS_PANIC = 14,
} NqkrStatus;

// Model parameters `(K, lambda, hbar, dim, epsilon, sigma)`.
typedef struct NqkrParams NqkrParams;

// One-period evolution operator bound to a parameter set.
typedef struct NqkrPropagator NqkrPropagator;

// Sorted quasienergy spectrum and eigenvectors.
typedef struct NqkrSpectrum NqkrSpectrum;

// Momentum-space state with its accumulated log-norm.
typedef struct NqkrWave NqkrWave;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *nqkr_version(void);

// Copy the calling thread's last error message into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length excluding the NUL,
// or 0 when the last call succeeded.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t nqkr_last_error_message(char *buf, size_t len);

// Create a parameter set with `epsilon = 1e-3` and `sigma = 10`.
//
// # Safety
// `out` must be a valid pointer to a handle slot.
enum NqkrStatus nqkr_params_new(double k,
                                double lambda,
                                double hbar,
                                size_t dim,
                                struct NqkrParams **out);

// # Safety
// `params` must be a live handle.
enum NqkrStatus nqkr_params_set_epsilon(struct NqkrParams *params, double epsilon);

// # Safety
// `params` must be a live handle.
enum NqkrStatus nqkr_params_set_sigma(struct NqkrParams *params, double sigma);

// Basis size of `params`, or 0 for a null handle.
//
// # Safety
// `params` must be null or a live handle.
size_t nqkr_params_dim(const struct NqkrParams *params);

// # Safety
// `params` must be null or a handle not yet freed.
void nqkr_params_free(struct NqkrParams *params);

// The `n = 0` momentum eigenstate.
//
// # Safety
// `params` must be a live handle and `out` a valid handle slot.
enum NqkrStatus nqkr_wave_ground_state(const struct NqkrParams *params, struct NqkrWave **out);

// Normalized Gaussian packet centred at angle `theta_c`.
//
// # Safety
// `params` must be a live handle and `out` a valid handle slot.
enum NqkrStatus nqkr_wave_gaussian(const struct NqkrParams *params,
                                   double theta_c,
                                   struct NqkrWave **out);

// Basis size of `wave`, or 0 for a null handle.
//
// # Safety
// `wave` must be null or a live handle.
size_t nqkr_wave_dim(const struct NqkrWave *wave);

// Natural log of the true (unrescaled) norm.
//
// # Safety
// `wave` must be a live handle and `out` writable.
enum NqkrStatus nqkr_wave_log_norm(const struct NqkrWave *wave, double *out);

// Normalized momentum distribution, ascending `n`, into `out[0..dim]`.
//
// # Safety
// `wave` must be a live handle and `out` must hold `len` doubles.
enum NqkrStatus nqkr_wave_probabilities(const struct NqkrWave *wave, double *out, size_t len);

// Stored amplitudes as interleaved `(re, im)` pairs into `out[0..2*dim]`.
//
// # Safety
// `wave` must be a live handle and `out` must hold `len` doubles.
enum NqkrStatus nqkr_wave_amplitudes(const struct NqkrWave *wave, double *out, size_t len);

// Normalized `<p^2>` of `wave`.
//
// # Safety
// Handles must be live and `out` writable.
enum NqkrStatus nqkr_wave_mean_p2(const struct NqkrWave *wave,
                                  const struct NqkrParams *params,
                                  double *out);

// # Safety
// `wave` must be null or a handle not yet freed.
void nqkr_wave_free(struct NqkrWave *wave);

// Floquet propagator; `perturbed != 0` uses kick strength `K + epsilon`.
//
// # Safety
// `params` must be a live handle and `out` a valid handle slot.
enum NqkrStatus nqkr_propagator_new(const struct NqkrParams *params,
                                    bool perturbed,
                                    struct NqkrPropagator **out);

// Apply `steps` kicks to `wave` in place.
//
// # Safety
// Handles must be live and distinct.
enum NqkrStatus nqkr_propagator_evolve(const struct NqkrPropagator *propagator,
                                       struct NqkrWave *wave,
                                       size_t steps);

// # Safety
// `propagator` must be null or a handle not yet freed.
void nqkr_propagator_free(struct NqkrPropagator *propagator);

// `<p^2>(t)` for `t = 1..=steps` from the ground state into `out[0..steps]`.
//
// # Safety
// `params` must be a live handle and `out` must hold `len` doubles.
enum NqkrStatus nqkr_energy_series(const struct NqkrParams *params,
                                   size_t steps,
                                   double *out,
                                   size_t len);

// Packet-averaged Loschmidt echo for `t = 0..=steps` into `out[0..steps+1]`.
//
// # Safety
// `params` must be a live handle and `out` must hold `len` doubles.
enum NqkrStatus nqkr_averaged_echo(const struct NqkrParams *params,
                                   size_t steps,
                                   size_t packets,
                                   double *out,
                                   size_t len);

// Diagonalize the `dim x dim` Floquet matrix.
//
// # Safety
// `params` must be a live handle and `out` a valid handle slot.
enum NqkrStatus nqkr_spectrum_compute(const struct NqkrParams *params, struct NqkrSpectrum **out);

// Number of modes, or 0 for a null handle.
//
// # Safety
// `spectrum` must be null or a live handle.
size_t nqkr_spectrum_len(const struct NqkrSpectrum *spectrum);

// Quasienergy and IPR of mode `index` (modes sorted by `eps_i` descending).
// Any of the output pointers may be null.
//
// # Safety
// `spectrum` must be a live handle; non-null outputs must be writable.
enum NqkrStatus nqkr_spectrum_mode(const struct NqkrSpectrum *spectrum,
                                   size_t index,
                                   double *eps_r,
                                   double *eps_i,
                                   double *ipr);

// Mean IPR over modes with positive `eps_i`.
//
// # Safety
// `spectrum` must be a live handle and `out` writable.
enum NqkrStatus nqkr_spectrum_mean_ipr(const struct NqkrSpectrum *spectrum, double *out);

// Fidelity of `wave` against every mode, in spectrum order, into `out[0..len(spectrum)]`.
//
// # Safety
// Handles must be live and `out` must hold `len` doubles.
enum NqkrStatus nqkr_spectrum_fidelity(const struct NqkrSpectrum *spectrum,
                                       const struct NqkrWave *wave,
                                       double *out,
                                       size_t len);

// # Safety
// `spectrum` must be null or a handle not yet freed.
void nqkr_spectrum_free(struct NqkrSpectrum *spectrum);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NQKR_H */
