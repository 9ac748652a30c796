//! C ABI over the `nqkr` library.
//!
//! Objects cross the boundary as opaque handles created by `*_new` /
//! `*_compute` functions and released with the matching `*_free`. Every
//! fallible call returns an [`NqkrStatus`]; on failure a message is kept per
//! thread and can be read with [`nqkr_last_error_message`]. Panics are caught
//! at the boundary and reported as `NQKR_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nqkr::observables::{averaged_echo, energy_series, mean_p2};
use nqkr::spectrum::{fidelity_profile, mean_ipr, QuasiSpectrum};
use nqkr::{gaussian_state, ground_state, probabilities, Error, ModelParams, Propagator, WaveFunction};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NqkrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParams = 2,
    DimensionMismatch = 3,
    NonFinite = 4,
    ZeroNorm = 5,
    Eigensolver = 6,
    Fit = 7,
    NoDecay = 8,
    NoGrowingModes = 9,
    BufferTooSmall = 10,
    IndexOutOfRange = 11,
    Config = 12,
    Io = 13,
    Panic = 14,
}

/// Model parameters `(K, lambda, hbar, dim, epsilon, sigma)`.
pub struct NqkrParams(ModelParams);

/// Momentum-space state with its accumulated log-norm.
pub struct NqkrWave(WaveFunction);

/// One-period evolution operator bound to a parameter set.
pub struct NqkrPropagator(Propagator);

/// Sorted quasienergy spectrum and eigenvectors.
pub struct NqkrSpectrum(QuasiSpectrum);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(NqkrStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidParams(_) => NqkrStatus::InvalidParams,
            Error::DimensionMismatch { .. } => NqkrStatus::DimensionMismatch,
            Error::NonFinite { .. } => NqkrStatus::NonFinite,
            Error::ZeroNorm => NqkrStatus::ZeroNorm,
            Error::Eigensolver(_) => NqkrStatus::Eigensolver,
            Error::Fit(_) => NqkrStatus::Fit,
            Error::NoDecay => NqkrStatus::NoDecay,
            Error::NoGrowingModes => NqkrStatus::NoGrowingModes,
            Error::Config(_) => NqkrStatus::Config,
            Error::Io(_) => NqkrStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(NqkrStatus::NullPointer, format!("{what} is null"))
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard<F>(f: F) -> NqkrStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            NqkrStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {message}"));
            NqkrStatus::Panic
        }
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn handle_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn out_slice<'a>(p: *mut c_double, len: usize, needed: usize) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(null("output buffer"));
    }
    if len < needed {
        return Err(Failure(
            NqkrStatus::BufferTooSmall,
            format!("buffer holds {len} values, need {needed}"),
        ));
    }
    Ok(std::slice::from_raw_parts_mut(p, needed))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nqkr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL,
/// or 0 when the last call succeeded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn nqkr_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| match slot.borrow().as_ref() {
        None => {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            0
        }
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Create a parameter set with `epsilon = 1e-3` and `sigma = 10`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn nqkr_params_new(
    k: c_double,
    lambda: c_double,
    hbar: c_double,
    dim: usize,
    out: *mut *mut NqkrParams,
) -> NqkrStatus {
    guard(|| {
        let params = ModelParams::new(k, lambda, hbar, dim)?;
        put(out, boxed(NqkrParams(params)))
    })
}

/// # Safety
/// `params` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nqkr_params_set_epsilon(params: *mut NqkrParams, epsilon: c_double) -> NqkrStatus {
    guard(|| {
        let p = handle_mut(params, "params")?;
        let next = p.0.with_epsilon(epsilon);
        next.validate()?;
        p.0 = next;
        Ok(())
    })
}

/// # Safety
/// `params` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nqkr_params_set_sigma(params: *mut NqkrParams, sigma: c_double) -> NqkrStatus {
    guard(|| {
        let p = handle_mut(params, "params")?;
        let next = p.0.with_sigma(sigma);
        next.validate()?;
        p.0 = next;
        Ok(())
    })
}

/// Basis size of `params`, or 0 for a null handle.
///
/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nqkr_params_dim(params: *const NqkrParams) -> usize {
    params.as_ref().map_or(0, |p| p.0.dim)
}

/// # Safety
/// `params` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nqkr_params_free(params: *mut NqkrParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// The `n = 0` momentum eigenstate.
///
/// # Safety
/// `params` must be a live handle and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn nqkr_wave_ground_state(params: *const NqkrParams, out: *mut *mut NqkrWave) -> NqkrStatus {
    guard(|| {
        let p = handle(params, "params")?;
        put(out, boxed(NqkrWave(ground_state(&p.0)?)))
    })
}

/// Normalized Gaussian packet centred at angle `theta_c`.
///
/// # Safety
/// `params` must be a live handle and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn nqkr_wave_gaussian(
    params: *const NqkrParams,
    theta_c: c_double,
    out: *mut *mut NqkrWave,
) -> NqkrStatus {
    guard(|| {
        let p = handle(params, "params")?;
        put(out, boxed(NqkrWave(gaussian_state(&p.0, theta_c)?)))
    })
}

/// Basis size of `wave`, or 0 for a null handle.
///
/// # Safety
/// `wave` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nqkr_wave_dim(wave: *const NqkrWave) -> usize {
    wave.as_ref().map_or(0, |w| w.0.dim())
}

/// Natural log of the true (unrescaled) norm.
///
/// # Safety
/// `wave` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nqkr_wave_log_norm(wave: *const NqkrWave, out: *mut c_double) -> NqkrStatus {
    guard(|| {
        let w = handle(wave, "wave")?;
        put(out, w.0.log_true_norm())
    })
}

/// Normalized momentum distribution, ascending `n`, into `out[0..dim]`.
///
/// # Safety
/// `wave` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nqkr_wave_probabilities(wave: *const NqkrWave, out: *mut c_double, len: usize) -> NqkrStatus {
    guard(|| {
        let w = handle(wave, "wave")?;
        let dst = out_slice(out, len, w.0.dim())?;
        dst.copy_from_slice(&probabilities(&w.0)?);
        Ok(())
    })
}

/// Stored amplitudes as interleaved `(re, im)` pairs into `out[0..2*dim]`.
///
/// # Safety
/// `wave` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nqkr_wave_amplitudes(wave: *const NqkrWave, out: *mut c_double, len: usize) -> NqkrStatus {
    guard(|| {
        let w = handle(wave, "wave")?;
        let dst = out_slice(out, len, 2 * w.0.dim())?;
        for (pair, a) in dst.chunks_exact_mut(2).zip(w.0.amps()) {
            pair[0] = a.re;
            pair[1] = a.im;
        }
        Ok(())
    })
}

/// Normalized `<p^2>` of `wave`.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nqkr_wave_mean_p2(
    wave: *const NqkrWave,
    params: *const NqkrParams,
    out: *mut c_double,
) -> NqkrStatus {
    guard(|| {
        let w = handle(wave, "wave")?;
        let p = handle(params, "params")?;
        put(out, mean_p2(&w.0, &p.0)?)
    })
}

/// # Safety
/// `wave` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nqkr_wave_free(wave: *mut NqkrWave) {
    if !wave.is_null() {
        drop(Box::from_raw(wave));
    }
}

/// Floquet propagator; `perturbed != 0` uses kick strength `K + epsilon`.
///
/// # Safety
/// `params` must be a live handle and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn nqkr_propagator_new(
    params: *const NqkrParams,
    perturbed: bool,
    out: *mut *mut NqkrPropagator,
) -> NqkrStatus {
    guard(|| {
        let p = handle(params, "params")?;
        put(out, boxed(NqkrPropagator(Propagator::new(&p.0, perturbed)?)))
    })
}

/// Apply `steps` kicks to `wave` in place.
///
/// # Safety
/// Handles must be live and distinct.
#[no_mangle]
pub unsafe extern "C" fn nqkr_propagator_evolve(
    propagator: *const NqkrPropagator,
    wave: *mut NqkrWave,
    steps: usize,
) -> NqkrStatus {
    guard(|| {
        let prop = handle(propagator, "propagator")?;
        let w = handle_mut(wave, "wave")?;
        for _ in 0..steps {
            prop.0.step(&mut w.0)?;
        }
        Ok(())
    })
}

/// # Safety
/// `propagator` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nqkr_propagator_free(propagator: *mut NqkrPropagator) {
    if !propagator.is_null() {
        drop(Box::from_raw(propagator));
    }
}

/// `<p^2>(t)` for `t = 1..=steps` from the ground state into `out[0..steps]`.
///
/// # Safety
/// `params` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nqkr_energy_series(
    params: *const NqkrParams,
    steps: usize,
    out: *mut c_double,
    len: usize,
) -> NqkrStatus {
    guard(|| {
        let p = handle(params, "params")?;
        let dst = out_slice(out, len, steps)?;
        let series = energy_series(&p.0, ground_state(&p.0)?, steps)?;
        dst.copy_from_slice(&series.values);
        Ok(())
    })
}

/// Packet-averaged Loschmidt echo for `t = 0..=steps` into `out[0..steps+1]`.
///
/// # Safety
/// `params` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nqkr_averaged_echo(
    params: *const NqkrParams,
    steps: usize,
    packets: usize,
    out: *mut c_double,
    len: usize,
) -> NqkrStatus {
    guard(|| {
        let p = handle(params, "params")?;
        let dst = out_slice(out, len, steps + 1)?;
        let series = averaged_echo(&p.0, steps, packets)?;
        dst.copy_from_slice(&series.values);
        Ok(())
    })
}

/// Diagonalize the `dim x dim` Floquet matrix.
///
/// # Safety
/// `params` must be a live handle and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn nqkr_spectrum_compute(params: *const NqkrParams, out: *mut *mut NqkrSpectrum) -> NqkrStatus {
    guard(|| {
        let p = handle(params, "params")?;
        put(out, boxed(NqkrSpectrum(QuasiSpectrum::compute(&p.0)?)))
    })
}

/// Number of modes, or 0 for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nqkr_spectrum_len(spectrum: *const NqkrSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.0.len())
}

/// Quasienergy and IPR of mode `index` (modes sorted by `eps_i` descending).
/// Any of the output pointers may be null.
///
/// # Safety
/// `spectrum` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn nqkr_spectrum_mode(
    spectrum: *const NqkrSpectrum,
    index: usize,
    eps_r: *mut c_double,
    eps_i: *mut c_double,
    ipr: *mut c_double,
) -> NqkrStatus {
    guard(|| {
        let s = handle(spectrum, "spectrum")?;
        let mode = s.0.modes.get(index).ok_or_else(|| {
            Failure(
                NqkrStatus::IndexOutOfRange,
                format!("mode {index} out of range for {} modes", s.0.len()),
            )
        })?;
        for (dst, v) in [(eps_r, mode.eps_r), (eps_i, mode.eps_i), (ipr, mode.ipr)] {
            if !dst.is_null() {
                dst.write(v);
            }
        }
        Ok(())
    })
}

/// Mean IPR over modes with positive `eps_i`.
///
/// # Safety
/// `spectrum` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nqkr_spectrum_mean_ipr(spectrum: *const NqkrSpectrum, out: *mut c_double) -> NqkrStatus {
    guard(|| {
        let s = handle(spectrum, "spectrum")?;
        put(out, mean_ipr(&s.0)?)
    })
}

/// Fidelity of `wave` against every mode, in spectrum order, into `out[0..len(spectrum)]`.
///
/// # Safety
/// Handles must be live and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nqkr_spectrum_fidelity(
    spectrum: *const NqkrSpectrum,
    wave: *const NqkrWave,
    out: *mut c_double,
    len: usize,
) -> NqkrStatus {
    guard(|| {
        let s = handle(spectrum, "spectrum")?;
        let w = handle(wave, "wave")?;
        let dst = out_slice(out, len, s.0.len())?;
        for (d, f) in dst.iter_mut().zip(fidelity_profile(&w.0, &s.0)?) {
            *d = f.fidelity;
        }
        Ok(())
    })
}

/// # Safety
/// `spectrum` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nqkr_spectrum_free(spectrum: *mut NqkrSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}
