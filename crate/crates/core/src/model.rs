//! Model parameters, the dual momentum/angle grid and wavefunctions.
//!
//! Amplitudes are stored in ascending momentum order: slot `s` holds the
//! coefficient of the momentum eigenstate with index `n = s - dim/2`, whose
//! eigenvalue is `p_n = n * hbar`. The angle grid is `theta_j = 2 pi j / dim`
//! and the transform kernel is `exp(i n theta_j) / sqrt(dim)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical and numerical parameters of the kicked rotor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Real kick strength `K`.
    pub k: f64,
    /// Imaginary kick strength; the kick potential is `(K + i lambda) cos(theta)`.
    pub lambda: f64,
    /// Effective Planck constant.
    pub hbar: f64,
    /// Number of momentum states kept in the truncated basis.
    pub dim: usize,
    /// Kick-strength perturbation used by the Loschmidt echo.
    pub epsilon: f64,
    /// Width parameter of Gaussian wave packets.
    pub sigma: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            k: 5.0,
            lambda: 0.0,
            hbar: 0.25,
            dim: 1024,
            epsilon: 1e-3,
            sigma: 10.0,
        }
    }
}

impl ModelParams {
    pub fn new(k: f64, lambda: f64, hbar: f64, dim: usize) -> Result<Self> {
        let params = Self {
            k,
            lambda,
            hbar,
            dim,
            ..Self::default()
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("K", self.k),
            ("lambda", self.lambda),
            ("hbar", self.hbar),
            ("epsilon", self.epsilon),
            ("sigma", self.sigma),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {value}")));
            }
        }
        if self.hbar <= 0.0 {
            return Err(Error::InvalidParams(format!("hbar must be positive, got {}", self.hbar)));
        }
        if self.dim < 4 || self.dim % 2 != 0 {
            return Err(Error::InvalidParams(format!(
                "dim must be even and at least 4, got {}",
                self.dim
            )));
        }
        if self.epsilon < 0.0 {
            return Err(Error::InvalidParams(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        if self.sigma <= 0.0 {
            return Err(Error::InvalidParams(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }

    /// Smallest momentum index in the window, `-dim/2`.
    pub fn n_min(&self) -> i64 {
        -(self.dim as i64) / 2
    }

    /// Momentum index `n` stored in `slot`.
    pub fn momentum_index(&self, slot: usize) -> i64 {
        slot as i64 + self.n_min()
    }

    /// Momentum eigenvalue `n * hbar` for `slot`.
    pub fn momentum(&self, slot: usize) -> f64 {
        self.momentum_index(slot) as f64 * self.hbar
    }

    /// Slot holding momentum index `n`, if it lies inside the window.
    pub fn slot_of(&self, n: i64) -> Option<usize> {
        let s = n - self.n_min();
        (0..self.dim as i64).contains(&s).then_some(s as usize)
    }

    /// Angle grid point `theta_j = 2 pi j / dim`.
    pub fn angle(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.dim as f64
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "K={} lambda={} hbar={} dim={} epsilon={} sigma={}",
            self.k, self.lambda, self.hbar, self.dim, self.epsilon, self.sigma
        )
    }
}

/// Discrete transform between momentum amplitudes and angle samples.
///
/// `to_angle` computes `f_j = sum_n psi_n exp(i n theta_j) / sqrt(dim)` and
/// `to_momentum` is its exact inverse.
#[derive(Clone)]
pub struct Fourier {
    dim: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fourier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fourier").field("dim", &self.dim).finish()
    }
}

impl Fourier {
    pub fn new(dim: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dim,
            forward: planner.plan_fft_forward(dim),
            inverse: planner.plan_fft_inverse(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn scratch_len(&self) -> usize {
        self.forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len())
    }

    /// Unnormalized `sum_s x_s exp(+2 pi i s j / dim)` in place.
    pub(crate) fn synthesize(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inverse.process_with_scratch(data, scratch);
    }

    /// Unnormalized `sum_j x_j exp(-2 pi i s j / dim)` in place.
    pub(crate) fn analyze(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        self.forward.process_with_scratch(data, scratch);
    }

    /// Momentum amplitudes to angle samples.
    pub fn to_angle(&self, amps: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(amps.len(), self.dim);
        let mut data = amps.to_vec();
        let mut scratch = vec![Complex64::default(); self.scratch_len()];
        self.synthesize(&mut data, &mut scratch);
        // (-1)^j accounts for the window starting at n = -dim/2.
        let scale = 1.0 / (self.dim as f64).sqrt();
        for (j, x) in data.iter_mut().enumerate() {
            *x *= if j % 2 == 0 { scale } else { -scale };
        }
        data
    }

    /// Angle samples to momentum amplitudes.
    pub fn to_momentum(&self, samples: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(samples.len(), self.dim);
        let scale = 1.0 / (self.dim as f64).sqrt();
        let mut data: Vec<Complex64> = samples
            .iter()
            .enumerate()
            .map(|(j, &x)| if j % 2 == 0 { x * scale } else { -x * scale })
            .collect();
        let mut scratch = vec![Complex64::default(); self.scratch_len()];
        self.analyze(&mut data, &mut scratch);
        data
    }
}

/// Complex amplitudes in the momentum basis plus an extracted log-norm.
///
/// The true squared norm is `raw_norm_sqr() * exp(2 * log_norm)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    amps: Vec<Complex64>,
    log_norm: f64,
}

impl WaveFunction {
    pub fn new(amps: Vec<Complex64>, log_norm: f64) -> Result<Self> {
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) || !log_norm.is_finite() {
            return Err(Error::InvalidParams("wavefunction entries must be finite".into()));
        }
        let psi = Self { amps, log_norm };
        if psi.raw_norm_sqr() <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(psi)
    }

    /// Normalized basis state with momentum index `n`.
    pub fn basis(params: &ModelParams, n: i64) -> Result<Self> {
        let slot = params.slot_of(n).ok_or_else(|| {
            Error::InvalidParams(format!("momentum index {n} outside the basis window"))
        })?;
        let mut amps = vec![Complex64::default(); params.dim];
        amps[slot] = Complex64::new(1.0, 0.0);
        Ok(Self { amps, log_norm: 0.0 })
    }

    pub(crate) fn from_parts_unchecked(amps: Vec<Complex64>, log_norm: f64) -> Self {
        Self { amps, log_norm }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    pub(crate) fn add_log_norm(&mut self, delta: f64) {
        self.log_norm += delta;
    }

    /// `sum_n |psi_n|^2` of the stored amplitudes.
    pub fn raw_norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Natural log of the true (unscaled) norm.
    pub fn log_true_norm(&self) -> f64 {
        0.5 * self.raw_norm_sqr().ln() + self.log_norm
    }

    /// Rescale to unit raw norm, moving the factor into `log_norm`.
    pub fn normalize(&mut self) -> Result<()> {
        let n2 = self.raw_norm_sqr();
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let norm = n2.sqrt();
        let inv = 1.0 / norm;
        self.amps.iter_mut().for_each(|a| *a *= inv);
        self.log_norm += norm.ln();
        Ok(())
    }

    /// Unit-norm copy with `log_norm` reset to zero.
    pub fn normalized(&self) -> Result<Self> {
        let mut out = self.clone();
        out.normalize()?;
        out.log_norm = 0.0;
        Ok(out)
    }

    /// Multiply every amplitude by a nonzero scalar.
    pub fn scale(&mut self, factor: Complex64) {
        self.amps.iter_mut().for_each(|a| *a *= factor);
    }
}

/// Momentum ground state `psi_n = delta_{n,0}`, i.e. the uniform angle profile.
pub fn ground_state(params: &ModelParams) -> Result<WaveFunction> {
    params.validate()?;
    WaveFunction::basis(params, 0)
}

/// Gaussian packet `(sigma/pi)^{1/4} exp(-sigma (theta - theta_c)^2 / 2)` centred at
/// `theta_c`, sampled on the angle grid at the nearest periodic image and
/// normalized to unit norm.
pub fn gaussian_state(params: &ModelParams, theta_c: f64) -> Result<WaveFunction> {
    params.validate()?;
    gaussian_state_with(params, theta_c, &Fourier::new(params.dim))
}

pub(crate) fn gaussian_state_with(
    params: &ModelParams,
    theta_c: f64,
    fourier: &Fourier,
) -> Result<WaveFunction> {
    if !(params.sigma > 0.0) {
        return Err(Error::InvalidParams("sigma must be positive".into()));
    }
    if !theta_c.is_finite() {
        return Err(Error::InvalidParams("packet centre must be finite".into()));
    }
    let sigma = params.sigma;
    let prefactor = (sigma / PI).powf(0.25);
    let samples: Vec<Complex64> = (0..params.dim)
        .map(|j| {
            let d = wrap_angle(params.angle(j) - theta_c);
            Complex64::new(prefactor * (-0.5 * sigma * d * d).exp(), 0.0)
        })
        .collect();
    let mut psi = WaveFunction::from_parts_unchecked(fourier.to_momentum(&samples), 0.0);
    psi.normalize()?;
    psi.log_norm = 0.0;
    Ok(psi)
}

/// Wrap an angle difference into `[-pi, pi)`.
fn wrap_angle(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// `sum_n conj(a_n) b_n`, ignoring log-norm offsets.
pub fn inner(a: &WaveFunction, b: &WaveFunction) -> Result<Complex64> {
    inner_slices(a.amps(), b.amps())
}

pub(crate) fn inner_slices(a: &[Complex64], b: &[Complex64]) -> Result<Complex64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x.conj() * y).sum())
}

/// Normalized momentum distribution `P_n = |psi_n|^2 / N`.
pub fn probabilities(psi: &WaveFunction) -> Result<Vec<f64>> {
    probabilities_of(psi.amps())
}

pub(crate) fn probabilities_of(amps: &[Complex64]) -> Result<Vec<f64>> {
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroNorm);
    }
    Ok(amps.iter().map(|a| a.norm_sqr() / norm).collect())
}
