//! One-period Floquet evolution `U = exp(-i p^2 / 2 hbar) exp(-i V(theta) / hbar)`
//! with `V = (K + i lambda) cos(theta)`, applied by the split-step spectral method.
//!
//! The kick acts first (in the angle representation), then the free rotation
//! (in the momentum representation). Because the kick is a delta function the
//! split is exact up to basis truncation.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Fourier, ModelParams, WaveFunction};

/// Raw squared norm window outside of which a state is rescaled.
pub const DEFAULT_RESCALE_BOUNDS: (f64, f64) = (1e-6, 1e6);

/// Pointwise multipliers for the kick (angle grid) and free rotation (momentum grid).
#[derive(Debug, Clone, PartialEq)]
pub struct KickTable {
    /// `exp(-i (K' + i lambda) cos(theta_j) / hbar)` per angle point.
    pub angle_factor: Vec<Complex64>,
    /// `exp(-i hbar n^2 / 2)` per momentum slot.
    pub free_factor: Vec<Complex64>,
    /// Kick strength actually used (`K`, or `K + epsilon` when perturbed).
    pub kick_strength: f64,
}

/// Build the kick and free-rotation tables. With `perturbed` the real kick
/// strength becomes `K + epsilon`.
pub fn build_tables(params: &ModelParams, perturbed: bool) -> Result<KickTable> {
    params.validate()?;
    let kick_strength = if perturbed { params.k + params.epsilon } else { params.k };
    let angle_factor = (0..params.dim)
        .map(|j| {
            let c = params.angle(j).cos();
            // exp(-i K c / hbar) * exp(lambda c / hbar)
            Complex64::from_polar((params.lambda * c / params.hbar).exp(), -kick_strength * c / params.hbar)
        })
        .collect();
    let free_factor = (0..params.dim)
        .map(|s| {
            let n = params.momentum_index(s) as f64;
            let phase = (0.5 * params.hbar * n * n).rem_euclid(TAU);
            Complex64::from_polar(1.0, -phase)
        })
        .collect();
    Ok(KickTable {
        angle_factor,
        free_factor,
        kick_strength,
    })
}

/// Applies the Floquet operator to wavefunctions. Immutable and shareable
/// between threads; each call allocates or borrows its own scratch space.
#[derive(Debug, Clone)]
pub struct Propagator {
    params: ModelParams,
    table: KickTable,
    fourier: Fourier,
    rescale: (f64, f64),
}

impl Propagator {
    pub fn new(params: &ModelParams, perturbed: bool) -> Result<Self> {
        let table = build_tables(params, perturbed)?;
        Ok(Self {
            params: *params,
            table,
            fourier: Fourier::new(params.dim),
            rescale: DEFAULT_RESCALE_BOUNDS,
        })
    }

    /// Override the squared-norm window that triggers rescaling.
    pub fn with_rescale_bounds(mut self, low: f64, high: f64) -> Result<Self> {
        if !(low > 0.0 && high > low && high.is_finite()) {
            return Err(Error::InvalidParams(format!("bad rescale bounds [{low}, {high}]")));
        }
        self.rescale = (low, high);
        Ok(self)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn table(&self) -> &KickTable {
        &self.table
    }

    pub fn fourier(&self) -> &Fourier {
        &self.fourier
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    /// Scratch buffer sized for [`Propagator::apply_raw`].
    pub fn scratch(&self) -> Vec<Complex64> {
        vec![Complex64::default(); self.fourier.scratch_len()]
    }

    /// Apply `U` to raw amplitudes without any norm bookkeeping.
    pub fn apply_raw(&self, amps: &mut [Complex64], scratch: &mut [Complex64]) {
        debug_assert_eq!(amps.len(), self.dim());
        let inv_dim = 1.0 / self.dim() as f64;
        // The (-1)^j factors of the forward and inverse transforms cancel.
        self.fourier.synthesize(amps, scratch);
        for (a, k) in amps.iter_mut().zip(&self.table.angle_factor) {
            *a *= k * inv_dim;
        }
        self.fourier.analyze(amps, scratch);
        for (a, f) in amps.iter_mut().zip(&self.table.free_factor) {
            *a *= f;
        }
    }

    /// One Floquet period.
    pub fn step(&self, psi: &mut WaveFunction) -> Result<()> {
        let mut scratch = self.scratch();
        self.step_with(psi, &mut scratch, 1)
    }

    pub(crate) fn step_with(&self, psi: &mut WaveFunction, scratch: &mut [Complex64], kick: usize) -> Result<()> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: psi.dim(),
            });
        }
        self.apply_raw(psi.amps_mut(), scratch);
        let n2 = psi.raw_norm_sqr();
        if !n2.is_finite() {
            return Err(Error::NonFinite { kick });
        }
        if n2 <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        let (low, high) = self.rescale;
        if n2 < low || n2 > high {
            let inv = 1.0 / n2.sqrt();
            psi.amps_mut().iter_mut().for_each(|a| *a *= inv);
            psi.add_log_norm(0.5 * n2.ln());
        }
        Ok(())
    }

    /// Apply `n_steps` periods, calling `observer(t, state)` after kick `t = 1..=n_steps`.
    pub fn evolve<F>(&self, mut psi: WaveFunction, n_steps: usize, mut observer: F) -> Result<WaveFunction>
    where
        F: FnMut(usize, &WaveFunction),
    {
        let mut scratch = self.scratch();
        for t in 1..=n_steps {
            self.step_with(&mut psi, &mut scratch, t)?;
            observer(t, &psi);
        }
        Ok(psi)
    }

    /// Fallible-observer variant of [`Propagator::evolve`]; the observer may stop the run.
    pub fn try_evolve<F>(&self, mut psi: WaveFunction, n_steps: usize, mut observer: F) -> Result<WaveFunction>
    where
        F: FnMut(usize, &WaveFunction) -> Result<()>,
    {
        let mut scratch = self.scratch();
        for t in 1..=n_steps {
            self.step_with(&mut psi, &mut scratch, t)?;
            observer(t, &psi)?;
        }
        Ok(psi)
    }
}

/// Convenience wrapper: evolve `psi` under the unperturbed Floquet operator of `params`.
pub fn evolve<F>(params: &ModelParams, psi: WaveFunction, n_steps: usize, observer: F) -> Result<WaveFunction>
where
    F: FnMut(usize, &WaveFunction),
{
    Propagator::new(params, false)?.evolve(psi, n_steps, observer)
}
