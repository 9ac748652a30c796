//! Quasienergy spectrum of the truncated Floquet operator.
//!
//! For an eigenvalue `mu` of `U` we write `mu = exp(-i eps)` with complex
//! quasienergy `eps = eps_r + i eps_i`, so `eps_r = -arg(mu)` and
//! `eps_i = ln |mu|`. Modes with positive `eps_i` grow under evolution and a
//! generic state converges onto the mode with the largest `eps_i`.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{inner_slices, ModelParams, WaveFunction};
use crate::propagator::Propagator;

/// Dense complex matrix type used for the Floquet operator.
pub type ComplexMatrix = Mat<Complex64>;

/// `|eps_i|` below this is treated as zero (unitary noise).
pub const HERMITIAN_TOLERANCE: f64 = 1e-8;

/// Top-mode gap below which [`dominant_mode`] flags a degenerate top.
pub const DEGENERACY_GAP: f64 = 1e-6;

/// Maximum eigen-residual relative to `||U||_F` accepted from the eigensolver.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Column `n` of the result is `U e_n`, computed with the same split-step
/// propagator used for the dynamics (no norm rescaling).
pub fn build_floquet_matrix(params: &ModelParams) -> Result<ComplexMatrix> {
    let propagator = Propagator::new(params, false)?;
    let dim = params.dim;
    let columns: Vec<Vec<Complex64>> = (0..dim)
        .into_par_iter()
        .map(|n| {
            let mut column = vec![Complex64::default(); dim];
            column[n] = Complex64::new(1.0, 0.0);
            let mut scratch = propagator.scratch();
            propagator.apply_raw(&mut column, &mut scratch);
            column
        })
        .collect();
    Ok(Mat::from_fn(dim, dim, |i, j| columns[j][i]))
}

/// One Floquet eigenpair.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiMode {
    /// Real quasienergy, principal value in `(-pi, pi]`.
    pub eps_r: f64,
    /// Imaginary quasienergy `ln |mu|`; `-inf` for a zero eigenvalue.
    pub eps_i: f64,
    /// Unit-norm eigenvector in the momentum basis.
    pub state: Vec<Complex64>,
    pub ipr: f64,
}

/// Eigenpairs of a truncated Floquet matrix, sorted by `eps_i` descending.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiSpectrum {
    pub modes: Vec<QuasiMode>,
    pub dim: usize,
    pub params: Option<ModelParams>,
    /// Largest `||U v - mu v||` over all modes (unit `v`).
    pub max_residual: f64,
    /// Frobenius norm of the diagonalized matrix.
    pub operator_norm: f64,
}

impl QuasiSpectrum {
    /// Build and diagonalize the Floquet matrix of `params`.
    pub fn compute(params: &ModelParams) -> Result<Self> {
        let matrix = build_floquet_matrix(params)?;
        let mut spectrum = diagonalize(&matrix)?;
        spectrum.params = Some(*params);
        Ok(spectrum)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn max_abs_eps_i(&self) -> f64 {
        self.modes.iter().map(|m| m.eps_i.abs()).fold(0.0, f64::max)
    }

    /// Modes whose `eps_i` exceeds the unitary noise level.
    pub fn growing_modes(&self) -> impl Iterator<Item = &QuasiMode> {
        self.modes.iter().filter(|m| m.eps_i > HERMITIAN_TOLERANCE)
    }

    /// The eigenvector of mode `index` as a wavefunction.
    pub fn state(&self, index: usize) -> Result<WaveFunction> {
        let mode = self
            .modes
            .get(index)
            .ok_or_else(|| Error::InvalidParams(format!("mode index {index} out of range")))?;
        WaveFunction::new(mode.state.clone(), 0.0)
    }
}

/// Principal value of `-arg(mu)` in `(-pi, pi]`.
fn real_quasienergy(mu: Complex64) -> f64 {
    let e = -mu.arg();
    if e <= -PI {
        e + 2.0 * PI
    } else {
        e
    }
}

/// Full eigendecomposition of a general complex matrix.
pub fn diagonalize(matrix: &ComplexMatrix) -> Result<QuasiSpectrum> {
    let dim = matrix.nrows();
    if matrix.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: matrix.ncols(),
        });
    }
    if dim == 0 {
        return Err(Error::Eigensolver("empty matrix".into()));
    }
    if (0..dim).any(|j| (0..dim).any(|i| !matrix[(i, j)].re.is_finite() || !matrix[(i, j)].im.is_finite())) {
        return Err(Error::Eigensolver("matrix has non-finite entries".into()));
    }
    let evd = matrix
        .eigen()
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let values = evd.S().column_vector();
    let vectors = evd.U();

    let product = matrix * vectors;
    let operator_norm = matrix.norm_l2();
    let mut max_residual = 0.0f64;
    let mut modes = Vec::with_capacity(dim);
    for j in 0..dim {
        let mu = values[j];
        let norm = (0..dim).map(|i| vectors[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Eigensolver(format!("eigenvector {j} is degenerate")));
        }
        let inv = 1.0 / norm;
        let state: Vec<Complex64> = (0..dim).map(|i| vectors[(i, j)] * inv).collect();
        let residual = (0..dim)
            .map(|i| (product[(i, j)] * inv - mu * state[i]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        max_residual = max_residual.max(residual);
        let modulus = mu.norm();
        let eps_i = if modulus > 0.0 { modulus.ln() } else { f64::NEG_INFINITY };
        let ipr = ipr(&state)?;
        modes.push(QuasiMode {
            eps_r: real_quasienergy(mu),
            eps_i,
            state,
            ipr,
        });
    }
    if !(max_residual <= RESIDUAL_TOLERANCE * operator_norm) {
        return Err(Error::Eigensolver(format!(
            "eigen-residual {max_residual:e} exceeds {RESIDUAL_TOLERANCE:e} * ||U|| = {:e}",
            RESIDUAL_TOLERANCE * operator_norm
        )));
    }
    modes.sort_by(|a, b| b.eps_i.total_cmp(&a.eps_i));
    Ok(QuasiSpectrum {
        modes,
        dim,
        params: None,
        max_residual,
        operator_norm,
    })
}

/// Inverse participation ratio `(sum |psi|^2)^2 / sum |psi|^4`.
pub fn ipr(state: &[Complex64]) -> Result<f64> {
    let (mut s2, mut s4) = (0.0, 0.0);
    for a in state {
        let w = a.norm_sqr();
        s2 += w;
        s4 += w * w;
    }
    if !(s4 > 0.0) || !s2.is_finite() {
        return Err(Error::ZeroNorm);
    }
    Ok(s2 * s2 / s4)
}

/// Arithmetic mean of the IPR over modes with `eps_i > 0`.
pub fn mean_ipr(spectrum: &QuasiSpectrum) -> Result<f64> {
    let (sum, count) = spectrum
        .growing_modes()
        .fold((0.0, 0usize), |(s, c), m| (s + m.ipr, c + 1));
    if count == 0 {
        return Err(Error::NoGrowingModes);
    }
    Ok(sum / count as f64)
}

/// Fidelity of a state against one quasieigenstate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityPoint {
    /// Position of the mode in the spectrum (sorted by `eps_i` descending).
    pub index: usize,
    pub eps_i: f64,
    pub fidelity: f64,
}

/// `F = |<psi|phi>|^2` against every mode, with `psi` normalized.
pub fn fidelity_profile(psi: &WaveFunction, spectrum: &QuasiSpectrum) -> Result<Vec<FidelityPoint>> {
    if psi.dim() != spectrum.dim {
        return Err(Error::DimensionMismatch {
            expected: spectrum.dim,
            actual: psi.dim(),
        });
    }
    let unit = psi.normalized()?;
    spectrum
        .modes
        .iter()
        .enumerate()
        .map(|(index, mode)| {
            let ov = inner_slices(unit.amps(), &mode.state)?;
            Ok(FidelityPoint {
                index,
                eps_i: mode.eps_i,
                fidelity: ov.norm_sqr(),
            })
        })
        .collect()
}

/// Point of maximal fidelity; earliest index wins ties.
pub fn argmax_fidelity(profile: &[FidelityPoint]) -> Option<FidelityPoint> {
    profile
        .iter()
        .copied()
        .fold(None, |best: Option<FidelityPoint>, p| match best {
            Some(b) if b.fidelity >= p.fidelity => Some(b),
            _ => Some(p),
        })
}

/// Selection returned by [`dominant_mode`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominantMode {
    pub index: usize,
    pub eps_i: f64,
    /// The gap to the next `eps_i` is below [`DEGENERACY_GAP`].
    pub degenerate: bool,
}

/// Mode with the largest `eps_i`. Exact ties go to the larger fidelity against
/// `reference` when one is supplied, otherwise to the lower index.
pub fn dominant_mode(spectrum: &QuasiSpectrum, reference: Option<&WaveFunction>) -> Result<DominantMode> {
    let top = spectrum
        .modes
        .first()
        .ok_or_else(|| Error::Eigensolver("empty spectrum".into()))?
        .eps_i;
    let tied: Vec<usize> = (0..spectrum.len())
        .take_while(|&i| spectrum.modes[i].eps_i == top)
        .collect();
    let index = match reference {
        Some(psi) if tied.len() > 1 => {
            let profile = fidelity_profile(psi, spectrum)?;
            tied.iter()
                .copied()
                .fold(tied[0], |best, i| if profile[i].fidelity > profile[best].fidelity { i } else { best })
        }
        _ => tied[0],
    };
    let degenerate = spectrum
        .modes
        .get(tied.len())
        .map_or(false, |next| top - next.eps_i < DEGENERACY_GAP)
        || tied.len() > 1;
    Ok(DominantMode {
        index,
        eps_i: top,
        degenerate,
    })
}
