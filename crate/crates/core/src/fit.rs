//! Ordinary least-squares line fits shared by the observables and sweeps.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Result of a straight-line least-squares fit `y = slope * x + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// Index range of the input spanned by the points that entered the fit.
    pub window: Range<usize>,
    /// Number of points used.
    pub points: usize,
    /// Root-mean-square deviation of the fitted line.
    pub residual: f64,
    /// Pearson correlation of the fitted coordinates.
    pub correlation: f64,
}

impl FitResult {
    /// `xi = -1 / slope` for fits of `ln P` against `|p|`.
    pub fn localization_length(&self) -> f64 {
        -1.0 / self.slope
    }

    /// Decay rate `-slope` for fits of `ln L` against `t`.
    pub fn rate(&self) -> f64 {
        -self.slope
    }
}

/// Least-squares line through `(x, y)` pairs. `window` records which input
/// indices the points came from.
pub fn linear_fit(xs: &[f64], ys: &[f64], window: Range<usize>) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(Error::Fit(format!("length mismatch: {} vs {}", xs.len(), ys.len())));
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::Fit(format!("need at least 2 points, got {n}")));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite input".into()));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let correlation = if syy == 0.0 { 1.0 } else { sxy / (sxx * syy).sqrt() };
    Ok(FitResult {
        slope,
        intercept,
        window,
        points: n,
        residual: (sse / nf).sqrt(),
        correlation,
    })
}
