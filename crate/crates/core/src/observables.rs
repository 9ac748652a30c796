//! Time-domain observables: norm-normalized mean energy, Loschmidt echo and
//! its packet average, and the exponential fits used to read off decay rates
//! and localization lengths.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{linear_fit, FitResult};
use crate::model::{gaussian_state_with, inner_slices, ModelParams, WaveFunction};
use crate::propagator::Propagator;

/// Per-kick record of a scalar observable.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<usize>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, t: usize, value: f64) {
        debug_assert!(self.times.last().map_or(true, |&last| t > last));
        self.times.push(t);
        self.values.push(value);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    /// Mean of the values recorded at times in `[from, to]`.
    pub fn mean_between(&self, from: usize, to: usize) -> Option<f64> {
        let (sum, count) = self
            .iter()
            .filter(|&(t, _)| t >= from && t <= to)
            .fold((0.0, 0usize), |(s, c), (_, v)| (s + v, c + 1));
        (count > 0).then(|| sum / count as f64)
    }
}

/// `<p^2> = sum_n (n hbar)^2 |psi_n|^2 / sum_n |psi_n|^2`.
pub fn mean_p2(psi: &WaveFunction, params: &ModelParams) -> Result<f64> {
    if psi.dim() != params.dim {
        return Err(Error::DimensionMismatch {
            expected: params.dim,
            actual: psi.dim(),
        });
    }
    let mut weighted = 0.0;
    let mut norm = 0.0;
    for (s, a) in psi.amps().iter().enumerate() {
        let w = a.norm_sqr();
        let p = params.momentum(s);
        weighted += p * p * w;
        norm += w;
    }
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroNorm);
    }
    Ok(weighted / norm)
}

/// Everything recorded along one diffusion run.
#[derive(Debug, Clone)]
pub struct EnergyRun {
    pub p2: TimeSeries,
    /// Natural log of the true state norm after each kick.
    pub log_norm: TimeSeries,
    pub final_state: WaveFunction,
}

/// Evolve `init` and record `<p^2>` and the log true norm after every kick.
pub fn energy_run(params: &ModelParams, init: WaveFunction, n_steps: usize) -> Result<EnergyRun> {
    if n_steps == 0 {
        return Err(Error::InvalidParams("energy series needs at least one kick".into()));
    }
    let propagator = Propagator::new(params, false)?;
    let mut p2 = TimeSeries::with_capacity(n_steps);
    let mut log_norm = TimeSeries::with_capacity(n_steps);
    let final_state = propagator.try_evolve(init, n_steps, |t, psi| {
        p2.push(t, mean_p2(psi, params)?);
        log_norm.push(t, psi.log_true_norm());
        Ok(())
    })?;
    Ok(EnergyRun {
        p2,
        log_norm,
        final_state,
    })
}

/// `<p^2>` after each of `n_steps` kicks.
pub fn energy_series(params: &ModelParams, init: WaveFunction, n_steps: usize) -> Result<TimeSeries> {
    energy_run(params, init, n_steps).map(|run| run.p2)
}

/// Arithmetic mean of the first `n` recorded values.
pub fn time_averaged_p2(series: &TimeSeries, n: usize) -> Result<f64> {
    if n == 0 || series.len() < n {
        return Err(Error::InvalidParams(format!(
            "time average over {n} kicks needs at least that many samples, have {}",
            series.len()
        )));
    }
    Ok(series.values[..n].iter().sum::<f64>() / n as f64)
}

/// The unperturbed and perturbed (`K + epsilon`) propagators of one echo setting.
#[derive(Debug, Clone)]
pub struct EchoPair {
    pub plain: Propagator,
    pub perturbed: Propagator,
}

impl EchoPair {
    pub fn new(params: &ModelParams) -> Result<Self> {
        Ok(Self {
            plain: Propagator::new(params, false)?,
            perturbed: Propagator::new(params, true)?,
        })
    }

    /// Echo series for one initial state, `t = 0..=n_steps`.
    pub fn echo(&self, init: &WaveFunction, n_steps: usize) -> Result<TimeSeries> {
        let mut a = init.clone();
        let mut b = init.clone();
        let mut scratch = self.plain.scratch();
        let mut series = TimeSeries::with_capacity(n_steps + 1);
        series.push(0, normalized_overlap(&a, &b)?);
        for t in 1..=n_steps {
            self.plain.step_with(&mut a, &mut scratch, t)?;
            self.perturbed.step_with(&mut b, &mut scratch, t)?;
            series.push(t, normalized_overlap(&a, &b)?);
        }
        Ok(series)
    }
}

/// `|<a|b>|^2 / (N_a N_b)`, clamped into `[0, 1]`.
pub fn normalized_overlap(a: &WaveFunction, b: &WaveFunction) -> Result<f64> {
    let na = a.raw_norm_sqr();
    let nb = b.raw_norm_sqr();
    if !(na > 0.0 && nb > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let ov = inner_slices(a.amps(), b.amps())?;
    Ok((ov.norm_sqr() / (na * nb)).clamp(0.0, 1.0))
}

/// Loschmidt echo of `init` between the `K` and `K + epsilon` dynamics,
/// normalized by both state norms at every kick. `L(0) = 1`.
pub fn loschmidt_echo(params: &ModelParams, init: &WaveFunction, n_steps: usize) -> Result<TimeSeries> {
    EchoPair::new(params)?.echo(init, n_steps)
}

/// Echo averaged over Gaussian packets centred at `theta_c = 2 pi j / n_packets`,
/// `j = 1..=n_packets`. Packets run in parallel; the sum is taken in index order.
pub fn averaged_echo(params: &ModelParams, n_steps: usize, n_packets: usize) -> Result<TimeSeries> {
    if n_packets == 0 {
        return Err(Error::InvalidParams("need at least one packet".into()));
    }
    let pair = EchoPair::new(params)?;
    let centres: Vec<f64> = (1..=n_packets).map(|j| TAU * j as f64 / n_packets as f64).collect();
    averaged_echo_over(&pair, &centres, n_steps)
}

/// Mean echo over packets centred at each of `centres`.
pub fn averaged_echo_over(pair: &EchoPair, centres: &[f64], n_steps: usize) -> Result<TimeSeries> {
    if centres.is_empty() {
        return Err(Error::InvalidParams("need at least one packet".into()));
    }
    let params = *pair.plain.params();
    let runs: Vec<TimeSeries> = centres
        .par_iter()
        .map(|&theta_c| {
            let init = gaussian_state_with(&params, theta_c, pair.plain.fourier())?;
            pair.echo(&init, n_steps)
        })
        .collect::<Result<_>>()?;
    let mut mean = runs[0].clone();
    for run in &runs[1..] {
        for (m, v) in mean.values.iter_mut().zip(&run.values) {
            *m += v;
        }
    }
    let inv = 1.0 / runs.len() as f64;
    mean.values.iter_mut().for_each(|m| *m *= inv);
    Ok(mean)
}

/// Classical Lyapunov exponent of the standard map, `ln(K/2)`.
pub fn lyapunov_reference(k: f64) -> f64 {
    (k / 2.0).ln()
}

/// Minimum number of distribution points above the noise floor for a
/// localization-length fit.
pub const MIN_PROFILE_POINTS: usize = 20;

/// Relative floor below which distribution entries are treated as noise.
pub const PROFILE_FLOOR: f64 = 1e-14;

/// Fit `ln P_n = -|p_n| / xi + c` over all entries above `1e-14 * max(P)`,
/// pooling both momentum signs. `xi` is [`FitResult::localization_length`].
pub fn fit_localization_length(dist: &[f64], params: &ModelParams) -> Result<FitResult> {
    if dist.len() != params.dim {
        return Err(Error::DimensionMismatch {
            expected: params.dim,
            actual: dist.len(),
        });
    }
    let max = dist.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::Fit("empty distribution".into()));
    }
    let floor = PROFILE_FLOOR * max;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut first = usize::MAX;
    let mut last = 0;
    for (s, &p) in dist.iter().enumerate() {
        if p > floor {
            xs.push(params.momentum(s).abs());
            ys.push(p.ln());
            first = first.min(s);
            last = s;
        }
    }
    if xs.len() < MIN_PROFILE_POINTS {
        return Err(Error::Fit(format!(
            "only {} points above the noise floor, need {MIN_PROFILE_POINTS}",
            xs.len()
        )));
    }
    let fit = linear_fit(&xs, &ys, first..last + 1)?;
    if fit.slope >= 0.0 {
        return Err(Error::Fit("momentum profile does not decay".into()));
    }
    Ok(fit)
}

/// Fit `ln L = -rate * t + c` from `t = 1` until `L` first drops below ten
/// times its saturation level (the mean of the last quarter of the series).
/// Rate is [`FitResult::rate`]. Returns [`Error::NoDecay`] when the echo never
/// leaves the neighbourhood of its saturation level.
pub fn fit_decay_rate(series: &TimeSeries) -> Result<FitResult> {
    let n = series.len();
    if n < 4 {
        return Err(Error::Fit(format!("series too short ({n} points)")));
    }
    let tail = &series.values[n - n / 4..];
    let saturation = tail.iter().sum::<f64>() / tail.len() as f64;
    let threshold = 10.0 * saturation;
    let start = match series.times.iter().position(|&t| t >= 1) {
        Some(i) => i,
        None => return Err(Error::NoDecay),
    };
    let mut end = start;
    while end < n && series.values[end] >= threshold && series.values[end] > 0.0 {
        end += 1;
    }
    if end - start < 2 {
        return Err(Error::NoDecay);
    }
    let xs: Vec<f64> = series.times[start..end].iter().map(|&t| t as f64).collect();
    let ys: Vec<f64> = series.values[start..end].iter().map(|v| v.ln()).collect();
    let fit = linear_fit(&xs, &ys, start..end)?;
    if fit.slope >= 0.0 {
        return Err(Error::NoDecay);
    }
    Ok(fit)
}
