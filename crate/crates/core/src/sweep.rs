//! Rectangular `(K, lambda)` parameter grids for phase diagrams.
//!
//! Cells are independent. They run on a dedicated work pool and write into
//! pre-indexed slots, so a grid is bit-identical for any worker count.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{linear_fit, FitResult};
use crate::model::{ground_state, ModelParams};
use crate::observables::mean_p2;
use crate::propagator::Propagator;
use crate::spectrum::{mean_ipr, QuasiSpectrum};

/// Edge probability above which the adaptive basis is doubled.
pub const EDGE_PROBABILITY_LIMIT: f64 = 1e-12;

/// Which scalar a sweep records per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// Time-averaged `<p^2>` over the run.
    TimeAveragedP2,
    /// Mean IPR of the quasieigenstates with positive `eps_i`.
    MeanIpr,
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Observable::TimeAveragedP2 => "time_averaged_p2",
            Observable::MeanIpr => "mean_ipr",
        })
    }
}

/// Grid axes plus the settings shared by every cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub k_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    /// `hbar`, starting `dim` and the remaining fields shared by all cells;
    /// `k` and `lambda` are overwritten per cell.
    pub base: ModelParams,
    /// Kicks per cell for the energy sweep.
    pub steps: usize,
    /// Upper bound for the adaptive basis of the energy sweep.
    pub max_dim: usize,
    /// Size of the work pool.
    pub workers: usize,
}

impl GridSpec {
    pub fn new(k_values: Vec<f64>, lambda_values: Vec<f64>, base: ModelParams) -> Self {
        Self {
            k_values,
            lambda_values,
            base,
            steps: 1000,
            max_dim: 1 << 16,
            workers: 1,
        }
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_max_dim(mut self, max_dim: usize) -> Self {
        self.max_dim = max_dim;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        for (name, axis) in [("K", &self.k_values), ("lambda", &self.lambda_values)] {
            if axis.is_empty() {
                return Err(Error::InvalidParams(format!("{name} axis is empty")));
            }
            if axis.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} axis has non-finite values")));
            }
            if axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidParams(format!("{name} axis must be strictly ascending")));
            }
        }
        if self.workers == 0 {
            return Err(Error::InvalidParams("workers must be at least 1".into()));
        }
        Ok(())
    }

    fn cell_params(&self, index: usize) -> ModelParams {
        let nl = self.lambda_values.len();
        self.base
            .with_k(self.k_values[index / nl])
            .with_lambda(self.lambda_values[index % nl])
    }
}

/// `count` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Outcome of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    /// Edge probability stayed above the limit even at the largest basis.
    Truncated,
    /// No mode with positive `eps_i`: the spectrum is unitary.
    Hermitian,
    Failed(String),
}

impl CellStatus {
    pub fn label(&self) -> String {
        match self {
            CellStatus::Ok => "ok".into(),
            CellStatus::Truncated => "truncated".into(),
            CellStatus::Hermitian => "failed-hermitian".into(),
            CellStatus::Failed(reason) => format!("failed: {reason}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub k: f64,
    pub lambda: f64,
    /// `NaN` for failed cells.
    pub value: f64,
    pub status: CellStatus,
    /// Basis size the value was computed with.
    pub dim: usize,
}

/// Result grid, cells stored row-major with `K` as the slow index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub k_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    pub cells: Vec<Cell>,
    pub observable: Observable,
    pub spec: GridSpec,
}

impl SweepGrid {
    pub fn cell(&self, k_index: usize, lambda_index: usize) -> &Cell {
        &self.cells[k_index * self.lambda_values.len() + lambda_index]
    }

    /// Values along the `lambda` axis at fixed `K` index.
    pub fn row(&self, k_index: usize) -> Vec<f64> {
        (0..self.lambda_values.len()).map(|j| self.cell(k_index, j).value).collect()
    }

    /// Values along the `K` axis at fixed `lambda` index.
    pub fn column(&self, lambda_index: usize) -> Vec<f64> {
        (0..self.k_values.len()).map(|i| self.cell(i, lambda_index).value).collect()
    }

    pub fn failed_cells(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| !matches!(c.status, CellStatus::Ok))
            .count()
    }
}

fn run_cells<F>(spec: &GridSpec, observable: Observable, cell: F) -> Result<SweepGrid>
where
    F: Fn(ModelParams) -> Cell + Sync,
{
    spec.validate()?;
    let count = spec.k_values.len() * spec.lambda_values.len();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start work pool: {e}")))?;
    let cells = pool.install(|| {
        (0..count)
            .into_par_iter()
            .map(|i| cell(spec.cell_params(i)))
            .collect::<Vec<_>>()
    });
    Ok(SweepGrid {
        k_values: spec.k_values.clone(),
        lambda_values: spec.lambda_values.clone(),
        cells,
        observable,
        spec: spec.clone(),
    })
}

/// Largest probability among the two outermost slots on each side.
pub fn edge_probability(amps: &[num_complex::Complex64]) -> f64 {
    let d = amps.len();
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    [0, 1, d - 2, d - 1]
        .iter()
        .map(|&s| amps[s].norm_sqr() / norm)
        .fold(0.0, f64::max)
}

/// Outcome of one adaptive diffusion run.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveRun {
    pub time_averaged_p2: f64,
    pub dim: usize,
    /// Edge probability stayed below [`EDGE_PROBABILITY_LIMIT`] for the whole run.
    pub converged: bool,
}

/// Evolve the ground state `steps` kicks and average `<p^2>`, doubling the
/// basis until the edge probability stays below [`EDGE_PROBABILITY_LIMIT`]
/// at every kick (or `max_dim` is reached).
pub fn adaptive_time_averaged_p2(params: &ModelParams, steps: usize, max_dim: usize) -> Result<AdaptiveRun> {
    if steps == 0 {
        return Err(Error::InvalidParams("need at least one kick".into()));
    }
    let mut dim = params.dim;
    loop {
        let p = params.with_dim(dim);
        let propagator = Propagator::new(&p, false)?;
        let last_try = dim * 2 > max_dim;
        let mut sum = 0.0;
        let mut leaked = false;
        let outcome = propagator.try_evolve(ground_state(&p)?, steps, |_, psi| {
            sum += mean_p2(psi, &p)?;
            if edge_probability(psi.amps()) > EDGE_PROBABILITY_LIMIT {
                leaked = true;
                if !last_try {
                    // Abort early; the run is repeated in a larger basis.
                    return Err(Error::Fit("edge leak".into()));
                }
            }
            Ok(())
        });
        match outcome {
            Ok(_) => {
                return Ok(AdaptiveRun {
                    time_averaged_p2: sum / steps as f64,
                    dim,
                    converged: !leaked,
                })
            }
            Err(Error::Fit(_)) if leaked && !last_try => dim *= 2,
            Err(e) => return Err(e),
        }
    }
}

/// Time-averaged `<p^2>` of the ground state over `spec.steps` kicks per cell.
pub fn sweep_p2(spec: &GridSpec) -> Result<SweepGrid> {
    if spec.steps == 0 {
        return Err(Error::InvalidParams("steps must be positive".into()));
    }
    run_cells(spec, Observable::TimeAveragedP2, |p| {
        match adaptive_time_averaged_p2(&p, spec.steps, spec.max_dim.max(p.dim)) {
            Ok(run) => Cell {
                k: p.k,
                lambda: p.lambda,
                value: run.time_averaged_p2,
                status: if run.converged { CellStatus::Ok } else { CellStatus::Truncated },
                dim: run.dim,
            },
            Err(e) => Cell {
                k: p.k,
                lambda: p.lambda,
                value: f64::NAN,
                status: CellStatus::Failed(e.to_string()),
                dim: p.dim,
            },
        }
    })
}

/// Mean IPR of the growing quasieigenstates per cell, in the fixed basis `spec.base.dim`.
pub fn sweep_ipr(spec: &GridSpec) -> Result<SweepGrid> {
    run_cells(spec, Observable::MeanIpr, |p| {
        let (value, status) = match QuasiSpectrum::compute(&p).and_then(|s| mean_ipr(&s)) {
            Ok(v) => (v, CellStatus::Ok),
            Err(Error::NoGrowingModes) => (f64::NAN, CellStatus::Hermitian),
            Err(e) => (f64::NAN, CellStatus::Failed(e.to_string())),
        };
        Cell {
            k: p.k,
            lambda: p.lambda,
            value,
            status,
            dim: p.dim,
        }
    })
}

/// Scaling laws fitted by [`fit_law`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    /// `y = a x^2 + b`
    Quadratic,
    /// `y = a x + b`
    Linear,
    /// `y = a ln(x) + b`
    Log,
}

/// Least squares of `y` against the transformed abscissa of `law`; the
/// coefficient is [`FitResult::slope`].
pub fn fit_law(xs: &[f64], ys: &[f64], law: Law) -> Result<FitResult> {
    if xs.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 points, got {}", xs.len())));
    }
    let transformed: Vec<f64> = match law {
        Law::Quadratic => xs.iter().map(|x| x * x).collect(),
        Law::Linear => xs.to_vec(),
        Law::Log => {
            if xs.iter().any(|&x| x <= 0.0) {
                return Err(Error::Fit("log law needs positive abscissae".into()));
            }
            xs.iter().map(|x| x.ln()).collect()
        }
    };
    linear_fit(&transformed, ys, 0..xs.len())
}

/// Spearman rank correlation; ties share their average rank.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Fit("spearman needs two equal-length series of 2+ points".into()));
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    Ok(linear_fit(&rx, &ry, 0..xs.len())?.correlation)
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(0.0, 10.0, 11)[3], 3.0);
        assert_eq!(linspace(1.0, 2.0, 1), vec![1.0]);
        assert!(linspace(0.0, 1.0, 0).is_empty());
    }

    #[test]
    fn quadratic_law_exact() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        let f = fit_law(&xs, &ys, Law::Quadratic).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-12);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn log_law_slope() {
        let xs = [0.5, 1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 5.0 - 2.0 * x.ln()).collect();
        let f = fit_law(&xs, &ys, Law::Log).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12);
        assert!((f.intercept - 5.0).abs() < 1e-12);
    }

    #[test]
    fn law_errors() {
        assert!(fit_law(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], Law::Linear).is_err());
        assert!(fit_law(&[0.0, 1.0, 2.0, 3.0], &[1.0; 4], Law::Log).is_err());
    }

    #[test]
    fn spearman_signs() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&xs, &[1.0, 4.0, 9.0, 100.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&xs, &[5.0, 3.0, 2.0, -1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(ranks(&[2.0, 1.0, 2.0]), vec![1.5, 0.0, 1.5]);
    }

    #[test]
    fn spec_validation() {
        let base = ModelParams::new(1.0, 0.0, 0.25, 64).unwrap();
        assert!(GridSpec::new(vec![], vec![0.0], base).validate().is_err());
        assert!(GridSpec::new(vec![1.0, 0.5], vec![0.0], base).validate().is_err());
        assert!(GridSpec::new(vec![1.0], vec![0.0], base).with_workers(0).validate().is_err());
    }

    #[test]
    fn free_rotor_cell_stays_at_rest() {
        let base = ModelParams::new(0.0, 0.0, 0.25, 64).unwrap();
        let spec = GridSpec::new(vec![0.0, 1.0], vec![-0.01, 0.0, 0.01], base).with_steps(50);
        let grid = sweep_p2(&spec).unwrap();
        assert_eq!(grid.cells.len(), 6);
        assert!(grid.cell(0, 1).value < 1e-20);
        assert!(grid.cell(0, 0).value > 0.0 && grid.cell(0, 2).value > 0.0);
        assert!(grid.row(1).iter().all(|&v| v > 0.0));
        assert_eq!(grid.cell(1, 2).lambda, 0.01);
    }

    #[test]
    fn hermitian_column_marked() {
        let base = ModelParams::new(0.0, 0.0, 0.25, 32).unwrap();
        let spec = GridSpec::new(vec![1.0, 2.0], vec![0.0, 0.01], base);
        let grid = sweep_ipr(&spec).unwrap();
        for i in 0..2 {
            assert_eq!(grid.cell(i, 0).status, CellStatus::Hermitian);
            assert!(grid.cell(i, 0).value.is_nan());
            assert_eq!(grid.cell(i, 1).status, CellStatus::Ok);
        }
        assert_eq!(grid.failed_cells(), 2);
    }

    #[test]
    fn adaptive_basis_grows_until_edges_are_empty() {
        let p = ModelParams::new(5.0, 0.0, 0.25, 64).unwrap();
        let run = adaptive_time_averaged_p2(&p, 50, 1 << 14).unwrap();
        assert!(run.converged);
        assert!(run.dim > 64);
        let capped = adaptive_time_averaged_p2(&p, 50, 64).unwrap();
        assert!(!capped.converged);
        assert_eq!(capped.dim, 64);
    }
}
