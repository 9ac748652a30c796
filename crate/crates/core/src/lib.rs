//! Simulation library for the non-Hermitian quantum kicked rotor, a rotor
//! kicked by the complex potential `(K + i lambda) cos(theta)`.
//!
//! * [`model`] parameters, wavefunctions and initial states
//! * [`propagator`] split-step Floquet evolution with overflow-safe norms
//! * [`observables`] mean energy, Loschmidt echo and exponential fits
//! * [`spectrum`] dense quasienergy spectra, fidelities and IPR statistics
//! * [`sweep`] `(K, lambda)` parameter grids for phase diagrams
//! * [`cli`] configuration, command dispatch and CSV/JSON output

pub mod error;
pub mod fit;
pub mod model;
pub mod observables;
pub mod propagator;
pub mod spectrum;
pub mod sweep;
pub mod cli;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use fit::FitResult;
pub use model::{gaussian_state, ground_state, inner, probabilities, Fourier, ModelParams, WaveFunction};
pub use observables::{
    averaged_echo, energy_series, fit_decay_rate, fit_localization_length, loschmidt_echo, lyapunov_reference,
    mean_p2, time_averaged_p2, TimeSeries,
};
pub use propagator::{build_tables, KickTable, Propagator};
pub use spectrum::{
    build_floquet_matrix, diagonalize, dominant_mode, fidelity_profile, ipr, mean_ipr, QuasiMode, QuasiSpectrum,
};
pub use sweep::{fit_law, sweep_ipr, sweep_p2, GridSpec, Law, SweepGrid};

/// Version string embedded in output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
