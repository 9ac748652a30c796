//! Command-line front end: configuration resolution, command dispatch and
//! CSV/JSON serialization.
//!
//! Precedence is flags, then config file (TOML), then built-in defaults.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::model::{ground_state, probabilities, ModelParams, WaveFunction};
use crate::observables::{averaged_echo, energy_run, mean_p2, fit_decay_rate, fit_localization_length, lyapunov_reference};
use crate::spectrum::{argmax_fidelity, fidelity_profile, mean_ipr, QuasiSpectrum};
use crate::sweep::{linspace, sweep_ipr, sweep_p2, GridSpec, SweepGrid};
use crate::VERSION;

/// Default kick count, time-average window and ensemble size.
pub const DEFAULT_STEPS: usize = 1000;
pub const DEFAULT_PACKETS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Evolve,
    Echo,
    Spectrum,
    Fidelity,
    SweepP2,
    SweepIpr,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Echo => "echo",
            Command::Spectrum => "spectrum",
            Command::Fidelity => "fidelity",
            Command::SweepP2 => "sweep-p2",
            Command::SweepIpr => "sweep-ipr",
        }
    }

    fn is_sweep(self) -> bool {
        matches!(self, Command::SweepP2 | Command::SweepIpr)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Axes of a `(K, lambda)` sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxes {
    pub k_min: f64,
    pub k_max: f64,
    pub k_count: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_count: usize,
}

impl Default for GridAxes {
    fn default() -> Self {
        Self {
            k_min: 0.0,
            k_max: 10.0,
            k_count: 41,
            lambda_min: -0.01,
            lambda_max: 0.01,
            lambda_count: 41,
        }
    }
}

impl GridAxes {
    pub fn k_values(&self) -> Vec<f64> {
        linspace(self.k_min, self.k_max, self.k_count)
    }

    pub fn lambda_values(&self) -> Vec<f64> {
        linspace(self.lambda_min, self.lambda_max, self.lambda_count)
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: ModelParams,
    pub steps: usize,
    pub packets: usize,
    pub grid: Option<GridAxes>,
    /// Largest basis tried by the adaptive energy sweep.
    pub max_dim: usize,
    pub workers: usize,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    /// Final momentum distribution (evolve, fidelity).
    pub dist_path: Option<PathBuf>,
    /// Distribution of the best-overlap quasieigenstate (fidelity).
    pub mode_dist_path: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(name = "nqkr", version, about = "Non-Hermitian quantum kicked rotor simulations", arg_required_else_help = true)]
struct Cli {
    /// TOML file with default values for any option.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Real kick strength K.
    #[arg(long = "K", global = true, allow_negative_numbers = true)]
    k: Option<f64>,
    /// Imaginary kick strength lambda.
    #[arg(long, global = true, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Effective Planck constant.
    #[arg(long, global = true)]
    hbar: Option<f64>,
    /// Momentum basis size (even, >= 4).
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Kick perturbation for the Loschmidt echo.
    #[arg(long, global = true, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    /// Gaussian packet width parameter.
    #[arg(long, global = true, allow_negative_numbers = true)]
    sigma: Option<f64>,
    /// Output file (stdout when omitted).
    #[arg(long, short, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Mean energy versus time from the ground state.
    Evolve(RunArgs),
    /// Packet-averaged Loschmidt echo.
    Echo(EchoArgs),
    /// Quasienergy spectrum of the truncated Floquet matrix.
    Spectrum,
    /// Fidelity of the evolved ground state against every quasieigenstate.
    Fidelity(RunArgs),
    /// Phase diagram of the time-averaged mean energy.
    #[command(name = "sweep-p2")]
    SweepP2(SweepArgs),
    /// Phase diagram of the mean IPR of growing quasieigenstates.
    #[command(name = "sweep-ipr")]
    SweepIpr(GridArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Number of kicks [default: 1000]
    #[arg(long)]
    steps: Option<usize>,
    /// Write the final momentum distribution here.
    #[arg(long, value_name = "PATH")]
    dist: Option<PathBuf>,
    /// Write the best-overlap eigenstate distribution here (fidelity only).
    #[arg(long, value_name = "PATH")]
    mode_dist: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EchoArgs {
    /// Number of kicks [default: 1000]
    #[arg(long)]
    steps: Option<usize>,
    /// Gaussian packets in the ensemble average [default: 50]
    #[arg(long)]
    packets: Option<usize>,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Smallest K on the grid [default: 0]
    #[arg(long, allow_negative_numbers = true)]
    k_min: Option<f64>,
    /// Largest K on the grid [default: 10]
    #[arg(long, allow_negative_numbers = true)]
    k_max: Option<f64>,
    /// Number of K values [default: 41]
    #[arg(long)]
    k_count: Option<usize>,
    /// Smallest lambda on the grid [default: -0.01]
    #[arg(long, allow_negative_numbers = true)]
    lambda_min: Option<f64>,
    /// Largest lambda on the grid [default: 0.01]
    #[arg(long, allow_negative_numbers = true)]
    lambda_max: Option<f64>,
    /// Number of lambda values [default: 41]
    #[arg(long)]
    lambda_count: Option<usize>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Kicks per cell; the time average runs over all of them [default: 1000]
    #[arg(long)]
    steps: Option<usize>,
    /// Largest basis size for the adaptive truncation [default: 65536]
    #[arg(long)]
    max_dim: Option<usize>,
}

/// Values accepted from a TOML config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(rename = "K")]
    k: Option<f64>,
    lambda: Option<f64>,
    hbar: Option<f64>,
    dim: Option<usize>,
    epsilon: Option<f64>,
    sigma: Option<f64>,
    steps: Option<usize>,
    packets: Option<usize>,
    max_dim: Option<usize>,
    workers: Option<usize>,
    output: Option<PathBuf>,
    format: Option<OutputFormat>,
    grid: Option<GridFile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    k_min: Option<f64>,
    k_max: Option<f64>,
    k_count: Option<usize>,
    lambda_min: Option<f64>,
    lambda_max: Option<f64>,
    lambda_count: Option<usize>,
}

/// What the argument parser produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Parsed {
    Run(RunConfig),
    /// Help or version text requested explicitly.
    Info(String),
}

/// Parse `argv` (including the program name). A `--config` file named in
/// `argv` is read from disk; `file` supplies config-file contents directly.
pub fn parse_config<I, T>(argv: I, file: Option<&str>) -> Result<Parsed>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Ok(Parsed::Info(e.to_string())),
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => Err(Error::Config(format!(
                    "missing command\n{}",
                    e.render()
                ))),
                _ => Err(Error::Config(first_line(&e.to_string()))),
            };
        }
    };
    let text = match (&cli.config, file) {
        (Some(path), _) => Some(
            fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?,
        ),
        (None, Some(text)) => Some(text.to_owned()),
        (None, None) => None,
    };
    let file: ConfigFile = match text {
        Some(t) => toml::from_str(&t).map_err(|e| Error::Config(first_line(&e.to_string())))?,
        None => ConfigFile::default(),
    };
    resolve(cli, file).map(Parsed::Run)
}

fn first_line(s: &str) -> String {
    s.lines()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("")
        .trim_start_matches("error: ")
        .to_string()
}

fn resolve(cli: Cli, file: ConfigFile) -> Result<RunConfig> {
    let defaults = ModelParams::default();
    let params = ModelParams {
        k: cli.k.or(file.k).unwrap_or(defaults.k),
        lambda: cli.lambda.or(file.lambda).unwrap_or(defaults.lambda),
        hbar: cli.hbar.or(file.hbar).unwrap_or(defaults.hbar),
        dim: cli.dim.or(file.dim).unwrap_or(defaults.dim),
        epsilon: cli.epsilon.or(file.epsilon).unwrap_or(defaults.epsilon),
        sigma: cli.sigma.or(file.sigma).unwrap_or(defaults.sigma),
    };
    params.validate().map_err(|e| Error::Config(e.to_string()))?;

    let grid_file = file.grid.unwrap_or_default();
    let resolve_grid = |g: GridArgs| {
        let d = GridAxes::default();
        GridAxes {
            k_min: g.k_min.or(grid_file.k_min).unwrap_or(d.k_min),
            k_max: g.k_max.or(grid_file.k_max).unwrap_or(d.k_max),
            k_count: g.k_count.or(grid_file.k_count).unwrap_or(d.k_count),
            lambda_min: g.lambda_min.or(grid_file.lambda_min).unwrap_or(d.lambda_min),
            lambda_max: g.lambda_max.or(grid_file.lambda_max).unwrap_or(d.lambda_max),
            lambda_count: g.lambda_count.or(grid_file.lambda_count).unwrap_or(d.lambda_count),
        }
    };

    let mut config = RunConfig {
        command: Command::Spectrum,
        params,
        steps: file.steps.unwrap_or(DEFAULT_STEPS),
        packets: file.packets.unwrap_or(DEFAULT_PACKETS),
        grid: None,
        max_dim: file.max_dim.unwrap_or(1 << 16),
        workers: cli.workers.or(file.workers).unwrap_or(1),
        output_path: cli.output.or(file.output),
        output_format: OutputFormat::Csv,
        dist_path: None,
        mode_dist_path: None,
    };
    match cli.command {
        CliCommand::Evolve(a) => {
            if a.mode_dist.is_some() {
                return Err(Error::Config("--mode-dist only applies to the fidelity command".into()));
            }
            config.command = Command::Evolve;
            config.steps = a.steps.unwrap_or(config.steps);
            config.dist_path = a.dist;
        }
        CliCommand::Fidelity(a) => {
            config.command = Command::Fidelity;
            config.steps = a.steps.unwrap_or(config.steps);
            config.dist_path = a.dist;
            config.mode_dist_path = a.mode_dist;
        }
        CliCommand::Echo(a) => {
            config.command = Command::Echo;
            config.steps = a.steps.unwrap_or(config.steps);
            config.packets = a.packets.unwrap_or(config.packets);
        }
        CliCommand::Spectrum => config.command = Command::Spectrum,
        CliCommand::SweepP2(a) => {
            config.command = Command::SweepP2;
            config.steps = a.steps.unwrap_or(config.steps);
            config.max_dim = a.max_dim.unwrap_or(config.max_dim);
            config.grid = Some(resolve_grid(a.grid));
        }
        CliCommand::SweepIpr(g) => {
            config.command = Command::SweepIpr;
            config.grid = Some(resolve_grid(g));
        }
    }

    // Format: explicit flag, then file, then output extension.
    let from_extension = config
        .output_path
        .as_deref()
        .and_then(Path::extension)
        .and_then(|e| e.to_str())
        .and_then(|e| match e.to_ascii_lowercase().as_str() {
            "json" => Some(OutputFormat::Json),
            "csv" => Some(OutputFormat::Csv),
            _ => None,
        });
    let explicit = cli.format.or(file.format);
    if let (Some(f), Some(ext)) = (explicit, from_extension) {
        if f != ext {
            return Err(Error::Config(format!(
                "--format {} conflicts with output file extension",
                format_name(f)
            )));
        }
    }
    config.output_format = explicit.or(from_extension).unwrap_or_default();
    config.validate()?;
    Ok(config)
}

fn format_name(f: OutputFormat) -> &'static str {
    match f {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    }
}

impl RunConfig {
    pub fn new(command: Command, params: ModelParams) -> Self {
        Self {
            command,
            params,
            steps: DEFAULT_STEPS,
            packets: DEFAULT_PACKETS,
            grid: command.is_sweep().then(GridAxes::default),
            max_dim: 1 << 16,
            workers: 1,
            output_path: None,
            output_format: OutputFormat::Csv,
            dist_path: None,
            mode_dist_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.packets == 0 {
            return Err(Error::Config("packets must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        match self.command {
            Command::Evolve | Command::SweepP2 if self.steps == 0 => {
                return Err(Error::Config(format!("{} needs --steps >= 1", self.command.name())))
            }
            _ => {}
        }
        if self.command.is_sweep() {
            let g = self
                .grid
                .ok_or_else(|| Error::Config("sweep commands need grid axes".into()))?;
            if g.k_count == 0 || g.lambda_count == 0 {
                return Err(Error::Config("grid counts must be positive".into()));
            }
            if (g.k_count > 1 && g.k_max <= g.k_min) || (g.lambda_count > 1 && g.lambda_max <= g.lambda_min) {
                return Err(Error::Config("grid maxima must exceed minima".into()));
            }
        } else if self.grid.is_some() {
            return Err(Error::Config("grid axes only apply to sweep commands".into()));
        }
        if self.mode_dist_path.is_some() && self.command != Command::Fidelity {
            return Err(Error::Config("--mode-dist only applies to the fidelity command".into()));
        }
        if self.dist_path.is_some() && !matches!(self.command, Command::Evolve | Command::Fidelity) {
            return Err(Error::Config("--dist only applies to evolve and fidelity".into()));
        }
        Ok(())
    }

    /// Command line that parses back to this configuration.
    pub fn render(&self) -> Vec<String> {
        let p = &self.params;
        let mut argv = vec![
            "nqkr".to_string(),
            format!("--K={}", p.k),
            format!("--lambda={}", p.lambda),
            format!("--hbar={}", p.hbar),
            format!("--dim={}", p.dim),
            format!("--epsilon={}", p.epsilon),
            format!("--sigma={}", p.sigma),
            format!("--workers={}", self.workers),
            format!("--format={}", format_name(self.output_format)),
        ];
        if let Some(path) = &self.output_path {
            argv.push(format!("--output={}", path.display()));
        }
        argv.push(self.command.name().to_string());
        let grid_flags = |argv: &mut Vec<String>, g: &GridAxes| {
            argv.extend([
                format!("--k-min={}", g.k_min),
                format!("--k-max={}", g.k_max),
                format!("--k-count={}", g.k_count),
                format!("--lambda-min={}", g.lambda_min),
                format!("--lambda-max={}", g.lambda_max),
                format!("--lambda-count={}", g.lambda_count),
            ])
        };
        match self.command {
            Command::Evolve | Command::Fidelity => {
                argv.push(format!("--steps={}", self.steps));
                if let Some(d) = &self.dist_path {
                    argv.push(format!("--dist={}", d.display()));
                }
                if let Some(d) = &self.mode_dist_path {
                    argv.push(format!("--mode-dist={}", d.display()));
                }
            }
            Command::Echo => {
                argv.push(format!("--steps={}", self.steps));
                argv.push(format!("--packets={}", self.packets));
            }
            Command::Spectrum => {}
            Command::SweepP2 => {
                grid_flags(&mut argv, &self.grid.unwrap_or_default());
                argv.push(format!("--steps={}", self.steps));
                argv.push(format!("--max-dim={}", self.max_dim));
            }
            Command::SweepIpr => grid_flags(&mut argv, &self.grid.unwrap_or_default()),
        }
        argv
    }

    /// Resolved parameters embedded in every output file. Execution-only
    /// settings (workers, paths) are left out so outputs are reproducible.
    pub fn meta(&self) -> Map<String, Value> {
        let p = &self.params;
        let mut m = Map::new();
        m.insert("version".into(), json!(format!("nqkr {VERSION}")));
        m.insert("command".into(), json!(self.command.name()));
        m.insert("K".into(), json!(p.k));
        m.insert("lambda".into(), json!(p.lambda));
        m.insert("hbar".into(), json!(p.hbar));
        m.insert("dim".into(), json!(p.dim));
        m.insert("epsilon".into(), json!(p.epsilon));
        m.insert("sigma".into(), json!(p.sigma));
        match self.command {
            Command::Evolve | Command::Fidelity => {
                m.insert("steps".into(), json!(self.steps));
            }
            Command::Echo => {
                m.insert("steps".into(), json!(self.steps));
                m.insert("packets".into(), json!(self.packets));
            }
            Command::Spectrum => {}
            Command::SweepP2 | Command::SweepIpr => {
                if self.command == Command::SweepP2 {
                    m.insert("steps".into(), json!(self.steps));
                    m.insert("max_dim".into(), json!(self.max_dim));
                }
                let g = self.grid.unwrap_or_default();
                m.insert("k_min".into(), json!(g.k_min));
                m.insert("k_max".into(), json!(g.k_max));
                m.insert("k_count".into(), json!(g.k_count));
                m.insert("lambda_min".into(), json!(g.lambda_min));
                m.insert("lambda_max".into(), json!(g.lambda_max));
                m.insert("lambda_count".into(), json!(g.lambda_count));
            }
        }
        m
    }

    fn grid_spec(&self) -> GridSpec {
        let g = self.grid.unwrap_or_default();
        GridSpec::new(g.k_values(), g.lambda_values(), self.params)
            .with_steps(self.steps)
            .with_workers(self.workers)
            .with_max_dim(self.max_dim)
    }
}

/// One output cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(_) => Value::Null,
            Cell::Text(s) => json!(s),
        }
    }
}

/// Decimal scientific notation with 17 significant digits (exact round trip).
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// Column-oriented result table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// `# key: value` metadata lines, then the header row, then data.
    pub fn to_csv(&self, meta: &Map<String, Value>) -> String {
        let mut out = String::new();
        for (k, v) in meta {
            let _ = writeln!(out, "# {k}: {}", meta_value(v));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, meta: &Map<String, Value>) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.to_string(), v.json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let doc = json!({ "meta": meta, "rows": rows });
        let mut s = serde_json::to_string_pretty(&doc).expect("json serialization");
        s.push('\n');
        s
    }

    pub fn render(&self, format: OutputFormat, meta: &Map<String, Value>) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(meta),
            OutputFormat::Json => self.to_json(meta),
        }
    }
}

fn meta_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if !n.is_i64() && !n.is_u64() => format_float(x),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

/// Output of a command: the main table plus optional extra distributions.
#[derive(Debug, Clone)]
pub struct Report {
    pub table: Table,
    pub extras: Vec<(PathBuf, Table)>,
    /// One-line human summary.
    pub summary: String,
}

fn distribution_table(psi: &WaveFunction, params: &ModelParams) -> Result<Table> {
    let prob = probabilities(psi)?;
    let mut t = Table::new(vec!["n", "p", "prob"]);
    for (s, pr) in prob.iter().enumerate() {
        t.push(vec![
            Cell::Int(params.momentum_index(s)),
            Cell::Float(params.momentum(s)),
            Cell::Float(*pr),
        ]);
    }
    Ok(t)
}

fn xi_text(psi: &WaveFunction, params: &ModelParams) -> String {
    probabilities(psi)
        .and_then(|p| fit_localization_length(&p, params))
        .map(|f| format!("{:.4}", f.localization_length()))
        .unwrap_or_else(|_| "n/a".into())
}

fn sweep_table(grid: &SweepGrid) -> Table {
    let mut t = Table::new(vec!["K", "lambda", "value", "status"]);
    for c in &grid.cells {
        t.push(vec![
            Cell::Float(c.k),
            Cell::Float(c.lambda),
            Cell::Float(c.value),
            Cell::Text(c.status.label()),
        ]);
    }
    t
}

/// Execute a command and build its output tables without touching the filesystem.
pub fn execute(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    let params = &config.params;
    let mut extras = Vec::new();
    let (table, summary) = match config.command {
        Command::Evolve => {
            let init = ground_state(params)?;
            let mut t = Table::new(vec!["t", "p2", "log_norm"]);
            t.push(vec![Cell::Int(0), Cell::Float(mean_p2(&init, params)?), Cell::Float(init.log_true_norm())]);
            let run = energy_run(params, init, config.steps)?;
            for ((t_n, p2), (_, ln)) in run.p2.iter().zip(run.log_norm.iter()) {
                t.push(vec![Cell::Int(t_n as i64), Cell::Float(p2), Cell::Float(ln)]);
            }
            if let Some(path) = &config.dist_path {
                extras.push((path.clone(), distribution_table(&run.final_state, params)?));
            }
            let mean = run.p2.values.iter().sum::<f64>() / run.p2.len() as f64;
            let summary = format!(
                "evolve: final <p^2>={:.6} time-averaged <p^2>={:.6} xi={} log_norm={:.6}",
                run.p2.values.last().copied().unwrap_or(f64::NAN),
                mean,
                xi_text(&run.final_state, params),
                run.final_state.log_true_norm()
            );
            (t, summary)
        }
        Command::Echo => {
            let series = averaged_echo(params, config.steps, config.packets)?;
            let mut t = Table::new(vec!["t", "L_mean"]);
            for (t_n, v) in series.iter() {
                t.push(vec![Cell::Int(t_n as i64), Cell::Float(v)]);
            }
            let min = series.values.iter().cloned().fold(f64::INFINITY, f64::min);
            let summary = match fit_decay_rate(&series) {
                Ok(fit) => format!(
                    "echo: fitted rate={:.6} over t={}..{} (ln(K/2)={:.6}) min L={:.6e}",
                    fit.rate(),
                    series.times[fit.window.start],
                    series.times[fit.window.end - 1],
                    lyapunov_reference(params.k),
                    min
                ),
                Err(Error::NoDecay) => format!("echo: no decay window (min L={min:.6})"),
                Err(e) => return Err(e),
            };
            (t, summary)
        }
        Command::Spectrum => {
            let spectrum = QuasiSpectrum::compute(params)?;
            let mut t = Table::new(vec!["index", "eps_r", "eps_i", "ipr"]);
            for (i, m) in spectrum.modes.iter().enumerate() {
                t.push(vec![
                    Cell::Int(i as i64),
                    Cell::Float(m.eps_r),
                    Cell::Float(m.eps_i),
                    Cell::Float(m.ipr),
                ]);
            }
            let ipr_text = match mean_ipr(&spectrum) {
                Ok(v) => format!("{v:.6}"),
                Err(Error::NoGrowingModes) => "n/a (hermitian)".into(),
                Err(e) => return Err(e),
            };
            let summary = format!(
                "spectrum: top eps_i={:.6e} max |eps_i|={:.3e} mean ipr={} residual={:.3e}",
                spectrum.modes[0].eps_i,
                spectrum.max_abs_eps_i(),
                ipr_text,
                spectrum.max_residual
            );
            (t, summary)
        }
        Command::Fidelity => {
            let spectrum = QuasiSpectrum::compute(params)?;
            let run = energy_run(params, ground_state(params)?, config.steps.max(1))?;
            let psi = if config.steps == 0 { ground_state(params)? } else { run.final_state };
            let profile = fidelity_profile(&psi, &spectrum)?;
            let mut t = Table::new(vec!["index", "eps_i", "F"]);
            for f in &profile {
                t.push(vec![Cell::Int(f.index as i64), Cell::Float(f.eps_i), Cell::Float(f.fidelity)]);
            }
            let best = argmax_fidelity(&profile).expect("non-empty spectrum");
            if let Some(path) = &config.dist_path {
                extras.push((path.clone(), distribution_table(&psi, params)?));
            }
            let mode = spectrum.state(best.index)?;
            if let Some(path) = &config.mode_dist_path {
                extras.push((path.clone(), distribution_table(&mode, params)?));
            }
            let summary = format!(
                "fidelity: max F={:.6} at mode {} (eps_i={:.6e}, rank {} by eps_i) xi state={} xi mode={}",
                best.fidelity,
                best.index,
                best.eps_i,
                best.index + 1,
                xi_text(&psi, params),
                xi_text(&mode, params)
            );
            (t, summary)
        }
        Command::SweepP2 | Command::SweepIpr => {
            let spec = config.grid_spec();
            let grid = if config.command == Command::SweepP2 {
                sweep_p2(&spec)?
            } else {
                sweep_ipr(&spec)?
            };
            let summary = format!(
                "{}: {} cells, {} ok, {} not ok",
                config.command.name(),
                grid.cells.len(),
                grid.cells.len() - grid.failed_cells(),
                grid.failed_cells()
            );
            (sweep_table(&grid), summary)
        }
    };
    Ok(Report { table, extras, summary })
}

/// Execute `config`, write its output files (or stdout) and return the summary line.
pub fn run(config: &RunConfig) -> Result<String> {
    let report = execute(config)?;
    let meta = config.meta();
    let body = report.table.render(config.output_format, &meta);
    match &config.output_path {
        Some(path) => fs::write(path, body)?,
        None => print!("{body}"),
    }
    for (path, table) in &report.extras {
        fs::write(path, table.render(config.output_format, &meta))?;
    }
    Ok(report.summary)
}
