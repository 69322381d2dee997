//! `sourcecount` command-line interface.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 numerical
//! failure.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::estimators::{gmdl_estimate_with_penalty, identifiability_flag, rmdl_estimate, rmdl_fit, CriterionTable, EstimatorError, DEFAULT_IDENTIFIABILITY_TOL};
use crate::model::{Distribution, EstimatorConfig, ModelError, Penalty, ScenarioConfig};
use crate::montecarlo::{log_spaced, sweep_separation, sweep_snapshots, SweepResult};
use crate::signal_gen::{generate_snapshots, read_snapshots, write_snapshots, RngStream};
use crate::spectra::{eig_hermitian, sample_covariance, HermitianMatrix, SpectraError};

pub const THREADS_ENV: &str = "SOURCECOUNT_THREADS";
pub const DEFAULT_SEED: u64 = 20_040_601;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<EstimatorError> for CliError {
    fn from(e: EstimatorError) -> Self {
        match e {
            EstimatorError::Config(m) => m.into(),
            EstimatorError::EmptySweep
            | EstimatorError::TooFewSnapshots(_)
            | EstimatorError::OrderOutOfRange { .. }
            | EstimatorError::DimensionMismatch(..) => CliError::Config(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<SpectraError> for CliError {
    fn from(e: SpectraError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "sourcecount", version, about = "Estimate the number of sources seen by a sensor array")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the eigenvalues of the scenario's true covariance.
    Eigvals(ScenarioArgs),
    /// Run the robust least-squares fit for one candidate order.
    Fit(FitArgs),
    /// Simulate (or load) snapshots and run both estimators once.
    Estimate(EstimateArgs),
    /// Probability of correct decision versus number of snapshots.
    #[command(name = "sweep-n")]
    SweepN(SweepNArgs),
    /// Probability of correct decision versus source separation.
    #[command(name = "sweep-rho")]
    SweepRho(SweepRhoArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PenaltyArg {
    Mdl,
    Aic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DistArg {
    Gaussian,
    Laplacian,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    pub scenario: Option<PathBuf>,
    /// Bundled scenario: fig1 (white noise), fig2/fig3 (weak mismatch),
    /// fig4/fig5 (strong mismatch).
    #[arg(long)]
    pub preset: Option<String>,
    /// Override the source distribution.
    #[arg(long, value_enum)]
    pub dist: Option<DistArg>,
    /// Override every source power with this per-element SNR.
    #[arg(long, value_name = "DB")]
    pub snr_db: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EstimatorArgs {
    #[arg(long, value_enum, default_value = "mdl")]
    pub penalty: PenaltyArg,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_rel: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Candidate number of sources.
    #[arg(long)]
    pub q: usize,
    /// Fit a sample covariance of this many snapshots instead of the true
    /// covariance.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Read snapshots from a binary dump instead of simulating them.
    #[arg(long, value_name = "PATH")]
    pub snapshots: Option<PathBuf>,
    /// Write the simulated snapshots to a binary dump.
    #[arg(long, value_name = "PATH")]
    pub dump: Option<PathBuf>,
    /// Write the criterion tables as CSV.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepNArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Comma-separated snapshot counts (default: 10 log-spaced values from
    /// 100 to 20000).
    #[arg(long, value_name = "CSV")]
    pub n_list: Option<String>,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepRhoArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Comma-separated separations in degrees.
    #[arg(long, value_name = "CSV", default_value = "2,4,6,8,10,12,15")]
    pub rho_list: String,
    #[arg(long, default_value_t = 15_000)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

impl ScenarioArgs {
    pub fn load(&self) -> Result<ScenarioConfig, CliError> {
        let mut cfg = match (&self.scenario, &self.preset) {
            (Some(path), _) => load_scenario(path)?,
            (None, Some(name)) => ScenarioConfig::preset(name)?,
            (None, None) => return Err(CliError::Config("one of --scenario or --preset is required".into())),
        };
        if let Some(dist) = self.dist {
            cfg.distribution = match dist {
                DistArg::Gaussian => Distribution::Gaussian,
                DistArg::Laplacian => Distribution::Laplacian,
            };
        }
        if let Some(snr) = self.snr_db {
            cfg = cfg.with_snr_db(snr);
        }
        Ok(cfg.validate()?)
    }
}

impl EstimatorArgs {
    pub fn config(&self) -> Result<EstimatorConfig, CliError> {
        let penalty = match self.penalty {
            PenaltyArg::Mdl => Penalty::Mdl,
            PenaltyArg::Aic => Penalty::Aic,
        };
        Ok(EstimatorConfig { penalty, max_iter: self.max_iter, tol_rel: self.tol_rel, ..Default::default() }.validate()?)
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg = ScenarioConfig::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(cfg.validate()?)
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| CliError::Config(format!("invalid {what} '{s}'"))))
        .collect()
}

/// Formats `x` with four significant digits.
pub fn four_significant(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.3}");
    }
    let decimals = (3 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", path.display())))
}

pub fn cmd_eigvals(args: &ScenarioArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = args.load()?;
    let eig = eig_hermitian(&cfg.build_true_covariance()?)?;
    for l in eig.values {
        writeln!(out, "{}", four_significant(l))?;
    }
    Ok(())
}

pub fn cmd_fit(args: &FitArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = args.scenario.load()?;
    let est = args.estimator.config()?;
    let r_hat = match args.n {
        Some(n) => sample_covariance(&generate_snapshots(&cfg, n, RngStream::new(args.seed, 0))),
        None => cfg.build_true_covariance()?,
    };
    let fit = rmdl_fit(&r_hat, args.q, &est)?;
    writeln!(out, "q: {}", fit.q)?;
    writeln!(out, "sigma2: {}", fit.sigma2)?;
    writeln!(out, "w: [{}]", fit.w.iter().map(|w| format!("{w:.6}")).collect::<Vec<_>>().join(", "))?;
    writeln!(out, "ls_error: {:e}", fit.ls_error)?;
    writeln!(out, "iterations: {}", fit.iterations)?;
    writeln!(out, "converged: {}", fit.converged)?;
    let flags = identifiability_flag(&fit, DEFAULT_IDENTIFIABILITY_TOL);
    writeln!(out, "unidentifiable_sensors: {flags:?}")?;
    Ok(())
}

fn write_table_csv(out: &mut dyn Write, name: &str, table: &CriterionTable) -> io::Result<()> {
    for row in &table.rows {
        writeln!(out, "{name},{},{},{},{}", row.q, row.neg_log_likelihood, row.penalty, row.total)?;
    }
    Ok(())
}

pub fn cmd_estimate(args: &EstimateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let est = args.estimator.config()?;
    let (r_hat, n, q_true): (HermitianMatrix, usize, Option<usize>) = match &args.snapshots {
        Some(path) => {
            let file = File::open(path).map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
            let block = read_snapshots(io::BufReader::new(file)).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            (sample_covariance(&block), block.n_snapshots(), None)
        }
        None => {
            let cfg = args.scenario.load()?;
            let block = generate_snapshots(&cfg, args.n, RngStream::new(args.seed, 0));
            if let Some(path) = &args.dump {
                let mut w = create(path)?;
                write_snapshots(&block, &mut w)?;
            }
            (sample_covariance(&block), args.n, Some(cfg.num_sources()))
        }
    };
    let eig = eig_hermitian(&r_hat)?;
    let gmdl = gmdl_estimate_with_penalty(&eig.values, n, est.penalty)?;
    let rmdl = rmdl_estimate(&r_hat, n, &est)?;

    writeln!(out, "{:>3} {:>14} {:>12} {:>14}   {:>14} {:>12} {:>14} {:>6}", "q", "gmdl_nll", "gmdl_pen", "gmdl_total", "rmdl_nll", "rmdl_pen", "rmdl_total", "iters")?;
    for (g, (r, fit)) in gmdl.rows.iter().zip(rmdl.table.rows.iter().zip(&rmdl.fits)) {
        writeln!(
            out,
            "{:>3} {:>14.4} {:>12.4} {:>14.4}   {:>14.4} {:>12.4} {:>14.4} {:>6}",
            g.q, g.neg_log_likelihood, g.penalty, g.total, r.neg_log_likelihood, r.penalty, r.total, fit.iterations
        )?;
    }
    if let Some(q) = q_true {
        writeln!(out, "q_true: {q}")?;
    }
    writeln!(out, "q_hat_gmdl: {}", gmdl.q_hat)?;
    writeln!(out, "q_hat_rmdl: {}", rmdl.q_hat())?;
    let flagged = &rmdl.unidentifiable_sensors[rmdl.q_hat()];
    if !flagged.is_empty() {
        writeln!(out, "warning: selected RMDL fit is unidentifiable at sensors {flagged:?}")?;
    }

    if let Some(path) = &args.out {
        let mut w = create(path)?;
        writeln!(w, "estimator,q,neg_log_likelihood,penalty,total")?;
        write_table_csv(&mut w, "gmdl", &gmdl)?;
        write_table_csv(&mut w, "rmdl", &rmdl.table)?;
        w.flush()?;
    }
    Ok(())
}

fn emit_sweep(result: &SweepResult, axis_name: &str, out_path: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let summary = |w: &mut dyn Write| -> io::Result<()> {
        for pt in &result.points {
            writeln!(
                w,
                "{axis_name}={} pcd_gmdl={:.3}±{:.3} pcd_rmdl={:.3}±{:.3} trials={}",
                pt.axis_value, pt.pcd_gmdl, pt.pcd_gmdl_ci, pt.pcd_rmdl, pt.pcd_rmdl_ci, pt.trials
            )?;
        }
        Ok(())
    };
    match out_path {
        Some(path) => {
            let mut w = create(path)?;
            result.write_csv(&mut w)?;
            w.flush()?;
            summary(out)?;
        }
        None => {
            result.write_csv(&mut *out)?;
            summary(&mut io::stderr())?;
        }
    }
    Ok(())
}

pub fn cmd_sweep_n(args: &SweepNArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = args.scenario.load()?;
    let est = args.estimator.config()?;
    let n_list = match &args.n_list {
        Some(text) => parse_list::<usize>(text, "snapshot count")?,
        None => log_spaced(100, 20_000, 10),
    };
    if n_list.iter().any(|&n| n < 2) || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Config("--n-list must be ascending counts of at least 2".into()));
    }
    let result = sweep_snapshots(&cfg, &n_list, args.trials, &est, args.seed)?;
    emit_sweep(&result, "n", args.out.as_deref(), out)
}

pub fn cmd_sweep_rho(args: &SweepRhoArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = args.scenario.load()?;
    let est = args.estimator.config()?;
    let rho_list = parse_list::<f64>(&args.rho_list, "separation")?;
    if rho_list.iter().any(|&r| !(r > 0.0)) || rho_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Config("--rho-list must be positive and ascending".into()));
    }
    let max_doa = rho_list.last().unwrap() * (cfg.num_sources().saturating_sub(1)) as f64;
    if max_doa > 90.0 {
        return Err(CliError::Config(format!("largest DOA {max_doa} exceeds 90 degrees")));
    }
    if args.n < 2 {
        return Err(CliError::Config("--n must be at least 2".into()));
    }
    let result = sweep_separation(&cfg, &rho_list, args.n, args.trials, &est, args.seed)?;
    emit_sweep(&result, "rho", args.out.as_deref(), out)
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Eigvals(a) => cmd_eigvals(a, out),
        Command::Fit(a) => cmd_fit(a, out),
        Command::Estimate(a) => {
            if a.n < 2 {
                return Err(CliError::Config("--n must be at least 2".into()));
            }
            cmd_estimate(a, out)
        }
        Command::SweepN(a) => cmd_sweep_n(a, out),
        Command::SweepRho(a) => cmd_sweep_rho(a, out),
    }
}

/// Caps the rayon pool at `SOURCECOUNT_THREADS` workers when set.
pub fn configure_threads() -> Result<(), CliError> {
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let n: usize = value
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got '{value}'")))?;
        // a pool may already exist when embedded; keep it in that case
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = configure_threads().and_then(|_| run(&cli, &mut out)).and_then(|_| Ok(out.flush()?));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
