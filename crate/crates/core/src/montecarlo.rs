//! Seeded Monte Carlo trials and probability-of-correct-decision sweeps.
//!
//! Trial `t` of sweep point `k` always draws from
//! `RngStream::for_trial(seed, k, t)`, and trials are collected in index
//! order, so results do not depend on how rayon schedules the work.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::estimators::{gmdl_estimate_with_penalty, rmdl_estimate, EstimatorError};
use crate::model::{EstimatorConfig, ScenarioConfig};
use crate::signal_gen::{generate_snapshots, RngStream};
use crate::spectra::{eig_hermitian, sample_covariance};

/// z-value of a two-sided 95% normal interval.
const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub trial_id: u64,
    pub n: usize,
    pub q_true: usize,
    pub q_gmdl: usize,
    pub q_rmdl: usize,
    pub rmdl_iterations_total: usize,
}

/// One draw of `N` snapshots scored by both estimators.
pub fn run_trial(cfg: &ScenarioConfig, n: usize, est: &EstimatorConfig, stream: RngStream) -> Result<TrialOutcome, EstimatorError> {
    cfg.check()?;
    let block = generate_snapshots(cfg, n, stream);
    let r_hat = sample_covariance(&block);
    let eig = eig_hermitian(&r_hat)?;
    let gmdl = gmdl_estimate_with_penalty(&eig.values, n, est.penalty)?;
    let rmdl = rmdl_estimate(&r_hat, n, est)?;
    Ok(TrialOutcome {
        trial_id: stream.stream_id,
        n,
        q_true: cfg.num_sources(),
        q_gmdl: gmdl.q_hat,
        q_rmdl: rmdl.q_hat(),
        rmdl_iterations_total: rmdl.total_iterations(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Snapshots,
    Separation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub pcd_gmdl: f64,
    pub pcd_gmdl_ci: f64,
    pub pcd_rmdl: f64,
    pub pcd_rmdl_ci: f64,
    pub trials: usize,
}

impl SweepPoint {
    fn from_outcomes(axis_value: f64, outcomes: &[TrialOutcome]) -> Self {
        let trials = outcomes.len();
        let gmdl = outcomes.iter().filter(|o| o.q_gmdl == o.q_true).count();
        let rmdl = outcomes.iter().filter(|o| o.q_rmdl == o.q_true).count();
        let (pcd_gmdl, pcd_rmdl) = (gmdl as f64 / trials as f64, rmdl as f64 / trials as f64);
        Self {
            axis_value,
            pcd_gmdl,
            pcd_gmdl_ci: binomial_half_width(pcd_gmdl, trials),
            pcd_rmdl,
            pcd_rmdl_ci: binomial_half_width(pcd_rmdl, trials),
            trials,
        }
    }
}

/// Half-width of the 95% normal-approximation interval of a proportion.
pub fn binomial_half_width(pcd: f64, trials: usize) -> f64 {
    Z_95 * (pcd * (1.0 - pcd) / trials as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

pub const CSV_HEADER: &str = "axis_value,pcd_gmdl,pcd_gmdl_ci,pcd_rmdl,pcd_rmdl_ci,trials";

impl SweepResult {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for pt in &self.points {
            writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{:.6},{}",
                pt.axis_value, pt.pcd_gmdl, pt.pcd_gmdl_ci, pt.pcd_rmdl, pt.pcd_rmdl_ci, pt.trials
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    pub fn pcd_gmdl(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.pcd_gmdl).collect()
    }

    pub fn pcd_rmdl(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.pcd_rmdl).collect()
    }

    pub fn point_at(&self, axis_value: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.axis_value == axis_value)
    }
}

/// 3-point running median; the end points are kept as they are.
pub fn median3(values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    for i in 1..values.len().saturating_sub(1) {
        let mut w = [values[i - 1], values[i], values[i + 1]];
        w.sort_by(f64::total_cmp);
        out[i] = w[1];
    }
    out
}

fn run_point(cfg: &ScenarioConfig, n: usize, trials: usize, est: &EstimatorConfig, seed: u64, point: u32) -> Result<Vec<TrialOutcome>, EstimatorError> {
    (0..trials as u32)
        .into_par_iter()
        .map(|t| run_trial(cfg, n, est, RngStream::for_trial(seed, point, t)))
        .collect()
}

fn check_sweep(trials: usize, len: usize) -> Result<(), EstimatorError> {
    if trials == 0 || len == 0 {
        return Err(EstimatorError::EmptySweep);
    }
    Ok(())
}

/// PCD of both estimators at each snapshot count in `n_list`.
pub fn sweep_snapshots(cfg: &ScenarioConfig, n_list: &[usize], trials: usize, est: &EstimatorConfig, seed: u64) -> Result<SweepResult, EstimatorError> {
    check_sweep(trials, n_list.len())?;
    let mut points = Vec::with_capacity(n_list.len());
    for (k, &n) in n_list.iter().enumerate() {
        let outcomes = run_point(cfg, n, trials, est, seed, k as u32)?;
        points.push(SweepPoint::from_outcomes(n as f64, &outcomes));
    }
    Ok(SweepResult { axis: SweepAxis::Snapshots, points })
}

/// PCD of both estimators with the sources of `template` placed at
/// `[0, ρ, 2ρ, …]` for each `ρ` in `rho_list_deg`.
pub fn sweep_separation(template: &ScenarioConfig, rho_list_deg: &[f64], n: usize, trials: usize, est: &EstimatorConfig, seed: u64) -> Result<SweepResult, EstimatorError> {
    check_sweep(trials, rho_list_deg.len())?;
    let mut points = Vec::with_capacity(rho_list_deg.len());
    for (k, &rho) in rho_list_deg.iter().enumerate() {
        let cfg = template.clone().with_separation(rho);
        let outcomes = run_point(&cfg, n, trials, est, seed, k as u32)?;
        points.push(SweepPoint::from_outcomes(rho, &outcomes));
    }
    Ok(SweepResult { axis: SweepAxis::Separation, points })
}

/// `n_points` log-spaced integers from `lo` to `hi` inclusive.
pub fn log_spaced(lo: usize, hi: usize, n_points: usize) -> Vec<usize> {
    if n_points < 2 {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> = (0..n_points)
        .map(|i| (a + (b - a) * i as f64 / (n_points - 1) as f64).exp().round() as usize)
        .collect();
    out.dedup();
    out
}
