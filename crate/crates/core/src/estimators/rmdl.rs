//! Robust MDL: fits `L + σ²I + diag(w)` (rank `L ≤ q`, `Σw = 0`) to the
//! sample covariance by alternating least squares, then scores the fits
//! with the Gaussian likelihood.
//!
//! One iteration:
//!
//! 1. `E = R̂ - diag(w)`
//! 2. `(L, σ²)` = best rank-`q`-plus-white approximation of `E`
//! 3. `w = diag(R̂ - L - σ²I)`
//!
//! Step 2 is Frobenius-optimal over its parameter group and step 3 zeroes the
//! diagonal of the residual, so `‖R̂ - L - σ²I - diag(w)‖_F²` never increases.
//! Both steps keep the mean noise power at or above a small positive floor;
//! step 3 does so by raising σ², which leaves `Σw = 0` exact.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{enforce_nested_monotonicity, gaussian_neg_log_likelihood, CriterionTable, EstimatorError};
use super::identifiability::{identifiability_flag, DEFAULT_IDENTIFIABILITY_TOL};
use crate::model::EstimatorConfig;
use crate::spectra::{project_truncated_spectrum, HermitianMatrix};

/// Squared-error level (relative to `‖R̂‖_F²`) treated as an exact fit.
const EXACT_FIT_REL: f64 = 1e-28;

/// Free real parameters of the `q`-source model with per-sensor noise:
/// `q(2p - q) + p`.
pub fn rmdl_free_params(p: usize, q: usize) -> f64 {
    (q * (2 * p - q) + p) as f64
}

/// Least-squares fit of one candidate order.
#[derive(Debug, Clone, PartialEq)]
pub struct RmdlFit {
    pub q: usize,
    /// Fitted signal covariance `Â R̂_s Â^H`.
    pub lowrank: HermitianMatrix,
    pub sigma2: f64,
    pub w: Vec<f64>,
    /// `‖R̂ - R(θ̂)‖_F²` after the last iteration.
    pub ls_error: f64,
    /// `ls_error` after each iteration.
    pub error_trace: Vec<f64>,
    /// `Σ_i w_i` after each iteration.
    pub w_sum_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl RmdlFit {
    /// `lowrank + σ²I + diag(w)`.
    pub fn model_covariance(&self) -> HermitianMatrix {
        let noise: Vec<f64> = self.w.iter().map(|wi| self.sigma2 + wi).collect();
        self.lowrank.add_diagonal(&noise)
    }
}

fn squared_error(r_hat: &HermitianMatrix, model: &HermitianMatrix) -> f64 {
    (r_hat.as_matrix() - model.as_matrix()).norm_squared()
}

/// Runs the alternation for order `q`, starting from `w = 0`.
///
/// Stops when the relative decrease of the LS error drops below
/// `cfg.tol_rel` or the error reaches round-off level. Hitting `max_iter`
/// first returns the last iterate with `converged = false`.
pub fn rmdl_fit(r_hat: &HermitianMatrix, q: usize, cfg: &EstimatorConfig) -> Result<RmdlFit, EstimatorError> {
    let cfg = cfg.validate()?;
    let p = r_hat.dim();
    if q >= p {
        return Err(EstimatorError::OrderOutOfRange { q, p });
    }
    let trace = r_hat.trace();
    let floor = if trace > 0.0 { cfg.eig_floor * trace / p as f64 } else { cfg.eig_floor };
    let diag = r_hat.diagonal();
    let scale = r_hat.frobenius_norm().powi(2);

    let mut w = vec![0.0; p];
    let mut error_trace = Vec::new();
    let mut w_sum_trace = Vec::new();
    let mut lowrank = HermitianMatrix::zeros(p);
    let mut sigma2 = floor;
    let mut converged = false;

    for _ in 0..cfg.max_iter {
        let neg_w: Vec<f64> = w.iter().map(|v| -v).collect();
        let proj = project_truncated_spectrum(&r_hat.add_diagonal(&neg_w), q, floor)?;
        // Noise diagonal that zeroes the residual diagonal, shifted up if its
        // mean falls below the floor. Without the floor this is exactly
        // `w = diag(R̂ - L - σ²I)` with σ² from the projection.
        let residual: Vec<f64> = diag.iter().zip(proj.lowrank.diagonal()).map(|(r, l)| r - l).collect();
        let mean = residual.iter().sum::<f64>() / p as f64;
        w = residual.iter().map(|d| d - mean).collect();
        sigma2 = mean.max(floor);
        lowrank = proj.lowrank;

        let noise: Vec<f64> = w.iter().map(|wi| sigma2 + wi).collect();
        let err = squared_error(r_hat, &lowrank.add_diagonal(&noise));
        let previous = error_trace.last().copied();
        error_trace.push(err);
        w_sum_trace.push(w.iter().sum());

        if err <= EXACT_FIT_REL * scale {
            converged = true;
            break;
        }
        if let Some(prev) = previous {
            if prev - err <= cfg.tol_rel * prev {
                converged = true;
                break;
            }
        }
    }

    Ok(RmdlFit {
        q,
        lowrank,
        sigma2,
        w,
        ls_error: *error_trace.last().expect("max_iter >= 1"),
        iterations: error_trace.len(),
        error_trace,
        w_sum_trace,
        converged,
    })
}

/// Result of the RMDL estimator: the criterion table and one fit per order.
#[derive(Debug, Clone, PartialEq)]
pub struct RmdlEstimate {
    pub table: CriterionTable,
    pub fits: Vec<RmdlFit>,
    /// Likelihood terms before the nested-monotonicity correction.
    pub raw_neg_log_likelihoods: Vec<f64>,
    /// Per order, the sensors whose unit vector lies in the fitted signal
    /// subspace (unidentifiable points); reported, not acted on.
    pub unidentifiable_sensors: Vec<Vec<usize>>,
}

impl RmdlEstimate {
    pub fn q_hat(&self) -> usize {
        self.table.q_hat
    }

    pub fn total_iterations(&self) -> usize {
        self.fits.iter().map(|f| f.iterations).sum()
    }
}

pub fn rmdl_estimate(r_hat: &HermitianMatrix, n: usize, cfg: &EstimatorConfig) -> Result<RmdlEstimate, EstimatorError> {
    if n < 2 {
        return Err(EstimatorError::TooFewSnapshots(n));
    }
    let p = r_hat.dim();
    let fits = (0..p).map(|q| rmdl_fit(r_hat, q, cfg)).collect::<Result<Vec<_>, _>>()?;
    // A fit whose noise diagonal went non-positive has no Gaussian
    // likelihood; scoring it +inf lets the nested rule fall back on q-1.
    let raw = fits
        .iter()
        .map(|f| match gaussian_neg_log_likelihood(r_hat, &f.model_covariance(), n) {
            Err(EstimatorError::SingularModel) => Ok(f64::INFINITY),
            other => other,
        })
        .collect::<Result<Vec<_>, _>>()?;
    let nll = enforce_nested_monotonicity(&raw);
    let penalties: Vec<f64> = (0..p).map(|q| cfg.penalty.value(rmdl_free_params(p, q), n)).collect();
    let unidentifiable_sensors = fits.iter().map(|f| identifiability_flag(f, DEFAULT_IDENTIFIABILITY_TOL)).collect();
    Ok(RmdlEstimate {
        table: CriterionTable::from_terms(&nll, &penalties),
        fits,
        raw_neg_log_likelihoods: raw,
        unidentifiable_sensors,
    })
}

/// `Σ_i v_i v_i^H` of an orthonormal basis given as columns.
pub(crate) fn projector(basis: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    basis * basis.adjoint()
}
