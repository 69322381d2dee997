//! Information-theoretic estimators of the number of sources.
//!
//! Both estimators minimize `-L(θ̂_q) + penalty(q)` over `q = 0…p-1`; they
//! differ in the noise model and in how `θ̂_q` is obtained.

mod gmdl;
mod identifiability;
mod rmdl;

use nalgebra::Cholesky;
use thiserror::Error;

use crate::model::ModelError;
use crate::spectra::{HermitianMatrix, SpectraError};

pub use gmdl::{gmdl_criterion, gmdl_estimate, gmdl_estimate_with_penalty, gmdl_free_params};
pub use identifiability::{identifiability_flag, subspace_flags, DEFAULT_IDENTIFIABILITY_TOL};
pub use rmdl::{rmdl_estimate, rmdl_fit, rmdl_free_params, RmdlEstimate, RmdlFit};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("eigenvalue {index} is not positive ({value:e})")]
    NonPositiveEigenvalue { index: usize, value: f64 },
    #[error("need at least 2 snapshots, got {0}")]
    TooFewSnapshots(usize),
    #[error("candidate order q={q} must be below p={p}")]
    OrderOutOfRange { q: usize, p: usize },
    #[error("model covariance is singular or not positive definite")]
    SingularModel,
    #[error("a sweep needs at least one point and one trial")]
    EmptySweep,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Config(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionRow {
    pub q: usize,
    pub neg_log_likelihood: f64,
    pub penalty: f64,
    pub total: f64,
}

/// Criterion values for every candidate order and the selected one.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionTable {
    pub rows: Vec<CriterionRow>,
    pub q_hat: usize,
}

impl CriterionTable {
    /// Builds rows `q = 0…len-1` with `total = neg_log_likelihood + penalty`
    /// and picks the smallest `q` attaining the minimum total.
    pub fn from_terms(neg_log_likelihoods: &[f64], penalties: &[f64]) -> Self {
        assert_eq!(neg_log_likelihoods.len(), penalties.len());
        let rows: Vec<CriterionRow> = neg_log_likelihoods
            .iter()
            .zip(penalties)
            .enumerate()
            .map(|(q, (&nll, &pen))| CriterionRow { q, neg_log_likelihood: nll, penalty: pen, total: nll + pen })
            .collect();
        let mut q_hat = 0;
        for row in &rows {
            // strict comparison keeps the smallest q on ties; NaN never wins
            if row.total < rows[q_hat].total || rows[q_hat].total.is_nan() {
                q_hat = row.q;
            }
        }
        Self { rows, q_hat }
    }

    pub fn totals(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.total).collect()
    }
}

/// `N·(log det M + tr(M⁻¹ R̂))`, the negative Gaussian log-likelihood of `N`
/// snapshots with sample covariance `R̂` under model covariance `M`, up to
/// parameter-free constants.
pub fn gaussian_neg_log_likelihood(r_hat: &HermitianMatrix, model: &HermitianMatrix, n: usize) -> Result<f64, EstimatorError> {
    if r_hat.dim() != model.dim() {
        return Err(EstimatorError::DimensionMismatch(r_hat.dim(), model.dim()));
    }
    let chol = Cholesky::new(model.as_matrix().clone()).ok_or(EstimatorError::SingularModel)?;
    let l = chol.l_dirty();
    let log_det = 2.0 * (0..model.dim()).map(|i| l[(i, i)].re.ln()).sum::<f64>();
    let solved = chol.solve(r_hat.as_matrix());
    let trace = (0..model.dim()).map(|i| solved[(i, i)].re).sum::<f64>();
    let value = n as f64 * (log_det + trace);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(EstimatorError::SingularModel)
    }
}

/// Running minimum over `q`: a `(q+1)`-order fit may always fall back on the
/// `q`-order one, so the negative log-likelihood must not increase with `q`.
pub fn enforce_nested_monotonicity(neg_log_likelihoods: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(neg_log_likelihoods.len());
    for &v in neg_log_likelihoods {
        let next = match out.last() {
            Some(&prev) if prev < v => prev,
            _ => v,
        };
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotonicity_examples() {
        assert_eq!(enforce_nested_monotonicity(&[10.0, 8.0, 9.0]), vec![10.0, 8.0, 8.0]);
        assert_eq!(enforce_nested_monotonicity(&[10.0, 8.0, 7.0]), vec![10.0, 8.0, 7.0]);
        assert_eq!(enforce_nested_monotonicity(&[4.0, 4.0, 4.0]), vec![4.0, 4.0, 4.0]);
        assert!(enforce_nested_monotonicity(&[]).is_empty());
    }

    #[test]
    fn table_tie_breaks_toward_small_q() {
        let t = CriterionTable::from_terms(&[3.0, 2.0, 1.0], &[0.0, 1.0, 2.0]);
        assert_eq!(t.q_hat, 0);
        assert_eq!(t.totals(), vec![3.0, 3.0, 3.0]);
        let t = CriterionTable::from_terms(&[3.0, 1.0, 1.5], &[0.0, 0.5, 0.5]);
        assert_eq!(t.q_hat, 1);
    }

    #[test]
    fn likelihood_at_sample_covariance() {
        let r = HermitianMatrix::from_real_diagonal(&[2.0, 3.0]);
        let v = gaussian_neg_log_likelihood(&r, &r, 10).unwrap();
        assert!((v - 10.0 * (6f64.ln() + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn likelihood_with_identity_model() {
        let r = HermitianMatrix::from_real_diagonal(&[2.0, 3.0, 0.5]);
        let id = HermitianMatrix::from_real_diagonal(&[1.0; 3]);
        let v = gaussian_neg_log_likelihood(&r, &id, 7).unwrap();
        assert!((v - 7.0 * 5.5).abs() < 1e-12);
    }

    #[test]
    fn likelihood_grid_minimizer_is_sample_covariance() {
        // brute-force grid over diagonal models diag(a, b)
        let r = HermitianMatrix::from_real_diagonal(&[2.0, 1.0]);
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 1..=400 {
            for j in 1..=400 {
                let (a, b) = (i as f64 * 0.01, j as f64 * 0.01);
                let m = HermitianMatrix::from_real_diagonal(&[a, b]);
                let v = gaussian_neg_log_likelihood(&r, &m, 100).unwrap();
                if v < best.0 {
                    best = (v, a, b);
                }
            }
        }
        assert!((best.1 - 2.0).abs() < 1e-9 && (best.2 - 1.0).abs() < 1e-9, "{best:?}");
    }

    #[test]
    fn singular_model_is_an_error() {
        let r = HermitianMatrix::from_real_diagonal(&[1.0, 1.0]);
        let m = HermitianMatrix::from_real_diagonal(&[1.0, 0.0]);
        assert_eq!(gaussian_neg_log_likelihood(&r, &m, 5), Err(EstimatorError::SingularModel));
        let m = HermitianMatrix::from_real_diagonal(&[1.0, 1.0, 1.0]);
        assert!(matches!(gaussian_neg_log_likelihood(&r, &m, 5), Err(EstimatorError::DimensionMismatch(2, 3))));
    }
}
