use super::{CriterionTable, EstimatorError};
use crate::model::Penalty;

/// Free real parameters of the `q`-source white-noise model:
/// `q(2p - q) + 1`.
pub fn gmdl_free_params(p: usize, q: usize) -> f64 {
    (q * (2 * p - q) + 1) as f64
}

fn check_inputs(eigs: &[f64], n: usize) -> Result<(), EstimatorError> {
    if n < 2 {
        return Err(EstimatorError::TooFewSnapshots(n));
    }
    if let Some((index, &value)) = eigs.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v.is_finite())) {
        return Err(EstimatorError::NonPositiveEigenvalue { index, value });
    }
    Ok(())
}

/// `-N·[Σ_{i>q} log l_i - (p-q)·log(mean_{i>q} l_i)]`: `N` times the
/// log-ratio of arithmetic to geometric mean of the trailing eigenvalues.
fn likelihood_term(eigs: &[f64], n: usize, q: usize) -> f64 {
    let tail = &eigs[q..];
    let m = tail.len() as f64;
    let sum_log: f64 = tail.iter().map(|l| l.ln()).sum();
    let log_mean = (tail.iter().sum::<f64>() / m).ln();
    -(n as f64) * (sum_log - m * log_mean)
}

/// MDL criterion value of order `q` for descending eigenvalues `eigs`.
pub fn gmdl_criterion(eigs: &[f64], n: usize, q: usize) -> Result<f64, EstimatorError> {
    check_inputs(eigs, n)?;
    let p = eigs.len();
    if q >= p {
        return Err(EstimatorError::OrderOutOfRange { q, p });
    }
    Ok(likelihood_term(eigs, n, q) + Penalty::Mdl.value(gmdl_free_params(p, q), n))
}

pub fn gmdl_estimate(eigs: &[f64], n: usize) -> Result<CriterionTable, EstimatorError> {
    gmdl_estimate_with_penalty(eigs, n, Penalty::Mdl)
}

pub fn gmdl_estimate_with_penalty(eigs: &[f64], n: usize, penalty: Penalty) -> Result<CriterionTable, EstimatorError> {
    check_inputs(eigs, n)?;
    let p = eigs.len();
    let nll: Vec<f64> = (0..p).map(|q| likelihood_term(eigs, n, q)).collect();
    let pen: Vec<f64> = (0..p).map(|q| penalty.value(gmdl_free_params(p, q), n)).collect();
    Ok(CriterionTable::from_terms(&nll, &pen))
}
