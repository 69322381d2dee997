//! Estimating the number of narrowband sources seen by a sensor array.
//!
//! Two estimators are provided:
//!
//! * GMDL, the closed-form MDL test on the multiplicity of the smallest
//!   sample-covariance eigenvalue. It assumes equal noise power at every
//!   sensor.
//! * RMDL, an MDL estimator whose noise model carries a per-sensor deviation
//!   vector `w`. Its parameters are fitted by an alternating least-squares
//!   iteration that needs one eigendecomposition per step instead of a
//!   multi-dimensional search.
//!
//! [`signal_gen`] and [`montecarlo`] simulate uniform linear array data and
//! measure the probability of correct decision of both estimators.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod estimators;
pub mod model;
pub mod montecarlo;
pub mod signal_gen;
pub mod spectra;

pub use estimators::{
    enforce_nested_monotonicity, gaussian_neg_log_likelihood, gmdl_criterion, gmdl_estimate,
    gmdl_estimate_with_penalty, identifiability_flag, rmdl_estimate, rmdl_fit, CriterionRow,
    CriterionTable, EstimatorError, RmdlEstimate, RmdlFit,
};
pub use model::{
    Distribution, EstimatorConfig, ModelError, NoiseProfile, Penalty, ScenarioConfig, SourceSpec,
};
pub use montecarlo::{run_trial, sweep_separation, sweep_snapshots, SweepAxis, SweepPoint, SweepResult, TrialOutcome};
pub use signal_gen::{generate_snapshots, steering_vector, RngStream, SnapshotBlock};
pub use spectra::{eig_hermitian, project_truncated_spectrum, sample_covariance, EigenSystem, HermitianMatrix, SpectraError};
