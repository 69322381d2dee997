//! Scenario, noise-profile and estimator configuration types, plus the
//! ground-truth covariance `A R_s A^H + σ²I + diag(w)` of a scenario.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal_gen::steering_matrix;
use crate::spectra::HermitianMatrix;

/// Relative tolerance on `Σ w_i = 0`.
const W_SUM_REL_TOL: f64 = 1e-12;

/// DOAs of the three-source scenarios used throughout the bundled presets.
pub const PRESET_DOAS_DEG: [f64; 3] = [0.0, 5.7, 11.4];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("array needs at least 2 sensors, got p={0}")]
    TooFewSensors(usize),
    #[error("number of sources ({q}) must be smaller than the number of sensors ({p})")]
    TooManySources { q: usize, p: usize },
    #[error("source {index}: power must be positive and finite, got {power}")]
    NonPositivePower { index: usize, power: f64 },
    #[error("source {index}: DOA must lie in [-90, 90] degrees, got {doa_deg}")]
    DoaOutOfRange { index: usize, doa_deg: f64 },
    #[error("sources {first} and {second} share the same DOA ({doa_deg} degrees)")]
    DuplicateDoa { first: usize, second: usize, doa_deg: f64 },
    #[error("nominal noise power sigma2 must be positive and finite, got {0}")]
    NonPositiveSigma2(f64),
    #[error("w has length {got}, expected p={expected}")]
    WrongWLength { got: usize, expected: usize },
    #[error("w must sum to zero (sum = {0:e})")]
    NonZeroWSum(f64),
    #[error("sensor {index}: noise power sigma2 + w = {power} is not positive")]
    NonPositiveSensorNoise { index: usize, power: f64 },
    #[error("estimator config: {0}")]
    InvalidEstimator(&'static str),
    #[error("unknown preset '{0}' (expected fig1..fig5)")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    #[default]
    Gaussian,
    Laplacian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    /// Direction of arrival in degrees, broadside = 0.
    pub doa_deg: f64,
    /// Linear power relative to unit nominal noise.
    pub power: f64,
}

/// Per-sensor noise powers `σ² + w_i`, split into the nominal level and a
/// zero-sum deviation vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    pub sigma2: f64,
    pub w: Vec<f64>,
}

impl NoiseProfile {
    pub fn homogeneous(p: usize, sigma2: f64) -> Self {
        Self { sigma2, w: vec![0.0; p] }
    }

    /// Linearly ramped mismatch `w = scale·σ²·[-(p-1)/p, -(p-3)/p, …, (p-1)/p]`.
    ///
    /// For `p = 10` this is `scale·σ²·[-9/10, -7/10, …, 9/10]`; `scale = 1/10`
    /// gives the weak-mismatch profile and `scale = 1/2` the strong one.
    pub fn linear_ramp(p: usize, sigma2: f64, scale: f64) -> Self {
        let w = (0..p)
            .map(|i| scale * sigma2 * (2.0 * i as f64 + 1.0 - p as f64) / p as f64)
            .collect();
        Self { sigma2, w }
    }

    /// Noise power at each sensor.
    pub fn sensor_powers(&self) -> Vec<f64> {
        self.w.iter().map(|wi| self.sigma2 + wi).collect()
    }

    pub fn validate(&self, p: usize) -> Result<(), ModelError> {
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(ModelError::NonPositiveSigma2(self.sigma2));
        }
        if self.w.len() != p {
            return Err(ModelError::WrongWLength { got: self.w.len(), expected: p });
        }
        let sum: f64 = self.w.iter().sum();
        let scale = self.w.iter().map(|w| w.abs()).sum::<f64>() + p as f64 * self.sigma2;
        if !sum.is_finite() || sum.abs() > W_SUM_REL_TOL * scale {
            return Err(ModelError::NonZeroWSum(sum));
        }
        for (index, power) in self.sensor_powers().into_iter().enumerate() {
            if !(power > 0.0) {
                return Err(ModelError::NonPositiveSensorNoise { index, power });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub p: usize,
    pub sources: Vec<SourceSpec>,
    pub noise: NoiseProfile,
    #[serde(default)]
    pub distribution: Distribution,
}

impl ScenarioConfig {
    pub fn num_sources(&self) -> usize {
        self.sources.len()
    }

    /// Checks every invariant and returns the config unchanged, or the first
    /// violation found.
    pub fn validate(self) -> Result<Self, ModelError> {
        self.check()?;
        Ok(self)
    }

    pub fn check(&self) -> Result<(), ModelError> {
        let p = self.p;
        if p < 2 {
            return Err(ModelError::TooFewSensors(p));
        }
        let q = self.sources.len();
        if q >= p {
            return Err(ModelError::TooManySources { q, p });
        }
        for (index, s) in self.sources.iter().enumerate() {
            if !(s.power > 0.0 && s.power.is_finite()) {
                return Err(ModelError::NonPositivePower { index, power: s.power });
            }
            if !(-90.0..=90.0).contains(&s.doa_deg) {
                return Err(ModelError::DoaOutOfRange { index, doa_deg: s.doa_deg });
            }
            if let Some(first) = self.sources[..index].iter().position(|o| o.doa_deg == s.doa_deg) {
                return Err(ModelError::DuplicateDoa { first, second: index, doa_deg: s.doa_deg });
            }
        }
        self.noise.validate(p)
    }

    /// `R_x = A diag(powers) A^H + σ²I + diag(w)` with mutually independent
    /// sources.
    pub fn build_true_covariance(&self) -> Result<HermitianMatrix, ModelError> {
        self.check()?;
        let p = self.p;
        let a = steering_matrix(&self.sources, p);
        let powers = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.sources.len(),
            self.sources.iter().map(|s| Complex64::new(s.power, 0.0)),
        ));
        let mut r = &a * powers * a.adjoint();
        for (i, noise) in self.noise.sensor_powers().into_iter().enumerate() {
            r[(i, i)] += noise;
        }
        Ok(HermitianMatrix::from_matrix_symmetrized(r))
    }

    /// Sets all source powers to `σ²·10^(snr_db/10)` (SNR per element).
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        let power = self.noise.sigma2 * 10f64.powf(snr_db / 10.0);
        for s in &mut self.sources {
            s.power = power;
        }
        self
    }

    /// Places the sources at `[0, ρ, 2ρ, …]` keeping their powers.
    pub fn with_separation(mut self, rho_deg: f64) -> Self {
        for (k, s) in self.sources.iter_mut().enumerate() {
            s.doa_deg = k as f64 * rho_deg;
        }
        self
    }

    pub fn with_distribution(mut self, distribution: Distribution) -> Self {
        self.distribution = distribution;
        self
    }

    /// Bundled simulation scenarios: a 10-element ULA with three equal-power
    /// 0 dB sources at 0°, 5.7° and 11.4°.
    ///
    /// * `fig1`: spatially white noise.
    /// * `fig2`, `fig3`: weak mismatch, `w = (σ²/10)[-9/10, …, 9/10]`.
    /// * `fig4`, `fig5`: strong mismatch, `w = (σ²/2)[-9/10, …, 9/10]`.
    ///
    /// `fig3`/`fig5` are the templates of the separation sweeps; they only
    /// differ from `fig2`/`fig4` in how the harness moves the DOAs.
    pub fn preset(name: &str) -> Result<Self, ModelError> {
        const P: usize = 10;
        let noise = match name {
            "fig1" => NoiseProfile::homogeneous(P, 1.0),
            "fig2" | "fig3" => NoiseProfile::linear_ramp(P, 1.0, 0.1),
            "fig4" | "fig5" => NoiseProfile::linear_ramp(P, 1.0, 0.5),
            other => return Err(ModelError::UnknownPreset(other.to_string())),
        };
        let sources = PRESET_DOAS_DEG
            .iter()
            .map(|&doa_deg| SourceSpec { doa_deg, power: 1.0 })
            .collect();
        Ok(Self { p: P, sources, noise, distribution: Distribution::Gaussian })
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario fields are plain data")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    #[default]
    Mdl,
    Aic,
}

impl Penalty {
    /// Penalty for a model with `free_params` real parameters fitted on `n`
    /// snapshots.
    pub fn value(self, free_params: f64, n: usize) -> f64 {
        match self {
            Penalty::Mdl => 0.5 * free_params * (n as f64).ln(),
            Penalty::Aic => free_params,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub penalty: Penalty,
    pub max_iter: usize,
    /// Stop once the relative decrease of the LS error drops below this.
    pub tol_rel: f64,
    /// Noise-power floor, relative to `trace(R̂)/p`.
    pub eig_floor: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self { penalty: Penalty::Mdl, max_iter: 200, tol_rel: 1e-10, eig_floor: 1e-12 }
    }
}

impl EstimatorConfig {
    pub fn validate(self) -> Result<Self, ModelError> {
        if self.max_iter < 1 {
            return Err(ModelError::InvalidEstimator("max_iter must be at least 1"));
        }
        if !(self.tol_rel > 0.0) {
            return Err(ModelError::InvalidEstimator("tol_rel must be positive"));
        }
        if !(self.eig_floor > 0.0) {
            return Err(ModelError::InvalidEstimator("eig_floor must be positive"));
        }
        Ok(self)
    }
}
