//! Python bindings for the `sourcecount` estimators.
//!
//! Matrices cross the boundary as lists of rows of Python `complex`; vectors
//! as lists of `float`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sourcecount::estimators::CriterionTable;
use sourcecount::{
    Distribution, EstimatorConfig, EstimatorError, HermitianMatrix, ModelError, Penalty, RngStream, ScenarioConfig,
    SpectraError,
};

type Rows = Vec<Vec<Complex64>>;

fn config_err(e: ModelError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn spectra_err(e: SpectraError) -> PyErr {
    match e {
        SpectraError::NoConvergence(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn estimator_err(e: EstimatorError) -> PyErr {
    match e {
        EstimatorError::Spectra(s) => spectra_err(s),
        EstimatorError::Config(_)
        | EstimatorError::TooFewSnapshots(_)
        | EstimatorError::OrderOutOfRange { .. }
        | EstimatorError::EmptySweep
        | EstimatorError::DimensionMismatch(..)
        | EstimatorError::NonPositiveEigenvalue { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn hermitian(rows: Rows) -> PyResult<HermitianMatrix> {
    let p = rows.len();
    if rows.iter().any(|r| r.len() != p) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    let m = DMatrix::from_fn(p, p, |i, j| rows[i][j]);
    HermitianMatrix::new(m).map_err(spectra_err)
}

fn to_rows(m: &DMatrix<Complex64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn parse_penalty(name: &str) -> PyResult<Penalty> {
    match name {
        "mdl" => Ok(Penalty::Mdl),
        "aic" => Ok(Penalty::Aic),
        other => Err(PyValueError::new_err(format!("unknown penalty '{other}' (expected 'mdl' or 'aic')"))),
    }
}

fn parse_distribution(name: &str) -> PyResult<Distribution> {
    match name {
        "gaussian" => Ok(Distribution::Gaussian),
        "laplacian" => Ok(Distribution::Laplacian),
        other => Err(PyValueError::new_err(format!("unknown distribution '{other}' (expected 'gaussian' or 'laplacian')"))),
    }
}

fn estimator_config(penalty: &str, max_iter: usize, tol_rel: f64) -> PyResult<EstimatorConfig> {
    EstimatorConfig { penalty: parse_penalty(penalty)?, max_iter, tol_rel, ..Default::default() }
        .validate()
        .map_err(config_err)
}

/// Array scenario: sources on a half-wavelength ULA plus per-sensor noise.
#[pyclass(name = "Scenario", module = "sourcecount_py", frozen)]
struct PyScenario {
    inner: ScenarioConfig,
}

#[pymethods]
impl PyScenario {
    /// `doas_deg` and `powers` give one entry per source; `w` defaults to
    /// zero (white noise) and must sum to zero.
    #[new]
    #[pyo3(signature = (p, doas_deg, powers, sigma2=1.0, w=None, distribution="gaussian"))]
    fn new(p: usize, doas_deg: Vec<f64>, powers: Vec<f64>, sigma2: f64, w: Option<Vec<f64>>, distribution: &str) -> PyResult<Self> {
        if doas_deg.len() != powers.len() {
            return Err(PyValueError::new_err("doas_deg and powers must have the same length"));
        }
        let sources = doas_deg
            .into_iter()
            .zip(powers)
            .map(|(doa_deg, power)| sourcecount::SourceSpec { doa_deg, power })
            .collect();
        let noise = sourcecount::NoiseProfile { sigma2, w: w.unwrap_or_else(|| vec![0.0; p]) };
        let inner = ScenarioConfig { p, sources, noise, distribution: parse_distribution(distribution)? }
            .validate()
            .map_err(config_err)?;
        Ok(Self { inner })
    }

    /// One of the built-in scenarios `fig1` … `fig5`.
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        ScenarioConfig::preset(name).map(|inner| Self { inner }).map_err(config_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let cfg = ScenarioConfig::from_json(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        cfg.validate().map(|inner| Self { inner }).map_err(config_err)
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p
    }

    #[getter]
    fn num_sources(&self) -> usize {
        self.inner.num_sources()
    }

    #[getter]
    fn doas_deg(&self) -> Vec<f64> {
        self.inner.sources.iter().map(|s| s.doa_deg).collect()
    }

    #[getter]
    fn sigma2(&self) -> f64 {
        self.inner.noise.sigma2
    }

    #[getter]
    fn w(&self) -> Vec<f64> {
        self.inner.noise.w.clone()
    }

    fn with_snr_db(&self, snr_db: f64) -> PyResult<Self> {
        self.inner.clone().with_snr_db(snr_db).validate().map(|inner| Self { inner }).map_err(config_err)
    }

    fn with_separation(&self, rho_deg: f64) -> PyResult<Self> {
        self.inner.clone().with_separation(rho_deg).validate().map(|inner| Self { inner }).map_err(config_err)
    }

    fn with_distribution(&self, distribution: &str) -> PyResult<Self> {
        Ok(Self { inner: self.inner.clone().with_distribution(parse_distribution(distribution)?) })
    }

    /// `A diag(powers) A^H + σ²I + diag(w)`.
    fn true_covariance(&self) -> PyResult<Rows> {
        let r = self.inner.build_true_covariance().map_err(config_err)?;
        Ok(to_rows(r.as_matrix()))
    }

    /// Sample covariance of `n` simulated snapshots drawn from stream
    /// `(seed, stream_id)`.
    #[pyo3(signature = (n, seed, stream_id=0))]
    fn sample_covariance(&self, n: usize, seed: u64, stream_id: u64) -> PyResult<Rows> {
        if n == 0 {
            return Err(PyValueError::new_err("n must be positive"));
        }
        let block = sourcecount::generate_snapshots(&self.inner, n, RngStream::new(seed, stream_id));
        Ok(to_rows(sourcecount::sample_covariance(&block).as_matrix()))
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn __repr__(&self) -> String {
        format!("Scenario(p={}, num_sources={}, doas_deg={:?})", self.inner.p, self.inner.num_sources(), self.doas_deg())
    }
}

/// Criterion values per candidate order and the selected order.
#[pyclass(name = "CriterionTable", module = "sourcecount_py", frozen, get_all)]
struct PyCriterionTable {
    q_hat: usize,
    neg_log_likelihood: Vec<f64>,
    penalty: Vec<f64>,
    total: Vec<f64>,
}

impl From<&CriterionTable> for PyCriterionTable {
    fn from(t: &CriterionTable) -> Self {
        Self {
            q_hat: t.q_hat,
            neg_log_likelihood: t.rows.iter().map(|r| r.neg_log_likelihood).collect(),
            penalty: t.rows.iter().map(|r| r.penalty).collect(),
            total: t.totals(),
        }
    }
}

#[pymethods]
impl PyCriterionTable {
    fn __repr__(&self) -> String {
        format!("CriterionTable(q_hat={}, total={:?})", self.q_hat, self.total)
    }
}

/// Least-squares fit of one candidate order.
#[pyclass(name = "RmdlFit", module = "sourcecount_py", frozen, get_all)]
struct PyRmdlFit {
    q: usize,
    lowrank: Rows,
    sigma2: f64,
    w: Vec<f64>,
    ls_error: f64,
    error_trace: Vec<f64>,
    w_sum_trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    model_covariance: Rows,
}

impl From<&sourcecount::RmdlFit> for PyRmdlFit {
    fn from(f: &sourcecount::RmdlFit) -> Self {
        Self {
            q: f.q,
            lowrank: to_rows(f.lowrank.as_matrix()),
            sigma2: f.sigma2,
            w: f.w.clone(),
            ls_error: f.ls_error,
            error_trace: f.error_trace.clone(),
            w_sum_trace: f.w_sum_trace.clone(),
            iterations: f.iterations,
            converged: f.converged,
            model_covariance: to_rows(f.model_covariance().as_matrix()),
        }
    }
}

#[pymethods]
impl PyRmdlFit {
    fn __repr__(&self) -> String {
        format!("RmdlFit(q={}, sigma2={}, ls_error={:e}, iterations={})", self.q, self.sigma2, self.ls_error, self.iterations)
    }
}

/// RMDL result: criterion table, one fit per order and the sensors flagged
/// as unidentifiable for each order.
#[pyclass(name = "RmdlEstimate", module = "sourcecount_py", frozen, get_all)]
struct PyRmdlEstimate {
    q_hat: usize,
    table: Py<PyCriterionTable>,
    fits: Vec<Py<PyRmdlFit>>,
    raw_neg_log_likelihood: Vec<f64>,
    unidentifiable_sensors: Vec<Vec<usize>>,
}

#[pymethods]
impl PyRmdlEstimate {
    fn __repr__(&self) -> String {
        format!("RmdlEstimate(q_hat={})", self.q_hat)
    }
}

/// Eigenvalues of a Hermitian matrix in descending order.
#[pyfunction]
fn eigvals(matrix: Rows) -> PyResult<Vec<f64>> {
    let m = hermitian(matrix)?;
    sourcecount::eig_hermitian(&m).map(|e| e.values).map_err(spectra_err)
}

/// GMDL on sample-covariance eigenvalues from `n` snapshots.
#[pyfunction]
#[pyo3(signature = (eigenvalues, n, penalty="mdl"))]
fn gmdl_estimate(eigenvalues: Vec<f64>, n: usize, penalty: &str) -> PyResult<PyCriterionTable> {
    let t = sourcecount::gmdl_estimate_with_penalty(&eigenvalues, n, parse_penalty(penalty)?).map_err(estimator_err)?;
    Ok((&t).into())
}

/// Alternating least-squares fit of the order-`q` robust model.
#[pyfunction]
#[pyo3(signature = (matrix, q, max_iter=200, tol_rel=1e-10))]
fn rmdl_fit(matrix: Rows, q: usize, max_iter: usize, tol_rel: f64) -> PyResult<PyRmdlFit> {
    let r = hermitian(matrix)?;
    let cfg = estimator_config("mdl", max_iter, tol_rel)?;
    let fit = sourcecount::rmdl_fit(&r, q, &cfg).map_err(estimator_err)?;
    Ok((&fit).into())
}

/// RMDL on a sample covariance from `n` snapshots.
#[pyfunction]
#[pyo3(signature = (matrix, n, penalty="mdl", max_iter=200, tol_rel=1e-10))]
fn rmdl_estimate(py: Python<'_>, matrix: Rows, n: usize, penalty: &str, max_iter: usize, tol_rel: f64) -> PyResult<PyRmdlEstimate> {
    let r = hermitian(matrix)?;
    let cfg = estimator_config(penalty, max_iter, tol_rel)?;
    let est = py.detach(|| sourcecount::rmdl_estimate(&r, n, &cfg)).map_err(estimator_err)?;
    Ok(PyRmdlEstimate {
        q_hat: est.q_hat(),
        table: Py::new(py, PyCriterionTable::from(&est.table))?,
        fits: est.fits.iter().map(|f| Py::new(py, PyRmdlFit::from(f))).collect::<PyResult<_>>()?,
        raw_neg_log_likelihood: est.raw_neg_log_likelihoods.clone(),
        unidentifiable_sensors: est.unidentifiable_sensors.clone(),
    })
}

/// One seeded trial; returns a dict with `q_true`, `q_gmdl`, `q_rmdl` and
/// `rmdl_iterations_total`.
#[pyfunction]
#[pyo3(signature = (scenario, n, seed, point=0, trial=0, penalty="mdl"))]
fn run_trial<'py>(
    py: Python<'py>,
    scenario: PyRef<'py, PyScenario>,
    n: usize,
    seed: u64,
    point: u32,
    trial: u32,
    penalty: &str,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let cfg = scenario.inner.clone();
    let est = estimator_config(penalty, 200, 1e-10)?;
    let out = py
        .detach(|| sourcecount::run_trial(&cfg, n, &est, RngStream::for_trial(seed, point, trial)))
        .map_err(estimator_err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("n", out.n)?;
    d.set_item("q_true", out.q_true)?;
    d.set_item("q_gmdl", out.q_gmdl)?;
    d.set_item("q_rmdl", out.q_rmdl)?;
    d.set_item("rmdl_iterations_total", out.rmdl_iterations_total)?;
    Ok(d)
}

/// Sweep result; `points` holds `(axis_value, pcd_gmdl, pcd_gmdl_ci,
/// pcd_rmdl, pcd_rmdl_ci, trials)` tuples.
#[pyclass(name = "SweepResult", module = "sourcecount_py", frozen)]
struct PySweepResult {
    inner: sourcecount::SweepResult,
}

#[pymethods]
impl PySweepResult {
    #[getter]
    fn points(&self) -> Vec<(f64, f64, f64, f64, f64, usize)> {
        self.inner
            .points
            .iter()
            .map(|p| (p.axis_value, p.pcd_gmdl, p.pcd_gmdl_ci, p.pcd_rmdl, p.pcd_rmdl_ci, p.trials))
            .collect()
    }

    #[getter]
    fn pcd_gmdl(&self) -> Vec<f64> {
        self.inner.pcd_gmdl()
    }

    #[getter]
    fn pcd_rmdl(&self) -> Vec<f64> {
        self.inner.pcd_rmdl()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }
}

#[pyfunction]
#[pyo3(signature = (scenario, n_list, trials, seed, penalty="mdl"))]
fn sweep_snapshots(py: Python<'_>, scenario: PyRef<'_, PyScenario>, n_list: Vec<usize>, trials: usize, seed: u64, penalty: &str) -> PyResult<PySweepResult> {
    let cfg = scenario.inner.clone();
    let est = estimator_config(penalty, 200, 1e-10)?;
    let inner = py.detach(|| sourcecount::sweep_snapshots(&cfg, &n_list, trials, &est, seed)).map_err(estimator_err)?;
    Ok(PySweepResult { inner })
}

#[pyfunction]
#[pyo3(signature = (scenario, rho_list_deg, n, trials, seed, penalty="mdl"))]
fn sweep_separation(
    py: Python<'_>,
    scenario: PyRef<'_, PyScenario>,
    rho_list_deg: Vec<f64>,
    n: usize,
    trials: usize,
    seed: u64,
    penalty: &str,
) -> PyResult<PySweepResult> {
    let cfg = scenario.inner.clone();
    let est = estimator_config(penalty, 200, 1e-10)?;
    let inner = py
        .detach(|| sourcecount::sweep_separation(&cfg, &rho_list_deg, n, trials, &est, seed))
        .map_err(estimator_err)?;
    Ok(PySweepResult { inner })
}

#[pymodule]
fn sourcecount_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyCriterionTable>()?;
    m.add_class::<PyRmdlFit>()?;
    m.add_class::<PyRmdlEstimate>()?;
    m.add_class::<PySweepResult>()?;
    m.add_function(wrap_pyfunction!(eigvals, m)?)?;
    m.add_function(wrap_pyfunction!(gmdl_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(rmdl_fit, m)?)?;
    m.add_function(wrap_pyfunction!(rmdl_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(run_trial, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_snapshots, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_separation, m)?)?;
    Ok(())
}
