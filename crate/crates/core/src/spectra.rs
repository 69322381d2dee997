//! Sample covariance, Hermitian eigendecomposition and the Frobenius-optimal
//! projection onto "rank-q signal plus white noise" matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

use crate::signal_gen::SnapshotBlock;

/// Absolute tolerance on `M[i][j] = conj(M[j][i])` accepted by
/// [`HermitianMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: |M[{i}][{j}] - conj(M[{j}][{i}])| = {deviation:e}")]
    NotHermitian { i: usize, j: usize, deviation: f64 },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("eigendecomposition did not converge for a {0}x{0} matrix")]
    NoConvergence(usize),
    #[error("rank {q} must be smaller than the dimension {p}")]
    RankTooLarge { q: usize, p: usize },
}

/// Square complex matrix, exactly Hermitian after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(DMatrix<Complex64>);

impl HermitianMatrix {
    /// Accepts `m` if it is Hermitian within [`HERMITIAN_TOL`], then removes
    /// the residual asymmetry.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self, SpectraError> {
        if !m.is_square() {
            return Err(SpectraError::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(SpectraError::NonFinite);
        }
        let p = m.nrows();
        for i in 0..p {
            for j in i..p {
                let deviation = (m[(i, j)] - m[(j, i)].conj()).norm();
                if deviation > HERMITIAN_TOL {
                    return Err(SpectraError::NotHermitian { i, j, deviation });
                }
            }
        }
        Ok(Self::from_matrix_symmetrized(m))
    }

    /// `(M + M^H)/2` without any tolerance check.
    pub fn from_matrix_symmetrized(m: DMatrix<Complex64>) -> Self {
        let adj = m.adjoint();
        Self((m + adj) * Complex64::new(0.5, 0.0))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&v| Complex64::new(v, 0.0)));
        Self(DMatrix::from_diagonal(&d))
    }

    pub fn zeros(p: usize) -> Self {
        Self(DMatrix::zeros(p, p))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    /// Real parts of the diagonal.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// `M + diag(d)`.
    pub fn add_diagonal(&self, d: &[f64]) -> Self {
        let mut m = self.0.clone();
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] += v;
        }
        Self(m)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(&self.0 * Complex64::new(c, 0.0))
    }
}

/// Eigenvalues in descending order with matching orthonormal eigenvectors
/// (column `i` of `vectors` belongs to `values[i]`).
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

impl EigenSystem {
    /// `Σ_i values[i] v_i v_i^H`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        weighted_outer_sum(&self.vectors, &self.values)
    }
}

/// `Σ_i weights[i] v_i v_i^H` over the first `weights.len()` columns.
fn weighted_outer_sum(vectors: &DMatrix<Complex64>, weights: &[f64]) -> DMatrix<Complex64> {
    let p = vectors.nrows();
    let mut out = DMatrix::zeros(p, p);
    for (i, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let v = vectors.column(i);
        out += (v * v.adjoint()) * Complex64::new(w, 0.0);
    }
    out
}

/// `R̂ = (1/N) Σ_t x(t) x(t)^H`.
pub fn sample_covariance(block: &SnapshotBlock) -> HermitianMatrix {
    let n = block.n_snapshots().max(1) as f64;
    let x = &block.data;
    let r = (x * x.adjoint()) * Complex64::new(1.0 / n, 0.0);
    HermitianMatrix::from_matrix_symmetrized(r)
}

/// Eigendecomposition with values sorted in descending order. Ties keep the
/// order the solver produced them in.
pub fn eig_hermitian(m: &HermitianMatrix) -> Result<EigenSystem, SpectraError> {
    let p = m.dim();
    let eig = SymmetricEigen::try_new(m.as_matrix().clone(), f64::EPSILON, 1000 * p.max(1))
        .ok_or(SpectraError::NoConvergence(p))?;
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(p, p);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigenSystem { values, vectors })
}

/// Best "rank-q plus white" approximation of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedProjection {
    /// `Σ_{i≤q} max(l_i - σ², 0) v_i v_i^H`.
    pub lowrank: HermitianMatrix,
    /// Mean of the trailing `p - q` eigenvalues, floored.
    pub sigma2: f64,
    /// Leading `q` eigenvectors (`p × q`).
    pub signal_basis: DMatrix<Complex64>,
}

/// Projects `m` onto `{L + σ²I : rank(L) ≤ q}`: keeps the leading `q`
/// eigenpairs, replaces the rest by their mean. The signal weights are
/// clamped at zero so `lowrank` stays PSD.
pub fn project_truncated_spectrum(m: &HermitianMatrix, q: usize, floor: f64) -> Result<TruncatedProjection, SpectraError> {
    let p = m.dim();
    if q >= p {
        return Err(SpectraError::RankTooLarge { q, p });
    }
    let eig = eig_hermitian(m)?;
    let tail = &eig.values[q..];
    let sigma2 = (tail.iter().sum::<f64>() / tail.len() as f64).max(floor);
    let weights: Vec<f64> = eig.values[..q].iter().map(|l| (l - sigma2).max(0.0)).collect();
    let lowrank = HermitianMatrix::from_matrix_symmetrized(weighted_outer_sum(&eig.vectors, &weights));
    let signal_basis = eig.vectors.columns(0, q).into_owned();
    Ok(TruncatedProjection { lowrank, sigma2, signal_basis })
}
