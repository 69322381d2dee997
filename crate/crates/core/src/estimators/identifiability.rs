//! Detection of unidentifiable fits: a point is unidentifiable exactly when
//! some sensor's unit vector `e_j` lies in the signal subspace, i.e. a source
//! is seen by that sensor alone and cannot be told apart from extra noise on
//! it.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::rmdl::{projector, RmdlFit};
use crate::spectra::eig_hermitian;

pub const DEFAULT_IDENTIFIABILITY_TOL: f64 = 1e-6;

/// Eigenvalues of `lowrank` below this fraction of the largest one are
/// treated as zero when extracting its column space.
const RANK_REL_TOL: f64 = 1e-10;

/// Sensors `j` with `‖P e_j‖₂ ≥ 1 - tol`, where `P` projects onto the span of
/// the orthonormal columns of `basis`.
pub fn subspace_flags(basis: &DMatrix<Complex64>, tol: f64) -> Vec<usize> {
    if basis.ncols() == 0 {
        return Vec::new();
    }
    // ‖P e_j‖² = P_jj = squared norm of row j of the basis
    let p = projector(basis);
    (0..basis.nrows())
        .filter(|&j| p[(j, j)].re.max(0.0).sqrt() >= 1.0 - tol)
        .collect()
}

/// Flags sensors whose unit vector lies in the column space of
/// `fit.lowrank`.
pub fn identifiability_flag(fit: &RmdlFit, tol: f64) -> Vec<usize> {
    let Ok(eig) = eig_hermitian(&fit.lowrank) else {
        return Vec::new();
    };
    let top = eig.values.first().copied().unwrap_or(0.0);
    if !(top > 0.0) {
        return Vec::new();
    }
    let rank = eig.values.iter().take_while(|&&l| l > RANK_REL_TOL * top).count();
    subspace_flags(&eig.vectors.columns(0, rank).into_owned(), tol)
}
