#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use sourcecount::HermitianMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_gaussian<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) / 2f64.sqrt()
    })
}

/// Haar-ish random unitary from the QR factor of a complex Gaussian matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, p: usize) -> DMatrix<Complex64> {
    complex_gaussian(rng, p, p).qr().q()
}

/// Orthonormal columns spanning the same space as `m`.
pub fn orthonormalize(m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    m.qr().q()
}

/// Random Hermitian PSD matrix drawn from one of several families: full-rank
/// Wishart, rank-deficient Wishart, spiked plus inhomogeneous diagonal, and
/// a random spectrum with heavy dynamic range.
pub fn random_psd<R: Rng>(rng: &mut R, p: usize) -> HermitianMatrix {
    let kind = rng.random_range(0..4);
    let m = match kind {
        0 => {
            let n = rng.random_range(p..4 * p);
            let g = complex_gaussian(rng, p, n);
            &g * g.adjoint() / Complex64::new(n as f64, 0.0)
        }
        1 => {
            let n = rng.random_range(1..p);
            let g = complex_gaussian(rng, p, n);
            &g * g.adjoint() / Complex64::new(n as f64, 0.0)
        }
        2 => {
            let q = rng.random_range(0..p);
            let a = complex_gaussian(rng, p, q);
            let mut m = &a * a.adjoint() * Complex64::new(rng.random_range(0.1..10.0), 0.0);
            let sigma2: f64 = rng.random_range(0.1..2.0);
            for i in 0..p {
                m[(i, i)] += sigma2 * (1.0 + rng.random_range(-0.9..0.9));
            }
            m
        }
        _ => {
            let u = random_unitary(rng, p);
            let spectrum = nalgebra::DVector::from_fn(p, |_, _| Complex64::new(10f64.powf(rng.random_range(-3.0..3.0)), 0.0));
            &u * DMatrix::from_diagonal(&spectrum) * u.adjoint()
        }
    };
    HermitianMatrix::from_matrix_symmetrized(m)
}

pub fn frob2(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).norm_squared()
}

/// `Σ_{i<q} levels[i] c_i c_i^H + tail Σ_{i≥q} c_i c_i^H` for the columns
/// `c_i` of `frame`.
pub fn structured(frame: &DMatrix<Complex64>, levels: &[f64], tail: f64) -> DMatrix<Complex64> {
    let p = frame.nrows();
    let mut diag = vec![tail; p];
    diag[..levels.len()].copy_from_slice(levels);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(p, diag.into_iter().map(|v| Complex64::new(v, 0.0))));
    frame * d * frame.adjoint()
}
