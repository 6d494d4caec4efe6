//! Helpers shared by the integration test suites.
#![allow(dead_code)]

use gaussdyne::channel::GaussianChannel;
use gaussdyne::state::GaussianState;
use gaussdyne::unitary::symplectic_from_hamiltonian;
use nalgebra::{DMatrix, DVector};
use rand::RngExt;
use rand_chacha::ChaCha12Rng;

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

pub fn rand_matrix(rng: &mut ChaCha12Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| (rng.random::<f64>() - 0.5) * 2.0 * scale)
}

pub fn random_symplectic(rng: &mut ChaCha12Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let dim = 2 * n;
    let raw = rand_matrix(rng, dim, dim, scale);
    let h = (&raw + raw.transpose()) * 0.5;
    symplectic_from_hamiltonian(&h, 1.0).expect("symmetric by construction")
}

/// Random physical state: covariance S diag(nu) S^T with nu_j >= 1.
pub fn random_state(rng: &mut ChaCha12Rng, n: usize) -> GaussianState {
    let dim = 2 * n;
    let s = random_symplectic(rng, n, 0.4);
    let mut nu = DVector::<f64>::zeros(dim);
    for j in 0..n {
        let v = 1.0 + rng.random::<f64>() * 2.0;
        nu[2 * j] = v;
        nu[2 * j + 1] = v;
    }
    let cov = &s * DMatrix::from_diagonal(&nu) * s.transpose();
    let cov = (&cov + cov.transpose()) * 0.5;
    let mean = DVector::from_fn(dim, |_, _| (rng.random::<f64>() - 0.5) * 4.0);
    GaussianState::new(mean, cov).expect("constructed physical")
}

/// Random completely positive channel with a definite margin above the
/// complete-positivity bound.
pub fn random_channel(rng: &mut ChaCha12Rng, n: usize) -> GaussianChannel {
    let dim = 2 * n;
    let x = rand_matrix(rng, dim, dim, 1.0);
    // The most negative eigenvalue of i(Omega - X Omega X^T) is what Y has
    // to dominate; read it off the zero-noise channel diagnostics.
    let probe = GaussianChannel::new(x.clone(), DMatrix::zeros(dim, dim)).unwrap();
    let bound = -probe.validity(0.0).min_cp_eig;
    let margin = 0.05 + rng.random::<f64>();
    let noise = rand_matrix(rng, dim, dim, 0.2);
    let y = &noise * noise.transpose() + DMatrix::identity(dim, dim) * (bound + margin);
    GaussianChannel::new(x, (&y + y.transpose()) * 0.5).unwrap()
}

/// Two-mode squeezed state with cosh(2r) = c, sinh(2r) = s.
pub fn two_mode_squeezed(c: f64, s: f64) -> GaussianState {
    let cov = DMatrix::from_row_slice(
        4,
        4,
        &[
            c, 0.0, s, 0.0, //
            0.0, c, 0.0, -s, //
            s, 0.0, c, 0.0, //
            0.0, -s, 0.0, c,
        ],
    );
    GaussianState::new(DVector::zeros(4), cov).unwrap()
}
