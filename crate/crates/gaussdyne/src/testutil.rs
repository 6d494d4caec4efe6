//! Shared helpers for the crate's unit tests: random physical objects and
//! reference models.

use nalgebra::{DMatrix, DVector};
use rand::RngExt;
use rand_chacha::ChaCha12Rng;

use crate::channel::GaussianChannel;
use crate::dynamics::DiffusiveModel;
use crate::linalg;
use crate::state::GaussianState;
use crate::symplectic::omega_matrix;

pub(crate) fn rand_matrix(rng: &mut ChaCha12Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| (rng.random::<f64>() - 0.5) * 2.0 * scale)
}

/// Random symplectic matrix exp(Omega H) with a random symmetric generator.
pub(crate) fn random_symplectic(rng: &mut ChaCha12Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let dim = 2 * n;
    let h = linalg::symmetrize(&rand_matrix(rng, dim, dim, scale));
    (omega_matrix(dim) * h).exp()
}

/// Random valid Gaussian state built from symplectic eigenvalues >= 1.
pub(crate) fn random_state(rng: &mut ChaCha12Rng, n: usize) -> GaussianState {
    let dim = 2 * n;
    let s = random_symplectic(rng, n, 0.4);
    let mut nu = DVector::<f64>::zeros(dim);
    for j in 0..n {
        let v = 1.0 + rng.random::<f64>() * 2.0;
        nu[2 * j] = v;
        nu[2 * j + 1] = v;
    }
    let cov = linalg::symmetrize(&(&s * DMatrix::from_diagonal(&nu) * s.transpose()));
    let mean = DVector::from_fn(dim, |_, _| (rng.random::<f64>() - 0.5) * 4.0);
    GaussianState::new(mean, cov).unwrap()
}

/// Random valid channel: random X, then Y large enough for complete
/// positivity with a definite margin.
pub(crate) fn random_valid_channel(rng: &mut ChaCha12Rng, n: usize) -> GaussianChannel {
    let dim = 2 * n;
    let x = rand_matrix(rng, dim, dim, 1.0);
    let om = omega_matrix(dim);
    let imag = &om - &x * &om * x.transpose();
    // Smallest admissible Y is lambda_max(i * imag) I; add margin.
    let bound = -linalg::hermitian_min_eigenvalue(&DMatrix::zeros(dim, dim), &imag);
    let margin = 0.05 + rng.random::<f64>();
    let noise = rand_matrix(rng, dim, dim, 0.2);
    let y = linalg::symmetrize(&(&noise * noise.transpose()))
        + DMatrix::identity(dim, dim) * (bound + margin);
    GaussianChannel::new(x, y).unwrap()
}

/// Two-mode squeezed covariance with cosh(2r) = c, sinh(2r) = s.
pub(crate) fn two_mode_squeezed_cov(c: f64, s: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            c, 0.0, s, 0.0, //
            0.0, c, 0.0, -s, //
            s, 0.0, c, 0.0, //
            0.0, -s, 0.0, c,
        ],
    )
}

pub(crate) fn two_mode_squeezed(c: f64, s: f64) -> GaussianState {
    GaussianState::new(DVector::zeros(4), two_mode_squeezed_cov(c, s)).unwrap()
}

/// Optical parametric oscillator model.
pub(crate) fn opo_model(chi: f64, gamma: f64, n_th: f64) -> DiffusiveModel {
    DiffusiveModel::new(
        DMatrix::from_row_slice(2, 2, &[0.0, -chi, -chi, 0.0]),
        DMatrix::identity(2, 2) * gamma.sqrt(),
        DMatrix::identity(2, 2) * (2.0 * n_th + 1.0),
    )
    .unwrap()
}

/// Position-scattering model.
pub(crate) fn scattering_model(omega: f64, rate: f64) -> DiffusiveModel {
    let mut c = DMatrix::<f64>::zeros(2, 2);
    c[(0, 0)] = (2.0 * rate).sqrt();
    DiffusiveModel::new(DMatrix::identity(2, 2) * omega, c, DMatrix::identity(2, 2)).unwrap()
}
