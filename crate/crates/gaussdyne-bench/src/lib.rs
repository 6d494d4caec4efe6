//! Shared fixtures for the benchmark suite.

use gaussdyne::channel::GaussianChannel;
use gaussdyne::state::GaussianState;
use gaussdyne::unitary::symplectic_from_hamiltonian;
use nalgebra::{DMatrix, DVector};
use rand::RngExt;
use rand_chacha::ChaCha12Rng;

pub fn rand_matrix(rng: &mut ChaCha12Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| (rng.random::<f64>() - 0.5) * 2.0 * scale)
}

pub fn random_state(rng: &mut ChaCha12Rng, n: usize) -> GaussianState {
    let dim = 2 * n;
    let raw = rand_matrix(rng, dim, dim, 0.4);
    let h = (&raw + raw.transpose()) * 0.5;
    let s = symplectic_from_hamiltonian(&h, 1.0).unwrap();
    let mut nu = DVector::<f64>::zeros(dim);
    for j in 0..n {
        let v = 1.0 + rng.random::<f64>() * 2.0;
        nu[2 * j] = v;
        nu[2 * j + 1] = v;
    }
    let cov = &s * DMatrix::from_diagonal(&nu) * s.transpose();
    GaussianState::new(DVector::zeros(dim), (&cov + cov.transpose()) * 0.5).unwrap()
}

pub fn random_channel(rng: &mut ChaCha12Rng, n: usize) -> GaussianChannel {
    let dim = 2 * n;
    let x = rand_matrix(rng, dim, dim, 1.0);
    let probe = GaussianChannel::new(x.clone(), DMatrix::zeros(dim, dim)).unwrap();
    let bound = -probe.validity(0.0).min_cp_eig;
    let y = DMatrix::<f64>::identity(dim, dim) * (bound + 0.5);
    GaussianChannel::new(x, y).unwrap()
}
