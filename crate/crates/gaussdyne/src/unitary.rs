//! Gaussian unitary dynamics: symplectic matrices generated by quadratic
//! Hamiltonians, and Weyl displacements, acting on state moments.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::state::GaussianState;
use crate::symplectic::omega_matrix;

/// Tolerance at which [`apply_symplectic`] accepts its input; guards
/// uncertainty preservation.
pub const SYMPLECTIC_INPUT_TOL: f64 = 1e-8;

/// A quadratic Hamiltonian H = 1/2 r^T H r + r^T r_H, described by its
/// symmetric Hamiltonian matrix and linear part.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticHamiltonian {
    matrix: DMatrix<f64>,
    linear: DVector<f64>,
}

impl QuadraticHamiltonian {
    pub fn new(matrix: DMatrix<f64>, linear: DVector<f64>) -> Result<Self> {
        let n = linalg::check_phase_space(&matrix)?;
        if linear.len() != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                found: linear.len(),
            });
        }
        let matrix = linalg::checked_symmetric(&matrix, 1e-8)?;
        Ok(Self { matrix, linear })
    }

    /// Purely quadratic Hamiltonian (zero linear part).
    pub fn quadratic(matrix: DMatrix<f64>) -> Result<Self> {
        let n = linalg::check_phase_space(&matrix)?;
        Self::new(matrix, DVector::zeros(2 * n))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.linear
    }

    /// The Gaussian unitary generated over time `t`: the symplectic part
    /// exp(Omega H t) together with the accumulated displacement
    /// (int_0^t exp(Omega H s) ds) Omega r_H.
    pub fn evolution(&self, t: f64) -> GaussianUnitary {
        let om = omega_matrix(self.matrix.nrows());
        let gen = &om * &self.matrix;
        let (s, int_s) = linalg::exp_with_integral(&gen, t);
        let shift = int_s * (&om * &self.linear);
        GaussianUnitary {
            symplectic: s,
            displacement: shift,
        }
    }
}

/// A general Gaussian unitary as the pair (S, r): a purely quadratic
/// evolution followed by a displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianUnitary {
    pub symplectic: DMatrix<f64>,
    pub displacement: DVector<f64>,
}

impl GaussianUnitary {
    pub fn apply(&self, state: &GaussianState) -> Result<GaussianState> {
        displace(
            &apply_symplectic(state, &self.symplectic)?,
            &self.displacement,
        )
    }
}

/// exp(Omega H t) for a symmetric Hamiltonian matrix H.
pub fn symplectic_from_hamiltonian(h: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    let n = linalg::check_phase_space(h)?;
    let h = linalg::checked_symmetric(h, 1e-8)?;
    Ok((omega_matrix(2 * n) * h * t).exp())
}

/// mean -> S mean, sigma -> S sigma S^T. Rejects non-symplectic S.
pub fn apply_symplectic(state: &GaussianState, s: &DMatrix<f64>) -> Result<GaussianState> {
    let dim = 2 * state.n_modes();
    if s.shape() != (dim, dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: s.nrows(),
        });
    }
    let resid = crate::symplectic::symplectic_residual(s)?;
    if resid > SYMPLECTIC_INPUT_TOL {
        return Err(Error::NotSymplectic(resid));
    }
    Ok(GaussianState::from_parts_unchecked(
        s * state.mean(),
        linalg::symmetrize(&(s * state.cov() * s.transpose())),
    ))
}

/// mean -> mean + r, covariance unchanged.
pub fn displace(state: &GaussianState, r: &DVector<f64>) -> Result<GaussianState> {
    let dim = 2 * state.n_modes();
    if r.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: r.len(),
        });
    }
    Ok(GaussianState::from_parts_unchecked(
        state.mean() + r,
        state.cov().clone(),
    ))
}
