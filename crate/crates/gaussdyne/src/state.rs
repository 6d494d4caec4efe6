//! Gaussian states as first moments plus covariance matrix.
//!
//! Conventions: xpxp ordering, anticommutator covariance (the vacuum has
//! sigma = I, no hbar anywhere). A real symmetric sigma is a physical
//! covariance matrix iff sigma + i*Omega >= 0, equivalently all symplectic
//! eigenvalues are >= 1.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::symplectic::{omega_matrix, symplectic_eigenvalues};

/// Default tolerance on the minimum eigenvalue of sigma + i*Omega when
/// deciding physicality. Riccati integration produces borderline-pure
/// states, so exact nonnegativity is too strict.
pub const VALIDITY_TOL: f64 = 1e-9;

/// A Gaussian state of n modes: mean vector (length 2n) and covariance
/// matrix (2n x 2n, anticommutator convention).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

/// Diagnostics from [`GaussianState::validity`].
#[derive(Debug, Clone, Copy)]
pub struct StateValidity {
    /// Minimum eigenvalue of the Hermitian matrix sigma + i*Omega.
    pub min_uncertainty_eig: f64,
    /// Largest deviation of sigma from symmetry.
    pub asymmetry: f64,
    /// True iff the state satisfies the uncertainty relation within the
    /// tolerance the check was run at.
    pub physical: bool,
}

impl GaussianState {
    /// Builds a state from moments, checking shapes and symmetrizing the
    /// covariance. Physicality is *not* enforced here; see [`Self::validity`].
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = linalg::check_phase_space(&cov)?;
        if mean.len() != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                found: mean.len(),
            });
        }
        let cov = linalg::checked_symmetric(&cov, 1e-8)?;
        Ok(Self { mean, cov })
    }

    pub(crate) fn from_parts_unchecked(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        Self { mean, cov }
    }

    /// Vacuum of n modes: zero mean, identity covariance.
    pub fn vacuum(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one mode".into()));
        }
        Ok(Self {
            mean: DVector::zeros(2 * n),
            cov: DMatrix::identity(2 * n, 2 * n),
        })
    }

    /// Thermal state of n modes with mean occupation `n_th` per mode:
    /// sigma = (2 n_th + 1) I.
    pub fn thermal(n: usize, n_th: f64) -> Result<Self> {
        if n_th < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "thermal occupation must be nonnegative, got {n_th}"
            )));
        }
        let mut s = Self::vacuum(n)?;
        s.cov *= 2.0 * n_th + 1.0;
        Ok(s)
    }

    /// Coherent state: displaced vacuum with the given mean.
    pub fn coherent(n: usize, mean: DVector<f64>) -> Result<Self> {
        if mean.len() != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                found: mean.len(),
            });
        }
        let mut s = Self::vacuum(n)?;
        s.mean = mean;
        Ok(s)
    }

    /// Single-mode squeezed vacuum with covariance diag(z, 1/z).
    pub fn squeezed_vacuum(z: f64) -> Result<Self> {
        if z <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "squeezing parameter must be positive, got {z}"
            )));
        }
        Ok(Self {
            mean: DVector::zeros(2),
            cov: DMatrix::from_diagonal(&DVector::from_vec(vec![z, 1.0 / z])),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.cov.nrows() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Physicality diagnostics at tolerance `tol` on the minimum eigenvalue
    /// of sigma + i*Omega.
    pub fn validity(&self, tol: f64) -> StateValidity {
        let om = omega_matrix(2 * self.n_modes());
        let min = linalg::hermitian_min_eigenvalue(&self.cov, &om);
        StateValidity {
            min_uncertainty_eig: min,
            asymmetry: linalg::asymmetry(&self.cov),
            physical: min >= -tol,
        }
    }

    /// Shorthand for `validity(VALIDITY_TOL).physical`.
    pub fn is_physical(&self) -> bool {
        self.validity(VALIDITY_TOL).physical
    }

    /// Purity Tr[rho^2] = 1 / sqrt(det sigma).
    pub fn purity(&self) -> Result<f64> {
        let det = self
            .cov
            .clone()
            .cholesky()
            .map(|c| c.determinant())
            .unwrap_or_else(|| self.cov.determinant());
        if det < 1.0 - 1e-9 {
            return Err(Error::UncertaintyViolation(det - 1.0));
        }
        Ok(1.0 / det.sqrt())
    }

    /// Symplectic eigenvalues of the covariance matrix, descending.
    pub fn symplectic_spectrum(&self) -> Result<Vec<f64>> {
        symplectic_eigenvalues(&self.cov)
    }

    /// Characteristic function chi(r) = exp(-1/4 r^T Omega^T sigma Omega r)
    /// * exp(i r^T Omega^T r').
    pub fn characteristic_function(&self, r: &DVector<f64>) -> Result<Complex<f64>> {
        let dim = 2 * self.n_modes();
        if r.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: r.len(),
            });
        }
        let om = omega_matrix(dim);
        let om_r = &om * r;
        // r^T Omega^T sigma Omega r = (Omega r)^T sigma (Omega r) and
        // r^T Omega^T r' = (Omega r) . r'.
        let quad = -0.25 * (om_r.transpose() * &self.cov * &om_r)[(0, 0)];
        let phase = om_r.dot(&self.mean);
        Ok(Complex::new(quad, 0.0).exp() * Complex::new(0.0, phase).exp())
    }

    /// Hilbert-Schmidt overlap Tr[rho1 rho2] =
    /// 2^n exp(-delta^T (sigma1+sigma2)^{-1} delta) / sqrt(det(sigma1+sigma2)).
    pub fn overlap(&self, other: &Self) -> Result<f64> {
        let n = self.n_modes();
        if other.n_modes() != n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                found: 2 * other.n_modes(),
            });
        }
        let total = &self.cov + &other.cov;
        let delta = &self.mean - &other.mean;
        let chol = total
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Singular("sigma1 + sigma2 not positive definite".into()))?;
        let sol = chol.solve(&delta);
        let quad = delta.dot(&sol);
        Ok(2.0_f64.powi(n as i32) * (-quad).exp() / chol.determinant().sqrt())
    }

    /// Reduced state on the listed modes (principal submatrix and subvector).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let n = self.n_modes();
        if keep.is_empty() {
            return Err(Error::InvalidParameter(
                "partial trace must keep at least one mode".into(),
            ));
        }
        let mut seen = vec![false; n];
        for &k in keep {
            if k >= n {
                return Err(Error::ModeOutOfRange { index: k, modes: n });
            }
            if seen[k] {
                return Err(Error::InvalidParameter(format!("duplicate mode index {k}")));
            }
            seen[k] = true;
        }
        let idx: Vec<usize> = keep.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
        Ok(Self {
            mean: DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.mean[i])),
            cov: DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.cov[(idx[i], idx[j])]),
        })
    }

    /// Tensor product: means concatenate, covariances direct-sum.
    pub fn tensor(&self, other: &Self) -> Self {
        let (da, db) = (2 * self.n_modes(), 2 * other.n_modes());
        let mut mean = DVector::<f64>::zeros(da + db);
        mean.rows_mut(0, da).copy_from(&self.mean);
        mean.rows_mut(da, db).copy_from(&other.mean);
        let mut cov = DMatrix::<f64>::zeros(da + db, da + db);
        cov.view_mut((0, 0), (da, da)).copy_from(&self.cov);
        cov.view_mut((da, da), (db, db)).copy_from(&other.cov);
        Self { mean, cov }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn two_mode_squeezed(c: f64, s: f64) -> GaussianState {
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

    #[test]
    fn vacuum_is_physical_pure() {
        let v = GaussianState::vacuum(2).unwrap();
        let rep = v.validity(1e-10);
        assert!(rep.physical);
        assert!((v.purity().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constructors_are_physical() {
        for s in [
            GaussianState::thermal(1, 0.4).unwrap(),
            GaussianState::coherent(1, DVector::from_vec(vec![1.0, -0.5])).unwrap(),
            GaussianState::squeezed_vacuum(0.25).unwrap(),
        ] {
            assert!(s.validity(1e-10).physical);
        }
    }

    #[test]
    fn constructor_degenerate_cases() {
        let t0 = GaussianState::thermal(1, 0.0).unwrap();
        assert_eq!(t0, GaussianState::vacuum(1).unwrap());
        let s1 = GaussianState::squeezed_vacuum(1.0).unwrap();
        assert_eq!(s1, GaussianState::vacuum(1).unwrap());
        assert!(GaussianState::thermal(1, -0.1).is_err());
        assert!(GaussianState::squeezed_vacuum(0.0).is_err());
    }

    #[test]
    fn below_vacuum_covariance_is_unphysical() {
        let bad = GaussianState::new(
            DVector::zeros(2),
            DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.5])),
        )
        .unwrap();
        let rep = bad.validity(1e-9);
        assert!(!rep.physical);
        assert!((rep.min_uncertainty_eig - (-0.5)).abs() < 1e-9);
    }

    #[test]
    fn squeezed_vacuum_is_physical_for_strong_squeezing() {
        let s = GaussianState::squeezed_vacuum(0.25).unwrap();
        assert!(s.validity(1e-9).physical);
    }

    #[test]
    fn thermal_purity_value() {
        let t = GaussianState::thermal(1, 1.0).unwrap();
        assert!((t.purity().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn monitored_opo_steady_state_is_pure() {
        // diag(0.2, 5) has determinant 1.
        let s = GaussianState::new(
            DVector::zeros(2),
            DMatrix::from_diagonal(&DVector::from_vec(vec![0.2, 5.0])),
        )
        .unwrap();
        assert!((s.purity().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn characteristic_function_values() {
        let v = GaussianState::vacuum(1).unwrap();
        let at_zero = v.characteristic_function(&DVector::zeros(2)).unwrap();
        assert_eq!(at_zero, Complex::new(1.0, 0.0));

        let r = DVector::from_vec(vec![2.0, 0.0]);
        let chi = v.characteristic_function(&r).unwrap();
        assert!((chi.re - (-1.0_f64).exp()).abs() < 1e-12);
        assert!(chi.im.abs() < 1e-15);

        // Coherent state at r = (0, 1): r^T Omega^T r' = 1, so
        // exp(-1/4) * exp(+i). Cross-check by evaluating the phase from the
        // Weyl-conjugation rule D^dag(r') D_{-r} D(r') = e^{-i r^T Omega r'} D_{-r}.
        let mean = DVector::from_vec(vec![1.0, 0.0]);
        let c = GaussianState::coherent(1, mean.clone()).unwrap();
        let r = DVector::from_vec(vec![0.0, 1.0]);
        let chi = c.characteristic_function(&r).unwrap();
        let om = crate::symplectic::omega(1).unwrap().matrix().clone();
        let oracle_phase = -(r.transpose() * om * mean)[(0, 0)];
        let expect = Complex::new((-0.25_f64).exp(), 0.0) * Complex::new(0.0, oracle_phase).exp();
        assert!((oracle_phase - 1.0).abs() < 1e-15);
        assert!((chi - expect).norm() < 1e-12);
    }

    #[test]
    fn overlap_reproduces_purity_and_displacement_decay() {
        let v = GaussianState::vacuum(1).unwrap();
        assert!((v.overlap(&v).unwrap() - 1.0).abs() < 1e-12);

        let t = GaussianState::thermal(1, 1.0).unwrap();
        assert!((t.overlap(&t).unwrap() - 1.0 / 3.0).abs() < 1e-12);

        let d = GaussianState::coherent(1, DVector::from_vec(vec![2.0, 0.0])).unwrap();
        assert!((v.overlap(&d).unwrap() - (-2.0_f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn overlap_against_characteristic_function_quadrature() {
        // Tr[rho1 rho2] = (2 pi)^{-1} int chi1(r) chi2(-r) d^2r for one mode,
        // evaluated on a wide trapezoid grid as an independent oracle.
        let s1 = GaussianState::coherent(1, DVector::from_vec(vec![0.7, -0.3])).unwrap();
        let s2 = GaussianState::squeezed_vacuum(0.5).unwrap();
        let (lim, steps) = (12.0, 401);
        let h = 2.0 * lim / (steps - 1) as f64;
        let mut acc = Complex::new(0.0, 0.0);
        for i in 0..steps {
            for j in 0..steps {
                let r = DVector::from_vec(vec![-lim + i as f64 * h, -lim + j as f64 * h]);
                let wi = if i == 0 || i == steps - 1 { 0.5 } else { 1.0 };
                let wj = if j == 0 || j == steps - 1 { 0.5 } else { 1.0 };
                let w = wi * wj;
                acc += s1.characteristic_function(&r).unwrap()
                    * s2.characteristic_function(&(-&r)).unwrap()
                    * w;
            }
        }
        let quadrature = acc * h * h / (2.0 * std::f64::consts::PI);
        let exact = s1.overlap(&s2).unwrap();
        assert!(quadrature.im.abs() < 1e-9);
        assert!(
            (quadrature.re - exact).abs() < 1e-9,
            "quadrature {} vs overlap {}",
            quadrature.re,
            exact
        );
    }

    #[test]
    fn partial_trace_on_product_and_entangled_states() {
        let v = GaussianState::vacuum(1).unwrap();
        let t = GaussianState::thermal(1, 1.0).unwrap();
        let joint = v.tensor(&t);
        let back = joint.partial_trace(&[0]).unwrap();
        assert_eq!(back, v);

        let tms = two_mode_squeezed(5.0 / 3.0, 4.0 / 3.0);
        let reduced = tms.partial_trace(&[0]).unwrap();
        assert!(max_abs_diff(reduced.cov(), &(DMatrix::identity(2, 2) * (5.0 / 3.0))) < 1e-12);
        // Reduction of a physical state stays physical.
        assert!(reduced.validity(1e-9).physical);

        let all = tms.partial_trace(&[0, 1]).unwrap();
        assert_eq!(all, tms);

        assert!(tms.partial_trace(&[2]).is_err());
        assert!(tms.partial_trace(&[0, 0]).is_err());
        assert!(tms.partial_trace(&[]).is_err());
    }

    #[test]
    fn tensor_multiplies_purity_and_round_trips() {
        let a = GaussianState::thermal(1, 0.5).unwrap();
        let b = GaussianState::squeezed_vacuum(2.0).unwrap();
        let ab = a.tensor(&b);
        assert!((ab.purity().unwrap() - a.purity().unwrap() * b.purity().unwrap()).abs() < 1e-12);
        assert_eq!(ab.partial_trace(&[0]).unwrap(), a);
        assert_eq!(ab.partial_trace(&[1]).unwrap(), b);
    }
}
