//! Unconditional open diffusive dynamics: drift and diffusion matrices from
//! a physical model (system Hamiltonian, linear bath coupling, white-noise
//! bath covariance), admissibility checks, moment integration and Lyapunov
//! steady states.
//!
//! Moment equations: d sigma/dt = A sigma + sigma A^T + D and
//! d mean/dt = A mean, with A = Omega H_s + Omega C Omega C^T / 2 and
//! D = Omega C sigma_B C^T Omega^T.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::state::GaussianState;
use crate::symplectic::omega_matrix;

/// Max eigenvalue real part accepted as Hurwitz; borderline spectra (the
/// instability threshold of a pumped oscillator, a free rotation) must fail
/// loudly rather than produce a large spurious steady state.
pub const HURWITZ_TOL: f64 = 1e-10;

/// Validity guard used inside integrators; states are rejected when the
/// uncertainty relation is violated beyond this during a run, which signals
/// a too-large step size.
pub const INTEGRATION_VALIDITY_TOL: f64 = 1e-6;

/// A linearly coupled open-system model: system Hamiltonian matrix H_s
/// (2n x 2n), coupling C (2n x 2m) to m white-noise bath modes with
/// covariance sigma_B (2m x 2m).
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusiveModel {
    h_sys: DMatrix<f64>,
    coupling: DMatrix<f64>,
    bath_cov: DMatrix<f64>,
}

impl DiffusiveModel {
    pub fn new(
        h_sys: DMatrix<f64>,
        coupling: DMatrix<f64>,
        bath_cov: DMatrix<f64>,
    ) -> Result<Self> {
        let n = linalg::check_phase_space(&h_sys)?;
        let h_sys = linalg::checked_symmetric(&h_sys, 1e-8)?;
        let m = linalg::check_phase_space(&bath_cov)?;
        let bath_cov = linalg::checked_symmetric(&bath_cov, 1e-8)?;
        if coupling.shape() != (2 * n, 2 * m) {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                found: coupling.nrows(),
            });
        }
        let min = linalg::hermitian_min_eigenvalue(&bath_cov, &omega_matrix(2 * m));
        if min < -1e-9 {
            return Err(Error::UnphysicalBath(min));
        }
        Ok(Self {
            h_sys,
            coupling,
            bath_cov,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.h_sys.nrows() / 2
    }

    pub fn bath_modes(&self) -> usize {
        self.bath_cov.nrows() / 2
    }

    pub fn h_sys(&self) -> &DMatrix<f64> {
        &self.h_sys
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.coupling
    }

    pub fn bath_cov(&self) -> &DMatrix<f64> {
        &self.bath_cov
    }

    /// Drift and diffusion matrices of the unconditional moment equations.
    pub fn drift_diffusion(&self) -> DriftDiffusion {
        let dim = self.h_sys.nrows();
        let om_n = omega_matrix(dim);
        let om_m = omega_matrix(self.bath_cov.nrows());
        let oc = &om_n * &self.coupling;
        let a = &om_n * &self.h_sys + &oc * &om_m * self.coupling.transpose() * 0.5;
        let d = linalg::symmetrize(&(&oc * &self.bath_cov * oc.transpose()));
        DriftDiffusion { a, d }
    }
}

/// Drift matrix A and diffusion matrix D of a diffusive evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftDiffusion {
    a: DMatrix<f64>,
    d: DMatrix<f64>,
}

/// Diagnostics from [`DriftDiffusion::validity`].
#[derive(Debug, Clone, Copy)]
pub struct AdmissibilityReport {
    /// Minimum eigenvalue of D + i Omega A_a Omega^T with
    /// A_a = Omega^T A - A^T Omega.
    pub min_eig: f64,
    pub admissible: bool,
    /// det D and det A_a, reported for single-mode systems where the
    /// admissibility condition reduces to det D >= det A_a.
    pub det_d: Option<f64>,
    pub det_a_a: Option<f64>,
}

impl DriftDiffusion {
    pub fn new(a: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = linalg::check_phase_space(&a)?;
        if d.shape() != (2 * n, 2 * n) {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                found: d.nrows(),
            });
        }
        let d = linalg::checked_symmetric(&d, 1e-8)?;
        Ok(Self { a, d })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn n_modes(&self) -> usize {
        self.a.nrows() / 2
    }

    /// Admissibility: D + i Omega A_a Omega^T >= 0 characterizes the pairs
    /// (A, D) that arise from a physical bath.
    pub fn validity(&self, tol: f64) -> AdmissibilityReport {
        let dim = self.a.nrows();
        let om = omega_matrix(dim);
        let a_a = om.transpose() * &self.a - self.a.transpose() * &om;
        let imag = &om * &a_a * om.transpose();
        let min = linalg::hermitian_min_eigenvalue(&self.d, &imag);
        let (det_d, det_a_a) = if dim == 2 {
            (Some(self.d.determinant()), Some(a_a.determinant()))
        } else {
            (None, None)
        };
        AdmissibilityReport {
            min_eig: min,
            admissible: min >= -tol,
            det_d,
            det_a_a,
        }
    }

    /// Right-hand side of the covariance equation.
    pub(crate) fn lyapunov_rhs(&self, sigma: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a * sigma + sigma * self.a.transpose() + &self.d
    }
}

/// Integrates the moment equations with fixed-step classical RK4, with
/// per-step symmetrization of the covariance. Validity is spot-checked along
/// the way; a violation beyond [`INTEGRATION_VALIDITY_TOL`] aborts with
/// [`Error::StepRejected`].
///
/// The horizon is rounded to a whole number of steps of size `dt`; the
/// returned snapshot times are exact.
pub fn evolve_unconditional(
    state: &GaussianState,
    dd: &DriftDiffusion,
    duration: f64,
    dt: f64,
) -> Result<GaussianState> {
    let path = evolve_unconditional_path(state, dd, duration, dt, usize::MAX)?;
    Ok(path.into_iter().last().expect("path never empty").1)
}

/// As [`evolve_unconditional`], returning snapshots every `stride` steps
/// (the initial state and the endpoint are always included).
pub fn evolve_unconditional_path(
    state: &GaussianState,
    dd: &DriftDiffusion,
    duration: f64,
    dt: f64,
    stride: usize,
) -> Result<Vec<(f64, GaussianState)>> {
    let dim = 2 * state.n_modes();
    if dd.a.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: dd.a.nrows(),
        });
    }
    if !dt.is_finite() || dt <= 0.0 || !duration.is_finite() || duration < 0.0 {
        return Err(Error::InvalidParameter(
            "duration must be nonnegative and dt positive".into(),
        ));
    }
    let steps = (duration / dt).round().max(0.0) as usize;
    let stride = stride.max(1);
    // Validity is checked at ~64 points along the run.
    let guard_every = (steps / 64).max(1);

    let mut sigma = state.cov().clone();
    let mut mean = state.mean().clone();
    let mut out = Vec::with_capacity(steps / stride + 2);
    out.push((0.0, state.clone()));

    let om = omega_matrix(dim);
    let check_validity = |sigma: &DMatrix<f64>, t: f64| -> Result<()> {
        if !sigma.iter().all(|x| x.is_finite()) {
            return Err(Error::StepRejected {
                t,
                min_eig: f64::NEG_INFINITY,
            });
        }
        let min = linalg::hermitian_min_eigenvalue(sigma, &om);
        if min < -INTEGRATION_VALIDITY_TOL {
            return Err(Error::StepRejected { t, min_eig: min });
        }
        Ok(())
    };

    for step in 0..steps {
        let k1 = dd.lyapunov_rhs(&sigma);
        let s2 = &sigma + &k1 * (dt / 2.0);
        let k2 = dd.lyapunov_rhs(&s2);
        let s3 = &sigma + &k2 * (dt / 2.0);
        let k3 = dd.lyapunov_rhs(&s3);
        let s4 = &sigma + &k3 * dt;
        let k4 = dd.lyapunov_rhs(&s4);
        sigma = linalg::symmetrize(&(&sigma + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)));

        let m1 = &dd.a * &mean;
        let m2 = &dd.a * &(&mean + &m1 * (dt / 2.0));
        let m3 = &dd.a * &(&mean + &m2 * (dt / 2.0));
        let m4 = &dd.a * &(&mean + &m3 * dt);
        mean += (m1 + m2 * 2.0 + m3 * 2.0 + m4) * (dt / 6.0);

        let t = (step + 1) as f64 * dt;
        if (step + 1).is_multiple_of(guard_every) || step + 1 == steps {
            check_validity(&sigma, t)?;
        }
        if (step + 1).is_multiple_of(stride) || step + 1 == steps {
            out.push((
                t,
                GaussianState::from_parts_unchecked(mean.clone(), sigma.clone()),
            ));
        }
    }
    Ok(out)
}

/// Exact propagation of the moments over time t:
/// sigma(t) = e^{At} sigma e^{A^T t} + int_0^t e^{As} D e^{A^T s} ds,
/// the integral evaluated through one block matrix exponential.
pub fn propagate_exact(
    state: &GaussianState,
    dd: &DriftDiffusion,
    t: f64,
) -> Result<GaussianState> {
    let dim = 2 * state.n_modes();
    if dd.a.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: dd.a.nrows(),
        });
    }
    let mut block = DMatrix::<f64>::zeros(2 * dim, 2 * dim);
    block.view_mut((0, 0), (dim, dim)).copy_from(&(&dd.a * t));
    block.view_mut((0, dim), (dim, dim)).copy_from(&(&dd.d * t));
    block
        .view_mut((dim, dim), (dim, dim))
        .copy_from(&(-dd.a.transpose() * t));
    let e = block.exp();
    let exp_at = e.view((0, 0), (dim, dim)).into_owned();
    let m12 = e.view((0, dim), (dim, dim)).into_owned();
    // int_0^t e^{As} D e^{A^T s} ds = M12 * e^{A^T t}.
    let gramian = linalg::symmetrize(&(&m12 * exp_at.transpose()));
    let cov = linalg::symmetrize(&(&exp_at * state.cov() * exp_at.transpose() + gramian));
    Ok(GaussianState::from_parts_unchecked(
        &exp_at * state.mean(),
        cov,
    ))
}

/// Steady-state covariance from A sigma + sigma A^T + D = 0, requiring A
/// Hurwitz. Fails with [`Error::Unstable`] otherwise.
pub fn steady_state_lyapunov(dd: &DriftDiffusion) -> Result<DMatrix<f64>> {
    let max_re =
        dd.a.complex_eigenvalues()
            .iter()
            .fold(f64::NEG_INFINITY, |acc, z| acc.max(z.re));
    if max_re >= -HURWITZ_TOL {
        return Err(Error::Unstable(max_re));
    }
    linalg::lyapunov_solve(&dd.a, &dd.d)
}
