//! Deterministic Gaussian CP-maps (X, Y): validity, application,
//! composition, dual maps, and synthesis of a symplectic dilation on a
//! vacuum environment of twice the system size.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::state::GaussianState;
use crate::symplectic::{
    antisymmetric_canonical_form, interleaving_permutation, omega_matrix, symplectic_complete,
    symplectic_residual,
};

/// Tolerance at which channels are accepted as completely positive.
pub const CHANNEL_TOL: f64 = 1e-8;

/// Pair values in [1, 1 + ARCSIN_CLAMP] are clamped to 1 inside the dilation;
/// a larger excess is a genuine complete-positivity violation.
pub const ARCSIN_CLAMP: f64 = 1e-8;

/// Default regularization added to singular Y before the dilation.
pub const DILATION_EPSILON: f64 = 1e-10;

/// A deterministic Gaussian CP-map acting as mean -> X mean,
/// sigma -> X sigma X^T + Y, constrained by Y + i(Omega - X Omega X^T) >= 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChannel {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
}

/// Diagnostics from [`GaussianChannel::validity`].
#[derive(Debug, Clone, Copy)]
pub struct ChannelValidity {
    /// Minimum eigenvalue of the Hermitian matrix Y + i(Omega - X Omega X^T).
    pub min_cp_eig: f64,
    pub valid: bool,
}

impl GaussianChannel {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        let n = linalg::check_phase_space(&x)?;
        if y.shape() != (2 * n, 2 * n) {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                found: y.nrows(),
            });
        }
        let y = linalg::checked_symmetric(&y, 1e-8)?;
        Ok(Self { x, y })
    }

    /// The identity channel on n modes.
    pub fn identity(n: usize) -> Self {
        Self {
            x: DMatrix::identity(2 * n, 2 * n),
            y: DMatrix::zeros(2 * n, 2 * n),
        }
    }

    /// Pure loss with efficiency eta: X = sqrt(eta) I, Y = (1 - eta) I.
    pub fn loss(n: usize, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) || eta == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "loss efficiency must lie in (0, 1], got {eta}"
            )));
        }
        Ok(Self {
            x: DMatrix::identity(2 * n, 2 * n) * eta.sqrt(),
            y: DMatrix::identity(2 * n, 2 * n) * (1.0 - eta),
        })
    }

    /// Additive Gaussian noise: X = I, Y = delta I.
    pub fn additive_noise(n: usize, delta: f64) -> Result<Self> {
        if delta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "additive noise must be nonnegative, got {delta}"
            )));
        }
        Ok(Self {
            x: DMatrix::identity(2 * n, 2 * n),
            y: DMatrix::identity(2 * n, 2 * n) * delta,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.x.nrows() / 2
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    /// Complete-positivity diagnostics at tolerance `tol`.
    pub fn validity(&self, tol: f64) -> ChannelValidity {
        let om = omega_matrix(self.x.nrows());
        let imag = &om - &self.x * &om * self.x.transpose();
        let min = linalg::hermitian_min_eigenvalue(&self.y, &imag);
        ChannelValidity {
            min_cp_eig: min,
            valid: min >= -tol,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.validity(CHANNEL_TOL).valid
    }

    /// Applies the channel to a state. Rejects invalid channels so the
    /// output always satisfies the uncertainty relation.
    pub fn apply(&self, state: &GaussianState) -> Result<GaussianState> {
        let rep = self.validity(CHANNEL_TOL);
        if !rep.valid {
            return Err(Error::InvalidChannel(rep.min_cp_eig));
        }
        let dim = 2 * state.n_modes();
        if self.x.nrows() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.x.nrows(),
            });
        }
        Ok(GaussianState::from_parts_unchecked(
            &self.x * state.mean(),
            linalg::symmetrize(&(&self.x * state.cov() * self.x.transpose() + &self.y)),
        ))
    }

    /// Composition self after `first`: (X2 X1, X2 Y1 X2^T + Y2).
    pub fn compose(&self, first: &Self) -> Result<Self> {
        if self.x.nrows() != first.x.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.x.nrows(),
                found: first.x.nrows(),
            });
        }
        Ok(Self {
            x: &self.x * &first.x,
            y: linalg::symmetrize(&(&self.x * &first.y * self.x.transpose() + &self.y)),
        })
    }

    /// The dual map, defined for invertible X: X* = X^{-1},
    /// Y* = X^{-1} Y X^{-T}, with Tr[Phi*(rho)] = 1 / |det X|.
    pub fn dual(&self) -> Result<DualChannel> {
        let svd = self.x.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin <= smax * 1e-12 || smin == 0.0 {
            return Err(Error::Singular(format!(
                "dual map undefined: X condition number {:.3e}",
                smax / smin.max(f64::MIN_POSITIVE)
            )));
        }
        let x_inv = self
            .x
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular("X not invertible".into()))?;
        let y_star = linalg::symmetrize(&(&x_inv * &self.y * x_inv.transpose()));
        let det = self.x.determinant().abs();
        Ok(DualChannel {
            x_star: x_inv,
            y_star,
            trace_factor: 1.0 / det,
        })
    }

    /// Synthesizes a symplectic dilation on system + 2n vacuum environment
    /// modes whose reduction reproduces this channel. `epsilon` regularizes
    /// a singular Y (see [`DILATION_EPSILON`]).
    pub fn dilate(&self, epsilon: f64) -> Result<Dilation> {
        let rep = self.validity(CHANNEL_TOL);
        if !rep.valid {
            return Err(Error::InvalidChannel(rep.min_cp_eig));
        }
        let n = self.n_modes();
        let dim = 2 * n;
        let om = omega_matrix(dim);

        // Regularize Y away from singularity so Y^{-1/2} exists.
        let y_eig = linalg::symmetric_eigenvalues_sorted(&self.y);
        let y_reg = if y_eig[0] < epsilon {
            &self.y + DMatrix::identity(dim, dim) * epsilon
        } else {
            self.y.clone()
        };
        let eig = y_reg.clone().symmetric_eigen();
        let mut sqrt_vals = DVector::<f64>::zeros(dim);
        let mut inv_sqrt_vals = DVector::<f64>::zeros(dim);
        for i in 0..dim {
            let lam = eig.eigenvalues[i];
            if lam <= 0.0 {
                return Err(Error::Singular(format!(
                    "regularized Y has eigenvalue {lam:.3e}; increase epsilon"
                )));
            }
            sqrt_vals[i] = lam.sqrt();
            inv_sqrt_vals[i] = 1.0 / lam.sqrt();
        }
        let v = &eig.eigenvectors;
        let w = linalg::symmetrize(&(v * DMatrix::from_diagonal(&sqrt_vals) * v.transpose()));
        let w_inv =
            linalg::symmetrize(&(v * DMatrix::from_diagonal(&inv_sqrt_vals) * v.transpose()));

        // M = Y^{-1/2} (Omega - X Omega X^T) Y^{-1/2}, canonical pair values
        // d_j <= 1 iff the channel is completely positive.
        let m =
            linalg::antisymmetrize(&(&w_inv * (&om - &self.x * &om * self.x.transpose()) * &w_inv));
        let canon = antisymmetric_canonical_form(&m, 1e-8)?;
        let mut thetas = Vec::with_capacity(n);
        for &d in &canon.pair_values {
            if d > 1.0 + ARCSIN_CLAMP {
                return Err(Error::InvalidChannel(d - 1.0));
            }
            thetas.push(0.5 * d.clamp(0.0, 1.0).asin());
        }

        // Per-pair 2x4 blocks in the environment's xpxp ordering; the block
        // satisfies O_j Omega_2 O_j^T = sin(2 theta_j) omega with
        // orthonormal rows.
        let env_dim = 4 * n;
        let mut o_paired = DMatrix::<f64>::zeros(dim, env_dim);
        for (j, theta) in thetas.iter().enumerate() {
            let (c, s) = (theta.cos(), theta.sin());
            let block = DMatrix::from_row_slice(2, 4, &[c, 0.0, 0.0, -s, 0.0, s, c, 0.0]);
            o_paired.view_mut((2 * j, 4 * j), (2, 4)).copy_from(&block);
        }
        // Undo the canonical rotation (two-block ordering -> paired pairs).
        let r_paired = interleaving_permutation(n) * &canon.rotation;
        let o = r_paired.transpose() * o_paired;
        let b = &w * o;

        let mut top = DMatrix::<f64>::zeros(dim, dim + env_dim);
        top.view_mut((0, 0), (dim, dim)).copy_from(&self.x);
        top.view_mut((0, dim), (dim, env_dim)).copy_from(&b);
        let s = symplectic_complete(&top, 1e-6)?;
        Ok(Dilation { s, n_system: n })
    }
}

/// The dual of a Gaussian CP-map, exposed as its action on moments plus the
/// scalar trace factor 1 / |det X|.
#[derive(Debug, Clone, PartialEq)]
pub struct DualChannel {
    pub x_star: DMatrix<f64>,
    pub y_star: DMatrix<f64>,
    pub trace_factor: f64,
}

impl DualChannel {
    /// Moments of Phi*(rho) as a normalized Gaussian: (X* mean,
    /// X* sigma X*^T + Y*). The operator itself carries the extra weight
    /// [`Self::trace_factor`].
    pub fn apply_moments(&self, state: &GaussianState) -> Result<GaussianState> {
        let dim = 2 * state.n_modes();
        if self.x_star.nrows() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.x_star.nrows(),
            });
        }
        Ok(GaussianState::from_parts_unchecked(
            &self.x_star * state.mean(),
            linalg::symmetrize(
                &(&self.x_star * state.cov() * self.x_star.transpose() + &self.y_star),
            ),
        ))
    }

    /// sigma_m* = X* sigma_m X*^T + Y*, the effective measurement covariance
    /// of a noisy general-dyne detector.
    pub fn effective_measurement_cov(&self, sigma_m: &DMatrix<f64>) -> DMatrix<f64> {
        linalg::symmetrize(&(&self.x_star * sigma_m * self.x_star.transpose() + &self.y_star))
    }
}

/// A symplectic dilation of a Gaussian channel: S acts on system (n modes)
/// plus a vacuum environment of 2n modes; the top blocks are (X, B) with
/// B B^T = Y.
#[derive(Debug, Clone)]
pub struct Dilation {
    s: DMatrix<f64>,
    n_system: usize,
}

impl Dilation {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn n_system_modes(&self) -> usize {
        self.n_system
    }

    pub fn n_environment_modes(&self) -> usize {
        2 * self.n_system
    }

    /// Top-left block (equals the channel's X).
    pub fn x_block(&self) -> DMatrix<f64> {
        let d = 2 * self.n_system;
        self.s.view((0, 0), (d, d)).into_owned()
    }

    /// Top-right block B with B B^T = Y.
    pub fn b_block(&self) -> DMatrix<f64> {
        let d = 2 * self.n_system;
        self.s.view((0, d), (d, 2 * d)).into_owned()
    }

    /// Max-norm residual of S Omega S^T - Omega.
    pub fn symplectic_residual(&self) -> f64 {
        symplectic_residual(&self.s).unwrap_or(f64::INFINITY)
    }

    /// Applies the dilation: embeds the state with a vacuum environment,
    /// evolves by S by congruence, and traces the environment back out.
    pub fn apply(&self, state: &GaussianState) -> Result<GaussianState> {
        if state.n_modes() != self.n_system {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.n_system,
                found: 2 * state.n_modes(),
            });
        }
        let env = GaussianState::vacuum(self.n_environment_modes())?;
        let joint = state.tensor(&env);
        let mean = &self.s * joint.mean();
        let cov = linalg::symmetrize(&(&self.s * joint.cov() * self.s.transpose()));
        let big = GaussianState::from_parts_unchecked(mean, cov);
        let keep: Vec<usize> = (0..self.n_system).collect();
        big.partial_trace(&keep)
    }
}
