//! General-dyne measurements: measurement covariance matrices, detector
//! noise through dual channels, conditional moment updates, outcome
//! statistics and sampling.
//!
//! Homodyne detection is available in two flavours. The finite constructor
//! [`GeneralDyneMeasurement::homodyne`] uses sigma_m = diag(s, 1/s) with a
//! small squeezing parameter (default 1e-8), which keeps every operation on
//! one code path. [`GeneralDyneMeasurement::homodyne_ideal`] represents the
//! exact s -> 0 limit instead; it supports everything the filtering layer
//! needs (the limit of the bath precision matrix exists and is computed in
//! closed form), while density-based operations require a finite sigma_m.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::DualChannel;
use crate::error::{Error, Result};
use crate::linalg;
use crate::state::GaussianState;
use crate::symplectic::{omega_matrix, psd_sqrt};

/// Default squeezing parameter for finite homodyne measurements.
pub const HOMODYNE_DEFAULT_S: f64 = 1e-8;

/// Tolerance at which measurement covariances are accepted as physical.
pub const MEASUREMENT_TOL: f64 = 1e-9;

/// Which quadrature a homodyne detector reads out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    X,
    P,
}

impl Quadrature {
    pub fn conjugate(self) -> Self {
        match self {
            Quadrature::X => Quadrature::P,
            Quadrature::P => Quadrature::X,
        }
    }
}

/// Detector-noise model applied on top of the bare measurement, realized as
/// the dual of a Gaussian CP-map acting on the measurement operators.
#[derive(Debug, Clone, PartialEq)]
pub enum DetectorNoise {
    /// Noiseless detector.
    None,
    /// Loss with efficiency eta in (0, 1]:
    /// sigma_m* = sigma_m / eta + (1 - eta)/eta I.
    Efficiency(f64),
    /// Additive (dark) noise: sigma_m* = sigma_m + delta I.
    DarkNoise(f64),
    /// Explicit dual pair (X*, Y*): sigma_m* = X* sigma_m X*^T + Y*.
    Dual(DualChannel),
}

#[derive(Debug, Clone, PartialEq)]
enum MeasurementBase {
    /// Finite measurement covariance matrix.
    Covariance(DMatrix<f64>),
    /// Exact homodyne limit: every mode reads out the given quadrature.
    IdealQuadrature(Quadrature),
}

/// A general-dyne measurement on m modes.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralDyneMeasurement {
    modes: usize,
    base: MeasurementBase,
    noise: DetectorNoise,
}

/// A sampled general-dyne outcome with its log probability density.
#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    pub value: DVector<f64>,
    pub log_density: f64,
}

impl GeneralDyneMeasurement {
    /// Heterodyne detection: sigma_m = I (projection on coherent states).
    pub fn heterodyne(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("need at least one mode".into()));
        }
        Ok(Self {
            modes: m,
            base: MeasurementBase::Covariance(DMatrix::identity(2 * m, 2 * m)),
            noise: DetectorNoise::None,
        })
    }

    /// Finite-squeezing homodyne of the given quadrature on every mode:
    /// per mode diag(s, 1/s) for X, diag(1/s, s) for P.
    pub fn homodyne(m: usize, quadrature: Quadrature, s: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("need at least one mode".into()));
        }
        if s <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "homodyne squeezing parameter must be positive, got {s}"
            )));
        }
        let mut diag = DVector::<f64>::zeros(2 * m);
        for j in 0..m {
            let (vx, vp) = match quadrature {
                Quadrature::X => (s, 1.0 / s),
                Quadrature::P => (1.0 / s, s),
            };
            diag[2 * j] = vx;
            diag[2 * j + 1] = vp;
        }
        Ok(Self {
            modes: m,
            base: MeasurementBase::Covariance(DMatrix::from_diagonal(&diag)),
            noise: DetectorNoise::None,
        })
    }

    /// Exact homodyne limit of the given quadrature on every mode.
    pub fn homodyne_ideal(m: usize, quadrature: Quadrature) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("need at least one mode".into()));
        }
        Ok(Self {
            modes: m,
            base: MeasurementBase::IdealQuadrature(quadrature),
            noise: DetectorNoise::None,
        })
    }

    /// Custom measurement covariance; must satisfy sigma_m + i Omega >= 0.
    /// Purity is not required (noisy measurements are allowed).
    pub fn custom(sigma_m: DMatrix<f64>) -> Result<Self> {
        let m = linalg::check_phase_space(&sigma_m)?;
        let sym = linalg::checked_symmetric(&sigma_m, 1e-8)?;
        let min = linalg::hermitian_min_eigenvalue(&sym, &omega_matrix(2 * m));
        if min < -MEASUREMENT_TOL {
            return Err(Error::UncertaintyViolation(min));
        }
        Ok(Self {
            modes: m,
            base: MeasurementBase::Covariance(sym),
            noise: DetectorNoise::None,
        })
    }

    /// Sets the noise model to detector efficiency eta in (0, 1],
    /// replacing any previously attached model.
    pub fn with_efficiency(mut self, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "efficiency must lie in (0, 1], got {eta}"
            )));
        }
        self.noise = DetectorNoise::Efficiency(eta);
        Ok(self)
    }

    /// Sets the noise model to additive dark noise delta >= 0, replacing
    /// any previously attached model.
    pub fn with_dark_noise(mut self, delta: f64) -> Result<Self> {
        if delta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "dark noise must be nonnegative, got {delta}"
            )));
        }
        self.noise = DetectorNoise::DarkNoise(delta);
        Ok(self)
    }

    /// Sets the noise model to an explicit dual map, replacing any
    /// previously attached model.
    pub fn with_dual_noise(mut self, dual: DualChannel) -> Result<Self> {
        let dim = 2 * self.modes;
        if dual.x_star.nrows() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: dual.x_star.nrows(),
            });
        }
        self.noise = DetectorNoise::Dual(dual);
        Ok(self)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn noise(&self) -> &DetectorNoise {
        &self.noise
    }

    /// True for the exact homodyne-limit variant.
    pub fn is_ideal(&self) -> bool {
        matches!(self.base, MeasurementBase::IdealQuadrature(_))
    }

    /// Effective measurement covariance sigma_m* including detector noise.
    /// The ideal homodyne limit has no finite sigma_m*.
    pub fn effective_covariance(&self) -> Result<DMatrix<f64>> {
        let sigma_m = match &self.base {
            MeasurementBase::Covariance(c) => c,
            MeasurementBase::IdealQuadrature(_) => {
                return Err(Error::Unsupported(
                    "ideal homodyne limit has no finite measurement covariance; \
                     use a finite squeezing parameter"
                        .into(),
                ))
            }
        };
        let dim = 2 * self.modes;
        Ok(match &self.noise {
            DetectorNoise::None => sigma_m.clone(),
            DetectorNoise::Efficiency(eta) => {
                sigma_m / *eta + DMatrix::identity(dim, dim) * ((1.0 - eta) / eta)
            }
            DetectorNoise::DarkNoise(delta) => sigma_m + DMatrix::identity(dim, dim) * *delta,
            DetectorNoise::Dual(dual) => dual.effective_measurement_cov(sigma_m),
        })
    }

    /// Inverse (and its PSD square root) of sigma_B + sigma_m*, the kernel
    /// entering both conditional updates and the filtering equations.
    ///
    /// For ideal homodyne the limit is taken in closed form: diverging
    /// directions U (the anti-measured quadratures, transported through the
    /// noise map) are projected out of (sigma_B + F)^{-1}, where F is the
    /// finite noise floor.
    pub fn bath_precision(&self, sigma_b: &DMatrix<f64>) -> Result<BathPrecision> {
        let dim = 2 * self.modes;
        if sigma_b.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: sigma_b.nrows(),
            });
        }
        let sigma_b = linalg::checked_symmetric(sigma_b, 1e-8)?;
        match &self.base {
            MeasurementBase::Covariance(_) => {
                let g = &sigma_b + self.effective_covariance()?;
                let p = linalg::spd_inverse(&g)?;
                let sqrt_p = psd_sqrt(&p)?;
                Ok(BathPrecision { p, sqrt_p })
            }
            MeasurementBase::IdealQuadrature(q) => {
                // Finite noise floor F and diverging directions U.
                let (f, u) = match &self.noise {
                    DetectorNoise::None => (DMatrix::zeros(dim, dim), self.raw_divergent(*q)),
                    DetectorNoise::Efficiency(eta) => (
                        DMatrix::identity(dim, dim) * ((1.0 - eta) / eta),
                        self.raw_divergent(*q),
                    ),
                    DetectorNoise::DarkNoise(delta) => {
                        (DMatrix::identity(dim, dim) * *delta, self.raw_divergent(*q))
                    }
                    DetectorNoise::Dual(dual) => {
                        let u0 = self.raw_divergent(*q);
                        let mapped = &dual.x_star * u0;
                        // Re-orthonormalize the transported directions.
                        let qr = mapped.qr();
                        (dual.y_star.clone(), qr.q())
                    }
                };
                let g0 = &sigma_b + f;
                let g0_inv = linalg::spd_inverse(&g0)?;
                let t = &g0_inv * &u;
                let small = linalg::symmetrize(&(u.transpose() * &t));
                let small_inv = linalg::spd_inverse(&small)?;
                let p = linalg::symmetrize(&(&g0_inv - &t * small_inv * t.transpose()));
                let sqrt_p = psd_sqrt(&p)?;
                Ok(BathPrecision { p, sqrt_p })
            }
        }
    }

    /// Unit vectors of the quadratures whose variance diverges in the ideal
    /// limit (the conjugates of the measured ones).
    fn raw_divergent(&self, measured: Quadrature) -> DMatrix<f64> {
        let dim = 2 * self.modes;
        let mut u = DMatrix::<f64>::zeros(dim, self.modes);
        for j in 0..self.modes {
            let row = match measured.conjugate() {
                Quadrature::X => 2 * j,
                Quadrature::P => 2 * j + 1,
            };
            u[(row, j)] = 1.0;
        }
        u
    }
}

/// Inverse of sigma_B + sigma_m* together with its PSD square root.
#[derive(Debug, Clone)]
pub struct BathPrecision {
    pub p: DMatrix<f64>,
    pub sqrt_p: DMatrix<f64>,
}

/// Partition bookkeeping for conditioning a state on measured modes.
struct Partition {
    kept: Vec<usize>,
    measured: Vec<usize>,
}

fn partition(state: &GaussianState, measured: &[usize], m: usize) -> Result<Partition> {
    let n = state.n_modes();
    if measured.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: measured.len(),
        });
    }
    let mut flags = vec![false; n];
    for &k in measured {
        if k >= n {
            return Err(Error::ModeOutOfRange { index: k, modes: n });
        }
        if flags[k] {
            return Err(Error::InvalidParameter(format!("duplicate mode index {k}")));
        }
        flags[k] = true;
    }
    let kept: Vec<usize> = (0..n).filter(|i| !flags[*i]).collect();
    Ok(Partition {
        kept,
        measured: measured.to_vec(),
    })
}

fn phase_indices(modes: &[usize]) -> Vec<usize> {
    modes.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect()
}

fn gather_vector(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

fn gather_matrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Conditions `state` on observing `outcome` from a general-dyne measurement
/// of the listed modes. Returns the post-measurement state on the kept modes
/// and the log of the outcome probability density.
///
/// Covariance update: sigma_A - sigma_AB (sigma_B + sigma_m*)^{-1} sigma_AB^T;
/// the update of the covariance is independent of the outcome.
pub fn condition(
    state: &GaussianState,
    measured: &[usize],
    meas: &GeneralDyneMeasurement,
    outcome: &DVector<f64>,
) -> Result<(GaussianState, f64)> {
    let part = partition(state, measured, meas.modes())?;
    if part.kept.is_empty() {
        return Err(Error::InvalidParameter(
            "conditioning must leave at least one unmeasured mode".into(),
        ));
    }
    if outcome.len() != 2 * meas.modes() {
        return Err(Error::DimensionMismatch {
            expected: 2 * meas.modes(),
            found: outcome.len(),
        });
    }
    let ia = phase_indices(&part.kept);
    let ib = phase_indices(&part.measured);
    let sigma_a = gather_matrix(state.cov(), &ia, &ia);
    let sigma_b = gather_matrix(state.cov(), &ib, &ib);
    let sigma_ab = gather_matrix(state.cov(), &ia, &ib);
    let mean_a = gather_vector(state.mean(), &ia);
    let mean_b = gather_vector(state.mean(), &ib);

    let sigma_m_star = meas.effective_covariance()?;
    let g = &sigma_b + &sigma_m_star;
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("sigma_B + sigma_m* not positive definite".into()))?;

    let innov = outcome - &mean_b;
    let gain = chol.solve(&sigma_ab.transpose()).transpose();
    let new_cov = linalg::symmetrize(&(&sigma_a - &gain * sigma_ab.transpose()));
    let new_mean = &mean_a + &gain * &innov;

    let m = meas.modes() as f64;
    let quad = innov.dot(&chol.solve(&innov));
    let log_density = -quad - m * std::f64::consts::PI.ln() - 0.5 * chol.determinant().ln();

    Ok((
        GaussianState::from_parts_unchecked(new_mean, new_cov),
        log_density,
    ))
}

/// Parameters of the Gaussian outcome distribution: mean r'_B and
/// conventional covariance (sigma_B + sigma_m*) / 2.
pub fn outcome_distribution(
    state: &GaussianState,
    measured: &[usize],
    meas: &GeneralDyneMeasurement,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let part = partition(state, measured, meas.modes())?;
    let ib = phase_indices(&part.measured);
    let sigma_b = gather_matrix(state.cov(), &ib, &ib);
    let mean_b = gather_vector(state.mean(), &ib);
    let cov = (sigma_b + meas.effective_covariance()?) * 0.5;
    Ok((mean_b, cov))
}

/// Draws one outcome from the general-dyne distribution; deterministic for a
/// given generator state.
pub fn sample_outcome(
    state: &GaussianState,
    measured: &[usize],
    meas: &GeneralDyneMeasurement,
    rng: &mut impl Rng,
) -> Result<MeasurementOutcome> {
    let (mean, cov) = outcome_distribution(state, measured, meas)?;
    // The density kernel is (sigma_B + sigma_m*)^{-1} = (2 cov)^{-1}.
    let g = &cov * 2.0;
    let gchol = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("outcome covariance not positive definite".into()))?;
    let chol = cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("outcome covariance not positive definite".into()))?;
    let dim = mean.len();
    let z = DVector::from_fn(dim, |_, _| StandardNormal.sample(rng));
    let value = &mean + chol.l() * z;

    let innov = &value - &mean;
    let m = meas.modes() as f64;
    let log_density = -innov.dot(&gchol.solve(&innov))
        - m * std::f64::consts::PI.ln()
        - 0.5 * gchol.determinant().ln();
    Ok(MeasurementOutcome { value, log_density })
}
