//! Conditional (monitored) Gaussian dynamics: filter matrices, the
//! deterministic Riccati flow of the covariance, steady-state solutions with
//! stabilizing-solution certification, and stochastic first-moment
//! trajectories with their measurement currents.
//!
//! Wiener convention: each increment component has variance dt/2,
//! matching the anticommutator normalization of the covariance matrices
//! (<{dw, dw^T}> = I dt). This differs from the customary <dw^2> = dt; all
//! sampling in this module draws Normal(0, dt/2) per component.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dynamics::{DiffusiveModel, INTEGRATION_VALIDITY_TOL};
use crate::error::{Error, Result};
use crate::linalg;
use crate::measurement::GeneralDyneMeasurement;
use crate::state::GaussianState;
use crate::symplectic::omega_matrix;

/// Convergence threshold on the max-norm of the Riccati right-hand side.
pub const RICCATI_RESIDUAL_TOL: f64 = 1e-12;

/// Certification tolerance for steady states: A sigma + sigma A^T + D and
/// sigma + i Omega must both be bounded below by -this.
pub const CERTIFICATION_TOL: f64 = 1e-8;

/// A diffusive model whose bath modes undergo continuous general-dyne
/// detection.
#[derive(Debug, Clone)]
pub struct MonitoredModel {
    model: DiffusiveModel,
    measurement: GeneralDyneMeasurement,
}

impl MonitoredModel {
    pub fn new(model: DiffusiveModel, measurement: GeneralDyneMeasurement) -> Result<Self> {
        if measurement.modes() != model.bath_modes() {
            return Err(Error::DimensionMismatch {
                expected: model.bath_modes(),
                found: measurement.modes(),
            });
        }
        Ok(Self { model, measurement })
    }

    pub fn model(&self) -> &DiffusiveModel {
        &self.model
    }

    pub fn measurement(&self) -> &GeneralDyneMeasurement {
        &self.measurement
    }

    /// Assembles the filter matrices for this monitored model.
    pub fn filter_matrices(&self) -> Result<FilterMatrices> {
        filter_matrices(self)
    }

    /// Right-hand side of the Riccati covariance equation at `sigma`.
    pub fn riccati_rhs(&self, sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(self.filter_matrices()?.riccati_rhs(sigma))
    }
}

/// The matrices of the monitored covariance flow
/// d sigma/dt = A~ sigma + sigma A~^T + D~ - sigma B B^T sigma, together
/// with the pieces of the equivalent physical parametrization
/// A sigma + sigma A^T + D - E P E^T with E = Omega C sigma_B - sigma C Omega.
#[derive(Debug, Clone)]
pub struct FilterMatrices {
    a: DMatrix<f64>,
    d: DMatrix<f64>,
    a_tilde: DMatrix<f64>,
    d_tilde: DMatrix<f64>,
    b: DMatrix<f64>,
    /// Omega C sigma_B.
    k_noise: DMatrix<f64>,
    /// C Omega.
    k_state: DMatrix<f64>,
    /// (sigma_B + sigma_m*)^{-1} and its PSD square root.
    precision: DMatrix<f64>,
    sqrt_precision: DMatrix<f64>,
}

impl FilterMatrices {
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn a_tilde(&self) -> &DMatrix<f64> {
        &self.a_tilde
    }

    pub fn d_tilde(&self) -> &DMatrix<f64> {
        &self.d_tilde
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    /// Covariance-dependent gain (Omega C sigma_B - sigma C Omega)
    /// (sigma_B + sigma_m*)^{-1/2} driving the first-moment diffusion.
    pub fn gain(&self, sigma: &DMatrix<f64>) -> DMatrix<f64> {
        (&self.k_noise - sigma * &self.k_state) * &self.sqrt_precision
    }

    /// Riccati right-hand side in the physical parametrization.
    pub fn riccati_rhs(&self, sigma: &DMatrix<f64>) -> DMatrix<f64> {
        let half = (&self.k_noise - sigma * &self.k_state) * &self.sqrt_precision;
        linalg::symmetrize(
            &(&self.a * sigma + sigma * self.a.transpose() + &self.d - &half * half.transpose()),
        )
    }

    /// Riccati right-hand side assembled from (A~, D~, B); equal to
    /// [`Self::riccati_rhs`] up to roundoff.
    pub fn riccati_rhs_filtered(&self, sigma: &DMatrix<f64>) -> DMatrix<f64> {
        let sb = sigma * &self.b;
        linalg::symmetrize(
            &(&self.a_tilde * sigma + sigma * self.a_tilde.transpose() + &self.d_tilde
                - &sb * sb.transpose()),
        )
    }
}

/// Builds the filter matrices:
/// A~ = A - Omega C sigma_B P Omega C^T,
/// D~ = D + Omega C sigma_B P sigma_B C^T Omega,
/// B  = C Omega sqrt(P), with P = (sigma_B + sigma_m*)^{-1}.
pub fn filter_matrices(mm: &MonitoredModel) -> Result<FilterMatrices> {
    let model = &mm.model;
    let dd = model.drift_diffusion();
    let om_n = omega_matrix(2 * model.n_modes());
    let om_m = omega_matrix(2 * model.bath_modes());
    let k_noise = &om_n * model.coupling() * model.bath_cov();
    let k_state = model.coupling() * &om_m;
    let prec = mm.measurement.bath_precision(model.bath_cov())?;

    // Omega_m C^T = -(C Omega_m)^T and sigma_B C^T Omega_n = -(Omega_n C sigma_B)^T.
    let a_tilde = dd.a() + &k_noise * &prec.p * k_state.transpose();
    let d_tilde = linalg::symmetrize(&(dd.d() - &k_noise * &prec.p * k_noise.transpose()));
    let b = &k_state * &prec.sqrt_p;

    Ok(FilterMatrices {
        a: dd.a().clone(),
        d: dd.d().clone(),
        a_tilde,
        d_tilde,
        b,
        k_noise,
        k_state,
        precision: prec.p,
        sqrt_precision: prec.sqrt_p,
    })
}

/// Integrates the Riccati covariance flow with fixed-step RK4 and per-step
/// symmetrization, returning (t, sigma) at every step.
pub fn evolve_conditional_cov(
    mm: &MonitoredModel,
    sigma0: &DMatrix<f64>,
    duration: f64,
    dt: f64,
) -> Result<Vec<(f64, DMatrix<f64>)>> {
    let fm = mm.filter_matrices()?;
    let path = integrate_covariance(&fm, sigma0, duration, dt)?;
    Ok(path.times.into_iter().zip(path.covs).collect())
}

struct CovariancePath {
    times: Vec<f64>,
    covs: Vec<DMatrix<f64>>,
}

fn integrate_covariance(
    fm: &FilterMatrices,
    sigma0: &DMatrix<f64>,
    duration: f64,
    dt: f64,
) -> Result<CovariancePath> {
    let dim = fm.a.nrows();
    if sigma0.shape() != (dim, dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: sigma0.nrows(),
        });
    }
    if !dt.is_finite() || dt <= 0.0 || !duration.is_finite() || duration < 0.0 {
        return Err(Error::InvalidParameter(
            "duration must be nonnegative and dt positive".into(),
        ));
    }
    let steps = (duration / dt).round().max(0.0) as usize;
    let guard_every = (steps / 64).max(1);
    let om = omega_matrix(dim);

    let mut sigma = linalg::symmetrize(sigma0);
    let mut times = Vec::with_capacity(steps + 1);
    let mut covs = Vec::with_capacity(steps + 1);
    times.push(0.0);
    covs.push(sigma.clone());
    for step in 0..steps {
        sigma = riccati_rk4_step(fm, &sigma, dt);
        let t = (step + 1) as f64 * dt;
        if (step + 1).is_multiple_of(guard_every) || step + 1 == steps {
            if !sigma.iter().all(|x| x.is_finite()) {
                return Err(Error::StepRejected {
                    t,
                    min_eig: f64::NEG_INFINITY,
                });
            }
            let min = linalg::hermitian_min_eigenvalue(&sigma, &om);
            if min < -INTEGRATION_VALIDITY_TOL {
                return Err(Error::StepRejected { t, min_eig: min });
            }
        }
        times.push(t);
        covs.push(sigma.clone());
    }
    Ok(CovariancePath { times, covs })
}

fn riccati_rk4_step(fm: &FilterMatrices, sigma: &DMatrix<f64>, dt: f64) -> DMatrix<f64> {
    let k1 = fm.riccati_rhs(sigma);
    let k2 = fm.riccati_rhs(&(sigma + &k1 * (dt / 2.0)));
    let k3 = fm.riccati_rhs(&(sigma + &k2 * (dt / 2.0)));
    let k4 = fm.riccati_rhs(&(sigma + &k3 * dt));
    linalg::symmetrize(&(sigma + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)))
}

/// A certified steady state of the monitored dynamics.
#[derive(Debug, Clone)]
pub struct RiccatiSteadyState {
    pub cov: DMatrix<f64>,
    /// Max-norm of the Riccati right-hand side at the returned covariance.
    pub residual: f64,
    /// Min eigenvalue of A sigma + sigma A^T + D (stabilizing solutions
    /// satisfy >= 0).
    pub lyapunov_min_eig: f64,
    /// Min eigenvalue of sigma + i Omega.
    pub uncertainty_min_eig: f64,
}

/// Solves the steady-state Riccati equation by integrating to convergence
/// (max-norm of the right-hand side below [`RICCATI_RESIDUAL_TOL`]), then
/// certifies the stabilizing-solution conditions.
pub fn steady_state_riccati(mm: &MonitoredModel) -> Result<RiccatiSteadyState> {
    let fm = mm.filter_matrices()?;
    let dim = fm.a.nrows();

    if linalg::max_abs(&fm.b) < 1e-14 {
        // No information gain: the flow is the plain Lyapunov equation and
        // needs a Hurwitz drift.
        let max_re = fm
            .a_tilde
            .complex_eigenvalues()
            .iter()
            .fold(f64::NEG_INFINITY, |acc, z| acc.max(z.re));
        if max_re >= -crate::dynamics::HURWITZ_TOL {
            return Err(Error::Unstable(max_re));
        }
    }

    let scale = linalg::max_abs(&fm.a_tilde)
        .max(linalg::max_abs(&fm.d_tilde))
        .max(linalg::max_abs(&(&fm.b * fm.b.transpose())))
        .max(1.0);
    let mut dt = 0.05 / scale;
    let max_steps = 4_000_000usize;
    let block = 128usize;

    'restart: for _attempt in 0..8 {
        let mut sigma = DMatrix::<f64>::identity(dim, dim);
        let mut steps = 0usize;
        while steps < max_steps {
            for _ in 0..block {
                sigma = riccati_rk4_step(&fm, &sigma, dt);
            }
            steps += block;
            if !sigma.iter().all(|x| x.is_finite()) || linalg::max_abs(&sigma) > 1e9 {
                dt *= 0.25;
                continue 'restart;
            }
            let resid = linalg::max_abs(&fm.riccati_rhs(&sigma));
            if resid < RICCATI_RESIDUAL_TOL {
                return certify(&fm, sigma, resid);
            }
        }
        return Err(Error::NoConvergence(format!(
            "Riccati residual still {:.3e} after {} steps",
            linalg::max_abs(&fm.riccati_rhs(&sigma)),
            steps
        )));
    }
    Err(Error::NoConvergence(
        "Riccati integration kept diverging while shrinking dt".into(),
    ))
}

fn certify(fm: &FilterMatrices, sigma: DMatrix<f64>, resid: f64) -> Result<RiccatiSteadyState> {
    let dim = fm.a.nrows();
    let om = omega_matrix(dim);
    let lyap = linalg::symmetrize(&(&fm.a * &sigma + &sigma * fm.a.transpose() + &fm.d));
    let lyap_min = linalg::symmetric_eigenvalues_sorted(&lyap)[0];
    let unc_min = linalg::hermitian_min_eigenvalue(&sigma, &om);
    if lyap_min < -CERTIFICATION_TOL || unc_min < -CERTIFICATION_TOL {
        return Err(Error::CertificationFailed {
            lyapunov_min: lyap_min,
            uncertainty_min: unc_min,
        });
    }
    Ok(RiccatiSteadyState {
        cov: sigma,
        residual: resid,
        lyapunov_min_eig: lyap_min,
        uncertainty_min_eig: unc_min,
    })
}

/// One simulated quantum trajectory: conditional means and measurement
/// current on the full time grid, covariance snapshots on a decimated grid.
///
/// `currents[0]` is zero by convention; `currents[i]` for i >= 1 refers to
/// the current integrated over the step ending at `times[i]`.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub means: Vec<DVector<f64>>,
    pub currents: Vec<DVector<f64>>,
    pub cov_snapshots: Vec<(f64, DMatrix<f64>)>,
    pub seed: u64,
    pub stream: u64,
}

/// Simulates one trajectory with the RNG stream 0 of `seed`.
pub fn simulate_trajectory(
    mm: &MonitoredModel,
    state0: &GaussianState,
    duration: f64,
    dt: f64,
    seed: u64,
) -> Result<TrajectoryRecord> {
    simulate_trajectory_stream(mm, state0, duration, dt, seed, 0)
}

/// Simulates one trajectory on an explicit RNG stream, so ensembles can hand
/// each trajectory an independent, reproducible noise sequence.
///
/// Scheme: Euler-Maruyama for the means (d r = A r dt + G(sigma) dw with
/// dw_j ~ Normal(0, dt/2)), RK4 for the noise-free covariance, both on the
/// same grid; the current y dt = -B^T r dt + dw is recorded per step.
pub fn simulate_trajectory_stream(
    mm: &MonitoredModel,
    state0: &GaussianState,
    duration: f64,
    dt: f64,
    seed: u64,
    stream: u64,
) -> Result<TrajectoryRecord> {
    let fm = mm.filter_matrices()?;
    let path = integrate_covariance(&fm, state0.cov(), duration, dt)?;
    let steps = path.times.len() - 1;
    let snap_stride = (steps / 128).max(1);

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);

    let dim = fm.a.nrows();
    let bath_dim = fm.b.ncols();
    let noise_sd = (dt / 2.0).sqrt();

    let mut r = state0.mean().clone();
    let mut means = Vec::with_capacity(steps + 1);
    let mut currents = Vec::with_capacity(steps + 1);
    let mut snapshots = Vec::new();
    means.push(r.clone());
    currents.push(DVector::zeros(bath_dim));
    snapshots.push((0.0, path.covs[0].clone()));

    for i in 0..steps {
        let gain = fm.gain(&path.covs[i]);
        let dw = DVector::from_fn(bath_dim, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * noise_sd
        });
        let y = -(fm.b.transpose() * &r) + &dw / dt;
        r = &r + &fm.a * &r * dt + gain * &dw;
        means.push(r.clone());
        currents.push(y);
        if (i + 1).is_multiple_of(snap_stride) || i + 1 == steps {
            snapshots.push((path.times[i + 1], path.covs[i + 1].clone()));
        }
    }
    debug_assert_eq!(dim, r.len());
    Ok(TrajectoryRecord {
        times: path.times,
        means,
        currents,
        cov_snapshots: snapshots,
        seed,
        stream,
    })
}

/// Ensemble reduction over checkpoints: conditional covariance, mean of the
/// conditional means and their sample covariance.
#[derive(Debug, Clone)]
pub struct EnsembleSummary {
    pub times: Vec<f64>,
    pub mean_of_means: Vec<DVector<f64>>,
    pub cov_of_means: Vec<DMatrix<f64>>,
    pub conditional_cov: Vec<DMatrix<f64>>,
    pub trajectories: usize,
}

/// Runs `trajectories` independent trajectories (streams 0..trajectories of
/// `seed`) and reduces them at `checkpoints` evenly spaced grid points.
/// Trajectory workers run in parallel; the reduction is pairwise in index
/// order, so results are independent of scheduling.
pub fn simulate_ensemble(
    mm: &MonitoredModel,
    state0: &GaussianState,
    duration: f64,
    dt: f64,
    seed: u64,
    trajectories: usize,
    checkpoints: usize,
) -> Result<EnsembleSummary> {
    if trajectories == 0 || checkpoints == 0 {
        return Err(Error::InvalidParameter(
            "need at least one trajectory and one checkpoint".into(),
        ));
    }
    let fm = mm.filter_matrices()?;
    let path = integrate_covariance(&fm, state0.cov(), duration, dt)?;
    let steps = path.times.len() - 1;
    let checkpoints = checkpoints.min(steps.max(1));
    let check_idx: Vec<usize> = (1..=checkpoints)
        .map(|k| ((k * steps) as f64 / checkpoints as f64).round() as usize)
        .collect();

    // Per-step gains are shared across trajectories.
    let gains: Vec<DMatrix<f64>> = path.covs[..steps].iter().map(|s| fm.gain(s)).collect();
    let bath_dim = fm.b.ncols();
    let noise_sd = (dt / 2.0).sqrt();
    let a = fm.a.clone();

    let mut buffer: Vec<Vec<DVector<f64>>> =
        vec![vec![DVector::zeros(0); check_idx.len()]; trajectories];
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(8)
        .min(trajectories);
    let chunk = trajectories.div_ceil(workers);
    let r0 = state0.mean().clone();

    std::thread::scope(|scope| {
        for (w, slot) in buffer.chunks_mut(chunk).enumerate() {
            let first = w * chunk;
            let gains = &gains;
            let check_idx = &check_idx;
            let a = &a;
            let r0 = &r0;
            scope.spawn(move || {
                for (off, traj) in slot.iter_mut().enumerate() {
                    let mut rng = ChaCha12Rng::seed_from_u64(seed);
                    rng.set_stream((first + off) as u64);
                    let mut r = r0.clone();
                    let mut next_check = 0usize;
                    for (i, gain) in gains.iter().enumerate() {
                        let dw = DVector::from_fn(bath_dim, |_, _| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            z * noise_sd
                        });
                        r = &r + a * &r * dt + gain * &dw;
                        while next_check < check_idx.len() && check_idx[next_check] == i + 1 {
                            traj[next_check] = r.clone();
                            next_check += 1;
                        }
                    }
                }
            });
        }
    });

    let n = trajectories as f64;
    let mut mean_of_means = Vec::with_capacity(check_idx.len());
    let mut cov_of_means = Vec::with_capacity(check_idx.len());
    let mut conditional_cov = Vec::with_capacity(check_idx.len());
    let mut times = Vec::with_capacity(check_idx.len());
    for (k, &idx) in check_idx.iter().enumerate() {
        let column: Vec<DVector<f64>> = buffer.iter().map(|t| t[k].clone()).collect();
        let mean = linalg::pairwise_sum_vectors(&column) / n;
        let devs: Vec<DMatrix<f64>> = column
            .iter()
            .map(|r| {
                let d = r - &mean;
                &d * d.transpose()
            })
            .collect();
        let denom = if trajectories > 1 { n - 1.0 } else { 1.0 };
        let cov = linalg::pairwise_sum_matrices(&devs) / denom;
        times.push(path.times[idx]);
        mean_of_means.push(mean);
        cov_of_means.push(cov);
        conditional_cov.push(path.covs[idx].clone());
    }
    Ok(EnsembleSummary {
        times,
        mean_of_means,
        cov_of_means,
        conditional_cov,
        trajectories,
    })
}

/// Sample mean path and sample covariance path of an ensemble.
pub type EnsemblePaths = (Vec<DVector<f64>>, Vec<DMatrix<f64>>);

/// Pointwise sample mean and sample covariance of the conditional means of
/// a set of trajectory records sharing one grid. Reduction is pairwise in
/// index order.
pub fn ensemble_statistics(records: &[TrajectoryRecord]) -> Result<EnsemblePaths> {
    if records.is_empty() {
        return Err(Error::InvalidParameter("empty ensemble".into()));
    }
    let grid = &records[0].times;
    for r in records {
        if r.times.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: r.times.len(),
            });
        }
    }
    let n = records.len() as f64;
    let denom = if records.len() > 1 { n - 1.0 } else { 1.0 };
    let mut means = Vec::with_capacity(grid.len());
    let mut covs = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let column: Vec<DVector<f64>> = records.iter().map(|r| r.means[i].clone()).collect();
        let mean = linalg::pairwise_sum_vectors(&column) / n;
        let devs: Vec<DMatrix<f64>> = column
            .iter()
            .map(|r| {
                let d = r - &mean;
                &d * d.transpose()
            })
            .collect();
        covs.push(linalg::pairwise_sum_matrices(&devs) / denom);
        means.push(mean);
    }
    Ok((means, covs))
}
