//! Gaussian continuous-variable quantum dynamics in phase space.
//!
//! The crate represents Gaussian states by their first moments and
//! covariance matrix (xpxp ordering, anticommutator convention, vacuum = I)
//! and implements the closed set of operations that preserve Gaussianity:
//!
//! * [`symplectic`] — the symplectic form, symplectic eigenvalues, canonical
//!   forms of antisymmetric matrices, PSD square roots, basis completion;
//! * [`state`] — Gaussian states: validity, purity, characteristic function,
//!   overlaps, marginals and tensor products;
//! * [`unitary`] — symplectic evolutions from quadratic Hamiltonians and
//!   Weyl displacements;
//! * [`channel`] — deterministic Gaussian CP-maps (X, Y), their duals and a
//!   constructive symplectic dilation on a vacuum environment;
//! * [`measurement`] — general-dyne measurements, detector noise via dual
//!   maps, conditional updates, outcome sampling;
//! * [`dynamics`] — unconditional diffusive evolution (drift A, diffusion D)
//!   and Lyapunov steady states;
//! * [`filtering`] — continuously monitored dynamics: the Riccati covariance
//!   flow, certified steady states, stochastic trajectories and ensembles;
//! * [`scenario`] — ready-made models (parametric oscillator, position
//!   scattering) with their closed-form steady states and the TOML config
//!   schema;
//! * [`io`] — record files and CSV output.
//!
//! # Quick start
//!
//! A parametric oscillator at half its instability threshold, continuously
//! monitored through ideal homodyne detection of its x quadrature (which
//! reads out the conjugate quadrature of the scattered bath mode):
//!
//! ```
//! use gaussdyne::filtering::{steady_state_riccati, MonitoredModel};
//! use gaussdyne::scenario::build_opo;
//! use gaussdyne::{GeneralDyneMeasurement, Quadrature};
//!
//! let model = build_opo(0.25, 1.0, 0.0)?;
//! let detection = GeneralDyneMeasurement::homodyne_ideal(1, Quadrature::P)?;
//! let monitored = MonitoredModel::new(model, detection)?;
//!
//! let steady = steady_state_riccati(&monitored)?;
//! // Monitoring squeezes x below the unconditional value 2/3.
//! assert!((steady.cov[(0, 0)] - 0.5).abs() < 1e-9);
//! assert!((steady.cov[(1, 1)] - 2.0).abs() < 1e-9);
//! # Ok::<(), gaussdyne::Error>(())
//! ```

pub mod channel;
pub mod dynamics;
pub mod error;
pub mod filtering;
pub mod io;
mod linalg;
pub mod measurement;
pub mod scenario;
pub mod state;
pub mod symplectic;
#[cfg(test)]
mod testutil;
pub mod unitary;

pub use channel::{Dilation, DualChannel, GaussianChannel};
pub use dynamics::{DiffusiveModel, DriftDiffusion};
pub use error::{Error, Result};
pub use filtering::{
    EnsembleSummary, FilterMatrices, MonitoredModel, RiccatiSteadyState, TrajectoryRecord,
};
pub use measurement::{DetectorNoise, GeneralDyneMeasurement, MeasurementOutcome, Quadrature};
pub use scenario::{Preset, ScenarioConfig};
pub use state::GaussianState;
pub use symplectic::{AntisymmetricCanonicalForm, SymplecticForm};
pub use unitary::{GaussianUnitary, QuadraticHamiltonian};
