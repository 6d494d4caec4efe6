//! Named physical scenarios and their closed-form steady states, plus the
//! TOML configuration schema consumed by the command-line tools.
//!
//! Two presets are built in:
//!
//! * `opo`: an optical parametric oscillator, H_s = -chi/2 (xp + px),
//!   beam-splitter coupling C = sqrt(gamma) I to a thermal bath
//!   sigma_B = (2 n_th + 1) I. Stable (admits an unconditional steady
//!   state) iff chi < gamma/2.
//! * `scattering`: a harmonic mode H_s = omega (x^2 + p^2)/2 coupled through
//!   its position only, C = [[sqrt(2 Gamma), 0], [0, 0]], to a vacuum bath.
//!   The unconditional dynamics never reaches a steady state; monitoring
//!   stabilizes it.
//!
//! Measurement naming in configs refers to the **system** quadrature being
//! monitored: information about a system quadrature is carried by the
//! conjugate quadrature of the scattered bath mode (the coupling enters the
//! filter through Omega), so monitoring x means homodyning the bath's p.
//! By default the exact homodyne limit is used; setting `s` selects the
//! finite-squeezing approximation with measured-quadrature variance `s`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::DiffusiveModel;
use crate::error::{Error, Result};
use crate::measurement::{GeneralDyneMeasurement, Quadrature};

/// OPO stability bound: a steady state exists iff |chi| < gamma / 2.
pub fn opo_is_stable(chi: f64, gamma: f64) -> bool {
    chi.abs() < gamma / 2.0
}

/// Optical parametric oscillator model.
pub fn build_opo(chi: f64, gamma: f64, n_th: f64) -> Result<DiffusiveModel> {
    if gamma <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "damping rate gamma must be positive, got {gamma}"
        )));
    }
    if n_th < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "thermal occupation must be nonnegative, got {n_th}"
        )));
    }
    DiffusiveModel::new(
        DMatrix::from_row_slice(2, 2, &[0.0, -chi, -chi, 0.0]),
        DMatrix::identity(2, 2) * gamma.sqrt(),
        DMatrix::identity(2, 2) * (2.0 * n_th + 1.0),
    )
}

/// Position-scattering model (recoil heating of a trapped oscillator).
pub fn build_scattering(omega: f64, rate: f64) -> Result<DiffusiveModel> {
    if rate < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "scattering rate must be nonnegative, got {rate}"
        )));
    }
    let mut c = DMatrix::<f64>::zeros(2, 2);
    c[(0, 0)] = (2.0 * rate).sqrt();
    DiffusiveModel::new(DMatrix::identity(2, 2) * omega, c, DMatrix::identity(2, 2))
}

fn require_stable(chi: f64, gamma: f64) -> Result<()> {
    if gamma <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "damping rate gamma must be positive, got {gamma}"
        )));
    }
    if !opo_is_stable(chi, gamma) {
        return Err(Error::Unstable(chi.abs() - gamma / 2.0));
    }
    Ok(())
}

/// Unconditional OPO steady state
/// (2 n_th + 1) diag(1/(1 + 2 chi/gamma), 1/(1 - 2 chi/gamma)).
pub fn opo_unconditional_steady_state(chi: f64, gamma: f64, n_th: f64) -> Result<DMatrix<f64>> {
    require_stable(chi, gamma)?;
    let r = 2.0 * chi / gamma;
    let s = 2.0 * n_th + 1.0;
    Ok(DMatrix::from_diagonal(&DVector::from_vec(vec![
        s / (1.0 + r),
        s / (1.0 - r),
    ])))
}

/// Steady state of the OPO under ideal continuous homodyne monitoring of x:
/// diag((gamma - 2 chi)(2 n_th + 1)/gamma, gamma (2 n_th + 1)/(gamma - 2 chi)).
pub fn opo_monitored_steady_state(chi: f64, gamma: f64, n_th: f64) -> Result<DMatrix<f64>> {
    require_stable(chi, gamma)?;
    let s = 2.0 * n_th + 1.0;
    Ok(DMatrix::from_diagonal(&DVector::from_vec(vec![
        (gamma - 2.0 * chi) * s / gamma,
        gamma * s / (gamma - 2.0 * chi),
    ])))
}

/// Steady state of the zero-temperature OPO monitored through a homodyne
/// detector of efficiency eta.
pub fn opo_lossy_steady_state(chi: f64, gamma: f64, eta: f64) -> Result<DMatrix<f64>> {
    require_stable(chi, gamma)?;
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "efficiency must lie in (0, 1], got {eta}"
        )));
    }
    let xx = (gamma * (2.0 * eta - 1.0) - 2.0 * chi
        + ((gamma + 2.0 * chi).powi(2) - 8.0 * eta * gamma * chi).sqrt())
        / (2.0 * eta * gamma);
    Ok(DMatrix::from_diagonal(&DVector::from_vec(vec![
        xx,
        gamma / (gamma - 2.0 * chi),
    ])))
}

/// Steady state of the zero-temperature OPO monitored through a homodyne
/// detector with additive (dark) noise delta.
///
/// Algebra note: the x-quadrature entry solves
/// eta-free quadratic a^2 + a[(1 + 2 chi/gamma)(1 + delta) - 2] - delta = 0,
/// i.e. the denominator is 2 gamma; the delta -> 0 and eta <-> delta
/// substitution limits both confirm it.
pub fn opo_dark_noise_steady_state(chi: f64, gamma: f64, delta: f64) -> Result<DMatrix<f64>> {
    require_stable(chi, gamma)?;
    if delta < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "dark noise must be nonnegative, got {delta}"
        )));
    }
    let xx = (gamma * (1.0 - delta) - 2.0 * chi * (1.0 + delta)
        + (4.0 * gamma * gamma * delta
            + (gamma * (delta - 1.0) + 2.0 * chi * (1.0 + delta)).powi(2))
        .sqrt())
        / (2.0 * gamma);
    Ok(DMatrix::from_diagonal(&DVector::from_vec(vec![
        xx,
        gamma / (gamma - 2.0 * chi),
    ])))
}

// ---------------------------------------------------------------------------
// Configuration schema
// ---------------------------------------------------------------------------

/// Which preset a configuration instantiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Opo,
    Scattering,
    Custom,
}

/// Scenario section: preset selection plus its physical parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub preset: Preset,
    /// OPO pump strength.
    #[serde(default)]
    pub chi: f64,
    /// OPO damping rate.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Thermal occupation of the OPO bath.
    #[serde(default)]
    pub n_th: f64,
    /// Scattering-model trap frequency.
    #[serde(default = "default_gamma")]
    pub omega: f64,
    /// Scattering-model recoil rate.
    #[serde(default = "default_gamma")]
    pub rate: f64,
}

fn default_gamma() -> f64 {
    1.0
}

/// Explicit matrices for `preset = "custom"`, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub modes: usize,
    pub bath_modes: usize,
    pub h_s: Vec<f64>,
    pub c: Vec<f64>,
    pub sigma_b: Vec<f64>,
}

/// Measurement section. `type = "none"` runs unconditional dynamics.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    #[serde(rename = "type")]
    pub kind: MeasurementKind,
    /// Finite homodyne squeezing parameter; omit for the exact limit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    /// Detector efficiency in (0, 1].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<f64>,
    /// Additive dark noise >= 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dark_noise: Option<f64>,
    /// Row-major measurement covariance for `type = "custom"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_m: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementKind {
    None,
    Heterodyne,
    /// Monitor the system's x quadrature (bath p homodyne).
    HomodyneX,
    /// Monitor the system's p quadrature (bath x homodyne).
    HomodyneP,
    Custom,
}

/// Run parameters for simulation and steady-state commands.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_duration() -> f64 {
    10.0
}

fn default_dt() -> f64 {
    1e-3
}

fn default_trajectories() -> usize {
    1
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            duration: default_duration(),
            dt: default_dt(),
            trajectories: default_trajectories(),
            seed: 0,
        }
    }
}

/// Full configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement: Option<MeasurementSection>,
    #[serde(default)]
    pub run: RunSection,
}

/// A configuration resolved into concrete model objects.
#[derive(Debug, Clone)]
pub struct BuiltScenario {
    pub model: DiffusiveModel,
    pub measurement: Option<GeneralDyneMeasurement>,
    pub run: RunSection,
    /// For the OPO: whether the unconditional dynamics admits a steady state.
    pub opo_stable: Option<bool>,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Instantiates the configured model and measurement.
    pub fn build(&self) -> Result<BuiltScenario> {
        let (model, opo_stable) = match self.scenario.preset {
            Preset::Opo => (
                build_opo(self.scenario.chi, self.scenario.gamma, self.scenario.n_th)?,
                Some(opo_is_stable(self.scenario.chi, self.scenario.gamma)),
            ),
            Preset::Scattering => (
                build_scattering(self.scenario.omega, self.scenario.rate)?,
                None,
            ),
            Preset::Custom => {
                let section = self.model.as_ref().ok_or_else(|| {
                    Error::InvalidParameter("custom preset requires a [model] section".into())
                })?;
                let (n, m) = (section.modes, section.bath_modes);
                (
                    DiffusiveModel::new(
                        matrix_from_row_major(&section.h_s, 2 * n, 2 * n)?,
                        matrix_from_row_major(&section.c, 2 * n, 2 * m)?,
                        matrix_from_row_major(&section.sigma_b, 2 * m, 2 * m)?,
                    )?,
                    None,
                )
            }
        };
        let measurement = match &self.measurement {
            None => None,
            Some(section) => build_measurement(section, model.bath_modes())?,
        };
        Ok(BuiltScenario {
            model,
            measurement,
            run: self.run.clone(),
            opo_stable,
        })
    }
}

fn build_measurement(
    section: &MeasurementSection,
    bath_modes: usize,
) -> Result<Option<GeneralDyneMeasurement>> {
    let base = match section.kind {
        MeasurementKind::None => return Ok(None),
        MeasurementKind::Heterodyne => GeneralDyneMeasurement::heterodyne(bath_modes)?,
        // Monitoring a system quadrature homodynes the conjugate bath one.
        MeasurementKind::HomodyneX => match section.s {
            Some(s) => GeneralDyneMeasurement::homodyne(bath_modes, Quadrature::P, s)?,
            None => GeneralDyneMeasurement::homodyne_ideal(bath_modes, Quadrature::P)?,
        },
        MeasurementKind::HomodyneP => match section.s {
            Some(s) => GeneralDyneMeasurement::homodyne(bath_modes, Quadrature::X, s)?,
            None => GeneralDyneMeasurement::homodyne_ideal(bath_modes, Quadrature::X)?,
        },
        MeasurementKind::Custom => {
            let data = section.sigma_m.as_ref().ok_or_else(|| {
                Error::InvalidParameter("custom measurement requires sigma_m".into())
            })?;
            GeneralDyneMeasurement::custom(matrix_from_row_major(
                data,
                2 * bath_modes,
                2 * bath_modes,
            )?)?
        }
    };
    let with_noise = match (section.efficiency, section.dark_noise) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidParameter(
                "specify at most one of efficiency and dark_noise".into(),
            ))
        }
        (Some(eta), None) => base.with_efficiency(eta)?,
        (None, Some(delta)) => base.with_dark_noise(delta)?,
        (None, None) => base,
    };
    Ok(Some(with_noise))
}

pub(crate) fn matrix_from_row_major(
    data: &[f64],
    rows: usize,
    cols: usize,
) -> Result<DMatrix<f64>> {
    if data.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            expected: rows * cols,
            found: data.len(),
        });
    }
    Ok(DMatrix::from_row_slice(rows, cols, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::steady_state_lyapunov;
    use crate::filtering::{steady_state_riccati, MonitoredModel};
    use crate::linalg::max_abs_diff;

    #[test]
    fn opo_preset_matrices() {
        let (chi, gamma) = (0.25, 1.0);
        let dd = build_opo(chi, gamma, 0.0).unwrap().drift_diffusion();
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-0.75, -0.25]));
        assert!(max_abs_diff(dd.a(), &a) < 1e-12);
        assert!(max_abs_diff(dd.d(), &DMatrix::identity(2, 2)) < 1e-12);
        assert!(build_opo(0.1, 0.0, 0.0).is_err());
        assert!(build_opo(0.1, 1.0, -1.0).is_err());
    }

    #[test]
    fn opo_stability_flag() {
        assert!(opo_is_stable(0.25, 1.0));
        assert!(!opo_is_stable(0.6, 1.0));
        assert!(!opo_is_stable(0.5, 1.0));
    }

    #[test]
    fn scattering_preset_matrices() {
        let dd = build_scattering(0.9, 0.7).unwrap().drift_diffusion();
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.9, -0.9, 0.0]);
        let d = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.4]);
        assert!(max_abs_diff(dd.a(), &a) < 1e-12);
        assert!(max_abs_diff(dd.d(), &d) < 1e-12);
        // Gamma = 0 is a closed oscillator.
        let dd0 = build_scattering(1.0, 0.0).unwrap().drift_diffusion();
        assert!(crate::linalg::max_abs(dd0.d()) == 0.0);
    }

    #[test]
    fn closed_forms_match_solvers() {
        let gamma = 1.0;
        for &chi in &[0.0, 0.1, 0.25, 0.4] {
            for &n_th in &[0.0, 1.0] {
                let dd = build_opo(chi, gamma, n_th).unwrap().drift_diffusion();
                let numeric = steady_state_lyapunov(&dd).unwrap();
                let closed = opo_unconditional_steady_state(chi, gamma, n_th).unwrap();
                assert!(max_abs_diff(&numeric, &closed) < 1e-10);
            }
        }
    }

    #[test]
    fn closed_forms_reject_out_of_domain() {
        assert!(opo_unconditional_steady_state(0.5, 1.0, 0.0).is_err());
        assert!(opo_monitored_steady_state(0.55, 1.0, 0.0).is_err());
        assert!(opo_lossy_steady_state(0.25, 1.0, 0.0).is_err());
        assert!(opo_dark_noise_steady_state(0.25, 1.0, -0.5).is_err());
    }

    #[test]
    fn lossy_and_dark_noise_closed_forms_are_equivalent() {
        // delta = 1/eta - 1 maps one family onto the other.
        let (chi, gamma) = (0.3, 1.0);
        for &eta in &[0.25, 0.5, 0.9, 1.0] {
            let lossy = opo_lossy_steady_state(chi, gamma, eta).unwrap();
            let dark = opo_dark_noise_steady_state(chi, gamma, 1.0 / eta - 1.0).unwrap();
            assert!(max_abs_diff(&lossy, &dark) < 1e-12);
        }
        // eta = 1 reduces to the ideal monitored steady state.
        let ideal = opo_monitored_steady_state(chi, gamma, 0.0).unwrap();
        let lossy = opo_lossy_steady_state(chi, gamma, 1.0).unwrap();
        assert!(max_abs_diff(&ideal, &lossy) < 1e-12);
    }

    #[test]
    fn dark_noise_closed_form_matches_riccati() {
        let (chi, gamma, delta) = (0.25, 1.0, 1.5);
        let meas = GeneralDyneMeasurement::homodyne_ideal(1, Quadrature::P)
            .unwrap()
            .with_dark_noise(delta)
            .unwrap();
        let mm = MonitoredModel::new(build_opo(chi, gamma, 0.0).unwrap(), meas).unwrap();
        let ss = steady_state_riccati(&mm).unwrap();
        let closed = opo_dark_noise_steady_state(chi, gamma, delta).unwrap();
        assert!(max_abs_diff(&ss.cov, &closed) < 1e-8);
    }

    #[test]
    fn reference_sweep_against_numerical_solvers() {
        // Closed forms vs the Lyapunov/Riccati solvers over the full
        // parameter grid.
        let gamma = 1.0;
        for &chi in &[0.0, 0.1, 0.25, 0.4, 0.45] {
            for &n_th in &[0.0, 1.0] {
                let model = build_opo(chi, gamma, n_th).unwrap();
                let unc = steady_state_lyapunov(&model.drift_diffusion()).unwrap();
                assert!(
                    max_abs_diff(
                        &unc,
                        &opo_unconditional_steady_state(chi, gamma, n_th).unwrap()
                    ) < 1e-6
                );
                let mm = MonitoredModel::new(
                    model,
                    GeneralDyneMeasurement::homodyne_ideal(1, Quadrature::P).unwrap(),
                )
                .unwrap();
                let mon = steady_state_riccati(&mm).unwrap();
                assert!(
                    max_abs_diff(
                        &mon.cov,
                        &opo_monitored_steady_state(chi, gamma, n_th).unwrap()
                    ) < 1e-6
                );
            }
            for &eta in &[0.25, 0.5, 1.0] {
                let meas = GeneralDyneMeasurement::homodyne_ideal(1, Quadrature::P)
                    .unwrap()
                    .with_efficiency(eta)
                    .unwrap();
                let mm = MonitoredModel::new(build_opo(chi, gamma, 0.0).unwrap(), meas).unwrap();
                let ss = steady_state_riccati(&mm).unwrap();
                assert!(
                    max_abs_diff(&ss.cov, &opo_lossy_steady_state(chi, gamma, eta).unwrap()) < 1e-6,
                    "chi={chi}, eta={eta}"
                );
            }
            for &delta in &[0.0, 1.0, 3.0] {
                let meas = GeneralDyneMeasurement::homodyne_ideal(1, Quadrature::P)
                    .unwrap()
                    .with_dark_noise(delta)
                    .unwrap();
                let mm = MonitoredModel::new(build_opo(chi, gamma, 0.0).unwrap(), meas).unwrap();
                let ss = steady_state_riccati(&mm).unwrap();
                assert!(
                    max_abs_diff(
                        &ss.cov,
                        &opo_dark_noise_steady_state(chi, gamma, delta).unwrap()
                    ) < 1e-6,
                    "chi={chi}, delta={delta}"
                );
            }
        }
    }

    #[test]
    fn config_round_trip_and_build() {
        let text = r#"
[scenario]
preset = "opo"
chi = 0.25
gamma = 1.0
n_th = 0.0

[measurement]
type = "homodyne_x"
efficiency = 0.5

[run]
duration = 5.0
dt = 0.001
trajectories = 3
seed = 42
"#;
        let config = ScenarioConfig::from_toml_str(text).unwrap();
        let rendered = config.to_toml_string().unwrap();
        let reparsed = ScenarioConfig::from_toml_str(&rendered).unwrap();
        assert_eq!(reparsed.scenario.chi, 0.25);
        assert_eq!(reparsed.run.trajectories, 3);

        let built = config.build().unwrap();
        assert_eq!(built.opo_stable, Some(true));
        let meas = built.measurement.unwrap();
        assert!(meas.is_ideal());
        assert_eq!(built.run.seed, 42);
    }

    #[test]
    fn config_rejects_conflicting_noise_models() {
        let text = r#"
[scenario]
preset = "opo"

[measurement]
type = "heterodyne"
efficiency = 0.5
dark_noise = 1.0
"#;
        let config = ScenarioConfig::from_toml_str(text).unwrap();
        match config.build() {
            Err(Error::InvalidParameter(msg)) => {
                assert!(msg.contains("at most one"), "{msg}")
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn config_parse_errors_are_reported() {
        let bad = "[scenario]\npreset = \"opo\"\nchi = \"not a number\"\n";
        match ScenarioConfig::from_toml_str(bad) {
            Err(Error::Parse(msg)) => assert!(msg.contains("chi") || msg.contains("line")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn custom_model_config_builds() {
        let text = r#"
[scenario]
preset = "custom"

[model]
modes = 1
bath_modes = 1
h_s = [0.0, 0.0, 0.0, 0.0]
c = [1.0, 0.0, 0.0, 1.0]
sigma_b = [1.0, 0.0, 0.0, 1.0]

[measurement]
type = "heterodyne"
"#;
        let built = ScenarioConfig::from_toml_str(text)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(built.model.n_modes(), 1);
        assert!(built.measurement.is_some());
    }
}
