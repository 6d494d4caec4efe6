//! Serialization: TOML records for states, channels, drift/diffusion pairs
//! and symplectic matrices (all matrices row-major flat lists), and the CSV
//! emission of trajectory records.
//!
//! CSV numbers use 17 significant digits so 64-bit floats round-trip
//! exactly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channel::GaussianChannel;
use crate::dynamics::DriftDiffusion;
use crate::error::{Error, Result};
use crate::filtering::TrajectoryRecord;
use crate::scenario::matrix_from_row_major;
use crate::state::GaussianState;

/// A typed record file; `kind` selects the payload.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Record {
    State(StateRecord),
    Channel(ChannelRecord),
    DriftDiffusion(DriftDiffusionRecord),
    Symplectic(SymplecticRecord),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StateRecord {
    pub n: usize,
    pub mean: Vec<f64>,
    pub cov: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChannelRecord {
    pub n: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DriftDiffusionRecord {
    pub n: usize,
    pub a: Vec<f64>,
    pub d: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SymplecticRecord {
    pub n: usize,
    pub s: Vec<f64>,
    /// Max-norm residual of S Omega S^T - Omega at write time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = m.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

impl StateRecord {
    pub fn from_state(state: &GaussianState) -> Self {
        Self {
            n: state.n_modes(),
            mean: state.mean().iter().copied().collect(),
            cov: row_major(state.cov()),
        }
    }

    pub fn to_state(&self) -> Result<GaussianState> {
        let dim = 2 * self.n;
        if self.mean.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.mean.len(),
            });
        }
        GaussianState::new(
            DVector::from_vec(self.mean.clone()),
            matrix_from_row_major(&self.cov, dim, dim)?,
        )
    }
}

impl ChannelRecord {
    pub fn from_channel(ch: &GaussianChannel) -> Self {
        Self {
            n: ch.n_modes(),
            x: row_major(ch.x()),
            y: row_major(ch.y()),
        }
    }

    pub fn to_channel(&self) -> Result<GaussianChannel> {
        let dim = 2 * self.n;
        GaussianChannel::new(
            matrix_from_row_major(&self.x, dim, dim)?,
            matrix_from_row_major(&self.y, dim, dim)?,
        )
    }
}

impl DriftDiffusionRecord {
    pub fn from_drift_diffusion(dd: &DriftDiffusion) -> Self {
        Self {
            n: dd.n_modes(),
            a: row_major(dd.a()),
            d: row_major(dd.d()),
        }
    }

    pub fn to_drift_diffusion(&self) -> Result<DriftDiffusion> {
        let dim = 2 * self.n;
        DriftDiffusion::new(
            matrix_from_row_major(&self.a, dim, dim)?,
            matrix_from_row_major(&self.d, dim, dim)?,
        )
    }
}

impl SymplecticRecord {
    pub fn from_matrix(s: &DMatrix<f64>, residual: Option<f64>) -> Self {
        Self {
            n: s.nrows() / 2,
            s: row_major(s),
            residual,
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        matrix_from_row_major(&self.s, 2 * self.n, 2 * self.n)
    }
}

impl Record {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Formats a float with 17 significant digits (round-trip exact for f64).
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV of a trajectory: columns t, r1..r2n, y1..y2m. `currents[0]` is zero
/// by convention (no step has completed at t = 0).
pub fn trajectory_csv(rec: &TrajectoryRecord) -> String {
    let n_dim = rec.means.first().map_or(0, |m| m.len());
    let m_dim = rec.currents.first().map_or(0, |c| c.len());
    let mut out = String::new();
    out.push('t');
    for i in 1..=n_dim {
        out.push_str(&format!(",r{i}"));
    }
    for i in 1..=m_dim {
        out.push_str(&format!(",y{i}"));
    }
    out.push('\n');
    for ((t, mean), current) in rec
        .times
        .iter()
        .zip(rec.means.iter())
        .zip(rec.currents.iter())
    {
        out.push_str(&format_float(*t));
        for v in mean.iter() {
            out.push(',');
            out.push_str(&format_float(*v));
        }
        for v in current.iter() {
            out.push(',');
            out.push_str(&format_float(*v));
        }
        out.push('\n');
    }
    out
}

/// CSV sidecar of covariance snapshots: columns t, s11, s12, ... (row-major).
pub fn covariance_csv(rec: &TrajectoryRecord) -> String {
    let dim = rec.cov_snapshots.first().map_or(0, |(_, c)| c.nrows());
    let mut out = String::new();
    out.push('t');
    for i in 1..=dim {
        for j in 1..=dim {
            out.push_str(&format!(",s{i}{j}"));
        }
    }
    out.push('\n');
    for (t, cov) in &rec.cov_snapshots {
        out.push_str(&format_float(*t));
        for i in 0..dim {
            for j in 0..dim {
                out.push(',');
                out.push_str(&format_float(cov[(i, j)]));
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_record_round_trip() {
        let s = GaussianState::squeezed_vacuum(2.0).unwrap();
        let rec = Record::State(StateRecord::from_state(&s));
        let text = rec.to_toml_string().unwrap();
        let back = Record::from_toml_str(&text).unwrap();
        assert_eq!(back, rec);
        match back {
            Record::State(r) => assert_eq!(r.to_state().unwrap(), s),
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn channel_record_round_trip() {
        let ch = GaussianChannel::loss(1, 0.36).unwrap();
        let rec = Record::Channel(ChannelRecord::from_channel(&ch));
        let back = Record::from_toml_str(&rec.to_toml_string().unwrap()).unwrap();
        match back {
            Record::Channel(r) => {
                let rebuilt = r.to_channel().unwrap();
                assert_eq!(rebuilt.x(), ch.x());
                assert_eq!(rebuilt.y(), ch.y());
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn float_formatting_round_trips_exactly() {
        for &x in &[0.1, -1.0 / 3.0, std::f64::consts::PI, 1e-300, 6.02e23, -0.0] {
            let s = format_float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn record_parse_error_carries_position() {
        let text = "kind = \"state\"\nn = 1\nmean = [0.0, oops]\n";
        match Record::from_toml_str(text) {
            Err(Error::Parse(msg)) => assert!(msg.contains("line"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn trajectory_csv_shape() {
        use crate::dynamics::DiffusiveModel;
        use crate::filtering::{simulate_trajectory, MonitoredModel};
        use crate::measurement::GeneralDyneMeasurement;
        use nalgebra::DMatrix;

        let model = DiffusiveModel::new(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let meas = GeneralDyneMeasurement::heterodyne(1).unwrap();
        let mm = MonitoredModel::new(model, meas).unwrap();
        let s0 = GaussianState::vacuum(1).unwrap();
        let rec = simulate_trajectory(&mm, &s0, 0.01, 1e-3, 1).unwrap();
        let csv = trajectory_csv(&rec);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,r1,r2,y1,y2");
        assert_eq!(lines.len(), rec.times.len() + 1);
        let cov_csv = covariance_csv(&rec);
        assert!(cov_csv.starts_with("t,s11,s12,s21,s22"));
    }
}
