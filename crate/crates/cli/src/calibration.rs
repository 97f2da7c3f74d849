//! External calibration snapshots and their normalized form.
//!
//! A snapshot lists per-qubit readout fidelities and either the Hadamard
//! angle error in radians or a gate-error figure with an explicit unit:
//!
//! ```json
//! {
//!   "schema": "repro-bound/snapshot/v1",
//!   "source": "vendor-export",
//!   "captured_at": "2021-04-08T09:00:00Z",
//!   "qubits": [
//!     { "index": 0, "f0": 0.98, "f1": 0.95, "gate_error": { "value": 1.2, "unit": "deg" } }
//!   ]
//! }
//! ```
//!
//! Units are `rad`, `deg` or `probability`. A probability `p` is read as the
//! population leaked by the rotation, `θ = asin(√p)`; its sign is unknown and
//! is taken positive. The importer never guesses a unit.

use std::collections::BTreeSet;
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use repro_bound_core::noise::QubitNoiseParams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SNAPSHOT_SCHEMA: &str = "repro-bound/snapshot/v1";
pub const CALIBRATION_SCHEMA: &str = "repro-bound/calibration/v1";
pub const NORMALIZED_FILE: &str = "calibration.normalized.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateErrorUnit {
    Rad,
    Deg,
    Probability,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateError {
    pub value: f64,
    pub unit: GateErrorUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotQubit {
    pub index: usize,
    pub f0: f64,
    pub f1: f64,
    #[serde(default)]
    pub theta_rad: Option<f64>,
    #[serde(default)]
    pub gate_error: Option<GateError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSnapshot {
    pub schema: String,
    pub source: String,
    pub captured_at: String,
    pub qubits: Vec<SnapshotQubit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaOrigin {
    Radians,
    Degrees,
    ErrorProbability,
    Missing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibratedQubit {
    pub index: usize,
    pub f0: f64,
    pub f1: f64,
    pub theta_rad: Option<f64>,
    pub theta_origin: ThetaOrigin,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl CalibratedQubit {
    pub fn eps(&self) -> f64 {
        self.f0 - self.f1
    }

    pub fn f(&self) -> f64 {
        (self.f0 + self.f1) / 2.0
    }
}

/// Normalized calibration, accepted by `verdict` in place of a characterization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub schema: String,
    pub source: String,
    pub captured_at: String,
    pub qubits: Vec<CalibratedQubit>,
}

fn invalid(origin: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{origin}: {msg}"))
}

fn theta_from(q: &SnapshotQubit, at: &str) -> Result<(Option<f64>, ThetaOrigin, Vec<String>), String> {
    match (q.theta_rad, q.gate_error) {
        (Some(_), Some(_)) => Err(format!("{at}: give either theta_rad or gate_error, not both")),
        (Some(t), None) => Ok((Some(t), ThetaOrigin::Radians, Vec::new())),
        (None, Some(g)) => match g.unit {
            GateErrorUnit::Rad => Ok((Some(g.value), ThetaOrigin::Radians, Vec::new())),
            GateErrorUnit::Deg => Ok((Some(g.value.to_radians()), ThetaOrigin::Degrees, Vec::new())),
            GateErrorUnit::Probability => {
                if !(0.0..=1.0).contains(&g.value) {
                    return Err(format!("{at}.gate_error.value: probability {} is outside [0, 1]", g.value));
                }
                Ok((
                    Some(g.value.sqrt().asin()),
                    ThetaOrigin::ErrorProbability,
                    vec!["theta sign unknown, taken positive".to_string()],
                ))
            }
        },
        (None, None) => Ok((None, ThetaOrigin::Missing, vec!["theta missing".to_string()])),
    }
}

impl CalibrationSnapshot {
    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| invalid(origin, e))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Validate and convert to the normalized form.
    pub fn normalize(&self, origin: &str) -> CliResult<Calibration> {
        if self.schema != SNAPSHOT_SCHEMA {
            return Err(invalid(
                origin,
                format!("schema: expected {SNAPSHOT_SCHEMA:?}, found {:?}", self.schema),
            ));
        }
        if self.qubits.is_empty() {
            return Err(invalid(origin, "qubits: at least one qubit is required"));
        }
        let captured_at = DateTime::parse_from_rfc3339(&self.captured_at)
            .map_err(|e| invalid(origin, format!("captured_at: {:?}: {e}", self.captured_at)))?
            .with_timezone(&Utc)
            .to_rfc3339_opts(SecondsFormat::Secs, true);

        let mut seen = BTreeSet::new();
        let mut qubits = Vec::with_capacity(self.qubits.len());
        for (i, q) in self.qubits.iter().enumerate() {
            let at = format!("qubits[{i}]");
            if !seen.insert(q.index) {
                return Err(invalid(origin, format!("{at}.index: duplicate qubit index {}", q.index)));
            }
            let (theta, theta_origin, flags) = theta_from(q, &at).map_err(|e| invalid(origin, e))?;
            QubitNoiseParams::new(q.f0, q.f1, theta.unwrap_or(0.0))
                .map_err(|e| invalid(origin, format!("{at}: {e}")))?;
            qubits.push(CalibratedQubit {
                index: q.index,
                f0: q.f0,
                f1: q.f1,
                theta_rad: theta,
                theta_origin,
                flags,
            });
        }
        qubits.sort_by_key(|q| q.index);
        Ok(Calibration {
            schema: CALIBRATION_SCHEMA.to_string(),
            source: self.source.clone(),
            captured_at,
            qubits,
        })
    }
}

impl Calibration {
    pub fn load(path: &Path) -> CliResult<Self> {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cal: Calibration = serde_json::from_str(&text).map_err(|e| invalid(&origin, e))?;
        if cal.schema != CALIBRATION_SCHEMA {
            return Err(invalid(
                &origin,
                format!("schema: expected {CALIBRATION_SCHEMA:?}, found {:?}", cal.schema),
            ));
        }
        Ok(cal)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("calibration serializes");
        text.push('\n');
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snapshot(qubits: &str) -> String {
        format!(
            r#"{{"schema":"{SNAPSHOT_SCHEMA}","source":"t","captured_at":"2021-04-08T11:00:00+02:00","qubits":[{qubits}]}}"#
        )
    }

    fn normalize(text: &str) -> CliResult<Calibration> {
        CalibrationSnapshot::parse(text, "t")?.normalize("t")
    }

    #[test]
    fn minimal_snapshot_normalizes() {
        let cal = normalize(&snapshot(r#"{"index":0,"f0":0.99,"f1":0.95,"theta_rad":0.02}"#)).unwrap();
        assert_eq!(cal.schema, CALIBRATION_SCHEMA);
        assert_eq!(cal.captured_at, "2021-04-08T09:00:00Z");
        assert_eq!(cal.qubits[0].theta_rad, Some(0.02));
        assert_eq!(cal.qubits[0].theta_origin, ThetaOrigin::Radians);
    }

    #[test]
    fn gate_error_units() {
        let cal = normalize(&snapshot(
            r#"{"index":0,"f0":1,"f1":1,"gate_error":{"value":2,"unit":"deg"}},
               {"index":1,"f0":1,"f1":1,"gate_error":{"value":0.25,"unit":"probability"}},
               {"index":2,"f0":1,"f1":1}"#,
        ))
        .unwrap();
        assert!((cal.qubits[0].theta_rad.unwrap() - 2f64.to_radians()).abs() < 1e-15);
        // sin²θ = 0.25
        assert!((cal.qubits[1].theta_rad.unwrap() - std::f64::consts::FRAC_PI_6).abs() < 1e-12);
        assert_eq!(cal.qubits[1].theta_origin, ThetaOrigin::ErrorProbability);
        assert_eq!(cal.qubits[2].theta_rad, None);
        assert_eq!(cal.qubits[2].theta_origin, ThetaOrigin::Missing);
        assert!(!cal.qubits[2].flags.is_empty());
    }

    #[test]
    fn rejects_bad_snapshots() {
        for bad in [
            snapshot(r#"{"index":0,"f0":0.9,"f1":1.2,"theta_rad":0}"#),
            snapshot(r#"{"index":0,"f0":0.9,"f1":0.9,"gate_error":{"value":1,"unit":"grad"}}"#),
            snapshot(r#"{"index":0,"f0":0.9,"f1":0.9,"theta_rad":0,"gate_error":{"value":1,"unit":"rad"}}"#),
            snapshot(r#"{"index":0,"f0":0.9,"f1":0.9,"gate_error":{"value":1.5,"unit":"probability"}}"#),
            snapshot(""),
            snapshot(r#"{"index":0,"f0":0.9,"f1":0.9},{"index":0,"f0":0.9,"f1":0.9}"#),
            snapshot(r#"{"index":0,"f0":0.9,"f1":0.9}"#).replace("2021-04-08T11:00:00+02:00", "yesterday"),
        ] {
            let err = normalize(&bad).unwrap_err();
            assert_eq!(err.exit_code(), crate::error::exit::INPUT, "{err}");
        }
    }

    #[test]
    fn normalized_file_round_trips() {
        let cal = normalize(&snapshot(r#"{"index":0,"f0":0.99,"f1":0.95}"#)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(NORMALIZED_FILE);
        std::fs::write(&path, cal.to_json()).unwrap();
        assert_eq!(Calibration::load(&path).unwrap(), cal);
    }
}
