//! Device configuration files.
//!
//! ```json
//! {
//!   "schema": "repro-bound/device/v1",
//!   "name": "synthetic-27",
//!   "qubits": [{ "index": 0, "f0": 0.99, "f1": 0.95, "theta_rad": 0.0213 }],
//!   "plan": { "experiments": 203, "shots": 8192, "seed": 42 }
//! }
//! ```
//!
//! `plan.L` and `plan.S` are accepted as aliases of `experiments` and `shots`.

use std::collections::BTreeSet;
use std::path::Path;

use repro_bound_core::noise::QubitNoiseParams;
use repro_bound_core::sampler::{ExperimentPlan, PlannedQubit};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEVICE_SCHEMA: &str = "repro-bound/device/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitEntry {
    pub index: usize,
    pub f0: f64,
    pub f1: f64,
    pub theta_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    #[serde(alias = "L")]
    pub experiments: usize,
    #[serde(alias = "S")]
    pub shots: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub schema: String,
    pub name: String,
    pub qubits: Vec<QubitEntry>,
    pub plan: PlanSection,
}

impl DeviceConfig {
    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        let config: DeviceConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Input(format!("{origin}: {e}")))?;
        config.validate().map_err(|e| CliError::Input(format!("{origin}: {e}")))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.schema != DEVICE_SCHEMA {
            return Err(format!("schema: expected {DEVICE_SCHEMA:?}, found {:?}", self.schema));
        }
        if self.qubits.is_empty() {
            return Err("qubits: at least one qubit is required".into());
        }
        let mut seen = BTreeSet::new();
        for (i, q) in self.qubits.iter().enumerate() {
            if !seen.insert(q.index) {
                return Err(format!("qubits[{i}].index: duplicate qubit index {}", q.index));
            }
            QubitNoiseParams::new(q.f0, q.f1, q.theta_rad).map_err(|e| format!("qubits[{i}]: {e}"))?;
        }
        if let Some(gap) = (0..self.qubits.len()).find(|i| !seen.contains(i)) {
            return Err(format!(
                "qubits: indices must be contiguous from 0, index {gap} is missing"
            ));
        }
        if self.plan.experiments < 2 {
            return Err(format!("plan.experiments: L={} but at least 2 are needed", self.plan.experiments));
        }
        if self.plan.shots == 0 {
            return Err("plan.shots: S must be at least 1".into());
        }
        Ok(())
    }

    /// The experiment plan, with qubits in index order.
    pub fn experiment_plan(&self, seed_override: Option<u64>) -> ExperimentPlan {
        let mut qubits: Vec<PlannedQubit> = self
            .qubits
            .iter()
            .map(|q| PlannedQubit {
                index: q.index,
                params: QubitNoiseParams {
                    f0: q.f0,
                    f1: q.f1,
                    theta: q.theta_rad,
                },
            })
            .collect();
        qubits.sort_by_key(|q| q.index);
        ExperimentPlan {
            experiments: self.plan.experiments,
            shots: self.plan.shots,
            qubits,
            seed: seed_override.unwrap_or(self.plan.seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(qubits: &str) -> String {
        format!(
            r#"{{"schema": "{DEVICE_SCHEMA}", "name": "t", "qubits": [{qubits}],
                "plan": {{"L": 2, "S": 4, "seed": 1}}}}"#
        )
    }

    #[test]
    fn parses_minimal_config() {
        let c = DeviceConfig::parse(&config(r#"{"index":0,"f0":1,"f1":1,"theta_rad":0}"#), "t").unwrap();
        assert_eq!(c.plan.experiments, 2);
        let plan = c.experiment_plan(Some(9));
        assert_eq!(plan.seed, 9);
        assert_eq!(plan.qubits[0].params, QubitNoiseParams::perfect());
    }

    #[test]
    fn rejects_duplicate_and_gapped_indices() {
        let dup = config(
            r#"{"index":0,"f0":1,"f1":1,"theta_rad":0},{"index":0,"f0":1,"f1":1,"theta_rad":0}"#,
        );
        let err = DeviceConfig::parse(&dup, "t").unwrap_err().to_string();
        assert!(err.contains("qubits[1].index"), "{err}");
        let gap = config(
            r#"{"index":0,"f0":1,"f1":1,"theta_rad":0},{"index":2,"f0":1,"f1":1,"theta_rad":0}"#,
        );
        assert!(DeviceConfig::parse(&gap, "t").unwrap_err().to_string().contains("index 1 is missing"));
    }

    #[test]
    fn reports_field_and_line() {
        let bad = config(r#"{"index":0,"f0":1.2,"f1":1,"theta_rad":0}"#);
        let err = DeviceConfig::parse(&bad, "t").unwrap_err().to_string();
        assert!(err.contains("qubits[0]") && err.contains("f0"), "{err}");
        let syntax = "{\n  \"schema\": \"x\",\n  oops\n}";
        let err = DeviceConfig::parse(syntax, "t").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        let unknown = config(r#"{"index":0,"f0":1,"f1":1,"theta_rad":0,"extra":1}"#);
        assert!(DeviceConfig::parse(&unknown, "t").unwrap_err().to_string().contains("extra"));
    }
}
