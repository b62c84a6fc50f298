use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Uniform result record for an oracle run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    pub inputs: Value,
    pub outputs: Value,
    pub pass: bool,
    /// Soft checks are reported but do not fail a verification run.
    pub soft: bool,
    pub tolerances: Value,
}

impl OracleReport {
    pub fn new(name: &str, inputs: Value, outputs: Value, pass: bool, tolerances: Value) -> Self {
        Self {
            name: name.to_string(),
            inputs,
            outputs,
            pass,
            soft: false,
            tolerances,
        }
    }

    pub fn soft(mut self) -> Self {
        self.soft = true;
        self
    }

    /// Whether this report should fail a run: hard and not passing.
    pub fn is_failure(&self) -> bool {
        !self.soft && !self.pass
    }
}
