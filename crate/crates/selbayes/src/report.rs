//! Run reports: stable field names, numbers at 12 significant digits.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

/// Significant digits of every number in a report.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// `x` rounded to 12 significant digits; non-finite values become strings.
pub fn num(x: f64) -> Value {
    if x.is_nan() {
        return Value::String("nan".into());
    }
    if x.is_infinite() {
        return Value::String(if x > 0.0 { "inf" } else { "-inf" }.into());
    }
    let rounded: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("formatted float parses");
    // -0 prints as "-0.0"; fold it.
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub inputs: BTreeMap<String, InputRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub result: Value,
    pub diagnostics: Vec<String>,
    /// Only with `--timing`, so default reports stay reproducible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<Value>,
}

impl RunReport {
    pub fn new(command: Vec<String>) -> Self {
        Self { command, inputs: BTreeMap::new(), seed: None, result: Value::Null, diagnostics: Vec::new(), wall_clock_seconds: None }
    }

    pub fn input(&mut self, role: &str, path: &std::path::Path, sha256: &str) {
        self.inputs.insert(role.to_string(), InputRecord { path: path.display().to_string(), sha256: sha256.to_string() });
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }
}
