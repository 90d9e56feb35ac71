//! Result tables, persistence, and the shipped JSON schema.
//!
//! Every experiment produces one table (columns + rows) plus a summary
//! block whose every statistic is recomputable from the rows; the
//! re-aggregation test in the acceptance suite enforces that.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, OutputFormat};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Provenance {
    pub code_version: String,
    /// Per-seed errors; partial results are preserved and marked here.
    pub errors: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub schema_version: u32,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub columns: Vec<String>,
    /// One line of documentation per column, `;`-separated, emitted as a
    /// CSV comment.
    pub column_docs: String,
    pub rows: Vec<Vec<Value>>,
    pub summary: BTreeMap<String, Value>,
    pub provenance: Provenance,
}

impl ExperimentResult {
    /// Renders the CSV form: one `#` comment line of column docs, a
    /// header row, then the data rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# ");
        out.push_str(&self.column_docs);
        out.push('\n');
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(csv_field).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    pub fn write_to(&self, path: &Path, format: OutputFormat) -> Result<()> {
        let text = match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        };
        let mut file = std::fs::File::create(path)?;
        file.write_all(text.as_bytes())?;
        Ok(())
    }

    pub fn rendered(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }
}

fn csv_field(v: &Value) -> String {
    match v {
        Value::String(s) => {
            if s.contains(',') || s.contains('"') || s.contains('\n') {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.clone()
            }
        }
        other => other.to_string(),
    }
}

/// Checks a JSON value against the shipped result schema
/// (`schemas/experiment-result.schema.json`). The schema is small enough
/// to verify directly: required fields, their types, and the row-shape
/// constraint that every row has one entry per column.
pub fn validate_result_json(value: &Value) -> Result<()> {
    let obj = value.as_object().ok_or_else(|| bad("result must be an object"))?;
    for key in [
        "schema_version",
        "experiment",
        "config",
        "config_hash",
        "columns",
        "column_docs",
        "rows",
        "summary",
        "provenance",
    ] {
        if !obj.contains_key(key) {
            return Err(bad(&format!("missing required field {key:?}")));
        }
    }
    if !obj["schema_version"].is_u64() {
        return Err(bad("schema_version must be an unsigned integer"));
    }
    if !obj["experiment"].is_string() || !obj["config_hash"].is_string() {
        return Err(bad("experiment and config_hash must be strings"));
    }
    if !obj["column_docs"].is_string() {
        return Err(bad("column_docs must be a string"));
    }
    let columns = obj["columns"].as_array().ok_or_else(|| bad("columns must be an array"))?;
    if !columns.iter().all(Value::is_string) {
        return Err(bad("columns must be strings"));
    }
    let rows = obj["rows"].as_array().ok_or_else(|| bad("rows must be an array"))?;
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| bad(&format!("row {i} must be an array")))?;
        if row.len() != columns.len() {
            return Err(bad(&format!(
                "row {i} has {} entries for {} columns",
                row.len(),
                columns.len()
            )));
        }
    }
    if !obj["summary"].is_object() {
        return Err(bad("summary must be an object"));
    }
    let prov = obj["provenance"].as_object().ok_or_else(|| bad("provenance must be an object"))?;
    for key in ["code_version", "errors", "notes"] {
        if !prov.contains_key(key) {
            return Err(bad(&format!("provenance missing {key:?}")));
        }
    }
    Ok(())
}

fn bad(msg: &str) -> Error {
    Error::Config(format!("result schema violation: {msg}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentKind;

    #[test]
    fn csv_has_comment_header_and_rows() {
        let cfg = ExperimentConfig::new(ExperimentKind::Sample);
        let result = ExperimentResult {
            schema_version: SCHEMA_VERSION,
            experiment: "sample".into(),
            config: cfg.clone(),
            config_hash: cfg.hash(),
            columns: vec!["a".into(), "b".into()],
            column_docs: "a: first; b: second".into(),
            rows: vec![vec![1.into(), 2.5.into()], vec![3.into(), Value::String("x,y".into())]],
            summary: BTreeMap::new(),
            provenance: Provenance {
                code_version: "test".into(),
                errors: vec![],
                notes: vec![],
            },
        };
        let csv = result.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# a: first; b: second");
        assert_eq!(lines[1], "a,b");
        assert_eq!(lines[2], "1,2.5");
        assert_eq!(lines[3], "3,\"x,y\"");

        let parsed: Value = serde_json::from_str(&result.to_json()).unwrap();
        validate_result_json(&parsed).unwrap();
    }

    #[test]
    fn schema_rejects_ragged_rows() {
        let cfg = ExperimentConfig::new(ExperimentKind::Sample);
        let mut result = ExperimentResult {
            schema_version: SCHEMA_VERSION,
            experiment: "sample".into(),
            config: cfg.clone(),
            config_hash: cfg.hash(),
            columns: vec!["a".into(), "b".into()],
            column_docs: String::new(),
            rows: vec![vec![1.into()]],
            summary: BTreeMap::new(),
            provenance: Provenance {
                code_version: "test".into(),
                errors: vec![],
                notes: vec![],
            },
        };
        let parsed: Value = serde_json::from_str(&result.to_json()).unwrap();
        assert!(validate_result_json(&parsed).is_err());
        result.rows[0].push(2.into());
        let parsed: Value = serde_json::from_str(&result.to_json()).unwrap();
        validate_result_json(&parsed).unwrap();
    }
}
