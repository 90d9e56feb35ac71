//! Persistence contracts: the shipped JSON schema, summary
//! re-aggregation, and the CSV layout.

use btm::harness::{
    run, summarize, validate_result_json, ExperimentConfig, ExperimentKind,
};

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(kind);
    cfg.model = "stretched-log:0.5".to_string();
    cfg.seeds = 4;
    cfg.i_max = 5_000;
    cfg.t_min = 1e2;
    cfg.t_max = 1e6;
    cfg.t_steps = 4;
    cfg.n_min = 3;
    cfg.n_max = 5;
    cfg
}

#[test]
fn results_validate_against_the_shipped_schema() {
    for kind in [
        ExperimentKind::Sample,
        ExperimentKind::Records,
        ExperimentKind::SumMax,
        ExperimentKind::Localise,
        ExperimentKind::Audit,
        ExperimentKind::Balanced,
        ExperimentKind::CheckAssumptions,
    ] {
        let result = run(&small(kind)).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&result.to_json()).unwrap();
        validate_result_json(&parsed)
            .unwrap_or_else(|e| panic!("{kind:?}: schema violation {e}"));
        // The schema file itself must parse and list the same required
        // top-level fields the validator enforces.
        let schema: serde_json::Value = serde_json::from_str(include_str!(
            "../schemas/experiment-result.schema.json"
        ))
        .unwrap();
        for key in schema["required"].as_array().unwrap() {
            assert!(
                parsed.get(key.as_str().unwrap()).is_some(),
                "{kind:?} output missing {key}"
            );
        }
    }
}

#[test]
fn summaries_reaggregate_from_rows() {
    for kind in [
        ExperimentKind::Records,
        ExperimentKind::SumMax,
        ExperimentKind::Localise,
        ExperimentKind::Audit,
        ExperimentKind::Balanced,
    ] {
        let result = run(&small(kind)).unwrap();
        // Round-trip the rows through JSON, then recompute.
        let json = result.to_json();
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        let columns: Vec<String> = parsed["columns"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c.as_str().unwrap().to_string())
            .collect();
        let rows: Vec<Vec<serde_json::Value>> = parsed["rows"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| r.as_array().unwrap().clone())
            .collect();
        let recomputed = summarize(kind, &columns, &rows);
        let stored: std::collections::BTreeMap<String, serde_json::Value> =
            serde_json::from_value(parsed["summary"].clone()).unwrap();
        assert_eq!(recomputed, stored, "{kind:?} summary not recomputable from rows");
    }
}

#[test]
fn csv_layout_contract() {
    let result = run(&small(ExperimentKind::SumMax)).unwrap();
    let csv = result.to_csv();
    let mut lines = csv.lines();
    let comment = lines.next().unwrap();
    assert!(comment.starts_with("# "), "first line documents the columns");
    let header = lines.next().unwrap();
    assert_eq!(header.split(',').count(), result.columns.len());
    for line in lines {
        assert_eq!(line.split(',').count(), result.columns.len());
    }
}
