//! Benchmark dataset generation and evaluation.
//!
//! Two scenarios are generated end to end: a clinic triage agent (triage
//! server, 18 office servers, filesystem server) and a procurement request
//! agent (entry-point server, two division servers with scale routing and 12
//! submission tools per scale). Each dataset carries benign traces (BT),
//! unseen-and-malicious traces (AT-C1) and seen-but-inconsistent traces
//! (AT-C2), deterministically from one seed.

pub mod clinic;
pub mod metrics;
pub mod procurement;

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::judge::JudgeConfig;
use crate::trace::{ExecutionPath, ToolCall};

pub use metrics::{evaluate, evaluate_traces, CategoryCounts, EvalError, Metrics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Clinic,
    Procurement,
}

impl Scenario {
    pub fn label(&self) -> &'static str {
        match self {
            Scenario::Clinic => "clinic triage",
            Scenario::Procurement => "procurement request",
        }
    }

    pub fn slug(&self) -> &'static str {
        match self {
            Scenario::Clinic => "clinic",
            Scenario::Procurement => "procurement",
        }
    }

    /// Benign traces needed to witness every unit type AT-C2 reuses.
    pub fn min_benign_for_at_c2(&self) -> usize {
        match self {
            Scenario::Clinic => clinic::COVERAGE_TRACES,
            Scenario::Procurement => procurement::COVERAGE_TRACES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TraceLabel {
    #[serde(rename = "BT")]
    Benign,
    #[serde(rename = "AT-C1")]
    AtC1,
    #[serde(rename = "AT-C2")]
    AtC2,
}

impl TraceLabel {
    pub fn is_anomalous(&self) -> bool {
        !matches!(self, TraceLabel::Benign)
    }
}

impl fmt::Display for TraceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TraceLabel::Benign => "BT",
            TraceLabel::AtC1 => "AT-C1",
            TraceLabel::AtC2 => "AT-C2",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTrace {
    pub path: ExecutionPath,
    pub label: TraceLabel,
    /// Free-text provenance of the injected anomaly (empty for benign).
    pub cause: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub benign: usize,
    pub at_c1: usize,
    pub at_c2: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    /// The published dataset shape: 1300 benign plus 150 of each anomaly
    /// category.
    pub fn table_defaults(scenario: Scenario, seed: u64) -> Self {
        Self {
            scenario,
            benign: 1300,
            at_c1: 150,
            at_c2: 150,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.at_c2 > 0 && self.benign < self.scenario.min_benign_for_at_c2() {
            return Err(BenchError::InvalidSpec(format!(
                "AT-C2 traces reuse seen unit types: {} requires at least {} benign traces, got {}",
                self.scenario.slug(),
                self.scenario.min_benign_for_at_c2(),
                self.benign
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid scenario spec: {0}")]
    InvalidSpec(String),
}

/// Generate the full labeled dataset for a spec. Identical spec and seed
/// produce byte-identical output.
pub fn gen_dataset(spec: &ScenarioSpec) -> Result<Vec<LabeledTrace>, BenchError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok(match spec.scenario {
        Scenario::Clinic => clinic::generate(spec, &mut rng),
        Scenario::Procurement => procurement::generate(spec, &mut rng),
    })
}

/// Serialize a dataset to the ingestion JSONL format.
pub fn dataset_to_jsonl(dataset: &[LabeledTrace]) -> String {
    let mut out = String::new();
    for trace in dataset {
        for call in &trace.path.calls {
            out.push_str(&crate::trace::serialize_record(call));
            out.push('\n');
        }
    }
    out
}

/// Sidecar labels document: `{session_id: {label, cause}}`.
pub fn labels_document(dataset: &[LabeledTrace]) -> Value {
    let mut map = Map::new();
    for trace in dataset {
        map.insert(
            trace.path.session_id.clone(),
            json!({"label": trace.label.to_string(), "cause": trace.cause}),
        );
    }
    Value::Object(map)
}

pub fn parse_labels_document(doc: &Value) -> Result<BTreeMap<String, TraceLabel>, BenchError> {
    let obj = doc
        .as_object()
        .ok_or_else(|| BenchError::InvalidSpec("labels document must be an object".into()))?;
    let mut out = BTreeMap::new();
    for (session, entry) in obj {
        let label = entry
            .get("label")
            .and_then(Value::as_str)
            .ok_or_else(|| BenchError::InvalidSpec(format!("label missing for {session}")))?;
        let label = match label {
            "BT" => TraceLabel::Benign,
            "AT-C1" => TraceLabel::AtC1,
            "AT-C2" => TraceLabel::AtC2,
            other => {
                return Err(BenchError::InvalidSpec(format!(
                    "unknown label {other:?} for {session}"
                )))
            }
        };
        out.insert(session.clone(), label);
    }
    Ok(out)
}

/// The deterministic judge configuration shipped with a generated dataset.
pub fn scenario_judge_config(scenario: Scenario) -> JudgeConfig {
    JudgeConfig {
        scenario_label: scenario.label().to_string(),
        synonyms: scenario_synonyms(scenario),
        ..JudgeConfig::default()
    }
}

pub fn scenario_synonyms(scenario: Scenario) -> BTreeMap<String, Vec<String>> {
    let entries: &[(&str, &[&str])] = match scenario {
        Scenario::Clinic => &[
            ("chest_pain", &["chest_discomfort", "chest_tightness"]),
            ("back_pain", &["lower_back_ache"]),
            ("anxiety_attacks", &["anxiety_episodes"]),
        ],
        Scenario::Procurement => &[
            ("spot_purchase", &["spot_buy"]),
            ("open_tender", &["public_tender"]),
        ],
    };
    entries
        .iter()
        .map(|(k, vs)| (k.to_string(), vs.iter().map(|v| v.to_string()).collect()))
        .collect()
}

const TS_BASE: i64 = 1_735_689_600_000;

/// Builds one session's calls with deterministic seqs and timestamps.
pub(crate) struct TraceAssembler {
    session_id: String,
    global_index: usize,
    calls: Vec<ToolCall>,
}

impl TraceAssembler {
    pub(crate) fn new(session_id: String, global_index: usize) -> Self {
        Self {
            session_id,
            global_index,
            calls: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, tool: &str, params: Value, response: Value) {
        let seq = self.calls.len() as u64;
        self.calls.push(ToolCall {
            session_id: self.session_id.clone(),
            seq,
            tool_name: tool.to_string(),
            query_params: params.as_object().cloned().unwrap_or_default(),
            mcp_response: response.as_object().cloned().unwrap_or_default(),
            timestamp: Some(TS_BASE + self.global_index as i64 * 60_000 + seq as i64 * 500),
            extra: Map::new(),
        });
    }

    pub(crate) fn finish(self) -> ExecutionPath {
        ExecutionPath {
            session_id: self.session_id,
            calls: self.calls,
        }
    }
}
