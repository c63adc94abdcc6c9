//! Gateway log ingestion: parsing newline-delimited invocation records and
//! grouping them into per-session execution paths.
//!
//! A trace file holds one JSON document per line with the required keys
//! `session_id`, `seq`, `tool_name`, `query_params`, `mcp_response` and an
//! optional `timestamp` (milliseconds). Unknown extra fields are preserved
//! opaquely and ignored by every algorithm downstream.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

/// One tool invocation recorded at the gateway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub session_id: String,
    /// Ordering key within the session; authoritative over `timestamp`.
    pub seq: u64,
    pub tool_name: String,
    pub query_params: Map<String, Value>,
    pub mcp_response: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<i64>,
    /// Extra fields carried through for reporting, never interpreted.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

/// An ordered, single-session sequence of tool calls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionPath {
    pub session_id: String,
    pub calls: Vec<ToolCall>,
}

impl ExecutionPath {
    pub fn tool_names(&self) -> Vec<String> {
        self.calls.iter().map(|c| c.tool_name.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.calls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.calls.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o failure reading trace stream: {0}")]
    Io(#[from] std::io::Error),
}

/// A per-line parse diagnostic. Invalid lines are reported, never dropped
/// silently.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MalformedRecord {
    /// 1-based line number in the input stream.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub calls: Vec<ToolCall>,
    pub diagnostics: Vec<MalformedRecord>,
}

/// Parse a newline-delimited record stream. Valid records are returned in
/// stream order; each invalid line yields one diagnostic. Only stream-level
/// I/O failure aborts.
pub fn parse_log<R: BufRead>(reader: R) -> Result<ParseOutcome, IngestError> {
    let mut out = ParseOutcome::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(&line) {
            Ok(call) => out.calls.push(call),
            Err(reason) => out.diagnostics.push(MalformedRecord {
                line: lineno,
                reason,
            }),
        }
    }
    Ok(out)
}

fn parse_record(line: &str) -> Result<ToolCall, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("invalid json: {e}"))?;
    if !value.is_object() {
        return Err("record is not a json object".into());
    }
    let call: ToolCall = serde_json::from_value(value).map_err(|e| e.to_string())?;
    if call.tool_name.is_empty() {
        return Err("tool_name must be non-empty".into());
    }
    if call.session_id.is_empty() {
        return Err("session_id must be non-empty".into());
    }
    Ok(call)
}

/// Serialize a call back to its single-line record form.
pub fn serialize_record(call: &ToolCall) -> String {
    serde_json::to_string(call).expect("tool call serializes")
}

/// A session rejected during sessionization, with the number of calls it
/// carried so callers can account for every input record.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedSession {
    pub session_id: String,
    pub reason: String,
    pub call_count: usize,
}

#[derive(Debug, Default)]
pub struct SessionizeOutcome {
    pub paths: Vec<ExecutionPath>,
    pub rejected: Vec<RejectedSession>,
}

/// Group calls into one path per session, sorted by `seq`. Paths are emitted
/// in order of each session's first appearance. A session with a duplicated
/// seq is rejected whole.
pub fn sessionize(calls: Vec<ToolCall>) -> SessionizeOutcome {
    let mut order: Vec<String> = Vec::new();
    let mut buckets: BTreeMap<String, Vec<ToolCall>> = BTreeMap::new();
    for call in calls {
        if !buckets.contains_key(&call.session_id) {
            order.push(call.session_id.clone());
        }
        buckets
            .entry(call.session_id.clone())
            .or_default()
            .push(call);
    }

    let mut out = SessionizeOutcome::default();
    for session_id in order {
        let mut calls = buckets.remove(&session_id).expect("bucket exists");
        calls.sort_by_key(|c| c.seq);
        let dup = calls.windows(2).find(|w| w[0].seq == w[1].seq);
        if let Some(pair) = dup {
            out.rejected.push(RejectedSession {
                session_id,
                reason: format!("duplicate seq {} within session", pair[0].seq),
                call_count: calls.len(),
            });
            continue;
        }
        out.paths.push(ExecutionPath { session_id, calls });
    }
    out
}
