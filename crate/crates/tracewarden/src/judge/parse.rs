//! Parsing remote-judge replies.
//!
//! Model output may wrap the JSON document in prose; the parser scans for
//! balanced-brace spans, takes the first one that validates against the
//! expected schema, and keeps the raw text on failure.

use std::collections::BTreeSet;

use serde_json::Value;

use super::text::canon_token;
use super::{JudgeError, MatchResult};

/// Which reply shape the caller expects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplySchema {
    /// `{"Behavior": "...", "Conditions": ["(..)", ...]}` — used for both
    /// instance extraction and rule summarization replies.
    Rule,
    /// `{"Matched": true/false, "Reason": "..."}`
    Match,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParsedReply {
    Rule {
        behavior: String,
        conditions: Vec<BTreeSet<String>>,
    },
    Match(MatchResult),
}

/// Extract the first well-formed document matching `schema` from the reply.
pub fn parse_judge_output(text: &str, schema: ReplySchema) -> Result<ParsedReply, JudgeError> {
    for span in brace_spans(text) {
        if let Ok(value) = serde_json::from_str::<Value>(span) {
            if let Some(reply) = validate(&value, schema) {
                return Ok(reply);
            }
        }
    }
    Err(JudgeError::MalformedJudgeOutput {
        detail: format!("no document matching the {schema:?} schema found"),
        raw: text.to_string(),
    })
}

/// Candidate balanced `{...}` spans in appearance order.
fn brace_spans(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            if let Some(end) = matching_brace(bytes, i) {
                spans.push(&text[i..=end]);
            }
        }
        i += 1;
    }
    spans
}

fn matching_brace(bytes: &[u8], start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (offset, &b) in bytes[start..].iter().enumerate() {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(start + offset);
                }
            }
            _ => {}
        }
    }
    None
}

fn validate(value: &Value, schema: ReplySchema) -> Option<ParsedReply> {
    let obj = value.as_object()?;
    match schema {
        ReplySchema::Match => {
            let matched = obj.get("Matched")?.as_bool()?;
            let reason = obj.get("Reason")?.as_str()?.to_string();
            if !matched && reason.is_empty() {
                return None;
            }
            Some(ParsedReply::Match(MatchResult {
                matched,
                reason,
                failed_position: None,
            }))
        }
        ReplySchema::Rule => {
            let behavior = obj.get("Behavior")?.as_str()?.to_string();
            if behavior.is_empty() {
                return None;
            }
            let raw_conditions = obj.get("Conditions")?.as_array()?;
            let mut conditions = Vec::with_capacity(raw_conditions.len());
            for entry in raw_conditions {
                conditions.push(parse_condition_group(entry.as_str()?));
            }
            Some(ParsedReply::Rule {
                behavior,
                conditions,
            })
        }
    }
}

/// `"(knee_pain, arm pain)"` -> `{knee_pain, arm_pain}`.
fn parse_condition_group(raw: &str) -> BTreeSet<String> {
    raw.trim()
        .trim_start_matches('(')
        .trim_end_matches(')')
        .split(',')
        .filter_map(canon_token)
        .collect()
}
