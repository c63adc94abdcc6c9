//! Splitting execution paths into level-respecting execution units.
//!
//! A valid path has a non-decreasing level sequence. It is expanded by
//! taking the maximal leading block of same-level siblings, recursively
//! expanding the suffix, and concatenating every block member with every
//! suffix expansion. Each resulting unit holds exactly one call per level,
//! strictly increasing.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::LevelMap;
use crate::trace::{ExecutionPath, ToolCall};

/// A level-respecting subsequence of one session's calls.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionUnit {
    pub calls: Vec<ToolCall>,
    pub source_session: String,
}

impl ExecutionUnit {
    pub fn signature(&self) -> TypeSignature {
        unit_type(self)
    }
}

/// The ordered tool-name sequence of a unit; the grouping key for rule
/// summarization.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypeSignature(pub Vec<String>);

impl TypeSignature {
    pub fn arity(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for TypeSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.join(" -> "))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum UnitError {
    #[error("tool {0:?} has no level in the profile")]
    UnknownTool(String),
}

/// Why a path could not be unitized.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum InvalidPathReason {
    UnknownTool { tool: String, position: usize },
    NonMonotonicLevels { position: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvalidPath {
    pub session_id: String,
    pub reason: InvalidPathReason,
}

impl InvalidPath {
    pub fn describe(&self) -> String {
        match &self.reason {
            InvalidPathReason::UnknownTool { tool, position } => {
                format!("unknown tool {tool:?} at position {position}")
            }
            InvalidPathReason::NonMonotonicLevels { position } => format!(
                "level order violated at position {position}: tool invoked before its prerequisites"
            ),
        }
    }
}

/// Expand a call segment into the cross product of its same-level blocks.
/// The empty segment expands to a single empty unit; output size equals the
/// product of block sizes.
pub fn expand_segment(
    seq: &[ToolCall],
    levels: &LevelMap,
) -> Result<Vec<Vec<ToolCall>>, UnitError> {
    if seq.is_empty() {
        return Ok(vec![Vec::new()]);
    }
    let head_level = levels
        .level(&seq[0].tool_name)
        .ok_or_else(|| UnitError::UnknownTool(seq[0].tool_name.clone()))?;
    let mut k = 1;
    while k < seq.len() {
        let l = levels
            .level(&seq[k].tool_name)
            .ok_or_else(|| UnitError::UnknownTool(seq[k].tool_name.clone()))?;
        if l != head_level {
            break;
        }
        k += 1;
    }
    let (block, rest) = seq.split_at(k);
    let tails = expand_segment(rest, levels)?;
    let mut out = Vec::with_capacity(block.len() * tails.len());
    for member in block {
        for tail in &tails {
            let mut unit = Vec::with_capacity(1 + tail.len());
            unit.push(member.clone());
            unit.extend(tail.iter().cloned());
            out.push(unit);
        }
    }
    Ok(out)
}

/// Split every path whose level sequence is non-decreasing into execution
/// units; the rest come back as diagnostics. All unit occurrences are
/// retained so downstream summarization can count support.
pub fn split_paths(
    paths: &[ExecutionPath],
    levels: &LevelMap,
) -> (Vec<ExecutionUnit>, Vec<InvalidPath>) {
    let mut units = Vec::new();
    let mut invalid = Vec::new();
    'path: for path in paths {
        let mut seq_levels = Vec::with_capacity(path.calls.len());
        for (pos, call) in path.calls.iter().enumerate() {
            match levels.level(&call.tool_name) {
                Some(l) => seq_levels.push(l),
                None => {
                    invalid.push(InvalidPath {
                        session_id: path.session_id.clone(),
                        reason: InvalidPathReason::UnknownTool {
                            tool: call.tool_name.clone(),
                            position: pos,
                        },
                    });
                    continue 'path;
                }
            }
        }
        if let Some(pos) = (1..seq_levels.len()).find(|&i| seq_levels[i] < seq_levels[i - 1]) {
            invalid.push(InvalidPath {
                session_id: path.session_id.clone(),
                reason: InvalidPathReason::NonMonotonicLevels { position: pos },
            });
            continue;
        }
        let expanded =
            expand_segment(&path.calls, levels).expect("levels checked for every tool above");
        units.extend(expanded.into_iter().map(|calls| ExecutionUnit {
            calls,
            source_session: path.session_id.clone(),
        }));
    }
    (units, invalid)
}

/// Project a unit onto its tool-name sequence.
pub fn unit_type(unit: &ExecutionUnit) -> TypeSignature {
    TypeSignature(unit.calls.iter().map(|c| c.tool_name.clone()).collect())
}
