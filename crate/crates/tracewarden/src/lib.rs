//! Provenance-based anomaly detection for LLM-agent tool-invocation traces.
//!
//! The library profiles normal agent behavior from historical gateway traces
//! — recovering a tool hierarchy, splitting paths into level-respecting
//! execution units, and summarizing per-type behavioral rules — then
//! classifies new traces as normal, structurally anomalous, or semantically
//! anomalous. A benchmark generator and evaluation harness round out the
//! toolkit.

pub mod bench;
pub mod cli;
pub mod detector;
pub mod hierarchy;
pub mod judge;
pub mod rules;
pub mod trace;
pub mod units;

pub use detector::{classify, classify_all, DetectOptions, DetectionVerdict, VerdictLabel};
pub use hierarchy::{propagate, propagate_paths, relations, LevelMap, RelationSet};
pub use judge::{BaselineJudge, Judge, JudgeConfig, RemoteJudge};
pub use rules::{build_profile, BehaviorProfile};
pub use trace::{parse_log, sessionize, ExecutionPath, ToolCall};
pub use units::{expand_segment, split_paths, ExecutionUnit, TypeSignature};
