//! Semantic judgment: deciding whether an observed behavior instance
//! satisfies a generalized rule.
//!
//! Two implementations share one trait: a deterministic offline baseline
//! (canonical-token equality plus an explicit synonym table) and a remote
//! client that renders prompt templates and parses model replies. The
//! baseline is the default and the one the acceptance suite pins down.

mod baseline;
mod parse;
mod prompt;
mod remote;
pub mod text;

pub use baseline::BaselineJudge;
pub use parse::{parse_judge_output, ParsedReply, ReplySchema};
pub use prompt::render_prompt;
pub use remote::RemoteJudge;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rules::{GeneralizedRule, InstanceRule};
use crate::units::{ExecutionUnit, TypeSignature};

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("remote judge unavailable: {0}")]
    RemoteUnavailable(String),
    #[error("malformed judge output: {detail}")]
    MalformedJudgeOutput {
        detail: String,
        /// Raw reply text retained for diagnostics.
        raw: String,
    },
    #[error("unknown prompt template {0:?}")]
    UnknownTemplate(String),
    #[error("prompt payload is empty")]
    EmptyPayload,
    #[error("invalid judge configuration: {0}")]
    InvalidConfig(String),
}

/// Outcome of a condition check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub matched: bool,
    /// Non-empty whenever `matched` is false.
    pub reason: String,
    /// First failed position, when the implementation can name one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_position: Option<usize>,
}

impl MatchResult {
    pub fn matched(reason: impl Into<String>) -> Self {
        Self {
            matched: true,
            reason: reason.into(),
            failed_position: None,
        }
    }

    pub fn mismatch(reason: impl Into<String>, position: Option<usize>) -> Self {
        Self {
            matched: false,
            reason: reason.into(),
            failed_position: position,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JudgeMode {
    #[default]
    Baseline,
    Remote,
}

fn default_timeout_secs() -> u64 {
    30
}
fn default_retries() -> u32 {
    2
}
fn default_backoff_ms() -> u64 {
    250
}
fn default_max_in_flight() -> usize {
    4
}
fn default_scenario_label() -> String {
    "generic".into()
}

/// Judge configuration, loadable from a JSON document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgeConfig {
    #[serde(default)]
    pub mode: JudgeMode,
    /// Fills the [SCENARIO] placeholders in prompt templates.
    #[serde(default = "default_scenario_label")]
    pub scenario_label: String,
    /// token -> equivalent tokens; symmetric closure is applied at load.
    #[serde(default)]
    pub synonyms: BTreeMap<String, Vec<String>>,
    /// Fraction of instances a condition item must appear in to survive
    /// summarization. 0.0 keeps the full union.
    #[serde(default)]
    pub majority_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the bearer credential.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credential_env: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub retry_backoff_ms: u64,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        Self {
            mode: JudgeMode::Baseline,
            scenario_label: default_scenario_label(),
            synonyms: BTreeMap::new(),
            majority_threshold: 0.0,
            endpoint: None,
            credential_env: None,
            timeout_secs: default_timeout_secs(),
            retries: default_retries(),
            retry_backoff_ms: default_backoff_ms(),
            max_in_flight: default_max_in_flight(),
        }
    }
}

impl JudgeConfig {
    pub fn load(path: &Path) -> Result<Self, JudgeError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| JudgeError::InvalidConfig(format!("{}: {e}", path.display())))?;
        let cfg: JudgeConfig = serde_json::from_str(&raw)
            .map_err(|e| JudgeError::InvalidConfig(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), JudgeError> {
        match self.mode {
            JudgeMode::Baseline => {
                if self.endpoint.is_some() || self.credential_env.is_some() {
                    return Err(JudgeError::InvalidConfig(
                        "baseline mode takes no network fields".into(),
                    ));
                }
            }
            JudgeMode::Remote => {
                if self.endpoint.is_none() {
                    return Err(JudgeError::InvalidConfig(
                        "remote mode requires an endpoint".into(),
                    ));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.majority_threshold) {
            return Err(JudgeError::InvalidConfig(
                "majority_threshold must be within [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Token equivalence table with its symmetric closure applied.
#[derive(Debug, Clone, Default)]
pub struct SynonymTable {
    pairs: BTreeSet<(String, String)>,
}

impl SynonymTable {
    pub fn from_map(map: &BTreeMap<String, Vec<String>>) -> Self {
        let mut pairs = BTreeSet::new();
        for (token, equivalents) in map {
            for eq in equivalents {
                pairs.insert((token.clone(), eq.clone()));
                pairs.insert((eq.clone(), token.clone()));
            }
        }
        Self { pairs }
    }

    pub fn equivalent(&self, a: &str, b: &str) -> bool {
        a == b || self.pairs.contains(&(a.to_string(), b.to_string()))
    }
}

/// The semantic decisions the profiling and detection pipelines delegate.
pub trait Judge: Send + Sync {
    /// Distill one execution unit into an instance rule: one condition set
    /// per call, plus the primary behavior.
    fn extract_rule(&self, unit: &ExecutionUnit) -> Result<InstanceRule, JudgeError>;

    /// Merge a homogeneous group of instance rules into a generalized rule.
    fn summarize_group(
        &self,
        signature: &TypeSignature,
        group: &[InstanceRule],
    ) -> Result<GeneralizedRule, JudgeError>;

    /// Position-wise semantic comparison of a candidate against an anchor.
    fn check_conditions(
        &self,
        anchor: &GeneralizedRule,
        candidate: &InstanceRule,
    ) -> Result<MatchResult, JudgeError>;

    /// Upper bound on concurrent calls this judge tolerates; `None` means
    /// freely concurrent.
    fn concurrency_limit(&self) -> Option<usize> {
        None
    }
}

/// Instantiate the judge described by a config.
pub fn build_judge(config: &JudgeConfig) -> Result<Box<dyn Judge>, JudgeError> {
    config.validate()?;
    match config.mode {
        JudgeMode::Baseline => Ok(Box::new(BaselineJudge::new(config))),
        JudgeMode::Remote => Ok(Box::new(RemoteJudge::new(config)?)),
    }
}
