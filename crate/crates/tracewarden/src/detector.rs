//! Violation detection against a frozen behavior profile.
//!
//! A path is first checked structurally (known tools, non-decreasing level
//! sequence, known unit types); only structurally sound paths proceed to the
//! semantic check, where each unit's instance rule is compared against the
//! generalized rule for its type. The structural check short-circuits, so a
//! verdict never carries both kinds of evidence.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::judge::Judge;
use crate::rules::{extract_instance_rule, BehaviorProfile};
use crate::trace::ExecutionPath;
use crate::units::{expand_segment, ExecutionUnit, TypeSignature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictLabel {
    Normal,
    StructuralAnomaly,
    SemanticAnomaly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    UnknownTool,
    LevelOrderViolation,
    UnknownUnitType,
    ConditionMismatch,
    JudgeUndecided,
}

/// One piece of evidence backing an anomaly verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<TypeSignature>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionVerdict {
    pub session_id: String,
    pub label: VerdictLabel,
    pub evidence: Vec<Finding>,
}

#[derive(Debug, Clone, Copy)]
pub struct DetectOptions {
    /// Fail closed: judge failures count the unit as anomalous.
    pub strict: bool,
    /// Collect all findings instead of stopping at the first.
    pub exhaustive: bool,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self {
            strict: true,
            exhaustive: false,
        }
    }
}

/// Check a path against the profile's structural constraints. `Ok` carries
/// the extracted units for the semantic stage.
pub fn structural_check(
    path: &ExecutionPath,
    profile: &BehaviorProfile,
) -> Result<Vec<ExecutionUnit>, Vec<Finding>> {
    structural_check_opts(path, profile, &DetectOptions::default())
}

pub fn structural_check_opts(
    path: &ExecutionPath,
    profile: &BehaviorProfile,
    opts: &DetectOptions,
) -> Result<Vec<ExecutionUnit>, Vec<Finding>> {
    let mut findings = Vec::new();

    for (pos, call) in path.calls.iter().enumerate() {
        if !profile.level_map.contains(&call.tool_name) {
            findings.push(Finding {
                kind: FindingKind::UnknownTool,
                message: format!(
                    "tool {:?} at position {pos} was never observed during profiling",
                    call.tool_name
                ),
                unit: None,
                position: Some(pos),
            });
            if !opts.exhaustive {
                return Err(findings);
            }
        }
    }
    if !findings.is_empty() {
        return Err(findings);
    }

    let levels: Vec<u32> = path
        .calls
        .iter()
        .map(|c| {
            profile
                .level_map
                .level(&c.tool_name)
                .expect("checked above")
        })
        .collect();
    for pos in 1..levels.len() {
        if levels[pos] < levels[pos - 1] {
            findings.push(Finding {
                kind: FindingKind::LevelOrderViolation,
                message: format!(
                    "tool {:?} (level {}) invoked after {:?} (level {}): hierarchy order violated at position {pos}",
                    path.calls[pos].tool_name,
                    levels[pos] + 1,
                    path.calls[pos - 1].tool_name,
                    levels[pos - 1] + 1,
                ),
                unit: None,
                position: Some(pos),
            });
            if !opts.exhaustive {
                return Err(findings);
            }
        }
    }
    if !findings.is_empty() {
        return Err(findings);
    }

    let units = expand_segment(&path.calls, &profile.level_map)
        .expect("all tools were checked against the level map")
        .into_iter()
        .map(|calls| ExecutionUnit {
            calls,
            source_session: path.session_id.clone(),
        })
        .collect::<Vec<_>>();

    for unit in &units {
        let sig = unit.signature();
        if !profile.known_types.contains(&sig) {
            findings.push(Finding {
                kind: FindingKind::UnknownUnitType,
                message: format!("execution unit type {sig} was never observed during profiling"),
                unit: Some(sig),
                position: None,
            });
            if !opts.exhaustive {
                return Err(findings);
            }
        }
    }
    if !findings.is_empty() {
        return Err(findings);
    }

    Ok(units)
}

/// Check the semantic constraints of a structurally valid path.
pub fn semantic_check(
    path: &ExecutionPath,
    profile: &BehaviorProfile,
    judge: &dyn Judge,
    opts: &DetectOptions,
) -> Result<(), Vec<Finding>> {
    let units = structural_check_opts(path, profile, opts)?;
    semantic_check_units(&units, profile, judge, opts)
}

fn semantic_check_units(
    units: &[ExecutionUnit],
    profile: &BehaviorProfile,
    judge: &dyn Judge,
    opts: &DetectOptions,
) -> Result<(), Vec<Finding>> {
    let mut findings = Vec::new();
    for unit in units {
        let sig = unit.signature();
        let candidate = match extract_instance_rule(unit, judge) {
            Ok(rule) => rule,
            Err(err) => {
                if opts.strict {
                    findings.push(Finding {
                        kind: FindingKind::JudgeUndecided,
                        message: format!("unit could not be judged, counting as anomalous: {err}"),
                        unit: Some(sig),
                        position: None,
                    });
                    if !opts.exhaustive {
                        return Err(findings);
                    }
                }
                continue;
            }
        };
        let Some(anchor) = profile.rule_for(&sig) else {
            findings.push(Finding {
                kind: FindingKind::ConditionMismatch,
                message: format!("no generalized rule stored for type {sig}"),
                unit: Some(sig),
                position: None,
            });
            if !opts.exhaustive {
                return Err(findings);
            }
            continue;
        };
        match judge.check_conditions(anchor, &candidate) {
            Ok(result) if result.matched => {}
            Ok(result) => {
                findings.push(Finding {
                    kind: FindingKind::ConditionMismatch,
                    message: result.reason,
                    unit: Some(sig),
                    position: result.failed_position,
                });
                if !opts.exhaustive {
                    return Err(findings);
                }
            }
            Err(err) => {
                if opts.strict {
                    findings.push(Finding {
                        kind: FindingKind::JudgeUndecided,
                        message: format!("condition check failed, counting as anomalous: {err}"),
                        unit: Some(sig),
                        position: None,
                    });
                    if !opts.exhaustive {
                        return Err(findings);
                    }
                }
            }
        }
    }
    if findings.is_empty() {
        Ok(())
    } else {
        Err(findings)
    }
}

/// Two-step classification with short-circuit: structural failure wins,
/// then semantic failure, otherwise the path is normal.
pub fn classify(
    path: &ExecutionPath,
    profile: &BehaviorProfile,
    judge: &dyn Judge,
    opts: &DetectOptions,
) -> DetectionVerdict {
    match structural_check_opts(path, profile, opts) {
        Err(evidence) => DetectionVerdict {
            session_id: path.session_id.clone(),
            label: VerdictLabel::StructuralAnomaly,
            evidence,
        },
        Ok(units) => match semantic_check_units(&units, profile, judge, opts) {
            Ok(()) => DetectionVerdict {
                session_id: path.session_id.clone(),
                label: VerdictLabel::Normal,
                evidence: Vec::new(),
            },
            Err(evidence) => DetectionVerdict {
                session_id: path.session_id.clone(),
                label: VerdictLabel::SemanticAnomaly,
                evidence,
            },
        },
    }
}

/// Classify a batch of paths, optionally across threads. Output is always
/// sorted by session id regardless of scheduling.
pub fn classify_all(
    paths: &[ExecutionPath],
    profile: &BehaviorProfile,
    judge: &dyn Judge,
    opts: &DetectOptions,
    jobs: usize,
) -> Vec<DetectionVerdict> {
    let mut order: Vec<&ExecutionPath> = paths.iter().collect();
    order.sort_by(|a, b| a.session_id.cmp(&b.session_id));

    let jobs = jobs
        .max(1)
        .min(judge.concurrency_limit().unwrap_or(usize::MAX))
        .min(order.len().max(1));

    if jobs <= 1 {
        return order
            .into_iter()
            .map(|p| classify(p, profile, judge, opts))
            .collect();
    }

    let chunk_size = order.len().div_ceil(jobs);
    let mut verdicts = Vec::with_capacity(order.len());
    std::thread::scope(|scope| {
        let handles: Vec<_> = order
            .chunks(chunk_size)
            .map(|chunk| {
                scope.spawn(move || {
                    chunk
                        .iter()
                        .map(|p| classify(p, profile, judge, opts))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for handle in handles {
            verdicts.extend(handle.join().expect("detection worker panicked"));
        }
    });
    verdicts
}

/// Per-run report document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub schema_version: u32,
    pub summary: ReportSummary,
    pub verdicts: Vec<DetectionVerdict>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReportSummary {
    pub total: usize,
    pub normal: usize,
    pub structural_anomaly: usize,
    pub semantic_anomaly: usize,
}

impl DetectionReport {
    pub fn from_verdicts(verdicts: Vec<DetectionVerdict>) -> Self {
        let mut summary = ReportSummary {
            total: verdicts.len(),
            ..ReportSummary::default()
        };
        for v in &verdicts {
            match v.label {
                VerdictLabel::Normal => summary.normal += 1,
                VerdictLabel::StructuralAnomaly => summary.structural_anomaly += 1,
                VerdictLabel::SemanticAnomaly => summary.semantic_anomaly += 1,
            }
        }
        Self {
            schema_version: 1,
            summary,
            verdicts,
        }
    }

    pub fn to_json_string(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    pub fn label_by_session(&self) -> BTreeMap<String, VerdictLabel> {
        self.verdicts
            .iter()
            .map(|v| (v.session_id.clone(), v.label))
            .collect()
    }
}
