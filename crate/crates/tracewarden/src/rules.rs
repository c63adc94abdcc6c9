//! Behavioral rule extraction and summarization.
//!
//! Each execution unit yields an instance rule (one condition set per call
//! plus a behavior). Instances are grouped by type signature and merged
//! position-wise into one generalized rule per type. The resulting
//! `BehaviorProfile` — level map, known types, rules — is the frozen model
//! the detector compares new paths against.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};
use thiserror::Error;

use crate::hierarchy::{propagate_paths, HierarchyError, LevelMap};
use crate::judge::{Judge, JudgeError};
use crate::trace::ExecutionPath;
use crate::units::{split_paths, ExecutionUnit, InvalidPath, TypeSignature};

pub const PROFILE_SCHEMA_VERSION: u32 = 1;

/// (conditions, behavior) extracted from one unit.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRule {
    pub behavior: String,
    /// Exactly one condition set per call in the source unit.
    pub conditions: Vec<BTreeSet<String>>,
    pub source_type: TypeSignature,
}

/// Position-wise merge of all instance rules sharing a type signature.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedRule {
    pub behavior: String,
    pub conditions: Vec<BTreeSet<String>>,
    pub type_sig: TypeSignature,
    pub support: usize,
}

#[derive(Debug, Error)]
pub enum RulesError {
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error("instances of type {type_sig} disagree on arity: {expected} vs {found}")]
    ArityMismatch {
        type_sig: String,
        expected: usize,
        found: usize,
    },
    #[error("judge failure: {0}")]
    Judge(#[from] JudgeError),
}

/// Extract the instance rule for one unit via the configured judge.
pub fn extract_instance_rule(
    unit: &ExecutionUnit,
    judge: &dyn Judge,
) -> Result<InstanceRule, RulesError> {
    Ok(judge.extract_rule(unit)?)
}

/// Pure partition of instance rules by their structural type.
pub fn group_by_type(rules: Vec<InstanceRule>) -> BTreeMap<TypeSignature, Vec<InstanceRule>> {
    let mut groups: BTreeMap<TypeSignature, Vec<InstanceRule>> = BTreeMap::new();
    for rule in rules {
        groups
            .entry(rule.source_type.clone())
            .or_default()
            .push(rule);
    }
    groups
}

/// Summarize one homogeneous group into its generalized rule.
pub fn summarize(group: &[InstanceRule], judge: &dyn Judge) -> Result<GeneralizedRule, RulesError> {
    let first = group.first().expect("group is non-empty");
    let arity = first.conditions.len();
    for rule in group {
        if rule.source_type != first.source_type || rule.conditions.len() != arity {
            return Err(RulesError::ArityMismatch {
                type_sig: first.source_type.to_string(),
                expected: arity,
                found: rule.conditions.len(),
            });
        }
    }
    Ok(judge.summarize_group(&first.source_type, group)?)
}

/// The frozen behavior model built from trusted benign traces.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorProfile {
    pub schema_version: u32,
    pub scenario_label: String,
    pub level_map: LevelMap,
    pub known_types: BTreeSet<TypeSignature>,
    pub rules: BTreeMap<TypeSignature, GeneralizedRule>,
}

impl BehaviorProfile {
    pub fn rule_for(&self, sig: &TypeSignature) -> Option<&GeneralizedRule> {
        self.rules.get(sig)
    }
}

#[derive(Debug)]
pub struct ProfileOutcome {
    pub profile: BehaviorProfile,
    /// Paths excluded from profiling, surfaced for the caller to report.
    pub invalid_paths: Vec<InvalidPath>,
}

/// Full profiling pipeline: propagate levels, unitize, extract, group,
/// summarize. Deterministic for a deterministic judge and fixed input order.
pub fn build_profile(
    paths: &[ExecutionPath],
    judge: &dyn Judge,
    scenario_label: &str,
) -> Result<ProfileOutcome, RulesError> {
    let level_map = propagate_paths(paths)?;
    let (units, invalid_paths) = split_paths(paths, &level_map);

    let mut instances = Vec::with_capacity(units.len());
    for unit in &units {
        instances.push(extract_instance_rule(unit, judge)?);
    }

    let mut rules = BTreeMap::new();
    for (sig, group) in group_by_type(instances) {
        let rule = summarize(&group, judge)?;
        rules.insert(sig, rule);
    }

    let known_types = rules.keys().cloned().collect();
    Ok(ProfileOutcome {
        profile: BehaviorProfile {
            schema_version: PROFILE_SCHEMA_VERSION,
            scenario_label: scenario_label.to_string(),
            level_map,
            known_types,
            rules,
        },
        invalid_paths,
    })
}

#[derive(Debug, Error)]
pub enum ProfileCodecError {
    #[error("profile schema version {found} is not supported (expected {expected})")]
    SchemaVersionMismatch { found: u64, expected: u32 },
    #[error("malformed profile document: {0}")]
    Malformed(String),
}

impl BehaviorProfile {
    /// Canonical document form: levels displayed 1-based, types and
    /// condition items sorted, so serialization is byte-reproducible.
    pub fn to_document(&self) -> Value {
        let rules: Vec<Value> = self
            .rules
            .values()
            .map(|rule| {
                json!({
                    "type": rule.type_sig.0,
                    "behavior": rule.behavior,
                    "conditions": rule
                        .conditions
                        .iter()
                        .map(|set| set.iter().cloned().collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                    "support": rule.support,
                })
            })
            .collect();
        json!({
            "schema_version": self.schema_version,
            "scenario_label": self.scenario_label,
            "levels": self.level_map.display_levels(),
            "known_types": self.known_types.iter().map(|t| t.0.clone()).collect::<Vec<_>>(),
            "rules": rules,
        })
    }

    pub fn to_json_string(&self) -> String {
        let mut out =
            serde_json::to_string_pretty(&self.to_document()).expect("profile serializes");
        out.push('\n');
        out
    }

    pub fn from_document(doc: &Value) -> Result<Self, ProfileCodecError> {
        let malformed = |msg: &str| ProfileCodecError::Malformed(msg.to_string());
        let obj = doc.as_object().ok_or_else(|| malformed("not an object"))?;
        let found = obj
            .get("schema_version")
            .and_then(Value::as_u64)
            .ok_or_else(|| malformed("missing schema_version"))?;
        if found != PROFILE_SCHEMA_VERSION as u64 {
            return Err(ProfileCodecError::SchemaVersionMismatch {
                found,
                expected: PROFILE_SCHEMA_VERSION,
            });
        }
        let scenario_label = obj
            .get("scenario_label")
            .and_then(Value::as_str)
            .unwrap_or("generic")
            .to_string();

        let levels_doc = obj
            .get("levels")
            .and_then(Value::as_object)
            .ok_or_else(|| malformed("missing levels"))?;
        let mut displayed = BTreeMap::new();
        for (tool, level) in levels_doc {
            let level = level
                .as_u64()
                .ok_or_else(|| malformed("level must be an integer"))?;
            displayed.insert(tool.clone(), level as u32);
        }
        let level_map = LevelMap::from_display(&displayed);

        let mut rules = BTreeMap::new();
        for entry in obj
            .get("rules")
            .and_then(Value::as_array)
            .ok_or_else(|| malformed("missing rules"))?
        {
            let sig = TypeSignature(string_list(entry.get("type"), "rule type")?);
            let behavior = entry
                .get("behavior")
                .and_then(Value::as_str)
                .ok_or_else(|| malformed("rule missing behavior"))?
                .to_string();
            let support = entry
                .get("support")
                .and_then(Value::as_u64)
                .ok_or_else(|| malformed("rule missing support"))?
                as usize;
            let mut conditions = Vec::new();
            for set in entry
                .get("conditions")
                .and_then(Value::as_array)
                .ok_or_else(|| malformed("rule missing conditions"))?
            {
                conditions.push(
                    string_list(Some(set), "condition set")?
                        .into_iter()
                        .collect::<BTreeSet<String>>(),
                );
            }
            rules.insert(
                sig.clone(),
                GeneralizedRule {
                    behavior,
                    conditions,
                    type_sig: sig,
                    support,
                },
            );
        }

        let mut known_types = BTreeSet::new();
        for entry in obj
            .get("known_types")
            .and_then(Value::as_array)
            .ok_or_else(|| malformed("missing known_types"))?
        {
            known_types.insert(TypeSignature(string_list(Some(entry), "known type")?));
        }

        Ok(Self {
            schema_version: PROFILE_SCHEMA_VERSION,
            scenario_label,
            level_map,
            known_types,
            rules,
        })
    }
}

fn string_list(value: Option<&Value>, what: &str) -> Result<Vec<String>, ProfileCodecError> {
    let items = value
        .and_then(Value::as_array)
        .ok_or_else(|| ProfileCodecError::Malformed(format!("{what} must be an array")))?;
    items
        .iter()
        .map(|v| {
            v.as_str().map(str::to_string).ok_or_else(|| {
                ProfileCodecError::Malformed(format!("{what} items must be strings"))
            })
        })
        .collect()
}
