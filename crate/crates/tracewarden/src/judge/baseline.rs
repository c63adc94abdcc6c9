//! The deterministic offline judge.
//!
//! Condition extraction tokenizes each call's response (falling back to its
//! parameters), the behavior is the last call's tool plus its canonical
//! routing argument, summarization merges condition sets position-wise, and
//! matching is canonical-token equality extended by the synonym table. An
//! empty condition set matches anything.

use std::collections::{BTreeMap, BTreeSet};

use super::text::{routing_argument, tokenize_document};
use super::{Judge, JudgeConfig, JudgeError, MatchResult, SynonymTable};
use crate::rules::{GeneralizedRule, InstanceRule};
use crate::units::{ExecutionUnit, TypeSignature};

#[derive(Debug, Clone)]
pub struct BaselineJudge {
    synonyms: SynonymTable,
    majority_threshold: f64,
}

impl Default for BaselineJudge {
    fn default() -> Self {
        Self::new(&JudgeConfig::default())
    }
}

impl BaselineJudge {
    pub fn new(config: &JudgeConfig) -> Self {
        Self {
            synonyms: SynonymTable::from_map(&config.synonyms),
            majority_threshold: config.majority_threshold,
        }
    }

    pub fn with_synonyms(map: &BTreeMap<String, Vec<String>>) -> Self {
        Self {
            synonyms: SynonymTable::from_map(map),
            majority_threshold: 0.0,
        }
    }

    fn position_matches(&self, anchor: &BTreeSet<String>, candidate: &BTreeSet<String>) -> bool {
        // A null/absent condition set matches any condition.
        if anchor.is_empty() || candidate.is_empty() {
            return true;
        }
        candidate
            .iter()
            .any(|c| anchor.iter().any(|a| self.synonyms.equivalent(a, c)))
    }
}

/// Behavior string for a call: `Tool(routing_argument)`.
fn behavior_of(unit: &ExecutionUnit) -> String {
    let last = unit.calls.last().expect("unit is non-empty");
    format!(
        "{}({})",
        last.tool_name,
        routing_argument(&last.query_params)
    )
}

impl Judge for BaselineJudge {
    fn extract_rule(&self, unit: &ExecutionUnit) -> Result<InstanceRule, JudgeError> {
        let conditions: Vec<BTreeSet<String>> = unit
            .calls
            .iter()
            .map(|call| {
                let from_response = tokenize_document(&call.mcp_response);
                if from_response.is_empty() {
                    tokenize_document(&call.query_params)
                } else {
                    from_response
                }
            })
            .collect();
        Ok(InstanceRule {
            behavior: behavior_of(unit),
            conditions,
            source_type: unit.signature(),
        })
    }

    fn summarize_group(
        &self,
        signature: &TypeSignature,
        group: &[InstanceRule],
    ) -> Result<GeneralizedRule, JudgeError> {
        debug_assert!(!group.is_empty());
        debug_assert!(group
            .iter()
            .all(|r| r.conditions.len() == group[0].conditions.len()));

        let arity = group[0].conditions.len();
        let support = group.len();
        let min_count = if self.majority_threshold <= 0.0 {
            1
        } else {
            (self.majority_threshold * support as f64).ceil().max(1.0) as usize
        };

        let mut conditions = Vec::with_capacity(arity);
        for pos in 0..arity {
            let mut counts: BTreeMap<&String, usize> = BTreeMap::new();
            for rule in group {
                for item in &rule.conditions[pos] {
                    *counts.entry(item).or_default() += 1;
                }
            }
            conditions.push(
                counts
                    .into_iter()
                    .filter(|(_, n)| *n >= min_count)
                    .map(|(item, _)| item.clone())
                    .collect::<BTreeSet<String>>(),
            );
        }

        // Standardized behavior: the most frequent instance behavior, ties
        // broken lexicographically.
        let mut behavior_counts: BTreeMap<&String, usize> = BTreeMap::new();
        for rule in group {
            *behavior_counts.entry(&rule.behavior).or_default() += 1;
        }
        let behavior = behavior_counts
            .into_iter()
            .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(b, _)| b.clone())
            .unwrap_or_default();

        Ok(GeneralizedRule {
            behavior,
            conditions,
            type_sig: signature.clone(),
            support,
        })
    }

    fn check_conditions(
        &self,
        anchor: &GeneralizedRule,
        candidate: &InstanceRule,
    ) -> Result<MatchResult, JudgeError> {
        if anchor.conditions.len() != candidate.conditions.len() {
            return Ok(MatchResult::mismatch(
                format!(
                    "arity mismatch: anchor has {} condition sets, candidate has {}",
                    anchor.conditions.len(),
                    candidate.conditions.len()
                ),
                None,
            ));
        }
        for (pos, (a, c)) in anchor
            .conditions
            .iter()
            .zip(candidate.conditions.iter())
            .enumerate()
        {
            if !self.position_matches(a, c) {
                return Ok(MatchResult::mismatch(
                    format!(
                        "condition set at position {pos} has no equivalent item: candidate {:?} vs anchor {:?}",
                        c.iter().collect::<Vec<_>>(),
                        a.iter().collect::<Vec<_>>()
                    ),
                    Some(pos),
                ));
            }
        }
        Ok(MatchResult::matched(format!(
            "all {} condition sets matched",
            anchor.conditions.len()
        )))
    }
}
