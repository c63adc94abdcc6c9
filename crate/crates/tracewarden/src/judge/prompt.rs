//! Prompt templates for the remote judge. `[SCENARIO]` placeholders are
//! filled from the judge config and the payload is appended as the
//! documented input shape.

use serde_json::Value;

use super::JudgeError;

const RULE_DISCOVERY_TEMPLATE: &str = r#"[Role Definition]
You are a workflow analysis specialist skilled in:
- [SCENARIO] process mapping
- [SCENARIO] decision support
- Tool invocation pattern interpretation

[Objective]
Given a sequence of tool invocations in a [SCENARIO] workflow,
1. Identify the primary behavior.
2. Extract condition sets, one per tool invocation.
3. Output a concise, standardized rule for downstream analysis.

[Input]
A JSON array where each element represents a tool call: {
  "ToolName": "...",
  "QueryParams": {...},
  "McpResponse": {...}
}

[Methodology]
1. Path Interpretation: Reconstruct the workflow and list tools in sequence.
2. Behavior Identification: Determine the single primary behavior (e.g., "go to cardiology").
3. Condition Extraction:
   - Derive one condition set from each tool call (prefer `McpResponse`).
   - Keep only conditions relevant to the behavior.
   - Preserve one-to-one mapping: each tool -> one condition set.

[Quality Criteria]
- Evidence-based: Each condition traceable to a tool call.
- Precise: Use standard [SCENARIO] terminology.
- Consistent: One primary behavior per workflow.

[Output]
Return a JSON object:
{
  "Behavior": "<primary_behavior>",
  "Conditions": ["(condition1)", "(condition2)", ...]
}
"#;

const RULE_SUMMARY_TEMPLATE: &str = r#"[Role Definition]
You are a behavioral pattern analysis expert specialized in:
- Generalizing [SCENARIO] behaviors from observed instances
- Merging condition sets into unified logical groups
- Producing standardized rules for anomaly detection

[Objective]
Given multiple behavior instances, generate:
1. A standardized behavior name (unified terminology)
2. Generalized condition groups by merging per-instance conditions
3. A concise rule suitable for downstream anomaly detection

[Input]
Each behavior instance is a JSON object:
{
  "Behavior": "...",
  "Conditions": ["(...)", "(...)", "(...)"]
}

[Method]
1. Behavior Standardization: Normalize similar behaviors to a single canonical concept.
2. Condition Generalization:
   - Align condition sets by their position (1-to-1 index).
   - Retain conditions appearing in most instances; remove outliers or irrelevant terms.

[Output]
{
  "Behavior": "<standardized_behavior>",
  "Conditions": ["(group1)", "(group2)", "(group3)"]
}
"#;

const CONDITION_CHECK_TEMPLATE: &str = r#"[Role Definition]
You are a condition comparison expert specialized in identifying semantic similarity between [SCENARIO] conditions and reasoning about behavioral alignment.

[Objective]
Given two behaviors - an expected (anchor) and an observed (candidate) one - determine whether their condition sets are semantically matched.

[Input]
{
  "anchor_behavior": { "Behavior": "...", "Conditions": ["(a1)", "(a2)"] },
  "wait_check_behavior": { "Behavior": "...", "Conditions": ["(b1)", "(b2)"] }
}

[Matching Framework]
1. Complete Satisfaction: Every extracted condition set must have at least one matching
   anchor set; otherwise, the behaviors are considered mismatched.
2. Order-Sensitive Comparison: Compare condition sets in sequence (set_i <-> set_i).
3. At-Least-One Rule: Two sets match if at least one pair of items is semantically similar
   (e.g., chest_pain semantically same with chest_discomfort).
   `null` or `None` can match any condition.
4. Tolerance: Extra or missing items are acceptable; ignore unrelated terms that do not affect the primary behavior.
5. Strict Criterion: All extracted sets must be matched for overall success.

[Output]
{
  "Matched": true/false,
  "Reason": "<the reason for match or mismatch>"
}
"#;

/// Render a prompt for the given template id with the payload appended.
pub fn render_prompt(
    template_id: &str,
    scenario_label: &str,
    payload: &Value,
) -> Result<String, JudgeError> {
    let template = match template_id {
        "rule_discovery" => RULE_DISCOVERY_TEMPLATE,
        "rule_summary" => RULE_SUMMARY_TEMPLATE,
        "condition_check" => CONDITION_CHECK_TEMPLATE,
        other => return Err(JudgeError::UnknownTemplate(other.to_string())),
    };
    if payload_is_empty(payload) {
        return Err(JudgeError::EmptyPayload);
    }
    let body = template.replace("[SCENARIO]", scenario_label);
    let data = serde_json::to_string_pretty(payload).expect("payload serializes");
    Ok(format!("{body}\n[Data]\n{data}\n"))
}

fn payload_is_empty(payload: &Value) -> bool {
    match payload {
        Value::Null => true,
        Value::String(s) => s.is_empty(),
        Value::Array(items) => items.is_empty(),
        Value::Object(map) => map.is_empty(),
        _ => false,
    }
}
