//! Remote judge: renders the prompt templates, posts them to a completion
//! endpoint, and parses the raw reply text. Requests are retried with
//! exponential backoff; exhaustion surfaces as `RemoteUnavailable` so the
//! pipeline can fail closed.

use std::time::Duration;

use serde_json::{json, Value};

use super::parse::{parse_judge_output, ParsedReply, ReplySchema};
use super::prompt::render_prompt;
use super::{Judge, JudgeConfig, JudgeError, MatchResult};
use crate::rules::{GeneralizedRule, InstanceRule};
use crate::units::{ExecutionUnit, TypeSignature};

pub struct RemoteJudge {
    client: reqwest::blocking::Client,
    endpoint: String,
    credential: Option<String>,
    scenario_label: String,
    retries: u32,
    backoff: Duration,
    max_in_flight: usize,
}

impl RemoteJudge {
    pub fn new(config: &JudgeConfig) -> Result<Self, JudgeError> {
        let endpoint = config
            .endpoint
            .clone()
            .ok_or_else(|| JudgeError::InvalidConfig("remote mode requires an endpoint".into()))?;
        let credential = match &config.credential_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                JudgeError::InvalidConfig(format!("credential variable {var} is not set"))
            })?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| JudgeError::InvalidConfig(format!("http client: {e}")))?;
        Ok(Self {
            client,
            endpoint,
            credential,
            scenario_label: config.scenario_label.clone(),
            retries: config.retries,
            backoff: Duration::from_millis(config.retry_backoff_ms),
            max_in_flight: config.max_in_flight.max(1),
        })
    }

    /// Post one rendered prompt; the response body is the raw completion.
    fn complete(&self, prompt: &str) -> Result<String, JudgeError> {
        let mut last_error = String::new();
        for attempt in 0..=self.retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            let mut request = self
                .client
                .post(&self.endpoint)
                .header("content-type", "text/plain")
                .body(prompt.to_string());
            if let Some(token) = &self.credential {
                request = request.bearer_auth(token);
            }
            match request.send() {
                Ok(response) if response.status().is_success() => {
                    return response
                        .text()
                        .map_err(|e| JudgeError::RemoteUnavailable(e.to_string()));
                }
                Ok(response) => last_error = format!("endpoint returned {}", response.status()),
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(JudgeError::RemoteUnavailable(format!(
            "{last_error} (after {} attempts)",
            self.retries + 1
        )))
    }

    fn ask(
        &self,
        template_id: &str,
        payload: &Value,
        schema: ReplySchema,
    ) -> Result<ParsedReply, JudgeError> {
        let prompt = render_prompt(template_id, &self.scenario_label, payload)?;
        let reply = self.complete(&prompt)?;
        parse_judge_output(&reply, schema)
    }
}

fn unit_payload(unit: &ExecutionUnit) -> Value {
    Value::Array(
        unit.calls
            .iter()
            .map(|c| {
                json!({
                    "ToolName": c.tool_name,
                    "QueryParams": c.query_params,
                    "McpResponse": c.mcp_response,
                })
            })
            .collect(),
    )
}

fn rule_payload(rule: &InstanceRule) -> Value {
    json!({
        "Behavior": rule.behavior,
        "Conditions": condition_groups(&rule.conditions),
    })
}

fn condition_groups(conditions: &[std::collections::BTreeSet<String>]) -> Vec<String> {
    conditions
        .iter()
        .map(|set| format!("({})", set.iter().cloned().collect::<Vec<_>>().join(", ")))
        .collect()
}

impl Judge for RemoteJudge {
    fn extract_rule(&self, unit: &ExecutionUnit) -> Result<InstanceRule, JudgeError> {
        let reply = self.ask("rule_discovery", &unit_payload(unit), ReplySchema::Rule)?;
        match reply {
            ParsedReply::Rule {
                behavior,
                conditions,
            } => {
                if conditions.len() != unit.calls.len() {
                    return Err(JudgeError::MalformedJudgeOutput {
                        detail: format!(
                            "expected {} condition sets (one per call), got {}",
                            unit.calls.len(),
                            conditions.len()
                        ),
                        raw: behavior,
                    });
                }
                Ok(InstanceRule {
                    behavior,
                    conditions,
                    source_type: unit.signature(),
                })
            }
            ParsedReply::Match(_) => unreachable!("rule schema requested"),
        }
    }

    fn summarize_group(
        &self,
        signature: &TypeSignature,
        group: &[InstanceRule],
    ) -> Result<GeneralizedRule, JudgeError> {
        let payload = Value::Array(group.iter().map(rule_payload).collect());
        let reply = self.ask("rule_summary", &payload, ReplySchema::Rule)?;
        match reply {
            ParsedReply::Rule {
                behavior,
                conditions,
            } => {
                let arity = group.first().map(|r| r.conditions.len()).unwrap_or(0);
                if conditions.len() != arity {
                    return Err(JudgeError::MalformedJudgeOutput {
                        detail: format!(
                            "summary arity {} does not match instance arity {arity}",
                            conditions.len()
                        ),
                        raw: behavior,
                    });
                }
                Ok(GeneralizedRule {
                    behavior,
                    conditions,
                    type_sig: signature.clone(),
                    support: group.len(),
                })
            }
            ParsedReply::Match(_) => unreachable!("rule schema requested"),
        }
    }

    fn check_conditions(
        &self,
        anchor: &GeneralizedRule,
        candidate: &InstanceRule,
    ) -> Result<MatchResult, JudgeError> {
        let payload = json!({
            "anchor_behavior": {
                "Behavior": anchor.behavior,
                "Conditions": condition_groups(&anchor.conditions),
            },
            "wait_check_behavior": {
                "Behavior": candidate.behavior,
                "Conditions": condition_groups(&candidate.conditions),
            },
        });
        match self.ask("condition_check", &payload, ReplySchema::Match)? {
            ParsedReply::Match(result) => Ok(result),
            ParsedReply::Rule { .. } => unreachable!("match schema requested"),
        }
    }

    fn concurrency_limit(&self) -> Option<usize> {
        Some(self.max_in_flight)
    }
}
