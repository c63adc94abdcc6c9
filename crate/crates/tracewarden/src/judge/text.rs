//! Token canonicalization shared by the baseline judge and reply parsing.
//!
//! Every scalar value becomes one token: lowercased, non-alphanumeric runs
//! collapsed to `_`, stop tokens dropped.

use std::collections::BTreeSet;

use serde_json::{Map, Value};

const STOP_TOKENS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "by", "for", "from", "in", "is", "it", "of", "on",
    "or", "the", "to", "via", "with",
];

/// Canonicalize one raw scalar into a token. Returns `None` for empty or
/// stop-token results.
pub fn canon_token(raw: &str) -> Option<String> {
    let mut out = String::with_capacity(raw.len());
    let mut last_underscore = true;
    for ch in raw.chars() {
        if ch.is_alphanumeric() {
            out.extend(ch.to_lowercase());
            last_underscore = false;
        } else if !last_underscore {
            out.push('_');
            last_underscore = true;
        }
    }
    while out.ends_with('_') {
        out.pop();
    }
    if out.is_empty() || STOP_TOKENS.contains(&out.as_str()) {
        return None;
    }
    Some(out)
}

/// Collect canonical tokens from every scalar value in a document. Keys are
/// never tokenized.
pub fn tokenize_value(value: &Value, out: &mut BTreeSet<String>) {
    match value {
        Value::Null => {}
        Value::Bool(b) => {
            out.insert(b.to_string());
        }
        Value::Number(n) => {
            if let Some(tok) = canon_token(&n.to_string()) {
                out.insert(tok);
            }
        }
        Value::String(s) => {
            if let Some(tok) = canon_token(s) {
                out.insert(tok);
            }
        }
        Value::Array(items) => {
            for item in items {
                tokenize_value(item, out);
            }
        }
        Value::Object(map) => {
            for v in map.values() {
                tokenize_value(v, out);
            }
        }
    }
}

pub fn tokenize_document(map: &Map<String, Value>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for v in map.values() {
        tokenize_value(v, &mut out);
    }
    out
}

/// Canonical routing argument of a call: the canonicalized leaf values of
/// its parameters in sorted-key order, comma-joined.
pub fn routing_argument(params: &Map<String, Value>) -> String {
    let mut parts = Vec::new();
    collect_leaves(params, &mut parts);
    parts.join(",")
}

fn collect_leaves(map: &Map<String, Value>, out: &mut Vec<String>) {
    // serde_json maps iterate in sorted key order by default.
    for v in map.values() {
        leaf_tokens(v, out);
    }
}

fn leaf_tokens(value: &Value, out: &mut Vec<String>) {
    match value {
        Value::Null => {}
        Value::Bool(b) => out.push(b.to_string()),
        Value::Number(n) => {
            if let Some(tok) = canon_token(&n.to_string()) {
                out.push(tok);
            }
        }
        Value::String(s) => {
            if let Some(tok) = canon_token(s) {
                out.push(tok);
            }
        }
        Value::Array(items) => {
            for item in items {
                leaf_tokens(item, out);
            }
        }
        Value::Object(map) => collect_leaves(map, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    #[test]
    fn canon_snake_cases_phrases() {
        assert_eq!(canon_token("Knee Pain"), Some("knee_pain".into()));
        assert_eq!(
            canon_token("  Chest--Discomfort! "),
            Some("chest_discomfort".into())
        );
        assert_eq!(canon_token("REQ-2024/77"), Some("req_2024_77".into()));
    }

    #[test]
    fn canon_drops_stop_and_empty() {
        assert_eq!(canon_token("the"), None);
        assert_eq!(canon_token("  --  "), None);
        assert_eq!(canon_token(""), None);
    }

    #[test]
    fn tokenize_walks_nested_values() {
        let doc = json!({
            "keywords": ["knee pain", "Anxiety Attacks"],
            "nested": {"office": "orthopedics", "n": 3}
        });
        let mut out = BTreeSet::new();
        tokenize_value(&doc, &mut out);
        let want: BTreeSet<String> = ["knee_pain", "anxiety_attacks", "orthopedics", "3"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(out, want);
    }

    #[test]
    fn routing_argument_sorted_by_key() {
        let doc = json!({"specialty": "orthopedics"});
        let map = doc.as_object().unwrap();
        assert_eq!(routing_argument(map), "orthopedics");

        let doc = json!({"b_key": "second", "a_key": "first"});
        assert_eq!(routing_argument(doc.as_object().unwrap()), "first,second");
    }

    proptest! {
        // Canonicalization is idempotent: canon(canon(x)) == canon(x).
        #[test]
        fn canon_is_idempotent(raw in "\\PC{0,24}") {
            if let Some(tok) = canon_token(&raw) {
                prop_assert_eq!(canon_token(&tok), Some(tok.clone()));
            }
        }
    }
}
