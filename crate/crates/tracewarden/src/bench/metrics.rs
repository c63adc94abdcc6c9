//! Detection metrics over the binary anomaly task, with per-category TP/FN
//! accounting for the two anomaly classes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{LabeledTrace, TraceLabel};
use crate::detector::{DetectionVerdict, VerdictLabel};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("verdicts and gold labels disagree: {0}")]
    SessionMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_count: usize,
}

impl CategoryCounts {
    pub fn recall(&self) -> f64 {
        let total = self.tp + self.fn_count;
        if total == 0 {
            0.0
        } else {
            self.tp as f64 / total as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub confusion: ConfusionCounts,
    /// Per-category TP/FN for the anomaly classes.
    pub per_category: BTreeMap<String, CategoryCounts>,
}

impl Metrics {
    pub fn benign_false_positive_rate(&self) -> f64 {
        let benign = self.confusion.fp + self.confusion.tn;
        if benign == 0 {
            0.0
        } else {
            self.confusion.fp as f64 / benign as f64
        }
    }

    pub fn to_json_string(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("metrics serialize");
        out.push('\n');
        out
    }

    /// Human-readable table with per-category TP/FN rows.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str("category   tp    fn    recall\n");
        for (category, counts) in &self.per_category {
            out.push_str(&format!(
                "{category:<9} {tp:>4}  {fnc:>4}    {recall:.4}\n",
                tp = counts.tp,
                fnc = counts.fn_count,
                recall = counts.recall(),
            ));
        }
        out.push_str(&format!(
            "\nprecision {:.4}  recall {:.4}  f1 {:.4}  accuracy {:.4}\n",
            self.precision, self.recall, self.f1, self.accuracy
        ));
        out.push_str(&format!(
            "confusion: tp {} fp {} tn {} fn {}\n",
            self.confusion.tp, self.confusion.fp, self.confusion.tn, self.confusion.fn_count
        ));
        out
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Score verdicts against gold labels aligned by session id. Anomaly is the
/// positive class; any non-normal verdict counts as a predicted anomaly.
pub fn evaluate(
    verdicts: &[DetectionVerdict],
    gold: &BTreeMap<String, TraceLabel>,
) -> Result<Metrics, EvalError> {
    let mut seen = BTreeMap::new();
    for verdict in verdicts {
        if seen
            .insert(verdict.session_id.clone(), verdict.label)
            .is_some()
        {
            return Err(EvalError::SessionMismatch(format!(
                "duplicate verdict for session {}",
                verdict.session_id
            )));
        }
    }
    if seen.len() != gold.len() {
        return Err(EvalError::SessionMismatch(format!(
            "{} verdicts vs {} gold labels",
            seen.len(),
            gold.len()
        )));
    }
    if let Some(missing) = gold.keys().find(|sid| !seen.contains_key(*sid)) {
        return Err(EvalError::SessionMismatch(format!(
            "no verdict for session {missing}"
        )));
    }

    let mut confusion = ConfusionCounts::default();
    let mut per_category: BTreeMap<String, CategoryCounts> = BTreeMap::new();
    per_category.insert("AT-C1".into(), CategoryCounts::default());
    per_category.insert("AT-C2".into(), CategoryCounts::default());

    for (session, label) in gold {
        let predicted_anomaly = seen[session] != VerdictLabel::Normal;
        match (label.is_anomalous(), predicted_anomaly) {
            (true, true) => confusion.tp += 1,
            (true, false) => confusion.fn_count += 1,
            (false, true) => confusion.fp += 1,
            (false, false) => confusion.tn += 1,
        }
        if label.is_anomalous() {
            let entry = per_category.entry(label.to_string()).or_default();
            if predicted_anomaly {
                entry.tp += 1;
            } else {
                entry.fn_count += 1;
            }
        }
    }

    let precision = ratio(confusion.tp, confusion.tp + confusion.fp);
    let recall = ratio(confusion.tp, confusion.tp + confusion.fn_count);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let total = confusion.tp + confusion.fp + confusion.tn + confusion.fn_count;
    let accuracy = ratio(confusion.tp + confusion.tn, total);

    Ok(Metrics {
        precision,
        recall,
        f1,
        accuracy,
        confusion,
        per_category,
    })
}

pub fn evaluate_traces(
    verdicts: &[DetectionVerdict],
    gold: &[LabeledTrace],
) -> Result<Metrics, EvalError> {
    let map: BTreeMap<String, TraceLabel> = gold
        .iter()
        .map(|t| (t.path.session_id.clone(), t.label))
        .collect();
    if map.len() != gold.len() {
        return Err(EvalError::SessionMismatch(
            "duplicate session ids in gold labels".into(),
        ));
    }
    evaluate(verdicts, &map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn verdict(session: &str, label: VerdictLabel) -> DetectionVerdict {
        DetectionVerdict {
            session_id: session.into(),
            label,
            evidence: vec![],
        }
    }

    /// Build a synthetic run with the requested confusion counts.
    fn run(
        tp_c1: usize,
        fn_c1: usize,
        tp_c2: usize,
        fn_c2: usize,
        fp: usize,
        tn: usize,
    ) -> (Vec<DetectionVerdict>, BTreeMap<String, TraceLabel>) {
        let mut verdicts = Vec::new();
        let mut gold = BTreeMap::new();
        let mut n = 0;
        let mut add = |label: TraceLabel, predicted: VerdictLabel, n: &mut usize| {
            let sid = format!("s{:05}", *n);
            *n += 1;
            gold.insert(sid.clone(), label);
            verdicts.push(verdict(&sid, predicted));
        };
        for _ in 0..tp_c1 {
            add(TraceLabel::AtC1, VerdictLabel::StructuralAnomaly, &mut n);
        }
        for _ in 0..fn_c1 {
            add(TraceLabel::AtC1, VerdictLabel::Normal, &mut n);
        }
        for _ in 0..tp_c2 {
            add(TraceLabel::AtC2, VerdictLabel::SemanticAnomaly, &mut n);
        }
        for _ in 0..fn_c2 {
            add(TraceLabel::AtC2, VerdictLabel::Normal, &mut n);
        }
        for _ in 0..fp {
            add(TraceLabel::Benign, VerdictLabel::StructuralAnomaly, &mut n);
        }
        for _ in 0..tn {
            add(TraceLabel::Benign, VerdictLabel::Normal, &mut n);
        }
        (verdicts, gold)
    }

    #[test]
    fn per_category_recall_matches_hand_computation() {
        let (verdicts, gold) = run(143, 7, 137, 13, 0, 1300);
        let metrics = evaluate(&verdicts, &gold).unwrap();
        let c1 = &metrics.per_category["AT-C1"];
        assert_eq!((c1.tp, c1.fn_count), (143, 7));
        assert!((c1.recall() - 143.0 / 150.0).abs() < 1e-12);
        let c2 = &metrics.per_category["AT-C2"];
        assert_eq!((c2.tp, c2.fn_count), (137, 13));
    }

    #[test]
    fn perfect_predictions_score_ones() {
        let (verdicts, gold) = run(10, 0, 10, 0, 0, 30);
        let metrics = evaluate(&verdicts, &gold).unwrap();
        assert_eq!(metrics.precision, 1.0);
        assert_eq!(metrics.recall, 1.0);
        assert_eq!(metrics.f1, 1.0);
        assert_eq!(metrics.accuracy, 1.0);
        assert_eq!(metrics.benign_false_positive_rate(), 0.0);
    }

    #[test]
    fn mismatched_sessions_error() {
        let (verdicts, mut gold) = run(1, 0, 0, 0, 0, 1);
        gold.insert("extra".into(), TraceLabel::Benign);
        assert!(matches!(
            evaluate(&verdicts, &gold),
            Err(EvalError::SessionMismatch(_))
        ));
    }

    #[test]
    fn duplicate_verdicts_error() {
        let (mut verdicts, gold) = run(1, 0, 0, 0, 0, 1);
        let dup = verdicts[0].clone();
        verdicts.push(dup);
        assert!(evaluate(&verdicts, &gold).is_err());
    }

    #[test]
    fn table_shows_both_categories() {
        let (verdicts, gold) = run(5, 1, 4, 2, 1, 10);
        let table = evaluate(&verdicts, &gold).unwrap().render_table();
        assert!(table.contains("AT-C1"));
        assert!(table.contains("AT-C2"));
        assert!(table.contains("precision"));
    }

    proptest! {
        // evaluate agrees with a direct recomputation from raw counts.
        #[test]
        fn matches_recomputation(
            tp_c1 in 0usize..40, fn_c1 in 0usize..40,
            tp_c2 in 0usize..40, fn_c2 in 0usize..40,
            fp in 0usize..40, tn in 0usize..40,
        ) {
            prop_assume!(tp_c1 + fn_c1 + tp_c2 + fn_c2 + fp + tn > 0);
            let (verdicts, gold) = run(tp_c1, fn_c1, tp_c2, fn_c2, fp, tn);
            let metrics = evaluate(&verdicts, &gold).unwrap();

            let tp = tp_c1 + tp_c2;
            let fn_total = fn_c1 + fn_c2;
            let expect_p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
            let expect_r = if tp + fn_total == 0 { 0.0 } else { tp as f64 / (tp + fn_total) as f64 };
            let expect_f1 = if expect_p + expect_r == 0.0 {
                0.0
            } else {
                2.0 * expect_p * expect_r / (expect_p + expect_r)
            };
            let total = tp + fp + tn + fn_total;
            let expect_acc = (tp + tn) as f64 / total as f64;

            prop_assert!((metrics.precision - expect_p).abs() < 1e-9);
            prop_assert!((metrics.recall - expect_r).abs() < 1e-9);
            prop_assert!((metrics.f1 - expect_f1).abs() < 1e-9);
            prop_assert!((metrics.accuracy - expect_acc).abs() < 1e-9);

            // F1 bounds: 0 <= F1 <= min(1, 2 min(P, R)).
            prop_assert!(metrics.f1 >= 0.0);
            prop_assert!(metrics.f1 <= 1.0 + 1e-12);
            prop_assert!(metrics.f1 <= 2.0 * metrics.precision.min(metrics.recall) + 1e-12);
        }
    }
}
