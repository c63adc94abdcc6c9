//! Library-level pipeline checks on generated datasets: recovered hierarchy
//! shape, verdict kinds per anomaly category, and fail-closed judging.

use std::collections::BTreeMap;

use tracewarden::bench::{self, clinic, procurement, Scenario, ScenarioSpec, TraceLabel};
use tracewarden::detector::{classify, classify_all, DetectOptions, FindingKind, VerdictLabel};
use tracewarden::judge::{BaselineJudge, Judge, JudgeError, MatchResult};
use tracewarden::rules::{build_profile, BehaviorProfile, GeneralizedRule, InstanceRule};
use tracewarden::trace::ExecutionPath;
use tracewarden::units::{ExecutionUnit, TypeSignature};

fn benign_paths(dataset: &[bench::LabeledTrace]) -> Vec<ExecutionPath> {
    dataset
        .iter()
        .filter(|t| t.label == TraceLabel::Benign)
        .map(|t| t.path.clone())
        .collect()
}

fn clinic_profile(benign: usize, seed: u64) -> (Vec<bench::LabeledTrace>, BehaviorProfile) {
    let spec = ScenarioSpec {
        scenario: Scenario::Clinic,
        benign,
        at_c1: 0,
        at_c2: 0,
        seed,
    };
    let dataset = bench::gen_dataset(&spec).unwrap();
    let judge = BaselineJudge::new(&bench::scenario_judge_config(Scenario::Clinic));
    let profile = build_profile(&benign_paths(&dataset), &judge, "clinic triage")
        .unwrap()
        .profile;
    (dataset, profile)
}

#[test]
fn clinic_hierarchy_recovers_four_display_levels() {
    let (_, profile) = clinic_profile(120, 3);
    let displayed = profile.level_map.display_levels();
    assert_eq!(displayed[clinic::TOOL_SYMPTOM_KEYWORDS], 1);
    assert_eq!(displayed[clinic::TOOL_RECOMMEND_OFFICES], 2);
    for office in 0..clinic::OFFICES.len() {
        assert_eq!(
            displayed[&clinic::checklist_tool(office)],
            3,
            "office {office}"
        );
    }
    assert_eq!(displayed[clinic::TOOL_WRITE_FILE], 4);
}

#[test]
fn clinic_profile_knows_one_route_per_office() {
    let (_, profile) = clinic_profile(clinic::COVERAGE_TRACES, 3);
    assert_eq!(profile.known_types.len(), 2 * clinic::OFFICES.len());
    for office in 0..clinic::OFFICES.len() {
        let sig = TypeSignature(vec![
            clinic::TOOL_SYMPTOM_KEYWORDS.into(),
            clinic::TOOL_RECOMMEND_OFFICES.into(),
            clinic::checklist_tool(office),
        ]);
        assert!(profile.known_types.contains(&sig), "missing route {sig}");
        let rule = profile.rule_for(&sig).unwrap();
        assert_eq!(rule.conditions.len(), 3);
        // The office visit position holds only that office's symptoms.
        assert!(rule.conditions[2]
            .iter()
            .all(|s| clinic::SYMPTOMS[office].contains(&s.as_str())));
    }
}

#[test]
fn extracted_behavior_names_the_office_call() {
    let (dataset, profile) = clinic_profile(clinic::COVERAGE_TRACES, 3);
    let judge = BaselineJudge::new(&bench::scenario_judge_config(Scenario::Clinic));
    let path = &dataset[0].path;
    let units = tracewarden::detector::structural_check(path, &profile).unwrap();
    let rule = tracewarden::rules::extract_instance_rule(&units[0], &judge).unwrap();
    let last_tool = &units[0].calls.last().unwrap().tool_name;
    assert!(
        rule.behavior.starts_with(&format!("{last_tool}(")),
        "behavior {:?} should name the final call",
        rule.behavior
    );
    assert_eq!(rule.conditions.len(), units[0].calls.len());
}

#[test]
fn anomaly_categories_map_to_verdict_kinds() {
    for (scenario, benign) in [
        (Scenario::Clinic, clinic::COVERAGE_TRACES.max(60)),
        (Scenario::Procurement, procurement::COVERAGE_TRACES),
    ] {
        let spec = ScenarioSpec {
            scenario,
            benign,
            at_c1: 20,
            at_c2: 20,
            seed: 13,
        };
        let dataset = bench::gen_dataset(&spec).unwrap();
        let judge = BaselineJudge::new(&bench::scenario_judge_config(scenario));
        let profile = build_profile(&benign_paths(&dataset), &judge, scenario.label())
            .unwrap()
            .profile;

        let labels: BTreeMap<&str, TraceLabel> = dataset
            .iter()
            .map(|t| (t.path.session_id.as_str(), t.label))
            .collect();
        let paths: Vec<ExecutionPath> = dataset.iter().map(|t| t.path.clone()).collect();
        let verdicts = classify_all(&paths, &profile, &judge, &DetectOptions::default(), 2);

        for verdict in &verdicts {
            let expected = match labels[verdict.session_id.as_str()] {
                TraceLabel::Benign => VerdictLabel::Normal,
                TraceLabel::AtC1 => VerdictLabel::StructuralAnomaly,
                TraceLabel::AtC2 => VerdictLabel::SemanticAnomaly,
            };
            assert_eq!(
                verdict.label, expected,
                "{}: {:?}",
                verdict.session_id, verdict.evidence
            );
        }
    }
}

/// A judge whose semantic calls always fail, standing in for an
/// unreachable remote endpoint.
struct UnavailableJudge;

impl Judge for UnavailableJudge {
    fn extract_rule(&self, _unit: &ExecutionUnit) -> Result<InstanceRule, JudgeError> {
        Err(JudgeError::RemoteUnavailable("connection refused".into()))
    }

    fn summarize_group(
        &self,
        _signature: &TypeSignature,
        _group: &[InstanceRule],
    ) -> Result<GeneralizedRule, JudgeError> {
        Err(JudgeError::RemoteUnavailable("connection refused".into()))
    }

    fn check_conditions(
        &self,
        _anchor: &GeneralizedRule,
        _candidate: &InstanceRule,
    ) -> Result<MatchResult, JudgeError> {
        Err(JudgeError::RemoteUnavailable("connection refused".into()))
    }
}

#[test]
fn judge_failures_fail_closed_in_strict_mode_only() {
    let (dataset, profile) = clinic_profile(clinic::COVERAGE_TRACES, 3);
    let path = &dataset[0].path;
    let judge = UnavailableJudge;

    let strict = classify(path, &profile, &judge, &DetectOptions::default());
    assert_eq!(strict.label, VerdictLabel::SemanticAnomaly);
    assert!(strict
        .evidence
        .iter()
        .all(|f| f.kind == FindingKind::JudgeUndecided));

    let lenient = classify(
        path,
        &profile,
        &judge,
        &DetectOptions {
            strict: false,
            exhaustive: false,
        },
    );
    assert_eq!(lenient.label, VerdictLabel::Normal);
    assert!(lenient.evidence.is_empty());
}
