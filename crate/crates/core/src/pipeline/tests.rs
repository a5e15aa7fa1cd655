use super::*;
use crate::dataset::FsmField;
use crate::metrics::Grade;

const STAKING_SCHEMA_JSON: &str = include_str!("../../tests/fixtures/staking_schema.json");
const STAKING_FULL: &str = include_str!("../../tests/fixtures/staking_full.sol");
const VAULT_REENTRANT: &str = include_str!("../../tests/fixtures/vault_reentrant.sol");
const VAULT_FIXED: &str = include_str!("../../tests/fixtures/vault_fixed.sol");

const APPROVING_AUDIT: &str =
    r#"{"severity_level":"none","approved":true,"findings":[],"summary":"clean"}"#;
const HIGH_AUDIT: &str = r#"{"severity_level":"high","approved":false,
    "findings":[{"category":"Reentrancy","severity":"high","line":16,
    "remediation":"apply checks-effects-interactions"}],"summary":"reentrancy"}"#;

fn staking_entry(id: &str) -> BenchmarkEntry {
    BenchmarkEntry {
        id: id.to_string(),
        requirement: "A staking contract where users can stake tokens during a farming period."
            .to_string(),
        fsm: None,
        ground_truth_code: STAKING_FULL.to_string(),
    }
}

fn config() -> EngineConfig {
    let mut cfg = EngineConfig::default();
    cfg.pipeline.provider = ProviderKind::Scripted;
    cfg.compile.enabled = false;
    cfg
}

fn happy_backend() -> ScriptedBackend {
    ScriptedBackend::new()
        .with_default(Phase::Parse, STAKING_SCHEMA_JSON)
        .with_default(Phase::Generate, STAKING_FULL)
        .with_default(Phase::Audit, APPROVING_AUDIT)
}

/// Cross-cutting record invariants: ordered timestamps, phase conservation,
/// digest integrity, refinement bound.
fn assert_record_invariants(r: &PipelineRecord, max_refines: usize) {
    let mut last = 0u64;
    for e in &r.events {
        assert!(
            e.timestamp_ms >= last,
            "timestamps must be non-decreasing: {:?}",
            r.events
        );
        last = e.timestamp_ms;
    }
    for phase in [
        Phase::Parse,
        Phase::Generate,
        Phase::Audit,
        Phase::Refine,
        Phase::Abi,
        Phase::Evaluate,
        Phase::Compare,
    ] {
        let started = r
            .events
            .iter()
            .filter(|e| e.phase == phase && e.kind == EventKind::Started)
            .count();
        let resolved = r
            .events
            .iter()
            .filter(|e| {
                e.phase == phase && matches!(e.kind, EventKind::Completed | EventKind::Error)
            })
            .count();
        assert_eq!(
            resolved, started,
            "phase {phase} started {started} times but resolved {resolved}"
        );
    }
    for a in &r.phase_artifacts {
        assert_eq!(a.output_digest, digest(a.output.as_bytes()));
    }
    assert!(r.refine_count() <= max_refines);
}

#[test]
fn happy_path_produces_complete_record() {
    let entry = staking_entry("happy-1");
    let cfg = config();
    let record = run_pipeline(&entry, &cfg, &happy_backend(), &[]);
    assert_record_invariants(&record, 2);

    assert!(!record.failed);
    assert_eq!(record.refine_count(), 0, "approved audit must not refine");
    assert_eq!(record.audit_trail.len(), 1);
    assert!(record.schema.is_some());
    assert!(record.schema_flags.is_empty());
    assert_eq!(record.complexity.unwrap().function_count, 4);
    assert!(!record.final_contract.is_empty());
    assert!(!record.abi.is_empty());
    assert_eq!(record.quality.grade, Grade::B);
    assert!(record.quality.composite > 80.0 && record.quality.composite < 90.0);
    // Ground truth is the same contract: comparison must be reflexive.
    let pair = record.comparison.as_ref().unwrap();
    assert_eq!(pair.composite_delta, 0.0);
    // The missing poolInfos variable shows up as a missed item.
    let m2 = record.quality.evidence_for("m2.names").unwrap();
    assert!(m2.missed.contains(&"poolInfos".to_string()));
}

#[test]
fn refinement_scenario_runs_one_refine_and_two_audits() {
    let entry = staking_entry("refine-1");
    let cfg = config();
    let backend = ScriptedBackend::new()
        .with_default(Phase::Parse, STAKING_SCHEMA_JSON)
        .with_response(Phase::Generate, "refine-1", VAULT_REENTRANT)
        .with_response(Phase::Audit, "refine-1", HIGH_AUDIT)
        .with_response(Phase::Audit, "refine-1", APPROVING_AUDIT)
        .with_response(Phase::Refine, "refine-1", VAULT_FIXED);
    let record = run_pipeline(&entry, &cfg, &backend, &[]);
    assert_record_invariants(&record, 2);

    assert_eq!(record.refine_count(), 1);
    assert_eq!(record.audit_trail.len(), 2);
    assert!(record.audit_trail[0].severity_level >= crate::audit::Severity::High);
    assert!(record.audit_trail[1].approved);
    assert!(record.final_contract.contains("nonReentrant"));
    assert!(record
        .events
        .iter()
        .any(|e| e.kind == EventKind::AuditApproved));
}

#[test]
fn adversarial_auditor_is_bounded_by_max_iterations() {
    let entry = staking_entry("adversary-1");
    let cfg = config();
    // The auditor never approves; the refiner returns reentrant code forever.
    let backend = ScriptedBackend::new()
        .with_default(Phase::Parse, STAKING_SCHEMA_JSON)
        .with_default(Phase::Generate, VAULT_REENTRANT)
        .with_default(Phase::Audit, HIGH_AUDIT)
        .with_default(Phase::Refine, VAULT_REENTRANT);
    let record = run_pipeline(&entry, &cfg, &backend, &[]);
    assert_record_invariants(&record, 2);
    assert_eq!(record.refine_count(), 2, "refinement must stop at the cap");
    assert_eq!(record.audit_trail.len(), 3);
}

#[test]
fn reinforcement_toggle_disables_refinement() {
    let entry = staking_entry("no-reinforce-1");
    let mut cfg = config();
    cfg.pipeline.enable_reinforcement = false;
    let backend = ScriptedBackend::new()
        .with_default(Phase::Parse, STAKING_SCHEMA_JSON)
        .with_default(Phase::Generate, VAULT_REENTRANT)
        .with_default(Phase::Audit, HIGH_AUDIT);
    let record = run_pipeline(&entry, &cfg, &backend, &[]);
    assert_eq!(record.refine_count(), 0);
    assert_eq!(record.audit_trail.len(), 1);
}

#[test]
fn unparseable_schema_twice_fails_the_record_with_zero_quality() {
    let entry = staking_entry("badparse-1");
    let cfg = config();
    let backend = ScriptedBackend::new()
        .with_response(Phase::Parse, "badparse-1", "I cannot help with that.")
        .with_response(Phase::Parse, "badparse-1", "still prose, no JSON");
    let record = run_pipeline(&entry, &cfg, &backend, &[]);
    assert_record_invariants(&record, 2);
    assert!(record.failed);
    assert_eq!(record.quality.composite, 0.0);
    assert_eq!(record.quality.grade, Grade::F);
    assert!(record
        .events
        .iter()
        .any(|e| e.phase == Phase::Parse && e.kind == EventKind::Error));
    // Both raw responses are preserved in provenance.
    assert_eq!(
        record
            .phase_artifacts
            .iter()
            .filter(|a| a.phase == Phase::Parse)
            .count(),
        2
    );
}

#[test]
fn transport_failure_then_success_records_retry() {
    let entry = staking_entry("flaky-1");
    let cfg = config();
    let backend = happy_backend().with_failures(Phase::Parse, "flaky-1", 1);
    let record = run_pipeline(&entry, &cfg, &backend, &[]);
    assert!(!record.failed);
    assert!(record
        .events
        .iter()
        .any(|e| e.kind == EventKind::Retried && e.detail.contains("transport retry 1")));
}

#[test]
fn backend_exhaustion_marks_record_failed() {
    let entry = staking_entry("down-1");
    let mut cfg = config();
    cfg.pipeline.max_retries = 1;
    let backend = happy_backend().with_failures(Phase::Parse, "down-1", 10);
    let record = run_pipeline(&entry, &cfg, &backend, &[]);
    assert!(record.failed);
    assert!(record
        .events
        .iter()
        .any(|e| e.kind == EventKind::Error && e.detail.contains("backend unavailable")));
}

#[test]
fn unparseable_audit_downgrades_to_heuristic() {
    let entry = staking_entry("auditless-1");
    let cfg = config();
    let backend = ScriptedBackend::new()
        .with_default(Phase::Parse, STAKING_SCHEMA_JSON)
        .with_default(Phase::Generate, STAKING_FULL)
        .with_default(Phase::Audit, "no JSON here")
        .with_default(Phase::Refine, STAKING_FULL);
    let record = run_pipeline(&entry, &cfg, &backend, &[]);
    assert!(!record.failed);
    assert!(!record.audit_trail.is_empty());
    assert_eq!(
        record.audit_trail[0].source,
        crate::audit::AuditSource::Heuristic
    );
    assert!(record
        .events
        .iter()
        .any(|e| e.detail.contains("downgraded to heuristic")));
}

#[test]
fn scripted_runs_are_bit_identical() {
    let entry = staking_entry("det-1");
    let cfg = config();
    let a = run_pipeline(&entry, &cfg, &happy_backend(), &[]);
    let b = run_pipeline(&entry, &cfg, &happy_backend(), &[]);
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn fsm_spec_flows_into_scoring() {
    let mut entry = staking_entry("fsm-1");
    entry.fsm = Some(FsmField::Structured(crate::dataset::FsmSpec {
        states: vec![
            "FarmingNotStarted".into(),
            "FarmingOngoing".into(),
            "FarmingEnded".into(),
        ],
        transitions: vec![],
    }));
    let cfg = config();
    let record = run_pipeline(&entry, &cfg, &happy_backend(), &[]);
    let states = record.quality.evidence_for("m3.states").unwrap();
    assert_eq!(states.matched.len(), 3);
}

#[test]
fn llm_judge_scores_are_used_but_composite_is_recomputed() {
    let entry = staking_entry("judge-1");
    let mut cfg = config();
    cfg.pipeline.scoring = crate::metrics::ScoreSource::LlmJudge;
    let backend = happy_backend().with_response(
        Phase::Evaluate,
        "judge-1",
        r#"{"m1_functional": 92, "m2_variable": 85, "m3_state_machine": 90,
            "m4_business_logic": 86, "m5_code_quality": 80}"#,
    );
    let record = run_pipeline(&entry, &cfg, &backend, &[]);
    assert_record_invariants(&record, 2);
    assert_eq!(
        record.quality.source_of_scores,
        crate::metrics::ScoreSource::LlmJudge
    );
    assert_eq!(record.quality.scores.m1_functional, 92.0);
    // The composite is never the model's; it is the local recombination.
    let (recombined, grade) =
        crate::metrics::composite(&record.quality.scores, &cfg.metrics).unwrap();
    assert_eq!(record.quality.composite, recombined);
    assert!((record.quality.composite - 87.35).abs() < 1e-9);
    assert_eq!(record.quality.grade, grade);
}

#[test]
fn malformed_judge_output_falls_back_to_deterministic_scores() {
    let entry = staking_entry("judge-2");
    let mut cfg = config();
    cfg.pipeline.scoring = crate::metrics::ScoreSource::LlmJudge;
    let backend = happy_backend().with_response(
        Phase::Evaluate,
        "judge-2",
        "the contract looks great, ten out of ten",
    );
    let record = run_pipeline(&entry, &cfg, &backend, &[]);
    assert_eq!(
        record.quality.source_of_scores,
        crate::metrics::ScoreSource::Deterministic
    );
    assert_eq!(record.quality.grade, Grade::B);
    assert!(record
        .events
        .iter()
        .any(|e| e.detail.contains("judge output unusable")));
}

#[test]
fn extract_solidity_shapes() {
    let fenced = "```solidity\npragma solidity ^0.8.0;\ncontract A {}\n```";
    assert!(extract_solidity(fenced).unwrap().starts_with("pragma"));
    let raw = "contract B { }";
    assert_eq!(extract_solidity(raw).unwrap(), raw);
    // Prose around a fenced block is stripped.
    let mixed = "Here is the contract:\n```solidity\ncontract C { uint x; }\n```\nLet me know!";
    assert_eq!(extract_solidity(mixed).unwrap(), "contract C { uint x; }");
    assert!(extract_solidity("Sorry, I cannot generate that.").is_err());
    assert!(extract_solidity("```python\nprint('hi')\n```").is_err());
    assert!(extract_solidity("").is_err());
}

#[test]
fn extract_json_object_shapes() {
    assert_eq!(
        extract_json_object("prefix {\"a\": 1} suffix").unwrap(),
        "{\"a\": 1}"
    );
    let fenced = "```json\n{\"a\": {\"b\": \"}\"}}\n```";
    assert_eq!(
        extract_json_object(fenced).unwrap(),
        "{\"a\": {\"b\": \"}\"}}"
    );
    assert!(extract_json_object("no braces").is_none());
    assert!(extract_json_object("{truncated").is_none());
}

#[test]
fn config_toml_round_trip() {
    let cfg = EngineConfig::default();
    let text = cfg.to_toml();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.toml");
    std::fs::write(&path, &text).unwrap();
    let loaded = EngineConfig::load(&path).unwrap();
    assert_eq!(loaded.pipeline.model, "gpt-4o-mini");
    assert_eq!(loaded.pipeline.max_refinement_iterations, 2);
    assert!(loaded.pipeline.enable_reinforcement);
    assert!(!loaded.pipeline.enable_deployment);

    // Partial configs take defaults for everything else.
    std::fs::write(&path, "[pipeline]\nparallelism = 6\n").unwrap();
    let partial = EngineConfig::load(&path).unwrap();
    assert_eq!(partial.pipeline.parallelism, 6);
    assert_eq!(partial.pipeline.model, "gpt-4o-mini");

    // Broken weights are rejected.
    std::fs::write(&path, "[metrics]\nweight_functional = 0.9\n").unwrap();
    assert!(matches!(
        EngineConfig::load(&path),
        Err(ConfigError::Weights(_))
    ));
}

#[test]
fn record_json_round_trips() {
    let entry = staking_entry("roundtrip-1");
    let cfg = config();
    let record = run_pipeline(&entry, &cfg, &happy_backend(), &[]);
    let bytes = record.to_json();
    let back: PipelineRecord = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(record, back);
}
