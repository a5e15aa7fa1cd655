//! Paired ground-truth evaluation, error-mode classification, and batch
//! aggregation.
//!
//! Both sides of a pair are scored with the identical metric configuration.
//! Aggregation is a single-pass fold over records in input order, so results
//! are deterministic regardless of how the records were produced.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::compile::{compile_rate, CompileRate, CompileResult, CompileStatus};
use crate::dataset::{FsmSpec, TierLevel};
use crate::metrics::{evaluate, Grade, MetricConfig, MetricError, QualityReport};
use crate::pipeline::PipelineRecord;
use crate::schema::ContractSchema;
use crate::solidity::{ContractSurface, LintFinding};

pub const METRIC_LABELS: [&str; 5] = [
    "Functional Completeness",
    "Variable Fidelity",
    "State Machine Correctness",
    "Business Logic Fidelity",
    "Code Quality",
];

/// Per-metric difference between a generated contract and its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub metric: String,
    pub generated: f64,
    pub ground_truth: f64,
    /// generated - ground_truth.
    pub delta: f64,
    /// delta / ground_truth, in percentage points; absent when the ground
    /// truth value is 0.
    pub percent: Option<f64>,
}

fn delta_of(metric: &str, generated: f64, ground_truth: f64) -> MetricDelta {
    let delta = generated - ground_truth;
    MetricDelta {
        metric: metric.to_string(),
        generated,
        ground_truth,
        delta,
        percent: (ground_truth != 0.0).then(|| delta / ground_truth * 100.0),
    }
}

/// Paired scoring outcome: identical rubric on both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedResult {
    pub generated: QualityReport,
    pub ground_truth: QualityReport,
    pub deltas: Vec<MetricDelta>,
    pub composite_delta: f64,
    pub composite_percent: Option<f64>,
}

impl PairedResult {
    pub fn from_reports(generated: QualityReport, ground_truth: QualityReport) -> Self {
        let g = generated.scores.as_array();
        let t = ground_truth.scores.as_array();
        let deltas = METRIC_LABELS
            .iter()
            .zip(g.iter().zip(t.iter()))
            .map(|(label, (gv, tv))| delta_of(label, *gv, *tv))
            .collect();
        let composite_delta = generated.composite - ground_truth.composite;
        let composite_percent = (ground_truth.composite != 0.0)
            .then(|| composite_delta / ground_truth.composite * 100.0);
        Self {
            generated,
            ground_truth,
            deltas,
            composite_delta,
            composite_percent,
        }
    }
}

/// Score generated and ground-truth surfaces under the same schema/FSM and
/// metric configuration, producing per-metric deltas.
#[allow(clippy::too_many_arguments)]
pub fn compare_pair(
    schema: &ContractSchema,
    fsm: Option<&FsmSpec>,
    generated_surface: &ContractSurface,
    gt_surface: &ContractSurface,
    lint_generated: &[LintFinding],
    lint_gt: &[LintFinding],
    cfg: &MetricConfig,
) -> Result<PairedResult, MetricError> {
    let generated = evaluate(schema, fsm, generated_surface, lint_generated, cfg)?;
    let ground_truth = evaluate(schema, fsm, gt_surface, lint_gt, cfg)?;
    Ok(PairedResult::from_reports(generated, ground_truth))
}

/// Systematic error modes observed in lower-performing contracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ErrorMode {
    LogicOmission,
    StateTransitionError,
    CompilationFailure,
    IncompleteFinancialLogic,
    AccessControlGap,
}

impl std::fmt::Display for ErrorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ErrorMode::LogicOmission => "Logic Omissions",
            ErrorMode::StateTransitionError => "State Transition Errors",
            ErrorMode::CompilationFailure => "Compilation Failures",
            ErrorMode::IncompleteFinancialLogic => "Incomplete Financial Logic",
            ErrorMode::AccessControlGap => "Access Control Gaps",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ErrorModeReport {
    pub modes: Vec<ErrorMode>,
    /// The mode with the lowest supporting sub-score.
    pub primary: Option<ErrorMode>,
}

/// Classify error modes for a lower-performing contract (grade C/D/F).
/// Better grades return an empty report: the classifier does not apply.
pub fn classify_error_modes(
    report: &QualityReport,
    compile: &CompileResult,
    cfg: &MetricConfig,
) -> ErrorModeReport {
    if matches!(report.grade, Grade::A | Grade::B) {
        return ErrorModeReport::default();
    }
    let threshold = cfg.error_mode_threshold;
    // (mode, triggering ratio); ratio 0 for a failed compile.
    let mut hits: Vec<(ErrorMode, f64)> = Vec::new();
    if compile.status == CompileStatus::Failure {
        hits.push((ErrorMode::CompilationFailure, 0.0));
    }
    let mut check = |criterion: &str, mode: ErrorMode| {
        if let Some(ev) = report.evidence_for(criterion) {
            let ratio = ev.ratio();
            if ratio < threshold {
                hits.push((mode, ratio));
            }
        }
    };
    check("m4.obligations", ErrorMode::LogicOmission);
    check("m3.transitions", ErrorMode::StateTransitionError);
    check("m4.financial", ErrorMode::IncompleteFinancialLogic);
    check("m1.impl.access", ErrorMode::AccessControlGap);

    let primary = hits
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(m, _)| *m);
    ErrorModeReport {
        modes: hits.into_iter().map(|(m, _)| m).collect(),
        primary,
    }
}

// ---------------------------------------------------------------------------
// Batch aggregation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct StatBlock {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

fn stat_block(values: &[f64]) -> StatBlock {
    if values.is_empty() {
        return StatBlock::default();
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    StatBlock {
        mean,
        std: var.sqrt(),
        min: values.iter().cloned().fold(f64::INFINITY, f64::min),
        max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub tier: TierLevel,
    pub n: usize,
    pub mean_composite: f64,
    pub compile_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub metric: String,
    pub weight: f64,
    pub generated_mean: f64,
    /// Weighted contribution of the metric to the mean composite.
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtAggregate {
    pub n: usize,
    pub generated_mean: f64,
    pub ground_truth_mean: f64,
    pub mean_delta: f64,
    pub per_metric: Vec<MetricDelta>,
}

/// Aggregate statistics over one batch of pipeline records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub n: usize,
    pub failed_records: usize,
    pub composite: StatBlock,
    pub metrics: Vec<MetricAggregate>,
    /// Grade letter -> count; keys always A,B,C,D,F.
    pub grade_histogram: BTreeMap<String, usize>,
    pub compile: CompileRate,
    pub complexity: Vec<ComplexityRow>,
    /// Primary error mode -> count, over grade C/D/F records.
    pub error_modes: BTreeMap<String, usize>,
    pub error_mode_population: usize,
    pub gt_comparison: Option<GtAggregate>,
    pub mean_duration_ms: f64,
    /// Malformed input lines skipped during ingestion.
    pub line_errors: usize,
}

/// Single-pass fold over records; deterministic for a fixed input order.
pub fn summarize(
    records: &[PipelineRecord],
    line_errors: usize,
    cfg: &MetricConfig,
) -> BatchSummary {
    let n = records.len();
    let composites: Vec<f64> = records.iter().map(|r| r.quality.composite).collect();
    let composite = stat_block(&composites);

    let mut metric_sums = [0.0f64; 5];
    for r in records {
        for (acc, v) in metric_sums.iter_mut().zip(r.quality.scores.as_array()) {
            *acc += v;
        }
    }
    let weights = cfg.weights();
    let metrics: Vec<MetricAggregate> = METRIC_LABELS
        .iter()
        .enumerate()
        .map(|(i, label)| {
            let mean = if n > 0 {
                metric_sums[i] / n as f64
            } else {
                0.0
            };
            MetricAggregate {
                metric: label.to_string(),
                weight: weights[i],
                generated_mean: mean,
                contribution: mean * weights[i],
            }
        })
        .collect();

    let mut grade_histogram: BTreeMap<String, usize> =
        [("A", 0), ("B", 0), ("C", 0), ("D", 0), ("F", 0)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
    for r in records {
        *grade_histogram
            .entry(r.quality.grade.to_string())
            .or_insert(0) += 1;
    }

    let compile = compile_rate(records.iter().map(|r| r.compile.status));

    let mut complexity_rows: Vec<ComplexityRow> = Vec::new();
    for tier in [TierLevel::Low, TierLevel::Medium, TierLevel::High] {
        let tier_records: Vec<&PipelineRecord> = records
            .iter()
            .filter(|r| r.complexity.map(|c| c.tier) == Some(tier))
            .collect();
        if tier_records.is_empty() {
            continue;
        }
        let mean = tier_records
            .iter()
            .map(|r| r.quality.composite)
            .sum::<f64>()
            / tier_records.len() as f64;
        let tier_compile = compile_rate(tier_records.iter().map(|r| r.compile.status));
        complexity_rows.push(ComplexityRow {
            tier,
            n: tier_records.len(),
            mean_composite: mean,
            compile_rate: tier_compile.rate,
        });
    }

    let mut error_modes: BTreeMap<String, usize> = BTreeMap::new();
    let mut error_mode_population = 0usize;
    for r in records {
        if matches!(r.quality.grade, Grade::C | Grade::D | Grade::F) {
            error_mode_population += 1;
            let modes = classify_error_modes(&r.quality, &r.compile, cfg);
            if let Some(primary) = modes.primary {
                *error_modes.entry(primary.to_string()).or_insert(0) += 1;
            }
        }
    }

    let compared: Vec<&PairedResult> = records
        .iter()
        .filter_map(|r| r.comparison.as_ref())
        .collect();
    let gt_comparison = if compared.is_empty() {
        None
    } else {
        let cn = compared.len() as f64;
        let generated_mean = compared.iter().map(|p| p.generated.composite).sum::<f64>() / cn;
        let ground_truth_mean = compared
            .iter()
            .map(|p| p.ground_truth.composite)
            .sum::<f64>()
            / cn;
        let per_metric = METRIC_LABELS
            .iter()
            .enumerate()
            .map(|(i, label)| {
                let g = compared
                    .iter()
                    .map(|p| p.generated.scores.as_array()[i])
                    .sum::<f64>()
                    / cn;
                let t = compared
                    .iter()
                    .map(|p| p.ground_truth.scores.as_array()[i])
                    .sum::<f64>()
                    / cn;
                delta_of(label, g, t)
            })
            .collect();
        Some(GtAggregate {
            n: compared.len(),
            generated_mean,
            ground_truth_mean,
            mean_delta: generated_mean - ground_truth_mean,
            per_metric,
        })
    };

    let mean_duration_ms = if n > 0 {
        records
            .iter()
            .map(|r| r.phase_artifacts.iter().map(|a| a.duration_ms).sum::<u64>() as f64)
            .sum::<f64>()
            / n as f64
    } else {
        0.0
    };

    BatchSummary {
        n,
        failed_records: records.iter().filter(|r| r.failed).count(),
        composite,
        metrics,
        grade_histogram,
        compile,
        complexity: complexity_rows,
        error_modes,
        error_mode_population,
        gt_comparison,
        mean_duration_ms,
        line_errors,
    }
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Machine form; byte-stable for identical input.
pub fn render_json(summary: &BatchSummary) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(summary).expect("summary serializes");
    bytes.push(b'\n');
    bytes
}

fn pct(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{:.1}%", x * 100.0),
        None => "-".to_string(),
    }
}

fn signed(v: f64) -> String {
    format!("{v:+.2}")
}

/// Human form mirroring the shapes of the aggregate tables; byte-stable.
pub fn render_markdown(summary: &BatchSummary) -> Vec<u8> {
    let mut out = String::new();
    out.push_str("# Batch Evaluation Summary\n\n");
    if summary.n == 0 {
        out.push_str("no data: zero records\n");
        return out.into_bytes();
    }

    out.push_str(&format!(
        "## Overall Performance Statistics (N={})\n\n",
        summary.n
    ));
    out.push_str("| Metric | Value |\n|---|---|\n");
    out.push_str(&format!(
        "| Average Composite Score | {:.2} |\n",
        summary.composite.mean
    ));
    out.push_str(&format!(
        "| Minimum Score | {:.2} |\n",
        summary.composite.min
    ));
    out.push_str(&format!(
        "| Maximum Score | {:.2} |\n",
        summary.composite.max
    ));
    out.push_str(&format!(
        "| Standard Deviation | {:.2} |\n",
        summary.composite.std
    ));
    out.push_str(&format!(
        "| Failed Records | {} |\n",
        summary.failed_records
    ));
    out.push_str(&format!(
        "| Malformed Input Lines | {} |\n\n",
        summary.line_errors
    ));

    out.push_str("## Metric Averages\n\n");
    out.push_str("| Metric | Weight | Avg Score | Contribution |\n|---|---|---|---|\n");
    for m in &summary.metrics {
        out.push_str(&format!(
            "| {} | {:.0}% | {:.2} | {:.2} |\n",
            m.metric,
            m.weight * 100.0,
            m.generated_mean,
            m.contribution
        ));
    }
    let total_contribution: f64 = summary.metrics.iter().map(|m| m.contribution).sum();
    out.push_str(&format!(
        "| Composite Score | 100% | - | {total_contribution:.2} |\n\n"
    ));

    out.push_str("## Grade Distribution\n\n");
    out.push_str("| Grade | Count |\n|---|---|\n");
    for (grade, count) in &summary.grade_histogram {
        out.push_str(&format!("| {grade} | {count} |\n"));
    }
    out.push('\n');

    out.push_str("## Compilation Statistics\n\n");
    out.push_str("| Statistic | Value |\n|---|---|\n");
    out.push_str(&format!(
        "| Total Contracts Checked | {} |\n",
        summary.compile.checked
    ));
    out.push_str(&format!(
        "| Successful Compilations | {} |\n",
        summary.compile.success
    ));
    out.push_str(&format!(
        "| Failed Compilations | {} |\n",
        summary.compile.failure
    ));
    out.push_str(&format!(
        "| Not Checked | {} |\n",
        summary.compile.not_checked
    ));
    out.push_str(&format!(
        "| Success Rate | {} |\n\n",
        pct(summary.compile.rate)
    ));

    if let Some(gt) = &summary.gt_comparison {
        out.push_str(&format!("## Generated vs. Ground Truth (N={})\n\n", gt.n));
        out.push_str("| Metric | Gen. | GT | Delta | Delta% |\n|---|---|---|---|---|\n");
        for d in &gt.per_metric {
            let p = d
                .percent
                .map(|x| format!("{x:+.1}%"))
                .unwrap_or_else(|| "-".to_string());
            out.push_str(&format!(
                "| {} | {:.2} | {:.2} | {} | {} |\n",
                d.metric,
                d.generated,
                d.ground_truth,
                signed(d.delta),
                p
            ));
        }
        out.push_str(&format!(
            "| Composite | {:.2} | {:.2} | {} | - |\n\n",
            gt.generated_mean,
            gt.ground_truth_mean,
            signed(gt.mean_delta)
        ));
    }

    if summary.error_mode_population > 0 {
        out.push_str(&format!(
            "## Error Modes in Lower-Performing Contracts (N={})\n\n",
            summary.error_mode_population
        ));
        out.push_str("| Error Mode | Count | % |\n|---|---|---|\n");
        for (mode, count) in &summary.error_modes {
            out.push_str(&format!(
                "| {mode} | {count} | {:.1}% |\n",
                *count as f64 / summary.error_mode_population as f64 * 100.0
            ));
        }
        out.push('\n');
    }

    if !summary.complexity.is_empty() {
        out.push_str("## Performance by Specification Complexity\n\n");
        out.push_str("| Complexity | N | Avg Score | Comp. Rate |\n|---|---|---|---|\n");
        for row in &summary.complexity {
            out.push_str(&format!(
                "| {} | {} | {:.1} | {} |\n",
                row.tier,
                row.n,
                row.mean_composite,
                pct(row.compile_rate)
            ));
        }
        out.push('\n');
    }

    out.push_str(&format!(
        "Mean pipeline duration: {:.1} ms. Standard deviation is population std.\n",
        summary.mean_duration_ms
    ));
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{MetricScores, QualityReport, ScoreSource};

    fn cfg() -> MetricConfig {
        MetricConfig::default()
    }

    fn report(scores: [f64; 5]) -> QualityReport {
        QualityReport::from_scores(
            MetricScores {
                m1_functional: scores[0],
                m2_variable: scores[1],
                m3_state_machine: scores[2],
                m4_business_logic: scores[3],
                m5_code_quality: scores[4],
            },
            ScoreSource::Deterministic,
            &cfg(),
        )
        .unwrap()
    }

    #[test]
    fn paired_deltas_from_published_means() {
        let generated = report([84.45, 84.62, 83.12, 76.73, 83.85]);
        let ground_truth = report([77.82, 79.13, 70.28, 66.41, 75.19]);
        let pair = PairedResult::from_reports(generated, ground_truth);
        let m3 = &pair.deltas[2];
        assert!((m3.delta - 12.84).abs() < 1e-9);
        assert!((m3.percent.unwrap() - 18.3).abs() <= 0.1);
    }

    #[test]
    fn identical_reports_have_zero_deltas() {
        let a = report([90.0, 80.0, 70.0, 60.0, 50.0]);
        let pair = PairedResult::from_reports(a.clone(), a);
        assert!(pair.deltas.iter().all(|d| d.delta == 0.0));
        assert_eq!(pair.composite_delta, 0.0);
    }

    #[test]
    fn zero_ground_truth_suppresses_percent() {
        let pair = PairedResult::from_reports(
            report([50.0, 0.0, 0.0, 0.0, 0.0]),
            report([0.0, 0.0, 0.0, 0.0, 0.0]),
        );
        assert_eq!(pair.deltas[0].delta, 50.0);
        assert_eq!(pair.deltas[0].percent, None);
        assert_eq!(pair.composite_percent, None);
    }

    fn failing_compile() -> CompileResult {
        CompileResult {
            status: CompileStatus::Failure,
            compiler_version: "0.8.19".into(),
            diagnostics: vec![],
            duration_ms: 1,
            reason: None,
        }
    }

    fn clean_compile() -> CompileResult {
        CompileResult {
            status: CompileStatus::Success,
            compiler_version: "0.8.19".into(),
            diagnostics: vec![],
            duration_ms: 1,
            reason: None,
        }
    }

    #[test]
    fn compile_failure_is_classified() {
        let r = report([70.0, 70.0, 70.0, 70.0, 70.0]);
        let modes = classify_error_modes(&r, &failing_compile(), &cfg());
        assert_eq!(modes.modes, vec![ErrorMode::CompilationFailure]);
        assert_eq!(modes.primary, Some(ErrorMode::CompilationFailure));
    }

    #[test]
    fn b_grade_is_not_classified() {
        let r = report([85.0, 85.0, 85.0, 85.0, 85.0]);
        let modes = classify_error_modes(&r, &failing_compile(), &cfg());
        assert!(modes.modes.is_empty());
    }

    fn synth_record(id: &str, composite_score: f64) -> crate::pipeline::PipelineRecord {
        crate::pipeline::PipelineRecord {
            entry_id: id.to_string(),
            failed: false,
            phase_artifacts: vec![],
            events: vec![],
            schema: None,
            schema_flags: vec![],
            complexity: Some(crate::dataset::classify_complexity(2, 1)),
            final_contract: String::new(),
            abi: vec![],
            lint: vec![],
            compile: clean_compile(),
            quality: report([composite_score; 5]),
            audit_trail: vec![],
            comparison: None,
            deployment_requested: false,
        }
    }

    #[test]
    fn five_record_fixture_matches_hand_summed_statistics() {
        let scores = [95.0, 85.0, 85.0, 72.0, 50.0];
        let records: Vec<_> = scores
            .iter()
            .enumerate()
            .map(|(i, s)| synth_record(&format!("r{i}"), *s))
            .collect();
        let summary = summarize(&records, 0, &cfg());

        // Hand-summed: mean = 387/5 = 77.4; population variance =
        // (17.6^2 + 7.6^2 + 7.6^2 + 5.4^2 + 27.4^2) / 5 = 241.04.
        assert!((summary.composite.mean - 77.4).abs() < 1e-9);
        assert!((summary.composite.std - 241.04f64.sqrt()).abs() < 1e-9);
        assert_eq!(summary.composite.min, 50.0);
        assert_eq!(summary.composite.max, 95.0);

        assert_eq!(summary.grade_histogram["A"], 1);
        assert_eq!(summary.grade_histogram["B"], 2);
        assert_eq!(summary.grade_histogram["C"], 1);
        assert_eq!(summary.grade_histogram["D"], 0);
        assert_eq!(summary.grade_histogram["F"], 1);
        let total: usize = summary.grade_histogram.values().sum();
        assert_eq!(total, summary.n);
    }

    #[test]
    fn single_record_summary_has_zero_std() {
        let summary = summarize(&[synth_record("only", 81.25)], 0, &cfg());
        assert_eq!(summary.composite.mean, 81.25);
        assert_eq!(summary.composite.std, 0.0);
    }

    #[test]
    fn renderers_agree_on_every_number() {
        let scores = [95.0, 85.0, 85.0, 72.0, 50.0];
        let records: Vec<_> = scores
            .iter()
            .enumerate()
            .map(|(i, s)| synth_record(&format!("r{i}"), *s))
            .collect();
        let summary = summarize(&records, 2, &cfg());

        let md = String::from_utf8(render_markdown(&summary)).unwrap();
        let json: serde_json::Value = serde_json::from_slice(&render_json(&summary)).unwrap();

        // Every rendered statistic equals the 2-decimal form of the JSON value.
        let two = |v: &serde_json::Value| format!("{:.2}", v.as_f64().unwrap());
        assert!(md.contains(&format!(
            "| Average Composite Score | {} |",
            two(&json["composite"]["mean"])
        )));
        assert!(md.contains(&format!(
            "| Standard Deviation | {} |",
            two(&json["composite"]["std"])
        )));
        assert!(md.contains(&format!(
            "| Minimum Score | {} |",
            two(&json["composite"]["min"])
        )));
        for m in json["metrics"].as_array().unwrap() {
            assert!(md.contains(&format!(
                "| {} | {:.0}% | {} | {} |",
                m["metric"].as_str().unwrap(),
                m["weight"].as_f64().unwrap() * 100.0,
                two(&m["generated_mean"]),
                two(&m["contribution"]),
            )));
        }
        assert!(md.contains(&format!(
            "| Total Contracts Checked | {} |",
            json["compile"]["checked"]
        )));
        assert!(md.contains("| Malformed Input Lines | 2 |"));

        // Byte stability of both renderers.
        assert_eq!(render_markdown(&summary), render_markdown(&summary));
        assert_eq!(render_json(&summary), render_json(&summary));
    }

    #[test]
    fn empty_summary_renders_no_data_marker() {
        let summary = summarize(&[], 0, &cfg());
        let md = String::from_utf8(render_markdown(&summary)).unwrap();
        assert!(md.contains("no data"));
    }

    #[test]
    fn low_obligation_evidence_is_logic_omission() {
        use crate::metrics::MetricEvidence;
        let mut r = report([60.0, 60.0, 60.0, 20.0, 60.0]);
        r.evidence = vec![MetricEvidence {
            criterion: "m4.obligations".into(),
            points: 2.0,
            cap: 25.0,
            matched: vec![],
            missed: vec!["obligation".into()],
        }];
        let modes = classify_error_modes(&r, &clean_compile(), &cfg());
        assert_eq!(modes.primary, Some(ErrorMode::LogicOmission));
    }
}
