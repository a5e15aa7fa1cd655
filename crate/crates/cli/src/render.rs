//! Human-readable breakdown of a pipeline record for single-contract mode.

use solgen_core::metrics::QualityReport;
use solgen_core::pipeline::{PipelineEvent, PipelineRecord};
use solgen_core::report::METRIC_LABELS;

pub fn event_line(e: &PipelineEvent) -> String {
    if e.detail.is_empty() {
        format!(
            "[{:>6}] {:<9} {:?}",
            e.timestamp_ms,
            e.phase.to_string(),
            e.kind
        )
    } else {
        format!(
            "[{:>6}] {:<9} {:?}: {}",
            e.timestamp_ms,
            e.phase.to_string(),
            e.kind,
            e.detail
        )
    }
}

fn push_quality(out: &mut String, q: &QualityReport) {
    out.push_str(&format!(
        "Composite Score: {:.1}/100 (Grade: {})\n\n",
        q.composite, q.grade
    ));
    out.push_str("Metric Breakdown:\n");
    for (label, score) in METRIC_LABELS.iter().zip(q.scores.as_array()) {
        out.push_str(&format!("  - {label}: {score:.1}/100\n"));
    }

    let strengths: Vec<&str> = q
        .evidence
        .iter()
        .flat_map(|e| e.matched.iter())
        .map(|s| s.as_str())
        .collect();
    if !strengths.is_empty() {
        out.push_str("\nStrengths:\n");
        for s in strengths {
            out.push_str(&format!("  + {s}\n"));
        }
    }
    let missed: Vec<String> = q
        .evidence
        .iter()
        .flat_map(|e| {
            e.missed
                .iter()
                .map(move |m| format!("{}: {m}", e.criterion))
        })
        .collect();
    if !missed.is_empty() {
        out.push_str("\nMissed items:\n");
        for m in missed {
            out.push_str(&format!("  - {m}\n"));
        }
    }
}

/// Full textual breakdown: scores, evidence, audit, lint, compile.
pub fn breakdown(record: &PipelineRecord) -> String {
    let mut out = String::new();
    out.push_str(&format!("=== {} ===\n", record.entry_id));
    if record.failed {
        out.push_str("RUN FAILED: no scorable contract was produced.\n");
    }
    push_quality(&mut out, &record.quality);

    if let Some(c) = &record.complexity {
        out.push_str(&format!(
            "\nComplexity: {} ({} functions, {} states)\n",
            c.tier, c.function_count, c.state_count
        ));
    }

    if !record.audit_trail.is_empty() {
        out.push_str("\nAudit trail:\n");
        for (i, report) in record.audit_trail.iter().enumerate() {
            out.push_str(&format!(
                "  audit {}: severity={} approved={} findings={}\n",
                i + 1,
                report.severity_level,
                report.approved,
                report.findings.len()
            ));
            for f in &report.findings {
                let line = f.line.map(|l| format!(" (line {l})")).unwrap_or_default();
                out.push_str(&format!(
                    "    [{}/{}]{} {}\n",
                    f.category, f.severity, line, f.remediation
                ));
            }
        }
    }

    if !record.lint.is_empty() {
        out.push_str("\nLint findings:\n");
        for l in &record.lint {
            out.push_str(&format!(
                "  - line {}: {} ({})\n",
                l.location, l.detail, l.pattern
            ));
        }
    }

    out.push_str(&format!(
        "\nCompile: {:?}{}{}\n",
        record.compile.status,
        if record.compile.compiler_version.is_empty() {
            String::new()
        } else {
            format!(" with {}", record.compile.compiler_version)
        },
        record
            .compile
            .reason
            .as_ref()
            .map(|r| format!(" ({r})"))
            .unwrap_or_default()
    ));
    for d in &record.compile.diagnostics {
        out.push_str(&format!("  {}: {}\n", d.severity, d.message.trim_end()));
    }

    if let Some(pair) = &record.comparison {
        out.push_str("\nGround-truth comparison:\n");
        for d in &pair.deltas {
            let pct = d
                .percent
                .map(|p| format!(" ({p:+.1}%)"))
                .unwrap_or_default();
            out.push_str(&format!(
                "  {}: {:.1} vs {:.1} -> {:+.2}{pct}\n",
                d.metric, d.generated, d.ground_truth, d.delta
            ));
        }
        out.push_str(&format!(
            "  Composite delta: {:+.2}\n",
            pair.composite_delta
        ));
    }
    out
}

/// Score-only breakdown (no pipeline record).
pub fn score_breakdown(
    quality: &QualityReport,
    lint: &[solgen_core::solidity::LintFinding],
    comparison: Option<&solgen_core::report::PairedResult>,
) -> String {
    let mut out = String::new();
    push_quality(&mut out, quality);
    if !lint.is_empty() {
        out.push_str("\nLint findings:\n");
        for l in lint {
            out.push_str(&format!(
                "  - line {}: {} ({})\n",
                l.location, l.detail, l.pattern
            ));
        }
    }
    if let Some(pair) = comparison {
        out.push_str("\nGround-truth comparison:\n");
        for d in &pair.deltas {
            let pct = d
                .percent
                .map(|p| format!(" ({p:+.1}%)"))
                .unwrap_or_default();
            out.push_str(&format!(
                "  {}: {:.1} vs {:.1} -> {:+.2}{pct}\n",
                d.metric, d.generated, d.ground_truth, d.delta
            ));
        }
        out.push_str(&format!(
            "  Composite delta: {:+.2}\n",
            pair.composite_delta
        ));
    }
    out
}
