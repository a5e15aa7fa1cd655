//! Security audit model: severity lattice, the eight vulnerability
//! categories, the refinement decision, and a deterministic heuristic
//! pre-audit that complements the model-based auditor.

use serde::{Deserialize, Serialize};

use crate::solidity::{ContractSurface, FunctionDecl, Mutability};

/// Severity lattice: none < low < medium < high < critical.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    #[default]
    None,
    Low,
    Medium,
    High,
    Critical,
}

impl Severity {
    pub fn parse(text: &str) -> Option<Self> {
        match text.trim().to_lowercase().as_str() {
            "none" => Some(Severity::None),
            "low" => Some(Severity::Low),
            "medium" => Some(Severity::Medium),
            "high" => Some(Severity::High),
            "critical" => Some(Severity::Critical),
            _ => None,
        }
    }
}

impl std::fmt::Display for Severity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Severity::None => "none",
            Severity::Low => "low",
            Severity::Medium => "medium",
            Severity::High => "high",
            Severity::Critical => "critical",
        };
        f.write_str(s)
    }
}

/// Join in the severity lattice.
pub fn severity_max(a: Severity, b: Severity) -> Severity {
    a.max(b)
}

/// The eight vulnerability categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AuditCategory {
    Reentrancy,
    AccessControl,
    ArithmeticSafety,
    EtherHandling,
    DenialOfService,
    InputValidation,
    TimestampDependence,
    ExternalCallSafety,
}

impl AuditCategory {
    pub const ALL: [AuditCategory; 8] = [
        AuditCategory::Reentrancy,
        AuditCategory::AccessControl,
        AuditCategory::ArithmeticSafety,
        AuditCategory::EtherHandling,
        AuditCategory::DenialOfService,
        AuditCategory::InputValidation,
        AuditCategory::TimestampDependence,
        AuditCategory::ExternalCallSafety,
    ];

    pub fn parse(text: &str) -> Option<Self> {
        let norm: String = text
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        match norm.as_str() {
            "reentrancy" => Some(Self::Reentrancy),
            "accesscontrol" => Some(Self::AccessControl),
            "arithmeticsafety" | "arithmetic" | "integeroverflow" => Some(Self::ArithmeticSafety),
            "etherhandling" => Some(Self::EtherHandling),
            "denialofservice" | "dos" => Some(Self::DenialOfService),
            "inputvalidation" => Some(Self::InputValidation),
            "timestampdependence" | "timestamp" => Some(Self::TimestampDependence),
            "externalcallsafety" | "externalcall" => Some(Self::ExternalCallSafety),
            _ => None,
        }
    }
}

impl std::fmt::Display for AuditCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Reentrancy => "Reentrancy",
            Self::AccessControl => "AccessControl",
            Self::ArithmeticSafety => "ArithmeticSafety",
            Self::EtherHandling => "EtherHandling",
            Self::DenialOfService => "DenialOfService",
            Self::InputValidation => "InputValidation",
            Self::TimestampDependence => "TimestampDependence",
            Self::ExternalCallSafety => "ExternalCallSafety",
        };
        f.write_str(s)
    }
}

/// One finding in an audit report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditFinding {
    pub category: AuditCategory,
    pub severity: Severity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<u32>,
    pub remediation: String,
}

/// Where an audit report came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditSource {
    Heuristic,
    Llm,
    Combined,
}

/// A security audit report. The severity level is the lattice maximum over
/// findings; `approved` drives the refinement decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub severity_level: Severity,
    pub approved: bool,
    pub findings: Vec<AuditFinding>,
    pub summary: String,
    pub source: AuditSource,
}

impl AuditReport {
    /// True when `severity_level` is consistent with the findings and the
    /// approval flag. Model reports keep their own `approved`; a mismatch
    /// here is flagged upstream, not corrected.
    pub fn severity_consistent(&self) -> bool {
        let max = self
            .findings
            .iter()
            .fold(Severity::None, |acc, f| severity_max(acc, f.severity));
        self.severity_level == max && (!self.approved || self.severity_level <= Severity::Low)
    }
}

/// Refinement loop bookkeeping for one pipeline run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefinementState {
    pub refinement_count: u32,
    pub max_iterations: u32,
    /// (report, contract revision id) per audited revision.
    pub history: Vec<(AuditReport, String)>,
}

impl RefinementState {
    pub fn new(max_iterations: u32) -> Self {
        Self {
            refinement_count: 0,
            max_iterations,
            history: Vec::new(),
        }
    }
}

impl Default for RefinementState {
    fn default() -> Self {
        Self::new(2)
    }
}

/// The refinement decision: refine only while under the iteration cap, and
/// only when the report is unapproved with severity at medium or above.
pub fn should_refine(report: &AuditReport, state: &RefinementState) -> bool {
    if state.refinement_count >= state.max_iterations {
        return false;
    }
    !report.approved && report.severity_level >= Severity::Medium
}

// Modifier names that indicate a reentrancy guard.
fn is_reentrancy_guard(name: &str) -> bool {
    let lower = name.to_lowercase();
    lower.contains("reentran") || lower == "lock" || lower == "locked" || lower.contains("mutex")
}

fn has_reentrancy_guard(f: &FunctionDecl) -> bool {
    f.modifiers.iter().any(|m| is_reentrancy_guard(m))
}

/// True when some pragma admits a compiler older than 0.8 (no built-in
/// overflow checks).
fn pragma_allows_pre_08(pragmas: &[String]) -> bool {
    if pragmas.is_empty() {
        return false;
    }
    pragmas.iter().any(|p| {
        // Find the first major.minor pair in the constraint text.
        let mut parts = p
            .split(|c: char| !c.is_ascii_digit() && c != '.')
            .filter(|s| !s.is_empty());
        match parts.next() {
            Some(v) => {
                let mut nums = v.split('.');
                let major: u32 = nums.next().and_then(|s| s.parse().ok()).unwrap_or(0);
                let minor: u32 = nums.next().and_then(|s| s.parse().ok()).unwrap_or(0);
                major == 0 && minor < 8
            }
            None => false,
        }
    })
}

/// Deterministic heuristic audit over the parsed surface. Order-independent
/// across functions: findings are emitted in declaration order with fixed
/// per-function rule order.
pub fn heuristic_audit(surface: &ContractSurface, _source: &str) -> AuditReport {
    let mut findings = Vec::new();

    for f in &surface.functions {
        if !f.body_present {
            continue;
        }
        // External call textually before a state write without a guard.
        if f.facts.call_before_write && !has_reentrancy_guard(f) {
            findings.push(AuditFinding {
                category: AuditCategory::Reentrancy,
                severity: Severity::High,
                line: Some(f.line),
                remediation: format!(
                    "`{}` makes an external call before updating state; apply \
                     checks-effects-interactions or a reentrancy guard",
                    f.name
                ),
            });
        }
        // State-writing externally callable function with no access control.
        if f.is_regular()
            && (f.visibility.is_externally_callable()
                || f.visibility == crate::solidity::Visibility::Default)
            && f.body_stats.state_write_count > 0
            && f.modifiers.is_empty()
            && !f.facts.has_sender_require
        {
            findings.push(AuditFinding {
                category: AuditCategory::AccessControl,
                severity: Severity::Medium,
                line: Some(f.line),
                remediation: format!(
                    "`{}` changes state but has no modifier or sender check; add access control",
                    f.name
                ),
            });
        }
        // Payable function without any validation.
        if f.mutability == Mutability::Payable && f.body_stats.require_count == 0 {
            findings.push(AuditFinding {
                category: AuditCategory::EtherHandling,
                severity: Severity::Medium,
                line: Some(f.line),
                remediation: format!(
                    "payable `{}` accepts ether without any require; validate value and caller",
                    f.name
                ),
            });
        }
        // External calls inside loops.
        if f.facts.call_in_loop {
            findings.push(AuditFinding {
                category: AuditCategory::DenialOfService,
                severity: Severity::Low,
                line: Some(f.line),
                remediation: format!(
                    "`{}` performs external calls inside a loop; a single failing \
                     callee can block the whole operation",
                    f.name
                ),
            });
        }
        // Address parameters never checked against zero, directly or via a
        // modifier.
        if !f.facts.unchecked_address_params.is_empty() {
            let modifier_checks = f.modifiers.iter().any(|m| {
                surface.modifier(m).is_some_and(|md| {
                    md.facts.unchecked_address_params.is_empty() && !md.params.is_empty()
                })
            });
            if !modifier_checks {
                findings.push(AuditFinding {
                    category: AuditCategory::InputValidation,
                    severity: Severity::Low,
                    line: Some(f.line),
                    remediation: format!(
                        "`{}` never checks address parameter(s) [{}] against the zero address",
                        f.name,
                        f.facts.unchecked_address_params.join(", ")
                    ),
                });
            }
        }
        // Timestamp-dependent value movement.
        if f.body_stats.reads_block_timestamp && f.body_stats.external_call_count > 0 {
            findings.push(AuditFinding {
                category: AuditCategory::TimestampDependence,
                severity: Severity::Low,
                line: Some(f.line),
                remediation: format!(
                    "`{}` gates a transfer on block.timestamp, which miners can skew",
                    f.name
                ),
            });
        }
        // Low-level call with unused return value.
        if f.facts.unused_lowlevel_call {
            findings.push(AuditFinding {
                category: AuditCategory::ExternalCallSafety,
                severity: Severity::Medium,
                line: Some(f.line),
                remediation: format!(
                    "`{}` ignores the return value of a low-level call; check it or revert",
                    f.name
                ),
            });
        }
    }

    // Pre-0.8 arithmetic without SafeMath.
    let uses_arithmetic = surface.functions.iter().any(|f| f.facts.has_arithmetic);
    if pragma_allows_pre_08(&surface.pragma_versions)
        && uses_arithmetic
        && !surface.index.has_safemath
    {
        findings.push(AuditFinding {
            category: AuditCategory::ArithmeticSafety,
            severity: Severity::Medium,
            line: None,
            remediation: "compiler before 0.8 with unchecked arithmetic; use SafeMath or \
                          upgrade the pragma"
                .to_string(),
        });
    }

    let severity_level = findings
        .iter()
        .fold(Severity::None, |acc, f| severity_max(acc, f.severity));
    AuditReport {
        severity_level,
        approved: severity_level <= Severity::Low,
        summary: if findings.is_empty() {
            "heuristic audit: no findings".to_string()
        } else {
            format!("heuristic audit: {} finding(s)", findings.len())
        },
        findings,
        source: AuditSource::Heuristic,
    }
}

/// Parse a model audit report from its required JSON shape. Returns None on
/// any formatting failure; the caller downgrades to the heuristic report.
pub fn parse_llm_audit(text: &str) -> Option<AuditReport> {
    #[derive(Deserialize)]
    struct RawFinding {
        category: String,
        severity: String,
        #[serde(default)]
        line: Option<u32>,
        #[serde(default)]
        remediation: String,
    }
    #[derive(Deserialize)]
    struct RawReport {
        severity_level: String,
        approved: bool,
        #[serde(default)]
        findings: Vec<RawFinding>,
        #[serde(default)]
        summary: String,
    }

    let body = crate::pipeline::extract_json_object(text)?;
    let raw: RawReport = serde_json::from_str(&body).ok()?;
    let severity_level = Severity::parse(&raw.severity_level)?;
    let mut findings = Vec::new();
    for f in raw.findings {
        findings.push(AuditFinding {
            category: AuditCategory::parse(&f.category)?,
            severity: Severity::parse(&f.severity)?,
            line: f.line,
            remediation: f.remediation,
        });
    }
    Some(AuditReport {
        severity_level,
        approved: raw.approved,
        findings,
        summary: raw.summary,
        source: AuditSource::Llm,
    })
}

/// Combine the model and heuristic reports for the pipeline decision:
/// severity is the lattice max of both, findings are concatenated, and the
/// approval flag honors the model's verdict (logged upstream when it
/// contradicts the combined severity).
pub fn combine_reports(llm: &AuditReport, heuristic: &AuditReport) -> AuditReport {
    let severity_level = severity_max(llm.severity_level, heuristic.severity_level);
    let mut findings = llm.findings.clone();
    findings.extend(heuristic.findings.iter().cloned());
    AuditReport {
        severity_level,
        approved: llm.approved,
        findings,
        summary: format!("model: {} | {}", llm.summary, heuristic.summary),
        source: AuditSource::Combined,
    }
}
