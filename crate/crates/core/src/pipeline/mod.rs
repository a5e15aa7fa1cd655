//! Phase orchestration: parse -> generate -> audit -> refine loop -> ABI ->
//! evaluate -> compare, over a pluggable chat-completion backend, with
//! streaming events and full provenance.
//!
//! Every phase's raw model output is stored verbatim (with a content digest)
//! before any parsing. Pipeline runs are independent single-writer units;
//! with the scripted provider a run is fully deterministic, driven by a
//! per-record logical clock.

mod backend;
mod batch;
mod prompts;

pub use backend::{
    BackendError, CompletionBackend, CompletionRequest, CompletionResponse, HttpBackend,
    ScriptedBackend,
};
pub use batch::{record_file_name, run_batch, BatchOptions, BatchOutcome};
pub use prompts::{
    auditor_agent, evaluator_agent, generator_agent, parser_agent, refiner_agent, AgentConfig,
    GENERATION_RULES,
};

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::abi::{abi_to_json, export_abi, AbiEntry};
use crate::audit::{
    combine_reports, heuristic_audit, parse_llm_audit, should_refine, AuditReport, AuditSource,
    RefinementState, Severity,
};
use crate::compile::{compile_check, CompileResult, CompilerInfo};
use crate::dataset::{classify_complexity, BenchmarkEntry, ComplexityTier, FsmSpec};
use crate::metrics::{
    evaluate, zero_report, MetricConfig, MetricScores, QualityReport, ScoreSource,
};
use crate::report::PairedResult;
use crate::schema::{schema_from_json, validate_schema, ContractSchema, SchemaFlag};
use crate::solidity::{lint_forbidden_patterns, parse_surface, ContractSurface, LintFinding};

// ---------------------------------------------------------------------------
// Phases, events, artifacts
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Parse,
    Generate,
    Audit,
    Refine,
    Abi,
    Evaluate,
    Compare,
}

impl Phase {
    pub fn parse(text: &str) -> Option<Self> {
        match text.trim().to_lowercase().as_str() {
            "parse" => Some(Phase::Parse),
            "generate" => Some(Phase::Generate),
            "audit" => Some(Phase::Audit),
            "refine" => Some(Phase::Refine),
            "abi" => Some(Phase::Abi),
            "evaluate" => Some(Phase::Evaluate),
            "compare" => Some(Phase::Compare),
            _ => None,
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Phase::Parse => "parse",
            Phase::Generate => "generate",
            Phase::Audit => "audit",
            Phase::Refine => "refine",
            Phase::Abi => "abi",
            Phase::Evaluate => "evaluate",
            Phase::Compare => "compare",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Started,
    Completed,
    Retried,
    RefineTriggered,
    AuditApproved,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineEvent {
    /// Milliseconds since epoch on live runs; a monotone logical tick with
    /// the scripted provider. Non-decreasing within a record.
    pub timestamp_ms: u64,
    pub phase: Phase,
    pub kind: EventKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseArtifact {
    pub phase: Phase,
    /// 0-based repetition index of this phase (audits and refinements
    /// repeat inside the loop).
    pub iteration: u32,
    pub input_digest: String,
    pub output_digest: String,
    /// Verbatim payload: the raw model response for agent phases, the
    /// serialized artifact for deterministic phases.
    pub output: String,
    pub duration_ms: u64,
    pub retries: u32,
}

/// Full provenance of one contract's run. Append-only while being built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRecord {
    pub entry_id: String,
    pub failed: bool,
    pub phase_artifacts: Vec<PhaseArtifact>,
    pub events: Vec<PipelineEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<ContractSchema>,
    #[serde(default)]
    pub schema_flags: Vec<SchemaFlag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complexity: Option<ComplexityTier>,
    pub final_contract: String,
    #[serde(default)]
    pub abi: Vec<AbiEntry>,
    #[serde(default)]
    pub lint: Vec<LintFinding>,
    pub compile: CompileResult,
    pub quality: QualityReport,
    pub audit_trail: Vec<AuditReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<PairedResult>,
    /// Deployment was requested in config; this build records and skips it.
    #[serde(default)]
    pub deployment_requested: bool,
}

impl PipelineRecord {
    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("record serializes");
        bytes.push(b'\n');
        bytes
    }

    pub fn refine_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::RefineTriggered)
            .count()
    }
}

/// SHA-256 content digest, hex-encoded.
pub fn digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in out {
        hex.push_str(&format!("{b:02x}"));
    }
    hex
}

// ---------------------------------------------------------------------------
// Clock
// ---------------------------------------------------------------------------

trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0)
    }
}

/// Per-record monotone counter: deterministic timestamps and durations for
/// scripted runs, regardless of wall time or thread interleaving.
struct LogicalClock(AtomicU64);

impl Clock for LogicalClock {
    fn now_ms(&self) -> u64 {
        self.0.fetch_add(1, Ordering::Relaxed)
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Http,
    Scripted,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineSettings {
    pub model: String,
    pub temperature: f64,
    /// Transport retries per agent call (exponential backoff).
    pub max_retries: u32,
    pub retry_base_delay_ms: u64,
    pub max_response_bytes: usize,
    pub max_refinement_iterations: u32,
    pub parallelism: usize,
    /// Toggles the audit-refine loop.
    pub enable_reinforcement: bool,
    /// Accepted for config compatibility; deployment is recorded and
    /// skipped in this build.
    pub enable_deployment: bool,
    pub compare_ground_truth: bool,
    pub scoring: ScoreSource,
    pub provider: ProviderKind,
    pub base_url: String,
    pub api_key_env: String,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            model: "gpt-4o-mini".to_string(),
            temperature: 0.0,
            max_retries: 2,
            retry_base_delay_ms: 500,
            max_response_bytes: 512 * 1024,
            max_refinement_iterations: 2,
            parallelism: 1,
            enable_reinforcement: true,
            enable_deployment: false,
            compare_ground_truth: true,
            scoring: ScoreSource::Deterministic,
            provider: ProviderKind::Http,
            base_url: "https://api.openai.com/v1".to_string(),
            api_key_env: "OPENAI_API_KEY".to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CompileSettings {
    pub enabled: bool,
    pub timeout_secs: u64,
    /// Explicit compiler binaries to probe, in addition to `solc` on PATH.
    pub solc_paths: Vec<PathBuf>,
}

impl Default for CompileSettings {
    fn default() -> Self {
        Self {
            enabled: true,
            timeout_secs: 30,
            solc_paths: Vec::new(),
        }
    }
}

/// Full engine configuration; TOML file with [pipeline], [metrics], and
/// [compile] sections, all keys optional with embedded defaults.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct EngineConfig {
    pub pipeline: PipelineSettings,
    pub metrics: MetricConfig,
    pub compile: CompileSettings,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid metric weights: {0}")]
    Weights(String),
}

impl EngineConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let cfg: EngineConfig = toml::from_str(&text)?;
        cfg.metrics
            .validate()
            .map_err(|e| ConfigError::Weights(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

// ---------------------------------------------------------------------------
// Response extraction
// ---------------------------------------------------------------------------

/// Strip a markdown code fence if the text is wrapped in one.
fn strip_fences(text: &str) -> &str {
    let trimmed = text.trim();
    let Some(rest) = trimmed.strip_prefix("```") else {
        return trimmed;
    };
    // Drop the info string (```json, ```solidity).
    let body = match rest.find('\n') {
        Some(idx) => &rest[idx + 1..],
        None => rest,
    };
    body.rfind("```")
        .map(|end| body[..end].trim())
        .unwrap_or(body)
}

/// Extract the first balanced JSON object from model output, tolerating
/// fences and surrounding prose.
pub fn extract_json_object(text: &str) -> Option<String> {
    let body = strip_fences(text);
    let start = body.find('{')?;
    let mut depth = 0i64;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in body[start..].char_indices() {
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(body[start..start + i + 1].to_string());
                }
            }
            _ => {}
        }
    }
    None
}

#[derive(Debug, Error)]
#[error("response contains no Solidity code: {0}")]
pub struct NotSolidity(String);

fn looks_like_solidity(body: &str) -> bool {
    body.lines().any(|l| {
        let t = l.trim_start();
        t.starts_with("pragma")
            || t.starts_with("contract ")
            || t.starts_with("abstract contract ")
            || t.starts_with("interface ")
            || t.starts_with("library ")
    })
}

/// The first fenced code block anywhere in the text, prose around it
/// ignored.
fn first_fenced_block(text: &str) -> Option<&str> {
    let open = text.find("```")?;
    let after_info = match text[open + 3..].find('\n') {
        Some(nl) => open + 3 + nl + 1,
        None => open + 3,
    };
    let close = text[after_info..].find("```")?;
    Some(text[after_info..after_info + close].trim())
}

/// Recover Solidity source from model output: prefer a fenced code block,
/// fall back to the raw text; require a `pragma` or `contract` token.
pub fn extract_solidity(text: &str) -> Result<String, NotSolidity> {
    if let Some(block) = first_fenced_block(text) {
        if looks_like_solidity(block) {
            return Ok(block.to_string());
        }
    }
    let body = text.trim();
    if !body.is_empty() && !body.contains("```") && looks_like_solidity(body) {
        return Ok(body.to_string());
    }
    Err(NotSolidity(
        "no pragma or contract declaration found".to_string(),
    ))
}

// ---------------------------------------------------------------------------
// Orchestration
// ---------------------------------------------------------------------------

/// Callback receiving each pipeline event as it is appended; used for live
/// streaming in single-contract mode.
pub type EventObserver<'o> = &'o (dyn Fn(&PipelineEvent) + Sync);

struct Run<'a> {
    cfg: &'a EngineConfig,
    backend: &'a dyn CompletionBackend,
    clock: Box<dyn Clock>,
    entry_id: String,
    events: Vec<PipelineEvent>,
    artifacts: Vec<PhaseArtifact>,
    observer: Option<EventObserver<'a>>,
}

impl<'a> Run<'a> {
    fn event(&mut self, phase: Phase, kind: EventKind, detail: impl Into<String>) {
        let event = PipelineEvent {
            timestamp_ms: self.clock.now_ms(),
            phase,
            kind,
            detail: detail.into(),
        };
        if let Some(observer) = self.observer {
            observer(&event);
        }
        self.events.push(event);
    }

    fn artifact(
        &mut self,
        phase: Phase,
        input: &str,
        output: String,
        duration_ms: u64,
        retries: u32,
    ) {
        let iteration = self.artifacts.iter().filter(|a| a.phase == phase).count() as u32;
        self.artifacts.push(PhaseArtifact {
            phase,
            iteration,
            input_digest: digest(input.as_bytes()),
            output_digest: digest(output.as_bytes()),
            output,
            duration_ms,
            retries,
        });
    }

    /// One agent call with transport retries and exponential backoff;
    /// `retried` events mark every retry.
    fn call_agent(
        &mut self,
        phase: Phase,
        agent: &AgentConfig,
        user_prompt: &str,
    ) -> Result<(CompletionResponse, u32), BackendError> {
        let req = CompletionRequest {
            phase,
            entry_id: self.entry_id.clone(),
            system_prompt: agent.system_prompt.clone(),
            user_prompt: user_prompt.to_string(),
            model: agent.model.clone(),
            temperature: agent.temperature,
        };
        let mut attempt = 0u32;
        loop {
            match self.backend.complete(&req) {
                Ok(response) => {
                    if response.text.len() > self.cfg.pipeline.max_response_bytes {
                        return Err(BackendError::ResponseTooLarge {
                            size: response.text.len(),
                            cap: self.cfg.pipeline.max_response_bytes,
                        });
                    }
                    return Ok((response, attempt));
                }
                Err(e) if e.retryable() && attempt < agent.max_retries => {
                    attempt += 1;
                    self.event(
                        phase,
                        EventKind::Retried,
                        format!("transport retry {attempt}: {e}"),
                    );
                    if !self.backend.deterministic() {
                        let delay = self.cfg.pipeline.retry_base_delay_ms << (attempt - 1).min(8);
                        std::thread::sleep(std::time::Duration::from_millis(delay));
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Run one agent phase whose output must parse; on a formatting failure
    /// the phase retries once with a corrective instruction appended, then
    /// fails.
    fn agent_phase<T>(
        &mut self,
        phase: Phase,
        agent: &AgentConfig,
        user_prompt: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<T, String> {
        let mut prompt = user_prompt.to_string();
        for format_attempt in 0..2 {
            let started = self.clock.now_ms();
            let (response, retries) = self
                .call_agent(phase, agent, &prompt)
                .map_err(|e| format!("backend unavailable: {e}"))?;
            let duration = self
                .clock
                .now_ms()
                .saturating_sub(started)
                .max(response.latency_ms);
            self.artifact(phase, &prompt, response.text.clone(), duration, retries);
            match parse(&response.text) {
                Ok(v) => return Ok(v),
                Err(problem) if format_attempt == 0 => {
                    self.event(
                        phase,
                        EventKind::Retried,
                        format!("format retry: {problem}"),
                    );
                    prompt.push_str(&prompts::corrective_suffix(&problem));
                }
                Err(problem) => return Err(problem),
            }
        }
        unreachable!("format retry loop returns")
    }
}

/// Execute the full pipeline for one benchmark entry. All failure modes are
/// encoded in the returned record; this function does not error.
pub fn run_pipeline(
    entry: &BenchmarkEntry,
    cfg: &EngineConfig,
    backend: &dyn CompletionBackend,
    compilers: &[CompilerInfo],
) -> PipelineRecord {
    run_pipeline_observed(entry, cfg, backend, compilers, None)
}

/// [`run_pipeline`] with a live event observer.
pub fn run_pipeline_observed(
    entry: &BenchmarkEntry,
    cfg: &EngineConfig,
    backend: &dyn CompletionBackend,
    compilers: &[CompilerInfo],
    observer: Option<EventObserver<'_>>,
) -> PipelineRecord {
    let clock: Box<dyn Clock> = if backend.deterministic() {
        Box::new(LogicalClock(AtomicU64::new(0)))
    } else {
        Box::new(SystemClock)
    };
    let mut run = Run {
        cfg,
        backend,
        clock,
        entry_id: entry.id.clone(),
        events: Vec::new(),
        artifacts: Vec::new(),
        observer,
    };
    let p = &cfg.pipeline;
    let fsm: Option<&FsmSpec> = entry.fsm.as_ref().and_then(|f| f.as_spec());

    // Phase 1: schema extraction.
    run.event(Phase::Parse, EventKind::Started, "");
    let parser = parser_agent(&p.model, p.temperature, p.max_retries);
    let schema = match run.agent_phase(
        Phase::Parse,
        &parser,
        &prompts::parser_user_prompt(&entry.requirement),
        |text| {
            let json = extract_json_object(text).ok_or("no JSON object in response")?;
            schema_from_json(json.as_bytes()).map_err(|e| e.to_string())
        },
    ) {
        Ok(schema) => {
            let flags = validate_schema(&schema);
            let detail = if flags.is_empty() {
                "schema extracted".to_string()
            } else {
                format!("schema extracted with {} validation flag(s)", flags.len())
            };
            run.event(Phase::Parse, EventKind::Completed, detail);
            Some((schema, flags))
        }
        Err(e) => {
            run.event(Phase::Parse, EventKind::Error, e);
            None
        }
    };

    let (schema, schema_flags) = match schema {
        Some((s, f)) => (Some(s), f),
        None => (None, Vec::new()),
    };
    let complexity = schema.as_ref().map(|s| {
        classify_complexity(
            s.conditions.function_names.len(),
            s.conditions.state_names.len(),
        )
    });

    // Phase 2: Solidity generation.
    let mut code = String::new();
    if let Some(schema_ref) = &schema {
        run.event(Phase::Generate, EventKind::Started, "");
        let generator = generator_agent(&p.model, p.temperature, p.max_retries);
        let schema_json = String::from_utf8(crate::schema::schema_to_json(schema_ref))
            .expect("schema json is utf-8");
        match run.agent_phase(
            Phase::Generate,
            &generator,
            &prompts::generator_user_prompt(&entry.requirement, &schema_json),
            |text| extract_solidity(text).map_err(|e| e.to_string()),
        ) {
            Ok(solidity) => {
                run.event(
                    Phase::Generate,
                    EventKind::Completed,
                    format!("{} bytes of Solidity", solidity.len()),
                );
                code = solidity;
            }
            Err(e) => run.event(Phase::Generate, EventKind::Error, e),
        }
    }

    // Phases 3 and 4: audit and the bounded refinement loop.
    let mut audit_trail: Vec<AuditReport> = Vec::new();
    if !code.is_empty() {
        let auditor = auditor_agent(&p.model, p.temperature, p.max_retries);
        let refiner = refiner_agent(&p.model, p.temperature, p.max_retries);
        let mut state = RefinementState::new(p.max_refinement_iterations);
        loop {
            run.event(Phase::Audit, EventKind::Started, "");
            let heuristic = parse_surface(&code)
                .ok()
                .map(|(surface, _)| heuristic_audit(&surface, &code));
            let llm = run
                .agent_phase(
                    Phase::Audit,
                    &auditor,
                    &prompts::auditor_user_prompt(&code),
                    |text| {
                        parse_llm_audit(text).ok_or_else(|| "unparseable audit output".to_string())
                    },
                )
                .ok();
            let (decision, downgraded) = match (llm, heuristic) {
                (Some(l), Some(h)) => (combine_reports(&l, &h), false),
                (Some(l), None) => (l, false),
                (None, Some(h)) => (h, true),
                (None, None) => (
                    AuditReport {
                        severity_level: Severity::None,
                        approved: true,
                        findings: Vec::new(),
                        summary: "no audit available".to_string(),
                        source: AuditSource::Heuristic,
                    },
                    true,
                ),
            };
            let mut detail = format!(
                "severity={} approved={} findings={}",
                decision.severity_level,
                decision.approved,
                decision.findings.len()
            );
            if downgraded {
                detail.push_str("; model audit unusable, downgraded to heuristic audit");
            }
            if !decision.severity_consistent() {
                detail.push_str("; approved flag contradicts severity level");
            }
            run.event(Phase::Audit, EventKind::Completed, detail);
            state
                .history
                .push((decision.clone(), digest(code.as_bytes())[..12].to_string()));
            audit_trail.push(decision.clone());

            if decision.approved {
                run.event(
                    Phase::Audit,
                    EventKind::AuditApproved,
                    format!("severity={}", decision.severity_level),
                );
                break;
            }
            if !(p.enable_reinforcement && should_refine(&decision, &state)) {
                break;
            }
            run.event(
                Phase::Refine,
                EventKind::RefineTriggered,
                format!(
                    "iteration {} of {}: severity={}",
                    state.refinement_count + 1,
                    state.max_iterations,
                    decision.severity_level
                ),
            );
            run.event(Phase::Refine, EventKind::Started, "");
            let findings_json =
                serde_json::to_string_pretty(&decision.findings).expect("findings serialize");
            match run.agent_phase(
                Phase::Refine,
                &refiner,
                &prompts::refiner_user_prompt(&code, &findings_json),
                |text| extract_solidity(text).map_err(|e| e.to_string()),
            ) {
                Ok(refined) => {
                    state.refinement_count += 1;
                    code = refined;
                    run.event(
                        Phase::Refine,
                        EventKind::Completed,
                        format!("revision {}", state.refinement_count),
                    );
                }
                Err(e) => {
                    run.event(Phase::Refine, EventKind::Error, e);
                    break;
                }
            }
        }
    }

    // Phase 5: deterministic ABI export from the parsed surface.
    let mut abi: Vec<AbiEntry> = Vec::new();
    let mut surface: Option<ContractSurface> = None;
    if !code.is_empty() {
        run.event(Phase::Abi, EventKind::Started, "");
        match parse_surface(&code) {
            Ok((s, warnings)) => {
                let (entries, abi_warnings) = export_abi(&s);
                let json = String::from_utf8(abi_to_json(&entries)).expect("abi json is utf-8");
                run.artifact(Phase::Abi, &code, json, 0, 0);
                run.event(
                    Phase::Abi,
                    EventKind::Completed,
                    format!(
                        "{} entries, {} parse warning(s), {} type warning(s)",
                        entries.len(),
                        warnings.len(),
                        abi_warnings.len()
                    ),
                );
                abi = entries;
                surface = Some(s);
            }
            Err(e) => run.event(Phase::Abi, EventKind::Error, e.to_string()),
        }
    }

    // Quality evaluation.
    run.event(Phase::Evaluate, EventKind::Started, "");
    let mut lint: Vec<LintFinding> = Vec::new();
    let quality = match (&schema, &surface) {
        (Some(schema_ref), Some(surface_ref)) => {
            lint = lint_forbidden_patterns(surface_ref, &code);
            let deterministic = evaluate(schema_ref, fsm, surface_ref, &lint, &cfg.metrics);
            match deterministic {
                Ok(mut report) => {
                    if p.scoring == ScoreSource::LlmJudge {
                        report = llm_judge_scores(&mut run, cfg, entry, schema_ref, &code)
                            .unwrap_or(report);
                    }
                    run.event(
                        Phase::Evaluate,
                        EventKind::Completed,
                        format!("composite={:.2} grade={}", report.composite, report.grade),
                    );
                    report
                }
                Err(e) => {
                    run.event(Phase::Evaluate, EventKind::Error, e.to_string());
                    zero_report(&cfg.metrics)
                }
            }
        }
        _ => {
            run.event(
                Phase::Evaluate,
                EventKind::Error,
                "nothing to score; quality set to zero",
            );
            zero_report(&cfg.metrics)
        }
    };
    let quality_json = serde_json::to_string_pretty(&quality).expect("quality serializes");
    run.artifact(Phase::Evaluate, &code, quality_json, 0, 0);

    // Compilation gate.
    let mut compile = if code.is_empty() {
        CompileResult::not_checked("no contract produced")
    } else if !cfg.compile.enabled {
        CompileResult::not_checked("compilation disabled in config")
    } else {
        compile_check(
            &code,
            std::time::Duration::from_secs(cfg.compile.timeout_secs),
            compilers,
        )
    };
    if backend.deterministic() {
        // Keep scripted runs byte-identical even when a real compiler ran.
        compile.duration_ms = 0;
    }

    // Optional paired comparison against the ground truth.
    let mut comparison: Option<PairedResult> = None;
    if let (true, Some(schema_ref), Some(surface_ref)) = (p.compare_ground_truth, &schema, &surface)
    {
        run.event(Phase::Compare, EventKind::Started, "");
        match parse_surface(&entry.ground_truth_code) {
            Ok((gt_surface, _)) => {
                let gt_lint = lint_forbidden_patterns(&gt_surface, &entry.ground_truth_code);
                let gen_report = evaluate(schema_ref, fsm, surface_ref, &lint, &cfg.metrics);
                let gt_report = evaluate(schema_ref, fsm, &gt_surface, &gt_lint, &cfg.metrics);
                match (gen_report, gt_report) {
                    (Ok(g), Ok(t)) => {
                        let pair = PairedResult::from_reports(g, t);
                        let pair_json =
                            serde_json::to_string_pretty(&pair).expect("pair serializes");
                        run.artifact(Phase::Compare, &entry.ground_truth_code, pair_json, 0, 0);
                        run.event(
                            Phase::Compare,
                            EventKind::Completed,
                            format!("composite delta {:+.2}", pair.composite_delta),
                        );
                        comparison = Some(pair);
                    }
                    _ => run.event(Phase::Compare, EventKind::Error, "scoring failed"),
                }
            }
            Err(e) => run.event(
                Phase::Compare,
                EventKind::Error,
                format!("ground truth unparseable: {e}"),
            ),
        }
    }

    let failed = schema.is_none() || code.is_empty();
    PipelineRecord {
        entry_id: entry.id.clone(),
        failed,
        phase_artifacts: run.artifacts,
        events: run.events,
        schema,
        schema_flags,
        complexity,
        final_contract: code,
        abi,
        lint,
        compile,
        quality,
        audit_trail,
        comparison,
        deployment_requested: p.enable_deployment,
    }
}

/// Optional model-judged scoring: the model supplies the five metric scores,
/// the composite is still recomputed here. Falls back to the deterministic
/// report on any formatting failure.
fn llm_judge_scores(
    run: &mut Run,
    cfg: &EngineConfig,
    entry: &BenchmarkEntry,
    schema: &ContractSchema,
    code: &str,
) -> Option<QualityReport> {
    let p = &cfg.pipeline;
    let evaluator = evaluator_agent(&p.model, p.temperature, p.max_retries);
    let schema_json =
        String::from_utf8(crate::schema::schema_to_json(schema)).expect("schema json utf-8");
    let parsed = run.agent_phase(
        Phase::Evaluate,
        &evaluator,
        &prompts::evaluator_user_prompt(&entry.requirement, &schema_json, code),
        |text| {
            let json = extract_json_object(text).ok_or("no JSON object in response")?;
            #[derive(Deserialize)]
            struct RawScores {
                m1_functional: f64,
                m2_variable: f64,
                m3_state_machine: f64,
                m4_business_logic: f64,
                m5_code_quality: f64,
            }
            let raw: RawScores = serde_json::from_str(&json).map_err(|e| e.to_string())?;
            Ok(MetricScores {
                m1_functional: raw.m1_functional.clamp(0.0, 100.0),
                m2_variable: raw.m2_variable.clamp(0.0, 100.0),
                m3_state_machine: raw.m3_state_machine.clamp(0.0, 100.0),
                m4_business_logic: raw.m4_business_logic.clamp(0.0, 100.0),
                m5_code_quality: raw.m5_code_quality.clamp(0.0, 100.0),
            })
        },
    );
    match parsed {
        Ok(scores) => QualityReport::from_scores(scores, ScoreSource::LlmJudge, &cfg.metrics).ok(),
        Err(e) => {
            run.event(
                Phase::Evaluate,
                EventKind::Retried,
                format!("judge output unusable; deterministic scores kept: {e}"),
            );
            None
        }
    }
}

#[cfg(test)]
mod tests;
