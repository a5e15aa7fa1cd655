//! Buildability gate: invokes an external Solidity compiler over its
//! standard-JSON interface and records pass/fail with diagnostics.
//!
//! One subprocess per check, no daemon. All outcomes are encoded in
//! [`CompileResult`]; nothing escapes as an error. A missing compiler or an
//! unsatisfiable pragma yields `NotChecked` with a reason.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompileStatus {
    Success,
    Failure,
    NotChecked,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileResult {
    pub status: CompileStatus,
    pub compiler_version: String,
    pub diagnostics: Vec<Diagnostic>,
    pub duration_ms: u64,
    /// Why the check could not run (compiler unavailable, version
    /// unresolvable); empty diagnostics in that case.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl CompileResult {
    pub fn not_checked(reason: impl Into<String>) -> Self {
        Self {
            status: CompileStatus::NotChecked,
            compiler_version: String::new(),
            diagnostics: Vec::new(),
            duration_ms: 0,
            reason: Some(reason.into()),
        }
    }
}

// ---------------------------------------------------------------------------
// Version constraints (pragma grammar: ^ ~ >= <= > < =, space = AND, || = OR)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SolcVersion {
    pub major: u32,
    pub minor: u32,
    pub patch: u32,
}

impl SolcVersion {
    pub fn new(major: u32, minor: u32, patch: u32) -> Self {
        Self {
            major,
            minor,
            patch,
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        let mut it = text.trim().split('.');
        let major = it.next()?.parse().ok()?;
        let minor = it.next().unwrap_or("0").parse().ok()?;
        let patch = it
            .next()
            .map(|p| {
                // "0.8.17+commit..." keeps only the leading digits.
                p.chars()
                    .take_while(|c| c.is_ascii_digit())
                    .collect::<String>()
            })
            .filter(|p| !p.is_empty())
            .map(|p| p.parse().ok())
            .unwrap_or(Some(0))?;
        Some(Self {
            major,
            minor,
            patch,
        })
    }
}

impl std::fmt::Display for SolcVersion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}.{}", self.major, self.minor, self.patch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CmpOp {
    Caret,
    Tilde,
    Ge,
    Le,
    Gt,
    Lt,
    Eq,
}

#[derive(Debug, Clone, Copy)]
struct Comparator {
    op: CmpOp,
    version: SolcVersion,
    /// Number of version components written in the source text (a bare
    /// `0.8` behaves as a wildcard over patch versions).
    written_parts: u8,
}

impl Comparator {
    fn matches(&self, v: SolcVersion) -> bool {
        let c = self.version;
        match self.op {
            CmpOp::Ge => v >= c,
            CmpOp::Gt => v > c,
            CmpOp::Le => v <= c,
            CmpOp::Lt => v < c,
            CmpOp::Eq => {
                if self.written_parts < 3 {
                    v.major == c.major && v.minor == c.minor
                } else {
                    v == c
                }
            }
            // ^0.8.2 admits >=0.8.2 <0.9.0 (minor locked while major is 0).
            CmpOp::Caret => {
                if v < c {
                    return false;
                }
                if c.major > 0 {
                    v.major == c.major
                } else if c.minor > 0 {
                    v.major == 0 && v.minor == c.minor
                } else {
                    v == c
                }
            }
            // ~0.8.2 locks the minor version.
            CmpOp::Tilde => v >= c && v.major == c.major && v.minor == c.minor,
        }
    }
}

/// A pragma constraint: OR-alternatives of AND-comparator groups.
#[derive(Debug, Clone, Default)]
pub struct VersionConstraint {
    alternatives: Vec<Vec<Comparator>>,
}

impl VersionConstraint {
    /// Parse a pragma constraint like `^0.8.0` or `>=0.4.22 <0.9.0`.
    /// Unparseable text yields an empty constraint matching everything.
    pub fn parse(text: &str) -> Self {
        let mut alternatives = Vec::new();
        for alt in text.split("||") {
            let mut comps = Vec::new();
            let mut rest = alt.trim();
            while !rest.is_empty() {
                let (op, after) = if let Some(r) = rest.strip_prefix(">=") {
                    (CmpOp::Ge, r)
                } else if let Some(r) = rest.strip_prefix("<=") {
                    (CmpOp::Le, r)
                } else if let Some(r) = rest.strip_prefix('>') {
                    (CmpOp::Gt, r)
                } else if let Some(r) = rest.strip_prefix('<') {
                    (CmpOp::Lt, r)
                } else if let Some(r) = rest.strip_prefix('^') {
                    (CmpOp::Caret, r)
                } else if let Some(r) = rest.strip_prefix('~') {
                    (CmpOp::Tilde, r)
                } else if let Some(r) = rest.strip_prefix('=') {
                    (CmpOp::Eq, r)
                } else {
                    (CmpOp::Eq, rest)
                };
                let after = after.trim_start();
                let end = after
                    .find(|c: char| !(c.is_ascii_digit() || c == '.'))
                    .unwrap_or(after.len());
                let (num, tail) = after.split_at(end);
                if let Some(version) = SolcVersion::parse(num) {
                    comps.push(Comparator {
                        op,
                        version,
                        written_parts: num.split('.').count() as u8,
                    });
                }
                if num.is_empty() {
                    // Skip a character we cannot interpret.
                    rest = &after[after.len().min(1)..];
                } else {
                    rest = tail.trim_start();
                }
            }
            if !comps.is_empty() {
                alternatives.push(comps);
            }
        }
        Self { alternatives }
    }

    pub fn matches(&self, v: SolcVersion) -> bool {
        if self.alternatives.is_empty() {
            return true;
        }
        self.alternatives
            .iter()
            .any(|group| group.iter().all(|c| c.matches(v)))
    }
}

/// Extract `pragma solidity ...` constraint strings from source text.
pub fn extract_pragmas(source: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in source.lines() {
        let t = line.trim_start();
        if let Some(rest) = t.strip_prefix("pragma") {
            let rest = rest.trim_start();
            if let Some(constraint) = rest.strip_prefix("solidity") {
                let c = constraint.trim().trim_end_matches(';').trim();
                if !c.is_empty() {
                    out.push(c.to_string());
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Compiler discovery and invocation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompilerInfo {
    pub path: PathBuf,
    pub version: SolcVersion,
}

/// Query a compiler binary for its version (`--version`).
pub fn probe_compiler(path: &Path) -> Option<CompilerInfo> {
    let output = Command::new(path)
        .arg("--version")
        .stdin(Stdio::null())
        .stderr(Stdio::null())
        .output()
        .ok()?;
    if !output.status.success() {
        return None;
    }
    let text = String::from_utf8_lossy(&output.stdout);
    let version = text
        .split(|c: char| c.is_whitespace() || c == ':')
        .find_map(|tok| {
            let tok = tok.trim();
            if tok.contains('.') && tok.chars().next().is_some_and(|c| c.is_ascii_digit()) {
                SolcVersion::parse(tok)
            } else {
                None
            }
        })?;
    Some(CompilerInfo {
        path: path.to_path_buf(),
        version,
    })
}

/// Probe explicit paths plus `solc` on PATH; deduplicated by version, sorted
/// ascending.
pub fn discover_compilers(explicit: &[PathBuf]) -> Vec<CompilerInfo> {
    let mut found: Vec<CompilerInfo> = Vec::new();
    for p in explicit {
        if let Some(info) = probe_compiler(p) {
            found.push(info);
        }
    }
    if let Some(info) = probe_compiler(Path::new("solc")) {
        found.push(info);
    }
    found.sort_by_key(|c| c.version);
    found.dedup_by_key(|c| c.version);
    found
}

/// Pick the compiler for a source: the highest installed version satisfying
/// every pragma; with no pragma, the newest installed 0.8.x, else the newest
/// installed.
pub fn select_compiler<'c>(
    pragmas: &[String],
    compilers: &'c [CompilerInfo],
) -> Result<&'c CompilerInfo, String> {
    if compilers.is_empty() {
        return Err("no Solidity compiler available".to_string());
    }
    if pragmas.is_empty() {
        let preferred = compilers
            .iter()
            .rev()
            .find(|c| c.version.major == 0 && c.version.minor == 8);
        return Ok(preferred.unwrap_or_else(|| compilers.last().expect("non-empty")));
    }
    let constraints: Vec<VersionConstraint> = pragmas
        .iter()
        .map(|p| VersionConstraint::parse(p))
        .collect();
    compilers
        .iter()
        .rev()
        .find(|c| constraints.iter().all(|k| k.matches(c.version)))
        .ok_or_else(|| {
            format!(
                "no installed compiler satisfies pragma [{}]; installed: [{}]",
                pragmas.join(", "),
                compilers
                    .iter()
                    .map(|c| c.version.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            )
        })
}

#[derive(Deserialize, Default)]
struct StandardJsonOutput {
    #[serde(default)]
    errors: Vec<StandardJsonError>,
}

#[derive(Deserialize)]
struct StandardJsonError {
    severity: String,
    #[serde(default)]
    message: String,
    #[serde(rename = "formattedMessage", default)]
    formatted_message: Option<String>,
    #[serde(rename = "sourceLocation", default)]
    source_location: Option<SourceLocation>,
}

#[derive(Deserialize)]
struct SourceLocation {
    #[serde(default)]
    start: i64,
}

fn offset_to_line(source: &str, offset: i64) -> Option<u32> {
    if offset < 0 {
        return None;
    }
    let offset = (offset as usize).min(source.len());
    Some(source[..offset].bytes().filter(|b| *b == b'\n').count() as u32 + 1)
}

/// Compile a source with the given compiler set, honoring the timeout.
pub fn compile_check(source: &str, timeout: Duration, compilers: &[CompilerInfo]) -> CompileResult {
    let pragmas = extract_pragmas(source);
    let compiler = match select_compiler(&pragmas, compilers) {
        Ok(c) => c,
        Err(reason) => return CompileResult::not_checked(reason),
    };

    let input = serde_json::json!({
        "language": "Solidity",
        "sources": { "contract.sol": { "content": source } },
        "settings": { "outputSelection": { "*": { "*": ["evm.bytecode"] } } }
    });

    let started = Instant::now();
    let spawned = Command::new(&compiler.path)
        .arg("--standard-json")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn();
    let mut child = match spawned {
        Ok(c) => c,
        Err(e) => {
            return CompileResult {
                status: CompileStatus::Failure,
                compiler_version: compiler.version.to_string(),
                diagnostics: vec![Diagnostic {
                    severity: "error".into(),
                    message: format!("failed to start compiler: {e}"),
                    line: None,
                }],
                duration_ms: 0,
                reason: None,
            }
        }
    };

    let input_bytes = serde_json::to_vec(&input).expect("standard-json input serializes");
    if let Some(mut stdin) = child.stdin.take() {
        let _ = stdin.write_all(&input_bytes);
    }
    let stdout_handle = child.stdout.take();
    let reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut out) = stdout_handle {
            let _ = out.read_to_end(&mut buf);
        }
        buf
    });

    let deadline = started + timeout;
    let timed_out = loop {
        match child.try_wait() {
            Ok(Some(_)) => break false,
            Ok(None) => {
                if Instant::now() >= deadline {
                    let _ = child.kill();
                    let _ = child.wait();
                    break true;
                }
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(_) => break false,
        }
    };
    let duration_ms = started.elapsed().as_millis() as u64;

    if timed_out {
        // Grandchildren may still hold the pipe open; do not wait on the
        // reader thread.
        return CompileResult {
            status: CompileStatus::Failure,
            compiler_version: compiler.version.to_string(),
            diagnostics: vec![Diagnostic {
                severity: "error".into(),
                message: format!("compilation timed out after {}ms", timeout.as_millis()),
                line: None,
            }],
            duration_ms,
            reason: None,
        };
    }
    let stdout = reader.join().unwrap_or_default();

    let parsed: Result<StandardJsonOutput, _> = serde_json::from_slice(&stdout);
    let output = match parsed {
        Ok(o) => o,
        Err(e) => {
            return CompileResult {
                status: CompileStatus::Failure,
                compiler_version: compiler.version.to_string(),
                diagnostics: vec![Diagnostic {
                    severity: "error".into(),
                    message: format!("unreadable compiler output: {e}"),
                    line: None,
                }],
                duration_ms,
                reason: None,
            }
        }
    };

    let diagnostics: Vec<Diagnostic> = output
        .errors
        .into_iter()
        .map(|e| Diagnostic {
            severity: e.severity.clone(),
            message: e.formatted_message.unwrap_or(e.message),
            line: e
                .source_location
                .and_then(|loc| offset_to_line(source, loc.start)),
        })
        .collect();
    let has_errors = diagnostics.iter().any(|d| d.severity == "error");

    CompileResult {
        status: if has_errors {
            CompileStatus::Failure
        } else {
            CompileStatus::Success
        },
        compiler_version: compiler.version.to_string(),
        diagnostics,
        duration_ms,
        reason: None,
    }
}

/// Aggregate compilation counts and the success rate over checked contracts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct CompileRate {
    pub checked: usize,
    pub success: usize,
    pub failure: usize,
    pub not_checked: usize,
    /// success / (success + failure); absent when nothing was checked.
    pub rate: Option<f64>,
}

pub fn compile_rate(results: impl IntoIterator<Item = CompileStatus>) -> CompileRate {
    let mut r = CompileRate::default();
    for status in results {
        match status {
            CompileStatus::Success => r.success += 1,
            CompileStatus::Failure => r.failure += 1,
            CompileStatus::NotChecked => r.not_checked += 1,
        }
    }
    r.checked = r.success + r.failure;
    r.rate = if r.checked > 0 {
        Some(r.success as f64 / r.checked as f64)
    } else {
        None
    };
    r
}
