//! JSONL benchmark ingestion and specification-complexity classification.
//!
//! A benchmark file holds one JSON object per line with a requirement text,
//! an optional FSM specification, and a ground-truth Solidity implementation.
//! Malformed lines become per-record [`LineError`]s rather than aborting the
//! stream; only an unreadable file is fatal.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One transition of a formal FSM specification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct FsmTransition {
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub condition: String,
    #[serde(default)]
    pub action: String,
}

/// Formal definition of states and valid transitions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct FsmSpec {
    #[serde(default)]
    pub states: Vec<String>,
    #[serde(default)]
    pub transitions: Vec<FsmTransition>,
}

impl FsmSpec {
    /// Transition endpoints that do not appear in `states`.
    pub fn dangling_endpoints(&self) -> Vec<String> {
        let mut out = Vec::new();
        for tr in &self.transitions {
            for endpoint in [&tr.from, &tr.to] {
                if !endpoint.is_empty()
                    && !self.states.iter().any(|s| s == endpoint)
                    && !out.contains(endpoint)
                {
                    out.push(endpoint.clone());
                }
            }
        }
        out
    }
}

/// FSM field as found in the dataset: structured when it parses, raw text
/// otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FsmField {
    Structured(FsmSpec),
    Text(String),
}

impl FsmField {
    pub fn as_spec(&self) -> Option<&FsmSpec> {
        match self {
            FsmField::Structured(s) => Some(s),
            FsmField::Text(_) => None,
        }
    }
}

/// One requirement/FSM/ground-truth triple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkEntry {
    pub id: String,
    pub requirement: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fsm: Option<FsmField>,
    pub ground_truth_code: String,
}

/// A recoverable per-line failure, carrying the 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for LineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Fatal ingestion failure: the file itself cannot be read.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    IoFailure {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

// Accepted key spellings; the dataset format never published exact names.
#[derive(Deserialize)]
struct RawEntry {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    requirement: Option<String>,
    #[serde(default)]
    spec: Option<String>,
    #[serde(default)]
    fsm: Option<serde_json::Value>,
    #[serde(default)]
    code: Option<String>,
    #[serde(default)]
    ground_truth: Option<String>,
}

fn parse_fsm_value(value: serde_json::Value) -> Option<FsmField> {
    match value {
        serde_json::Value::Null => None,
        serde_json::Value::String(s) if s.trim().is_empty() => None,
        serde_json::Value::String(s) => Some(FsmField::Text(s)),
        other => match serde_json::from_value::<FsmSpec>(other.clone()) {
            Ok(spec) => Some(FsmField::Structured(spec)),
            Err(_) => Some(FsmField::Text(other.to_string())),
        },
    }
}

fn parse_line(line: &str, line_no: usize) -> Result<BenchmarkEntry, LineError> {
    let raw: RawEntry = serde_json::from_str(line).map_err(|e| LineError {
        line: line_no,
        message: format!("invalid JSON: {e}"),
    })?;
    let requirement = raw
        .requirement
        .or(raw.spec)
        .map(|s| s.trim().to_string())
        .unwrap_or_default();
    if requirement.is_empty() {
        return Err(LineError {
            line: line_no,
            message: "missing or empty requirement/spec field".into(),
        });
    }
    let ground_truth_code = raw.code.or(raw.ground_truth).unwrap_or_default();
    if ground_truth_code.trim().is_empty() {
        return Err(LineError {
            line: line_no,
            message: "missing or empty code/ground_truth field".into(),
        });
    }
    let id = raw
        .id
        .filter(|s| !s.trim().is_empty())
        .unwrap_or_else(|| format!("entry-{line_no:06}"));
    Ok(BenchmarkEntry {
        id,
        requirement,
        fsm: raw.fsm.and_then(parse_fsm_value),
        ground_truth_code,
    })
}

/// Streaming JSONL reader. Yields one item per non-blank line in input
/// order; no line is dropped silently (entries + errors = non-blank lines).
pub struct JsonlReader {
    lines: std::io::Lines<BufReader<File>>,
    line_no: usize,
    done: bool,
}

impl Iterator for JsonlReader {
    type Item = Result<BenchmarkEntry, LineError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            self.line_no += 1;
            match self.lines.next() {
                None => return None,
                Some(Err(e)) => {
                    // A mid-stream read error poisons the rest of the file.
                    self.done = true;
                    return Some(Err(LineError {
                        line: self.line_no,
                        message: format!("read error: {e}"),
                    }));
                }
                Some(Ok(line)) => {
                    if line.trim().is_empty() {
                        continue;
                    }
                    return Some(parse_line(&line, self.line_no));
                }
            }
        }
    }
}

/// Open a JSONL benchmark file for streaming.
pub fn load_jsonl(path: &Path) -> Result<JsonlReader, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::IoFailure {
        path: path.display().to_string(),
        source,
    })?;
    Ok(JsonlReader {
        lines: BufReader::new(file).lines(),
        line_no: 0,
        done: false,
    })
}

/// Complexity band of a specification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TierLevel {
    Low,
    Medium,
    High,
}

impl std::fmt::Display for TierLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TierLevel::Low => write!(f, "Low"),
            TierLevel::Medium => write!(f, "Medium"),
            TierLevel::High => write!(f, "High"),
        }
    }
}

/// Classified specification complexity with the counts that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityTier {
    pub tier: TierLevel,
    pub function_count: usize,
    pub state_count: usize,
    /// Both counts are zero; the bands start at 1, so this is outside them.
    pub degenerate: bool,
}

/// Classify complexity from specification counts.
///
/// Low iff functions <= 3 and states <= 2; High iff functions >= 8 or
/// states >= 5; Medium otherwise. A contract is as complex as its most
/// complex dimension, so a mixed pair takes the higher band.
pub fn classify_complexity(function_count: usize, state_count: usize) -> ComplexityTier {
    let tier = if function_count >= 8 || state_count >= 5 {
        TierLevel::High
    } else if function_count <= 3 && state_count <= 2 {
        TierLevel::Low
    } else {
        TierLevel::Medium
    };
    ComplexityTier {
        tier,
        function_count,
        state_count,
        degenerate: function_count == 0 && state_count == 0,
    }
}
