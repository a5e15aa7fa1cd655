//! Forbidden-pattern linter.
//!
//! Flags the generation rules' forbidden patterns: empty function bodies,
//! unused state variables, silent failures (`if (condition) return;`),
//! decorative events without state effects, and placeholder markers left in
//! comments.

use serde::{Deserialize, Serialize};

use super::lexer::lex;
use super::ContractSurface;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LintPattern {
    EmptyFunctionBody,
    UnusedStateVariable,
    SilentFailure,
    DecorativeEvent,
    PlaceholderMarker,
}

impl std::fmt::Display for LintPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LintPattern::EmptyFunctionBody => "empty-function-body",
            LintPattern::UnusedStateVariable => "unused-state-variable",
            LintPattern::SilentFailure => "silent-failure",
            LintPattern::DecorativeEvent => "decorative-event",
            LintPattern::PlaceholderMarker => "placeholder-marker",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintFinding {
    pub pattern: LintPattern,
    /// 1-based source line.
    pub location: u32,
    pub detail: String,
}

const PLACEHOLDER_TOKENS: [&str; 3] = ["todo", "fixme", "placeholder"];

/// Lint a parsed surface against the forbidden patterns. `source` must be
/// the text the surface was parsed from (comments are re-scanned here).
pub fn lint_forbidden_patterns(surface: &ContractSurface, source: &str) -> Vec<LintFinding> {
    let mut findings = Vec::new();

    for f in &surface.functions {
        if f.body_present && f.body_stats.statement_count == 0 {
            findings.push(LintFinding {
                pattern: LintPattern::EmptyFunctionBody,
                location: f.line.max(1),
                detail: format!("function `{}` has an empty body", f.name),
            });
        }
        for line in &f.facts.silent_failure_lines {
            findings.push(LintFinding {
                pattern: LintPattern::SilentFailure,
                location: (*line).max(1),
                detail: format!(
                    "function `{}` exits silently on a guard condition instead of reverting",
                    f.name
                ),
            });
        }
        if f.body_stats.emit_count > 0
            && f.body_stats.state_write_count == 0
            && f.body_stats.external_call_count == 0
        {
            let events: Vec<&str> = f.facts.emitted_events.iter().map(|s| s.as_str()).collect();
            findings.push(LintFinding {
                pattern: LintPattern::DecorativeEvent,
                location: f.line.max(1),
                detail: format!(
                    "function `{}` emits [{}] without any state change or external call",
                    f.name,
                    events.join(", ")
                ),
            });
        }
    }

    for m in &surface.modifiers {
        for line in &m.facts.silent_failure_lines {
            findings.push(LintFinding {
                pattern: LintPattern::SilentFailure,
                location: (*line).max(1),
                detail: format!(
                    "modifier `{}` exits silently on a guard condition instead of reverting",
                    m.name
                ),
            });
        }
    }

    for v in &surface.state_variables {
        if !surface.state_var_used(&v.name) {
            findings.push(LintFinding {
                pattern: LintPattern::UnusedStateVariable,
                location: v.line.max(1),
                detail: format!("state variable `{}` is never read or written", v.name),
            });
        }
    }

    for comment in lex(source).comments {
        let lower = comment.text.to_lowercase();
        for marker in PLACEHOLDER_TOKENS {
            if contains_word(&lower, marker) {
                findings.push(LintFinding {
                    pattern: LintPattern::PlaceholderMarker,
                    location: comment.line.max(1),
                    detail: format!("comment contains `{marker}` marker"),
                });
                break;
            }
        }
    }

    findings
}

/// Word-boundary containment so e.g. "mastodon" does not match "todo".
fn contains_word(haystack: &str, word: &str) -> bool {
    let mut search_from = 0;
    while let Some(pos) = haystack[search_from..].find(word) {
        let abs = search_from + pos;
        let before_ok = abs == 0
            || !haystack[..abs]
                .chars()
                .next_back()
                .is_some_and(|c| c.is_ascii_alphanumeric());
        let after = abs + word.len();
        let after_ok = after >= haystack.len()
            || !haystack[after..]
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_alphanumeric());
        if before_ok && after_ok {
            return true;
        }
        search_from = abs + word.len();
    }
    false
}
