//! Structural Solidity parsing and forbidden-pattern linting.
//!
//! This is a structural parser, not a full grammar: it recovers declarations
//! (functions, state variables, enums, events, modifiers) and per-body
//! statistics, tolerating any input. Full semantic analysis is delegated to
//! the external compiler gate. Everything here is a pure function over
//! immutable inputs and freely parallel.

mod analyze;
mod lexer;
mod lint;
mod parser;

pub use lexer::split_ident_tokens;
pub use lint::{lint_forbidden_patterns, LintFinding, LintPattern};
pub use parser::parse_surface;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Function/variable visibility. `Default` means unspecified in source
/// (legal through 0.4.x, where it meant public).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    Public,
    Private,
    External,
    Internal,
    #[default]
    Default,
}

impl Visibility {
    /// Callable from outside the contract.
    pub fn is_externally_callable(self) -> bool {
        matches!(self, Visibility::Public | Visibility::External)
    }
}

/// State mutability of a function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mutability {
    #[default]
    None,
    View,
    Pure,
    Payable,
}

/// A declared parameter. `indexed` is only meaningful on event parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub type_text: String,
    #[serde(default)]
    pub indexed: bool,
}

/// Statement-level statistics of one function body. All counts are zero when
/// the body is absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct BodyStats {
    pub statement_count: u32,
    pub require_count: u32,
    pub emit_count: u32,
    pub external_call_count: u32,
    pub state_write_count: u32,
    pub loop_count: u32,
    pub reads_block_timestamp: bool,
}

/// Deeper facts recovered from a body walk; feeds metrics, lint, and the
/// heuristic audit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct BodyFacts {
    /// State variables read (any occurrence that is not the assignment root).
    pub state_reads: BTreeSet<String>,
    /// State variables written (assignment root, `delete`, `push`/`pop`, `++`/`--`).
    pub state_writes: BTreeSet<String>,
    /// Qualified enum values assigned to enum-typed state variables:
    /// `(variable, member)`.
    pub enum_writes: Vec<(String, String)>,
    /// Enum members referenced anywhere in the body (qualified `Enum.member`).
    pub enum_mentions: BTreeSet<String>,
    /// Events emitted in this body.
    pub emitted_events: BTreeSet<String>,
    /// An external call occurs textually before some state write.
    pub call_before_write: bool,
    /// An external call occurs inside a loop body.
    pub call_in_loop: bool,
    /// `address`-typed parameters with no `address(0)` check in the body.
    pub unchecked_address_params: Vec<String>,
    /// Some `require(...)` references `msg.sender`.
    pub has_sender_require: bool,
    /// `require(...)` calls with no message string argument.
    pub requires_without_message: u32,
    /// A low-level `.call`/`.send`/`.delegatecall` whose return value is
    /// neither assigned nor checked.
    pub unused_lowlevel_call: bool,
    /// Arithmetic operators appear in the body.
    pub has_arithmetic: bool,
    /// Lines of `if (<cond>) return;` shapes with no else branch.
    pub silent_failure_lines: Vec<u32>,
}

/// A declared function. Constructors are represented with the name
/// `constructor` (also for the pre-0.4.22 contract-named form); fallback and
/// receive functions use those literal names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub returns: Vec<String>,
    pub visibility: Visibility,
    pub mutability: Mutability,
    /// Invoked modifier names, in declaration order.
    pub modifiers: Vec<String>,
    pub body_present: bool,
    pub body_stats: BodyStats,
    #[serde(default)]
    pub facts: BodyFacts,
    pub line: u32,
}

impl FunctionDecl {
    pub fn is_constructor(&self) -> bool {
        self.name == "constructor"
    }

    /// A regular business function: not constructor/fallback/receive.
    pub fn is_regular(&self) -> bool {
        !matches!(self.name.as_str(), "constructor" | "fallback" | "receive")
    }
}

/// A declared state variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateVarDecl {
    pub name: String,
    pub type_text: String,
    pub visibility: Visibility,
    pub constant: bool,
    pub immutable: bool,
    pub line: u32,
}

/// A declared enum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumDecl {
    pub name: String,
    pub members: Vec<String>,
    pub line: u32,
}

/// A declared event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub line: u32,
}

/// A declared modifier, with the same body analysis as functions so guard
/// semantics can be attributed to the functions that invoke it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModifierDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub body_stats: BodyStats,
    #[serde(default)]
    pub facts: BodyFacts,
    pub line: u32,
}

/// Token bags over the whole source, used by downstream scoring.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct SourceIndex {
    /// Lowercase word tokens of every identifier (camelCase/underscore split).
    pub ident_words: BTreeSet<String>,
    /// Raw identifiers as they appear.
    pub identifiers: BTreeSet<String>,
    /// Number literal texts, underscore separators stripped.
    pub number_literals: BTreeSet<String>,
    /// Lowercase words from string literals.
    pub string_words: BTreeSet<String>,
    /// Lowercase identifier words inside `require`/`if`/`while` conditions.
    pub condition_words: BTreeSet<String>,
    /// State variables referenced from another declaration's initializer.
    pub initializer_refs: BTreeSet<String>,
    /// `SafeMath` referenced anywhere.
    pub has_safemath: bool,
    /// `block.timestamp` or `now` referenced anywhere.
    pub uses_timestamp: bool,
}

/// Structural model of one parsed contract (the last top-level `contract`
/// declaration in the file).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractSurface {
    pub contract_name: String,
    pub pragma_versions: Vec<String>,
    pub functions: Vec<FunctionDecl>,
    pub state_variables: Vec<StateVarDecl>,
    pub enums: Vec<EnumDecl>,
    pub events: Vec<EventDecl>,
    pub modifiers: Vec<ModifierDecl>,
    pub uses_inheritance: Vec<String>,
    #[serde(default)]
    pub index: SourceIndex,
}

impl ContractSurface {
    pub fn function(&self, name: &str) -> Option<&FunctionDecl> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn modifier(&self, name: &str) -> Option<&ModifierDecl> {
        self.modifiers.iter().find(|m| m.name == name)
    }

    /// The state enum binding: an enum is the state enum when a state
    /// variable's declared type names it. Ties break toward the variable
    /// whose name looks most like a state holder, then declaration order.
    pub fn state_binding(&self) -> Option<(&StateVarDecl, &EnumDecl)> {
        let mut best: Option<(usize, &StateVarDecl, &EnumDecl)> = None;
        for var in &self.state_variables {
            let type_name = var.type_text.rsplit('.').next().unwrap_or(&var.type_text);
            let Some(en) = self.enums.iter().find(|e| e.name == type_name) else {
                continue;
            };
            let lname = var.name.to_lowercase();
            let rank = if lname == "currentstate" {
                0
            } else if lname.contains("state") {
                1
            } else if lname.contains("status") {
                2
            } else {
                3
            };
            if best.is_none_or(|(r, _, _)| rank < r) {
                best = Some((rank, var, en));
            }
        }
        best.map(|(_, v, e)| (v, e))
    }

    /// Effective state reads of a function, including reads performed by its
    /// invoked modifiers.
    pub fn effective_state_reads(&self, f: &FunctionDecl) -> BTreeSet<String> {
        let mut reads = f.facts.state_reads.clone();
        for m in &f.modifiers {
            if let Some(md) = self.modifier(m) {
                reads.extend(md.facts.state_reads.iter().cloned());
            }
        }
        reads
    }

    /// Effective enum-member mentions, including those in invoked modifiers.
    pub fn effective_enum_mentions(&self, f: &FunctionDecl) -> BTreeSet<String> {
        let mut mentions = f.facts.enum_mentions.clone();
        for m in &f.modifiers {
            if let Some(md) = self.modifier(m) {
                mentions.extend(md.facts.enum_mentions.iter().cloned());
            }
        }
        mentions
    }

    /// Whether a state variable is referenced anywhere outside its own
    /// declaration (function/modifier bodies or another declaration's
    /// initializer).
    pub fn state_var_used(&self, name: &str) -> bool {
        self.functions
            .iter()
            .any(|f| f.facts.state_reads.contains(name) || f.facts.state_writes.contains(name))
            || self
                .modifiers
                .iter()
                .any(|m| m.facts.state_reads.contains(name) || m.facts.state_writes.contains(name))
            || self.index.initializer_refs.contains(name)
    }
}

/// Per-declaration recovery notes emitted while parsing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseWarning {
    pub line: u32,
    pub message: String,
}

/// Structural parse failure.
#[derive(Debug, Error)]
pub enum ParseError {
    /// No `contract` declaration found (interfaces/libraries alone do not
    /// qualify).
    #[error("no contract declaration found in source")]
    UnparseableSource,
}

/// Number of members of the enum bound to a state variable; 0 when no enum
/// is bound.
pub fn count_states(surface: &ContractSurface) -> usize {
    surface
        .state_binding()
        .map(|(_, e)| e.members.len())
        .unwrap_or(0)
}
