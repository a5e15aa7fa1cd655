//! The five-dimensional quality rubric: deterministic metric scoring,
//! composite recombination, and letter grades.
//!
//! Scoring is a pure function of (schema, FSM, parsed surface, lint
//! findings) and a [`MetricConfig`]. The composite is always recomputed from
//! the five metric scores here, never trusted from a model. Identical inputs
//! give bit-identical reports regardless of thread count.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::FsmSpec;
use crate::schema::ContractSchema;
use crate::solidity::{
    split_ident_tokens, ContractSurface, FunctionDecl, LintFinding, LintPattern,
};

/// All rubric constants. The metric weights are the published ones; the
/// sub-splits inside M2–M5 are this engine's and deliberately live here so
/// every constant is visible and overridable from the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    /// Composite weights for M1..M5. Must sum to 1.
    pub weight_functional: f64,
    pub weight_variables: f64,
    pub weight_state_machine: f64,
    pub weight_business_logic: f64,
    pub weight_code_quality: f64,

    /// Points for an exact name match in the M1/M2 name component.
    pub exact_points: f64,
    /// Points for a semantic name match.
    pub semantic_points: f64,
    /// M1: cap of the name-matching component; the implementation-quality
    /// component gets the remainder to 100.
    pub m1_name_cap: f64,
    /// M1: cap of the implementation-quality component (four equally
    /// weighted sub-checks).
    pub q_impl_cap: f64,

    /// M2 split: name matching vs. active usage.
    pub m2_name_cap: f64,
    pub m2_usage_cap: f64,

    /// M3 split: states defined / transitions realized / guards enforced.
    pub m3_states_cap: f64,
    pub m3_transitions_cap: f64,
    pub m3_guards_cap: f64,

    /// M4: each of obligations/financial/temporal/conditional.
    pub m4_category_cap: f64,

    /// M5 deductions.
    pub m5_placeholder_penalty: f64,
    pub m5_finding_penalty: f64,
    pub m5_bare_require_penalty: f64,
    pub m5_no_events_penalty: f64,

    /// Grade band lower bounds (half-open below, A closed at 100).
    pub grade_a_min: f64,
    pub grade_b_min: f64,
    pub grade_c_min: f64,
    pub grade_d_min: f64,

    /// Minimum length for a token to count as significant in text matching.
    pub significant_token_len: usize,

    /// Error-mode threshold: a sub-score below this fraction of its cap
    /// marks the corresponding error mode.
    pub error_mode_threshold: f64,

    /// Token-level synonym table extending semantic matching; maps a token
    /// to its canonical form. Empty by default.
    pub synonyms: BTreeMap<String, String>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            weight_functional: 0.25,
            weight_variables: 0.15,
            weight_state_machine: 0.15,
            weight_business_logic: 0.35,
            weight_code_quality: 0.10,
            exact_points: 10.0,
            semantic_points: 7.0,
            m1_name_cap: 50.0,
            q_impl_cap: 50.0,
            m2_name_cap: 60.0,
            m2_usage_cap: 40.0,
            m3_states_cap: 40.0,
            m3_transitions_cap: 30.0,
            m3_guards_cap: 30.0,
            m4_category_cap: 25.0,
            m5_placeholder_penalty: 15.0,
            m5_finding_penalty: 10.0,
            m5_bare_require_penalty: 10.0,
            m5_no_events_penalty: 10.0,
            grade_a_min: 90.0,
            grade_b_min: 80.0,
            grade_c_min: 70.0,
            grade_d_min: 60.0,
            significant_token_len: 3,
            error_mode_threshold: 0.5,
            synonyms: BTreeMap::new(),
        }
    }
}

impl MetricConfig {
    /// Weights in metric order M1..M5.
    pub fn weights(&self) -> [f64; 5] {
        [
            self.weight_functional,
            self.weight_variables,
            self.weight_state_machine,
            self.weight_business_logic,
            self.weight_code_quality,
        ]
    }

    pub fn validate(&self) -> Result<(), MetricError> {
        let sum: f64 = self.weights().iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(MetricError::BadWeights { sum });
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("metric score {which} = {value} outside [0,100]")]
    ScoreOutOfRange { which: &'static str, value: f64 },
    #[error("metric weights must sum to 1, got {sum}")]
    BadWeights { sum: f64 },
}

/// The five rubric scores, each in [0,100].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct MetricScores {
    pub m1_functional: f64,
    pub m2_variable: f64,
    pub m3_state_machine: f64,
    pub m4_business_logic: f64,
    pub m5_code_quality: f64,
}

impl MetricScores {
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.m1_functional,
            self.m2_variable,
            self.m3_state_machine,
            self.m4_business_logic,
            self.m5_code_quality,
        ]
    }
}

/// Letter grade bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Grade {
    A,
    B,
    C,
    D,
    F,
}

impl std::fmt::Display for Grade {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let c = match self {
            Grade::A => 'A',
            Grade::B => 'B',
            Grade::C => 'C',
            Grade::D => 'D',
            Grade::F => 'F',
        };
        write!(f, "{c}")
    }
}

/// How a name match was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchKind {
    Exact,
    Semantic,
    None,
}

/// Result of matching one expected identifier against the actual set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameMatch {
    pub expected: String,
    pub matched: Option<String>,
    pub kind: MatchKind,
}

/// One scored criterion with its supporting evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEvidence {
    /// Namespaced criterion key, e.g. `m3.transitions`.
    pub criterion: String,
    pub points: f64,
    pub cap: f64,
    pub matched: Vec<String>,
    pub missed: Vec<String>,
}

impl MetricEvidence {
    fn new(criterion: &str, points: f64, cap: f64) -> Self {
        Self {
            criterion: criterion.to_string(),
            points,
            cap,
            matched: Vec::new(),
            missed: Vec::new(),
        }
    }

    /// Fraction of the cap earned; full credit when the cap is zero.
    pub fn ratio(&self) -> f64 {
        if self.cap <= 0.0 {
            1.0
        } else {
            self.points / self.cap
        }
    }
}

/// Which path produced the metric scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreSource {
    Deterministic,
    LlmJudge,
}

/// Full scoring outcome for one contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub scores: MetricScores,
    /// Always the weighted recombination of `scores`; never model-reported.
    pub composite: f64,
    pub grade: Grade,
    pub evidence: Vec<MetricEvidence>,
    pub source_of_scores: ScoreSource,
}

impl QualityReport {
    pub fn evidence_for(&self, criterion: &str) -> Option<&MetricEvidence> {
        self.evidence.iter().find(|e| e.criterion == criterion)
    }

    /// Build a report from bare metric scores (used for recombination
    /// checks and paired fixtures; evidence empty).
    pub fn from_scores(
        scores: MetricScores,
        source: ScoreSource,
        cfg: &MetricConfig,
    ) -> Result<Self, MetricError> {
        let (composite, grade) = composite(&scores, cfg)?;
        Ok(Self {
            scores,
            composite,
            grade,
            evidence: Vec::new(),
            source_of_scores: source,
        })
    }
}

// ---------------------------------------------------------------------------
// Name matching
// ---------------------------------------------------------------------------

fn canonical_tokens(ident: &str, cfg: &MetricConfig) -> Vec<String> {
    split_ident_tokens(ident)
        .into_iter()
        .map(|t| cfg.synonyms.get(&t).cloned().unwrap_or(t))
        .collect()
}

fn normalized(ident: &str, cfg: &MetricConfig) -> String {
    canonical_tokens(ident, cfg).concat()
}

/// The deterministic semantic-equivalence rule: identifiers are equal after
/// lowercasing and separator stripping, or one's token set is a superset of
/// the other's with at least one shared token of significant length.
pub fn semantic_match(a: &str, b: &str, cfg: &MetricConfig) -> bool {
    if normalized(a, cfg) == normalized(b, cfg) {
        return true;
    }
    let ta: BTreeSet<String> = canonical_tokens(a, cfg).into_iter().collect();
    let tb: BTreeSet<String> = canonical_tokens(b, cfg).into_iter().collect();
    if ta.is_empty() || tb.is_empty() {
        return false;
    }
    let superset = ta.is_superset(&tb) || tb.is_superset(&ta);
    superset
        && ta
            .intersection(&tb)
            .any(|t| t.len() >= cfg.significant_token_len)
}

/// Match expected identifiers against actual ones: an exact pass first, then
/// a semantic pass, greedy in expected order, each actual consumed at most
/// once.
pub fn match_names(expected: &[String], actual: &[String], cfg: &MetricConfig) -> Vec<NameMatch> {
    let mut consumed = vec![false; actual.len()];
    let mut out: Vec<NameMatch> = expected
        .iter()
        .map(|e| NameMatch {
            expected: e.clone(),
            matched: None,
            kind: MatchKind::None,
        })
        .collect();

    for (e_idx, e) in expected.iter().enumerate() {
        let trimmed = e.trim();
        let hit = actual
            .iter()
            .enumerate()
            .find(|(i, a)| !consumed[*i] && a.trim() == trimmed)
            .map(|(i, _)| i);
        if let Some(a_idx) = hit {
            consumed[a_idx] = true;
            out[e_idx].matched = Some(actual[a_idx].clone());
            out[e_idx].kind = MatchKind::Exact;
        }
    }
    for (e_idx, e) in expected.iter().enumerate() {
        if out[e_idx].kind != MatchKind::None {
            continue;
        }
        let hit = actual
            .iter()
            .enumerate()
            .find(|(i, a)| !consumed[*i] && semantic_match(e, a, cfg))
            .map(|(i, _)| i);
        if let Some(a_idx) = hit {
            consumed[a_idx] = true;
            out[e_idx].matched = Some(actual[a_idx].clone());
            out[e_idx].kind = MatchKind::Semantic;
        }
    }
    out
}

fn count_kinds(matches: &[NameMatch]) -> (usize, usize) {
    let exact = matches
        .iter()
        .filter(|m| m.kind == MatchKind::Exact)
        .count();
    let semantic = matches
        .iter()
        .filter(|m| m.kind == MatchKind::Semantic)
        .count();
    (exact, semantic)
}

/// The weighted name-component value in [0, cap]: full credit when nothing
/// is expected.
pub fn name_component(
    expected_n: usize,
    exact: usize,
    semantic: usize,
    cap: f64,
    cfg: &MetricConfig,
) -> f64 {
    if expected_n == 0 {
        return cap;
    }
    let raw = (cfg.exact_points * exact as f64 + cfg.semantic_points * semantic as f64)
        / (cfg.exact_points * expected_n as f64);
    (raw * cap).clamp(0.0, cap)
}

fn describe_matches(matches: &[NameMatch], evidence: &mut MetricEvidence) {
    for m in matches {
        match (&m.matched, m.kind) {
            (Some(a), MatchKind::Exact) => evidence.matched.push(format!("{} = {a}", m.expected)),
            (Some(a), MatchKind::Semantic) => {
                evidence.matched.push(format!("{} ~ {a}", m.expected))
            }
            _ => evidence.missed.push(m.expected.clone()),
        }
    }
}

// ---------------------------------------------------------------------------
// M1: functional completeness
// ---------------------------------------------------------------------------

/// Per-sub-check averages of the implementation-quality score, in [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct QImplBreakdown {
    pub effect: f64,
    pub access: f64,
    pub events: f64,
    pub validation: f64,
}

/// Implementation-quality score over the matched functions: for each
/// function, four equally weighted sub-checks (effectful body, access
/// control when obligations name a responsible party, events on state
/// changes, input validation); averaged and scaled to [0, q_impl_cap].
/// An empty matched set scores 0.
pub fn score_q_impl(
    matched: &[&FunctionDecl],
    access_required: bool,
    cfg: &MetricConfig,
) -> (f64, QImplBreakdown) {
    if matched.is_empty() {
        return (0.0, QImplBreakdown::default());
    }
    let n = matched.len() as f64;
    let mut b = QImplBreakdown::default();
    for f in matched {
        let effect = f.body_present
            && (f.body_stats.state_write_count > 0
                || f.body_stats.emit_count > 0
                || f.body_stats.external_call_count > 0);
        let access = !access_required || !f.modifiers.is_empty() || f.facts.has_sender_require;
        let events = f.body_stats.state_write_count == 0 || f.body_stats.emit_count >= 1;
        let validation = f.params.is_empty() || f.body_stats.require_count >= 1;
        b.effect += effect as u8 as f64;
        b.access += access as u8 as f64;
        b.events += events as u8 as f64;
        b.validation += validation as u8 as f64;
    }
    b.effect /= n;
    b.access /= n;
    b.events /= n;
    b.validation /= n;
    let total = (b.effect + b.access + b.events + b.validation) / 4.0 * cfg.q_impl_cap;
    (total, b)
}

fn access_control_required(schema: &ContractSchema) -> bool {
    schema
        .obligations
        .iter()
        .any(|o| !o.party.trim().is_empty())
}

/// M1: name component (exact/semantic weighted) plus implementation quality.
pub fn score_m1_functional(
    schema: &ContractSchema,
    surface: &ContractSurface,
    cfg: &MetricConfig,
) -> (f64, Vec<MetricEvidence>) {
    let expected = &schema.conditions.function_names;
    let actual: Vec<String> = surface
        .functions
        .iter()
        .filter(|f| f.is_regular())
        .map(|f| f.name.clone())
        .collect();
    let matches = match_names(expected, &actual, cfg);
    let (exact, semantic) = count_kinds(&matches);
    let name_points = name_component(expected.len(), exact, semantic, cfg.m1_name_cap, cfg);

    let mut names_ev = MetricEvidence::new("m1.names", name_points, cfg.m1_name_cap);
    describe_matches(&matches, &mut names_ev);

    // Q_impl runs over the matched functions; with nothing expected it runs
    // over whatever regular functions exist.
    let matched_fns: Vec<&FunctionDecl> = if expected.is_empty() {
        surface
            .functions
            .iter()
            .filter(|f| f.is_regular())
            .collect()
    } else {
        matches
            .iter()
            .filter_map(|m| m.matched.as_deref())
            .filter_map(|name| surface.functions.iter().find(|f| f.name == name))
            .collect()
    };
    let access_required = access_control_required(schema);
    let (q_points, breakdown) = score_q_impl(&matched_fns, access_required, cfg);

    let sub_cap = cfg.q_impl_cap / 4.0;
    let mut evidence = vec![names_ev];
    for (key, ratio, label) in [
        ("m1.impl.effect", breakdown.effect, "effectful body"),
        ("m1.impl.access", breakdown.access, "access control"),
        ("m1.impl.events", breakdown.events, "events on state change"),
        (
            "m1.impl.validation",
            breakdown.validation,
            "input validation",
        ),
    ] {
        let mut ev = MetricEvidence::new(key, ratio * sub_cap, sub_cap);
        ev.matched.push(format!(
            "{label}: {:.0}% of {} matched function(s)",
            ratio * 100.0,
            matched_fns.len()
        ));
        evidence.push(ev);
    }

    let total = (name_points + q_points).clamp(0.0, 100.0);
    (total, evidence)
}

// ---------------------------------------------------------------------------
// M2: variable fidelity
// ---------------------------------------------------------------------------

pub fn score_m2_variables(
    schema: &ContractSchema,
    surface: &ContractSurface,
    cfg: &MetricConfig,
) -> (f64, Vec<MetricEvidence>) {
    let expected = &schema.conditions.variable_names;
    let actual: Vec<String> = surface
        .state_variables
        .iter()
        .map(|v| v.name.clone())
        .collect();
    let matches = match_names(expected, &actual, cfg);
    let (exact, semantic) = count_kinds(&matches);
    let name_points = name_component(expected.len(), exact, semantic, cfg.m2_name_cap, cfg);
    let mut names_ev = MetricEvidence::new("m2.names", name_points, cfg.m2_name_cap);
    describe_matches(&matches, &mut names_ev);

    // Usage: matched variables actively read or written; with nothing
    // expected, every declared variable is held to the usage bar instead.
    let usage_set: Vec<String> = if expected.is_empty() {
        actual.clone()
    } else {
        matches.iter().filter_map(|m| m.matched.clone()).collect()
    };
    let mut usage_ev = MetricEvidence::new("m2.usage", 0.0, cfg.m2_usage_cap);
    let usage_ratio = if usage_set.is_empty() {
        // Vacuous only when nothing was expected; expected-but-unmatched
        // variables leave nothing to use and earn nothing.
        if expected.is_empty() {
            1.0
        } else {
            usage_ev.missed.push("no expected variable matched".into());
            0.0
        }
    } else {
        let mut used = 0usize;
        for v in &usage_set {
            if surface.state_var_used(v) {
                used += 1;
                usage_ev.matched.push(v.clone());
            } else {
                usage_ev.missed.push(v.clone());
            }
        }
        used as f64 / usage_set.len() as f64
    };
    let usage_points = usage_ratio * cfg.m2_usage_cap;
    usage_ev.points = usage_points;

    let total = (name_points + usage_points).clamp(0.0, 100.0);
    (total, vec![names_ev, usage_ev])
}

// ---------------------------------------------------------------------------
// M3: state machine correctness
// ---------------------------------------------------------------------------

pub fn score_m3_state_machine(
    schema: &ContractSchema,
    fsm: Option<&FsmSpec>,
    surface: &ContractSurface,
    cfg: &MetricConfig,
) -> (f64, Vec<MetricEvidence>) {
    let expected_states: Vec<String> = match fsm {
        Some(f) if !f.states.is_empty() => f.states.clone(),
        _ => schema.conditions.state_names.clone(),
    };
    let expected_transitions: Vec<(String, String)> = match fsm {
        Some(f) if !f.transitions.is_empty() => f
            .transitions
            .iter()
            .map(|t| (t.from.clone(), t.to.clone()))
            .collect(),
        _ => schema
            .conditions
            .transitions
            .iter()
            .map(|t| (t.from_state.clone(), t.to_state.clone()))
            .collect(),
    };

    let binding = surface.state_binding();
    let total_cap = cfg.m3_states_cap + cfg.m3_transitions_cap + cfg.m3_guards_cap;

    if expected_states.is_empty() && binding.is_none() {
        // No state machine required, none present.
        let mut ev = MetricEvidence::new("m3.states", cfg.m3_states_cap, cfg.m3_states_cap);
        ev.matched.push("no state machine required".into());
        return (
            total_cap.min(100.0),
            vec![
                ev,
                MetricEvidence::new(
                    "m3.transitions",
                    cfg.m3_transitions_cap,
                    cfg.m3_transitions_cap,
                ),
                MetricEvidence::new("m3.guards", cfg.m3_guards_cap, cfg.m3_guards_cap),
            ],
        );
    }

    let members: Vec<String> = binding.map(|(_, e)| e.members.clone()).unwrap_or_default();

    // States component.
    let state_matches = match_names(&expected_states, &members, cfg);
    let matched_states = state_matches
        .iter()
        .filter(|m| m.kind != MatchKind::None)
        .count();
    let states_points = if expected_states.is_empty() {
        cfg.m3_states_cap
    } else {
        matched_states as f64 / expected_states.len() as f64 * cfg.m3_states_cap
    };
    let mut states_ev = MetricEvidence::new("m3.states", states_points, cfg.m3_states_cap);
    describe_matches(&state_matches, &mut states_ev);

    // Transition component: an expected (from, to) is realized when some
    // function assigns the state variable to a member matching `to` while
    // mentioning (directly or via modifiers) a member matching `from`.
    let mut transitions_ev = MetricEvidence::new("m3.transitions", 0.0, cfg.m3_transitions_cap);
    let transitions_points = if expected_transitions.is_empty() {
        transitions_ev.points = cfg.m3_transitions_cap;
        cfg.m3_transitions_cap
    } else {
        let bound_var = binding.map(|(v, _)| v.name.clone());
        let mut detected = 0usize;
        for (from, to) in &expected_transitions {
            let realized = bound_var.as_deref().is_some_and(|var| {
                surface.functions.iter().any(|f| {
                    let writes_to = f
                        .facts
                        .enum_writes
                        .iter()
                        .any(|(v, m)| v == var && semantic_match(m, to, cfg));
                    writes_to
                        && surface
                            .effective_enum_mentions(f)
                            .iter()
                            .any(|m| semantic_match(m, from, cfg))
                })
            });
            let label = format!("{from} -> {to}");
            if realized {
                detected += 1;
                transitions_ev.matched.push(label);
            } else {
                transitions_ev.missed.push(label);
            }
        }
        let pts = detected as f64 / expected_transitions.len() as f64 * cfg.m3_transitions_cap;
        transitions_ev.points = pts;
        pts
    };

    // Guard component: of the functions that write the state variable, the
    // fraction that also read or require it (directly or via modifiers).
    // When states were expected but no enum is bound there is no guard
    // machinery at all, which is a miss, not a vacuous pass.
    let mut guards_ev = MetricEvidence::new("m3.guards", 0.0, cfg.m3_guards_cap);
    let guards_points = match binding {
        None => {
            guards_ev.missed.push("no state enum bound".into());
            0.0
        }
        Some((var, _)) => {
            let writers: Vec<&FunctionDecl> = surface
                .functions
                .iter()
                .filter(|f| {
                    f.facts.state_writes.contains(&var.name)
                        || f.facts.enum_writes.iter().any(|(v, _)| v == &var.name)
                })
                .collect();
            if writers.is_empty() {
                guards_ev.matched.push("no state-writing functions".into());
                cfg.m3_guards_cap
            } else {
                let mut guarded = 0usize;
                for f in &writers {
                    if surface.effective_state_reads(f).contains(&var.name) {
                        guarded += 1;
                        guards_ev.matched.push(f.name.clone());
                    } else {
                        guards_ev.missed.push(f.name.clone());
                    }
                }
                guarded as f64 / writers.len() as f64 * cfg.m3_guards_cap
            }
        }
    };
    guards_ev.points = guards_points;

    let total = (states_points + transitions_points + guards_points).clamp(0.0, 100.0);
    (total, vec![states_ev, transitions_ev, guards_ev])
}

// ---------------------------------------------------------------------------
// M4: business logic fidelity
// ---------------------------------------------------------------------------

const STOPWORDS: [&str; 34] = [
    "the", "and", "for", "with", "must", "shall", "will", "from", "that", "this", "each", "any",
    "all", "are", "was", "has", "have", "its", "their", "them", "they", "who", "when", "then",
    "than", "within", "upon", "into", "can", "may", "should", "would", "not", "where",
];

fn significant_tokens(text: &str, cfg: &MetricConfig) -> BTreeSet<String> {
    text.split(|c: char| !c.is_ascii_alphanumeric())
        .flat_map(split_ident_tokens)
        .filter(|t| t.len() >= cfg.significant_token_len && !STOPWORDS.contains(&t.as_str()))
        .map(|t| cfg.synonyms.get(&t).cloned().unwrap_or(t))
        .collect()
}

fn fraction_category(key: &str, items: Vec<(String, bool)>, cap: f64) -> (f64, MetricEvidence) {
    let mut ev = MetricEvidence::new(key, 0.0, cap);
    if items.is_empty() {
        ev.points = cap;
        ev.matched.push("nothing specified".into());
        return (cap, ev);
    }
    let total = items.len();
    let mut hit = 0usize;
    for (label, ok) in items {
        if ok {
            hit += 1;
            ev.matched.push(label);
        } else {
            ev.missed.push(label);
        }
    }
    let pts = hit as f64 / total as f64 * cap;
    ev.points = pts;
    (pts, ev)
}

pub fn score_m4_business_logic(
    schema: &ContractSchema,
    surface: &ContractSurface,
    cfg: &MetricConfig,
) -> (f64, Vec<MetricEvidence>) {
    let cap = cfg.m4_category_cap;

    // Tokens implemented by callable behavior: function names plus events
    // that are actually emitted somewhere.
    let mut behavior_tokens: BTreeSet<String> = BTreeSet::new();
    for f in surface.functions.iter().filter(|f| f.is_regular()) {
        behavior_tokens.extend(canonical_tokens(&f.name, cfg));
    }
    let emitted: BTreeSet<&String> = surface
        .functions
        .iter()
        .flat_map(|f| f.facts.emitted_events.iter())
        .chain(
            surface
                .modifiers
                .iter()
                .flat_map(|m| m.facts.emitted_events.iter()),
        )
        .collect();
    for ev in emitted {
        behavior_tokens.extend(canonical_tokens(ev, cfg));
    }

    let obligations: Vec<(String, bool)> = schema
        .obligations
        .iter()
        .map(|o| {
            let toks = significant_tokens(&o.responsibility, cfg);
            let ok = toks.iter().any(|t| behavior_tokens.contains(t));
            let label = if o.party.is_empty() {
                o.responsibility.clone()
            } else {
                format!("{}: {}", o.party, o.responsibility)
            };
            (label, ok)
        })
        .collect();
    let (obligation_pts, obligation_ev) = fraction_category("m4.obligations", obligations, cap);

    // Financial terms: the amount appears as a numeric literal, or a
    // purpose/amount token appears among identifiers or strings.
    let financial: Vec<(String, bool)> = schema
        .financial_terms
        .iter()
        .map(|t| {
            let amount_hit = amount_in_literals(&t.amount, &surface.index.number_literals);
            let mut toks = significant_tokens(&t.purpose, cfg);
            toks.extend(significant_tokens(&t.currency, cfg));
            let token_hit = toks.iter().any(|tok| {
                surface.index.ident_words.contains(tok) || surface.index.string_words.contains(tok)
            });
            let label = format!("{} {} ({})", t.amount, t.currency, t.purpose);
            (label, amount_hit || token_hit)
        })
        .collect();
    let (financial_pts, financial_ev) = fraction_category("m4.financial", financial, cap);

    // Date terms: a timestamp comparison exists, or a time-named variable
    // shares a token with the term's label.
    let time_var_tokens: BTreeSet<String> = surface
        .state_variables
        .iter()
        .flat_map(|v| canonical_tokens(&v.name, cfg))
        .collect();
    let temporal: Vec<(String, bool)> = schema
        .dates
        .iter()
        .map(|d| {
            let label_toks = significant_tokens(&d.label, cfg);
            let named = label_toks.iter().any(|t| time_var_tokens.contains(t));
            let ok = named || surface.index.uses_timestamp;
            (format!("{}: {}", d.label, d.value), ok)
        })
        .collect();
    let (temporal_pts, temporal_ev) = fraction_category("m4.temporal", temporal, cap);

    // Logic conditions: a require/if condition shares a significant token.
    let conditional: Vec<(String, bool)> = schema
        .conditions
        .logic_conditions
        .iter()
        .map(|c| {
            let toks = significant_tokens(c, cfg);
            let ok = toks
                .iter()
                .any(|t| surface.index.condition_words.contains(t));
            (c.clone(), ok)
        })
        .collect();
    let (conditional_pts, conditional_ev) = fraction_category("m4.conditional", conditional, cap);

    let total = (obligation_pts + financial_pts + temporal_pts + conditional_pts).clamp(0.0, 100.0);
    (
        total,
        vec![obligation_ev, financial_ev, temporal_ev, conditional_ev],
    )
}

/// Compare a decimal amount string with the source's number literals by
/// numeric value (so "1000" matches `1_000`), falling back to raw text.
fn amount_in_literals(amount: &str, literals: &BTreeSet<String>) -> bool {
    let amt = amount.trim().replace([',', '_'], "");
    if amt.is_empty() {
        return false;
    }
    if literals.contains(&amt) {
        return true;
    }
    let Ok(v) = amt.parse::<f64>() else {
        return false;
    };
    literals.iter().any(|l| {
        let parsed = if let Some(hex) = l.strip_prefix("0x").or_else(|| l.strip_prefix("0X")) {
            u128::from_str_radix(hex, 16).map(|x| x as f64).ok()
        } else {
            l.parse::<f64>().ok()
        };
        parsed.is_some_and(|p| p == v)
    })
}

// ---------------------------------------------------------------------------
// M5: code quality
// ---------------------------------------------------------------------------

pub fn score_m5_code_quality(
    surface: &ContractSurface,
    lint: &[LintFinding],
    cfg: &MetricConfig,
) -> (f64, Vec<MetricEvidence>) {
    let mut ev = MetricEvidence::new("m5.deductions", 0.0, 100.0);
    let mut score = 100.0;
    for finding in lint {
        let penalty = match finding.pattern {
            LintPattern::PlaceholderMarker => cfg.m5_placeholder_penalty,
            _ => cfg.m5_finding_penalty,
        };
        score -= penalty;
        ev.missed.push(format!(
            "-{penalty:.0} {}: {}",
            finding.pattern, finding.detail
        ));
    }
    let bare_requires: u32 = surface
        .functions
        .iter()
        .map(|f| f.facts.requires_without_message)
        .chain(
            surface
                .modifiers
                .iter()
                .map(|m| m.facts.requires_without_message),
        )
        .sum();
    if bare_requires > 0 {
        score -= cfg.m5_bare_require_penalty;
        ev.missed.push(format!(
            "-{:.0} {bare_requires} require(s) without an error message",
            cfg.m5_bare_require_penalty
        ));
    }
    if surface.events.is_empty() {
        score -= cfg.m5_no_events_penalty;
        ev.missed.push(format!(
            "-{:.0} contract declares no events",
            cfg.m5_no_events_penalty
        ));
    }
    if ev.missed.is_empty() {
        ev.matched.push("no deductions".into());
    }
    let total = score.clamp(0.0, 100.0);
    ev.points = total;
    (total, vec![ev])
}

// ---------------------------------------------------------------------------
// Composite and full evaluation
// ---------------------------------------------------------------------------

/// Weighted composite and letter grade. Errors if any score is outside
/// [0,100] or the configured weights do not sum to 1.
pub fn composite(scores: &MetricScores, cfg: &MetricConfig) -> Result<(f64, Grade), MetricError> {
    cfg.validate()?;
    let labels = ["m1", "m2", "m3", "m4", "m5"];
    for (value, which) in scores.as_array().into_iter().zip(labels) {
        if !(0.0..=100.0).contains(&value) || value.is_nan() {
            return Err(MetricError::ScoreOutOfRange { which, value });
        }
    }
    let total: f64 = scores
        .as_array()
        .into_iter()
        .zip(cfg.weights())
        .map(|(s, w)| s * w)
        .sum();
    Ok((total, grade_for(total, cfg)))
}

pub fn grade_for(composite: f64, cfg: &MetricConfig) -> Grade {
    if composite >= cfg.grade_a_min {
        Grade::A
    } else if composite >= cfg.grade_b_min {
        Grade::B
    } else if composite >= cfg.grade_c_min {
        Grade::C
    } else if composite >= cfg.grade_d_min {
        Grade::D
    } else {
        Grade::F
    }
}

/// Deterministic full evaluation of one contract against its schema.
pub fn evaluate(
    schema: &ContractSchema,
    fsm: Option<&FsmSpec>,
    surface: &ContractSurface,
    lint: &[LintFinding],
    cfg: &MetricConfig,
) -> Result<QualityReport, MetricError> {
    let (m1, ev1) = score_m1_functional(schema, surface, cfg);
    let (m2, ev2) = score_m2_variables(schema, surface, cfg);
    let (m3, ev3) = score_m3_state_machine(schema, fsm, surface, cfg);
    let (m4, ev4) = score_m4_business_logic(schema, surface, cfg);
    let (m5, ev5) = score_m5_code_quality(surface, lint, cfg);
    let scores = MetricScores {
        m1_functional: m1,
        m2_variable: m2,
        m3_state_machine: m3,
        m4_business_logic: m4,
        m5_code_quality: m5,
    };
    let (total, grade) = composite(&scores, cfg)?;
    let mut evidence = ev1;
    evidence.extend(ev2);
    evidence.extend(ev3);
    evidence.extend(ev4);
    evidence.extend(ev5);
    Ok(QualityReport {
        scores,
        composite: total,
        grade,
        evidence,
        source_of_scores: ScoreSource::Deterministic,
    })
}

/// Scores all zero: used when a pipeline run produced no scorable code.
pub fn zero_report(cfg: &MetricConfig) -> QualityReport {
    QualityReport::from_scores(MetricScores::default(), ScoreSource::Deterministic, cfg)
        .expect("zero scores are in range")
}
