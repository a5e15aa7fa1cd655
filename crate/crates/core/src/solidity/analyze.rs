//! Single-pass body analysis: statement statistics and the deeper facts that
//! feed scoring, linting, and the heuristic audit.

use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{TokKind, Token};
use super::{BodyFacts, BodyStats, Param};

pub(crate) struct AnalysisCtx {
    /// State variable name -> declared type text.
    pub state_vars: BTreeMap<String, String>,
    /// Enum name -> members.
    pub enums: BTreeMap<String, Vec<String>>,
    /// Declared event names (for pre-0.4.21 `EventName(...)` emission).
    pub events: BTreeSet<String>,
    /// User-declared type names in the file (contracts, interfaces,
    /// libraries, structs, enums).
    pub user_types: BTreeSet<String>,
}

const LOWLEVEL_CALLS: [&str; 4] = ["call", "delegatecall", "staticcall", "send"];
const TRANSFER_CALLS: [&str; 5] = [
    "transfer",
    "transferFrom",
    "safeTransfer",
    "safeTransferFrom",
    "approve",
];
const BUILTIN_ROOTS: [&str; 7] = ["msg", "block", "tx", "abi", "this", "type", "super"];
const ASSIGN_OPS: [&str; 11] = [
    "=", "+=", "-=", "*=", "/=", "%=", "|=", "&=", "^=", "<<=", ">>=",
];
const ARITH_OPS: [&str; 12] = [
    "+", "-", "*", "/", "%", "**", "+=", "-=", "*=", "/=", "%=", "++",
];

impl AnalysisCtx {
    fn is_state_var(&self, name: &str) -> bool {
        self.state_vars.contains_key(name)
    }

    /// The enum a state variable's type resolves to, if any.
    fn enum_of(&self, var: &str) -> Option<&str> {
        let ty = self.state_vars.get(var)?;
        let base = ty.rsplit('.').next().unwrap_or(ty);
        self.enums.contains_key(base).then_some(base)
    }

    /// Whether a state variable's type is user-defined (contract/interface),
    /// making method calls on it external.
    fn is_contract_typed(&self, var: &str) -> bool {
        let Some(ty) = self.state_vars.get(var) else {
            return false;
        };
        let base = ty.split(['[', '.', ' ']).next().unwrap_or(ty);
        if self.enums.contains_key(base) {
            return false;
        }
        self.user_types.contains(base)
            || base.chars().next().is_some_and(|c| c.is_ascii_uppercase())
    }
}

/// Walk one body token range, producing statistics and facts.
pub(crate) fn analyze_body(
    ctx: &AnalysisCtx,
    toks: &[Token],
    start: usize,
    end: usize,
    params: &[Param],
) -> (BodyStats, BodyFacts) {
    let mut stats = BodyStats::default();
    let mut facts = BodyFacts::default();

    let mut paren_depth = 0i64;
    let mut brace_depth = 0i64;
    // Loop frames: None = header pending, Some(d) = body block open at depth d.
    let mut loop_frames: Vec<Option<i64>> = Vec::new();
    let mut stmt_start = start;
    let mut first_call_idx: Option<usize> = None;
    let mut write_after_call = false;
    let mut has_address_zero_check = false;

    let mut i = start;
    while i < end {
        let t = &toks[i];
        match t.text.as_str() {
            "(" | "[" => paren_depth += 1,
            ")" | "]" => paren_depth -= 1,
            "{" => {
                brace_depth += 1;
                if let Some(frame) = loop_frames.last_mut() {
                    if frame.is_none() {
                        *frame = Some(brace_depth);
                    }
                }
                analyze_statement(
                    ctx,
                    toks,
                    stmt_start,
                    i,
                    &mut stats,
                    &mut facts,
                    first_call_idx,
                    &mut write_after_call,
                );
                stmt_start = i + 1;
            }
            "}" => {
                analyze_statement(
                    ctx,
                    toks,
                    stmt_start,
                    i,
                    &mut stats,
                    &mut facts,
                    first_call_idx,
                    &mut write_after_call,
                );
                stmt_start = i + 1;
                if loop_frames.last() == Some(&Some(brace_depth)) {
                    loop_frames.pop();
                }
                brace_depth -= 1;
            }
            ";" if paren_depth == 0 => {
                stats.statement_count += 1;
                analyze_statement(
                    ctx,
                    toks,
                    stmt_start,
                    i,
                    &mut stats,
                    &mut facts,
                    first_call_idx,
                    &mut write_after_call,
                );
                stmt_start = i + 1;
                // A brace-less loop body ends at the statement.
                if loop_frames.last() == Some(&None) {
                    loop_frames.pop();
                }
            }
            "for" | "do" if t.kind == TokKind::Ident => {
                stats.loop_count += 1;
                loop_frames.push(None);
            }
            "while" if t.kind == TokKind::Ident => {
                // The tail of `do {...} while (c);` is not a second loop.
                let tail_of_do = i > start && toks[i - 1].is("}");
                if !tail_of_do {
                    stats.loop_count += 1;
                    loop_frames.push(None);
                }
            }
            "require" | "assert" if t.kind == TokKind::Ident => {
                if toks.get(i + 1).is_some_and(|n| n.is("(")) {
                    stats.require_count += 1;
                    let close = balanced_close(toks, i + 1, end);
                    scan_require_args(toks, i + 2, close, t.text == "require", &mut facts);
                }
            }
            "revert" if t.kind == TokKind::Ident => {
                stats.require_count += 1;
            }
            "emit" if t.kind == TokKind::Ident => {
                if let Some(n) = toks.get(i + 1) {
                    if n.kind == TokKind::Ident {
                        stats.emit_count += 1;
                        facts.emitted_events.insert(n.text.clone());
                    }
                }
            }
            "block" if t.kind == TokKind::Ident => {
                if toks.get(i + 1).is_some_and(|n| n.is("."))
                    && toks.get(i + 2).is_some_and(|n| n.is_ident("timestamp"))
                {
                    stats.reads_block_timestamp = true;
                }
            }
            "now" if t.kind == TokKind::Ident => stats.reads_block_timestamp = true,
            "address" if t.kind == TokKind::Ident => {
                if toks.get(i + 1).is_some_and(|n| n.is("("))
                    && toks
                        .get(i + 2)
                        .is_some_and(|n| n.kind == TokKind::Number && n.text == "0")
                    && toks.get(i + 3).is_some_and(|n| n.is(")"))
                {
                    has_address_zero_check = true;
                }
            }
            "." => {
                if let (Some(m), Some(after)) = (toks.get(i + 1), toks.get(i + 2)) {
                    if m.kind == TokKind::Ident
                        && (after.is("(") || after.is("{"))
                        && classify_external_call(ctx, toks, i, &m.text)
                    {
                        stats.external_call_count += 1;
                        first_call_idx.get_or_insert(i);
                        if !loop_frames.is_empty() {
                            facts.call_in_loop = true;
                        }
                    }
                }
            }
            _ => {
                if t.kind == TokKind::Ident {
                    // Qualified enum mention: `Enum.member`.
                    if let Some(members) = ctx.enums.get(&t.text) {
                        if toks.get(i + 1).is_some_and(|n| n.is(".")) {
                            if let Some(mem) = toks.get(i + 2) {
                                if members.contains(&mem.text) {
                                    facts.enum_mentions.insert(mem.text.clone());
                                }
                            }
                        }
                    }
                    // Pre-0.4.21 event emission: statement-leading call of a
                    // declared event name.
                    if ctx.events.contains(&t.text)
                        && toks.get(i + 1).is_some_and(|n| n.is("("))
                        && (i == start || matches!(toks[i - 1].text.as_str(), ";" | "{" | "}"))
                    {
                        stats.emit_count += 1;
                        facts.emitted_events.insert(t.text.clone());
                    }
                } else if t.kind == TokKind::Op
                    && (ARITH_OPS.contains(&t.text.as_str()) || t.text == "--")
                {
                    facts.has_arithmetic = true;
                }
            }
        }
        i += 1;
    }
    // Tail statement with no terminator.
    analyze_statement(
        ctx,
        toks,
        stmt_start,
        end,
        &mut stats,
        &mut facts,
        first_call_idx,
        &mut write_after_call,
    );

    facts.call_before_write = write_after_call;
    if !has_address_zero_check {
        facts.unchecked_address_params = params
            .iter()
            .filter(|p| p.type_text.starts_with("address") && !p.name.is_empty())
            .map(|p| p.name.clone())
            .collect();
    }
    scan_silent_failures(toks, start, end, &mut facts);
    (stats, facts)
}

fn balanced_close(toks: &[Token], open: usize, end: usize) -> usize {
    let mut depth = 0i64;
    let mut i = open;
    while i < end {
        match toks[i].text.as_str() {
            "(" => depth += 1,
            ")" => {
                depth -= 1;
                if depth == 0 {
                    return i;
                }
            }
            _ => {}
        }
        i += 1;
    }
    end
}

/// Inspect require arguments: message-string presence and `msg.sender` use.
fn scan_require_args(
    toks: &[Token],
    args_start: usize,
    close: usize,
    is_require: bool,
    facts: &mut BodyFacts,
) {
    let mut depth = 1i64;
    let mut last_comma_at_depth1: Option<usize> = None;
    let mut i = args_start;
    while i < close {
        let t = &toks[i];
        match t.text.as_str() {
            "(" | "[" => depth += 1,
            ")" | "]" => depth -= 1,
            "," if depth == 1 => last_comma_at_depth1 = Some(i),
            "msg"
                if toks.get(i + 1).is_some_and(|n| n.is("."))
                    && toks.get(i + 2).is_some_and(|n| n.is_ident("sender")) =>
            {
                facts.has_sender_require = true;
            }
            _ => {}
        }
        i += 1;
    }
    if is_require {
        let has_message = match last_comma_at_depth1 {
            Some(c) => toks[c + 1..close].iter().any(|t| t.kind == TokKind::Str),
            None => false,
        };
        if !has_message {
            facts.requires_without_message += 1;
        }
    }
}

/// Is the `.method(` at dot index `i` an external call?
fn classify_external_call(ctx: &AnalysisCtx, toks: &[Token], i: usize, method: &str) -> bool {
    if method == "push" || method == "pop" {
        return false;
    }
    let root = receiver_root(toks, i);
    if LOWLEVEL_CALLS.contains(&method) {
        return true;
    }
    if TRANSFER_CALLS.contains(&method) {
        return !matches!(root, Some("abi" | "type" | "super"));
    }
    match root {
        Some(r) if !BUILTIN_ROOTS.contains(&r) => ctx.is_contract_typed(r),
        _ => false,
    }
}

/// Leftmost identifier of the dotted receiver chain ending just before the
/// dot at `i`; None for complex receivers like `payable(x)` or `arr[i]`.
fn receiver_root(toks: &[Token], i: usize) -> Option<&str> {
    if i == 0 {
        return None;
    }
    let mut k = i - 1;
    if toks[k].kind != TokKind::Ident {
        return None;
    }
    loop {
        if k >= 2 && toks[k - 1].is(".") && toks[k - 2].kind == TokKind::Ident {
            k -= 2;
        } else {
            break;
        }
    }
    Some(toks[k].text.as_str())
}

/// Statement-level analysis: assignment targets, deletes, increments,
/// `push`/`pop`, state reads, and unused low-level calls.
#[allow(clippy::too_many_arguments)]
fn analyze_statement(
    ctx: &AnalysisCtx,
    toks: &[Token],
    s: usize,
    e: usize,
    stats: &mut BodyStats,
    facts: &mut BodyFacts,
    first_call_idx: Option<usize>,
    write_after_call: &mut bool,
) {
    if s >= e {
        return;
    }
    let mut written_roots: Vec<(usize, String)> = Vec::new();

    // Assignment operators at relative depth 0.
    let mut depth = 0i64;
    for i in s..e {
        let t = &toks[i];
        match t.text.as_str() {
            "(" | "[" => depth += 1,
            ")" | "]" => depth -= 1,
            _ if depth == 0 && t.kind == TokKind::Op && ASSIGN_OPS.contains(&t.text.as_str()) => {
                match lvalue_root(toks, s, i) {
                    LvalueRoot::Ident(name) => {
                        if ctx.is_state_var(&name) {
                            written_roots.push((i, name.clone()));
                            if t.text != "=" {
                                facts.state_reads.insert(name.clone());
                            }
                            record_enum_write(ctx, toks, i + 1, e, &name, facts);
                        }
                    }
                    LvalueRoot::Tuple(open, close) => {
                        for tt in &toks[open..close.min(e)] {
                            if tt.kind == TokKind::Ident && ctx.is_state_var(&tt.text) {
                                written_roots.push((i, tt.text.clone()));
                            }
                        }
                    }
                    LvalueRoot::None => {}
                }
            }
            _ => {}
        }
    }

    // `delete target;`
    if toks[s].is_ident("delete") {
        if let Some(t) = toks.get(s + 1) {
            if t.kind == TokKind::Ident && ctx.is_state_var(&t.text) {
                written_roots.push((s + 1, t.text.clone()));
            }
        }
    }

    // Increment/decrement and array push/pop.
    let mut depth = 0i64;
    for i in s..e {
        let t = &toks[i];
        match t.text.as_str() {
            "(" | "[" => depth += 1,
            ")" | "]" => depth -= 1,
            "++" | "--" if depth == 0 => {
                let target = if i > s && toks[i - 1].kind == TokKind::Ident {
                    Some(toks[i - 1].text.clone())
                } else {
                    toks.get(i + 1)
                        .filter(|t| t.kind == TokKind::Ident)
                        .map(|t| t.text.clone())
                };
                if let Some(name) = target {
                    if ctx.is_state_var(&name) {
                        written_roots.push((i, name.clone()));
                        facts.state_reads.insert(name);
                    }
                }
            }
            "." if toks
                .get(i + 1)
                .is_some_and(|m| m.is_ident("push") || m.is_ident("pop"))
                && toks.get(i + 2).is_some_and(|n| n.is("(")) =>
            {
                if let Some(root) = receiver_chain_root(toks, s, i) {
                    if ctx.is_state_var(&root) {
                        written_roots.push((i, root));
                    }
                }
            }
            _ => {}
        }
    }

    // Reads: every state-variable occurrence that is not a write root.
    let write_positions: BTreeSet<usize> = written_roots
        .iter()
        .filter_map(|(op_idx, name)| {
            // Find the root ident position for exclusion: nearest matching
            // ident left of the op with the same name.
            (s..*op_idx)
                .rev()
                .find(|&k| toks[k].kind == TokKind::Ident && toks[k].text == *name)
        })
        .collect();
    for (i, t) in toks.iter().enumerate().take(e).skip(s) {
        if t.kind == TokKind::Ident && ctx.is_state_var(&t.text) && !write_positions.contains(&i) {
            facts.state_reads.insert(t.text.clone());
        }
    }

    for (pos, name) in &written_roots {
        stats.state_write_count += 1;
        facts.state_writes.insert(name.clone());
        if let Some(call_idx) = first_call_idx {
            if *pos > call_idx {
                *write_after_call = true;
            }
        }
    }

    scan_unused_lowlevel(toks, s, e, facts);
}

enum LvalueRoot {
    Ident(String),
    /// `(a, b) = ...` tuple target: token range inside the parens.
    Tuple(usize, usize),
    None,
}

/// Record `stateVar = Enum.Member` (or the `Enum(<index>)` cast form) on the
/// right-hand side of an assignment to an enum-typed state variable.
fn record_enum_write(
    ctx: &AnalysisCtx,
    toks: &[Token],
    rhs_start: usize,
    e: usize,
    var: &str,
    facts: &mut BodyFacts,
) {
    let Some(enum_name) = ctx.enum_of(var) else {
        return;
    };
    let Some(members) = ctx.enums.get(enum_name) else {
        return;
    };
    let mut i = rhs_start;
    while i < e {
        let t = &toks[i];
        if t.kind == TokKind::Ident && t.text == enum_name {
            if toks.get(i + 1).is_some_and(|n| n.is(".")) {
                if let Some(mem) = toks.get(i + 2) {
                    if members.contains(&mem.text) {
                        facts.enum_writes.push((var.to_string(), mem.text.clone()));
                        i += 3;
                        continue;
                    }
                }
            } else if toks.get(i + 1).is_some_and(|n| n.is("(")) {
                if let Some(idx_tok) = toks.get(i + 2) {
                    if idx_tok.kind == TokKind::Number {
                        if let Ok(idx) = idx_tok.text.parse::<usize>() {
                            if let Some(mem) = members.get(idx) {
                                facts.enum_writes.push((var.to_string(), mem.clone()));
                            }
                        }
                    }
                }
            }
        }
        i += 1;
    }
}

/// Walk left from the assignment operator to the root of the lvalue chain.
fn lvalue_root(toks: &[Token], s: usize, op_idx: usize) -> LvalueRoot {
    if op_idx == 0 || op_idx <= s {
        return LvalueRoot::None;
    }
    let mut k = op_idx - 1;
    loop {
        let t = &toks[k];
        if t.is("]") {
            // Skip back over the balanced index expression.
            let mut depth = 0i64;
            let mut j = k;
            loop {
                if toks[j].is("]") {
                    depth += 1;
                } else if toks[j].is("[") {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                if j == s {
                    return LvalueRoot::None;
                }
                j -= 1;
            }
            if j == s {
                return LvalueRoot::None;
            }
            k = j - 1;
        } else if t.is(")") {
            // Tuple assignment target.
            let mut depth = 0i64;
            let mut j = k;
            loop {
                if toks[j].is(")") {
                    depth += 1;
                } else if toks[j].is("(") {
                    depth -= 1;
                    if depth == 0 {
                        return LvalueRoot::Tuple(j + 1, k);
                    }
                }
                if j == s {
                    return LvalueRoot::None;
                }
                j -= 1;
            }
        } else if t.kind == TokKind::Ident {
            if k >= s + 2 && toks[k - 1].is(".") {
                // Member access: step past the dot; the next pass handles
                // the ident or `]` on the left.
                k -= 2;
            } else {
                return LvalueRoot::Ident(t.text.clone());
            }
        } else {
            return LvalueRoot::None;
        }
        if k < s {
            return LvalueRoot::None;
        }
    }
}

/// Root identifier of a dotted/indexed chain ending at the `.` at `dot_idx`.
fn receiver_chain_root(toks: &[Token], s: usize, dot_idx: usize) -> Option<String> {
    if dot_idx <= s {
        return None;
    }
    let mut k = dot_idx - 1;
    loop {
        let t = &toks[k];
        if t.is("]") {
            let mut depth = 0i64;
            let mut j = k;
            loop {
                if toks[j].is("]") {
                    depth += 1;
                } else if toks[j].is("[") {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                if j == s {
                    return None;
                }
                j -= 1;
            }
            if j == s {
                return None;
            }
            k = j - 1;
        } else if t.kind == TokKind::Ident {
            if k >= 2
                && toks[k - 1].is(".")
                && (toks[k - 2].kind == TokKind::Ident || toks[k - 2].is("]"))
            {
                k -= 2;
            } else {
                return Some(t.text.clone());
            }
        } else {
            return None;
        }
        if k < s {
            return None;
        }
    }
}

/// Flag `.call`/`.send`/`.delegatecall`/`.staticcall` whose result is
/// neither assigned nor consumed by a check.
fn scan_unused_lowlevel(toks: &[Token], s: usize, e: usize, facts: &mut BodyFacts) {
    let mut call_pos = None;
    for i in s..e {
        if toks[i].is(".")
            && toks.get(i + 1).is_some_and(|m| {
                m.kind == TokKind::Ident && LOWLEVEL_CALLS.contains(&m.text.as_str())
            })
            && toks.get(i + 2).is_some_and(|n| n.is("(") || n.is("{"))
        {
            call_pos = Some(i);
            break;
        }
    }
    let Some(pos) = call_pos else { return };
    if matches!(
        toks[s].text.as_str(),
        "require" | "assert" | "if" | "return" | "while" | "revert"
    ) {
        return;
    }
    let mut depth = 0i64;
    for t in &toks[s..pos] {
        match t.text.as_str() {
            "(" | "[" => depth += 1,
            ")" | "]" => depth -= 1,
            _ if depth == 0 && t.kind == TokKind::Op && ASSIGN_OPS.contains(&t.text.as_str()) => {
                return;
            }
            _ => {}
        }
    }
    facts.unused_lowlevel_call = true;
}

/// `if (<cond>) return;` with no else and nothing else in the branch.
fn scan_silent_failures(toks: &[Token], start: usize, end: usize, facts: &mut BodyFacts) {
    let mut i = start;
    while i < end {
        if toks[i].is_ident("if") && toks.get(i + 1).is_some_and(|t| t.is("(")) {
            let close = balanced_close(toks, i + 1, end);
            let branch = close + 1;
            let hit = match toks.get(branch).map(|t| t.text.as_str()) {
                Some("return") => {
                    toks.get(branch + 1).is_some_and(|t| t.is(";"))
                        && !toks.get(branch + 2).is_some_and(|t| t.is_ident("else"))
                }
                Some("{") => {
                    toks.get(branch + 1).is_some_and(|t| t.is_ident("return"))
                        && toks.get(branch + 2).is_some_and(|t| t.is(";"))
                        && toks.get(branch + 3).is_some_and(|t| t.is("}"))
                        && !toks.get(branch + 4).is_some_and(|t| t.is_ident("else"))
                }
                _ => false,
            };
            if hit {
                facts.silent_failure_lines.push(toks[i].line);
            }
            i = close + 1;
        } else {
            i += 1;
        }
    }
}
