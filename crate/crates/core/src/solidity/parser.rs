//! Structural parser: declaration recovery over the token stream.
//!
//! Tolerant by construction: unrecognized constructs are skipped with
//! warnings, never a hard failure on compilable code. The only error is the
//! absence of any `contract` declaration.

use std::collections::{BTreeMap, BTreeSet};

use super::analyze::{analyze_body, AnalysisCtx};
use super::lexer::{lex, split_ident_tokens, TokKind, Token};
use super::{
    BodyFacts, BodyStats, ContractSurface, EnumDecl, EventDecl, FunctionDecl, ModifierDecl,
    Mutability, Param, ParseError, ParseWarning, SourceIndex, StateVarDecl, Visibility,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TopKind {
    Contract,
    Interface,
    Library,
}

struct TopDecl {
    kind: TopKind,
    name: String,
    bases: Vec<String>,
    /// Token range of the body, exclusive of the outer braces.
    body: (usize, usize),
}

/// Parse Solidity source into a structural surface plus recovery warnings.
///
/// The last top-level `contract` declaration is the primary (generator
/// output conventionally places helpers first, the main contract last);
/// interfaces and libraries are not scored.
pub fn parse_surface(source: &str) -> Result<(ContractSurface, Vec<ParseWarning>), ParseError> {
    let lexed = lex(source);
    let toks = &lexed.tokens;
    let mut warnings = Vec::new();

    let mut pragmas = Vec::new();
    let mut decls: Vec<TopDecl> = Vec::new();

    let mut i = 0;
    while i < toks.len() {
        let t = &toks[i];
        if t.is_ident("pragma") {
            let start = i + 1;
            let mut j = start;
            while j < toks.len() && !toks[j].is(";") {
                j += 1;
            }
            if start < j && toks[start].is_ident("solidity") {
                pragmas.push(join_version(&toks[start + 1..j]));
            }
            i = j.saturating_add(1);
        } else if t.is_ident("import") || t.is_ident("using") {
            i = skip_past_semicolon(toks, i);
        } else if t.is_ident("contract")
            || t.is_ident("interface")
            || t.is_ident("library")
            || (t.is_ident("abstract") && toks.get(i + 1).is_some_and(|n| n.is_ident("contract")))
        {
            let (decl, next) = parse_top_decl(toks, i, &mut warnings);
            if let Some(d) = decl {
                decls.push(d);
            }
            i = next;
        } else {
            i += 1;
        }
    }

    let primary_idx = decls
        .iter()
        .rposition(|d| d.kind == TopKind::Contract)
        .ok_or(ParseError::UnparseableSource)?;

    // Names of every user-declared type in the file, for receiver typing.
    let mut user_types: BTreeSet<String> = decls.iter().map(|d| d.name.clone()).collect();

    let primary = &decls[primary_idx];
    let body = ContractBodyParser {
        toks,
        pos: primary.body.0,
        end: primary.body.1,
        contract_name: primary.name.clone(),
        warnings: &mut warnings,
    }
    .run();

    user_types.extend(body.structs.iter().cloned());
    user_types.extend(body.enums.iter().map(|e| e.name.clone()));

    let ctx = AnalysisCtx {
        state_vars: body
            .state_vars
            .iter()
            .map(|v| (v.name.clone(), v.type_text.clone()))
            .collect(),
        enums: body
            .enums
            .iter()
            .map(|e| (e.name.clone(), e.members.clone()))
            .collect(),
        events: body.events.iter().map(|e| e.name.clone()).collect(),
        user_types,
    };

    let functions: Vec<FunctionDecl> = body
        .functions
        .into_iter()
        .map(|p| {
            let (stats, facts) = match p.body {
                Some((s, e)) => analyze_body(&ctx, toks, s, e, &p.params),
                None => (BodyStats::default(), BodyFacts::default()),
            };
            FunctionDecl {
                name: p.name,
                params: p.params,
                returns: p.returns,
                visibility: p.visibility,
                mutability: p.mutability,
                modifiers: p.modifiers,
                body_present: p.body.is_some(),
                body_stats: stats,
                facts,
                line: p.line,
            }
        })
        .collect();

    let modifiers: Vec<ModifierDecl> = body
        .modifiers
        .into_iter()
        .map(|p| {
            let (stats, facts) = match p.body {
                Some((s, e)) => analyze_body(&ctx, toks, s, e, &p.params),
                None => (BodyStats::default(), BodyFacts::default()),
            };
            ModifierDecl {
                name: p.name,
                params: p.params,
                body_stats: stats,
                facts,
                line: p.line,
            }
        })
        .collect();

    warn_duplicates(&functions, &body.events, &body.enums, &mut warnings);

    let state_var_names: BTreeSet<&str> = body.state_vars.iter().map(|v| v.name.as_str()).collect();
    let mut index = build_index(toks);
    for (var, init_idents) in &body.initializers {
        for ident in init_idents {
            if ident != var && state_var_names.contains(ident.as_str()) {
                index.initializer_refs.insert(ident.clone());
            }
        }
    }

    Ok((
        ContractSurface {
            contract_name: primary.name.clone(),
            pragma_versions: pragmas,
            functions,
            state_variables: body.state_vars,
            enums: body.enums,
            events: body.events,
            modifiers,
            uses_inheritance: primary.bases.clone(),
            index,
        },
        warnings,
    ))
}

fn skip_past_semicolon(toks: &[Token], mut i: usize) -> usize {
    while i < toks.len() && !toks[i].is(";") {
        i += 1;
    }
    i.saturating_add(1)
}

/// Find the index of the `}` matching the `{` at `open`, or the end of input.
fn matching_brace(toks: &[Token], open: usize) -> usize {
    let mut depth = 0i64;
    let mut i = open;
    while i < toks.len() {
        match toks[i].text.as_str() {
            "{" => depth += 1,
            "}" => {
                depth -= 1;
                if depth == 0 {
                    return i;
                }
            }
            _ => {}
        }
        i += 1;
    }
    toks.len()
}

fn parse_top_decl(
    toks: &[Token],
    start: usize,
    warnings: &mut Vec<ParseWarning>,
) -> (Option<TopDecl>, usize) {
    let mut i = start;
    if toks[i].is_ident("abstract") {
        i += 1;
    }
    let kind = match toks[i].text.as_str() {
        "contract" => TopKind::Contract,
        "interface" => TopKind::Interface,
        _ => TopKind::Library,
    };
    let line = toks[i].line;
    i += 1;
    let name = match toks.get(i) {
        Some(t) if t.kind == TokKind::Ident => {
            i += 1;
            t.text.clone()
        }
        _ => {
            warnings.push(ParseWarning {
                line,
                message: "contract declaration without a name".into(),
            });
            String::from("Unnamed")
        }
    };
    let mut bases = Vec::new();
    if toks.get(i).is_some_and(|t| t.is_ident("is")) {
        i += 1;
        while i < toks.len() && !toks[i].is("{") {
            if toks[i].kind == TokKind::Ident {
                let mut base = toks[i].text.clone();
                i += 1;
                while toks.get(i).is_some_and(|t| t.is("."))
                    && toks.get(i + 1).is_some_and(|t| t.kind == TokKind::Ident)
                {
                    base.push('.');
                    base.push_str(&toks[i + 1].text);
                    i += 2;
                }
                // Base constructor arguments.
                if toks.get(i).is_some_and(|t| t.is("(")) {
                    i = skip_balanced(toks, i, "(", ")");
                }
                bases.push(base);
            } else {
                i += 1;
            }
        }
    } else {
        while i < toks.len() && !toks[i].is("{") && !toks[i].is(";") {
            i += 1;
        }
    }
    match toks.get(i) {
        Some(t) if t.is("{") => {
            let close = matching_brace(toks, i);
            (
                Some(TopDecl {
                    kind,
                    name,
                    bases,
                    body: (i + 1, close),
                }),
                close.saturating_add(1),
            )
        }
        _ => {
            warnings.push(ParseWarning {
                line,
                message: format!("declaration of {name} has no body"),
            });
            (
                Some(TopDecl {
                    kind,
                    name,
                    bases,
                    body: (i.min(toks.len()), i.min(toks.len())),
                }),
                i.saturating_add(1),
            )
        }
    }
}

/// Skip from an opening delimiter to just past its balanced close.
fn skip_balanced(toks: &[Token], open_idx: usize, open: &str, close: &str) -> usize {
    let mut depth = 0i64;
    let mut i = open_idx;
    while i < toks.len() {
        if toks[i].is(open) {
            depth += 1;
        } else if toks[i].is(close) {
            depth -= 1;
            if depth == 0 {
                return i + 1;
            }
        }
        i += 1;
    }
    toks.len()
}

struct PendingFn {
    name: String,
    params: Vec<Param>,
    returns: Vec<String>,
    visibility: Visibility,
    mutability: Mutability,
    modifiers: Vec<String>,
    body: Option<(usize, usize)>,
    line: u32,
}

struct PendingModifier {
    name: String,
    params: Vec<Param>,
    body: Option<(usize, usize)>,
    line: u32,
}

#[derive(Default)]
struct ContractBody {
    functions: Vec<PendingFn>,
    modifiers: Vec<PendingModifier>,
    state_vars: Vec<StateVarDecl>,
    enums: Vec<EnumDecl>,
    events: Vec<EventDecl>,
    structs: Vec<String>,
    /// Per state variable, the identifiers used in its initializer.
    initializers: Vec<(String, Vec<String>)>,
}

struct ContractBodyParser<'t, 'w> {
    toks: &'t [Token],
    pos: usize,
    end: usize,
    contract_name: String,
    warnings: &'w mut Vec<ParseWarning>,
}

impl<'t, 'w> ContractBodyParser<'t, 'w> {
    fn run(mut self) -> ContractBody {
        let mut body = ContractBody::default();
        while self.pos < self.end {
            let t = &self.toks[self.pos];
            match t.text.as_str() {
                ";" => self.pos += 1,
                "enum" if t.kind == TokKind::Ident => self.parse_enum(&mut body),
                "event" if t.kind == TokKind::Ident => self.parse_event(&mut body),
                "modifier" if t.kind == TokKind::Ident => self.parse_modifier(&mut body),
                "function" if t.kind == TokKind::Ident => self.parse_function(&mut body, None),
                "constructor" if t.kind == TokKind::Ident => {
                    self.parse_function(&mut body, Some("constructor"))
                }
                "receive" | "fallback"
                    if t.kind == TokKind::Ident && self.peek(1).is_some_and(|n| n.is("(")) =>
                {
                    let name = t.text.clone();
                    self.parse_function(&mut body, Some(&name));
                }
                "using" if t.kind == TokKind::Ident => {
                    self.pos = skip_past_semicolon(self.toks, self.pos).min(self.end);
                }
                // Custom error and user-defined value type declarations.
                "error" | "type"
                    if t.kind == TokKind::Ident
                        && self.peek(1).is_some_and(|n| n.kind == TokKind::Ident) =>
                {
                    self.pos = skip_past_semicolon(self.toks, self.pos).min(self.end);
                }
                "struct" if t.kind == TokKind::Ident => self.parse_struct(&mut body),
                "{" => {
                    self.warn(t.line, "unexpected block at contract scope");
                    self.pos = skip_balanced(self.toks, self.pos, "{", "}").min(self.end);
                }
                _ if t.kind == TokKind::Ident => {
                    if !self.parse_state_var(&mut body) {
                        let line = self.toks[self.pos].line;
                        self.warn(line, "unrecognized declaration skipped");
                        self.resync();
                    }
                }
                _ => {
                    self.warn(t.line, &format!("unexpected token `{}` skipped", t.text));
                    self.pos += 1;
                }
            }
        }
        body
    }

    fn peek(&self, ahead: usize) -> Option<&Token> {
        let idx = self.pos + ahead;
        if idx < self.end {
            Some(&self.toks[idx])
        } else {
            None
        }
    }

    fn warn(&mut self, line: u32, message: &str) {
        self.warnings.push(ParseWarning {
            line,
            message: message.to_string(),
        });
    }

    /// Skip to just past the next `;` at this nesting level, stepping over
    /// any balanced braces encountered on the way.
    fn resync(&mut self) {
        while self.pos < self.end {
            match self.toks[self.pos].text.as_str() {
                ";" => {
                    self.pos += 1;
                    return;
                }
                "{" => {
                    self.pos = skip_balanced(self.toks, self.pos, "{", "}").min(self.end);
                    return;
                }
                _ => self.pos += 1,
            }
        }
    }

    fn parse_enum(&mut self, body: &mut ContractBody) {
        let line = self.toks[self.pos].line;
        self.pos += 1;
        let name = match self.peek(0) {
            Some(t) if t.kind == TokKind::Ident => {
                let n = t.text.clone();
                self.pos += 1;
                n
            }
            _ => {
                self.warn(line, "enum without a name skipped");
                self.resync();
                return;
            }
        };
        if !self.peek(0).is_some_and(|t| t.is("{")) {
            self.warn(line, "enum without a body skipped");
            self.resync();
            return;
        }
        let close = matching_brace(self.toks, self.pos).min(self.end);
        let mut members = Vec::new();
        for t in &self.toks[self.pos + 1..close] {
            if t.kind == TokKind::Ident {
                members.push(t.text.clone());
            }
        }
        self.pos = (close + 1).min(self.end);
        if members.is_empty() {
            self.warn(line, &format!("enum {name} has no members"));
        }
        let unique: BTreeSet<&String> = members.iter().collect();
        if unique.len() != members.len() {
            self.warn(line, &format!("enum {name} has duplicate members"));
        }
        body.enums.push(EnumDecl {
            name,
            members,
            line,
        });
    }

    fn parse_event(&mut self, body: &mut ContractBody) {
        let line = self.toks[self.pos].line;
        self.pos += 1;
        let name = match self.peek(0) {
            Some(t) if t.kind == TokKind::Ident => {
                let n = t.text.clone();
                self.pos += 1;
                n
            }
            _ => {
                self.warn(line, "event without a name skipped");
                self.resync();
                return;
            }
        };
        let params = self.parse_param_list(true).unwrap_or_default();
        // optional `anonymous`
        while self.pos < self.end && !self.toks[self.pos].is(";") {
            self.pos += 1;
        }
        self.pos = (self.pos + 1).min(self.end);
        let indexed = params.iter().filter(|p| p.indexed).count();
        if indexed > 3 {
            self.warn(
                line,
                &format!("event {name} has {indexed} indexed parameters (language cap is 3)"),
            );
        }
        body.events.push(EventDecl { name, params, line });
    }

    fn parse_struct(&mut self, body: &mut ContractBody) {
        let line = self.toks[self.pos].line;
        self.pos += 1;
        if let Some(t) = self.peek(0) {
            if t.kind == TokKind::Ident {
                body.structs.push(t.text.clone());
                self.pos += 1;
            }
        }
        if self.peek(0).is_some_and(|t| t.is("{")) {
            self.pos = skip_balanced(self.toks, self.pos, "{", "}").min(self.end);
        } else {
            self.warn(line, "struct without a body skipped");
            self.resync();
        }
    }

    fn parse_modifier(&mut self, body: &mut ContractBody) {
        let line = self.toks[self.pos].line;
        self.pos += 1;
        let name = match self.peek(0) {
            Some(t) if t.kind == TokKind::Ident => {
                let n = t.text.clone();
                self.pos += 1;
                n
            }
            _ => {
                self.warn(line, "modifier without a name skipped");
                self.resync();
                return;
            }
        };
        let params = if self.peek(0).is_some_and(|t| t.is("(")) {
            self.parse_param_list(false).unwrap_or_default()
        } else {
            Vec::new()
        };
        // virtual / override decorations
        while let Some(t) = self.peek(0) {
            if t.is_ident("virtual") {
                self.pos += 1;
            } else if t.is_ident("override") {
                self.pos += 1;
                if self.peek(0).is_some_and(|t| t.is("(")) {
                    self.pos = skip_balanced(self.toks, self.pos, "(", ")").min(self.end);
                }
            } else {
                break;
            }
        }
        let b = match self.peek(0) {
            Some(t) if t.is("{") => {
                let close = matching_brace(self.toks, self.pos).min(self.end);
                let range = (self.pos + 1, close);
                self.pos = (close + 1).min(self.end);
                Some(range)
            }
            Some(t) if t.is(";") => {
                self.pos += 1;
                None
            }
            _ => {
                self.resync();
                None
            }
        };
        body.modifiers.push(PendingModifier {
            name,
            params,
            body: b,
            line,
        });
    }

    fn parse_function(&mut self, body: &mut ContractBody, forced_name: Option<&str>) {
        let line = self.toks[self.pos].line;
        self.pos += 1;
        let mut name = match forced_name {
            Some(n) => n.to_string(),
            None => match self.peek(0) {
                Some(t) if t.kind == TokKind::Ident => {
                    let n = t.text.clone();
                    self.pos += 1;
                    n
                }
                // Pre-0.6 unnamed fallback: `function() public {...}`
                Some(t) if t.is("(") => String::from("fallback"),
                _ => {
                    self.warn(line, "function without a name skipped");
                    self.resync();
                    return;
                }
            },
        };
        // Pre-0.4.22 constructors are functions named after the contract.
        if name == self.contract_name {
            name = String::from("constructor");
        }
        let params = self.parse_param_list(false).unwrap_or_default();

        let mut visibility = Visibility::Default;
        let mut mutability = Mutability::None;
        let mut modifiers = Vec::new();
        let mut returns = Vec::new();
        let mut fn_body = None;

        while self.pos < self.end {
            let t = &self.toks[self.pos];
            match t.text.as_str() {
                "public" => {
                    visibility = Visibility::Public;
                    self.pos += 1;
                }
                "private" => {
                    visibility = Visibility::Private;
                    self.pos += 1;
                }
                "external" => {
                    visibility = Visibility::External;
                    self.pos += 1;
                }
                "internal" => {
                    visibility = Visibility::Internal;
                    self.pos += 1;
                }
                "view" => {
                    mutability = Mutability::View;
                    self.pos += 1;
                }
                // 0.4.x spelling of view.
                "constant" => {
                    mutability = Mutability::View;
                    self.pos += 1;
                }
                "pure" => {
                    mutability = Mutability::Pure;
                    self.pos += 1;
                }
                "payable" => {
                    mutability = Mutability::Payable;
                    self.pos += 1;
                }
                "virtual" => self.pos += 1,
                "override" => {
                    self.pos += 1;
                    if self.peek(0).is_some_and(|t| t.is("(")) {
                        self.pos = skip_balanced(self.toks, self.pos, "(", ")").min(self.end);
                    }
                }
                "returns" => {
                    self.pos += 1;
                    if self.peek(0).is_some_and(|t| t.is("(")) {
                        returns = self
                            .parse_param_list(false)
                            .unwrap_or_default()
                            .into_iter()
                            .map(|p| p.type_text)
                            .collect();
                    }
                }
                "{" => {
                    let close = matching_brace(self.toks, self.pos).min(self.end);
                    fn_body = Some((self.pos + 1, close));
                    self.pos = (close + 1).min(self.end);
                    break;
                }
                ";" => {
                    self.pos += 1;
                    break;
                }
                _ if t.kind == TokKind::Ident => {
                    // Invoked modifier (or base constructor call).
                    modifiers.push(t.text.clone());
                    self.pos += 1;
                    if self.peek(0).is_some_and(|t| t.is("(")) {
                        self.pos = skip_balanced(self.toks, self.pos, "(", ")").min(self.end);
                    }
                }
                _ => {
                    self.warn(
                        t.line,
                        &format!("unexpected `{}` in function header", t.text),
                    );
                    self.pos += 1;
                }
            }
        }
        body.functions.push(PendingFn {
            name,
            params,
            returns,
            visibility,
            mutability,
            modifiers,
            body: fn_body,
            line,
        });
    }

    fn parse_state_var(&mut self, body: &mut ContractBody) -> bool {
        let start = self.pos;
        let line = self.toks[self.pos].line;
        let Some(type_text) = self.parse_type() else {
            self.pos = start;
            return false;
        };
        let mut visibility = Visibility::Default;
        let mut constant = false;
        let mut immutable = false;
        loop {
            match self.peek(0).map(|t| t.text.as_str()) {
                Some("public") => {
                    visibility = Visibility::Public;
                    self.pos += 1;
                }
                Some("private") => {
                    visibility = Visibility::Private;
                    self.pos += 1;
                }
                Some("internal") => {
                    visibility = Visibility::Internal;
                    self.pos += 1;
                }
                Some("constant") => {
                    constant = true;
                    self.pos += 1;
                }
                Some("immutable") => {
                    immutable = true;
                    self.pos += 1;
                }
                Some("override") => {
                    self.pos += 1;
                    if self.peek(0).is_some_and(|t| t.is("(")) {
                        self.pos = skip_balanced(self.toks, self.pos, "(", ")").min(self.end);
                    }
                }
                _ => break,
            }
        }
        let name = match self.peek(0) {
            Some(t) if t.kind == TokKind::Ident => {
                let n = t.text.clone();
                self.pos += 1;
                n
            }
            _ => {
                self.pos = start;
                return false;
            }
        };
        let mut init_idents = Vec::new();
        match self.peek(0).map(|t| t.text.as_str()) {
            Some(";") => self.pos += 1,
            Some("=") => {
                self.pos += 1;
                let mut depth = 0i64;
                while self.pos < self.end {
                    let t = &self.toks[self.pos];
                    match t.text.as_str() {
                        "(" | "[" | "{" => depth += 1,
                        ")" | "]" | "}" => depth -= 1,
                        ";" if depth <= 0 => {
                            self.pos += 1;
                            break;
                        }
                        _ => {
                            if t.kind == TokKind::Ident {
                                init_idents.push(t.text.clone());
                            }
                        }
                    }
                    self.pos += 1;
                }
            }
            _ => {
                self.pos = start;
                return false;
            }
        }
        body.initializers.push((name.clone(), init_idents));
        body.state_vars.push(StateVarDecl {
            name,
            type_text,
            visibility,
            constant,
            immutable,
            line,
        });
        true
    }

    /// Greedy type parse; returns the rendered type text.
    fn parse_type(&mut self) -> Option<String> {
        let t = self.peek(0)?.clone();
        let mut text = match t.text.as_str() {
            "mapping" if t.kind == TokKind::Ident => {
                self.pos += 1;
                if !self.peek(0).is_some_and(|t| t.is("(")) {
                    return None;
                }
                let close = self.find_balanced_end("(", ")")?;
                let inner = join_type(&self.toks[self.pos + 1..close]);
                self.pos = (close + 1).min(self.end);
                format!("mapping({inner})")
            }
            "function" if t.kind == TokKind::Ident => {
                // Function-typed variable; consume the signature greedily.
                self.pos += 1;
                if !self.peek(0).is_some_and(|t| t.is("(")) {
                    return None;
                }
                let close = self.find_balanced_end("(", ")")?;
                let inner = join_type(&self.toks[self.pos + 1..close]);
                self.pos = (close + 1).min(self.end);
                let mut sig = format!("function({inner})");
                while let Some(nt) = self.peek(0) {
                    match nt.text.as_str() {
                        "internal" | "external" | "view" | "pure" | "payable" => {
                            sig.push(' ');
                            sig.push_str(&nt.text);
                            self.pos += 1;
                        }
                        "returns" => {
                            self.pos += 1;
                            if self.peek(0).is_some_and(|t| t.is("(")) {
                                let rclose = self.find_balanced_end("(", ")")?;
                                let rinner = join_type(&self.toks[self.pos + 1..rclose]);
                                self.pos = (rclose + 1).min(self.end);
                                sig.push_str(&format!(" returns({rinner})"));
                            }
                        }
                        _ => break,
                    }
                }
                sig
            }
            _ if t.kind == TokKind::Ident && !is_reserved_non_type(&t.text) => {
                self.pos += 1;
                let mut text = t.text.clone();
                while self.peek(0).is_some_and(|t| t.is("."))
                    && self.peek(1).is_some_and(|t| t.kind == TokKind::Ident)
                {
                    text.push('.');
                    text.push_str(&self.toks[self.pos + 1].text);
                    self.pos += 2;
                }
                if text == "address" && self.peek(0).is_some_and(|t| t.is_ident("payable")) {
                    text.push_str(" payable");
                    self.pos += 1;
                }
                text
            }
            _ => return None,
        };
        // Array suffixes.
        while self.peek(0).is_some_and(|t| t.is("[")) {
            let close = self.find_balanced_end("[", "]")?;
            let inner = join_type(&self.toks[self.pos + 1..close]);
            self.pos = (close + 1).min(self.end);
            text.push('[');
            text.push_str(&inner);
            text.push(']');
        }
        Some(text)
    }

    /// Index of the close matching the open delimiter at the cursor.
    fn find_balanced_end(&self, open: &str, close: &str) -> Option<usize> {
        let mut depth = 0i64;
        let mut i = self.pos;
        while i < self.end {
            if self.toks[i].is(open) {
                depth += 1;
            } else if self.toks[i].is(close) {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            i += 1;
        }
        None
    }

    fn parse_param_list(&mut self, allow_indexed: bool) -> Option<Vec<Param>> {
        if !self.peek(0).is_some_and(|t| t.is("(")) {
            return None;
        }
        let close = self.find_balanced_end("(", ")")?;
        let list_end = close;
        self.pos += 1;
        let mut params = Vec::new();
        while self.pos < list_end {
            if self.toks[self.pos].is(",") {
                self.pos += 1;
                continue;
            }
            let before = self.pos;
            let Some(type_text) = self.parse_type_within(list_end) else {
                // Garbage inside the list: skip to the next comma.
                self.pos = before;
                while self.pos < list_end && !self.toks[self.pos].is(",") {
                    self.pos += 1;
                }
                continue;
            };
            let mut indexed = false;
            let mut name = String::new();
            while self.pos < list_end {
                let t = &self.toks[self.pos];
                match t.text.as_str() {
                    "indexed" if allow_indexed => {
                        indexed = true;
                        self.pos += 1;
                    }
                    "memory" | "storage" | "calldata" => self.pos += 1,
                    "," => break,
                    _ if t.kind == TokKind::Ident => {
                        name = t.text.clone();
                        self.pos += 1;
                    }
                    _ => self.pos += 1,
                }
            }
            params.push(Param {
                name,
                type_text,
                indexed,
            });
        }
        self.pos = (close + 1).min(self.end);
        Some(params)
    }

    /// Parse a type with the window narrowed so greedy consumption stays
    /// inside the parameter list.
    fn parse_type_within(&mut self, limit: usize) -> Option<String> {
        let saved_end = self.end;
        self.end = limit;
        let r = self.parse_type();
        self.end = saved_end;
        r
    }
}

fn is_reserved_non_type(word: &str) -> bool {
    matches!(
        word,
        "function"
            | "modifier"
            | "event"
            | "enum"
            | "struct"
            | "constructor"
            | "using"
            | "return"
            | "returns"
            | "if"
            | "else"
            | "for"
            | "while"
            | "do"
            | "emit"
            | "require"
            | "revert"
            | "assert"
            | "public"
            | "private"
            | "internal"
            | "external"
            | "pure"
            | "view"
            | "payable"
            | "constant"
            | "immutable"
            | "virtual"
            | "override"
            | "is"
            | "new"
            | "delete"
            | "contract"
            | "interface"
            | "library"
            | "pragma"
            | "import"
    )
}

/// Render tokens of a type expression back to text.
fn join_type(toks: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in toks.iter().enumerate() {
        let text = t.text.as_str();
        let no_space_before = matches!(text, "." | ")" | "]" | "(" | "[" | ",")
            || out.is_empty()
            || out.ends_with('.')
            || out.ends_with('(')
            || out.ends_with('[');
        if !no_space_before && i > 0 {
            out.push(' ');
        }
        out.push_str(text);
    }
    out
}

/// Render pragma constraint tokens: `^ 0.8 . 0` -> `^0.8.0`,
/// `>= 0.4 . 22 < 0.9 . 0` -> `>=0.4.22 <0.9.0`.
fn join_version(toks: &[Token]) -> String {
    let mut out = String::new();
    for t in toks {
        let text = t.text.as_str();
        match text {
            "." => out.push('.'),
            "^" | "~" | "=" | "<" | ">" | "<=" | ">=" => {
                if !out.is_empty() {
                    out.push(' ');
                }
                out.push_str(text);
            }
            "||" => {
                out.push_str(" || ");
            }
            _ => {
                if !(out.is_empty()
                    || out.ends_with('.')
                    || out.ends_with('^')
                    || out.ends_with('~')
                    || out.ends_with('=')
                    || out.ends_with('<')
                    || out.ends_with('>'))
                {
                    out.push(' ');
                }
                out.push_str(text);
            }
        }
    }
    out
}

fn warn_duplicates(
    functions: &[FunctionDecl],
    events: &[EventDecl],
    enums: &[EnumDecl],
    warnings: &mut Vec<ParseWarning>,
) {
    let mut seen: BTreeMap<(&str, &str), u32> = BTreeMap::new();
    let named: Vec<(&str, &str, u32)> = functions
        .iter()
        .map(|f| ("function", f.name.as_str(), f.line))
        .chain(events.iter().map(|e| ("event", e.name.as_str(), e.line)))
        .chain(enums.iter().map(|e| ("enum", e.name.as_str(), e.line)))
        .collect();
    for (ns, name, line) in named {
        if let Some(_first) = seen.insert((ns, name), line) {
            // Overloads are legal for functions; record them as warnings
            // anyway so duplicates are visible, both declarations retained.
            warnings.push(ParseWarning {
                line,
                message: format!("duplicate {ns} name `{name}`"),
            });
        }
    }
}

fn build_index(toks: &[Token]) -> SourceIndex {
    let mut index = SourceIndex::default();
    let mut i = 0;
    while i < toks.len() {
        let t = &toks[i];
        match t.kind {
            TokKind::Ident => {
                index.identifiers.insert(t.text.clone());
                for w in split_ident_tokens(&t.text) {
                    index.ident_words.insert(w);
                }
                if t.text == "SafeMath" {
                    index.has_safemath = true;
                }
                if t.text == "now" {
                    index.uses_timestamp = true;
                }
                if t.text == "block"
                    && toks.get(i + 1).is_some_and(|n| n.is("."))
                    && toks.get(i + 2).is_some_and(|n| n.is_ident("timestamp"))
                {
                    index.uses_timestamp = true;
                }
                if matches!(t.text.as_str(), "require" | "if" | "while")
                    && toks.get(i + 1).is_some_and(|n| n.is("("))
                {
                    let close_rel = skip_balanced(toks, i + 1, "(", ")");
                    for ct in &toks[i + 2..close_rel.saturating_sub(1).min(toks.len())] {
                        if ct.kind == TokKind::Ident {
                            for w in split_ident_tokens(&ct.text) {
                                index.condition_words.insert(w);
                            }
                        }
                    }
                }
            }
            TokKind::Number => {
                index.number_literals.insert(t.text.replace('_', ""));
            }
            TokKind::Str => {
                for w in t
                    .text
                    .split(|c: char| !c.is_ascii_alphanumeric())
                    .filter(|w| !w.is_empty())
                {
                    index.string_words.insert(w.to_lowercase());
                }
            }
            _ => {}
        }
        i += 1;
    }
    index
}

#[cfg(test)]
mod tests {
    use super::super::{count_states, Mutability, ParseError, Visibility};
    use super::*;

    const STAKING_EXCERPT: &str = r#"
pragma solidity ^0.8.0;

contract StakingContract {
    enum State { FarmingNotStarted, FarmingOngoing, FarmingEnded }

    State public currentState;
    IERC20 public stakeToken;
    mapping(address => UserInfo) public userInfos;

    event Staked(address indexed user, uint256 amount);
    event Withdrawn(address indexed user, uint256 amount);

    function stake(uint256 _amount) external afterStart beforeEnd {
        require(_amount > 0);
        stakeToken.transferFrom(msg.sender, address(this), _amount);
        userInfos[msg.sender].amountStaked += _amount;
        emit Staked(msg.sender, _amount);
    }

    function withdraw(uint256 _amount) external nonReentrant {
        require(_amount > 0);
        userInfos[msg.sender].amountStaked -= _amount;
        stakeToken.transfer(msg.sender, _amount);
        emit Withdrawn(msg.sender, _amount);
    }
}
"#;

    #[test]
    fn staking_excerpt_inventory() {
        let (s, _) = parse_surface(STAKING_EXCERPT).unwrap();
        assert_eq!(s.contract_name, "StakingContract");
        assert_eq!(s.pragma_versions, vec!["^0.8.0"]);
        assert_eq!(s.enums.len(), 1);
        assert_eq!(s.enums[0].name, "State");
        assert_eq!(
            s.enums[0].members,
            vec!["FarmingNotStarted", "FarmingOngoing", "FarmingEnded"]
        );
        let fn_names: Vec<&str> = s.functions.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(fn_names, vec!["stake", "withdraw"]);
        let ev_names: Vec<&str> = s.events.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(ev_names, vec!["Staked", "Withdrawn"]);
        let sv_names: Vec<&str> = s.state_variables.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(sv_names, vec!["currentState", "stakeToken", "userInfos"]);
        assert_eq!(count_states(&s), 3);
    }

    #[test]
    fn staking_excerpt_body_stats() {
        let (s, _) = parse_surface(STAKING_EXCERPT).unwrap();
        let stake = s.function("stake").unwrap();
        assert_eq!(stake.visibility, Visibility::External);
        assert_eq!(stake.modifiers, vec!["afterStart", "beforeEnd"]);
        assert_eq!(stake.body_stats.require_count, 1);
        assert_eq!(stake.body_stats.emit_count, 1);
        assert_eq!(stake.body_stats.external_call_count, 1);
        assert_eq!(stake.body_stats.state_write_count, 1);
        assert_eq!(stake.body_stats.statement_count, 4);
        // transferFrom happens before the balance write: reentrancy shape.
        assert!(stake.facts.call_before_write);

        let withdraw = s.function("withdraw").unwrap();
        assert_eq!(withdraw.modifiers, vec!["nonReentrant"]);
        // withdraw writes state before the external transfer.
        assert!(!withdraw.facts.call_before_write);
        // Bare `require(_amount > 0)` carries no message.
        assert_eq!(withdraw.facts.requires_without_message, 1);
    }

    #[test]
    fn empty_contract_has_empty_inventories() {
        let (s, _) = parse_surface("contract A {}").unwrap();
        assert_eq!(s.contract_name, "A");
        assert!(s.functions.is_empty());
        assert!(s.state_variables.is_empty());
        assert_eq!(count_states(&s), 0);
    }

    #[test]
    fn interface_only_source_is_unparseable() {
        let src = "pragma solidity ^0.8.0; interface IThing { function f() external; }";
        assert!(matches!(
            parse_surface(src),
            Err(ParseError::UnparseableSource)
        ));
    }

    #[test]
    fn last_contract_wins_in_multi_contract_files() {
        let src = r#"
            interface IERC20 { function transfer(address to, uint256 x) external returns (bool); }
            library Math { function min(uint a, uint b) internal pure returns (uint) { return a < b ? a : b; } }
            contract Helper { uint h; function bump() public { h += 1; } }
            contract Main is Helper { uint m; function run() public { m = 1; } }
        "#;
        let (s, _) = parse_surface(src).unwrap();
        assert_eq!(s.contract_name, "Main");
        assert_eq!(s.uses_inheritance, vec!["Helper"]);
        assert_eq!(s.functions.len(), 1);
        assert_eq!(s.functions[0].name, "run");
    }

    #[test]
    fn old_style_constructor_is_normalized() {
        let src = r#"
            pragma solidity ^0.4.24;
            contract Token {
                address owner;
                function Token() public { owner = msg.sender; }
                function transfer() public {}
            }
        "#;
        let (s, _) = parse_surface(src).unwrap();
        assert!(s.function("constructor").is_some());
        assert!(s.function("Token").is_none());
    }

    #[test]
    fn receive_fallback_and_unnamed_fallback() {
        let src = r#"
            contract A {
                uint got;
                receive() external payable { got += msg.value; }
                fallback() external payable { got += 1; }
            }
        "#;
        let (s, _) = parse_surface(src).unwrap();
        assert!(s.function("receive").is_some());
        assert!(s.function("fallback").is_some());
        assert_eq!(
            s.function("receive").unwrap().mutability,
            Mutability::Payable
        );

        let old = "contract B { uint x; function() public payable { x = 1; } }";
        let (s, _) = parse_surface(old).unwrap();
        assert!(s.function("fallback").is_some());
    }

    #[test]
    fn state_enum_binding_prefers_state_named_variable() {
        let src = r#"
            contract C {
                enum Phase { Open, Closed }
                enum Color { Red, Green, Blue }
                Color favorite;
                Phase public currentState;
                function close() public { currentState = Phase.Closed; }
                function paint() public { favorite = Color.Red; }
            }
        "#;
        let (s, _) = parse_surface(src).unwrap();
        let (var, en) = s.state_binding().unwrap();
        assert_eq!(var.name, "currentState");
        assert_eq!(en.name, "Phase");
        assert_eq!(count_states(&s), 2);
    }

    #[test]
    fn enum_declared_but_never_bound_counts_zero_states() {
        let src = "contract C { enum Phase { A, B } uint x; function f() public { x = 1; } }";
        let (s, _) = parse_surface(src).unwrap();
        assert_eq!(count_states(&s), 0);
    }

    #[test]
    fn two_enums_one_bound_counts_the_bound_one() {
        let src = r#"
            contract C {
                enum Big { A, B, C, D }
                enum Small { X, Y }
                Small mode;
                function f() public { mode = Small.Y; }
            }
        "#;
        let (s, _) = parse_surface(src).unwrap();
        // Inspection oracle: the bound enum is Small with 2 members.
        assert_eq!(count_states(&s), 2);
    }

    #[test]
    fn mapping_and_array_types_render() {
        let src = r#"
            contract C {
                mapping(address => mapping(uint256 => bool)) public votes;
                uint256[] public items;
                uint8[3] public fixedArr;
                address payable public beneficiary;
                function f() public { items.push(1); }
            }
        "#;
        let (s, _) = parse_surface(src).unwrap();
        let types: Vec<&str> = s
            .state_variables
            .iter()
            .map(|v| v.type_text.as_str())
            .collect();
        assert_eq!(
            types,
            vec![
                "mapping(address => mapping(uint256 => bool))",
                "uint256[]",
                "uint8[3]",
                "address payable"
            ]
        );
        // `items.push(1)` marks items written.
        assert!(s.functions[0].facts.state_writes.contains("items"));
    }

    #[test]
    fn event_params_capture_indexed_flags() {
        let src = "contract C { event T(address indexed from, address indexed to, uint256 amount); uint x; function f() public { x = 1; } }";
        let (s, _) = parse_surface(src).unwrap();
        let ev = &s.events[0];
        assert_eq!(ev.params.len(), 3);
        assert!(ev.params[0].indexed);
        assert!(ev.params[1].indexed);
        assert!(!ev.params[2].indexed);
        assert_eq!(ev.params[2].name, "amount");
        assert_eq!(ev.params[2].type_text, "uint256");
    }

    #[test]
    fn modifier_guard_reads_flow_to_functions() {
        let src = r#"
            contract C {
                enum State { Off, On }
                State public currentState;
                modifier whenOn() { require(currentState == State.On, "off"); _; }
                function poke() public whenOn { currentState = State.Off; }
            }
        "#;
        let (s, _) = parse_surface(src).unwrap();
        let poke = s.function("poke").unwrap();
        assert!(poke.facts.state_writes.contains("currentState"));
        assert!(s.effective_state_reads(poke).contains("currentState"));
        assert!(s.effective_enum_mentions(poke).contains("On"));
        assert_eq!(
            poke.facts.enum_writes,
            vec![("currentState".to_string(), "Off".to_string())]
        );
    }

    #[test]
    fn multiline_version_pragmas_and_ranges() {
        let src = "pragma solidity >=0.4.22 <0.9.0;\ncontract A { uint x; function f() public { x = 1; } }";
        let (s, _) = parse_surface(src).unwrap();
        assert_eq!(s.pragma_versions, vec![">=0.4.22 <0.9.0"]);
    }

    #[test]
    fn tolerant_of_assembly_and_unchecked_blocks() {
        let src = r#"
            pragma solidity ^0.8.4;
            contract C {
                uint total;
                function f(uint a) public {
                    unchecked { total += a; }
                    assembly { let zero := 0 }
                }
            }
        "#;
        let (s, warnings) = parse_surface(src).unwrap();
        let f = s.function("f").unwrap();
        assert!(f.facts.state_writes.contains("total"));
        assert!(warnings.is_empty(), "unexpected warnings: {warnings:?}");
    }

    #[test]
    fn garbage_inputs_degrade_to_warnings_or_unparseable() {
        assert!(parse_surface("").is_err());
        assert!(parse_surface("pure garbage ;;; }{").is_err());
        let (s, _) = parse_surface("contract C { ??? function f() public {} }").unwrap();
        assert_eq!(s.functions.len(), 1);
    }
}
