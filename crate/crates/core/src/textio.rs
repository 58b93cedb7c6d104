//! Text formats: the native automaton language, a HOA subset, DOT output
//! and proof scripts.
//!
//! Native syntax:
//!
//! ```text
//! // comment
//! automaton Sched {
//!   alphabet: schedule, init, done, work;
//!   states: q0, q1, q2;
//!   initial: q0;
//!   accepting: q1;
//!   q0 -schedule-> q1;
//!   q2 -{done,work}-> q0;   // one transition per listed event
//!   q2 -*-> q2;             // every event
//!   q2 -!done-> q2;         // every event except `done`
//! }
//! ```

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{Automaton, AutomatonDef, AutomatonError, Violation};
use crate::proofkernel::{Match, ProofScript, Rule, RuleApp};
use crate::simulations::SimKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub col_start: usize,
    pub col_end: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.col_start)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TextError {
    #[error("{span}: {message}")]
    Syntax { span: SourceSpan, message: String },
    #[error("{span}: automaton `{name}` is invalid: {}", violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid {
        span: SourceSpan,
        name: String,
        violations: Vec<Violation>,
    },
    #[error("{span}: unknown rule `{name}`")]
    UnknownRule { span: SourceSpan, name: String },
    #[error("unsupported HOA feature: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

const DEFAULT_FILE: &str = "<input>";

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '.' | '\'' | '&')
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Punct(&'static str),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
    len: usize,
}

struct Lexer<'t> {
    file: &'t str,
    tokens: Vec<Token>,
    pos: usize,
    eof: (usize, usize),
}

impl<'t> Lexer<'t> {
    fn new(file: &'t str, text: &str) -> Result<Self, TextError> {
        let mut tokens = Vec::new();
        let mut last = (1, 1);
        for (ln, line) in text.lines().enumerate() {
            let line_no = ln + 1;
            let chars: Vec<char> = line.chars().collect();
            let mut i = 0;
            while i < chars.len() {
                let c = chars[i];
                let col = i + 1;
                if c.is_whitespace() {
                    i += 1;
                    continue;
                }
                if c == '/' && chars.get(i + 1) == Some(&'/') {
                    break;
                }
                if is_ident_char(c) {
                    let start = i;
                    while i < chars.len() && is_ident_char(chars[i]) {
                        i += 1;
                    }
                    tokens.push(Token {
                        tok: Tok::Ident(chars[start..i].iter().collect()),
                        line: line_no,
                        col,
                        len: i - start,
                    });
                    continue;
                }
                let punct = if c == '-' && chars.get(i + 1) == Some(&'>') {
                    "->"
                } else {
                    match c {
                        '{' => "{",
                        '}' => "}",
                        ':' => ":",
                        ';' => ";",
                        ',' => ",",
                        '*' => "*",
                        '!' => "!",
                        '-' => "-",
                        _ => {
                            return Err(TextError::Syntax {
                                span: SourceSpan {
                                    file: file.to_string(),
                                    line: line_no,
                                    col_start: col,
                                    col_end: col,
                                },
                                message: format!("unexpected character `{c}`"),
                            })
                        }
                    }
                };
                tokens.push(Token {
                    tok: Tok::Punct(punct),
                    line: line_no,
                    col,
                    len: punct.len(),
                });
                i += punct.len();
            }
            last = (line_no, chars.len() + 1);
        }
        Ok(Self {
            file,
            tokens,
            pos: 0,
            eof: last,
        })
    }

    fn span_of(&self, t: Option<&Token>) -> SourceSpan {
        match t {
            Some(t) => SourceSpan {
                file: self.file.to_string(),
                line: t.line,
                col_start: t.col,
                col_end: t.col + t.len.saturating_sub(1),
            },
            None => SourceSpan {
                file: self.file.to_string(),
                line: self.eof.0,
                col_start: self.eof.1,
                col_end: self.eof.1,
            },
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn span(&self) -> SourceSpan {
        self.span_of(self.tokens.get(self.pos))
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, TextError> {
        Err(TextError::Syntax {
            span: self.span(),
            message: message.into(),
        })
    }

    fn describe(&self) -> String {
        match self.peek() {
            None => "end of input".to_string(),
            Some(Tok::Ident(s)) => format!("`{s}`"),
            Some(Tok::Punct(p)) => format!("`{p}`"),
        }
    }

    fn expect(&mut self, p: &'static str) -> Result<(), TextError> {
        if self.peek() == Some(&Tok::Punct(p)) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected `{p}`, found {}", self.describe()))
        }
    }

    fn eat(&mut self, p: &'static str) -> bool {
        if self.peek() == Some(&Tok::Punct(p)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, TextError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.error(format!("expected identifier, found {}", self.describe())),
        }
    }

    // ident ("," ident)* terminated by ";" (possibly empty)
    fn list(&mut self) -> Result<Vec<String>, TextError> {
        let mut out = Vec::new();
        if self.eat(";") {
            return Ok(out);
        }
        loop {
            out.push(self.ident()?);
            if self.eat(";") {
                return Ok(out);
            }
            self.expect(",")?;
        }
    }
}

enum Label {
    Event(String),
    All,
    Set(Vec<String>),
    Not(Vec<String>),
}

fn parse_label(lx: &mut Lexer) -> Result<Label, TextError> {
    if lx.eat("*") {
        return Ok(Label::All);
    }
    if lx.eat("!") {
        return Ok(Label::Not(parse_event_set(lx)?));
    }
    if lx.peek() == Some(&Tok::Punct("{")) {
        return Ok(Label::Set(parse_event_set(lx)?));
    }
    Ok(Label::Event(lx.ident()?))
}

fn parse_event_set(lx: &mut Lexer) -> Result<Vec<String>, TextError> {
    if !lx.eat("{") {
        return Ok(vec![lx.ident()?]);
    }
    let mut out = Vec::new();
    if lx.eat("}") {
        return Ok(out);
    }
    loop {
        out.push(lx.ident()?);
        if lx.eat("}") {
            return Ok(out);
        }
        lx.expect(",")?;
    }
}

/// Parses every automaton in `text`.
pub fn parse_native(text: &str) -> Result<Vec<Automaton>, TextError> {
    parse_native_named(DEFAULT_FILE, text)
}

/// [`parse_native`] with a file name for error spans.
pub fn parse_native_named(file: &str, text: &str) -> Result<Vec<Automaton>, TextError> {
    let mut lx = Lexer::new(file, text)?;
    let mut out = Vec::new();
    let mut names = BTreeSet::new();
    while lx.peek().is_some() {
        let header = lx.span();
        match lx.ident()?.as_str() {
            "automaton" => {}
            other => {
                lx.pos -= 1;
                return lx.error(format!("expected `automaton`, found `{other}`"));
            }
        }
        let name_span = lx.span();
        let name = lx.ident()?;
        if !names.insert(name.clone()) {
            return Err(TextError::Syntax {
                span: name_span,
                message: format!("automaton `{name}` defined twice"),
            });
        }
        lx.expect("{")?;
        let a = parse_body(&mut lx, name, header)?;
        out.push(a);
    }
    Ok(out)
}

fn parse_body(lx: &mut Lexer, name: String, header: SourceSpan) -> Result<Automaton, TextError> {
    let mut alphabet: Option<Vec<String>> = None;
    let mut states: Option<Vec<String>> = None;
    let mut initial = Vec::new();
    let mut accepting = Vec::new();
    // (source, label, target, span)
    let mut edges: Vec<(String, Label, String, SourceSpan)> = Vec::new();
    while !lx.eat("}") {
        let span = lx.span();
        let first = lx.ident()?;
        if lx.eat(":") {
            let items = lx.list()?;
            let slot = match first.as_str() {
                "alphabet" => alphabet.get_or_insert_with(Vec::new),
                "states" => states.get_or_insert_with(Vec::new),
                "initial" => &mut initial,
                "accepting" => &mut accepting,
                other => {
                    return Err(TextError::Syntax {
                        span,
                        message: format!("unknown section `{other}`"),
                    })
                }
            };
            slot.extend(items);
            continue;
        }
        lx.expect("-")?;
        let label = parse_label(lx)?;
        lx.expect("->")?;
        let target = lx.ident()?;
        lx.expect(";")?;
        edges.push((first, label, target, span));
    }
    let alphabet = alphabet.ok_or_else(|| TextError::Syntax {
        span: header.clone(),
        message: format!("automaton `{name}` has no `alphabet:` section"),
    })?;
    let states = states.ok_or_else(|| TextError::Syntax {
        span: header.clone(),
        message: format!("automaton `{name}` has no `states:` section"),
    })?;
    let mut transitions: Vec<(String, String, String)> = Vec::new();
    let mut expanded: Vec<(String, String, String)> = Vec::new();
    for (src, label, dst, span) in edges {
        let check = |events: &[String]| -> Result<(), TextError> {
            for e in events {
                if !alphabet.contains(e) {
                    return Err(TextError::Syntax {
                        span: span.clone(),
                        message: format!("unknown event `{e}` in label"),
                    });
                }
            }
            Ok(())
        };
        match label {
            Label::Event(e) => transitions.push((src, e, dst)),
            Label::All => {
                for e in &alphabet {
                    expanded.push((src.clone(), e.clone(), dst.clone()));
                }
            }
            Label::Set(es) => {
                check(&es)?;
                for e in es {
                    expanded.push((src.clone(), e, dst.clone()));
                }
            }
            Label::Not(es) => {
                check(&es)?;
                for e in alphabet.iter().filter(|e| !es.contains(e)) {
                    expanded.push((src.clone(), e.clone(), dst.clone()));
                }
            }
        }
    }
    // Labels denote sets of transitions: an expansion never duplicates an
    // explicit edge or another expansion.
    let mut seen: BTreeSet<(String, String, String)> = transitions.iter().cloned().collect();
    for t in expanded {
        if seen.insert(t.clone()) {
            transitions.push(t);
        }
    }
    let def = AutomatonDef {
        name: name.clone(),
        alphabet,
        states,
        initial,
        accepting,
        transitions,
    };
    let violations = def.validate();
    if !violations.is_empty() {
        return Err(TextError::Invalid {
            span: header,
            name,
            violations,
        });
    }
    Ok(Automaton::new(def)?)
}

/// Native text for one automaton, one explicit transition per line.
pub fn serialize_native(a: &Automaton) -> String {
    let mut out = format!("automaton {} {{\n", a.name());
    let list = |xs: Vec<&str>| {
        if xs.is_empty() {
            String::new()
        } else {
            format!(" {}", xs.join(", "))
        }
    };
    out += &format!("  alphabet:{};\n", list(a.alphabet().iter().map(String::as_str).collect()));
    out += &format!("  states:{};\n", list(a.states().iter().map(String::as_str).collect()));
    out += &format!(
        "  initial:{};\n",
        list(a.initial().iter().map(|&s| a.state_name(s)).collect())
    );
    out += &format!(
        "  accepting:{};\n",
        list(a.accepting_states().map(|s| a.state_name(s)).collect())
    );
    for &(s, e, t) in a.transitions() {
        out += &format!(
            "  {} -{}-> {};\n",
            a.state_name(s),
            a.event_name(e),
            a.state_name(t)
        );
    }
    out += "}\n";
    out
}

pub fn serialize_native_all(automata: &[Automaton]) -> String {
    automata
        .iter()
        .map(serialize_native)
        .collect::<Vec<_>>()
        .join("\n")
}

/// DOT rendering: accepting states get a double border, each initial state
/// an arrow from an invisible node. Parallel edges are merged into one edge
/// with a comma-separated label.
pub fn export_dot(a: &Automaton) -> String {
    let q = |s: &str| format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""));
    let mut out = format!("digraph {} {{\n  rankdir=LR;\n  node [shape=circle];\n", q(a.name()));
    for s in a.state_ids() {
        let name = a.state_name(s);
        if a.is_accepting(s) {
            out += &format!("  {} [peripheries=2];\n", q(name));
        } else {
            out += &format!("  {};\n", q(name));
        }
    }
    for (i, &s) in a.initial().iter().enumerate() {
        out += &format!("  __init{i} [shape=point, style=invis];\n");
        out += &format!("  __init{i} -> {};\n", q(a.state_name(s)));
    }
    let mut edges: Vec<((usize, usize), Vec<&str>)> = Vec::new();
    for &(s, e, t) in a.transitions() {
        match edges.iter_mut().find(|(k, _)| *k == (s.0, t.0)) {
            Some((_, labels)) => labels.push(a.event_name(e)),
            None => edges.push(((s.0, t.0), vec![a.event_name(e)])),
        }
    }
    for ((s, t), labels) in edges {
        out += &format!(
            "  {} -> {} [label={}];\n",
            q(&a.states()[s]),
            q(&a.states()[t]),
            q(&labels.join(","))
        );
    }
    out += "}\n";
    out
}

// --- HOA -------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum HoaTok {
    Header(String),
    Int(usize),
    Str(String),
    Ident(String),
    Label(String),
    Acc(Vec<usize>),
    Body,
    End,
}

fn hoa_tokens(text: &str) -> Result<Vec<HoaTok>, TextError> {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    let bad = |m: String| TextError::Unsupported(m);
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            let rest: String = chars[i..].iter().collect();
            let end = rest.find("*/").ok_or_else(|| bad("unterminated comment".into()))?;
            i += rest[..end + 2].chars().count();
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            while i < chars.len() && chars[i] != '"' {
                if chars[i] == '\\' && i + 1 < chars.len() {
                    i += 1;
                }
                s.push(chars[i]);
                i += 1;
            }
            i += 1;
            out.push(HoaTok::Str(s));
        } else if c == '[' {
            let start = i + 1;
            while i < chars.len() && chars[i] != ']' {
                i += 1;
            }
            out.push(HoaTok::Label(chars[start..i].iter().collect()));
            i += 1;
        } else if c == '{' {
            let start = i + 1;
            while i < chars.len() && chars[i] != '}' {
                i += 1;
            }
            let inner: String = chars[start..i].iter().collect();
            let sets = inner
                .split_whitespace()
                .map(|x| x.parse::<usize>().map_err(|_| bad(format!("acceptance set `{x}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            out.push(HoaTok::Acc(sets));
            i += 1;
        } else if c == '-' && chars[i..].starts_with(&['-', '-']) {
            let start = i;
            i += 2;
            while i < chars.len() && chars[i] != '-' {
                i += 1;
            }
            i += 2;
            let word: String = chars[start..i.min(chars.len())].iter().collect();
            match word.as_str() {
                "--BODY--" => out.push(HoaTok::Body),
                "--END--" => out.push(HoaTok::End),
                other => return Err(bad(format!("marker `{other}`"))),
            }
        } else {
            let start = i;
            while i < chars.len()
                && !chars[i].is_whitespace()
                && !matches!(chars[i], '"' | '[' | '{')
            {
                i += 1;
                if chars[i - 1] == ':' {
                    break;
                }
            }
            let word: String = chars[start..i].iter().collect();
            if let Some(h) = word.strip_suffix(':') {
                out.push(HoaTok::Header(h.to_string()));
            } else if let Ok(n) = word.parse::<usize>() {
                out.push(HoaTok::Int(n));
            } else {
                out.push(HoaTok::Ident(word));
            }
        }
    }
    Ok(out)
}

// `[k]` or a conjunction with exactly one positive atom `k`.
fn hoa_label(label: &str, aps: usize) -> Result<usize, TextError> {
    let mut positive = None;
    for lit in label.split('&').map(str::trim) {
        if let Some(neg) = lit.strip_prefix('!') {
            neg.trim()
                .parse::<usize>()
                .map_err(|_| TextError::Unsupported(format!("label `[{label}]`")))?;
            continue;
        }
        let k = lit
            .parse::<usize>()
            .map_err(|_| TextError::Unsupported(format!("label `[{label}]`")))?;
        if positive.replace(k).is_some() {
            return Err(TextError::Unsupported(format!("label `[{label}]`")));
        }
    }
    match positive {
        Some(k) if k < aps => Ok(k),
        _ => Err(TextError::Unsupported(format!("label `[{label}]`"))),
    }
}

/// Imports a HOA v1 automaton with state-based Büchi acceptance whose edge
/// labels each name exactly one atomic proposition (one event per AP).
pub fn parse_hoa(text: &str) -> Result<Automaton, TextError> {
    let toks = hoa_tokens(text)?;
    let unsupported = |m: &str| TextError::Unsupported(m.to_string());
    let mut i = 0;
    let mut name = "hoa".to_string();
    let mut n_states: Option<usize> = None;
    let mut start = Vec::new();
    let mut aps: Vec<String> = Vec::new();
    let mut saw_version = false;
    let mut acc_ok = false;
    // header
    while i < toks.len() && toks[i] != HoaTok::Body {
        let HoaTok::Header(h) = &toks[i] else {
            return Err(unsupported("header syntax"));
        };
        i += 1;
        let args_start = i;
        while i < toks.len() && !matches!(toks[i], HoaTok::Header(_) | HoaTok::Body) {
            i += 1;
        }
        let args = &toks[args_start..i];
        match h.as_str() {
            "HOA" => {
                if args != [HoaTok::Ident("v1".into())] {
                    return Err(unsupported("HOA version (only v1)"));
                }
                saw_version = true;
            }
            "name" => {
                if let [HoaTok::Str(s)] = args {
                    name = s.chars().filter(|&c| is_ident_char(c)).collect();
                    if name.is_empty() {
                        name = "hoa".into();
                    }
                }
            }
            "States" => match args {
                [HoaTok::Int(n)] => n_states = Some(*n),
                _ => return Err(unsupported("States")),
            },
            "Start" => match args {
                [HoaTok::Int(n)] => start.push(*n),
                _ => return Err(unsupported("Start (conjunctive start states)")),
            },
            "AP" => {
                let Some((HoaTok::Int(n), rest)) = args.split_first() else {
                    return Err(unsupported("AP"));
                };
                aps = rest
                    .iter()
                    .map(|t| match t {
                        HoaTok::Str(s) => Ok(s.clone()),
                        _ => Err(unsupported("AP")),
                    })
                    .collect::<Result<_, _>>()?;
                if aps.len() != *n {
                    return Err(unsupported("AP (count mismatch)"));
                }
            }
            "acc-name" => match args {
                [HoaTok::Ident(b), ..] if b == "Buchi" => {}
                _ => return Err(unsupported("acc-name (only Buchi)")),
            },
            "Acceptance" => {
                let flat: Vec<String> = args
                    .iter()
                    .map(|t| match t {
                        HoaTok::Int(n) => n.to_string(),
                        HoaTok::Ident(s) => s.clone(),
                        _ => "?".into(),
                    })
                    .collect();
                if flat.join(" ").replace(' ', "") != "1Inf(0)" {
                    return Err(unsupported("Acceptance (only `1 Inf(0)`)"));
                }
                acc_ok = true;
            }
            "tool" | "properties" => {}
            other => return Err(TextError::Unsupported(format!("header `{other}`"))),
        }
    }
    if !saw_version {
        return Err(unsupported("missing `HOA: v1` header"));
    }
    if !acc_ok {
        return Err(unsupported("missing `Acceptance: 1 Inf(0)` header"));
    }
    if toks.get(i) != Some(&HoaTok::Body) {
        return Err(unsupported("missing --BODY--"));
    }
    i += 1;
    let mut state_names: Vec<Option<String>> = vec![None; n_states.unwrap_or(0)];
    let mut accepting = Vec::new();
    let mut edges: Vec<(usize, usize, usize)> = Vec::new();
    let mut current: Option<usize> = None;
    while i < toks.len() && toks[i] != HoaTok::End {
        match &toks[i] {
            HoaTok::Header(h) if h == "State" => {
                i += 1;
                let Some(HoaTok::Int(s)) = toks.get(i) else {
                    return Err(unsupported("State"));
                };
                let s = *s;
                i += 1;
                if s >= state_names.len() {
                    state_names.resize(s + 1, None);
                }
                if let Some(HoaTok::Str(label)) = toks.get(i) {
                    state_names[s] = Some(label.clone());
                    i += 1;
                }
                if let Some(HoaTok::Acc(sets)) = toks.get(i) {
                    if sets.iter().any(|&x| x != 0) {
                        return Err(unsupported("acceptance sets other than 0"));
                    }
                    if !sets.is_empty() {
                        accepting.push(s);
                    }
                    i += 1;
                }
                current = Some(s);
            }
            HoaTok::Label(label) => {
                let src = current.ok_or_else(|| unsupported("edge before State"))?;
                let ap = hoa_label(label, aps.len())?;
                i += 1;
                let Some(HoaTok::Int(dst)) = toks.get(i) else {
                    return Err(unsupported("edge target (conjunctive targets)"));
                };
                edges.push((src, ap, *dst));
                i += 1;
                if let Some(HoaTok::Acc(_)) = toks.get(i) {
                    return Err(unsupported("transition-based acceptance"));
                }
            }
            HoaTok::Int(_) => return Err(unsupported("implicit edge labels")),
            _ => return Err(unsupported("body syntax")),
        }
    }
    let names: Vec<String> = state_names
        .iter()
        .enumerate()
        .map(|(k, n)| match n {
            Some(n) if !n.is_empty() && n.chars().all(is_ident_char) => n.clone(),
            _ => k.to_string(),
        })
        .collect();
    let get = |k: usize| -> Result<String, TextError> {
        names
            .get(k)
            .cloned()
            .ok_or_else(|| TextError::Unsupported(format!("state {k} out of range")))
    };
    let def = AutomatonDef {
        name,
        alphabet: aps.clone(),
        states: names.clone(),
        initial: start.iter().map(|&s| get(s)).collect::<Result<_, _>>()?,
        accepting: accepting.iter().map(|&s| get(s)).collect::<Result<_, _>>()?,
        transitions: edges
            .iter()
            .map(|&(s, e, t)| Ok((get(s)?, aps[e].clone(), get(t)?)))
            .collect::<Result<_, TextError>>()?,
    };
    Ok(Automaton::new(def)?)
}

// --- proof scripts -----------------------------------------------------------

fn script_error(line: usize, col: usize, len: usize, message: impl Into<String>) -> TextError {
    TextError::Syntax {
        span: SourceSpan {
            file: DEFAULT_FILE.into(),
            line,
            col_start: col,
            col_end: col + len.saturating_sub(1),
        },
        message: message.into(),
    }
}

fn serialize_node(node: &RuleApp, depth: usize, out: &mut String) {
    out.push_str(&"  ".repeat(depth));
    out.push_str(node.rule.name());
    let mut items: Vec<String> = Vec::new();
    let mut matches = node.matches.clone();
    matches.sort_by(|x, y| (&x.event, &x.left).cmp(&(&y.event, &y.left)));
    for m in &matches {
        items.push(format!("{}:{}->{}", m.event, m.left, m.right));
    }
    let mut inv = node.invariant.clone();
    inv.sort();
    inv.dedup();
    for (x, y) in &inv {
        items.push(format!("({x},{y})"));
    }
    if !items.is_empty() {
        out.push_str(" { ");
        out.push_str(&items.join(", "));
        out.push_str(" }");
    }
    out.push('\n');
    for c in &node.children {
        serialize_node(c, depth + 1, out);
    }
}

/// Canonical script text.
pub fn serialize_script(p: &ProofScript) -> String {
    let mut out = format!(
        "system: {}\nleft: {}\nright: {}\nroot: {} {}\n",
        p.system, p.left, p.right, p.root.0, p.root.1
    );
    serialize_node(&p.tree, 0, &mut out);
    out
}

fn parse_choices(
    text: &str,
    line: usize,
    col: usize,
) -> Result<(Vec<Match>, Vec<(String, String)>), TextError> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let mut matches = Vec::new();
    let mut pairs = Vec::new();
    if compact.is_empty() {
        return Ok((matches, pairs));
    }
    let mut rest = compact.as_str();
    let ident_ok = |s: &str| !s.is_empty() && s.chars().all(is_ident_char);
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix('(') {
            let close = r
                .find(')')
                .ok_or_else(|| script_error(line, col, text.len(), "unclosed `(`"))?;
            let (x, y) = r[..close]
                .split_once(',')
                .ok_or_else(|| script_error(line, col, text.len(), "expected `(s1,s2)`"))?;
            if !ident_ok(x) || !ident_ok(y) {
                return Err(script_error(line, col, text.len(), format!("bad pair `({x},{y})`")));
            }
            pairs.push((x.to_string(), y.to_string()));
            rest = &r[close + 1..];
        } else {
            let end = rest.find(',').unwrap_or(rest.len());
            let item = &rest[..end];
            let (e, arrow) = item.split_once(':').ok_or_else(|| {
                script_error(line, col, text.len(), format!("expected `e:s1->s2`, found `{item}`"))
            })?;
            let (x, y) = arrow.split_once("->").ok_or_else(|| {
                script_error(line, col, text.len(), format!("expected `e:s1->s2`, found `{item}`"))
            })?;
            if !ident_ok(e) || !ident_ok(x) || !ident_ok(y) {
                return Err(script_error(line, col, text.len(), format!("bad match `{item}`")));
            }
            matches.push(Match::new(e, x, y));
            rest = &rest[end..];
        }
        if let Some(r) = rest.strip_prefix(',') {
            rest = r;
            if rest.is_empty() {
                return Err(script_error(line, col, text.len(), "trailing `,`"));
            }
        } else if !rest.is_empty() {
            return Err(script_error(line, col, text.len(), "expected `,`"));
        }
    }
    if !matches.is_empty() && !pairs.is_empty() {
        return Err(script_error(
            line,
            col,
            text.len(),
            "a rule takes either matches or an invariant set, not both",
        ));
    }
    Ok((matches, pairs))
}

/// Parses script text; whitespace inside lines is not significant, but
/// indentation (two spaces per level) gives the tree structure.
pub fn parse_script(text: &str) -> Result<ProofScript, TextError> {
    let mut system: Option<SimKind> = None;
    let mut left: Option<String> = None;
    let mut right: Option<String> = None;
    let mut root: Option<(String, String)> = None;
    // (depth, node, line)
    let mut nodes: Vec<(usize, RuleApp, usize)> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = match raw.find("//") {
            Some(i) => &raw[..i],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        let indent = line.len() - line.trim_start_matches(' ').len();
        if line[indent..].starts_with('\t') {
            return Err(script_error(line_no, indent + 1, 1, "tabs are not allowed in indentation"));
        }
        let body = line.trim();
        if nodes.is_empty() && indent == 0 {
            if let Some((key, value)) = body.split_once(':') {
                let key = key.trim();
                let value = value.trim();
                let col = 1;
                match key {
                    "system" => {
                        system = Some(value.parse().map_err(|e: crate::simulations::UnknownKind| {
                            script_error(line_no, col, body.len(), e.to_string())
                        })?);
                        continue;
                    }
                    "left" => {
                        left = Some(value.to_string());
                        continue;
                    }
                    "right" => {
                        right = Some(value.to_string());
                        continue;
                    }
                    "root" => {
                        let parts: Vec<&str> = value.split_whitespace().collect();
                        if parts.len() != 2 {
                            return Err(script_error(line_no, col, body.len(), "expected `root: s1 s2`"));
                        }
                        root = Some((parts[0].to_string(), parts[1].to_string()));
                        continue;
                    }
                    _ if !body.contains('{') => {
                        return Err(script_error(line_no, col, key.len(), format!("unknown header `{key}`")));
                    }
                    _ => {}
                }
            }
        }
        if indent % 2 != 0 {
            return Err(script_error(line_no, 1, indent, "indentation must be a multiple of two spaces"));
        }
        let depth = indent / 2;
        let (name, choices) = match body.find('{') {
            Some(i) => {
                let inner = body[i + 1..].trim_end();
                let inner = inner.strip_suffix('}').ok_or_else(|| {
                    script_error(line_no, indent + i + 1, body.len() - i, "missing `}`")
                })?;
                (body[..i].trim(), Some((inner, indent + i + 2)))
            }
            None => (body, None),
        };
        let rule: Rule = name.parse().map_err(|_| TextError::UnknownRule {
            span: SourceSpan {
                file: DEFAULT_FILE.into(),
                line: line_no,
                col_start: indent + 1,
                col_end: indent + name.len(),
            },
            name: name.to_string(),
        })?;
        let (matches, invariant) = match choices {
            Some((inner, col)) => parse_choices(inner, line_no, col)?,
            None => (Vec::new(), Vec::new()),
        };
        let expected_max = match nodes.last() {
            None => 0,
            Some((d, _, _)) => d + 1,
        };
        if depth > expected_max || (nodes.is_empty() && depth != 0) {
            return Err(script_error(line_no, 1, indent.max(1), "unexpected indentation"));
        }
        if depth == 0 && !nodes.is_empty() {
            return Err(script_error(line_no, 1, 1, "a script has exactly one root rule"));
        }
        nodes.push((depth, RuleApp::new(rule).with_matches(matches).with_invariant(invariant), line_no));
    }
    let missing = |what: &str| script_error(1, 1, 1, format!("missing `{what}:` header"));
    let system = system.ok_or_else(|| missing("system"))?;
    let left = left.ok_or_else(|| missing("left"))?;
    let right = right.ok_or_else(|| missing("right"))?;
    let root = root.ok_or_else(|| missing("root"))?;
    if nodes.is_empty() {
        return Err(script_error(text.lines().count().max(1), 1, 1, "script has no rules"));
    }
    // Fold the pre-order list into a tree.
    let mut stack: Vec<(usize, RuleApp)> = Vec::new();
    for (depth, node, _) in nodes {
        while stack.len() > depth {
            let (_, done) = stack.pop().expect("non-empty");
            stack.last_mut().expect("has parent").1.children.push(done);
        }
        stack.push((depth, node));
    }
    while stack.len() > 1 {
        let (_, done) = stack.pop().expect("non-empty");
        stack.last_mut().expect("has parent").1.children.push(done);
    }
    let tree = stack.pop().expect("root").1;
    Ok(ProofScript {
        system,
        left,
        right,
        root,
        tree,
    })
}
