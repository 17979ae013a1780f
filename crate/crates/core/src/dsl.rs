//! Text front end for `.ftd` system files.
//!
//! ```text
//! system ring
//! var x.0 : {0,1,B}
//! process p0
//!   read x.0, x.2
//!   write x.0
//!   action flip: x.2 != B & x.0 = x.2 -> x.0 := 1
//! fault corrupt: x.0 != B -> x.0 := B
//! invariant x.0 != B
//! badtrans x.0 = 0 & x.0' = B
//! ```
//!
//! A bare variable in a condition means `v = true`. Names that are declared
//! variables are variables; anything else that appears in some domain (or is
//! numeric, `B`, `true` or `false`) is a constant.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::ddengine::VarSet;
use crate::model::{
    validate, Assignment, Diagnostic, Expr, GuardedAction, Location, ProcessDecl, SynthesisResult,
    SystemSpec, Term, VarDecl,
};
use crate::symbolic::{EncodeError, Encoding, TransitionSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

/// Where each named item of a system was declared (1-based line and column).
#[derive(Clone, Debug, Default)]
pub struct SourceMap {
    spans: HashMap<Location, (usize, usize)>,
}

impl SourceMap {
    pub fn get(&self, loc: &Location) -> Option<(usize, usize)> {
        self.spans.get(loc).copied()
    }
}

/// A validation diagnostic pinned to its source position.
#[derive(Clone, Debug)]
pub struct LocatedDiagnostic {
    pub line: usize,
    pub col: usize,
    pub diagnostic: Diagnostic,
}

impl fmt::Display for LocatedDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.diagnostic)
    }
}

pub fn parse(text: &str) -> Result<SystemSpec, ParseError> {
    parse_with_spans(text).map(|(s, _)| s)
}

/// Parses and validates; diagnostics carry the position of the offending item.
pub fn check(text: &str) -> Result<(SystemSpec, Vec<LocatedDiagnostic>), ParseError> {
    let (spec, map) = parse_with_spans(text)?;
    let diags = validate(&spec)
        .into_iter()
        .map(|d| {
            let (line, col) = map.get(&d.location).unwrap_or((1, 1));
            LocatedDiagnostic {
                line,
                col,
                diagnostic: d,
            }
        })
        .collect();
    Ok((spec, diags))
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Prime,
    Eq,
    Ne,
    Bang,
    Amp,
    Pipe,
    LParen,
    RParen,
    Arrow,
    Assign,
    Comma,
    Colon,
    LBrace,
    RBrace,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "'{s}'"),
            Tok::Prime => "'''",
            Tok::Eq => "'='",
            Tok::Ne => "'!='",
            Tok::Bang => "'!'",
            Tok::Amp => "'&'",
            Tok::Pipe => "'|'",
            Tok::LParen => "'('",
            Tok::RParen => "')'",
            Tok::Arrow => "'->'",
            Tok::Assign => "':='",
            Tok::Comma => "','",
            Tok::Colon => "':'",
            Tok::LBrace => "'{'",
            Tok::RBrace => "'}'",
        };
        f.write_str(s)
    }
}

fn lex(line: &str, lineno: usize, start_col: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |col: usize, msg: String| ParseError {
        line: lineno,
        col,
        message: msg,
    };
    while i < chars.len() {
        let c = chars[i];
        let col = start_col + i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                i += 1;
            }
            out.push((Tok::Ident(chars[s..i].iter().collect()), col));
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let (tok, len) = match two.as_str() {
            "!=" => (Tok::Ne, 2),
            "->" => (Tok::Arrow, 2),
            ":=" => (Tok::Assign, 2),
            _ => match c {
                '\'' => (Tok::Prime, 1),
                '=' => (Tok::Eq, 1),
                '!' => (Tok::Bang, 1),
                '&' => (Tok::Amp, 1),
                '|' => (Tok::Pipe, 1),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                ',' => (Tok::Comma, 1),
                ':' => (Tok::Colon, 1),
                '{' => (Tok::LBrace, 1),
                '}' => (Tok::RBrace, 1),
                _ => return Err(err(col, format!("unexpected character '{c}'"))),
            },
        };
        out.push((tok, col));
        i += len;
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    end_col: usize,
    names: &'a Names,
}

struct Names {
    vars: HashSet<String>,
    values: HashSet<String>,
}

impl Names {
    fn is_constant(&self, s: &str) -> bool {
        if self.vars.contains(s) {
            return false;
        }
        self.values.contains(s)
            || s == "B"
            || s == "true"
            || s == "false"
            || s.chars().all(|c| c.is_ascii_digit())
    }
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.end_col)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col(),
            message: message.into(),
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {t}")),
            None => self.error(format!("expected {wanted}, found end of line")),
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.unexpected(&t.to_string()))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn done(&self) -> Result<(), ParseError> {
        if self.pos < self.toks.len() {
            Err(self.unexpected("end of line"))
        } else {
            Ok(())
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let col = self.col();
        let name = self.ident("a variable or value")?;
        let constant = self.names.is_constant(&name);
        if self.eat(&Tok::Prime) {
            if constant {
                return Err(ParseError {
                    line: self.line,
                    col,
                    message: format!("constant '{name}' cannot be primed"),
                });
            }
            return Ok(Term::Primed(name));
        }
        Ok(if constant {
            Term::Const(name)
        } else {
            Term::Var(name)
        })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut items = vec![self.conj()?];
        while self.eat(&Tok::Pipe) {
            items.push(self.conj()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Expr::Or(items)
        })
    }

    fn conj(&mut self) -> Result<Expr, ParseError> {
        let mut items = vec![self.unary()?];
        while self.eat(&Tok::Amp) {
            items.push(self.unary()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Expr::And(items)
        })
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(&Tok::Bang) {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        if self.eat(&Tok::LParen) {
            let e = self.expr()?;
            self.expect(Tok::RParen)?;
            return Ok(e);
        }
        let col = self.col();
        let lhs = self.term()?;
        if self.eat(&Tok::Eq) {
            return Ok(Expr::Eq(lhs, self.term()?));
        }
        if self.eat(&Tok::Ne) {
            return Ok(Expr::Ne(lhs, self.term()?));
        }
        match lhs {
            Term::Const(c) if c == "true" => Ok(Expr::Bool(true)),
            Term::Const(c) if c == "false" => Ok(Expr::Bool(false)),
            Term::Const(c) => Err(ParseError {
                line: self.line,
                col,
                message: format!("value '{c}' is not a condition"),
            }),
            t => Ok(Expr::Eq(t, Term::Const("true".into()))),
        }
    }

    fn action(&mut self) -> Result<GuardedAction, ParseError> {
        let name = self.ident("an action name")?;
        self.expect(Tok::Colon)?;
        let guard = self.expr()?;
        self.expect(Tok::Arrow)?;
        let mut effect = Vec::new();
        if self.peek() == Some(&Tok::Ident("skip".into())) && self.toks.len() == self.pos + 1 {
            self.pos += 1;
        } else {
            loop {
                let var = self.ident("an assigned variable")?;
                self.expect(Tok::Assign)?;
                let mut alternatives = vec![self.term()?];
                while self.eat(&Tok::Pipe) {
                    alternatives.push(self.term()?);
                }
                effect.push(Assignment { var, alternatives });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.done()?;
        Ok(GuardedAction { name, guard, effect })
    }

    fn name_list(&mut self) -> Result<Vec<String>, ParseError> {
        let mut out = Vec::new();
        if self.pos == self.toks.len() {
            return Ok(out);
        }
        loop {
            out.push(self.ident("a variable name")?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.done()?;
        Ok(out)
    }
}

struct Line<'t> {
    no: usize,
    indent: usize,
    keyword: &'t str,
    keyword_col: usize,
    rest: &'t str,
    rest_col: usize,
}

fn split_lines(text: &str) -> Vec<Line<'_>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim_start();
        if trimmed.trim().is_empty() {
            continue;
        }
        let indent = content.chars().count() - trimmed.chars().count();
        let kw_len = trimmed
            .find(|c: char| c.is_whitespace())
            .unwrap_or(trimmed.len());
        let keyword = &trimmed[..kw_len];
        let rest = &trimmed[kw_len..];
        out.push(Line {
            no: i + 1,
            indent,
            keyword,
            keyword_col: indent + 1,
            rest,
            rest_col: indent + 1 + keyword.chars().count(),
        });
    }
    out
}

/// Parses a system file and records where each item was declared.
pub fn parse_with_spans(text: &str) -> Result<(SystemSpec, SourceMap), ParseError> {
    let lines = split_lines(text);
    let first = lines.first().ok_or(ParseError {
        line: 1,
        col: 1,
        message: "expected 'system'".into(),
    })?;
    if first.keyword != "system" {
        return Err(ParseError {
            line: first.no,
            col: first.keyword_col,
            message: format!("expected 'system', found '{}'", first.keyword),
        });
    }

    // first pass: names, so terms can be classified as variables or values
    let mut names = Names {
        vars: HashSet::new(),
        values: HashSet::new(),
    };
    for l in &lines {
        if l.keyword == "var" {
            if let Some((n, rest)) = l.rest.split_once(':') {
                names.vars.insert(n.trim().to_string());
                let inner = rest.trim().trim_start_matches('{').trim_end_matches('}');
                names
                    .values
                    .extend(inner.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()));
            }
        }
    }

    let mut map = SourceMap::default();
    let mut spec = SystemSpec {
        name: String::new(),
        variables: Vec::new(),
        processes: Vec::new(),
        faults: Vec::new(),
        invariant: Expr::tt(),
        badtrans: Expr::ff(),
    };
    let mut seen_invariant = false;
    let mut seen_badtrans = false;

    for (idx, l) in lines.iter().enumerate() {
        let mut cur = Cursor {
            toks: lex(l.rest, l.no, l.rest_col)?,
            pos: 0,
            line: l.no,
            end_col: l.rest_col + l.rest.trim_end().chars().count(),
            names: &names,
        };
        let here = (l.no, l.keyword_col);
        let kw_error = |msg: String| ParseError {
            line: l.no,
            col: l.keyword_col,
            message: msg,
        };
        if l.indent > 0 {
            let proc = spec
                .processes
                .last_mut()
                .ok_or_else(|| kw_error(format!("'{}' outside a process", l.keyword)))?;
            match l.keyword {
                "read" => proc.read.extend(cur.name_list()?),
                "write" => proc.write.extend(cur.name_list()?),
                "action" => {
                    let a = cur.action()?;
                    map.spans.insert(
                        Location::Action {
                            process: proc.name.clone(),
                            action: a.name.clone(),
                        },
                        here,
                    );
                    proc.actions.push(a);
                }
                k => return Err(kw_error(format!("expected 'read', 'write' or 'action', found '{k}'"))),
            }
            continue;
        }
        match l.keyword {
            "system" => {
                if idx != 0 {
                    return Err(kw_error("'system' declared twice".into()));
                }
                spec.name = cur.ident("a system name")?;
                cur.done()?;
            }
            "var" => {
                let name = cur.ident("a variable name")?;
                cur.expect(Tok::Colon)?;
                cur.expect(Tok::LBrace)?;
                let mut domain = Vec::new();
                if !cur.eat(&Tok::RBrace) {
                    loop {
                        domain.push(cur.ident("a domain value")?);
                        if !cur.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    cur.expect(Tok::RBrace)?;
                }
                cur.done()?;
                map.spans.insert(Location::Variable(name.clone()), here);
                spec.variables.push(VarDecl { name, domain });
            }
            "process" => {
                let name = cur.ident("a process name")?;
                cur.done()?;
                map.spans.insert(Location::Process(name.clone()), here);
                spec.processes.push(ProcessDecl {
                    name,
                    read: Vec::new(),
                    write: Vec::new(),
                    actions: Vec::new(),
                });
            }
            "fault" => {
                let a = cur.action()?;
                map.spans.insert(Location::Fault(a.name.clone()), here);
                spec.faults.push(a);
            }
            "invariant" | "badtrans" => {
                let flag = if l.keyword == "invariant" {
                    &mut seen_invariant
                } else {
                    &mut seen_badtrans
                };
                if *flag {
                    return Err(kw_error(format!("'{}' declared twice", l.keyword)));
                }
                *flag = true;
                let e = cur.expr()?;
                cur.done()?;
                if l.keyword == "invariant" {
                    map.spans.insert(Location::Invariant, here);
                    spec.invariant = e;
                } else {
                    map.spans.insert(Location::BadTrans, here);
                    spec.badtrans = e;
                }
            }
            k => {
                return Err(kw_error(format!(
                    "expected 'var', 'process', 'fault', 'invariant' or 'badtrans', found '{k}'"
                )))
            }
        }
    }
    Ok((spec, map))
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Eq(a, b) => {
            let _ = write!(out, "{a} = {b}");
        }
        Expr::Ne(a, b) => {
            let _ = write!(out, "{a} != {b}");
        }
        Expr::Not(inner) => {
            out.push('!');
            write_operand(out, inner);
        }
        Expr::And(es) | Expr::Or(es) => {
            let sep = if matches!(e, Expr::And(_)) { " & " } else { " | " };
            for (i, x) in es.iter().enumerate() {
                if i > 0 {
                    out.push_str(sep);
                }
                write_operand(out, x);
            }
        }
    }
}

fn write_operand(out: &mut String, e: &Expr) {
    match e {
        Expr::And(_) | Expr::Or(_) | Expr::Eq(..) | Expr::Ne(..) => {
            out.push('(');
            write_expr(out, e);
            out.push(')');
        }
        _ => write_expr(out, e),
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

fn write_action(out: &mut String, a: &GuardedAction) {
    let _ = write!(out, "{}: ", a.name);
    write_expr(out, &a.guard);
    out.push_str(" -> ");
    if a.effect.is_empty() {
        out.push_str("skip");
    }
    for (i, asg) in a.effect.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let alts: Vec<String> = asg.alternatives.iter().map(|t| t.to_string()).collect();
        let _ = write!(out, "{} := {}", asg.var, alts.join(" | "));
    }
    out.push('\n');
}

pub fn serialize(spec: &SystemSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "system {}", spec.name);
    for v in &spec.variables {
        let _ = writeln!(out, "var {} : {{{}}}", v.name, v.domain.join(","));
    }
    for p in &spec.processes {
        let _ = writeln!(out, "process {}", p.name);
        let _ = writeln!(out, "  read {}", p.read.join(", "));
        let _ = writeln!(out, "  write {}", p.write.join(", "));
        for a in &p.actions {
            out.push_str("  action ");
            write_action(&mut out, a);
        }
    }
    for f in &spec.faults {
        out.push_str("fault ");
        write_action(&mut out, f);
    }
    out.push_str("invariant ");
    write_expr(&mut out, &spec.invariant);
    out.push_str("\nbadtrans ");
    write_expr(&mut out, &spec.badtrans);
    out.push('\n');
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmitMode {
    Summary,
    FullDump,
}

/// Largest state space for which a full dump is written.
pub const FULL_DUMP_LIMIT: u128 = 1_000_000;

/// Recovery lines listed per process before eliding the rest.
const RECOVERY_LINES: usize = 40;

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("full dump needs at most {limit} states, the system has {states}")]
    TooLarge { states: u128, limit: u128 },
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

/// Guarded-command-like lines `guard -> assignment` describing the
/// transitions of process `j` in `t`, over the variables it reads/writes.
pub fn describe_recovery(
    spec: &SystemSpec,
    enc: &mut Encoding,
    j: usize,
    t: TransitionSet,
) -> Result<Vec<String>, EmitError> {
    let proc = &spec.processes[j];
    let layout = enc.layout().clone();
    let mut drop = Vec::new();
    let mut keep = Vec::new();
    for v in layout.vars() {
        let reads = proc.read.contains(&v.name);
        let writes = proc.write.contains(&v.name);
        for b in 0..v.width {
            if reads {
                keep.push(v.cur_index(b));
            } else {
                drop.push(v.cur_index(b));
            }
            if writes {
                keep.push(v.next_index(b));
            } else {
                drop.push(v.next_index(b));
            }
        }
    }
    let mgr = &mut enc.mgr;
    let proj = mgr
        .exists(t.0, &drop.into_iter().collect::<VarSet>())
        .map_err(EncodeError::from)?;
    let keep: VarSet = keep.into_iter().collect();
    let mut lines = std::collections::BTreeSet::new();
    mgr.for_each_minterm(proj, &keep, |a| {
        let src = layout.decode(a, false);
        let dst = layout.decode(a, true);
        let mut guard = Vec::new();
        let mut effect = Vec::new();
        for (k, v) in layout.vars().iter().enumerate() {
            if proc.read.contains(&v.name) {
                guard.push(format!("{} = {}", v.name, v.domain[src[k]]));
            }
            if proc.write.contains(&v.name) {
                effect.push(format!("{} := {}", v.name, v.domain[dst[k]]));
            }
        }
        lines.insert(format!("{} -> {}", guard.join(" & "), effect.join(", ")));
    })
    .map_err(EncodeError::from)?;
    Ok(lines.into_iter().collect())
}

/// Human-readable report of a synthesis result.
pub fn emit_result(
    result: &SynthesisResult,
    spec: &SystemSpec,
    enc: &mut Encoding,
    mode: EmitMode,
) -> Result<String, EmitError> {
    let states = spec.state_count();
    if mode == EmitMode::FullDump && states > FULL_DUMP_LIMIT {
        return Err(EmitError::TooLarge {
            states,
            limit: FULL_DUMP_LIMIT,
        });
    }
    let mut out = String::new();
    let _ = writeln!(out, "system {}", spec.name);
    let _ = writeln!(out, "invariant: {} states", enc.count_states(result.s_prime)?);
    let _ = writeln!(out, "fault-span: {} states", enc.count_states(result.fault_span)?);
    let _ = writeln!(out, "program: {} transitions", enc.count_transitions(result.p_prime)?);
    let _ = writeln!(out, "iterations: {}", result.stats.iterations);
    let _ = writeln!(out, "removed: {} groups", result.removed_groups.len());
    let mut per_process: Vec<Option<TransitionSet>> = vec![None; spec.processes.len()];
    for &(j, t) in &result.added_recovery {
        per_process[j] = Some(match per_process[j] {
            Some(acc) => enc.or(acc, t)?,
            None => t,
        });
    }
    let added = per_process.iter().filter(|p| p.is_some()).count();
    let _ = writeln!(out, "recovery: {added} processes");
    for (j, t) in per_process.iter().enumerate() {
        let Some(t) = *t else { continue };
        let lines = describe_recovery(spec, enc, j, t)?;
        let _ = writeln!(out, "  process {} ({} guarded steps)", spec.processes[j].name, lines.len());
        for l in lines.iter().take(RECOVERY_LINES) {
            let _ = writeln!(out, "    {l}");
        }
        if lines.len() > RECOVERY_LINES {
            let _ = writeln!(out, "    ... {} more", lines.len() - RECOVERY_LINES);
        }
    }
    if mode == EmitMode::FullDump {
        let layout = enc.layout().clone();
        let _ = writeln!(out, "transitions:");
        let mut all: Vec<String> = enc
            .transitions(result.p_prime)?
            .into_iter()
            .map(|(a, b)| format!("  {} -> {}", layout.format_state(&a), layout.format_state(&b)))
            .collect();
        all.sort();
        for l in all {
            out.push_str(&l);
            out.push('\n');
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Rule;

    const SMALL: &str = "\
# two bits
system small
var x : {0,1}
var y : {0,1,B}
process p
  read x, y
  write y
  action a: x = 1 & !(y = B) -> y := 0 | 1
fault f: y != B -> y := B, x := x
invariant y != B
badtrans y = 0 & y' = 1
";

    #[test]
    fn parses_small_file() {
        let s = parse(SMALL).unwrap();
        assert_eq!(s.name, "small");
        assert_eq!(s.variables.len(), 2);
        assert_eq!(s.processes[0].actions[0].effect[0].alternatives.len(), 2);
        assert_eq!(s.faults[0].effect[1].alternatives[0], Term::var("x"));
        assert!(validate(&s).is_empty());
    }

    #[test]
    fn empty_input() {
        let e = parse("").unwrap_err();
        assert!(e.message.contains("expected 'system'"));
        let e = parse("  # nothing\n\n").unwrap_err();
        assert!(e.message.contains("expected 'system'"));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse("system s\nvar x : {0,1}\ninvariant x = \n").unwrap_err();
        assert_eq!((e.line, e.col), (3, 14));
        let e = parse("system s\nvar x : {0,1}\ninvariant x = 0 $\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert_eq!(e.col, 17);
    }

    #[test]
    fn undeclared_variable_is_a_validation_issue() {
        let text = "system s\nvar x : {0,1}\nprocess p\n  read x\n  write x\n  action a: zz = 0 -> x := 1\ninvariant true\nbadtrans false\n";
        let (_, diags) = check(text).unwrap();
        assert_eq!(diags.len(), 2, "{diags:?}");
        assert!(diags.iter().all(|d| d.line == 6));
        assert!(diags.iter().any(|d| d.diagnostic.rule == Rule::UndeclaredVariable));
    }

    #[test]
    fn bare_variable_means_true() {
        let text = "system s\nvar b : {false,true}\ninvariant !b\nbadtrans b & !b'\n";
        let s = parse(text).unwrap();
        assert_eq!(s.invariant, Expr::Not(Box::new(Expr::is("b", "true"))));
        assert!(validate(&s).is_empty());
    }

    #[test]
    fn round_trip_small() {
        let s = parse(SMALL).unwrap();
        assert_eq!(parse(&serialize(&s)).unwrap(), s);
    }

    #[test]
    fn nondeterministic_effect_round_trip() {
        let text = "system s\nvar d : {0,1,B}\nvar f : {false,true}\nfault F2: true -> d := 0 | 1, f := false | true\ninvariant true\nbadtrans false\n";
        let s = parse(text).unwrap();
        let again = parse(&serialize(&s)).unwrap();
        assert_eq!(again, s);
        assert_eq!(again.faults[0].effect[0].alternatives.len(), 2);
    }
}
