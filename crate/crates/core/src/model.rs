//! Synthesis inputs and outputs, independent of any diagram encoding.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::symbolic::{StateSet, TransitionSet};

/// An operand of an equality test or the right-hand side of an assignment.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    /// Next-state reference `v'`; only meaningful in bad-transition predicates.
    Primed(String),
    Const(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn primed(name: impl Into<String>) -> Term {
        Term::Primed(name.into())
    }

    pub fn constant(value: impl Into<String>) -> Term {
        Term::Const(value.into())
    }

    pub fn var_name(&self) -> Option<&str> {
        match self {
            Term::Var(v) | Term::Primed(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => f.write_str(v),
            Term::Primed(v) => write!(f, "{v}'"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Bool(bool),
    Eq(Term, Term),
    Ne(Term, Term),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

impl Expr {
    pub fn tt() -> Expr {
        Expr::Bool(true)
    }

    pub fn ff() -> Expr {
        Expr::Bool(false)
    }

    pub fn eq(a: Term, b: Term) -> Expr {
        Expr::Eq(a, b)
    }

    pub fn ne(a: Term, b: Term) -> Expr {
        Expr::Ne(a, b)
    }

    /// `v = c`
    pub fn is(var: &str, value: &str) -> Expr {
        Expr::Eq(Term::var(var), Term::constant(value))
    }

    /// `v != c`
    pub fn is_not(var: &str, value: &str) -> Expr {
        Expr::Ne(Term::var(var), Term::constant(value))
    }

    /// `v' = c`
    pub fn next_is(var: &str, value: &str) -> Expr {
        Expr::Eq(Term::primed(var), Term::constant(value))
    }

    /// `v' != c`
    pub fn next_is_not(var: &str, value: &str) -> Expr {
        Expr::Ne(Term::primed(var), Term::constant(value))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Expr {
        match e {
            Expr::Bool(b) => Expr::Bool(!b),
            e => Expr::Not(Box::new(e)),
        }
    }

    /// Conjunction; empty is `true`, a single operand is returned as is.
    pub fn and(mut items: Vec<Expr>) -> Expr {
        match items.len() {
            0 => Expr::tt(),
            1 => items.pop().unwrap(),
            _ => Expr::And(items),
        }
    }

    /// Disjunction; empty is `false`, a single operand is returned as is.
    pub fn or(mut items: Vec<Expr>) -> Expr {
        match items.len() {
            0 => Expr::ff(),
            1 => items.pop().unwrap(),
            _ => Expr::Or(items),
        }
    }

    pub fn for_each_term<'a>(&'a self, visit: &mut impl FnMut(&'a Term)) {
        match self {
            Expr::Bool(_) => {}
            Expr::Eq(a, b) | Expr::Ne(a, b) => {
                visit(a);
                visit(b);
            }
            Expr::Not(e) => e.for_each_term(visit),
            Expr::And(es) | Expr::Or(es) => es.iter().for_each(|e| e.for_each_term(visit)),
        }
    }

    /// Unprimed variables the expression reads.
    pub fn current_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.for_each_term(&mut |t| {
            if let Term::Var(v) = t {
                out.insert(v.clone());
            }
        });
        out
    }

    pub fn primed_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.for_each_term(&mut |t| {
            if let Term::Primed(v) = t {
                out.insert(v.clone());
            }
        });
        out
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Bool(true) => f.write_str("true"),
            Expr::Bool(false) => f.write_str("false"),
            Expr::Eq(a, b) => write!(f, "{a} = {b}"),
            Expr::Ne(a, b) => write!(f, "{a} != {b}"),
            Expr::Not(e) => write!(f, "!({e})"),
            Expr::And(es) | Expr::Or(es) => {
                let sep = if matches!(self, Expr::And(_)) { " & " } else { " | " };
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    write!(f, "({e})")?;
                }
                Ok(())
            }
        }
    }
}

/// `var := alt_1 | alt_2 | ...`, one alternative chosen nondeterministically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment {
    pub var: String,
    pub alternatives: Vec<Term>,
}

impl Assignment {
    pub fn new(var: impl Into<String>, alternatives: Vec<Term>) -> Self {
        Assignment {
            var: var.into(),
            alternatives,
        }
    }

    pub fn constant(var: impl Into<String>, value: impl Into<String>) -> Self {
        Assignment::new(var, vec![Term::constant(value)])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GuardedAction {
    pub name: String,
    pub guard: Expr,
    pub effect: Vec<Assignment>,
}

impl GuardedAction {
    pub fn new(name: impl Into<String>, guard: Expr, effect: Vec<Assignment>) -> Self {
        GuardedAction {
            name: name.into(),
            guard,
            effect,
        }
    }

    /// Current-state variables read by the guard or copied by the effect.
    pub fn reads(&self) -> BTreeSet<String> {
        let mut out = self.guard.current_vars();
        for a in &self.effect {
            for t in &a.alternatives {
                if let Term::Var(v) = t {
                    out.insert(v.clone());
                }
            }
        }
        out
    }

    pub fn writes(&self) -> Vec<&str> {
        self.effect.iter().map(|a| a.var.as_str()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessDecl {
    pub name: String,
    pub read: Vec<String>,
    pub write: Vec<String>,
    pub actions: Vec<GuardedAction>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub domain: Vec<String>,
}

impl VarDecl {
    pub fn new(name: impl Into<String>, domain: &[&str]) -> Self {
        VarDecl {
            name: name.into(),
            domain: domain.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemSpec {
    pub name: String,
    pub variables: Vec<VarDecl>,
    pub processes: Vec<ProcessDecl>,
    pub faults: Vec<GuardedAction>,
    pub invariant: Expr,
    pub badtrans: Expr,
}

impl SystemSpec {
    pub fn variable(&self, name: &str) -> Option<&VarDecl> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn process(&self, name: &str) -> Option<&ProcessDecl> {
        self.processes.iter().find(|p| p.name == name)
    }

    /// Distinct fault families; `F2_j` and `F2_k` both belong to `F2`.
    pub fn fault_families(&self) -> BTreeSet<String> {
        self.faults
            .iter()
            .map(|f| f.name.split('_').next().unwrap_or(&f.name).to_string())
            .collect()
    }

    /// Product of domain sizes, saturating.
    pub fn state_count(&self) -> u128 {
        self.variables
            .iter()
            .fold(1u128, |acc, v| acc.saturating_mul(v.domain.len() as u128))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Location {
    Variable(String),
    Process(String),
    Action { process: String, action: String },
    Fault(String),
    Invariant,
    BadTrans,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Variable(v) => write!(f, "var {v}"),
            Location::Process(p) => write!(f, "process {p}"),
            Location::Action { process, action } => write!(f, "process {process}, action {action}"),
            Location::Fault(n) => write!(f, "fault {n}"),
            Location::Invariant => f.write_str("invariant"),
            Location::BadTrans => f.write_str("badtrans"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    UndeclaredVariable,
    DuplicateName,
    DuplicateDomainValue,
    DomainTooSmall,
    ValueNotInDomain,
    WriteSetNotInReadSet,
    WriteOutsideWriteSet,
    ReadOutsideReadSet,
    PrimedOutsideBadTrans,
    DuplicateAssignment,
    EmptyAlternatives,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::UndeclaredVariable => "undeclared variable",
            Rule::DuplicateName => "duplicate name",
            Rule::DuplicateDomainValue => "duplicate domain value",
            Rule::DomainTooSmall => "domain needs at least 2 values",
            Rule::ValueNotInDomain => "value not in domain",
            Rule::WriteSetNotInReadSet => "W ⊆ R",
            Rule::WriteOutsideWriteSet => "action writes outside W",
            Rule::ReadOutsideReadSet => "action reads outside R",
            Rule::PrimedOutsideBadTrans => "primed variables only in badtrans",
            Rule::DuplicateAssignment => "assigned variables must be distinct",
            Rule::EmptyAlternatives => "assignment needs at least one alternative",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub rule: Rule,
    pub location: Location,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: [{}] {}", self.location, self.rule, self.message)
    }
}

struct Checker<'a> {
    domains: HashMap<&'a str, &'a [String]>,
    out: Vec<Diagnostic>,
}

impl<'a> Checker<'a> {
    fn report(&mut self, rule: Rule, location: &Location, message: String) {
        self.out.push(Diagnostic {
            rule,
            location: location.clone(),
            message,
        });
    }

    fn declared(&mut self, name: &str, location: &Location) -> bool {
        if self.domains.contains_key(name) {
            return true;
        }
        self.report(
            Rule::UndeclaredVariable,
            location,
            format!("'{name}' is not declared"),
        );
        false
    }

    fn expr(&mut self, e: &'a Expr, location: &Location, primes_allowed: bool) {
        match e {
            Expr::Bool(_) => {}
            Expr::Eq(a, b) | Expr::Ne(a, b) => {
                for t in [a, b] {
                    match t {
                        Term::Var(v) => {
                            self.declared(v, location);
                        }
                        Term::Primed(v) => {
                            if !primes_allowed {
                                self.report(
                                    Rule::PrimedOutsideBadTrans,
                                    location,
                                    format!("'{v}'' is primed"),
                                );
                            }
                            self.declared(v, location);
                        }
                        Term::Const(_) => {}
                    }
                }
                for (t, other) in [(a, b), (b, a)] {
                    if let (Term::Const(c), Some(v)) = (t, other.var_name()) {
                        self.value_in_domain(v, c, location);
                    }
                }
            }
            Expr::Not(e) => self.expr(e, location, primes_allowed),
            Expr::And(es) | Expr::Or(es) => {
                for e in es {
                    self.expr(e, location, primes_allowed);
                }
            }
        }
    }

    fn value_in_domain(&mut self, var: &str, value: &str, location: &Location) {
        if let Some(dom) = self.domains.get(var) {
            if !dom.iter().any(|d| d == value) {
                self.report(
                    Rule::ValueNotInDomain,
                    location,
                    format!("'{value}' is not a value of '{var}'"),
                );
            }
        }
    }

    fn action(&mut self, a: &'a GuardedAction, location: &Location) {
        self.expr(&a.guard, location, false);
        let mut seen = HashSet::new();
        for asg in &a.effect {
            if !seen.insert(asg.var.as_str()) {
                self.report(
                    Rule::DuplicateAssignment,
                    location,
                    format!("'{}' assigned twice", asg.var),
                );
            }
            self.declared(&asg.var, location);
            if asg.alternatives.is_empty() {
                self.report(
                    Rule::EmptyAlternatives,
                    location,
                    format!("'{}' has no value", asg.var),
                );
            }
            for t in &asg.alternatives {
                match t {
                    Term::Const(c) => self.value_in_domain(&asg.var, c, location),
                    Term::Var(v) => {
                        self.declared(v, location);
                    }
                    Term::Primed(v) => self.report(
                        Rule::PrimedOutsideBadTrans,
                        location,
                        format!("'{v}'' is primed"),
                    ),
                }
            }
        }
    }
}

/// Checks every well-formedness rule; an empty list means the system is valid.
pub fn validate(spec: &SystemSpec) -> Vec<Diagnostic> {
    let mut c = Checker {
        domains: HashMap::new(),
        out: Vec::new(),
    };
    for v in &spec.variables {
        let loc = Location::Variable(v.name.clone());
        if c.domains.insert(&v.name, &v.domain).is_some() {
            c.report(Rule::DuplicateName, &loc, format!("variable '{}' declared twice", v.name));
        }
        if v.domain.len() < 2 {
            c.report(
                Rule::DomainTooSmall,
                &loc,
                format!("'{}' has {} value(s)", v.name, v.domain.len()),
            );
        }
        let mut seen = HashSet::new();
        for d in &v.domain {
            if !seen.insert(d) {
                c.report(Rule::DuplicateDomainValue, &loc, format!("'{d}' repeated"));
            }
        }
    }

    let mut process_names = HashSet::new();
    for p in &spec.processes {
        let ploc = Location::Process(p.name.clone());
        if !process_names.insert(&p.name) {
            c.report(Rule::DuplicateName, &ploc, format!("process '{}' declared twice", p.name));
        }
        for v in p.read.iter().chain(&p.write) {
            c.declared(v, &ploc);
        }
        for w in &p.write {
            if !p.read.contains(w) {
                c.report(
                    Rule::WriteSetNotInReadSet,
                    &ploc,
                    format!("'{w}' is writable but not readable"),
                );
            }
        }
        let mut action_names = HashSet::new();
        for a in &p.actions {
            let aloc = Location::Action {
                process: p.name.clone(),
                action: a.name.clone(),
            };
            if !action_names.insert(&a.name) {
                c.report(Rule::DuplicateName, &aloc, format!("action '{}' declared twice", a.name));
            }
            c.action(a, &aloc);
            for w in a.writes() {
                if !p.write.iter().any(|x| x == w) {
                    c.report(
                        Rule::WriteOutsideWriteSet,
                        &aloc,
                        format!("action '{}' writes '{w}', which is not in W", a.name),
                    );
                }
            }
            for r in a.reads() {
                if !p.read.contains(&r) {
                    c.report(
                        Rule::ReadOutsideReadSet,
                        &aloc,
                        format!("action '{}' reads '{r}', which is not in R", a.name),
                    );
                }
            }
        }
    }

    let mut fault_names = HashSet::new();
    for f in &spec.faults {
        let loc = Location::Fault(f.name.clone());
        if !fault_names.insert(&f.name) {
            c.report(Rule::DuplicateName, &loc, format!("fault '{}' declared twice", f.name));
        }
        c.action(f, &loc);
    }

    c.expr(&spec.invariant, &Location::Invariant, false);
    c.expr(&spec.badtrans, &Location::BadTrans, true);
    c.out
}

/// Timing and counting data gathered by one synthesis run. Times are seconds.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SynthesisStats {
    pub iterations: u32,
    pub group_calls: u64,
    pub group_wall_time: f64,
    pub deadlock_resolution_time: f64,
    pub total_time: f64,
    /// Deadlock states found per outer iteration (minterm counts).
    pub deadlock_count_per_iteration: Vec<f64>,
    pub worker_count: usize,
}

/// Output of a successful synthesis run. All sets share one encoding.
#[derive(Clone, Debug)]
pub struct SynthesisResult {
    pub p_prime: TransitionSet,
    pub s_prime: StateSet,
    pub fault_span: StateSet,
    /// Recovery groups added, per process index.
    pub added_recovery: Vec<(usize, TransitionSet)>,
    pub removed_groups: Vec<TransitionSet>,
    pub stats: SynthesisStats,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SystemSpec {
        SystemSpec {
            name: "tiny".into(),
            variables: vec![VarDecl::new("x", &["0", "1"]), VarDecl::new("y", &["0", "1"])],
            processes: vec![ProcessDecl {
                name: "p".into(),
                read: vec!["x".into(), "y".into()],
                write: vec!["x".into()],
                actions: vec![GuardedAction::new(
                    "a",
                    Expr::is("y", "1"),
                    vec![Assignment::constant("x", "1")],
                )],
            }],
            faults: vec![],
            invariant: Expr::is("x", "0"),
            badtrans: Expr::and(vec![Expr::is("x", "1"), Expr::next_is("x", "0")]),
        }
    }

    #[test]
    fn valid_spec_has_no_diagnostics() {
        assert!(validate(&tiny()).is_empty());
    }

    #[test]
    fn write_outside_w_names_the_action() {
        let mut s = tiny();
        s.processes[0].actions[0].effect.push(Assignment::constant("y", "0"));
        let d = validate(&s);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].rule, Rule::WriteOutsideWriteSet);
        assert!(d[0].message.contains("'a'"));
    }

    #[test]
    fn w_not_subset_of_r() {
        let mut s = tiny();
        s.processes[0].read = vec!["y".into()];
        let d = validate(&s);
        assert!(d.iter().any(|d| d.rule == Rule::WriteSetNotInReadSet));
        assert!(d.iter().any(|d| d.to_string().contains("W ⊆ R")));
    }

    #[test]
    fn other_rules() {
        let mut s = tiny();
        s.variables.push(VarDecl::new("z", &["a"]));
        s.variables.push(VarDecl::new("x", &["0", "0"]));
        s.invariant = Expr::and(vec![Expr::is("q", "0"), Expr::next_is("x", "1"), Expr::is("y", "7")]);
        let rules: HashSet<Rule> = validate(&s).into_iter().map(|d| d.rule).collect();
        for r in [
            Rule::DomainTooSmall,
            Rule::DuplicateName,
            Rule::DuplicateDomainValue,
            Rule::UndeclaredVariable,
            Rule::PrimedOutsideBadTrans,
            Rule::ValueNotInDomain,
        ] {
            assert!(rules.contains(&r), "{r:?} missing");
        }
    }

    #[test]
    fn smart_constructors_normalize() {
        assert_eq!(Expr::and(vec![]), Expr::tt());
        assert_eq!(Expr::or(vec![]), Expr::ff());
        assert_eq!(Expr::and(vec![Expr::is("x", "0")]), Expr::is("x", "0"));
        assert_eq!(Expr::not(Expr::tt()), Expr::ff());
    }
}
