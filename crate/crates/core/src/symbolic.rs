//! Binary encoding of a [`SystemSpec`] and the basic symbolic operations on it.
//!
//! Each variable gets `ceil(log2 |domain|)` state bits; value `k` of the
//! domain is stored as the binary code of `k`. Codes past the end of a domain
//! are excluded by the domain constraint `D`, which every set built here
//! implies (on both rails for transition sets).

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigUint;
use thiserror::Error;

use crate::ddengine::{BinOp, DdError, DdManager, DdNode, RailDirection, VarIndex, VarSet};
use crate::model::{Expr, GuardedAction, SystemSpec, Term};

pub const DEFAULT_MAX_BITS: u32 = 2048;
pub const MAX_BITS_ENV: &str = "FTREVISE_MAX_BITS";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("encoding needs {needed} state bits, more than the limit of {limit}")]
    TooManyBits { needed: u32, limit: u32 },
    #[error("unknown variable '{0}'")]
    UnknownVariable(String),
    #[error("'{value}' is not a value of '{var}'")]
    UnknownValue { var: String, value: String },
    #[error(transparent)]
    Dd(#[from] DdError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarLayout {
    pub name: String,
    pub domain: Vec<String>,
    pub first_bit: u32,
    pub width: u32,
}

impl VarLayout {
    pub fn cur_index(&self, j: u32) -> VarIndex {
        2 * (self.first_bit + j)
    }

    pub fn next_index(&self, j: u32) -> VarIndex {
        2 * (self.first_bit + j) + 1
    }

    pub fn value_index(&self, value: &str) -> Option<usize> {
        self.domain.iter().position(|d| d == value)
    }
}

/// Variable-to-bit assignment; independent of any manager, shared by workers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    vars: Vec<VarLayout>,
    index: HashMap<String, usize>,
    state_bits: u32,
}

fn bits_for(size: usize) -> u32 {
    let mut w = 1;
    while (1usize << w) < size {
        w += 1;
    }
    w
}

impl Layout {
    pub fn new(spec: &SystemSpec) -> Layout {
        let mut vars = Vec::new();
        let mut index = HashMap::new();
        let mut next = 0;
        for v in &spec.variables {
            let width = bits_for(v.domain.len());
            index.insert(v.name.clone(), vars.len());
            vars.push(VarLayout {
                name: v.name.clone(),
                domain: v.domain.clone(),
                first_bit: next,
                width,
            });
            next += width;
        }
        Layout {
            vars,
            index,
            state_bits: next,
        }
    }

    pub fn vars(&self) -> &[VarLayout] {
        &self.vars
    }

    pub fn var(&self, name: &str) -> Option<&VarLayout> {
        self.index.get(name).map(|&i| &self.vars[i])
    }

    pub fn var_position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn state_bits(&self) -> u32 {
        self.state_bits
    }

    /// Manager variables: both rails.
    pub fn dd_vars(&self) -> u32 {
        2 * self.state_bits
    }

    /// A short text fingerprint of variables and domains.
    pub fn signature(&self) -> String {
        self.vars
            .iter()
            .map(|v| format!("{}:{}", v.name, v.domain.join("/")))
            .collect::<Vec<_>>()
            .join(";")
    }

    /// Explicit state count (product of domain sizes).
    pub fn state_count(&self) -> BigUint {
        self.vars
            .iter()
            .fold(BigUint::from(1u32), |acc, v| acc * BigUint::from(v.domain.len()))
    }

    /// Decodes a manager assignment (indexed by decision variable) into value
    /// indices, reading the current rail or the next rail.
    pub fn decode(&self, assignment: &[bool], next: bool) -> Vec<usize> {
        self.vars
            .iter()
            .map(|v| {
                (0..v.width).fold(0usize, |acc, j| {
                    let idx = if next { v.next_index(j) } else { v.cur_index(j) };
                    acc | (assignment[idx as usize] as usize) << j
                })
            })
            .collect()
    }

    pub fn format_state(&self, state: &[usize]) -> String {
        self.vars
            .iter()
            .zip(state)
            .map(|(v, &k)| format!("{}={}", v.name, v.domain.get(k).map(String::as_str).unwrap_or("?")))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub fn max_bits_from_env() -> u32 {
    std::env::var(MAX_BITS_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_BITS)
}

/// A set of states (current rail only).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StateSet(pub DdNode);

/// A set of transitions (both rails).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TransitionSet(pub DdNode);

pub trait Predicate: Copy {
    fn node(self) -> DdNode;
    fn wrap(n: DdNode) -> Self;
}

impl Predicate for StateSet {
    fn node(self) -> DdNode {
        self.0
    }
    fn wrap(n: DdNode) -> Self {
        StateSet(n)
    }
}

impl Predicate for TransitionSet {
    fn node(self) -> DdNode {
        self.0
    }
    fn wrap(n: DdNode) -> Self {
        TransitionSet(n)
    }
}

impl StateSet {
    pub fn is_empty(self) -> bool {
        self.0.is_false()
    }
}

impl TransitionSet {
    pub fn is_empty(self) -> bool {
        self.0.is_false()
    }
}

pub type SymResult<T> = Result<T, EncodeError>;

fn code_in(mgr: &mut DdManager, v: &VarLayout, k: usize, next: bool) -> SymResult<DdNode> {
    let mut acc = mgr.tru();
    for j in 0..v.width {
        let idx = if next { v.next_index(j) } else { v.cur_index(j) };
        let lit = mgr.literal(idx, (k >> j) & 1 == 1)?;
        acc = mgr.and(acc, lit)?;
    }
    Ok(acc)
}

/// A manager together with the layout and the domain constraints.
pub struct Encoding {
    layout: Arc<Layout>,
    pub mgr: DdManager,
    cur: VarSet,
    next: VarSet,
    both: VarSet,
    domain: StateSet,
    domain_next: DdNode,
}

impl std::fmt::Debug for Encoding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Encoding")
            .field("state_bits", &self.layout.state_bits)
            .field("mgr", &self.mgr)
            .finish()
    }
}

impl Encoding {
    pub fn new(layout: Arc<Layout>) -> SymResult<Encoding> {
        let mgr = DdManager::new(layout.dd_vars().max(2))?;
        Encoding::with_manager(layout, mgr)
    }

    /// Builds an encoding around an existing manager with the right width.
    pub fn with_manager(layout: Arc<Layout>, mgr: DdManager) -> SymResult<Encoding> {
        if mgr.var_count() != layout.dd_vars().max(2) {
            return Err(DdError::OrderMismatch {
                src: layout.dd_vars(),
                dst: mgr.var_count(),
            }
            .into());
        }
        let n = layout.state_bits;
        let cur: VarSet = (0..n).map(|i| 2 * i).collect();
        let next: VarSet = (0..n).map(|i| 2 * i + 1).collect();
        let both = cur.union(&next);
        let mut mgr = mgr;
        let mut d = mgr.tru();
        let mut dn = mgr.tru();
        for v in &layout.vars {
            if v.domain.len() < 1 << v.width {
                let mut ok = mgr.fls();
                let mut okn = mgr.fls();
                for k in 0..v.domain.len() {
                    let c = code_in(&mut mgr, v, k, false)?;
                    ok = mgr.or(ok, c)?;
                    let c = code_in(&mut mgr, v, k, true)?;
                    okn = mgr.or(okn, c)?;
                }
                d = mgr.and(d, ok)?;
                dn = mgr.and(dn, okn)?;
            }
        }
        Ok(Encoding {
            layout,
            mgr,
            cur,
            next,
            both,
            domain: StateSet(d),
            domain_next: dn,
        })
    }

    /// Fresh encoding over a clone of this manager (same variables, empty).
    pub fn fresh(&self) -> SymResult<Encoding> {
        Encoding::with_manager(self.layout.clone(), self.mgr.clone_manager())
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn cur_vars(&self) -> &VarSet {
        &self.cur
    }

    pub fn next_vars(&self) -> &VarSet {
        &self.next
    }

    pub fn all_vars(&self) -> &VarSet {
        &self.both
    }

    pub fn domain(&self) -> StateSet {
        self.domain
    }

    pub fn domain_next(&self) -> DdNode {
        self.domain_next
    }

    /// `D ∧ D'`
    pub fn domain_both(&mut self) -> SymResult<TransitionSet> {
        Ok(TransitionSet(self.mgr.and(self.domain.0, self.domain_next)?))
    }

    fn code(&mut self, v: &VarLayout, k: usize, next: bool) -> SymResult<DdNode> {
        code_in(&mut self.mgr, v, k, next)
    }

    fn lookup(&self, name: &str) -> SymResult<VarLayout> {
        self.layout
            .var(name)
            .cloned()
            .ok_or_else(|| EncodeError::UnknownVariable(name.to_string()))
    }

    /// `var = value` on the chosen rail.
    pub fn value(&mut self, var: &str, value: &str, next: bool) -> SymResult<DdNode> {
        let v = self.lookup(var)?;
        let k = v.value_index(value).ok_or_else(|| EncodeError::UnknownValue {
            var: var.to_string(),
            value: value.to_string(),
        })?;
        self.code(&v, k, next)
    }

    /// `var = k` for a value index.
    pub fn value_at(&mut self, var: usize, k: usize, next: bool) -> SymResult<DdNode> {
        let v = self.layout.vars[var].clone();
        self.code(&v, k, next)
    }

    /// `v = v'`
    pub fn unchanged(&mut self, var: &str) -> SymResult<DdNode> {
        let v = self.lookup(var)?;
        let mut acc = self.mgr.tru();
        for j in 0..v.width {
            let c = self.mgr.var(v.cur_index(j))?;
            let n = self.mgr.var(v.next_index(j))?;
            let e = self.mgr.iff(c, n)?;
            acc = self.mgr.and(acc, e)?;
        }
        Ok(acc)
    }

    /// Bits (both rails) of the given variables.
    pub fn bits_of<'a, I: IntoIterator<Item = &'a str>>(&self, names: I) -> SymResult<VarSet> {
        let mut out = Vec::new();
        for n in names {
            let v = self.lookup(n)?;
            for j in 0..v.width {
                out.push(v.cur_index(j));
                out.push(v.next_index(j));
            }
        }
        Ok(VarSet::new(out))
    }

    fn term_eq(&mut self, a: &Term, b: &Term) -> SymResult<DdNode> {
        let side = |t: &Term| match t {
            Term::Var(v) => Some((v.clone(), false)),
            Term::Primed(v) => Some((v.clone(), true)),
            Term::Const(_) => None,
        };
        match (side(a), side(b), a, b) {
            (None, None, Term::Const(x), Term::Const(y)) => Ok(self.mgr.constant(x == y)),
            (Some((v, nx)), None, _, Term::Const(c)) | (None, Some((v, nx)), Term::Const(c), _) => {
                let lay = self.lookup(&v)?;
                match lay.value_index(c) {
                    Some(k) => self.code(&lay, k, nx),
                    None => Ok(self.mgr.fls()),
                }
            }
            (Some((va, na)), Some((vb, nb)), _, _) => {
                let la = self.lookup(&va)?;
                let lb = self.lookup(&vb)?;
                let mut acc = self.mgr.fls();
                for (ka, val) in la.domain.iter().enumerate() {
                    if let Some(kb) = lb.value_index(val) {
                        let x = self.code(&la, ka, na)?;
                        let y = self.code(&lb, kb, nb)?;
                        let both = self.mgr.and(x, y)?;
                        acc = self.mgr.or(acc, both)?;
                    }
                }
                Ok(acc)
            }
            _ => unreachable!(),
        }
    }

    /// Raw characteristic function of an expression (not restricted to `D`).
    pub fn expr(&mut self, e: &Expr) -> SymResult<DdNode> {
        match e {
            Expr::Bool(b) => Ok(self.mgr.constant(*b)),
            Expr::Eq(a, b) => self.term_eq(a, b),
            Expr::Ne(a, b) => {
                let x = self.term_eq(a, b)?;
                Ok(self.mgr.not(x)?)
            }
            Expr::Not(x) => {
                let x = self.expr(x)?;
                Ok(self.mgr.not(x)?)
            }
            Expr::And(es) => {
                let mut acc = self.mgr.tru();
                for x in es {
                    let x = self.expr(x)?;
                    acc = self.mgr.and(acc, x)?;
                }
                Ok(acc)
            }
            Expr::Or(es) => {
                let mut acc = self.mgr.fls();
                for x in es {
                    let x = self.expr(x)?;
                    acc = self.mgr.or(acc, x)?;
                }
                Ok(acc)
            }
        }
    }

    pub fn state_predicate(&mut self, e: &Expr) -> SymResult<StateSet> {
        let x = self.expr(e)?;
        Ok(StateSet(self.mgr.and(x, self.domain.0)?))
    }

    pub fn transition_predicate(&mut self, e: &Expr) -> SymResult<TransitionSet> {
        let x = self.expr(e)?;
        let d = self.domain_both()?;
        Ok(TransitionSet(self.mgr.and(x, d.0)?))
    }

    /// guard ∧ effect ∧ frame (every unassigned variable keeps its value).
    pub fn action(&mut self, a: &GuardedAction) -> SymResult<TransitionSet> {
        let mut acc = self.expr(&a.guard)?;
        for asg in &a.effect {
            let mut choice = self.mgr.fls();
            for alt in &asg.alternatives {
                let target = Term::Primed(asg.var.clone());
                let c = self.term_eq(&target, alt)?;
                choice = self.mgr.or(choice, c)?;
            }
            acc = self.mgr.and(acc, choice)?;
        }
        let names: Vec<String> = self.layout.vars.iter().map(|v| v.name.clone()).collect();
        for n in names {
            if !a.effect.iter().any(|x| x.var == n) {
                let u = self.unchanged(&n)?;
                acc = self.mgr.and(acc, u)?;
            }
        }
        let d = self.domain_both()?;
        Ok(TransitionSet(self.mgr.and(acc, d.0)?))
    }

    // ---- set algebra ----

    pub fn and<P: Predicate>(&mut self, a: P, b: P) -> SymResult<P> {
        Ok(P::wrap(self.mgr.apply(BinOp::And, a.node(), b.node())?))
    }

    pub fn or<P: Predicate>(&mut self, a: P, b: P) -> SymResult<P> {
        Ok(P::wrap(self.mgr.apply(BinOp::Or, a.node(), b.node())?))
    }

    pub fn diff<P: Predicate>(&mut self, a: P, b: P) -> SymResult<P> {
        Ok(P::wrap(self.mgr.apply(BinOp::Diff, a.node(), b.node())?))
    }

    pub fn empty_states(&self) -> StateSet {
        StateSet(self.mgr.fls())
    }

    pub fn empty_transitions(&self) -> TransitionSet {
        TransitionSet(self.mgr.fls())
    }

    /// Complement within `D`.
    pub fn complement(&mut self, a: StateSet) -> SymResult<StateSet> {
        Ok(StateSet(self.mgr.diff(self.domain.0, a.0)?))
    }

    pub fn subset<P: Predicate>(&mut self, a: P, b: P) -> SymResult<bool> {
        Ok(self.mgr.diff(a.node(), b.node())?.is_false())
    }

    pub fn intersects<P: Predicate>(&mut self, a: P, b: P) -> SymResult<bool> {
        Ok(!self.mgr.and(a.node(), b.node())?.is_false())
    }

    /// The set on the next rail, as a raw node.
    pub fn primed(&mut self, x: StateSet) -> SymResult<DdNode> {
        Ok(self.mgr.rename(x.0, RailDirection::CurrentToNext)?)
    }

    /// Transitions with source in `x`.
    pub fn from(&mut self, t: TransitionSet, x: StateSet) -> SymResult<TransitionSet> {
        Ok(TransitionSet(self.mgr.and(t.0, x.0)?))
    }

    /// Transitions with target in `x`.
    pub fn to(&mut self, t: TransitionSet, x: StateSet) -> SymResult<TransitionSet> {
        let xp = self.primed(x)?;
        Ok(TransitionSet(self.mgr.and(t.0, xp)?))
    }

    /// All transitions (within `D × D`) from `x` to `y`.
    pub fn product(&mut self, x: StateSet, y: StateSet) -> SymResult<TransitionSet> {
        let yp = self.primed(y)?;
        Ok(TransitionSet(self.mgr.and(x.0, yp)?))
    }

    pub fn sources(&mut self, t: TransitionSet) -> SymResult<StateSet> {
        Ok(StateSet(self.mgr.exists(t.0, &self.next.clone())?))
    }

    pub fn targets(&mut self, t: TransitionSet) -> SymResult<StateSet> {
        let x = self.mgr.exists(t.0, &self.cur.clone())?;
        Ok(StateSet(self.mgr.rename(x, RailDirection::NextToCurrent)?))
    }

    pub fn image(&mut self, t: TransitionSet, x: StateSet) -> SymResult<StateSet> {
        let cur = self.cur.clone();
        let y = self.mgr.and_exists(t.0, x.0, &cur)?;
        Ok(StateSet(self.mgr.rename(y, RailDirection::NextToCurrent)?))
    }

    pub fn preimage(&mut self, t: TransitionSet, x: StateSet) -> SymResult<StateSet> {
        let xp = self.primed(x)?;
        let next = self.next.clone();
        Ok(StateSet(self.mgr.and_exists(t.0, xp, &next)?))
    }

    /// Least fixpoint containing `init` and closed under `image(t, ·)`.
    pub fn forward_reach(&mut self, init: StateSet, t: TransitionSet) -> SymResult<StateSet> {
        let mut reached = init;
        let mut frontier = init;
        while !frontier.is_empty() {
            let img = self.image(t, frontier)?;
            frontier = self.diff(img, reached)?;
            reached = self.or(reached, frontier)?;
        }
        Ok(reached)
    }

    /// States that can reach `target` through `t` (including `target`).
    pub fn backward_reach(&mut self, target: StateSet, t: TransitionSet) -> SymResult<StateSet> {
        let mut reached = target;
        let mut frontier = target;
        while !frontier.is_empty() {
            let pre = self.preimage(t, frontier)?;
            frontier = self.diff(pre, reached)?;
            reached = self.or(reached, frontier)?;
        }
        Ok(reached)
    }

    pub fn fault_span(
        &mut self,
        s_prime: StateSet,
        p_prime: TransitionSet,
        f: TransitionSet,
    ) -> SymResult<StateSet> {
        let t = self.or(p_prime, f)?;
        self.forward_reach(s_prime, t)
    }

    /// Largest subset of `within` in which every state has a `t`-successor
    /// inside the subset (the states that lie on or lead into a cycle).
    pub fn cycle_core(&mut self, within: StateSet, t: TransitionSet) -> SymResult<StateSet> {
        let mut z = within;
        loop {
            let pre = self.preimage(t, z)?;
            let next = self.and(z, pre)?;
            if next == z {
                return Ok(z);
            }
            z = next;
        }
    }

    // ---- counting and enumeration ----

    pub fn count_states(&self, x: StateSet) -> SymResult<BigUint> {
        Ok(self.mgr.count_minterms_over(x.0, &self.cur)?)
    }

    pub fn count_transitions(&self, t: TransitionSet) -> SymResult<BigUint> {
        Ok(self.mgr.count_minterms_over(t.0, &self.both)?)
    }

    /// Approximate size as a float, for statistics.
    pub fn count_states_f64(&self, x: StateSet) -> f64 {
        self.count_states(x)
            .map(|c| c.to_string().parse::<f64>().unwrap_or(f64::INFINITY))
            .unwrap_or(0.0)
    }

    /// Every state of `x`, as value indices.
    pub fn states(&self, x: StateSet) -> SymResult<Vec<Vec<usize>>> {
        let mut out = Vec::new();
        let layout = self.layout.clone();
        self.mgr
            .for_each_minterm(x.0, &self.cur, |a| out.push(layout.decode(a, false)))?;
        Ok(out)
    }

    /// Every transition of `t`, as (source, target) value indices.
    pub fn transitions(&self, t: TransitionSet) -> SymResult<Vec<(Vec<usize>, Vec<usize>)>> {
        let mut out = Vec::new();
        let layout = self.layout.clone();
        self.mgr.for_each_minterm(t.0, &self.both, |a| {
            out.push((layout.decode(a, false), layout.decode(a, true)))
        })?;
        Ok(out)
    }

    pub fn pick_state(&self, x: StateSet) -> SymResult<Option<Vec<usize>>> {
        Ok(self
            .mgr
            .pick_minterm(x.0)?
            .map(|a| self.layout.decode(&a, false)))
    }

    pub fn pick_transition(&self, t: TransitionSet) -> SymResult<Option<(Vec<usize>, Vec<usize>)>> {
        Ok(self
            .mgr
            .pick_minterm(t.0)?
            .map(|a| (self.layout.decode(&a, false), self.layout.decode(&a, true))))
    }

    /// The single state with the given value indices.
    pub fn state(&mut self, values: &[usize]) -> SymResult<StateSet> {
        let mut acc = self.mgr.tru();
        for (i, &k) in values.iter().enumerate() {
            let c = self.value_at(i, k, false)?;
            acc = self.mgr.and(acc, c)?;
        }
        Ok(StateSet(acc))
    }

    pub fn transition(&mut self, src: &[usize], dst: &[usize]) -> SymResult<TransitionSet> {
        let s = self.state(src)?;
        let d = self.state(dst)?;
        self.product(s, d)
    }
}

/// The encoded form of a system.
#[derive(Debug)]
pub struct Encoded {
    pub enc: Encoding,
    pub processes: Vec<TransitionSet>,
    pub program: TransitionSet,
    pub faults: TransitionSet,
    pub invariant: StateSet,
    pub badtrans: TransitionSet,
}

pub fn encode(spec: &SystemSpec) -> SymResult<Encoded> {
    encode_with_limit(spec, max_bits_from_env())
}

pub fn encode_with_limit(spec: &SystemSpec, max_bits: u32) -> SymResult<Encoded> {
    let layout = Layout::new(spec);
    if layout.state_bits() > max_bits {
        return Err(EncodeError::TooManyBits {
            needed: layout.state_bits(),
            limit: max_bits,
        });
    }
    let mut enc = Encoding::new(Arc::new(layout))?;
    let mut processes = Vec::new();
    let mut program = enc.empty_transitions();
    for p in &spec.processes {
        let mut t = enc.empty_transitions();
        for a in &p.actions {
            let x = enc.action(a)?;
            t = enc.or(t, x)?;
        }
        program = enc.or(program, t)?;
        processes.push(t);
    }
    let mut faults = enc.empty_transitions();
    for f in &spec.faults {
        let x = enc.action(f)?;
        faults = enc.or(faults, x)?;
    }
    let invariant = enc.state_predicate(&spec.invariant)?;
    let badtrans = enc.transition_predicate(&spec.badtrans)?;
    Ok(Encoded {
        enc,
        processes,
        program,
        faults,
        invariant,
        badtrans,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    const RING: &str = "\
system tiny
var x : {0,1,B}
var y : {0,1}
process p
  read x, y
  write x
  action copy: x != y -> x := y
fault f: x != B -> x := B
invariant x != B
badtrans false
";

    #[test]
    fn domain_constraint_excludes_unused_codes() {
        let e = encode(&parse(RING).unwrap()).unwrap();
        assert_eq!(e.enc.count_states(e.enc.domain()).unwrap(), BigUint::from(6u32));
        assert_eq!(e.enc.layout().state_bits(), 3);
    }

    #[test]
    fn false_guard_is_empty() {
        let spec = parse(RING).unwrap();
        let mut e = encode(&spec).unwrap();
        let a = GuardedAction::new("never", Expr::ff(), vec![]);
        assert!(e.enc.action(&a).unwrap().is_empty());
    }

    #[test]
    fn image_and_preimage_basics() {
        let mut e = encode(&parse(RING).unwrap()).unwrap();
        let enc = &mut e.enc;
        let d = enc.domain();
        let empty = enc.empty_transitions();
        assert!(enc.image(empty, d).unwrap().is_empty());
        let pre = enc.preimage(e.program, d).unwrap();
        assert_eq!(pre, enc.sources(e.program).unwrap());
        // x != y: (0,1), (1,0), (B,0), (B,1)
        assert_eq!(enc.count_states(pre).unwrap(), BigUint::from(4u32));
        let r = enc.forward_reach(e.invariant, empty).unwrap();
        assert_eq!(r, e.invariant);
    }

    #[test]
    fn reach_is_a_fixpoint() {
        let mut e = encode(&parse(RING).unwrap()).unwrap();
        let t = e.enc.or(e.program, e.faults).unwrap();
        let r = e.enc.forward_reach(e.invariant, t).unwrap();
        assert_eq!(e.enc.forward_reach(r, t).unwrap(), r);
        assert_eq!(e.enc.count_states(r).unwrap(), BigUint::from(6u32));
    }

    #[test]
    fn too_many_bits() {
        let spec = parse(RING).unwrap();
        assert!(matches!(
            encode_with_limit(&spec, 2),
            Err(EncodeError::TooManyBits { needed: 3, limit: 2 })
        ));
    }

    #[test]
    fn state_round_trip() {
        let mut e = encode(&parse(RING).unwrap()).unwrap();
        let s = e.enc.state(&[2, 1]).unwrap();
        assert_eq!(e.enc.states(s).unwrap(), vec![vec![2, 1]]);
        assert_eq!(e.enc.layout().format_state(&[2, 1]), "x=B y=1");
    }
}
