//! Brute-force explicit-state model of a small system.
//!
//! States are numbered in mixed radix over the domain sizes (first variable
//! least significant). Everything here interprets the AST directly and never
//! touches the decision-diagram code.

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::model::{Expr, GuardedAction, SystemSpec, Term};

pub const DEFAULT_LIMIT: u64 = 1_000_000;

pub type State = u32;
pub type Edge = (State, State);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("state space of {count} states exceeds the explicit limit of {limit}")]
    TooLarge { count: u128, limit: u64 },
    #[error("unknown variable '{0}'")]
    UnknownVariable(String),
}

#[derive(Clone, Debug)]
pub struct ExplicitModel {
    names: Vec<String>,
    domains: Vec<Vec<String>>,
    index: HashMap<String, usize>,
    radix: Vec<u32>,
    count: u32,
    /// Per process: sorted, deduplicated transitions.
    pub processes: Vec<Vec<Edge>>,
    pub faults: Vec<Edge>,
    pub invariant: Vec<bool>,
    read: Vec<Vec<bool>>,
    write: Vec<Vec<bool>>,
    badtrans: Expr,
}

impl ExplicitModel {
    pub fn build(spec: &SystemSpec, limit: u64) -> Result<ExplicitModel, OracleError> {
        let count = spec.state_count();
        if count > limit as u128 {
            return Err(OracleError::TooLarge { count, limit });
        }
        let names: Vec<String> = spec.variables.iter().map(|v| v.name.clone()).collect();
        let index: HashMap<String, usize> = names.iter().cloned().enumerate().map(|(i, n)| (n, i)).collect();
        let domains: Vec<Vec<String>> = spec.variables.iter().map(|v| v.domain.clone()).collect();
        let mut radix = Vec::new();
        let mut r = 1u32;
        for d in &domains {
            radix.push(r);
            r *= d.len() as u32;
        }
        let mask = |set: &[String]| -> Result<Vec<bool>, OracleError> {
            let mut m = vec![false; names.len()];
            for v in set {
                m[*index.get(v).ok_or_else(|| OracleError::UnknownVariable(v.clone()))?] = true;
            }
            Ok(m)
        };
        let mut model = ExplicitModel {
            read: spec.processes.iter().map(|p| mask(&p.read)).collect::<Result<_, _>>()?,
            write: spec.processes.iter().map(|p| mask(&p.write)).collect::<Result<_, _>>()?,
            names,
            domains,
            index,
            radix,
            count: count as u32,
            processes: Vec::new(),
            faults: Vec::new(),
            invariant: Vec::new(),
            badtrans: spec.badtrans.clone(),
        };
        for p in &spec.processes {
            let mut edges = Vec::new();
            for a in &p.actions {
                model.action_edges(a, &mut edges)?;
            }
            edges.sort_unstable();
            edges.dedup();
            model.processes.push(edges);
        }
        let mut faults = Vec::new();
        for f in &spec.faults {
            model.action_edges(f, &mut faults)?;
        }
        faults.sort_unstable();
        faults.dedup();
        model.faults = faults;
        let mut inv = Vec::with_capacity(model.count as usize);
        for s in 0..model.count {
            inv.push(model.eval(&spec.invariant, s, None)?);
        }
        model.invariant = inv;
        Ok(model)
    }

    pub fn state_count(&self) -> u32 {
        self.count
    }

    pub fn var_count(&self) -> usize {
        self.names.len()
    }

    pub fn value(&self, s: State, var: usize) -> usize {
        ((s / self.radix[var]) % self.domains[var].len() as u32) as usize
    }

    pub fn with_value(&self, s: State, var: usize, k: usize) -> State {
        let old = self.value(s, var) as u32;
        s - old * self.radix[var] + k as u32 * self.radix[var]
    }

    pub fn decode(&self, s: State) -> Vec<usize> {
        (0..self.names.len()).map(|v| self.value(s, v)).collect()
    }

    pub fn encode_state(&self, values: &[usize]) -> State {
        values.iter().zip(&self.radix).map(|(&k, &r)| k as u32 * r).sum()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    fn term_value<'a>(&'a self, t: &'a Term, s: State, next: Option<State>) -> Result<Option<&'a str>, OracleError> {
        match t {
            Term::Const(c) => Ok(Some(c)),
            Term::Var(v) | Term::Primed(v) => {
                let i = self.var_index(v).ok_or_else(|| OracleError::UnknownVariable(v.clone()))?;
                let st = if matches!(t, Term::Primed(_)) {
                    match next {
                        Some(n) => n,
                        None => return Ok(None),
                    }
                } else {
                    s
                };
                Ok(Some(&self.domains[i][self.value(st, i)]))
            }
        }
    }

    /// Evaluates `e` in state `s`, with primed variables read from `next`.
    pub fn eval(&self, e: &Expr, s: State, next: Option<State>) -> Result<bool, OracleError> {
        Ok(match e {
            Expr::Bool(b) => *b,
            Expr::Eq(a, b) => self.term_value(a, s, next)? == self.term_value(b, s, next)?,
            Expr::Ne(a, b) => self.term_value(a, s, next)? != self.term_value(b, s, next)?,
            Expr::Not(x) => !self.eval(x, s, next)?,
            Expr::And(xs) => {
                for x in xs {
                    if !self.eval(x, s, next)? {
                        return Ok(false);
                    }
                }
                true
            }
            Expr::Or(xs) => {
                for x in xs {
                    if self.eval(x, s, next)? {
                        return Ok(true);
                    }
                }
                false
            }
        })
    }

    fn action_edges(&self, a: &GuardedAction, out: &mut Vec<Edge>) -> Result<(), OracleError> {
        for s in 0..self.count {
            if !self.eval(&a.guard, s, None)? {
                continue;
            }
            let mut targets = vec![s];
            for asg in &a.effect {
                let var = self
                    .var_index(&asg.var)
                    .ok_or_else(|| OracleError::UnknownVariable(asg.var.clone()))?;
                let mut choices = Vec::new();
                for alt in &asg.alternatives {
                    let val = self.term_value(alt, s, None)?.unwrap_or_default();
                    if let Some(k) = self.domains[var].iter().position(|d| d == val) {
                        choices.push(k);
                    }
                }
                let mut next = Vec::new();
                for t in &targets {
                    for &k in &choices {
                        next.push(self.with_value(*t, var, k));
                    }
                }
                targets = next;
            }
            out.extend(targets.into_iter().map(|t| (s, t)));
        }
        Ok(())
    }

    pub fn program(&self) -> Vec<Edge> {
        let mut all: Vec<Edge> = self.processes.iter().flatten().copied().collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    pub fn is_bad(&self, e: Edge) -> bool {
        self.eval(&self.badtrans, e.0, Some(e.1)).unwrap_or(false)
    }

    /// `e` changes only variables process `j` may write.
    pub fn allowed_write(&self, j: usize, e: Edge) -> bool {
        (0..self.names.len()).all(|v| self.write[j][v] || self.value(e.0, v) == self.value(e.1, v))
    }

    /// The group of a single transition for process `j`: every transition
    /// that agrees with it on what `j` reads, before and after, and leaves
    /// each unreadable variable unchanged (one member per valuation of the
    /// unreadable variables).
    pub fn group_of(&self, j: usize, e: Edge) -> Vec<Edge> {
        let unreadable: Vec<usize> = (0..self.names.len()).filter(|&v| !self.read[j][v]).collect();
        let mut out = vec![e];
        for &v in &unreadable {
            let mut next = Vec::new();
            for &(a, b) in &out {
                for k in 0..self.domains[v].len() {
                    next.push((self.with_value(a, v, k), self.with_value(b, v, k)));
                }
            }
            out = next;
        }
        // members only exist when the original leaves unreadables unchanged
        if unreadable.iter().any(|&v| self.value(e.0, v) != self.value(e.1, v)) {
            return Vec::new();
        }
        out
    }

    /// Literal pairwise form of the group relation for process `j`.
    pub fn same_group(&self, j: usize, e: Edge, other: Edge) -> bool {
        (0..self.names.len()).all(|v| {
            if self.read[j][v] {
                self.value(e.0, v) == self.value(other.0, v) && self.value(e.1, v) == self.value(other.1, v)
            } else {
                self.value(e.0, v) == self.value(e.1, v) && self.value(other.0, v) == self.value(other.1, v)
            }
        })
    }

    /// `⋃_j group_j(X ∩ allow_write(j))`.
    pub fn group_all(&self, edges: &[Edge]) -> BTreeSet<Edge> {
        let mut out = BTreeSet::new();
        for j in 0..self.read.len() {
            for &e in edges {
                if self.allowed_write(j, e) {
                    out.extend(self.group_of(j, e));
                }
            }
        }
        out
    }

    pub fn successors(edges: &[Edge], count: u32) -> Vec<Vec<State>> {
        let mut adj = vec![Vec::new(); count as usize];
        for &(a, b) in edges {
            adj[a as usize].push(b);
        }
        adj
    }

    /// States reachable from `init` along `edges`.
    pub fn reach(&self, init: &[bool], edges: &[Edge]) -> Vec<bool> {
        let adj = Self::successors(edges, self.count);
        let mut seen = init.to_vec();
        let mut queue: VecDeque<State> = (0..self.count).filter(|&s| init[s as usize]).collect();
        while let Some(s) = queue.pop_front() {
            for &t in &adj[s as usize] {
                if !seen[t as usize] {
                    seen[t as usize] = true;
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    /// States that can reach `target` along `edges`.
    pub fn backward_reach(&self, target: &[bool], edges: &[Edge]) -> Vec<bool> {
        let reversed: Vec<Edge> = edges.iter().map(|&(a, b)| (b, a)).collect();
        self.reach(target, &reversed)
    }

    /// States of `within` without an outgoing edge.
    pub fn deadlocks(&self, within: &[bool], edges: &[Edge]) -> Vec<bool> {
        let mut has = vec![false; self.count as usize];
        for &(a, _) in edges {
            has[a as usize] = true;
        }
        (0..self.count as usize).map(|s| within[s] && !has[s]).collect()
    }

    /// A cycle of `edges` that stays inside `within`, if any.
    pub fn find_cycle(&self, within: &[bool], edges: &[Edge]) -> Option<Vec<State>> {
        let inner: Vec<Edge> = edges
            .iter()
            .copied()
            .filter(|&(a, b)| within[a as usize] && within[b as usize])
            .collect();
        let adj = Self::successors(&inner, self.count);
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut color = vec![0u8; self.count as usize];
        let mut parent = vec![u32::MAX; self.count as usize];
        for root in 0..self.count {
            if !within[root as usize] || color[root as usize] != 0 {
                continue;
            }
            let mut stack: Vec<(State, usize)> = vec![(root, 0)];
            color[root as usize] = 1;
            while let Some(&mut (s, ref mut i)) = stack.last_mut() {
                if let Some(&t) = adj[s as usize].get(*i) {
                    *i += 1;
                    match color[t as usize] {
                        0 => {
                            color[t as usize] = 1;
                            parent[t as usize] = s;
                            stack.push((t, 0));
                        }
                        1 => {
                            let mut cycle = vec![t];
                            let mut c = s;
                            while c != t {
                                cycle.push(c);
                                c = parent[c as usize];
                            }
                            cycle.reverse();
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    color[s as usize] = 2;
                    stack.pop();
                }
            }
        }
        None
    }

    pub fn format_state(&self, s: State) -> String {
        self.decode(s)
            .iter()
            .enumerate()
            .map(|(v, &k)| format!("{}={}", self.names[v], self.domains[v][k]))
            .collect::<Vec<_>>()
            .join(" ")
    }
}
