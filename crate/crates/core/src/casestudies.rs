//! Generators for the benchmark families: Byzantine agreement, Byzantine
//! agreement with failstop faults, and a three-valued token ring.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{Assignment, Expr, GuardedAction, ProcessDecl, SystemSpec, Term, VarDecl};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Byzantine,
    ByzantineFailstop,
    TokenRing,
}

impl Family {
    pub fn tag(self) -> &'static str {
        match self {
            Family::Byzantine => "byz",
            Family::ByzantineFailstop => "byzfs",
            Family::TokenRing => "token",
        }
    }
}

impl FromStr for Family {
    type Err = CaseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "byz" => Ok(Family::Byzantine),
            "byzfs" | "byz_failstop" => Ok(Family::ByzantineFailstop),
            "token" => Ok(Family::TokenRing),
            _ => Err(CaseError::UnknownFamily(s.to_string())),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CaseError {
    #[error("unknown case family '{0}' (expected byz, byzfs or token)")]
    UnknownFamily(String),
    #[error("case must look like FAMILY:N, got '{0}'")]
    Malformed(String),
    #[error("{family} needs n >= 3, got {n}")]
    TooSmall { family: Family, n: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CaseParams {
    pub family: Family,
    pub n: usize,
}

impl FromStr for CaseParams {
    type Err = CaseError;

    /// `byz:3`, `byzfs:4`, `token:10`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (fam, n) = s
            .split_once(':')
            .ok_or_else(|| CaseError::Malformed(s.to_string()))?;
        let n = n
            .trim()
            .parse()
            .map_err(|_| CaseError::Malformed(s.to_string()))?;
        Ok(CaseParams {
            family: fam.trim().parse()?,
            n,
        })
    }
}

impl fmt::Display for CaseParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.family, self.n)
    }
}

pub fn generate(params: CaseParams) -> Result<SystemSpec, CaseError> {
    match params.family {
        Family::Byzantine => gen_byzantine(params.n),
        Family::ByzantineFailstop => gen_byz_failstop(params.n),
        Family::TokenRing => gen_token_ring(params.n),
    }
}

/// Name of the `i`-th non-general: `j`, `k`, `l`, ... `z`, then `p17`, `p18`, ...
pub fn non_general_name(i: usize) -> String {
    if i < 17 {
        ((b'j' + i as u8) as char).to_string()
    } else {
        format!("p{i}")
    }
}

const BOOL: &[&str] = &["false", "true"];

fn b(x: &str) -> String {
    format!("b.{x}")
}
fn d(x: &str) -> String {
    format!("d.{x}")
}
fn fin(x: &str) -> String {
    format!("f.{x}")
}
fn up(x: &str) -> String {
    format!("up.{x}")
}

fn next_ne(a: &str, b: &str) -> Expr {
    Expr::ne(Term::primed(a), Term::primed(b))
}

struct ByzOptions {
    failstop: bool,
}

fn byzantine(n: usize, opts: ByzOptions) -> Result<SystemSpec, CaseError> {
    let family = if opts.failstop {
        Family::ByzantineFailstop
    } else {
        Family::Byzantine
    };
    if n < 3 {
        return Err(CaseError::TooSmall { family, n });
    }
    let ids: Vec<String> = (0..n).map(non_general_name).collect();

    let mut variables = vec![VarDecl::new(b("g"), BOOL), VarDecl::new(d("g"), &["0", "1"])];
    for i in &ids {
        variables.push(VarDecl::new(d(i), &["0", "1", "B"]));
        variables.push(VarDecl::new(fin(i), BOOL));
        variables.push(VarDecl::new(b(i), BOOL));
        if opts.failstop {
            variables.push(VarDecl::new(up(i), BOOL));
        }
    }

    let mut processes = Vec::new();
    for i in &ids {
        let mut read = vec![b(i), d(i), fin(i)];
        if opts.failstop {
            read.push(up(i));
        }
        read.push(d("g"));
        read.extend(ids.iter().filter(|k| *k != i).map(|k| d(k)));
        let healthy = |mut g: Vec<Expr>| {
            g.push(Expr::is(&fin(i), "false"));
            g.push(Expr::is(&b(i), "false"));
            if opts.failstop {
                g.push(Expr::is(&up(i), "true"));
            }
            Expr::and(g)
        };
        processes.push(ProcessDecl {
            name: i.clone(),
            read,
            write: vec![d(i), fin(i)],
            actions: vec![
                GuardedAction::new(
                    format!("BA1_{i}"),
                    healthy(vec![Expr::is(&d(i), "B")]),
                    vec![Assignment::new(d(i), vec![Term::var(d("g"))])],
                ),
                GuardedAction::new(
                    format!("BA2_{i}"),
                    healthy(vec![Expr::is_not(&d(i), "B")]),
                    vec![Assignment::constant(fin(i), "true")],
                ),
            ],
        });
    }

    let nobody_byzantine = Expr::and(
        std::iter::once(Expr::is(&b("g"), "false"))
            .chain(ids.iter().map(|i| Expr::is(&b(i), "false")))
            .collect(),
    );
    let mut faults = Vec::new();
    for x in std::iter::once("g").chain(ids.iter().map(String::as_str)) {
        faults.push(GuardedAction::new(
            format!("F1_{x}"),
            nobody_byzantine.clone(),
            vec![Assignment::constant(b(x), "true")],
        ));
    }
    faults.push(GuardedAction::new(
        "F2_g",
        Expr::is(&b("g"), "true"),
        vec![Assignment::new(
            d("g"),
            vec![Term::constant("0"), Term::constant("1")],
        )],
    ));
    for i in &ids {
        faults.push(GuardedAction::new(
            format!("F2_{i}"),
            Expr::is(&b(i), "true"),
            vec![
                Assignment::new(d(i), vec![Term::constant("0"), Term::constant("1")]),
                Assignment::new(fin(i), vec![Term::constant("false"), Term::constant("true")]),
            ],
        ));
    }
    if opts.failstop {
        let nobody_crashed = Expr::and(ids.iter().map(|i| Expr::is(&up(i), "true")).collect());
        for i in &ids {
            faults.push(GuardedAction::new(
                format!("C_{i}"),
                nobody_crashed.clone(),
                vec![Assignment::constant(up(i), "false")],
            ));
        }
    }

    // invariant
    let mut at_most_one = Vec::new();
    for (x, i) in ids.iter().enumerate() {
        for k in &ids[x + 1..] {
            at_most_one.push(Expr::not(Expr::and(vec![
                Expr::is(&b(i), "true"),
                Expr::is(&b(k), "true"),
            ])));
        }
    }
    let mut general_honest = vec![Expr::is(&b("g"), "false")];
    general_honest.extend(at_most_one);
    for i in &ids {
        general_honest.push(Expr::or(vec![
            Expr::is(&b(i), "true"),
            Expr::is(&d(i), "B"),
            Expr::eq(Term::var(d(i)), Term::var(d("g"))),
        ]));
        general_honest.push(Expr::or(vec![
            Expr::is(&b(i), "true"),
            Expr::is(&fin(i), "false"),
            Expr::is_not(&d(i), "B"),
        ]));
    }
    let mut general_byzantine = vec![Expr::is(&b("g"), "true")];
    general_byzantine.extend(ids.iter().map(|i| Expr::is(&b(i), "false")));
    if opts.failstop {
        for (x, i) in ids.iter().enumerate() {
            general_byzantine.push(Expr::or(vec![
                Expr::is(&up(i), "false"),
                Expr::is_not(&d(i), "B"),
            ]));
            for k in &ids[x + 1..] {
                general_byzantine.push(Expr::or(vec![
                    Expr::is(&up(i), "false"),
                    Expr::is(&up(k), "false"),
                    Expr::eq(Term::var(d(i)), Term::var(d(k))),
                ]));
            }
        }
    } else {
        let first = &ids[0];
        general_byzantine.push(Expr::is_not(&d(first), "B"));
        for i in &ids[1..] {
            general_byzantine.push(Expr::eq(Term::var(d(i)), Term::var(d(first))));
        }
    }
    let invariant = Expr::or(vec![Expr::and(general_honest), Expr::and(general_byzantine)]);

    // bad transitions
    let alive_next = |i: &str| {
        let mut v = vec![Expr::next_is(&b(i), "false")];
        if opts.failstop {
            v.push(Expr::next_is(&up(i), "true"));
        }
        v
    };
    let decided_next = |i: &str| {
        vec![
            Expr::next_is(&fin(i), "true"),
            Expr::next_is_not(&d(i), "B"),
        ]
    };
    let mut bad = Vec::new();
    for i in &ids {
        let mut validity = vec![Expr::next_is(&b("g"), "false")];
        validity.extend(alive_next(i));
        validity.extend(decided_next(i));
        validity.push(next_ne(&d(i), &d("g")));
        bad.push(Expr::and(validity));
    }
    for (x, i) in ids.iter().enumerate() {
        for k in &ids[x + 1..] {
            let mut agreement = alive_next(i);
            agreement.extend(alive_next(k));
            agreement.extend(decided_next(i));
            agreement.extend(decided_next(k));
            agreement.push(next_ne(&d(i), &d(k)));
            bad.push(Expr::and(agreement));
        }
    }
    for i in &ids {
        bad.push(Expr::and(vec![
            Expr::is(&b(i), "false"),
            Expr::next_is(&b(i), "false"),
            Expr::is(&fin(i), "true"),
            Expr::or(vec![
                Expr::ne(Term::var(d(i)), Term::primed(d(i))),
                Expr::ne(Term::var(fin(i)), Term::primed(fin(i))),
            ]),
        ]));
    }

    Ok(SystemSpec {
        name: format!("{}{n}", family.tag()),
        variables,
        processes,
        faults,
        invariant,
        badtrans: Expr::or(bad),
    })
}

/// Byzantine agreement with one general and `n` non-generals.
pub fn gen_byzantine(n: usize) -> Result<SystemSpec, CaseError> {
    byzantine(n, ByzOptions { failstop: false })
}

/// Byzantine agreement where, in addition, one non-general may crash.
pub fn gen_byz_failstop(n: usize) -> Result<SystemSpec, CaseError> {
    byzantine(n, ByzOptions { failstop: true })
}

fn x(i: usize) -> String {
    format!("x.{i}")
}

/// `i` holds the token (rail `next` selects primed variables).
fn token(n: usize, i: usize, next: bool) -> Expr {
    let t = |v: String| if next { Term::Primed(v) } else { Term::Var(v) };
    let not_b = |v: String| Expr::ne(t(v), Term::constant("B"));
    let prev = (i + n - 1) % n;
    let relation = if i == 0 {
        Expr::eq(t(x(0)), t(x(prev)))
    } else {
        Expr::ne(t(x(i)), t(x(prev)))
    };
    Expr::and(vec![not_b(x(prev)), not_b(x(i)), relation])
}

fn at_most_one_token(n: usize, next: bool) -> Expr {
    let mut pairs = Vec::new();
    for i in 0..n {
        for k in i + 1..n {
            pairs.push(Expr::not(Expr::and(vec![token(n, i, next), token(n, k, next)])));
        }
    }
    Expr::and(pairs)
}

/// Token ring of `n` processes over `{0, 1, B}`, where `B` marks a corrupted value.
pub fn gen_token_ring(n: usize) -> Result<SystemSpec, CaseError> {
    if n < 3 {
        return Err(CaseError::TooSmall {
            family: Family::TokenRing,
            n,
        });
    }
    let variables = (0..n).map(|i| VarDecl::new(x(i), &["0", "1", "B"])).collect();
    let mut processes = Vec::new();
    let last = x(n - 1);
    processes.push(ProcessDecl {
        name: "p0".into(),
        read: vec![x(0), last.clone()],
        write: vec![x(0)],
        actions: ["0", "1"]
            .iter()
            .zip(["1", "0"])
            .map(|(v, w)| {
                GuardedAction::new(
                    format!("flip{v}"),
                    Expr::and(vec![Expr::is(&last, v), Expr::is(&x(0), v)]),
                    vec![Assignment::constant(x(0), w)],
                )
            })
            .collect(),
    });
    for i in 1..n {
        processes.push(ProcessDecl {
            name: format!("p{i}"),
            read: vec![x(i), x(i - 1)],
            write: vec![x(i)],
            actions: vec![GuardedAction::new(
                "copy",
                Expr::and(vec![
                    Expr::is_not(&x(i - 1), "B"),
                    Expr::ne(Term::var(x(i)), Term::var(x(i - 1))),
                ]),
                vec![Assignment::new(x(i), vec![Term::var(x(i - 1))])],
            )],
        });
    }
    let faults = (0..n)
        .map(|i| {
            let others = Expr::or((0..n).filter(|&k| k != i).map(|k| Expr::is_not(&x(k), "B")).collect());
            GuardedAction::new(
                format!("corrupt_{i}"),
                Expr::and(vec![Expr::is_not(&x(i), "B"), others]),
                vec![Assignment::constant(x(i), "B")],
            )
        })
        .collect();
    let mut invariant: Vec<Expr> = (0..n).map(|i| Expr::is_not(&x(i), "B")).collect();
    invariant.push(Expr::or((0..n).map(|i| token(n, i, false)).collect()));
    invariant.push(at_most_one_token(n, false));
    Ok(SystemSpec {
        name: format!("token{n}"),
        variables,
        processes,
        faults,
        invariant: Expr::and(invariant),
        badtrans: Expr::and(vec![
            at_most_one_token(n, false),
            Expr::not(at_most_one_token(n, true)),
        ]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse, serialize};
    use crate::model::validate;
    use crate::symbolic::encode;
    use num_bigint::BigUint;

    #[test]
    fn byzantine_shape() {
        let s = gen_byzantine(3).unwrap();
        assert_eq!(s.variables.len(), 11);
        assert_eq!(s.processes.len(), 3);
        assert_eq!(s.fault_families().len(), 2);
        assert_eq!(s.state_count(), 6912);
        assert!(validate(&s).is_empty(), "{:?}", validate(&s));
        let p = &s.processes[0];
        assert_eq!(p.name, "j");
        assert_eq!(p.read.len(), 6);
    }

    #[test]
    fn state_count_formula() {
        for n in 3..=6 {
            let s = gen_byzantine(n).unwrap();
            assert_eq!(s.state_count(), 4 * 12u128.pow(n as u32));
        }
    }

    #[test]
    fn failstop_and_token_shapes() {
        let s = gen_byz_failstop(3).unwrap();
        assert_eq!(s.variables.len(), 14);
        assert!(validate(&s).is_empty(), "{:?}", validate(&s));
        let t = gen_token_ring(4).unwrap();
        assert_eq!(t.state_count(), 81);
        assert!(validate(&t).is_empty(), "{:?}", validate(&t));
    }

    #[test]
    fn small_sizes_rejected() {
        assert!(gen_byzantine(2).is_err());
        assert!(gen_byz_failstop(1).is_err());
        assert!(gen_token_ring(2).is_err());
    }

    #[test]
    fn names() {
        assert_eq!(non_general_name(0), "j");
        assert_eq!(non_general_name(2), "l");
        assert_eq!(non_general_name(16), "z");
        assert_eq!(non_general_name(17), "p17");
        let c: CaseParams = "byz:3".parse().unwrap();
        assert_eq!(c, CaseParams { family: Family::Byzantine, n: 3 });
        assert!("byz".parse::<CaseParams>().is_err());
        assert!("foo:3".parse::<CaseParams>().is_err());
    }

    #[test]
    fn generated_specs_round_trip() {
        for s in [gen_byzantine(3).unwrap(), gen_token_ring(4).unwrap(), gen_byz_failstop(3).unwrap()] {
            assert_eq!(parse(&serialize(&s)).unwrap(), s);
        }
    }

    #[test]
    fn scenario_states() {
        let s = gen_byzantine(3).unwrap();
        let mut e = encode(&s).unwrap();
        assert_eq!(e.enc.count_states(e.enc.domain()).unwrap(), BigUint::from(6912u32));
        let lay = e.enc.layout().clone();
        let val = |assign: &[(&str, &str)]| {
            let mut v = vec![0; lay.vars().len()];
            for (name, value) in assign {
                let l = lay.var(name).unwrap();
                v[lay.var_position(name).unwrap()] = l.value_index(value).unwrap();
            }
            v
        };
        // everyone honest, d.g = 0, nobody decided
        let s0 = val(&[("d.j", "B"), ("d.k", "B"), ("d.l", "B")]);
        let st = e.enc.state(&s0).unwrap();
        assert!(e.enc.subset(st, e.invariant).unwrap());
        // a finalized honest process flipping its decision is bad
        let a = val(&[("d.j", "0"), ("f.j", "true"), ("d.k", "B"), ("d.l", "B")]);
        let z = val(&[("d.j", "0"), ("f.j", "false"), ("d.k", "B"), ("d.l", "B")]);
        let t = e.enc.transition(&a, &z).unwrap();
        assert!(e.enc.subset(t, e.badtrans).unwrap());
    }

    #[test]
    fn one_token_when_all_equal() {
        let s = gen_token_ring(4).unwrap();
        let mut e = encode(&s).unwrap();
        let all_zero = e.enc.state(&[0, 0, 0, 0]).unwrap();
        assert!(e.enc.subset(all_zero, e.invariant).unwrap());
        let tok0 = e.enc.state_predicate(&token(4, 0, false)).unwrap();
        assert!(e.enc.subset(all_zero, tok0).unwrap());
        // exactly 2n legitimate states
        assert_eq!(e.enc.count_states(e.invariant).unwrap(), BigUint::from(8u32));
    }
}
