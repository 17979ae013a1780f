//! Symbolic primitives and synthesis results against the explicit model.

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use ftrevise::casestudies::{generate, CaseParams};
use ftrevise::group::{group_all_seq, GroupData};
use ftrevise::symbolic::{encode, Encoded};
use ftrevise::synthesis::{synthesize, unsafe_closure, SynthesisOptions};
use ftrevise::verify::explicit::{Edge, ExplicitModel, State};
use ftrevise::{Encoding, StateSet, SystemSpec, TransitionSet};

fn case(name: &str) -> SystemSpec {
    generate(name.parse::<CaseParams>().unwrap()).unwrap()
}

fn model(spec: &SystemSpec) -> (Encoded, ExplicitModel) {
    (encode(spec).unwrap(), ExplicitModel::build(spec, 1_000_000).unwrap())
}

fn sym_states(enc: &mut Encoding, m: &ExplicitModel, set: &[bool]) -> StateSet {
    let mut acc = enc.empty_states();
    for (s, _) in set.iter().enumerate().filter(|(_, &b)| b) {
        let x = enc.state(&m.decode(s as State)).unwrap();
        acc = enc.or(acc, x).unwrap();
    }
    acc
}

fn sym_edges(enc: &mut Encoding, m: &ExplicitModel, edges: &[Edge]) -> TransitionSet {
    let mut acc = enc.empty_transitions();
    for &(a, b) in edges {
        let t = enc.transition(&m.decode(a), &m.decode(b)).unwrap();
        acc = enc.or(acc, t).unwrap();
    }
    acc
}

fn explicit_states(enc: &Encoding, m: &ExplicitModel, x: StateSet) -> Vec<bool> {
    let mut out = vec![false; m.state_count() as usize];
    for s in enc.states(x).unwrap() {
        out[m.encode_state(&s) as usize] = true;
    }
    out
}

fn explicit_edges(enc: &Encoding, m: &ExplicitModel, t: TransitionSet) -> BTreeSet<Edge> {
    enc.transitions(t)
        .unwrap()
        .into_iter()
        .map(|(a, b)| (m.encode_state(&a), m.encode_state(&b)))
        .collect()
}

fn random_edge(rng: &mut StdRng, m: &ExplicitModel, spec: &SystemSpec, program: &[Edge]) -> Edge {
    let roll: f64 = rng.random();
    if roll < 0.6 {
        return program[rng.random_range(0..program.len())];
    }
    let s = rng.random_range(0..m.state_count());
    if roll < 0.9 {
        // something some process may write
        let j = rng.random_range(0..spec.processes.len());
        let mut t = s;
        for w in &spec.processes[j].write {
            let v = m.var_index(w).unwrap();
            let k = rng.random_range(0..spec.variables[v].domain.len());
            t = m.with_value(t, v, k);
        }
        (s, t)
    } else {
        (s, rng.random_range(0..m.state_count()))
    }
}

fn group_equivalence(name: &str, seed: u64) {
    let spec = case(name);
    let (mut e, m) = model(&spec);
    let data = GroupData::all(&spec, &mut e.enc).unwrap();
    let program = m.program();
    let mut rng = StdRng::seed_from_u64(seed);
    for _ in 0..200 {
        let n = rng.random_range(1..=4);
        let edges: Vec<Edge> = (0..n).map(|_| random_edge(&mut rng, &m, &spec, &program)).collect();
        let x = sym_edges(&mut e.enc, &m, &edges);
        let g = group_all_seq(&mut e.enc, &data, x).unwrap();
        assert_eq!(explicit_edges(&e.enc, &m, g), m.group_all(&edges), "{name}: {edges:?}");
    }
}

#[test]
fn group_matches_formula_on_byzantine() {
    group_equivalence("byz:3", 1);
}

#[test]
fn group_matches_formula_on_token_ring() {
    group_equivalence("token:4", 2);
}

#[test]
fn single_ba1_group_has_32_members() {
    let spec = case("byz:3");
    let (mut e, m) = model(&spec);
    let data = GroupData::all(&spec, &mut e.enc).unwrap();
    let j = spec.processes.iter().position(|p| p.name == "j").unwrap();
    let ba1 = spec.processes[j].actions.iter().find(|a| a.name.starts_with("BA1")).unwrap().clone();
    let edges = m.processes[j].clone();
    let edge = edges
        .into_iter()
        .find(|&(a, b)| m.eval(&ba1.guard, a, None).unwrap() && a != b)
        .unwrap();
    let x = sym_edges(&mut e.enc, &m, &[edge]);
    let g = group_all_seq(&mut e.enc, &data, x).unwrap();
    assert_eq!(e.enc.count_transitions(g).unwrap(), 32u32.into());
    assert_eq!(m.group_of(j, edge).len(), 32);
}

fn reach_and_deadlocks(name: &str) {
    let spec = case(name);
    let (mut e, m) = model(&spec);
    let program = m.program();
    let mut pf = program.clone();
    pf.extend(m.faults.iter().copied());
    let t_oracle = m.reach(&m.invariant, &pf);
    let t_sym = e.enc.fault_span(e.invariant, e.program, e.faults).unwrap();
    assert_eq!(explicit_states(&e.enc, &m, t_sym), t_oracle);

    assert_eq!(explicit_edges(&e.enc, &m, e.program), program.iter().copied().collect());
    assert_eq!(explicit_edges(&e.enc, &m, e.faults), m.faults.iter().copied().collect());

    let dead_oracle = m.deadlocks(&t_oracle, &program);
    let has = e.enc.sources(e.program).unwrap();
    let dead_sym = e.enc.diff(t_sym, has).unwrap();
    assert_eq!(explicit_states(&e.enc, &m, dead_sym), dead_oracle);

    // image and preimage of random sets
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..20 {
        let set: Vec<bool> = (0..m.state_count()).map(|_| rng.random_bool(0.05)).collect();
        let x = sym_states(&mut e.enc, &m, &set);
        let img = e.enc.image(e.program, x).unwrap();
        let pre = e.enc.preimage(e.program, x).unwrap();
        let mut img_o = vec![false; set.len()];
        let mut pre_o = vec![false; set.len()];
        for &(a, b) in &program {
            if set[a as usize] {
                img_o[b as usize] = true;
            }
            if set[b as usize] {
                pre_o[a as usize] = true;
            }
        }
        assert_eq!(explicit_states(&e.enc, &m, img), img_o);
        assert_eq!(explicit_states(&e.enc, &m, pre), pre_o);
    }
}

#[test]
fn byzantine_reach_and_deadlocks() {
    reach_and_deadlocks("byz:3");
}

#[test]
fn token_ring_reach_and_deadlocks() {
    reach_and_deadlocks("token:4");
}

fn closure_matches(name: &str) {
    let spec = case(name);
    let (mut e, m) = model(&spec);
    let (bad, _) = unsafe_closure(&mut e.enc, e.faults, e.badtrans).unwrap();
    let mut oracle = vec![false; m.state_count() as usize];
    for &f in &m.faults {
        if m.is_bad(f) {
            oracle[f.0 as usize] = true;
        }
    }
    loop {
        let mut changed = false;
        for &(a, b) in &m.faults {
            if oracle[b as usize] && !oracle[a as usize] {
                oracle[a as usize] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    assert_eq!(explicit_states(&e.enc, &m, bad), oracle);
}

#[test]
fn unsafe_closure_matches_backward_search() {
    closure_matches("token:4");
    closure_matches("byz:3");
}

/// Re-derives the final fault-span and cycle freedom explicitly.
fn check_result(name: &str) -> (SystemSpec, Encoding, ftrevise::SynthesisResult, ExplicitModel) {
    let spec = case(name);
    let m = ExplicitModel::build(&spec, 1_000_000).unwrap();
    let (enc, r) = synthesize(&spec, &SynthesisOptions::default()).unwrap();
    let p: Vec<Edge> = explicit_edges(&enc, &m, r.p_prime).into_iter().collect();
    let s = explicit_states(&enc, &m, r.s_prime);
    let mut pf = p.clone();
    pf.extend(m.faults.iter().copied());
    let t = m.reach(&s, &pf);
    assert_eq!(explicit_states(&enc, &m, r.fault_span), t);
    let outside: Vec<bool> = t.iter().zip(&s).map(|(&a, &b)| a && !b).collect();
    assert_eq!(m.find_cycle(&outside, &p), None);
    let back = m.backward_reach(&s, &p);
    assert!(t.iter().zip(&back).all(|(&a, &b)| !a || b));
    assert!(m.deadlocks(&outside, &p).iter().all(|&d| !d));
    (spec, enc, r, m)
}

#[test]
fn byzantine_result_matches_scenario() {
    let (spec, mut enc, r, m) = check_result("byz:3");
    let t = explicit_states(&enc, &m, r.fault_span);
    let v = |name: &str| m.var_index(name).unwrap();
    let is = |s: State, name: &str, val: &str| {
        let k = m.value(s, v(name));
        spec.variables[v(name)].domain[k] == val
    };
    let honest = |s: State| ["j", "k", "l"].iter().all(|p| is(s, &format!("b.{p}"), "false"));
    let mut s1_seen = 0;
    let l = spec.processes.iter().position(|p| p.name == "l").unwrap();
    let mut recovery = enc.empty_transitions();
    for &(j, x) in &r.added_recovery {
        if j == l {
            recovery = enc.or(recovery, x).unwrap();
        }
    }
    let recovery = explicit_edges(&enc, &m, recovery);
    for s in 0..m.state_count() {
        if !is(s, "b.g", "true") || !honest(s) {
            continue;
        }
        // two finalized at 0, one finalized at 1: never reachable
        let finals: Vec<&str> = ["j", "k", "l"]
            .iter()
            .filter(|p| is(s, &format!("f.{p}"), "true"))
            .map(|p| if is(s, &format!("d.{p}"), "0") { "0" } else if is(s, &format!("d.{p}"), "1") { "1" } else { "B" })
            .collect();
        if finals.len() == 3 && finals.iter().filter(|&&x| x == "0").count() == 2 && finals.contains(&"1") {
            assert!(!t[s as usize], "{}", m.format_state(s));
        }
        // j and k at 0, l at 1 and not final: l recovers by writing d.l
        if is(s, "d.j", "0") && is(s, "d.k", "0") && is(s, "d.l", "1") && is(s, "f.l", "false") && t[s as usize] {
            s1_seen += 1;
            let fix = recovery
                .iter()
                .any(|&(a, b)| a == s && is(b, "d.l", "0"));
            assert!(fix, "no recovery from {}", m.format_state(s));
        }
    }
    assert!(s1_seen > 0);
}

#[test]
fn token_ring_result_is_sound() {
    let (spec, enc, r, m) = check_result("token:4");
    // recovery is only ever added for process 0 fixing x.0 = B
    let x0 = m.var_index("x.0").unwrap();
    for &(j, t) in &r.added_recovery {
        assert_eq!(spec.processes[j].name, "p0");
        for (a, _) in explicit_edges(&enc, &m, t) {
            assert_eq!(spec.variables[x0].domain[m.value(a, x0)], "B");
        }
    }
    assert!(!r.added_recovery.is_empty());
}

#[test]
fn synthesis_is_deterministic() {
    let spec = case("byz:4");
    let (a, ra) = synthesize(&spec, &SynthesisOptions::default()).unwrap();
    let (b, rb) = synthesize(&spec, &SynthesisOptions::default()).unwrap();
    let ea = a.mgr.export(&[ra.p_prime.0, ra.s_prime.0, ra.fault_span.0]).unwrap();
    let eb = b.mgr.export(&[rb.p_prime.0, rb.s_prime.0, rb.fault_span.0]).unwrap();
    assert_eq!(ea, eb);
}

#[test]
fn recorded_changes_are_group_closed() {
    for name in ["byz:3", "token:4"] {
        let spec = case(name);
        let (mut enc, r) = synthesize(&spec, &SynthesisOptions::default()).unwrap();
        let data = GroupData::all(&spec, &mut enc).unwrap();
        let mut changes: Vec<TransitionSet> = r.removed_groups.clone();
        changes.extend(r.added_recovery.iter().map(|&(_, t)| t));
        for c in changes {
            let g = group_all_seq(&mut enc, &data, c).unwrap();
            assert_eq!(g, c, "{name}");
        }
    }
}
