//! Decision-diagram operations against truth tables.

use num_bigint::BigUint;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use ftrevise::ddengine::{transfer, DdManager, DdNode, RailDirection, VarSet};

#[derive(Clone, Debug)]
enum F {
    Const(bool),
    Var(u32),
    Not(Box<F>),
    And(Box<F>, Box<F>),
    Or(Box<F>, Box<F>),
    Xor(Box<F>, Box<F>),
    Iff(Box<F>, Box<F>),
    Diff(Box<F>, Box<F>),
    Exists(u32, Box<F>),
}

fn eval(f: &F, a: u32) -> bool {
    match f {
        F::Const(b) => *b,
        F::Var(i) => a >> i & 1 == 1,
        F::Not(x) => !eval(x, a),
        F::And(x, y) => eval(x, a) && eval(y, a),
        F::Or(x, y) => eval(x, a) || eval(y, a),
        F::Xor(x, y) => eval(x, a) != eval(y, a),
        F::Iff(x, y) => eval(x, a) == eval(y, a),
        F::Diff(x, y) => eval(x, a) && !eval(y, a),
        F::Exists(v, x) => eval(x, a & !(1 << v)) || eval(x, a | 1 << v),
    }
}

fn build(m: &mut DdManager, f: &F) -> DdNode {
    match f {
        F::Const(b) => m.constant(*b),
        F::Var(i) => m.var(*i).unwrap(),
        F::Not(x) => {
            let x = build(m, x);
            m.not(x).unwrap()
        }
        F::And(x, y) | F::Or(x, y) | F::Xor(x, y) | F::Iff(x, y) | F::Diff(x, y) => {
            let a = build(m, x);
            let b = build(m, y);
            match f {
                F::And(..) => m.and(a, b),
                F::Or(..) => m.or(a, b),
                F::Xor(..) => m.xor(a, b),
                F::Iff(..) => m.iff(a, b),
                _ => m.diff(a, b),
            }
            .unwrap()
        }
        F::Exists(v, x) => {
            let x = build(m, x);
            m.exists(x, &VarSet::new(vec![*v])).unwrap()
        }
    }
}

fn formula(vars: u32) -> impl Strategy<Value = F> {
    let leaf = prop_oneof![
        any::<bool>().prop_map(F::Const),
        (0..vars).prop_map(F::Var),
        (0..vars).prop_map(F::Var),
    ];
    leaf.prop_recursive(6, 48, 2, move |inner| {
        prop_oneof![
            inner.clone().prop_map(|x| F::Not(Box::new(x))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| F::And(Box::new(x), Box::new(y))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| F::Or(Box::new(x), Box::new(y))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| F::Xor(Box::new(x), Box::new(y))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| F::Iff(Box::new(x), Box::new(y))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| F::Diff(Box::new(x), Box::new(y))),
            ((0..vars), inner).prop_map(|(v, x)| F::Exists(v, Box::new(x))),
        ]
    })
}

fn bits(a: u32, n: u32) -> Vec<bool> {
    (0..n).map(|i| a >> i & 1 == 1).collect()
}

/// Builds the function straight from its truth table.
fn from_table(m: &mut DdManager, n: u32, table: &[bool]) -> DdNode {
    let mut acc = m.fls();
    for (a, &v) in table.iter().enumerate() {
        if !v {
            continue;
        }
        let mut cube = m.tru();
        for i in 0..n {
            let lit = m.literal(i, a >> i & 1 == 1).unwrap();
            cube = m.and(cube, lit).unwrap();
        }
        acc = m.or(acc, cube).unwrap();
    }
    acc
}

fn sized_formula() -> impl Strategy<Value = (u32, F)> {
    (1u32..=12).prop_flat_map(|n| (Just(n), formula(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn operations_match_truth_tables((n, f) in sized_formula()) {
        let mut m = DdManager::new(n).unwrap();
        let d = build(&mut m, &f);
        let table: Vec<bool> = (0..1u32 << n).map(|a| eval(&f, a)).collect();
        for (a, &want) in table.iter().enumerate() {
            prop_assert_eq!(m.eval(d, &bits(a as u32, n)).unwrap(), want);
        }
        let ones = table.iter().filter(|&&b| b).count();
        prop_assert_eq!(m.count_minterms(d, n).unwrap(), BigUint::from(ones));
        // canonicity: the same function is the same handle
        let again = from_table(&mut m, n, &table);
        prop_assert_eq!(again, d);
        prop_assert_eq!(d.is_true(), ones == table.len());
        prop_assert_eq!(d.is_false(), ones == 0);
        // support is exactly the set of variables the table depends on
        let support = m.support(d).unwrap();
        for v in 0..n {
            let depends = (0..1u32 << n).any(|a| table[a as usize] != table[(a ^ 1 << v) as usize]);
            prop_assert_eq!(support.contains(&v), depends);
        }
    }

    #[test]
    fn and_exists_is_conjunction_then_projection(
        (n, f, g, mask) in (2u32..=10).prop_flat_map(|n| (Just(n), formula(n), formula(n), 0u32..(1 << n)))
    ) {
        let mut m = DdManager::new(n).unwrap();
        let a = build(&mut m, &f);
        let b = build(&mut m, &g);
        let vars: VarSet = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let fused = m.and_exists(a, b, &vars).unwrap();
        let ab = m.and(a, b).unwrap();
        let split = m.exists(ab, &vars).unwrap();
        prop_assert_eq!(fused, split);
        for x in 0..1u32 << n {
            // exists over the masked variables, by enumeration
            let free = x & !mask;
            let mut want = false;
            let mut sub = mask;
            loop {
                let y = free | sub;
                if eval(&f, y) && eval(&g, y) {
                    want = true;
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & mask;
            }
            prop_assert_eq!(m.eval(fused, &bits(x, n)).unwrap(), want);
        }
    }

    #[test]
    fn rename_moves_between_rails(f in formula(6)) {
        // current variable i sits at 2i, its next copy at 2i + 1
        let mut m = DdManager::new(12).unwrap();
        let spread = spread_vars(&f);
        let d = build(&mut m, &spread);
        let r = m.rename(d, RailDirection::CurrentToNext).unwrap();
        let back = m.rename(r, RailDirection::NextToCurrent).unwrap();
        prop_assert_eq!(back, d);
        for a in 0..1u32 << 6 {
            let mut asg = vec![false; 12];
            for i in 0..6 {
                asg[2 * i + 1] = a >> i & 1 == 1;
            }
            prop_assert_eq!(m.eval(r, &asg).unwrap(), eval(&f, a));
        }
    }
}

/// Maps variable i to 2i (the current rail).
fn spread_vars(f: &F) -> F {
    let b = |x: &F| Box::new(spread_vars(x));
    match f {
        F::Const(c) => F::Const(*c),
        F::Var(i) => F::Var(2 * i),
        F::Not(x) => F::Not(b(x)),
        F::And(x, y) => F::And(b(x), b(y)),
        F::Or(x, y) => F::Or(b(x), b(y)),
        F::Xor(x, y) => F::Xor(b(x), b(y)),
        F::Iff(x, y) => F::Iff(b(x), b(y)),
        F::Diff(x, y) => F::Diff(b(x), b(y)),
        F::Exists(v, x) => F::Exists(2 * v, b(x)),
    }
}

fn random_formula(rng: &mut StdRng, vars: u32, depth: u32) -> F {
    if depth == 0 || rng.random_bool(0.2) {
        return if rng.random_bool(0.1) {
            F::Const(rng.random())
        } else {
            F::Var(rng.random_range(0..vars))
        };
    }
    let sub = |rng: &mut StdRng| Box::new(random_formula(rng, vars, depth - 1));
    match rng.random_range(0..7) {
        0 => F::Not(sub(rng)),
        1 => F::And(sub(rng), sub(rng)),
        2 => F::Or(sub(rng), sub(rng)),
        3 => F::Xor(sub(rng), sub(rng)),
        4 => F::Iff(sub(rng), sub(rng)),
        5 => F::Diff(sub(rng), sub(rng)),
        _ => F::Exists(rng.random_range(0..vars), sub(rng)),
    }
}

#[test]
fn transfer_and_clone_preserve_1000_functions() {
    const N: u32 = 10;
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut src = DdManager::new(N).unwrap();
    let mut dst = DdManager::new(N).unwrap();
    let mut roots = Vec::new();
    let mut moved = Vec::new();
    let mut tables = Vec::new();
    for _ in 0..1000 {
        let f = random_formula(&mut rng, N, 7);
        let d = build(&mut src, &f);
        let t = transfer(&src, d, &mut dst).unwrap();
        tables.push((0..1u32 << N).map(|a| eval(&f, a)).collect::<Vec<_>>());
        roots.push(d);
        moved.push(t);
    }
    let mut clone = src.clone_manager();
    let mut imported = DdManager::new(N).unwrap();
    let via_snapshot = imported.import(&src.export(&roots).unwrap()).unwrap();
    for (i, table) in tables.iter().enumerate() {
        let in_clone = transfer(&src, roots[i], &mut clone).unwrap();
        assert_eq!(in_clone.owner(), clone.id());
        for (a, &want) in table.iter().enumerate() {
            let asg = bits(a as u32, N);
            assert_eq!(src.eval(roots[i], &asg).unwrap(), want);
            assert_eq!(dst.eval(moved[i], &asg).unwrap(), want);
            assert_eq!(clone.eval(in_clone, &asg).unwrap(), want);
            assert_eq!(imported.eval(via_snapshot[i], &asg).unwrap(), want);
        }
        assert_eq!(src.dag_size(roots[i]).unwrap(), dst.dag_size(moved[i]).unwrap());
    }
    // transferring equal functions yields equal handles
    for i in 0..tables.len() {
        for j in i + 1..tables.len() {
            if tables[i] == tables[j] {
                assert_eq!(moved[i], moved[j]);
            }
        }
    }
    assert_ne!(clone.id(), src.id());
}
