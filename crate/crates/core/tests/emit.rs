use std::collections::BTreeSet;

use ftrevise::casestudies::{generate, CaseParams};
use ftrevise::dsl::{emit_result, parse, EmitError, EmitMode};
use ftrevise::synthesis::{synthesize, SynthesisOptions};
use ftrevise::verify::explicit::ExplicitModel;

fn run(spec: &ftrevise::SystemSpec) -> (ftrevise::Encoding, ftrevise::SynthesisResult) {
    synthesize(spec, &SynthesisOptions::default()).unwrap()
}

fn case(name: &str) -> ftrevise::SystemSpec {
    generate(name.parse::<CaseParams>().unwrap()).unwrap()
}

#[test]
fn byzantine_summary_names_recovery_of_l() {
    let spec = case("byz:3");
    let (mut enc, r) = run(&spec);
    let text = emit_result(&r, &spec, &mut enc, EmitMode::Summary).unwrap();
    assert!(text.contains("  process l ("), "{text}");
    assert!(text.contains(
        "d.g = 0 & d.j = 0 & d.k = 0 & d.l = 1 & f.l = false & b.l = false -> d.l := 0, f.l := false"
    ));
    assert!(!text.contains("transitions:\n"));
}

#[test]
fn nothing_removed_is_reported() {
    let spec = parse(
        "\
system toggle
var x : {0,1}
process p
  read x
  write x
  action a: x = 0 -> x := 1
  action b: x = 1 -> x := 0
invariant true
badtrans false
",
    )
    .unwrap();
    let (mut enc, r) = run(&spec);
    let text = emit_result(&r, &spec, &mut enc, EmitMode::Summary).unwrap();
    assert!(text.contains("removed: 0 groups\n"));
    assert!(text.contains("recovery: 0 processes\n"));
}

#[test]
fn token_ring_full_dump_matches_enumeration() {
    let spec = case("token:4");
    let (mut enc, r) = run(&spec);
    let text = emit_result(&r, &spec, &mut enc, EmitMode::FullDump).unwrap();
    let dumped: BTreeSet<String> = text
        .split("transitions:\n")
        .nth(1)
        .unwrap()
        .lines()
        .map(|l| l.trim().to_string())
        .collect();
    let oracle = ExplicitModel::build(&spec, 1_000_000).unwrap();
    let mut expect = BTreeSet::new();
    for s in 0..oracle.state_count() {
        for t in 0..oracle.state_count() {
            let e = enc.transition(&oracle.decode(s), &oracle.decode(t)).unwrap();
            if enc.intersects(e, r.p_prime).unwrap() {
                expect.insert(format!("{} -> {}", oracle.format_state(s), oracle.format_state(t)));
            }
        }
    }
    assert!(!expect.is_empty());
    assert_eq!(dumped, expect);
}

#[test]
fn full_dump_refuses_large_systems() {
    let spec = case("byz:6");
    let (mut enc, r) = run(&spec);
    assert!(matches!(
        emit_result(&r, &spec, &mut enc, EmitMode::FullDump),
        Err(EmitError::TooLarge { .. })
    ));
}
