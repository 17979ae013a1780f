//! Independent checks of a synthesized program, and an explicit-state oracle.
//!
//! The checker never reuses intermediate results of synthesis: it re-encodes
//! the system in a fresh manager and imports only the final `p'`, `S'` and `T`.
//!
//! * C1: `S'` is nonempty and `S' ⊆ S`.
//! * C2: inside `S'`, `p'` only uses transitions of `p`, never leaves `S'`,
//!   and has no deadlock that `p` did not already have.
//! * C3: `S' ⊆ T`; `T` is closed under `p' ∪ f`; no `(p' ∪ f)` step from `T`
//!   is a bad transition; every state of `T` reaches `S'` under `p'`, and no
//!   `p'`-cycle lies inside `T − S'`.

pub mod explicit;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ddengine::Snapshot;
use crate::model::{SynthesisResult, SystemSpec};
use crate::symbolic::{encode, EncodeError, Encoded, Encoding, StateSet, TransitionSet};

pub const RESULT_SCHEMA: &str = "ftrevise-result/1";

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("result was produced for a different system (layout differs)")]
    LayoutMismatch,
    #[error("unsupported result schema '{0}'")]
    Schema(String),
    #[error("malformed result: {0}")]
    Malformed(String),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

impl From<crate::ddengine::DdError> for VerifyError {
    fn from(e: crate::ddengine::DdError) -> Self {
        VerifyError::Encode(e.into())
    }
}

/// Manager-independent form of a synthesis result.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultDump {
    pub schema: String,
    pub system: String,
    pub layout: String,
    /// Roots, in order: p', S', T.
    pub sets: Snapshot,
}

impl ResultDump {
    pub fn new(spec: &SystemSpec, enc: &Encoding, result: &SynthesisResult) -> Result<ResultDump, VerifyError> {
        let sets = enc
            .mgr
            .export(&[result.p_prime.0, result.s_prime.0, result.fault_span.0])?;
        Ok(ResultDump {
            schema: RESULT_SCHEMA.to_string(),
            system: spec.name.clone(),
            layout: enc.layout().signature(),
            sets,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    C1,
    C2,
    C3,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::C1 => "C1",
            Condition::C2 => "C2",
            Condition::C3 => "C3",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub condition: Condition,
    /// `None` when the condition holds.
    pub failure: Option<String>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.failure {
            None => write!(f, "{}: pass", self.condition),
            Some(w) => write!(f, "{}: FAIL: {w}", self.condition),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub verdicts: Vec<Verdict>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(Verdict::passed)
    }

    pub fn first_failure(&self) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| !v.passed())
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.verdicts {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// The candidate `(p', S', T)` inside the checker's own encoding.
pub struct Candidate<'a> {
    pub model: &'a mut Encoded,
    pub p_prime: TransitionSet,
    pub s_prime: StateSet,
    pub fault_span: StateSet,
}

type Check = Result<Option<String>, EncodeError>;

fn state_witness(enc: &Encoding, x: StateSet) -> Result<String, EncodeError> {
    Ok(match enc.pick_state(x)? {
        Some(s) => enc.layout().format_state(&s),
        None => "<none>".into(),
    })
}

fn transition_witness(enc: &Encoding, t: TransitionSet) -> Result<String, EncodeError> {
    Ok(match enc.pick_transition(t)? {
        Some((a, b)) => format!(
            "[{}] -> [{}]",
            enc.layout().format_state(&a),
            enc.layout().format_state(&b)
        ),
        None => "<none>".into(),
    })
}

pub fn check_c1(c: &mut Candidate) -> Check {
    let enc = &mut c.model.enc;
    if c.s_prime.is_empty() {
        return Ok(Some("S' is empty".into()));
    }
    let outside = enc.diff(c.s_prime, c.model.invariant)?;
    if !outside.is_empty() {
        return Ok(Some(format!("state of S' outside S: {}", state_witness(enc, outside)?)));
    }
    Ok(None)
}

pub fn check_c2(c: &mut Candidate) -> Check {
    let enc = &mut c.model.enc;
    let inside = enc.from(c.p_prime, c.s_prime)?;
    let new = enc.diff(inside, c.model.program)?;
    if !new.is_empty() {
        return Ok(Some(format!(
            "transition of p' from S' not in p: {}",
            transition_witness(enc, new)?
        )));
    }
    let target_outside = enc.complement(c.s_prime)?;
    let leaving = enc.to(inside, target_outside)?;
    if !leaving.is_empty() {
        return Ok(Some(format!(
            "transition of p' leaves S': {}",
            transition_witness(enc, leaving)?
        )));
    }
    let has_new = enc.sources(c.p_prime)?;
    let had_old = enc.sources(c.model.program)?;
    let dead = enc.diff(c.s_prime, has_new)?;
    let new_dead = enc.and(dead, had_old)?;
    if !new_dead.is_empty() {
        return Ok(Some(format!(
            "new deadlock in S': {}",
            state_witness(enc, new_dead)?
        )));
    }
    Ok(None)
}

pub fn check_c3(c: &mut Candidate) -> Check {
    let enc = &mut c.model.enc;
    let t = c.fault_span;
    let missing = enc.diff(c.s_prime, t)?;
    if !missing.is_empty() {
        return Ok(Some(format!("state of S' outside T: {}", state_witness(enc, missing)?)));
    }
    let steps = enc.or(c.p_prime, c.model.faults)?;
    let from_t = enc.from(steps, t)?;
    let outside = enc.complement(t)?;
    let escaping = enc.to(from_t, outside)?;
    if !escaping.is_empty() {
        return Ok(Some(format!(
            "T not closed under p' ∪ f: {}",
            transition_witness(enc, escaping)?
        )));
    }
    let bad = enc.and(from_t, c.model.badtrans)?;
    if !bad.is_empty() {
        let fault_bad = enc.and(bad, c.model.faults)?;
        let kind = if fault_bad.is_empty() { "program" } else { "fault" };
        return Ok(Some(format!(
            "bad {kind} transition from T: {}",
            transition_witness(enc, bad)?
        )));
    }
    let p_in_t = enc.from(c.p_prime, t)?;
    let reach = enc.backward_reach(c.s_prime, p_in_t)?;
    let stuck = enc.diff(t, reach)?;
    if !stuck.is_empty() {
        return Ok(Some(format!(
            "state of T cannot reach S' under p': {}",
            state_witness(enc, stuck)?
        )));
    }
    let outside_s = enc.diff(t, c.s_prime)?;
    let cycle_edges = {
        let x = enc.from(c.p_prime, outside_s)?;
        enc.to(x, outside_s)?
    };
    let core = enc.cycle_core(outside_s, cycle_edges)?;
    if !core.is_empty() {
        return Ok(Some(format!(
            "p' cycle inside T − S' through: {}",
            state_witness(enc, core)?
        )));
    }
    Ok(None)
}

pub fn check_all(c: &mut Candidate) -> Result<Report, VerifyError> {
    let verdicts = vec![
        Verdict {
            condition: Condition::C1,
            failure: check_c1(c)?,
        },
        Verdict {
            condition: Condition::C2,
            failure: check_c2(c)?,
        },
        Verdict {
            condition: Condition::C3,
            failure: check_c3(c)?,
        },
    ];
    Ok(Report { verdicts })
}

/// Re-encodes `spec` and checks the dumped sets against it.
pub fn verify_dump(spec: &SystemSpec, dump: &ResultDump) -> Result<Report, VerifyError> {
    if dump.schema != RESULT_SCHEMA {
        return Err(VerifyError::Schema(dump.schema.clone()));
    }
    let mut model = encode(spec)?;
    if model.enc.layout().signature() != dump.layout {
        return Err(VerifyError::LayoutMismatch);
    }
    let roots = model
        .enc
        .mgr
        .import(&dump.sets)
        .map_err(|e| VerifyError::Malformed(e.to_string()))?;
    if roots.len() != 3 {
        return Err(VerifyError::Malformed(format!("expected 3 sets, found {}", roots.len())));
    }
    if !model.enc.mgr.support(roots[1])?.iter().all(|v| v % 2 == 0)
        || !model.enc.mgr.support(roots[2])?.iter().all(|v| v % 2 == 0)
    {
        return Err(VerifyError::Malformed("state sets mention next-state bits".into()));
    }
    // anything outside the domain cannot be a state
    let d = model.enc.domain();
    let dd = model.enc.domain_both()?;
    let p_prime = model.enc.and(TransitionSet(roots[0]), dd)?;
    let s_prime = model.enc.and(StateSet(roots[1]), d)?;
    let fault_span = model.enc.and(StateSet(roots[2]), d)?;
    check_all(&mut Candidate {
        model: &mut model,
        p_prime,
        s_prime,
        fault_span,
    })
}

/// Checks an in-memory result by round-tripping it through a dump.
pub fn verify_result(spec: &SystemSpec, enc: &Encoding, result: &SynthesisResult) -> Result<Report, VerifyError> {
    verify_dump(spec, &ResultDump::new(spec, enc, result)?)
}
