//! Adding fault tolerance to a program.
//!
//! Starting from `p' = p` and `S' = S`, the loop repeats until nothing
//! changes:
//!
//! 1. compute the fault-span `T` (reachable from `S'` under `p' ∪ f`);
//! 2. remove the groups of unsafe `p'` transitions taken from `T`;
//! 3. shrink `S'` until it is closed under `p'` and free of new deadlocks;
//! 4. resolve deadlocks in `T`: add safe recovery where possible, otherwise
//!    make the deadlock unreachable by removing incoming groups;
//! 5. break `p'` cycles outside `S'` that could keep a computation from
//!    ever recovering.
//!
//! Every addition or removal goes through the group operator. A group is
//! never removed if that would leave a state of `S'` without successors;
//! the offending source is eliminated instead. Removed groups are remembered
//! and never re-added as recovery, which bounds the number of iterations.

use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::ddengine::{DdManager, DdNode, RailDirection, Snapshot};
use crate::group::{GroupEngine, GroupError};
use crate::model::{validate, Diagnostic, SynthesisResult, SynthesisStats, SystemSpec};
use crate::partition;
use crate::symbolic::{encode, EncodeError, Encoding, Layout, StateSet, SymResult, TransitionSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Sequential,
    ParallelGroup,
    ParallelPartition,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "seq" => Ok(Mode::Sequential),
            "par-group" => Ok(Mode::ParallelGroup),
            "par-partition" => Ok(Mode::ParallelPartition),
            _ => Err(format!("unknown mode '{s}' (expected seq, par-group or par-partition)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthesisOptions {
    pub mode: Mode,
    pub workers: usize,
    /// Cross-check every parallel group call against the sequential result.
    pub check_groups: bool,
    pub max_iterations: u32,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            mode: Mode::Sequential,
            workers: 1,
            check_groups: false,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid system: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("synthesis failed: {0}")]
    Failure(String),
    #[error("no convergence after {0} iterations")]
    NoConvergence(u32),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

impl From<crate::ddengine::DdError> for SynthError {
    fn from(e: crate::ddengine::DdError) -> Self {
        SynthError::Encode(e.into())
    }
}

pub type SynthResult<T> = Result<T, SynthError>;

/// The evolving state of one synthesis run, all inside one manager.
#[derive(Debug)]
pub struct Context {
    pub enc: Encoding,
    pub processes: Vec<TransitionSet>,
    pub p: TransitionSet,
    pub f: TransitionSet,
    pub s: StateSet,
    pub badtrans: TransitionSet,
    /// States from which faults alone can execute a bad transition.
    pub bad_states: StateSet,
    /// Bad transitions plus every transition into `bad_states`.
    pub bad_trans: TransitionSet,
    pub p_prime: TransitionSet,
    pub s_prime: StateSet,
    pub t: StateSet,
    /// Removed groups; recovery never re-adds these.
    pub forbidden: TransitionSet,
    /// States that must be made unreachable.
    pub pending: StateSet,
    pub removed: Vec<TransitionSet>,
    pub added: Vec<(usize, TransitionSet)>,
}

/// Outcome of one elimination run.
#[derive(Debug, Clone, Copy)]
pub struct Elimination {
    /// All states made unreachable (closure of the input).
    pub ds: StateSet,
    /// Groups removed and not re-inserted.
    pub removed: TransitionSet,
    /// States whose removed outgoing groups were re-inserted.
    pub reinserted_sources: StateSet,
    /// States left reachable because eliminating them would have pulled
    /// invariant states in (only without escalation).
    pub failed: StateSet,
}

/// Coordination points for elimination run by several workers.
pub trait ElimHooks {
    /// The part of `targets` another worker has already cut off.
    fn claimed_elsewhere(&mut self, enc: &mut Encoding, targets: StateSet) -> SymResult<StateSet>;
    /// Records states whose incoming groups this worker removed.
    fn claim(&mut self, enc: &mut Encoding, states: StateSet) -> SymResult<()>;
    /// Whether sources of unremovable transitions join `ds` (otherwise the
    /// target is reported as failed).
    fn escalate(&self) -> bool;
}

/// Plain single-threaded elimination.
pub struct Sequential;

impl ElimHooks for Sequential {
    fn claimed_elsewhere(&mut self, enc: &mut Encoding, _: StateSet) -> SymResult<StateSet> {
        Ok(enc.empty_states())
    }
    fn claim(&mut self, _: &mut Encoding, _: StateSet) -> SymResult<()> {
        Ok(())
    }
    fn escalate(&self) -> bool {
        true
    }
}

impl Context {
    pub fn new(spec: &SystemSpec) -> SynthResult<Context> {
        let e = encode(spec)?;
        let mut enc = e.enc;
        let (bad_states, bad_trans) = unsafe_closure(&mut enc, e.faults, e.badtrans)?;
        let s_prime = enc.diff(e.invariant, bad_states)?;
        let empty_t = enc.empty_transitions();
        let empty_s = enc.empty_states();
        Ok(Context {
            processes: e.processes,
            p: e.program,
            f: e.faults,
            s: e.invariant,
            badtrans: e.badtrans,
            bad_states,
            bad_trans,
            p_prime: e.program,
            s_prime,
            t: s_prime,
            forbidden: empty_t,
            pending: empty_s,
            removed: Vec::new(),
            added: Vec::new(),
            enc,
        })
    }

    pub fn fault_span(&mut self) -> SymResult<StateSet> {
        self.t = self.enc.fault_span(self.s_prime, self.p_prime, self.f)?;
        Ok(self.t)
    }

    fn src(&mut self, t: TransitionSet) -> SymResult<StateSet> {
        self.enc.sources(t)
    }

    /// Removes `g` from `p'` unless that deadlocks a state of `S'`. Returns
    /// (removed, kept) where `kept` holds the groups that had to stay.
    pub fn remove_groups(
        &mut self,
        engine: &mut GroupEngine,
        g: TransitionSet,
    ) -> SynthResult<(TransitionSet, TransitionSet)> {
        let g = self.enc.and(g, self.p_prime)?;
        if g.is_empty() {
            return Ok((g, g));
        }
        let remaining = self.enc.diff(self.p_prime, g)?;
        let had = self.src(self.p_prime)?;
        let has = self.src(remaining)?;
        let lost = self.enc.diff(had, has)?;
        let lost_s = self.enc.and(lost, self.s_prime)?;
        let kept = if lost_s.is_empty() {
            self.enc.empty_transitions()
        } else {
            let from_lost = self.enc.from(g, lost_s)?;
            let closure = engine.group_all(&mut self.enc, from_lost)?;
            self.enc.and(closure, g)?
        };
        let g = self.enc.diff(g, kept)?;
        if !g.is_empty() {
            self.p_prime = self.enc.diff(self.p_prime, g)?;
            self.forbidden = self.enc.or(self.forbidden, g)?;
            self.removed.push(g);
        }
        Ok((g, kept))
    }

    /// Step 2: remove unsafe groups reachable in `T`.
    pub fn remove_unsafe(&mut self, engine: &mut GroupEngine) -> SynthResult<bool> {
        let in_t = self.enc.from(self.p_prime, self.t)?;
        let bad = self.enc.and(in_t, self.bad_trans)?;
        if bad.is_empty() {
            return Ok(false);
        }
        let g = engine.group_all(&mut self.enc, bad)?;
        let (_, kept) = self.remove_groups(engine, g)?;
        let still_bad = self.enc.and(bad, kept)?;
        if !still_bad.is_empty() {
            let srcs = self.src(still_bad)?;
            self.pending = self.enc.or(self.pending, srcs)?;
        }
        Ok(true)
    }

    /// Step 3: largest `S'` closed under `p'` without new deadlocks.
    pub fn shrink_invariant(&mut self) -> SynthResult<bool> {
        let mut changed = false;
        let has_p = self.src(self.p)?;
        loop {
            let s = self.s_prime;
            let outside = self.enc.complement(s)?;
            let leaving = self.enc.preimage(self.p_prime, outside)?;
            let has_new = self.src(self.p_prime)?;
            let dead = self.enc.diff(has_p, has_new)?;
            let drop = self.enc.or(leaving, dead)?;
            let next = self.enc.diff(s, drop)?;
            if next == s {
                break;
            }
            self.s_prime = next;
            changed = true;
        }
        if self.s_prime.is_empty() {
            return Err(SynthError::Failure("the invariant became empty".into()));
        }
        Ok(changed)
    }

    /// States of `T` without a `p'` successor, except states of `S'` that
    /// never had a `p` successor.
    pub fn detect_deadlocks(&mut self) -> SymResult<StateSet> {
        let has = self.src(self.p_prime)?;
        let dead = self.enc.diff(self.t, has)?;
        let has_p = self.src(self.p)?;
        let allowed = self.enc.diff(self.s_prime, has_p)?;
        self.enc.diff(dead, allowed)
    }

    /// States of `T` that already reach `S'` under `p'`.
    fn recovering(&mut self) -> SymResult<StateSet> {
        let p_in_t = self.enc.from(self.p_prime, self.t)?;
        self.enc.backward_reach(self.s_prime, p_in_t)
    }

    /// Adds safe single-step recovery from deadlocks into states that
    /// already recover, layer by layer. Returns the deadlocks left over.
    pub fn add_recovery(&mut self, engine: &mut GroupEngine, ds: StateSet) -> SynthResult<StateSet> {
        let mut still = ds;
        if still.is_empty() {
            return Ok(still);
        }
        let mut target = self.recovering()?;
        // group members that must not be added: unsafe or leaving T from T,
        // previously removed, or changing p inside S'
        let dd = self.enc.domain_both()?;
        let bad = {
            let m = &mut self.enc.mgr;
            let unsafe_t = m.and(self.bad_trans.0, self.t.0)?;
            let t_next = m.rename(self.t.0, RailDirection::CurrentToNext)?;
            let leave = m.diff(self.t.0, t_next)?;
            let s_next = m.rename(self.s_prime.0, RailDirection::CurrentToNext)?;
            let ok_in_s = m.and(self.p.0, s_next)?;
            let bad_in_s = m.diff(self.s_prime.0, ok_in_s)?;
            let x = m.or_all([unsafe_t, leave, bad_in_s, self.forbidden.0])?;
            TransitionSet(m.and(x, dd.0)?)
        };
        loop {
            let cand = {
                let x = self.enc.product(still, target)?;
                let x = self.enc.and(x, dd)?;
                self.enc.diff(x, self.forbidden)?
            };
            if cand.is_empty() {
                break;
            }
            let g = engine.group_all(&mut self.enc, cand)?;
            let g_bad = self.enc.and(g, bad)?;
            let reject = engine.group_all(&mut self.enc, g_bad)?;
            let adm = self.enc.diff(g, reject)?;
            let adm = self.enc.diff(adm, self.p_prime)?;
            if adm.is_empty() {
                break;
            }
            let fixed = {
                let x = self.enc.from(adm, still)?;
                self.src(x)?
            };
            if fixed.is_empty() {
                break;
            }
            self.p_prime = self.enc.or(self.p_prime, adm)?;
            for j in 0..self.processes.len() {
                let part = engine.process_part(&mut self.enc, j, adm)?;
                if !part.is_empty() {
                    self.added.push((j, part));
                }
            }
            still = self.enc.diff(still, fixed)?;
            target = self.enc.or(target, fixed)?;
            if still.is_empty() {
                break;
            }
        }
        Ok(still)
    }

    /// Makes `ds` unreachable by removing the groups of program transitions
    /// into it. Fault predecessors join `ds`; so do states whose transitions
    /// into `ds` cannot be removed, and states left without successors
    /// (their removed outgoing groups are re-inserted).
    pub fn eliminate_core(
        &mut self,
        engine: &mut GroupEngine,
        ds: StateSet,
        hooks: &mut dyn ElimHooks,
    ) -> SynthResult<Elimination> {
        let mut ds = ds;
        let mut removed = self.enc.empty_transitions();
        let mut reinserted_sources = self.enc.empty_states();
        let mut failed = self.enc.empty_states();
        loop {
            // faults cannot be blocked
            loop {
                let pre = self.enc.preimage(self.f, ds)?;
                let pre = self.enc.and(pre, self.t)?;
                let pre = self.enc.diff(pre, failed)?;
                let next = self.enc.or(ds, pre)?;
                if next == ds {
                    break;
                }
                ds = next;
            }
            let outside = self.enc.diff(self.t, ds)?;
            let into = {
                let x = self.enc.from(self.p_prime, outside)?;
                self.enc.to(x, ds)?
            };
            let targets = self.enc.targets(into)?;
            let claimed = hooks.claimed_elsewhere(&mut self.enc, targets)?;
            let into = if claimed.is_empty() {
                into
            } else {
                let keep = self.enc.diff(targets, claimed)?;
                self.enc.to(into, keep)?
            };
            if into.is_empty() {
                break;
            }
            let g = engine.group_all(&mut self.enc, into)?;
            let g = self.enc.and(g, self.p_prime)?;
            // never leave a state of S' without successors
            let remaining = self.enc.diff(self.p_prime, g)?;
            let had = self.src(self.p_prime)?;
            let has = self.src(remaining)?;
            let lost = self.enc.diff(had, has)?;
            let lost_s = self.enc.and(lost, self.s_prime)?;
            if !lost_s.is_empty() {
                let from_lost = self.enc.from(g, lost_s)?;
                let kept = engine.group_all(&mut self.enc, from_lost)?;
                let kept_into = self.enc.and(kept, into)?;
                if !kept_into.is_empty() {
                    if hooks.escalate() {
                        let srcs = self.src(kept_into)?;
                        ds = self.enc.or(ds, srcs)?;
                    } else {
                        let tg = self.enc.targets(kept_into)?;
                        let tg = self.enc.and(tg, ds)?;
                        failed = self.enc.or(failed, tg)?;
                        ds = self.enc.diff(ds, tg)?;
                    }
                    continue;
                }
            }
            self.p_prime = remaining;
            removed = self.enc.or(removed, g)?;
            let cut = self.enc.targets(into)?;
            hooks.claim(&mut self.enc, cut)?;
            // states outside ds and S' that lost every successor
            let lost = self.enc.diff(lost, ds)?;
            let lost = self.enc.diff(lost, self.s_prime)?;
            let lost = self.enc.diff(lost, failed)?;
            let lost = self.enc.and(lost, self.t)?;
            if !lost.is_empty() {
                let from_lost = self.enc.from(g, lost)?;
                let back = engine.group_all(&mut self.enc, from_lost)?;
                let back = self.enc.and(back, g)?;
                self.p_prime = self.enc.or(self.p_prime, back)?;
                removed = self.enc.diff(removed, back)?;
                ds = self.enc.or(ds, lost)?;
                reinserted_sources = self.enc.or(reinserted_sources, lost)?;
            }
        }
        Ok(Elimination {
            ds,
            removed,
            reinserted_sources,
            failed,
        })
    }

    /// Sequential elimination, committing the result to the context.
    pub fn eliminate(&mut self, engine: &mut GroupEngine, ds: StateSet) -> SynthResult<()> {
        let out = self.eliminate_core(engine, ds, &mut Sequential)?;
        self.commit_elimination(out.ds, out.removed)
    }

    pub fn commit_elimination(&mut self, ds: StateSet, removed: TransitionSet) -> SynthResult<()> {
        if !removed.is_empty() {
            self.forbidden = self.enc.or(self.forbidden, removed)?;
            self.removed.push(removed);
        }
        self.s_prime = self.enc.diff(self.s_prime, ds)?;
        self.pending = self.enc.diff(self.pending, ds)?;
        if self.s_prime.is_empty() {
            return Err(SynthError::Failure(
                "every invariant state must be eliminated".into(),
            ));
        }
        Ok(())
    }

    /// Breaks `p'` cycles outside `S'`: every edge inside the cycle core that
    /// does not move strictly closer to `S'` is removed (group-wise).
    pub fn resolve_cycles(&mut self, engine: &mut GroupEngine) -> SynthResult<bool> {
        let outside = self.enc.diff(self.t, self.s_prime)?;
        let inner = {
            let x = self.enc.from(self.p_prime, outside)?;
            self.enc.to(x, outside)?
        };
        let core = self.enc.cycle_core(outside, inner)?;
        if core.is_empty() {
            return Ok(false);
        }
        // distance layers towards S'
        let p_in_t = self.enc.from(self.p_prime, self.t)?;
        let mut below = self.s_prime;
        let mut dec = self.enc.empty_transitions();
        loop {
            let pre = self.enc.preimage(p_in_t, below)?;
            let layer = self.enc.diff(pre, below)?;
            if layer.is_empty() {
                break;
            }
            let down = {
                let x = self.enc.from(p_in_t, layer)?;
                self.enc.to(x, below)?
            };
            dec = self.enc.or(dec, down)?;
            below = self.enc.or(below, layer)?;
        }
        let cyc = {
            let x = self.enc.from(inner, core)?;
            let x = self.enc.to(x, core)?;
            self.enc.diff(x, dec)?
        };
        if cyc.is_empty() {
            return Ok(false);
        }
        let g = engine.group_all(&mut self.enc, cyc)?;
        let (gone, kept) = self.remove_groups(engine, g)?;
        let stuck = self.enc.and(cyc, kept)?;
        if !stuck.is_empty() {
            let srcs = self.src(stuck)?;
            self.pending = self.enc.or(self.pending, srcs)?;
        }
        Ok(!gone.is_empty() || !stuck.is_empty())
    }

    fn roots(&self) -> Vec<DdNode> {
        let mut r = vec![
            self.p.0,
            self.f.0,
            self.s.0,
            self.badtrans.0,
            self.bad_states.0,
            self.bad_trans.0,
            self.p_prime.0,
            self.s_prime.0,
            self.t.0,
            self.forbidden.0,
            self.pending.0,
        ];
        r.extend(self.processes.iter().map(|t| t.0));
        r
    }

    /// Exports the context plus `extra` roots, for a copy in another manager.
    pub fn snapshot(&self, extra: &[DdNode]) -> SynthResult<Snapshot> {
        let mut r = self.roots();
        r.extend_from_slice(extra);
        Ok(self.enc.mgr.export(&r)?)
    }

    /// Rebuilds a context (without change history) in a fresh manager.
    /// Returns the extra roots as well.
    pub fn from_snapshot(
        layout: Arc<Layout>,
        snap: &Snapshot,
        processes: usize,
    ) -> SynthResult<(Context, Vec<DdNode>)> {
        let mut mgr = DdManager::new(snap.var_count)?;
        let r = mgr.import(snap)?;
        let enc = Encoding::with_manager(layout, mgr)?;
        let t = |i: usize| TransitionSet(r[i]);
        let s = |i: usize| StateSet(r[i]);
        let ctx = Context {
            p: t(0),
            f: t(1),
            s: s(2),
            badtrans: t(3),
            bad_states: s(4),
            bad_trans: t(5),
            p_prime: t(6),
            s_prime: s(7),
            t: s(8),
            forbidden: t(9),
            pending: s(10),
            processes: (11..11 + processes).map(t).collect(),
            removed: Vec::new(),
            added: Vec::new(),
            enc,
        };
        let extra = r[11 + processes..].to_vec();
        Ok((ctx, extra))
    }

    pub fn into_result(mut self, stats: SynthesisStats) -> SynthResult<(Encoding, SynthesisResult)> {
        let mut added = Vec::new();
        for (j, t) in std::mem::take(&mut self.added) {
            let live = self.enc.and(t, self.p_prime)?;
            if !live.is_empty() {
                added.push((j, live));
            }
        }
        let result = SynthesisResult {
            p_prime: self.p_prime,
            s_prime: self.s_prime,
            fault_span: self.t,
            added_recovery: added,
            removed_groups: std::mem::take(&mut self.removed),
            stats,
        };
        Ok((self.enc, result))
    }
}

/// States from which faults alone execute a bad transition, and every
/// transition that is bad or enters such a state.
pub fn unsafe_closure(
    enc: &mut Encoding,
    f: TransitionSet,
    badtrans: TransitionSet,
) -> SymResult<(StateSet, TransitionSet)> {
    let bad_f = enc.and(f, badtrans)?;
    let mut ms = enc.sources(bad_f)?;
    loop {
        let pre = enc.preimage(f, ms)?;
        let next = enc.or(ms, pre)?;
        if next == ms {
            break;
        }
        ms = next;
    }
    let d = enc.domain();
    let into = enc.product(d, ms)?;
    let mt = enc.or(badtrans, into)?;
    Ok((ms, mt))
}

struct Timer {
    total: Duration,
}

impl Timer {
    fn time<T>(&mut self, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.total += start.elapsed();
        out
    }
}

fn make_engine(spec: &SystemSpec, ctx: &mut Context, opts: &SynthesisOptions) -> SynthResult<GroupEngine> {
    Ok(match (opts.mode, opts.check_groups) {
        (Mode::ParallelGroup, false) => GroupEngine::parallel(spec, &mut ctx.enc, opts.workers)?,
        (Mode::ParallelGroup, true) => GroupEngine::checked(spec, &mut ctx.enc, opts.workers)?,
        _ => {
            // still validate the worker count against the process count
            crate::group::process_ranges(spec.processes.len(), opts.workers)?;
            GroupEngine::sequential(spec, &mut ctx.enc)?
        }
    })
}

/// Extra diagnostics from a run, beyond [`SynthesisStats`].
#[derive(Clone, Debug, Default)]
pub struct RunInfo {
    pub group_mismatches: u64,
}

pub fn synthesize(spec: &SystemSpec, opts: &SynthesisOptions) -> SynthResult<(Encoding, SynthesisResult)> {
    synthesize_with_info(spec, opts).map(|(e, r, _)| (e, r))
}

pub fn synthesize_with_info(
    spec: &SystemSpec,
    opts: &SynthesisOptions,
) -> SynthResult<(Encoding, SynthesisResult, RunInfo)> {
    let start = Instant::now();
    let diags = validate(spec);
    if !diags.is_empty() {
        return Err(SynthError::Invalid(diags));
    }
    let mut ctx = Context::new(spec)?;
    let mut engine = make_engine(spec, &mut ctx, opts)?;
    let spec_arc = Arc::new(spec.clone());
    let outcome = run_loop(&spec_arc, &mut ctx, &mut engine, opts);
    let info = RunInfo {
        group_mismatches: engine.mismatches,
    };
    engine.shutdown()?;
    let mut stats = outcome?;
    stats.group_calls += engine.calls;
    stats.group_wall_time += engine.wall_time.as_secs_f64();
    stats.worker_count = opts.workers;
    stats.total_time = start.elapsed().as_secs_f64();
    let (enc, result) = ctx.into_result(stats)?;
    Ok((enc, result, info))
}

fn run_loop(
    spec: &Arc<SystemSpec>,
    ctx: &mut Context,
    engine: &mut GroupEngine,
    opts: &SynthesisOptions,
) -> SynthResult<SynthesisStats> {
    let mut stats = SynthesisStats::default();
    let mut deadlock_timer = Timer { total: Duration::ZERO };
    let mut iterations = 0;
    loop {
        iterations += 1;
        if iterations > opts.max_iterations {
            return Err(SynthError::NoConvergence(opts.max_iterations));
        }
        ctx.fault_span()?;
        let mut changed = ctx.remove_unsafe(engine)?;
        changed |= ctx.shrink_invariant()?;
        ctx.fault_span()?;

        let pending = ctx.enc.and(ctx.pending, ctx.t)?;
        if !pending.is_empty() {
            // leftovers of earlier steps, including partition repairs, are
            // always eliminated sequentially
            stats.deadlock_count_per_iteration.push(0.0);
            deadlock_timer.time(|| ctx.eliminate(engine, pending))?;
            continue;
        }
        ctx.pending = ctx.enc.empty_states();

        let ds = deadlock_timer.time(|| ctx.detect_deadlocks())?;
        stats
            .deadlock_count_per_iteration
            .push(ctx.enc.count_states_f64(ds));
        if !ds.is_empty() {
            let still = deadlock_timer.time(|| ctx.add_recovery(engine, ds))?;
            if !still.is_empty() {
                deadlock_timer.time(|| eliminate_any(spec, ctx, engine, opts, still, &mut stats))?;
            }
            continue;
        }
        if deadlock_timer.time(|| ctx.resolve_cycles(engine))? {
            continue;
        }
        if !changed {
            break;
        }
    }
    stats.iterations = iterations;
    stats.deadlock_resolution_time = deadlock_timer.total.as_secs_f64();
    Ok(stats)
}

fn eliminate_any(
    spec: &Arc<SystemSpec>,
    ctx: &mut Context,
    engine: &mut GroupEngine,
    opts: &SynthesisOptions,
    ds: StateSet,
    stats: &mut SynthesisStats,
) -> SynthResult<()> {
    if opts.mode == Mode::ParallelPartition {
        let (calls, wall) = partition::eliminate_partitioned_into(spec, ctx, engine, ds, opts.workers)?;
        stats.group_calls += calls;
        stats.group_wall_time += wall.as_secs_f64();
        Ok(())
    } else {
        ctx.eliminate(engine, ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::verify::verify_result;

    fn run(text: &str) -> SynthResult<(Encoding, SynthesisResult)> {
        synthesize(&parse(text).unwrap(), &SynthesisOptions::default())
    }

    #[test]
    fn already_tolerant_program_is_kept() {
        let text = "\
system toggle
var x : {0,1,2}
process p
  read x
  write x
  action a: x = 0 -> x := 1
  action b: x = 1 -> x := 0
  action c: x = 2 -> x := 0
fault f: x = 1 -> x := 2
invariant x != 2
badtrans x = 0 & x' = 2
";
        let spec = parse(text).unwrap();
        let (enc, r) = run(text).unwrap();
        let e = encode(&spec).unwrap();
        assert_eq!(
            enc.count_transitions(r.p_prime).unwrap(),
            e.enc.count_transitions(e.program).unwrap()
        );
        assert!(r.removed_groups.is_empty());
        assert!(verify_result(&spec, &enc, &r).unwrap().passed());
    }

    #[test]
    fn recovery_is_added() {
        // the fault strands x at 2; recovery x := 0 must be added
        let text = "\
system strand
var x : {0,1,2}
process p
  read x
  write x
  action a: x = 0 -> x := 1
  action b: x = 1 -> x := 0
fault f: x = 1 -> x := 2
invariant x != 2
badtrans x = 2 & x' = 1
";
        let spec = parse(text).unwrap();
        let (enc, r) = run(text).unwrap();
        assert!(!r.added_recovery.is_empty());
        let rep = verify_result(&spec, &enc, &r).unwrap();
        assert!(rep.passed(), "{rep}");
    }

    #[test]
    fn unavoidable_violation_fails() {
        // every invariant state is one fault away from a bad transition
        let text = "\
system doomed
var x : {0,1}
var y : {0,1}
process p
  read x, y
  write x
  action a: x = 0 -> x := 1
  action b: x = 1 -> x := 0
fault f: y = 0 -> y := 1
invariant y = 0
badtrans y = 0 & y' = 1
";
        assert!(matches!(run(text), Err(SynthError::Failure(_))));
    }

    #[test]
    fn fault_reached_state_removes_predecessor() {
        // 2 is reached from 1 by a fault and every move out of 2 is bad, so
        // 1 must become unreachable
        let text = "\
system cut
var x : {0,1,2,3}
process p
  read x
  write x
  action a: x = 0 -> x := 1 | 3
  action b: x = 1 -> x := 0
  action c: x = 3 -> x := 0
fault f: x = 1 -> x := 2
invariant x != 2
badtrans x = 2 & x' != 2
";
        let spec = parse(text).unwrap();
        let (enc, r) = run(text).unwrap();
        let one = enc.layout().var("x").unwrap().value_index("1").unwrap();
        let s_states = enc.states(r.s_prime).unwrap();
        assert_eq!(s_states.len(), 2);
        assert!(!s_states.contains(&vec![one]));
        assert!(verify_result(&spec, &enc, &r).unwrap().passed());
    }

    #[test]
    fn cycle_outside_invariant_is_broken() {
        let text = "\
system loop
var x : {0,1,2,3}
process p
  read x
  write x
  action a: x = 0 -> x := 0 | 1
  action b: x = 2 -> x := 3
  action c: x = 3 -> x := 2
fault f: x = 1 -> x := 2
invariant x = 0 | x = 1
badtrans false
";
        let spec = parse(text).unwrap();
        let (enc, r) = run(text).unwrap();
        let rep = verify_result(&spec, &enc, &r).unwrap();
        assert!(rep.passed(), "{rep}");
    }
}
