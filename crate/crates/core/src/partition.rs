//! Deadlock elimination split across workers.
//!
//! The deadlock set is cut into parts by variable values, balanced by
//! minterm count. Each worker copies the synthesis context into its own
//! manager and eliminates its part; a shared visited set lets workers skip
//! states another worker already cut off. The master merges by intersecting
//! the surviving programs, then repairs two kinds of inconsistency:
//!
//! * a state whose successors were removed by different workers becomes a
//!   deadlock only in the merged view: its outgoing groups are re-inserted
//!   and it is handed back for elimination;
//! * a state some worker failed to eliminate stays reachable, so removing
//!   its incoming groups was pointless: they are restored.

use std::sync::{Arc, Mutex};
use std::time::Duration;

use crate::ddengine::Snapshot;
use crate::group::GroupEngine;
use crate::model::SystemSpec;
use crate::symbolic::{Encoding, StateSet, SymResult, TransitionSet};
use crate::synthesis::{Context, ElimHooks, SynthError, SynthResult};

const WORKER_STACK: usize = 64 << 20;

#[derive(Clone, Debug)]
pub struct PartitionPlan {
    pub parts: Vec<StateSet>,
    pub workers: usize,
}

/// Splits `ds` into at most `n` disjoint parts of similar size.
pub fn make_partitions(enc: &mut Encoding, ds: StateSet, n: usize) -> SymResult<PartitionPlan> {
    let n = n.max(1);
    let mut parts = vec![ds];
    let layout = enc.layout().clone();
    while parts.len() < n {
        let (idx, _) = parts
            .iter()
            .enumerate()
            .map(|(i, p)| (i, enc.count_states_f64(*p)))
            .fold((0, -1.0), |best, x| if x.1 > best.1 { x } else { best });
        let part = parts[idx];
        let mut best: Option<(f64, StateSet, StateSet)> = None;
        for (vi, v) in layout.vars().iter().enumerate() {
            // split the variable's values into two groups of similar weight
            let mut by_value = Vec::with_capacity(v.domain.len());
            for k in 0..v.domain.len() {
                let lit = StateSet(enc.value_at(vi, k, false)?);
                let s = enc.and(part, lit)?;
                by_value.push((enc.count_states_f64(s), lit));
            }
            by_value.sort_by(|a, b| b.0.total_cmp(&a.0));
            let (mut wa, mut wb) = (0.0, 0.0);
            let mut side = enc.empty_states();
            for (w, lit) in by_value {
                if wa <= wb {
                    wa += w;
                    side = enc.or(side, lit)?;
                } else {
                    wb += w;
                }
            }
            let a = enc.and(part, side)?;
            let b = enc.diff(part, side)?;
            if a.is_empty() || b.is_empty() {
                continue;
            }
            let gap = (wa - wb).abs();
            if best.as_ref().is_none_or(|(g, _, _)| gap < *g) {
                best = Some((gap, a, b));
            }
        }
        match best {
            Some((_, a, b)) => {
                parts[idx] = a;
                parts.push(b);
            }
            None => break,
        }
    }
    Ok(PartitionPlan { parts, workers: n })
}

/// One worker's result, translated into the master's manager.
#[derive(Clone, Copy, Debug)]
pub struct WorkerOutcome {
    pub surviving: TransitionSet,
    /// States the worker made unreachable.
    pub ds: StateSet,
    pub failed_states: StateSet,
}

#[derive(Clone, Debug)]
pub struct EliminationOutcome {
    pub workers: Vec<WorkerOutcome>,
    pub visited: StateSet,
    pub group_calls: u64,
    pub group_time: Duration,
}

struct Shared {
    me: usize,
    claims: Arc<Mutex<Vec<Option<Snapshot>>>>,
    mine: Option<StateSet>,
    escalate: bool,
}

impl ElimHooks for Shared {
    fn claimed_elsewhere(&mut self, enc: &mut Encoding, targets: StateSet) -> SymResult<StateSet> {
        let others: Vec<Snapshot> = {
            let claims = self.claims.lock().expect("visited set poisoned");
            claims
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != self.me)
                .filter_map(|(_, c)| c.clone())
                .collect()
        };
        let mut acc = enc.empty_states();
        for snap in &others {
            let r = enc.mgr.import(snap)?;
            acc = enc.or(acc, StateSet(r[0]))?;
        }
        enc.and(acc, targets)
    }

    fn claim(&mut self, enc: &mut Encoding, states: StateSet) -> SymResult<()> {
        let mine = match self.mine {
            Some(m) => enc.or(m, states)?,
            None => states,
        };
        self.mine = Some(mine);
        let snap = enc.mgr.export(&[mine.0])?;
        self.claims.lock().expect("visited set poisoned")[self.me] = Some(snap);
        Ok(())
    }

    fn escalate(&self) -> bool {
        self.escalate
    }
}

struct WorkerReport {
    snap: Snapshot,
    calls: u64,
    time: Duration,
}

fn run_worker(
    spec: &SystemSpec,
    ctx_snap: &Snapshot,
    layout: Arc<crate::symbolic::Layout>,
    processes: usize,
    index: usize,
    claims: Arc<Mutex<Vec<Option<Snapshot>>>>,
    escalate: bool,
) -> SynthResult<WorkerReport> {
    let (mut ctx, extra) = Context::from_snapshot(layout, ctx_snap, processes)?;
    let part = StateSet(extra[index]);
    let mut engine = GroupEngine::sequential(spec, &mut ctx.enc)?;
    let mut hooks = Shared {
        me: index,
        claims,
        mine: None,
        escalate,
    };
    let out = ctx.eliminate_core(&mut engine, part, &mut hooks)?;
    let snap = ctx
        .enc
        .mgr
        .export(&[ctx.p_prime.0, out.ds.0, out.failed.0])?;
    Ok(WorkerReport {
        snap,
        calls: engine.calls,
        time: engine.wall_time,
    })
}

/// Eliminates `ds` with one worker per part of `plan`.
pub fn eliminate_with_plan(
    spec: &SystemSpec,
    ctx: &mut Context,
    plan: &PartitionPlan,
) -> SynthResult<EliminationOutcome> {
    let n = plan.parts.len();
    let extra: Vec<_> = plan.parts.iter().map(|p| p.0).collect();
    let snap = ctx.snapshot(&extra)?;
    let claims = Arc::new(Mutex::new(vec![None; n]));
    let layout = ctx.enc.layout().clone();
    let processes = ctx.processes.len();
    // with a single part nothing can go wrong between workers, so it behaves
    // exactly like sequential elimination
    let escalate = n == 1;
    let reports: Vec<SynthResult<WorkerReport>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..n)
            .map(|i| {
                let claims = claims.clone();
                let layout = layout.clone();
                let snap = &snap;
                std::thread::Builder::new()
                    .name(format!("partition-{i}"))
                    .stack_size(WORKER_STACK)
                    .spawn_scoped(scope, move || {
                        run_worker(spec, snap, layout, processes, i, claims, escalate)
                    })
                    .expect("failed to spawn partition worker")
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(SynthError::Failure("partition worker panicked".into())))
            })
            .collect()
    });
    let mut workers = Vec::with_capacity(n);
    let mut group_calls = 0;
    let mut group_time = Duration::ZERO;
    for r in reports {
        let r = r?;
        group_calls += r.calls;
        group_time += r.time;
        let roots = ctx.enc.mgr.import(&r.snap)?;
        workers.push(WorkerOutcome {
            surviving: TransitionSet(roots[0]),
            ds: StateSet(roots[1]),
            failed_states: StateSet(roots[2]),
        });
    }
    let mut visited = ctx.enc.empty_states();
    let claims = claims.lock().expect("visited set poisoned");
    for c in claims.iter().flatten() {
        let r = ctx.enc.mgr.import(c)?;
        visited = ctx.enc.or(visited, StateSet(r[0]))?;
    }
    Ok(EliminationOutcome {
        workers,
        visited,
        group_calls,
        group_time,
    })
}

pub fn eliminate_partitioned(
    spec: &SystemSpec,
    ctx: &mut Context,
    ds: StateSet,
    n: usize,
) -> SynthResult<EliminationOutcome> {
    let plan = make_partitions(&mut ctx.enc, ds, n)?;
    eliminate_with_plan(spec, ctx, &plan)
}

/// What [`merge_and_repair`] did, for inspection.
#[derive(Clone, Copy, Debug)]
pub struct Repair {
    /// States handed back for elimination.
    pub new_ds: StateSet,
    /// States that became deadlocks only in the merged view.
    pub case1: StateSet,
    pub case1_restored: TransitionSet,
    pub case2_restored: TransitionSet,
    /// States made unreachable and dropped from `S'`.
    pub eliminated: StateSet,
}

/// Merges worker results into `ctx` and repairs inconsistencies.
pub fn merge_and_repair(
    ctx: &mut Context,
    engine: &mut GroupEngine,
    outcome: &EliminationOutcome,
) -> SynthResult<Repair> {
    let old = ctx.p_prime;
    let enc = &mut ctx.enc;
    let mut merged = old;
    let mut ds = enc.empty_states();
    let mut failed = enc.empty_states();
    for w in &outcome.workers {
        merged = enc.and(merged, w.surviving)?;
        ds = enc.or(ds, w.ds)?;
        failed = enc.or(failed, w.failed_states)?;
    }
    let ds = enc.diff(ds, failed)?;
    let removed = enc.diff(old, merged)?;
    let mut p = merged;

    // Case 2: incoming groups of states that stay reachable
    let mut case2 = enc.empty_transitions();
    if !failed.is_empty() {
        let inc = enc.to(removed, failed)?;
        let g = engine.group_all(enc, inc)?;
        case2 = enc.and(g, removed)?;
        p = enc.or(p, case2)?;
    }

    // Case 1: deadlocks created only by combining removals
    let had = enc.sources(old)?;
    let has = enc.sources(p)?;
    let lost = enc.diff(had, has)?;
    let lost = enc.and(lost, ctx.t)?;
    let lost = enc.diff(lost, ds)?;
    let mut case1_restored = enc.empty_transitions();
    let mut new_ds = failed;
    if !lost.is_empty() {
        let out = enc.from(removed, lost)?;
        let g = engine.group_all(enc, out)?;
        case1_restored = enc.and(g, removed)?;
        p = enc.or(p, case1_restored)?;
        let outside_s = enc.diff(lost, ctx.s_prime)?;
        new_ds = enc.or(new_ds, outside_s)?;
        // invariant states keep their successors; whatever they reach in ds
        // must be eliminated again
        let in_s = enc.and(lost, ctx.s_prime)?;
        let back = enc.from(case1_restored, in_s)?;
        let tg = enc.targets(back)?;
        let tg = enc.and(tg, ds)?;
        new_ds = enc.or(new_ds, tg)?;
    }

    let still_removed = enc.diff(old, p)?;
    ctx.p_prime = p;
    ctx.commit_elimination(ds, still_removed)?;
    ctx.pending = ctx.enc.or(ctx.pending, new_ds)?;
    Ok(Repair {
        new_ds,
        case1: lost,
        case1_restored,
        case2_restored: case2,
        eliminated: ds,
    })
}

/// Partitioned elimination followed by merge and repair. Returns the
/// workers' group calls and time.
pub fn eliminate_partitioned_into(
    spec: &SystemSpec,
    ctx: &mut Context,
    engine: &mut GroupEngine,
    ds: StateSet,
    n: usize,
) -> SynthResult<(u64, Duration)> {
    let outcome = eliminate_partitioned(spec, ctx, ds, n)?;
    merge_and_repair(ctx, engine, &outcome)?;
    Ok((outcome.group_calls, outcome.group_time))
}
