//! The group operator: the closure of a transition set under each process's
//! read restriction, computed sequentially or by a pool of worker threads.
//!
//! A process `j` that cannot read `v` cannot tell apart two transitions that
//! differ only in `v` (with `v` unchanged across both), so whenever one of
//! them is added or removed the whole class must be.
//!
//! The parallel version keeps one persistent thread per lane. Each lane owns
//! a private decision-diagram manager and handles a fixed, contiguous range
//! of processes. A request is exported once from the master manager, every
//! lane imports it, ORs the groups of its processes, and exports the result;
//! the master imports the results in lane order and ORs them.

use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::ddengine::{Snapshot, VarSet};
use crate::model::SystemSpec;
use crate::symbolic::{EncodeError, Encoding, Layout, SymResult, TransitionSet};

const WORKER_STACK: usize = 64 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("need at least one worker")]
    NoWorkers,
    #[error(
        "{workers} workers requested but the system has only {processes} processes \
         (the worker count must not exceed the process count)"
    )]
    TooManyWorkers { workers: usize, processes: usize },
    #[error("worker pool already shut down")]
    ShutDown,
    #[error("worker {0} failed: {1}")]
    WorkerFailed(usize, String),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

impl From<crate::ddengine::DdError> for GroupError {
    fn from(e: crate::ddengine::DdError) -> Self {
        GroupError::Encode(e.into())
    }
}

pub type GroupResult<T> = Result<T, GroupError>;

/// Static process ranges: lane `i` gets `floor(i*P/W) ..= floor((i+1)*P/W) - 1`.
pub fn process_ranges(processes: usize, workers: usize) -> GroupResult<Vec<Range<usize>>> {
    if workers == 0 {
        return Err(GroupError::NoWorkers);
    }
    if workers > processes {
        return Err(GroupError::TooManyWorkers { workers, processes });
    }
    Ok((0..workers)
        .map(|i| (i * processes / workers)..((i + 1) * processes / workers))
        .collect())
}

/// Precomputed per-process predicates inside one manager.
#[derive(Clone, Debug)]
pub struct ProcessFrame {
    pub index: usize,
    /// `⋀_{v ∉ W_j} v = v'`
    pub allow_write: TransitionSet,
    /// Both-rail bits of the variables `j` cannot read.
    pub unreadable: VarSet,
    /// `⋀_{v ∉ R_j} v = v'`, restricted to the domain on both rails.
    pub unreadable_frame: TransitionSet,
}

#[derive(Clone, Debug)]
pub struct GroupData {
    pub frames: Vec<ProcessFrame>,
}

impl GroupData {
    /// Frames for the processes in `range`.
    pub fn new(spec: &SystemSpec, enc: &mut Encoding, range: Range<usize>) -> SymResult<GroupData> {
        let mut frames = Vec::new();
        for j in range {
            let p = &spec.processes[j];
            let mut aw = enc.mgr.tru();
            let mut frame = enc.domain_both()?.0;
            let mut unreadable = Vec::new();
            for v in &spec.variables {
                if !p.write.contains(&v.name) {
                    let u = enc.unchanged(&v.name)?;
                    aw = enc.mgr.and(aw, u)?;
                }
                if !p.read.contains(&v.name) {
                    let u = enc.unchanged(&v.name)?;
                    frame = enc.mgr.and(frame, u)?;
                    unreadable.push(v.name.as_str());
                }
            }
            frames.push(ProcessFrame {
                index: j,
                allow_write: TransitionSet(aw),
                unreadable: enc.bits_of(unreadable)?,
                unreadable_frame: TransitionSet(frame),
            });
        }
        Ok(GroupData { frames })
    }

    pub fn all(spec: &SystemSpec, enc: &mut Encoding) -> SymResult<GroupData> {
        GroupData::new(spec, enc, 0..spec.processes.len())
    }

    pub fn frame(&self, j: usize) -> Option<&ProcessFrame> {
        self.frames.iter().find(|f| f.index == j)
    }

    /// Rebuilds `enc`'s manager keeping only the frames.
    fn compact(&mut self, enc: &mut Encoding) -> SymResult<()> {
        let mut roots = vec![enc.domain().0, enc.domain_next()];
        for f in &self.frames {
            roots.push(f.allow_write.0);
            roots.push(f.unreadable_frame.0);
        }
        let snap = enc.mgr.export(&roots)?;
        let mut fresh = Encoding::with_manager(enc.layout().clone(), enc.mgr.clone_manager())?;
        let back = fresh.mgr.import(&snap)?;
        for (i, f) in self.frames.iter_mut().enumerate() {
            f.allow_write = TransitionSet(back[2 + 2 * i]);
            f.unreadable_frame = TransitionSet(back[3 + 2 * i]);
        }
        *enc = fresh;
        Ok(())
    }
}

/// `allow_write(j)`: transitions that change only variables `j` may write.
pub fn allow_write(data: &GroupData, j: usize) -> Option<TransitionSet> {
    data.frame(j).map(|f| f.allow_write)
}

/// Group of `t` for one process; `t` is expected to lie within `allow_write(j)`.
pub fn group_single(enc: &mut Encoding, frame: &ProcessFrame, t: TransitionSet) -> SymResult<TransitionSet> {
    let q = enc.mgr.exists(t.0, &frame.unreadable)?;
    Ok(TransitionSet(enc.mgr.and(q, frame.unreadable_frame.0)?))
}

/// `⋁_j group_single(j, t ∧ allow_write(j))` over the frames in `data`.
pub fn group_all_seq(enc: &mut Encoding, data: &GroupData, t: TransitionSet) -> SymResult<TransitionSet> {
    let mut acc = enc.empty_transitions();
    if t.is_empty() {
        return Ok(acc);
    }
    for f in &data.frames {
        let q = enc.mgr.and_exists(t.0, f.allow_write.0, &f.unreadable)?;
        let g = enc.mgr.and(q, f.unreadable_frame.0)?;
        acc = TransitionSet(enc.mgr.or(acc.0, g)?);
    }
    Ok(acc)
}

/// Group of `t` restricted to what process `j` alone contributes.
pub fn group_of_process(
    enc: &mut Encoding,
    data: &GroupData,
    j: usize,
    t: TransitionSet,
) -> SymResult<TransitionSet> {
    match data.frame(j) {
        Some(f) => {
            let x = enc.and(t, f.allow_write)?;
            group_single(enc, f, x)
        }
        None => Ok(enc.empty_transitions()),
    }
}

/// Transitions of `within` whose process-`j` part could be taken by `j`.
pub fn restrict_to_process(
    enc: &mut Encoding,
    data: &GroupData,
    j: usize,
    within: TransitionSet,
) -> SymResult<TransitionSet> {
    match data.frame(j) {
        Some(f) => enc.and(within, f.allow_write),
        None => Ok(enc.empty_transitions()),
    }
}

enum Job {
    Group(Arc<Snapshot>),
    Stop,
}

type Reply = (usize, Result<Snapshot, String>);

struct Lane {
    jobs: Sender<Job>,
    handle: Option<JoinHandle<()>>,
    range: Range<usize>,
}

/// Persistent worker threads for parallel group computation.
pub struct WorkerPool {
    lanes: Vec<Lane>,
    replies: Receiver<Reply>,
    live: Arc<AtomicUsize>,
    shut_down: bool,
}

impl std::fmt::Debug for WorkerPool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WorkerPool")
            .field("workers", &self.lanes.len())
            .field("shut_down", &self.shut_down)
            .finish()
    }
}

/// Lanes grow their managers across requests; past this many nodes a lane
/// rebuilds its manager from its precomputed frames.
const LANE_COMPACT_NODES: usize = 1 << 22;

#[allow(clippy::too_many_arguments)]
fn lane_main(
    index: usize,
    spec: Arc<SystemSpec>,
    layout: Arc<Layout>,
    range: Range<usize>,
    jobs: Receiver<Job>,
    replies: Sender<Reply>,
    ready: Sender<Result<(), String>>,
    live: Arc<AtomicUsize>,
) {
    let setup = (|| -> SymResult<(Encoding, GroupData)> {
        let mut enc = Encoding::new(layout)?;
        let data = GroupData::new(&spec, &mut enc, range)?;
        Ok((enc, data))
    })();
    let (mut enc, mut data) = match setup {
        Ok(x) => {
            let _ = ready.send(Ok(()));
            x
        }
        Err(e) => {
            let _ = ready.send(Err(e.to_string()));
            live.fetch_sub(1, Ordering::SeqCst);
            return;
        }
    };
    while let Ok(Job::Group(snap)) = jobs.recv() {
        let out = (|| -> SymResult<Snapshot> {
            let t = TransitionSet(enc.mgr.import(&snap)?[0]);
            let g = group_all_seq(&mut enc, &data, t)?;
            let s = enc.mgr.export(&[g.0])?;
            if enc.mgr.node_count() > LANE_COMPACT_NODES {
                data.compact(&mut enc)?;
            }
            Ok(s)
        })();
        if replies.send((index, out.map_err(|e| e.to_string()))).is_err() {
            break;
        }
    }
    live.fetch_sub(1, Ordering::SeqCst);
}

impl WorkerPool {
    /// Starts `workers` lanes, each covering a static range of processes.
    pub fn new(spec: &SystemSpec, layout: Arc<Layout>, workers: usize) -> GroupResult<WorkerPool> {
        let ranges = process_ranges(spec.processes.len(), workers)?;
        let spec = Arc::new(spec.clone());
        let live = Arc::new(AtomicUsize::new(0));
        let (reply_tx, replies) = channel();
        let (ready_tx, ready_rx) = channel();
        let mut lanes = Vec::new();
        for (i, range) in ranges.into_iter().enumerate() {
            let (jobs_tx, jobs_rx) = channel();
            let (spec, layout, r, reply_tx, ready_tx, live2) = (
                spec.clone(),
                layout.clone(),
                range.clone(),
                reply_tx.clone(),
                ready_tx.clone(),
                live.clone(),
            );
            live.fetch_add(1, Ordering::SeqCst);
            let handle = std::thread::Builder::new()
                .name(format!("group-{i}"))
                .stack_size(WORKER_STACK)
                .spawn(move || lane_main(i, spec, layout, r, jobs_rx, reply_tx, ready_tx, live2))
                .map_err(|e| GroupError::WorkerFailed(i, e.to_string()))?;
            lanes.push(Lane {
                jobs: jobs_tx,
                handle: Some(handle),
                range,
            });
        }
        let mut pool = WorkerPool {
            lanes,
            replies,
            live,
            shut_down: false,
        };
        for i in 0..pool.lanes.len() {
            match ready_rx.recv() {
                Ok(Ok(())) => {}
                Ok(Err(e)) => {
                    let _ = pool.shutdown();
                    return Err(GroupError::WorkerFailed(i, e));
                }
                Err(_) => {
                    let _ = pool.shutdown();
                    return Err(GroupError::WorkerFailed(i, "lane exited during setup".into()));
                }
            }
        }
        Ok(pool)
    }

    pub fn worker_count(&self) -> usize {
        self.lanes.len()
    }

    pub fn ranges(&self) -> Vec<Range<usize>> {
        self.lanes.iter().map(|l| l.range.clone()).collect()
    }

    /// Lanes whose thread is still running.
    pub fn live_lanes(&self) -> usize {
        self.live.load(Ordering::SeqCst)
    }

    /// Parallel group of `t`, built in `enc`'s manager.
    pub fn group_all(&self, enc: &mut Encoding, t: TransitionSet) -> GroupResult<TransitionSet> {
        if self.shut_down {
            return Err(GroupError::ShutDown);
        }
        let snap = Arc::new(enc.mgr.export(&[t.0])?);
        for (i, lane) in self.lanes.iter().enumerate() {
            lane.jobs
                .send(Job::Group(snap.clone()))
                .map_err(|_| GroupError::WorkerFailed(i, "lane is gone".into()))?;
        }
        let mut results: Vec<Option<Snapshot>> = vec![None; self.lanes.len()];
        let mut failure = None;
        for _ in 0..self.lanes.len() {
            match self.replies.recv() {
                Ok((i, Ok(s))) => results[i] = Some(s),
                Ok((i, Err(e))) => failure = Some(GroupError::WorkerFailed(i, e)),
                Err(_) => return Err(GroupError::WorkerFailed(0, "reply channel closed".into())),
            }
        }
        if let Some(e) = failure {
            return Err(e);
        }
        let mut acc = enc.empty_transitions();
        for s in results.into_iter().flatten() {
            let g = TransitionSet(enc.mgr.import(&s)?[0]);
            acc = enc.or(acc, g)?;
        }
        Ok(acc)
    }

    /// Stops and joins every lane. A second call is an error.
    pub fn shutdown(&mut self) -> GroupResult<()> {
        if self.shut_down {
            return Err(GroupError::ShutDown);
        }
        self.shut_down = true;
        for lane in &self.lanes {
            let _ = lane.jobs.send(Job::Stop);
        }
        for (i, lane) in self.lanes.iter_mut().enumerate() {
            if let Some(h) = lane.handle.take() {
                h.join()
                    .map_err(|_| GroupError::WorkerFailed(i, "lane panicked".into()))?;
            }
        }
        Ok(())
    }
}

impl Drop for WorkerPool {
    fn drop(&mut self) {
        if !self.shut_down {
            let _ = self.shutdown();
        }
    }
}

#[derive(Debug)]
enum Strategy {
    Sequential,
    Parallel(WorkerPool),
    /// Parallel, cross-checked against the sequential result on every call.
    Checked(WorkerPool),
}

/// Group computation as used by synthesis, with call counting and timing.
#[derive(Debug)]
pub struct GroupEngine {
    pub data: GroupData,
    strategy: Strategy,
    pub calls: u64,
    pub wall_time: Duration,
    pub mismatches: u64,
}

impl GroupEngine {
    pub fn sequential(spec: &SystemSpec, enc: &mut Encoding) -> GroupResult<GroupEngine> {
        Ok(GroupEngine {
            data: GroupData::all(spec, enc)?,
            strategy: Strategy::Sequential,
            calls: 0,
            wall_time: Duration::ZERO,
            mismatches: 0,
        })
    }

    pub fn parallel(spec: &SystemSpec, enc: &mut Encoding, workers: usize) -> GroupResult<GroupEngine> {
        let pool = WorkerPool::new(spec, enc.layout().clone(), workers)?;
        let mut e = GroupEngine::sequential(spec, enc)?;
        e.strategy = Strategy::Parallel(pool);
        Ok(e)
    }

    pub fn checked(spec: &SystemSpec, enc: &mut Encoding, workers: usize) -> GroupResult<GroupEngine> {
        let pool = WorkerPool::new(spec, enc.layout().clone(), workers)?;
        let mut e = GroupEngine::sequential(spec, enc)?;
        e.strategy = Strategy::Checked(pool);
        Ok(e)
    }

    pub fn worker_count(&self) -> usize {
        match &self.strategy {
            Strategy::Sequential => 1,
            Strategy::Parallel(p) | Strategy::Checked(p) => p.worker_count(),
        }
    }

    pub fn group_all(&mut self, enc: &mut Encoding, t: TransitionSet) -> GroupResult<TransitionSet> {
        self.calls += 1;
        let start = Instant::now();
        let out = match &self.strategy {
            Strategy::Sequential => group_all_seq(enc, &self.data, t)?,
            Strategy::Parallel(pool) => pool.group_all(enc, t)?,
            Strategy::Checked(pool) => {
                let par = pool.group_all(enc, t)?;
                let seq = group_all_seq(enc, &self.data, t)?;
                if par != seq {
                    self.mismatches += 1;
                }
                par
            }
        };
        self.wall_time += start.elapsed();
        Ok(out)
    }

    /// The transitions of `added` that process `j` contributes, group-closed.
    pub fn process_part(&self, enc: &mut Encoding, j: usize, added: TransitionSet) -> GroupResult<TransitionSet> {
        Ok(group_of_process(enc, &self.data, j, added)?)
    }

    /// Rebuilds the engine's frames in another manager over the same layout.
    pub fn rebind(&mut self, spec: &SystemSpec, enc: &mut Encoding) -> GroupResult<()> {
        self.data = GroupData::all(spec, enc)?;
        Ok(())
    }

    pub fn shutdown(&mut self) -> GroupResult<()> {
        match &mut self.strategy {
            Strategy::Sequential => Ok(()),
            Strategy::Parallel(p) | Strategy::Checked(p) => p.shutdown(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::casestudies::{gen_byzantine, gen_token_ring};
    use crate::symbolic::encode;

    #[test]
    fn range_arithmetic() {
        let sizes = |p, w| -> Vec<usize> { process_ranges(p, w).unwrap().iter().map(|r| r.len()).collect() };
        assert_eq!(sizes(45, 8), vec![5, 6, 5, 6, 6, 5, 6, 6]);
        let mut sorted = sizes(45, 8);
        sorted.sort();
        let mut expected = vec![5, 6, 6, 5, 6, 6, 5, 6];
        expected.sort();
        assert_eq!(sorted, expected);
        assert_eq!(sizes(10, 3), vec![3, 3, 4]);
        assert_eq!(sizes(7, 7), vec![1; 7]);
        assert_eq!(process_ranges(5, 1).unwrap(), vec![0..5]);
        assert!(matches!(process_ranges(3, 4), Err(GroupError::TooManyWorkers { .. })));
        assert!(matches!(process_ranges(3, 0), Err(GroupError::NoWorkers)));
    }

    #[test]
    fn empty_and_full_write() {
        let spec = gen_token_ring(4).unwrap();
        let mut e = encode(&spec).unwrap();
        let data = GroupData::all(&spec, &mut e.enc).unwrap();
        let empty = e.enc.empty_transitions();
        assert!(group_all_seq(&mut e.enc, &data, empty).unwrap().is_empty());
        assert!(group_single(&mut e.enc, &data.frames[0], empty).unwrap().is_empty());
    }

    #[test]
    fn byzantine_single_transition_group_has_32_members() {
        let spec = gen_byzantine(3).unwrap();
        let mut e = encode(&spec).unwrap();
        let data = GroupData::all(&spec, &mut e.enc).unwrap();
        let lay = e.enc.layout().clone();
        // j copies d.g = 0; all unreadable variables false
        let mut src = vec![0; lay.vars().len()];
        let dj = lay.var_position("d.j").unwrap();
        for name in ["d.j", "d.k", "d.l"] {
            src[lay.var_position(name).unwrap()] = 2;
        }
        let mut dst = src.clone();
        dst[dj] = 0;
        let t = e.enc.transition(&src, &dst).unwrap();
        assert!(e.enc.subset(t, e.processes[0]).unwrap());
        let g = group_all_seq(&mut e.enc, &data, t).unwrap();
        assert_eq!(e.enc.count_transitions(g).unwrap(), 32u32.into());
        let again = group_all_seq(&mut e.enc, &data, g).unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn pool_matches_sequential_and_shuts_down() {
        let spec = gen_byzantine(3).unwrap();
        let mut e = encode(&spec).unwrap();
        let data = GroupData::all(&spec, &mut e.enc).unwrap();
        let mut pool = WorkerPool::new(&spec, e.enc.layout().clone(), 2).unwrap();
        assert_eq!(pool.live_lanes(), 2);
        for t in [e.program, e.faults, e.badtrans] {
            let t = e.enc.and(t, e.program).unwrap();
            let seq = group_all_seq(&mut e.enc, &data, t).unwrap();
            assert_eq!(pool.group_all(&mut e.enc, t).unwrap(), seq);
        }
        let empty = e.enc.empty_transitions();
        assert!(pool.group_all(&mut e.enc, empty).unwrap().is_empty());
        pool.shutdown().unwrap();
        assert_eq!(pool.live_lanes(), 0);
        assert_eq!(pool.shutdown(), Err(GroupError::ShutDown));
        assert_eq!(pool.group_all(&mut e.enc, empty), Err(GroupError::ShutDown));
    }
}
