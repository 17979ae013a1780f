//! Reduced ordered binary decision diagrams.
//!
//! Every [`DdManager`] is a closed universe: it owns its unique table and its
//! memo caches, and nothing is shared between managers. Functions move from
//! one manager to another only by deep copy, either directly with
//! [`transfer`] or through a manager-independent [`Snapshot`].
//!
//! Variables are ordered by index. The synthesis layer interleaves rails so
//! that state bit `i` lives at index `2i` on the current rail and at `2i + 1`
//! on the next rail; [`DdManager::rename`] relies on that layout.

use std::sync::atomic::{AtomicU32, Ordering};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type VarIndex = u32;

const FALSE_ID: u32 = 0;
const TRUE_ID: u32 = 1;
const TERMINAL_VAR: u32 = u32::MAX;

static NEXT_MANAGER_ID: AtomicU32 = AtomicU32::new(1);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DdError {
    #[error("a manager needs at least one variable")]
    ZeroVariables,
    #[error("node belongs to manager {found}, expected manager {expected}")]
    ForeignNode { expected: u32, found: u32 },
    #[error("variable index {index} out of range (manager has {count} variables)")]
    UnknownVariable { index: VarIndex, count: u32 },
    #[error("rename needs a function over the source rail only")]
    MixedRails,
    #[error("variable order mismatch: source has {src} variables, destination has {dst}")]
    OrderMismatch { src: u32, dst: u32 },
    #[error("function depends on variable {0}, which is outside the counted set")]
    SupportOutsideCount(VarIndex),
    #[error("malformed snapshot: {0}")]
    BadSnapshot(String),
}

pub type DdResult<T> = Result<T, DdError>;

/// Handle to a node of one specific manager.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DdNode {
    id: u32,
    owner: u32,
}

impl DdNode {
    pub fn is_true(self) -> bool {
        self.id == TRUE_ID
    }

    pub fn is_false(self) -> bool {
        self.id == FALSE_ID
    }

    pub fn is_constant(self) -> bool {
        self.id <= TRUE_ID
    }

    pub fn owner(self) -> u32 {
        self.owner
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    And,
    Or,
    /// `a ∧ ¬b`
    Diff,
    Xor,
}

impl BinOp {
    fn tag(self) -> u32 {
        match self {
            BinOp::And => 1,
            BinOp::Or => 2,
            BinOp::Diff => 3,
            BinOp::Xor => 4,
        }
    }

    fn commutes(self) -> bool {
        !matches!(self, BinOp::Diff)
    }
}

const TAG_NOT: u32 = 5;
const TAG_EXISTS: u32 = 6;
const TAG_AND_EXISTS: u32 = 7;
const TAG_RENAME: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RailDirection {
    CurrentToNext,
    NextToCurrent,
}

/// A set of decision variables, independent of any manager.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct VarSet {
    vars: Vec<VarIndex>,
}

impl VarSet {
    pub fn new(mut vars: Vec<VarIndex>) -> Self {
        vars.sort_unstable();
        vars.dedup();
        VarSet { vars }
    }

    pub fn vars(&self) -> &[VarIndex] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn contains(&self, v: VarIndex) -> bool {
        self.vars.binary_search(&v).is_ok()
    }

    pub fn union(&self, other: &VarSet) -> VarSet {
        let mut vars = self.vars.clone();
        vars.extend_from_slice(&other.vars);
        VarSet::new(vars)
    }
}

impl FromIterator<VarIndex> for VarSet {
    fn from_iter<I: IntoIterator<Item = VarIndex>>(iter: I) -> Self {
        VarSet::new(iter.into_iter().collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct NodeData {
    var: u32,
    lo: u32,
    hi: u32,
}

struct InternedVarSet {
    mask: Vec<bool>,
    last: u32,
}

#[derive(Clone, Copy, Default)]
struct CacheEntry {
    tag: u32,
    a: u32,
    b: u32,
    c: u32,
    res: u32,
}

/// Direct-mapped, lossy memo table.
struct OpCache {
    entries: Vec<CacheEntry>,
    mask: usize,
}

const MIN_CACHE_BITS: u32 = 12;
const MAX_CACHE_BITS: u32 = 22;

impl OpCache {
    fn new(bits: u32) -> Self {
        let size = 1usize << bits;
        OpCache {
            entries: vec![CacheEntry::default(); size],
            mask: size - 1,
        }
    }

    #[inline]
    fn slot(&self, tag: u32, a: u32, b: u32, c: u32) -> usize {
        let mut h = (a as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        h ^= (b as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
        h ^= ((c as u64) << 8 | tag as u64).wrapping_mul(0x1656_67B1_9E37_79F9);
        h ^= h >> 29;
        (h as usize) & self.mask
    }

    #[inline]
    fn get(&self, tag: u32, a: u32, b: u32, c: u32) -> Option<u32> {
        let e = &self.entries[self.slot(tag, a, b, c)];
        (e.tag == tag && e.a == a && e.b == b && e.c == c).then_some(e.res)
    }

    #[inline]
    fn put(&mut self, tag: u32, a: u32, b: u32, c: u32, res: u32) {
        let i = self.slot(tag, a, b, c);
        self.entries[i] = CacheEntry { tag, a, b, c, res };
    }

    fn bits(&self) -> u32 {
        self.entries.len().trailing_zeros()
    }
}

pub struct DdManager {
    id: u32,
    var_count: u32,
    nodes: Vec<NodeData>,
    unique: FxHashMap<NodeData, u32>,
    cache: OpCache,
    varsets: Vec<InternedVarSet>,
    varset_ids: FxHashMap<Vec<VarIndex>, u32>,
}

impl std::fmt::Debug for DdManager {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DdManager")
            .field("id", &self.id)
            .field("var_count", &self.var_count)
            .field("nodes", &self.nodes.len())
            .finish()
    }
}

impl DdManager {
    pub fn new(var_count: u32) -> DdResult<Self> {
        if var_count == 0 {
            return Err(DdError::ZeroVariables);
        }
        let terminal = NodeData {
            var: TERMINAL_VAR,
            lo: 0,
            hi: 0,
        };
        Ok(DdManager {
            id: NEXT_MANAGER_ID.fetch_add(1, Ordering::Relaxed),
            var_count,
            nodes: vec![terminal, terminal],
            unique: FxHashMap::default(),
            cache: OpCache::new(MIN_CACHE_BITS),
            varsets: Vec::new(),
            varset_ids: FxHashMap::default(),
        })
    }

    /// Fresh manager with the same variables and order, and empty caches.
    pub fn clone_manager(&self) -> DdManager {
        DdManager::new(self.var_count).expect("source manager has variables")
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn var_count(&self) -> u32 {
        self.var_count
    }

    /// Number of nodes currently allocated, constants included.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn constant(&self, value: bool) -> DdNode {
        self.handle(if value { TRUE_ID } else { FALSE_ID })
    }

    pub fn tru(&self) -> DdNode {
        self.constant(true)
    }

    pub fn fls(&self) -> DdNode {
        self.constant(false)
    }

    pub fn var(&mut self, index: VarIndex) -> DdResult<DdNode> {
        self.check_var(index)?;
        let id = self.mk(index, FALSE_ID, TRUE_ID);
        Ok(self.handle(id))
    }

    pub fn nvar(&mut self, index: VarIndex) -> DdResult<DdNode> {
        self.check_var(index)?;
        let id = self.mk(index, TRUE_ID, FALSE_ID);
        Ok(self.handle(id))
    }

    pub fn literal(&mut self, index: VarIndex, value: bool) -> DdResult<DdNode> {
        if value {
            self.var(index)
        } else {
            self.nvar(index)
        }
    }

    pub fn apply(&mut self, op: BinOp, a: DdNode, b: DdNode) -> DdResult<DdNode> {
        self.check(a)?;
        self.check(b)?;
        let id = self.apply_rec(op, a.id, b.id);
        self.after_op();
        Ok(self.handle(id))
    }

    pub fn and(&mut self, a: DdNode, b: DdNode) -> DdResult<DdNode> {
        self.apply(BinOp::And, a, b)
    }

    pub fn or(&mut self, a: DdNode, b: DdNode) -> DdResult<DdNode> {
        self.apply(BinOp::Or, a, b)
    }

    pub fn diff(&mut self, a: DdNode, b: DdNode) -> DdResult<DdNode> {
        self.apply(BinOp::Diff, a, b)
    }

    pub fn xor(&mut self, a: DdNode, b: DdNode) -> DdResult<DdNode> {
        self.apply(BinOp::Xor, a, b)
    }

    pub fn not(&mut self, a: DdNode) -> DdResult<DdNode> {
        self.check(a)?;
        let id = self.not_rec(a.id);
        self.after_op();
        Ok(self.handle(id))
    }

    /// `a ↔ b`
    pub fn iff(&mut self, a: DdNode, b: DdNode) -> DdResult<DdNode> {
        let x = self.xor(a, b)?;
        self.not(x)
    }

    pub fn and_all<I: IntoIterator<Item = DdNode>>(&mut self, items: I) -> DdResult<DdNode> {
        let mut acc = self.tru();
        for n in items {
            acc = self.and(acc, n)?;
        }
        Ok(acc)
    }

    pub fn or_all<I: IntoIterator<Item = DdNode>>(&mut self, items: I) -> DdResult<DdNode> {
        let mut acc = self.fls();
        for n in items {
            acc = self.or(acc, n)?;
        }
        Ok(acc)
    }

    /// Existential abstraction of `vars`.
    pub fn exists(&mut self, a: DdNode, vars: &VarSet) -> DdResult<DdNode> {
        self.check(a)?;
        let vs = self.intern(vars)?;
        let id = self.exists_rec(a.id, vs);
        self.after_op();
        Ok(self.handle(id))
    }

    /// `∃ vars. a ∧ b`, computed without building the conjunction first.
    pub fn and_exists(&mut self, a: DdNode, b: DdNode, vars: &VarSet) -> DdResult<DdNode> {
        self.check(a)?;
        self.check(b)?;
        let vs = self.intern(vars)?;
        let id = self.and_exists_rec(a.id, b.id, vs);
        self.after_op();
        Ok(self.handle(id))
    }

    /// Moves a single-rail function to the other rail of the interleaved order.
    pub fn rename(&mut self, a: DdNode, direction: RailDirection) -> DdResult<DdNode> {
        self.check(a)?;
        let wrong_parity = match direction {
            RailDirection::CurrentToNext => 1,
            RailDirection::NextToCurrent => 0,
        };
        if self.support_ids(a.id).iter().any(|v| v % 2 == wrong_parity) {
            return Err(DdError::MixedRails);
        }
        if direction == RailDirection::CurrentToNext {
            // the last current-rail variable needs a partner
            if let Some(&v) = self.support_ids(a.id).last() {
                if v + 1 >= self.var_count {
                    return Err(DdError::UnknownVariable {
                        index: v + 1,
                        count: self.var_count,
                    });
                }
            }
        }
        let dir = match direction {
            RailDirection::CurrentToNext => 0,
            RailDirection::NextToCurrent => 1,
        };
        let id = self.rename_rec(a.id, dir);
        self.after_op();
        Ok(self.handle(id))
    }

    /// Variables the function depends on, ascending.
    pub fn support(&self, a: DdNode) -> DdResult<Vec<VarIndex>> {
        self.check(a)?;
        Ok(self.support_ids(a.id))
    }

    pub fn eval(&self, a: DdNode, assignment: &[bool]) -> DdResult<bool> {
        self.check(a)?;
        let mut n = a.id;
        while n > TRUE_ID {
            let d = self.nodes[n as usize];
            let bit = assignment.get(d.var as usize).copied().ok_or(DdError::UnknownVariable {
                index: d.var,
                count: assignment.len() as u32,
            })?;
            n = if bit { d.hi } else { d.lo };
        }
        Ok(n == TRUE_ID)
    }

    /// Satisfying assignments over variables `0..var_count`.
    pub fn count_minterms(&self, a: DdNode, var_count: u32) -> DdResult<BigUint> {
        let vars: VarSet = (0..var_count).collect();
        self.count_minterms_over(a, &vars)
    }

    /// Satisfying assignments over the given variables. The function must not
    /// depend on anything outside `vars`.
    pub fn count_minterms_over(&self, a: DdNode, vars: &VarSet) -> DdResult<BigUint> {
        self.check(a)?;
        let k = vars.len() as u32;
        let pos = |v: u32| -> Result<u32, DdError> {
            if v == TERMINAL_VAR {
                return Ok(k);
            }
            vars.vars
                .binary_search(&v)
                .map(|p| p as u32)
                .map_err(|_| DdError::SupportOutsideCount(v))
        };
        let mut memo: FxHashMap<u32, BigUint> = FxHashMap::default();
        memo.insert(FALSE_ID, BigUint::zero());
        memo.insert(TRUE_ID, BigUint::one());
        let mut stack = vec![a.id];
        while let Some(&n) = stack.last() {
            if memo.contains_key(&n) {
                stack.pop();
                continue;
            }
            let d = self.nodes[n as usize];
            let pending: Vec<u32> = [d.lo, d.hi]
                .into_iter()
                .filter(|c| !memo.contains_key(c))
                .collect();
            if !pending.is_empty() {
                stack.extend(pending);
                continue;
            }
            let p = pos(d.var)?;
            let lo_gap = pos(self.nodes[d.lo as usize].var)? - p - 1;
            let hi_gap = pos(self.nodes[d.hi as usize].var)? - p - 1;
            let c = (&memo[&d.lo] << lo_gap as usize) + (&memo[&d.hi] << hi_gap as usize);
            memo.insert(n, c);
            stack.pop();
        }
        let root_gap = pos(self.nodes[a.id as usize].var)?;
        Ok(&memo[&a.id] << root_gap as usize)
    }

    /// One satisfying assignment (indexed by variable), choosing `false` for
    /// every variable left open.
    pub fn pick_minterm(&self, a: DdNode) -> DdResult<Option<Vec<bool>>> {
        self.check(a)?;
        if a.is_false() {
            return Ok(None);
        }
        let mut out = vec![false; self.var_count as usize];
        let mut n = a.id;
        while n > TRUE_ID {
            let d = self.nodes[n as usize];
            if d.lo != FALSE_ID {
                n = d.lo;
            } else {
                out[d.var as usize] = true;
                n = d.hi;
            }
        }
        Ok(Some(out))
    }

    /// Calls `visit` once for every satisfying assignment over `vars`.
    /// Assignments are indexed by variable; variables outside `vars` read as
    /// `false`.
    pub fn for_each_minterm<F: FnMut(&[bool])>(
        &self,
        a: DdNode,
        vars: &VarSet,
        mut visit: F,
    ) -> DdResult<()> {
        self.check(a)?;
        for v in self.support_ids(a.id) {
            if !vars.contains(v) {
                return Err(DdError::SupportOutsideCount(v));
            }
        }
        let mut assignment = vec![false; self.var_count as usize];
        self.enumerate(a.id, &vars.vars, 0, &mut assignment, &mut visit);
        Ok(())
    }

    fn enumerate<F: FnMut(&[bool])>(
        &self,
        n: u32,
        vars: &[VarIndex],
        at: usize,
        assignment: &mut Vec<bool>,
        visit: &mut F,
    ) {
        if n == FALSE_ID {
            return;
        }
        if at == vars.len() {
            debug_assert_eq!(n, TRUE_ID);
            visit(assignment);
            return;
        }
        let v = vars[at];
        let d = self.nodes[n as usize];
        let (lo, hi) = if d.var == v { (d.lo, d.hi) } else { (n, n) };
        assignment[v as usize] = false;
        self.enumerate(lo, vars, at + 1, assignment, visit);
        assignment[v as usize] = true;
        self.enumerate(hi, vars, at + 1, assignment, visit);
        assignment[v as usize] = false;
    }

    /// Number of distinct nodes reachable from `a`, constants included.
    pub fn dag_size(&self, a: DdNode) -> DdResult<usize> {
        self.check(a)?;
        let mut seen = rustc_hash::FxHashSet::default();
        let mut stack = vec![a.id];
        while let Some(n) = stack.pop() {
            if seen.insert(n) && n > TRUE_ID {
                let d = self.nodes[n as usize];
                stack.push(d.lo);
                stack.push(d.hi);
            }
        }
        Ok(seen.len())
    }

    /// Copies the functions rooted at `nodes` into a manager-independent form.
    pub fn export(&self, nodes: &[DdNode]) -> DdResult<Snapshot> {
        for &n in nodes {
            self.check(n)?;
        }
        let mut index: FxHashMap<u32, u32> = FxHashMap::default();
        index.insert(FALSE_ID, 0);
        index.insert(TRUE_ID, 1);
        let mut out = Vec::new();
        for &root in nodes {
            let mut stack = vec![root.id];
            while let Some(&n) = stack.last() {
                if index.contains_key(&n) {
                    stack.pop();
                    continue;
                }
                let d = self.nodes[n as usize];
                let lo = index.get(&d.lo).copied();
                let hi = index.get(&d.hi).copied();
                match (lo, hi) {
                    (Some(lo), Some(hi)) => {
                        index.insert(n, out.len() as u32 + 2);
                        out.push(SnapshotNode { var: d.var, lo, hi });
                        stack.pop();
                    }
                    _ => {
                        if lo.is_none() {
                            stack.push(d.lo);
                        }
                        if hi.is_none() {
                            stack.push(d.hi);
                        }
                    }
                }
            }
        }
        Ok(Snapshot {
            var_count: self.var_count,
            nodes: out,
            roots: nodes.iter().map(|n| index[&n.id]).collect(),
        })
    }

    /// Rebuilds snapshot functions inside this manager.
    pub fn import(&mut self, snapshot: &Snapshot) -> DdResult<Vec<DdNode>> {
        if snapshot.var_count != self.var_count {
            return Err(DdError::OrderMismatch {
                src: snapshot.var_count,
                dst: self.var_count,
            });
        }
        let mut local: Vec<u32> = Vec::with_capacity(snapshot.nodes.len() + 2);
        local.push(FALSE_ID);
        local.push(TRUE_ID);
        for (i, n) in snapshot.nodes.iter().enumerate() {
            let limit = i as u32 + 2;
            if n.lo >= limit || n.hi >= limit {
                return Err(DdError::BadSnapshot(format!("node {i} refers forward")));
            }
            if n.var >= self.var_count {
                return Err(DdError::UnknownVariable {
                    index: n.var,
                    count: self.var_count,
                });
            }
            let (lo, hi) = (local[n.lo as usize], local[n.hi as usize]);
            let ordered = |c: u32| c <= TRUE_ID || self.nodes[c as usize].var > n.var;
            if !ordered(lo) || !ordered(hi) {
                return Err(DdError::BadSnapshot(format!("node {i} violates the variable order")));
            }
            local.push(self.mk(n.var, lo, hi));
        }
        snapshot
            .roots
            .iter()
            .map(|&r| {
                local
                    .get(r as usize)
                    .map(|&id| self.handle(id))
                    .ok_or_else(|| DdError::BadSnapshot(format!("root {r} out of range")))
            })
            .collect()
    }

    /// Rebuilds the manager keeping only what `roots` reach. The manager gets
    /// a new identity, so every handle not returned here becomes foreign.
    pub fn compact(&mut self, roots: &[DdNode]) -> DdResult<Vec<DdNode>> {
        let snap = self.export(roots)?;
        let mut fresh = self.clone_manager();
        let out = fresh.import(&snap)?;
        *self = fresh;
        Ok(out)
    }

    // ---- internals ----

    #[inline]
    fn handle(&self, id: u32) -> DdNode {
        DdNode { id, owner: self.id }
    }

    fn check(&self, n: DdNode) -> DdResult<()> {
        if n.owner != self.id {
            return Err(DdError::ForeignNode {
                expected: self.id,
                found: n.owner,
            });
        }
        Ok(())
    }

    fn check_var(&self, index: VarIndex) -> DdResult<()> {
        if index >= self.var_count {
            return Err(DdError::UnknownVariable {
                index,
                count: self.var_count,
            });
        }
        Ok(())
    }

    fn intern(&mut self, vars: &VarSet) -> DdResult<u32> {
        if let Some(&id) = self.varset_ids.get(&vars.vars) {
            return Ok(id);
        }
        let mut mask = vec![false; self.var_count as usize];
        for &v in &vars.vars {
            self.check_var(v)?;
            mask[v as usize] = true;
        }
        let id = self.varsets.len() as u32;
        self.varsets.push(InternedVarSet {
            mask,
            last: vars.vars.last().copied().unwrap_or(0),
        });
        self.varset_ids.insert(vars.vars.clone(), id);
        Ok(id)
    }

    fn after_op(&mut self) {
        let bits = self.cache.bits();
        if bits < MAX_CACHE_BITS && self.nodes.len() > (1usize << bits) * 2 {
            let mut bits = bits;
            while bits < MAX_CACHE_BITS && self.nodes.len() > (1usize << bits) * 2 {
                bits += 1;
            }
            self.cache = OpCache::new(bits);
        }
    }

    #[inline]
    fn var_of(&self, n: u32) -> u32 {
        self.nodes[n as usize].var
    }

    #[inline]
    fn cofactors(&self, n: u32, v: u32) -> (u32, u32) {
        let d = self.nodes[n as usize];
        if d.var == v {
            (d.lo, d.hi)
        } else {
            (n, n)
        }
    }

    fn mk(&mut self, var: u32, lo: u32, hi: u32) -> u32 {
        if lo == hi {
            return lo;
        }
        let key = NodeData { var, lo, hi };
        if let Some(&id) = self.unique.get(&key) {
            return id;
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(key);
        self.unique.insert(key, id);
        id
    }

    fn apply_rec(&mut self, op: BinOp, a: u32, b: u32) -> u32 {
        match op {
            BinOp::And => {
                if a == FALSE_ID || b == FALSE_ID {
                    return FALSE_ID;
                }
                if a == TRUE_ID || a == b {
                    return b;
                }
                if b == TRUE_ID {
                    return a;
                }
            }
            BinOp::Or => {
                if a == TRUE_ID || b == TRUE_ID {
                    return TRUE_ID;
                }
                if a == FALSE_ID || a == b {
                    return b;
                }
                if b == FALSE_ID {
                    return a;
                }
            }
            BinOp::Diff => {
                if a == FALSE_ID || b == TRUE_ID || a == b {
                    return FALSE_ID;
                }
                if b == FALSE_ID {
                    return a;
                }
                if a == TRUE_ID {
                    return self.not_rec(b);
                }
            }
            BinOp::Xor => {
                if a == b {
                    return FALSE_ID;
                }
                if a == FALSE_ID {
                    return b;
                }
                if b == FALSE_ID {
                    return a;
                }
                if a == TRUE_ID {
                    return self.not_rec(b);
                }
                if b == TRUE_ID {
                    return self.not_rec(a);
                }
            }
        }
        let (a, b) = if op.commutes() && a > b { (b, a) } else { (a, b) };
        let tag = op.tag();
        if let Some(r) = self.cache.get(tag, a, b, 0) {
            return r;
        }
        let v = self.var_of(a).min(self.var_of(b));
        let (a0, a1) = self.cofactors(a, v);
        let (b0, b1) = self.cofactors(b, v);
        let lo = self.apply_rec(op, a0, b0);
        let hi = self.apply_rec(op, a1, b1);
        let r = self.mk(v, lo, hi);
        self.cache.put(tag, a, b, 0, r);
        r
    }

    fn not_rec(&mut self, a: u32) -> u32 {
        if a <= TRUE_ID {
            return a ^ 1;
        }
        if let Some(r) = self.cache.get(TAG_NOT, a, 0, 0) {
            return r;
        }
        let d = self.nodes[a as usize];
        let lo = self.not_rec(d.lo);
        let hi = self.not_rec(d.hi);
        let r = self.mk(d.var, lo, hi);
        self.cache.put(TAG_NOT, a, 0, 0, r);
        r
    }

    fn exists_rec(&mut self, a: u32, vs: u32) -> u32 {
        if a <= TRUE_ID {
            return a;
        }
        let d = self.nodes[a as usize];
        if d.var > self.varsets[vs as usize].last {
            return a;
        }
        if let Some(r) = self.cache.get(TAG_EXISTS, a, vs, 0) {
            return r;
        }
        let lo = self.exists_rec(d.lo, vs);
        let r = if self.varsets[vs as usize].mask[d.var as usize] {
            if lo == TRUE_ID {
                TRUE_ID
            } else {
                let hi = self.exists_rec(d.hi, vs);
                self.apply_rec(BinOp::Or, lo, hi)
            }
        } else {
            let hi = self.exists_rec(d.hi, vs);
            self.mk(d.var, lo, hi)
        };
        self.cache.put(TAG_EXISTS, a, vs, 0, r);
        r
    }

    fn and_exists_rec(&mut self, a: u32, b: u32, vs: u32) -> u32 {
        if a == FALSE_ID || b == FALSE_ID {
            return FALSE_ID;
        }
        if a == TRUE_ID || a == b {
            return self.exists_rec(b, vs);
        }
        if b == TRUE_ID {
            return self.exists_rec(a, vs);
        }
        let (a, b) = if a > b { (b, a) } else { (a, b) };
        let v = self.var_of(a).min(self.var_of(b));
        if v > self.varsets[vs as usize].last {
            return self.apply_rec(BinOp::And, a, b);
        }
        if let Some(r) = self.cache.get(TAG_AND_EXISTS, a, b, vs) {
            return r;
        }
        let (a0, a1) = self.cofactors(a, v);
        let (b0, b1) = self.cofactors(b, v);
        let lo = self.and_exists_rec(a0, b0, vs);
        let r = if self.varsets[vs as usize].mask[v as usize] {
            if lo == TRUE_ID {
                TRUE_ID
            } else {
                let hi = self.and_exists_rec(a1, b1, vs);
                self.apply_rec(BinOp::Or, lo, hi)
            }
        } else {
            let hi = self.and_exists_rec(a1, b1, vs);
            self.mk(v, lo, hi)
        };
        self.cache.put(TAG_AND_EXISTS, a, b, vs, r);
        r
    }

    fn rename_rec(&mut self, a: u32, dir: u32) -> u32 {
        if a <= TRUE_ID {
            return a;
        }
        if let Some(r) = self.cache.get(TAG_RENAME, a, dir, 0) {
            return r;
        }
        let d = self.nodes[a as usize];
        let lo = self.rename_rec(d.lo, dir);
        let hi = self.rename_rec(d.hi, dir);
        let var = if dir == 0 { d.var + 1 } else { d.var - 1 };
        let r = self.mk(var, lo, hi);
        self.cache.put(TAG_RENAME, a, dir, 0, r);
        r
    }

    fn support_ids(&self, a: u32) -> Vec<VarIndex> {
        let mut seen = rustc_hash::FxHashSet::default();
        let mut vars = rustc_hash::FxHashSet::default();
        let mut stack = vec![a];
        while let Some(n) = stack.pop() {
            if n <= TRUE_ID || !seen.insert(n) {
                continue;
            }
            let d = self.nodes[n as usize];
            vars.insert(d.var);
            stack.push(d.lo);
            stack.push(d.hi);
        }
        let mut out: Vec<_> = vars.into_iter().collect();
        out.sort_unstable();
        out
    }
}

/// Deep copy of `a` into `dst`. The source manager is left untouched.
pub fn transfer(src: &DdManager, a: DdNode, dst: &mut DdManager) -> DdResult<DdNode> {
    if src.var_count != dst.var_count {
        return Err(DdError::OrderMismatch {
            src: src.var_count,
            dst: dst.var_count,
        });
    }
    src.check(a)?;
    let mut memo: FxHashMap<u32, u32> = FxHashMap::default();
    memo.insert(FALSE_ID, FALSE_ID);
    memo.insert(TRUE_ID, TRUE_ID);
    let mut stack = vec![a.id];
    while let Some(&n) = stack.last() {
        if memo.contains_key(&n) {
            stack.pop();
            continue;
        }
        let d = src.nodes[n as usize];
        match (memo.get(&d.lo).copied(), memo.get(&d.hi).copied()) {
            (Some(lo), Some(hi)) => {
                let id = dst.mk(d.var, lo, hi);
                memo.insert(n, id);
                stack.pop();
            }
            (lo, hi) => {
                if lo.is_none() {
                    stack.push(d.lo);
                }
                if hi.is_none() {
                    stack.push(d.hi);
                }
            }
        }
    }
    Ok(dst.handle(memo[&a.id]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotNode {
    pub var: u32,
    pub lo: u32,
    pub hi: u32,
}

/// Manager-independent copy of one or more functions. Index 0 is FALSE,
/// index 1 is TRUE, and node `i` of `nodes` has index `i + 2`; children
/// always precede their parents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub var_count: u32,
    pub nodes: Vec<SnapshotNode>,
    pub roots: Vec<u32>,
}
