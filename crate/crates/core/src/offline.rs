//! The clairvoyant optimum and the partial oracle seeded with an online
//! buffer.
//!
//! A partial query `(t, t', t'')` starts from a buffer snapshot `B(t)`, sees
//! every packet released in `[t, t']` and may transmit in slots `[t, t'']`.
//! Sets of packets that can be matched into distinct slots form a
//! transversal matroid, so scanning packets in a fixed priority order and
//! keeping each one whose addition stays matchable yields a maximum-value
//! set. The priority order (value desc, deadline asc, release asc, id asc)
//! is the single tie-breaking rule shared by every query, which keeps the
//! answers of neighbouring queries nested.

use std::cell::{Cell, RefCell};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use serde::Serialize;
use thiserror::Error;

use crate::model::{BufferState, Instance, Packet, PacketId, Rat, Schedule, Time};

/// Largest eligible set accepted by [`brute_force_partial`].
pub const BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OfflineError {
    #[error("brute force refused: {count} eligible packets exceeds the limit of {limit}")]
    TooLarge { count: usize, limit: usize },
    #[error(
        "nesting violated at t={start}: {which}_{index} difference has {} packets {:?}",
        .members.len(), .members
    )]
    Nesting { start: Time, which: char, index: u32, members: Vec<PacketId> },
    #[error("lookahead exceeded: query needs arrivals through {requested} but only {limit} is visible")]
    Lookahead { requested: Time, limit: Time },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PartialQuery {
    pub start: Time,
    pub arrival_end: Time,
    pub slot_end: Time,
    pub base_buffer: BTreeSet<PacketId>,
}

impl PartialQuery {
    pub fn new(start: Time, arrival_end: Time, slot_end: Time, base_buffer: BTreeSet<PacketId>) -> Self {
        debug_assert!(start <= arrival_end && arrival_end <= slot_end);
        PartialQuery { start, arrival_end, slot_end, base_buffer }
    }

    /// Buffer packets plus every packet released in `[start, arrival_end]`,
    /// in input order.
    pub fn eligible<'a>(&self, inst: &'a Instance) -> Vec<&'a Packet> {
        inst.packets()
            .iter()
            .filter(|p| {
                self.base_buffer.contains(&p.id)
                    || (self.start <= p.release && p.release <= self.arrival_end)
            })
            .collect()
    }

    fn slot_count(&self) -> usize {
        if self.slot_end < self.start {
            0
        } else {
            (self.slot_end - self.start + 1) as usize
        }
    }

    /// Slot indices (relative to `start`) the packet may occupy.
    fn window(&self, p: &Packet) -> std::ops::RangeInclusive<usize> {
        let lo = p.release.max(self.start);
        let hi = p.deadline.min(self.slot_end);
        if lo > hi || self.slot_end < self.start {
            #[allow(clippy::reversed_empty_ranges)]
            return 1..=0;
        }
        (lo - self.start) as usize..=(hi - self.start) as usize
    }
}

/// Packets chosen by a partial query together with a slot assignment.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PSet {
    pub members: BTreeSet<PacketId>,
    pub assignment: BTreeMap<Time, PacketId>,
    pub total_value: Rat,
}

impl PSet {
    pub fn empty() -> Self {
        PSet::default()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: PacketId) -> bool {
        self.members.contains(&id)
    }

    pub fn is_subset(&self, other: &PSet) -> bool {
        self.members.is_subset(&other.members)
    }

    pub fn difference(&self, other: &PSet) -> Vec<PacketId> {
        self.members.difference(&other.members).copied().collect()
    }

    /// Checks the structural invariants against the query that produced it.
    pub fn check(&self, q: &PartialQuery, inst: &Instance) -> bool {
        if self.members.len() > q.slot_count() || self.members.len() != self.assignment.len() {
            return false;
        }
        let assigned: BTreeSet<PacketId> = self.assignment.values().copied().collect();
        if assigned != self.members {
            return false;
        }
        let slots_ok = self.assignment.iter().all(|(&t, &id)| {
            q.start <= t && t <= q.slot_end && inst.packet(id).available_at(t)
        });
        let total: Rat = self.members.iter().map(|&id| inst.value(id)).sum();
        slots_ok && total == self.total_value
    }
}

/// The global priority order: value desc, deadline asc, release asc, id asc.
pub fn canonical_cmp(a: &Packet, b: &Packet) -> Ordering {
    b.value
        .cmp(&a.value)
        .then(a.deadline.cmp(&b.deadline))
        .then(a.release.cmp(&b.release))
        .then(a.id.cmp(&b.id))
}

/// Canonical maximum-value answer to a partial query.
pub fn solve_partial(q: &PartialQuery, inst: &Instance) -> PSet {
    let mut cands = q.eligible(inst);
    cands.sort_by(|a, b| canonical_cmp(a, b));

    let n_slots = q.slot_count();
    let mut slot_owner: Vec<Option<usize>> = vec![None; n_slots];
    let mut kept: Vec<usize> = Vec::new();
    for (ci, p) in cands.iter().enumerate() {
        if q.window(p).is_empty() {
            continue;
        }
        let mut visited = vec![false; n_slots];
        if augment(ci, &cands, q, &mut slot_owner, &mut visited) {
            kept.push(ci);
        }
    }

    let kept_packets: Vec<&Packet> = kept.iter().map(|&i| cands[i]).collect();
    let assignment = edf_assign(q, &kept_packets).unwrap_or_else(|| {
        // EDF always succeeds on a matchable set of unit jobs; fall back to
        // the matching itself if that ever stops being true.
        slot_owner
            .iter()
            .enumerate()
            .filter_map(|(s, o)| o.map(|ci| (q.start + s as Time, cands[ci].id)))
            .collect()
    });
    let members: BTreeSet<PacketId> = kept_packets.iter().map(|p| p.id).collect();
    let total_value = kept_packets.iter().map(|p| &p.value).sum();
    PSet { members, assignment, total_value }
}

// Kuhn-style augmenting path from candidate `ci` into the slot graph.
fn augment(
    ci: usize,
    cands: &[&Packet],
    q: &PartialQuery,
    slot_owner: &mut [Option<usize>],
    visited: &mut [bool],
) -> bool {
    for s in q.window(cands[ci]) {
        if visited[s] {
            continue;
        }
        visited[s] = true;
        match slot_owner[s] {
            None => {
                slot_owner[s] = Some(ci);
                return true;
            }
            Some(other) => {
                if augment(other, cands, q, slot_owner, visited) {
                    slot_owner[s] = Some(ci);
                    return true;
                }
            }
        }
    }
    false
}

/// Earliest-deadline-first placement, ties by id.
fn edf_assign(q: &PartialQuery, kept: &[&Packet]) -> Option<BTreeMap<Time, PacketId>> {
    let mut pending: Vec<&Packet> = kept.to_vec();
    let mut out = BTreeMap::new();
    if q.slot_end < q.start {
        return pending.is_empty().then_some(out);
    }
    for t in q.start..=q.slot_end {
        let pick = pending
            .iter()
            .enumerate()
            .filter(|(_, p)| p.available_at(t))
            .min_by_key(|(_, p)| (p.deadline, p.id))
            .map(|(i, _)| i);
        if let Some(i) = pick {
            let p = pending.swap_remove(i);
            out.insert(t, p.id);
        }
        if pending.iter().any(|p| p.deadline <= t) {
            return None;
        }
    }
    pending.is_empty().then_some(out)
}

/// Independent oracle: exhaustive search over slot-by-slot choices.
///
/// Each slot either stays empty or takes one available packet not used in
/// the previous slot; with windows of at most two consecutive slots that is
/// the only reuse to exclude, so memoizing on `(slot, previous choice)`
/// covers every feasible (subset, assignment) pair. The objective is the
/// pair (total value, membership bitmask over the priority order) compared
/// lexicographically, which selects the same set as the canonical rule.
pub fn brute_force_partial(q: &PartialQuery, inst: &Instance) -> Result<PSet, OfflineError> {
    let mut cands = q.eligible(inst);
    if cands.len() > BRUTE_FORCE_LIMIT {
        return Err(OfflineError::TooLarge { count: cands.len(), limit: BRUTE_FORCE_LIMIT });
    }
    cands.sort_by(|a, b| canonical_cmp(a, b));
    let n = cands.len();
    let bit = |i: usize| 1u32 << (n - 1 - i);

    struct Search<'a> {
        q: &'a PartialQuery,
        cands: &'a [&'a Packet],
        memo: HashMap<(usize, Option<usize>), ((Rat, u32), Option<usize>)>,
    }

    impl Search<'_> {
        fn best(&mut self, s: usize, prev: Option<usize>, bit: &dyn Fn(usize) -> u32) -> (Rat, u32) {
            if s >= self.q.slot_count() {
                return (Rat::zero(), 0);
            }
            if let Some((v, _)) = self.memo.get(&(s, prev)) {
                return v.clone();
            }
            let t = self.q.start + s as Time;
            let mut best = self.best(s + 1, None, bit);
            let mut choice = None;
            for i in 0..self.cands.len() {
                if Some(i) == prev || !self.cands[i].available_at(t) {
                    continue;
                }
                let (v, m) = self.best(s + 1, Some(i), bit);
                let cand = (v + &self.cands[i].value, m | bit(i));
                if cand > best {
                    best = cand;
                    choice = Some(i);
                }
            }
            self.memo.insert((s, prev), (best.clone(), choice));
            best
        }
    }

    let mut search = Search { q, cands: &cands, memo: HashMap::new() };
    let (total_value, _) = search.best(0, None, &bit);

    let mut assignment = BTreeMap::new();
    let mut prev = None;
    for s in 0..q.slot_count() {
        let choice = search.memo.get(&(s, prev)).and_then(|(_, c)| *c);
        if let Some(i) = choice {
            assignment.insert(q.start + s as Time, cands[i].id);
        }
        prev = choice;
    }
    let members = assignment.values().copied().collect();
    Ok(PSet { members, assignment, total_value })
}

/// `P(start, arrival_end, slot_end)` seeded with the online buffer
/// `B(start)`. `arrival_end = start − 1` yields the empty set.
pub fn p_set(
    start: Time,
    arrival_end: i64,
    slot_end: i64,
    buffer: &BufferState,
    inst: &Instance,
) -> PSet {
    if arrival_end < start as i64 || slot_end < arrival_end {
        return PSet::empty();
    }
    let q = PartialQuery::new(start, arrival_end as Time, slot_end as Time, buffer.pending.clone());
    solve_partial(&q, inst)
}

fn single(start: Time, which: char, index: u32, diff: Vec<PacketId>) -> Result<Option<PacketId>, OfflineError> {
    match diff.len() {
        0 => Ok(None),
        1 => Ok(Some(diff[0])),
        _ => Err(OfflineError::Nesting { start, which, index, members: diff }),
    }
}

/// `m_i(t) = P(t, t+i, t+i) \ P(t, t+i−1, t+i−1)`.
pub fn m_packet(t: Time, i: u32, buffer: &BufferState, inst: &Instance) -> Result<Option<PacketId>, OfflineError> {
    let end = t as i64 + i as i64;
    let outer = p_set(t, end, end, buffer, inst);
    let inner = p_set(t, end - 1, end - 1, buffer, inst);
    single(t, 'm', i, outer.difference(&inner))
}

/// `q_i(t) = P(t, t+i, t+i+1) \ P(t, t+i, t+i)`.
pub fn q_packet(t: Time, i: u32, buffer: &BufferState, inst: &Instance) -> Result<Option<PacketId>, OfflineError> {
    let end = t as i64 + i as i64;
    let outer = p_set(t, end, end + 1, buffer, inst);
    let inner = p_set(t, end, end, buffer, inst);
    single(t, 'q', i, outer.difference(&inner))
}

/// Canonical optimal clairvoyant schedule and its profit.
pub fn opt_full(inst: &Instance) -> (Schedule, Rat) {
    if inst.is_empty() {
        return (Schedule::new(), Rat::zero());
    }
    let h = inst.horizon();
    let p = solve_partial(&PartialQuery::new(0, h, h, BTreeSet::new()), inst);
    (p.assignment.into_iter().collect(), p.total_value)
}

/// Memoized partial queries for one buffer snapshot `B(start)`.
///
/// Every query it answers is logged, and queries that would need arrivals
/// beyond the current visibility limit are refused.
pub struct PartialOracle<'a> {
    inst: &'a Instance,
    buffer: BufferState,
    limit: Cell<Time>,
    reach: Cell<Option<Time>>,
    cache: RefCell<HashMap<(Time, Time), Rc<PSet>>>,
    log: RefCell<Vec<PartialQuery>>,
}

impl<'a> PartialOracle<'a> {
    pub fn new(inst: &'a Instance, buffer: BufferState) -> Self {
        PartialOracle {
            inst,
            limit: Cell::new(Time::MAX),
            reach: Cell::new(None),
            buffer,
            cache: RefCell::new(HashMap::new()),
            log: RefCell::new(Vec::new()),
        }
    }

    pub fn start(&self) -> Time {
        self.buffer.time
    }

    pub fn buffer(&self) -> &BufferState {
        &self.buffer
    }

    /// Latest release time queries may depend on.
    pub fn set_limit(&self, limit: Time) {
        self.limit.set(limit);
    }

    /// Furthest arrival end requested since the last call.
    pub fn take_reach(&self) -> Option<Time> {
        self.reach.replace(None)
    }

    pub fn p(&self, arrival_end: i64, slot_end: i64) -> Result<Rc<PSet>, OfflineError> {
        let start = self.start();
        if arrival_end < start as i64 {
            return Ok(Rc::new(PSet::empty()));
        }
        let (ae, se) = (arrival_end as Time, slot_end as Time);
        if ae > self.limit.get() {
            return Err(OfflineError::Lookahead { requested: ae, limit: self.limit.get() });
        }
        self.reach.set(Some(self.reach.get().map_or(ae, |r| r.max(ae))));
        if let Some(hit) = self.cache.borrow().get(&(ae, se)) {
            return Ok(hit.clone());
        }
        let q = PartialQuery::new(start, ae, se, self.buffer.pending.clone());
        let ans = Rc::new(solve_partial(&q, self.inst));
        self.log.borrow_mut().push(q);
        self.cache.borrow_mut().insert((ae, se), ans.clone());
        Ok(ans)
    }

    pub fn m(&self, i: u32) -> Result<Option<PacketId>, OfflineError> {
        let end = self.start() as i64 + i as i64;
        let outer = self.p(end, end)?;
        let inner = self.p(end - 1, end - 1)?;
        single(self.start(), 'm', i, outer.difference(&inner))
    }

    pub fn q(&self, i: u32) -> Result<Option<PacketId>, OfflineError> {
        let end = self.start() as i64 + i as i64;
        let outer = self.p(end, end + 1)?;
        let inner = self.p(end, end)?;
        single(self.start(), 'q', i, outer.difference(&inner))
    }

    pub fn into_log(self) -> Vec<PartialQuery> {
        self.log.into_inner()
    }
}
