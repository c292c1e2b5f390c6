//! The CompareWithPartialOPT online algorithm.
//!
//! Each phase runs arrival, transmission (with one step of lookahead) and
//! expiration. The algorithm keeps a table of slot decisions `s_t`: a slot
//! can be empty, hold a committed packet, or hold one of the two deferred
//! markers that route the next transmission subphase to the second or third
//! level of the case tree. Every selector (`m_i`, `q_i`) is answered by a
//! [`PartialOracle`] seeded with the algorithm's own buffer at the time the
//! selector refers to.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BufferState, Instance, PacketId, Quad17, Rat, Schedule, Time};
use crate::offline::{canonical_cmp, OfflineError, PartialOracle, PartialQuery};

/// Leaf of the case tree executed at one time step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseLabel {
    C1_1,
    C1_2_1,
    C1_2_2,
    C1_2_3_1,
    C1_2_3_2,
    C1_2_3_3,
    C1_2_3_4,
    C2_1,
    C2_2_1,
    C2_2_2_1,
    C2_2_2_2,
    C2_2_2_3,
    C3_1,
    C3_2_1,
    C3_2_2,
    C3_2_3,
    /// Transmission of a packet committed at the previous step.
    Committed,
    /// Empty buffer.
    Idle,
}

impl CaseLabel {
    pub const ALL: [CaseLabel; 18] = [
        CaseLabel::C1_1,
        CaseLabel::C1_2_1,
        CaseLabel::C1_2_2,
        CaseLabel::C1_2_3_1,
        CaseLabel::C1_2_3_2,
        CaseLabel::C1_2_3_3,
        CaseLabel::C1_2_3_4,
        CaseLabel::C2_1,
        CaseLabel::C2_2_1,
        CaseLabel::C2_2_2_1,
        CaseLabel::C2_2_2_2,
        CaseLabel::C2_2_2_3,
        CaseLabel::C3_1,
        CaseLabel::C3_2_1,
        CaseLabel::C3_2_2,
        CaseLabel::C3_2_3,
        CaseLabel::Committed,
        CaseLabel::Idle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseLabel::C1_1 => "1.1",
            CaseLabel::C1_2_1 => "1.2.1",
            CaseLabel::C1_2_2 => "1.2.2",
            CaseLabel::C1_2_3_1 => "1.2.3.1",
            CaseLabel::C1_2_3_2 => "1.2.3.2",
            CaseLabel::C1_2_3_3 => "1.2.3.3",
            CaseLabel::C1_2_3_4 => "1.2.3.4",
            CaseLabel::C2_1 => "2.1",
            CaseLabel::C2_2_1 => "2.2.1",
            CaseLabel::C2_2_2_1 => "2.2.2.1",
            CaseLabel::C2_2_2_2 => "2.2.2.2",
            CaseLabel::C2_2_2_3 => "2.2.2.3",
            CaseLabel::C3_1 => "3.1",
            CaseLabel::C3_2_1 => "3.2.1",
            CaseLabel::C3_2_2 => "3.2.2",
            CaseLabel::C3_2_3 => "3.2.3",
            CaseLabel::Committed => "committed",
            CaseLabel::Idle => "idle",
        }
    }

    /// 1, 2 or 3 for case-tree leaves.
    pub fn family(self) -> Option<u8> {
        use CaseLabel::*;
        match self {
            C1_1 | C1_2_1 | C1_2_2 | C1_2_3_1 | C1_2_3_2 | C1_2_3_3 | C1_2_3_4 => Some(1),
            C2_1 | C2_2_1 | C2_2_2_1 | C2_2_2_2 | C2_2_2_3 => Some(2),
            C3_1 | C3_2_1 | C3_2_2 | C3_2_3 => Some(3),
            Committed | Idle => None,
        }
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown case label `{0}`")]
pub struct ParseCaseLabelError(String);

impl FromStr for CaseLabel {
    type Err = ParseCaseLabelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CaseLabel::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| ParseCaseLabelError(s.to_string()))
    }
}

impl Serialize for CaseLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CaseLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Content of a slot variable `s_t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "packet")]
pub enum Decision {
    Null,
    Commit(PacketId),
    Tmp1,
    Tmp2,
}

/// Why a step left the case tree's prescribed action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackReason {
    /// Case 1.2 found no `m_1`; `m_0` is sent without a commitment.
    MissingM1,
    /// The case named a selector that does not exist.
    AbsentSelection,
    /// The case named a packet that is not in the buffer at this step.
    SelectionNotPending,
    /// The packet to commit for the next slot cannot be sent there.
    CommitmentInfeasible,
}

/// One selector evaluation recorded in the trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Consulted {
    /// Time whose buffer seeded the query (`t`, `t−1` or `t−2`).
    pub base: Time,
    pub index: u32,
    pub id: Option<PacketId>,
    pub value: Option<Rat>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub t: Time,
    pub case: CaseLabel,
    pub transmitted: Option<PacketId>,
    /// Written into `s_{t+1}`.
    pub committed: Option<Decision>,
    pub m: Vec<Consulted>,
    pub q: Vec<Consulted>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<FallbackReason>,
    /// Latest release time any selector at this step depended on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reach: Option<Time>,
}

impl TraceStep {
    pub fn new(t: Time, case: CaseLabel, transmitted: Option<PacketId>) -> Self {
        TraceStep {
            t,
            case,
            transmitted,
            committed: None,
            m: Vec::new(),
            q: Vec::new(),
            fallback: None,
            reach: None,
        }
    }

    /// `m_i` as consulted at this step, if it was.
    pub fn m_at(&self, index: u32) -> Option<PacketId> {
        self.m.iter().find(|c| c.index == index).and_then(|c| c.id)
    }

    pub fn q_at(&self, index: u32) -> Option<PacketId> {
        self.q.iter().find(|c| c.index == index).and_then(|c| c.id)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseTrace {
    pub steps: Vec<TraceStep>,
}

impl CaseTrace {
    pub fn step(&self, t: Time) -> Option<&TraceStep> {
        self.steps.get(t as usize).filter(|s| s.t == t)
    }

    pub fn labels(&self) -> Vec<CaseLabel> {
        self.steps.iter().map(|s| s.case).collect()
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("trace step serializes"));
            out.push('\n');
        }
        out
    }

    pub fn fallback_count(&self) -> usize {
        self.steps.iter().filter(|s| s.fallback.is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CpError {
    #[error(transparent)]
    Offline(#[from] OfflineError),
    #[error("t={t}: committed packet {id} is not in the buffer")]
    CommittedMissing { t: Time, id: PacketId },
    #[error("t={t}: slot decision {decision:?} with an empty buffer")]
    DecisionOnEmptyBuffer { t: Time, decision: Decision },
    #[error("t={t}: deferred decision without the oracle for t-{lag}")]
    MissingOracle { t: Time, lag: u32 },
}

/// Complete record of one simulation.
#[derive(Debug, Clone)]
pub struct CpRun {
    pub schedule: Schedule,
    pub trace: CaseTrace,
    /// `B(t)` for every simulated `t`, index = `t`.
    pub buffers: Vec<BufferState>,
    /// Every partial query the selectors issued.
    pub queries: Vec<PartialQuery>,
}

impl CpRun {
    pub fn buffer(&self, t: Time) -> BufferState {
        self.buffers
            .get(t as usize)
            .cloned()
            .unwrap_or_else(|| BufferState::empty(t))
    }
}

/// Oracles seeded with `B(t)`, `B(t−1)` and `B(t−2)`.
pub struct CaseOracles<'o, 'a> {
    pub now: &'o PartialOracle<'a>,
    pub prev: Option<&'o PartialOracle<'a>>,
    pub prev2: Option<&'o PartialOracle<'a>>,
}

/// What the case tree prescribes at one step before feasibility checks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classification {
    pub label: CaseLabel,
    pub transmit: Option<PacketId>,
    pub next: Option<Decision>,
    pub m: Vec<Consulted>,
    pub q: Vec<Consulted>,
    pub fallback: Option<FallbackReason>,
}

struct Selectors<'r, 'a> {
    oracle: &'r PartialOracle<'a>,
    inst: &'a Instance,
    m: &'r mut Vec<Consulted>,
    q: &'r mut Vec<Consulted>,
}

impl Selectors<'_, '_> {
    fn m(&mut self, i: u32) -> Result<Option<PacketId>, CpError> {
        let id = self.oracle.m(i)?;
        self.m.push(self.record(i, id));
        Ok(id)
    }

    fn q(&mut self, i: u32) -> Result<Option<PacketId>, CpError> {
        let id = self.oracle.q(i)?;
        self.q.push(self.record(i, id));
        Ok(id)
    }

    fn record(&self, index: u32, id: Option<PacketId>) -> Consulted {
        Consulted {
            base: self.oracle.start(),
            index,
            id,
            value: id.map(|p| self.inst.value(p).clone()),
        }
    }

    /// Absent packets count as value 0 in threshold tests.
    fn v(&self, id: Option<PacketId>) -> Rat {
        id.map_or_else(Rat::zero, |p| self.inst.value(p).clone())
    }

    fn deadline_is(&self, id: Option<PacketId>, t: Time) -> bool {
        id.is_some_and(|p| self.inst.packet(p).deadline == t)
    }
}

/// `num ≤ R · den`, decided exactly.
fn ratio_at_most_r(num: &Rat, den: &Rat) -> bool {
    Quad17::r().scale(den).cmp_rat(num).is_ge()
}

fn commit(id: Option<PacketId>) -> Option<Decision> {
    Some(id.map_or(Decision::Null, Decision::Commit))
}

/// Runs the case tree for the transmission subphase at `t` whose slot
/// variable holds `decision` (`Null`, `Tmp1` or `Tmp2`).
pub fn classify_case(
    t: Time,
    decision: Decision,
    oracles: &CaseOracles<'_, '_>,
    inst: &Instance,
) -> Result<Classification, CpError> {
    let mut m = Vec::new();
    let mut q = Vec::new();
    let oracle = match decision {
        Decision::Tmp1 => oracles.prev.ok_or(CpError::MissingOracle { t, lag: 1 })?,
        Decision::Tmp2 => oracles.prev2.ok_or(CpError::MissingOracle { t, lag: 2 })?,
        _ => oracles.now,
    };
    let mut sel = Selectors { oracle, inst, m: &mut m, q: &mut q };
    let (label, transmit, next, fallback) = match decision {
        Decision::Commit(id) => (CaseLabel::Committed, Some(id), None, None),
        Decision::Null => case_one(t, &mut sel)?,
        Decision::Tmp1 => case_two(t, &mut sel)?,
        Decision::Tmp2 => case_three(t, &mut sel)?,
    };
    Ok(Classification { label, transmit, next, m, q, fallback })
}

type Leaf = (CaseLabel, Option<PacketId>, Option<Decision>, Option<FallbackReason>);

fn case_one(t: Time, s: &mut Selectors) -> Result<Leaf, CpError> {
    let m0 = s.m(0)?;
    if m0.is_none() || s.deadline_is(m0, t) {
        return Ok((CaseLabel::C1_1, m0, None, None));
    }
    let m1 = s.m(1)?;
    if m1.is_none() {
        return Ok((CaseLabel::C1_2_2, m0, None, Some(FallbackReason::MissingM1)));
    }
    if s.deadline_is(m1, t) {
        return Ok((CaseLabel::C1_2_1, m1, commit(m0), None));
    }
    if s.deadline_is(m1, t + 1) {
        return Ok((CaseLabel::C1_2_2, m0, commit(m1), None));
    }
    let q1 = s.q(1)?;
    let (v0, v1, vq) = (s.v(m0), s.v(m1), s.v(q1));
    Ok(if v0 >= v1 {
        // v(q_1) ≥ α·v(m_1)
        if Quad17::alpha().scale(&v1).cmp_rat(&vq).is_le() {
            (CaseLabel::C1_2_3_1, q1, commit(m0), None)
        } else {
            (CaseLabel::C1_2_3_2, m0, commit(m1), None)
        }
    } else if ratio_at_most_r(&(&vq + &v0 + &v1), &(&v0 + &v1)) {
        (CaseLabel::C1_2_3_3, m0, commit(m1), None)
    } else {
        (CaseLabel::C1_2_3_4, q1, Some(Decision::Tmp1), None)
    })
}

fn case_two(t: Time, s: &mut Selectors) -> Result<Leaf, CpError> {
    let m0 = s.m(0)?;
    let m1 = s.m(1)?;
    let m2 = s.m(2)?;
    let q1 = s.q(1)?;
    let (v0, v1, v2, vq1) = (s.v(m0), s.v(m1), s.v(m2), s.v(q1));
    if ratio_at_most_r(&(&v0 + &v1 + &v2), &(&vq1 + &v0 + &v1)) {
        return Ok((CaseLabel::C2_1, m0, commit(m1), None));
    }
    if s.deadline_is(m2, t + 1) {
        return Ok((CaseLabel::C2_2_1, m1, commit(m2), None));
    }
    let q2 = s.q(2)?;
    if q2 != q1 {
        return Ok((CaseLabel::C2_2_2_1, m1, None, None));
    }
    let vq2 = s.v(q2);
    if ratio_at_most_r(&(&vq2 + &v0 + &v1 + &v2), &(&vq1 + &v1 + &v2)) {
        Ok((CaseLabel::C2_2_2_2, m1, commit(m2), None))
    } else {
        Ok((CaseLabel::C2_2_2_3, m0, Some(Decision::Tmp2), None))
    }
}

fn case_three(t: Time, s: &mut Selectors) -> Result<Leaf, CpError> {
    let m0 = s.m(0)?;
    let m1 = s.m(1)?;
    let m2 = s.m(2)?;
    let m3 = s.m(3)?;
    let q1 = s.q(1)?;
    let (v0, v1, v2, v3, vq1) = (s.v(m0), s.v(m1), s.v(m2), s.v(m3), s.v(q1));
    if ratio_at_most_r(&(&v0 + &v1 + &v2 + &v3), &(&vq1 + &v0 + &v1 + &v2)) {
        return Ok((CaseLabel::C3_1, m1, commit(m2), None));
    }
    if s.deadline_is(m3, t + 1) {
        return Ok((CaseLabel::C3_2_1, m2, commit(m3), None));
    }
    let q3 = s.q(3)?;
    if q3 != q1 {
        Ok((CaseLabel::C3_2_2, m2, None, None))
    } else {
        Ok((CaseLabel::C3_2_3, m2, commit(m3), None))
    }
}

/// Simulates the algorithm on `inst` until the horizon and every pending
/// commitment have passed.
pub fn run_cp(inst: &Instance) -> Result<CpRun, CpError> {
    let horizon = inst.horizon();
    let mut pending: BTreeSet<PacketId> = BTreeSet::new();
    let mut slots: BTreeMap<Time, Decision> = BTreeMap::new();
    let mut schedule = Schedule::new();
    let mut steps = Vec::new();
    let mut buffers = Vec::new();
    let mut queries = Vec::new();
    let mut window: VecDeque<PartialOracle> = VecDeque::new();

    let mut t: Time = 0;
    loop {
        let keep_going = t <= horizon || slots.range(t..).next().is_some();
        if !keep_going {
            break;
        }
        let before = BufferState { time: t, pending: pending.clone() };
        buffers.push(before.clone());
        pending.extend(inst.arrivals_at(t).map(|p| p.id));

        window.push_front(PartialOracle::new(inst, before));
        if window.len() > 3 {
            queries.extend(window.pop_back().expect("non-empty").into_log());
        }
        for o in &window {
            o.set_limit(t + 1);
        }

        let decision = slots.remove(&t).unwrap_or(Decision::Null);
        let step = if pending.is_empty() {
            if decision != Decision::Null {
                return Err(CpError::DecisionOnEmptyBuffer { t, decision });
            }
            TraceStep::new(t, CaseLabel::Idle, None)
        } else {
            if let Decision::Commit(id) = decision {
                if !pending.contains(&id) {
                    return Err(CpError::CommittedMissing { t, id });
                }
            }
            let oracles = CaseOracles {
                now: &window[0],
                prev: window.get(1).filter(|o| o.start() + 1 == t),
                prev2: window.get(2).filter(|o| o.start() + 2 == t),
            };
            let mut c = classify_case(t, decision, &oracles, inst)?;
            let reach = window.iter().filter_map(|o| o.take_reach()).max();

            let sendable = c.transmit.filter(|id| pending.contains(id));
            let reason = if c.transmit.is_none() {
                Some(FallbackReason::AbsentSelection)
            } else if sendable.is_none() {
                Some(FallbackReason::SelectionNotPending)
            } else if !commitment_ok(c.next, sendable, t, &pending, inst) {
                Some(FallbackReason::CommitmentInfeasible)
            } else {
                None
            };
            if let Some(reason) = reason {
                c.transmit = best_pending(&pending, inst);
                c.next = None;
                c.fallback = Some(reason);
            }
            if let Some(next) = c.next {
                if next != Decision::Null {
                    slots.insert(t + 1, next);
                }
            }
            TraceStep {
                t,
                case: c.label,
                transmitted: c.transmit,
                committed: c.next,
                m: c.m,
                q: c.q,
                fallback: c.fallback,
                reach,
            }
        };

        if let Some(id) = step.transmitted {
            pending.remove(&id);
            schedule.assign(t, id);
        }
        steps.push(step);
        pending.retain(|&id| inst.packet(id).deadline > t);
        t += 1;
    }
    queries.extend(window.into_iter().rev().flat_map(|o| o.into_log()));

    Ok(CpRun { schedule, trace: CaseTrace { steps }, buffers, queries })
}

fn commitment_ok(
    next: Option<Decision>,
    now: Option<PacketId>,
    t: Time,
    pending: &BTreeSet<PacketId>,
    inst: &Instance,
) -> bool {
    match next {
        Some(Decision::Null) => false,
        Some(Decision::Commit(id)) => {
            let p = inst.packet(id);
            Some(id) != now
                && p.available_at(t + 1)
                && (pending.contains(&id) || p.release == t + 1)
        }
        _ => true,
    }
}

fn best_pending(pending: &BTreeSet<PacketId>, inst: &Instance) -> Option<PacketId> {
    pending
        .iter()
        .map(|&id| inst.packet(id))
        .min_by(|a, b| canonical_cmp(a, b))
        .map(|p| p.id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::profit;

    fn pid(x: u32) -> PacketId {
        PacketId(x)
    }

    #[test]
    fn label_round_trip() {
        for c in CaseLabel::ALL {
            assert_eq!(c.as_str().parse::<CaseLabel>().unwrap(), c);
            let js = serde_json::to_string(&c).unwrap();
            assert_eq!(serde_json::from_str::<CaseLabel>(&js).unwrap(), c);
        }
        assert!("1.3".parse::<CaseLabel>().is_err());
    }

    #[test]
    fn two_case_one_one() {
        // a(0,0,5), b(0,1,3)
        let inst = Instance::from_triples(&[(0, 0, 5), (0, 1, 3)]);
        let run = run_cp(&inst).unwrap();
        assert_eq!(run.trace.labels(), vec![CaseLabel::C1_1, CaseLabel::C1_1]);
        assert_eq!(run.schedule.at(0), Some(pid(0)));
        assert_eq!(run.schedule.at(1), Some(pid(1)));
        assert_eq!(profit(&run.schedule, &inst).unwrap(), Rat::from(8));
    }

    #[test]
    fn case_one_two_one() {
        // a(0,1,5), z(0,0,4)
        let inst = Instance::from_triples(&[(0, 1, 5), (0, 0, 4)]);
        let run = run_cp(&inst).unwrap();
        assert_eq!(run.trace.labels(), vec![CaseLabel::C1_2_1, CaseLabel::Committed]);
        assert_eq!(run.schedule.at(0), Some(pid(1)));
        assert_eq!(run.schedule.at(1), Some(pid(0)));
        assert_eq!(run.trace.steps[0].committed, Some(Decision::Commit(pid(0))));
        assert_eq!(profit(&run.schedule, &inst).unwrap(), Rat::from(9));
    }

    #[test]
    fn case_one_two_two() {
        // a(0,1,5), b(0,1,3)
        let inst = Instance::from_triples(&[(0, 1, 5), (0, 1, 3)]);
        let run = run_cp(&inst).unwrap();
        assert_eq!(run.trace.labels(), vec![CaseLabel::C1_2_2, CaseLabel::Committed]);
        assert_eq!(run.schedule.at(0), Some(pid(0)));
        assert_eq!(run.schedule.at(1), Some(pid(1)));
        assert_eq!(profit(&run.schedule, &inst).unwrap(), Rat::from(8));
    }

    #[test]
    fn empty_instance_idles() {
        let run = run_cp(&Instance::default()).unwrap();
        assert!(run.schedule.is_empty());
        assert!(run.trace.steps.iter().all(|s| s.case == CaseLabel::Idle));
    }

    #[test]
    fn single_packet_without_m1() {
        // One 2-slot packet: m_1 is absent at t=0.
        let inst = Instance::from_triples(&[(0, 1, 4)]);
        let run = run_cp(&inst).unwrap();
        let s0 = &run.trace.steps[0];
        assert_eq!(s0.case, CaseLabel::C1_2_2);
        assert_eq!(s0.fallback, Some(FallbackReason::MissingM1));
        assert_eq!(s0.transmitted, Some(pid(0)));
        assert_eq!(s0.committed, None);
    }

    #[test]
    fn q1_from_the_future_falls_back() {
        // a(0,1,1), b(1,2,10), c(1,2,5): Case 1.2.3.4 names c, which has not
        // arrived at t=0.
        let inst = Instance::from_triples(&[(0, 1, 1), (1, 2, 10), (1, 2, 5)]);
        let run = run_cp(&inst).unwrap();
        let s0 = &run.trace.steps[0];
        assert_eq!(s0.case, CaseLabel::C1_2_3_4);
        assert_eq!(s0.fallback, Some(FallbackReason::SelectionNotPending));
        assert_eq!(s0.transmitted, Some(pid(0)));
        assert_eq!(profit(&run.schedule, &inst).unwrap(), Rat::from(16));
    }

    #[test]
    fn case_one_two_three_four_then_two_one() {
        // a(0,1,10) is m_0, x(0,0,9) is q_1, b(1,2,11) is m_1.
        // (9+10+11)/(10+11) > R, so 1.2.3.4 sends x and defers.
        let inst = Instance::from_triples(&[(0, 1, 10), (0, 0, 9), (1, 2, 11)]);
        let run = run_cp(&inst).unwrap();
        assert_eq!(
            run.trace.labels(),
            vec![CaseLabel::C1_2_3_4, CaseLabel::C2_1, CaseLabel::Committed]
        );
        assert_eq!(run.trace.steps[0].transmitted, Some(pid(1)));
        assert_eq!(run.trace.steps[0].committed, Some(Decision::Tmp1));
        assert_eq!(run.schedule.at(1), Some(pid(0)));
        assert_eq!(run.schedule.at(2), Some(pid(2)));
        assert_eq!(profit(&run.schedule, &inst).unwrap(), Rat::from(30));
    }

    #[test]
    fn lookahead_never_exceeded() {
        let inst = Instance::from_triples(&[
            (0, 1, 1),
            (0, 0, 2),
            (1, 2, 2),
            (2, 3, 7),
            (3, 3, 1),
            (4, 5, 9),
        ]);
        let run = run_cp(&inst).unwrap();
        for s in &run.trace.steps {
            if let Some(r) = s.reach {
                assert!(r <= s.t + 1);
            }
            for c in s.m.iter().chain(&s.q) {
                if let Some(id) = c.id {
                    assert!(inst.packet(id).release <= s.t + 1);
                }
            }
        }
    }
}
