//! Core domain types: packets, instances, schedules and exact arithmetic.

mod quad;
mod rat;

pub use quad::{quad_cmp, Quad17};
pub use rat::{ParseRatError, Rat};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Integer time step.
pub type Time = u32;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PacketId(pub u32);

impl fmt::Display for PacketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl fmt::Debug for PacketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Packet {
    pub id: PacketId,
    pub release: Time,
    pub deadline: Time,
    pub value: Rat,
}

impl Packet {
    pub fn new(id: u32, release: Time, deadline: Time, value: Rat) -> Self {
        Packet { id: PacketId(id), release, deadline, value }
    }

    /// Whether the packet may be transmitted in slot `t`.
    pub fn available_at(&self, t: Time) -> bool {
        self.release <= t && t <= self.deadline
    }

    /// Released at `t` with deadline `t + 1`.
    pub fn is_two_packet_of(&self, t: Time) -> bool {
        self.release == t && self.deadline == t + 1
    }
}

/// A 2-bounded input: packets in input order.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Instance {
    packets: Vec<Packet>,
    index: BTreeMap<PacketId, usize>,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    packets: Vec<Packet>,
}

impl Serialize for Instance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Borrowed<'a> {
            packets: &'a [Packet],
        }
        Borrowed { packets: &self.packets }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Instance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        InstanceFile::deserialize(d).map(|f| Instance::new(f.packets))
    }
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("malformed instance JSON at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("invalid instance: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

impl Instance {
    /// Builds an instance without validating it; see [`validate_instance`].
    pub fn new(packets: Vec<Packet>) -> Self {
        let mut index = BTreeMap::new();
        for (i, p) in packets.iter().enumerate() {
            index.entry(p.id).or_insert(i);
        }
        Instance { packets, index }
    }

    /// Ids are assigned 0, 1, ... in the given order.
    pub fn from_triples<V: Into<Rat> + Clone>(triples: &[(Time, Time, V)]) -> Self {
        Instance::new(
            triples
                .iter()
                .enumerate()
                .map(|(i, (r, d, v))| Packet::new(i as u32, *r, *d, v.clone().into()))
                .collect(),
        )
    }

    /// Parses the JSON file format; does not validate.
    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        serde_json::from_str::<Instance>(text).map_err(|e| InstanceError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    /// Parses and validates.
    pub fn load_json(text: &str) -> Result<Self, InstanceError> {
        let inst = Instance::from_json(text)?;
        let violations = validate_instance(&inst);
        if violations.is_empty() {
            Ok(inst)
        } else {
            Err(InstanceError::Invalid(violations))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn packets(&self) -> &[Packet] {
        &self.packets
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn get(&self, id: PacketId) -> Option<&Packet> {
        self.index.get(&id).map(|&i| &self.packets[i])
    }

    /// Panics on an unknown id.
    pub fn packet(&self, id: PacketId) -> &Packet {
        self.get(id).unwrap_or_else(|| panic!("unknown packet {id}"))
    }

    pub fn value(&self, id: PacketId) -> &Rat {
        &self.packet(id).value
    }

    /// Maximum deadline, 0 for the empty instance.
    pub fn horizon(&self) -> Time {
        self.packets.iter().map(|p| p.deadline).max().unwrap_or(0)
    }

    pub fn arrivals_at(&self, t: Time) -> impl Iterator<Item = &Packet> {
        self.packets.iter().filter(move |p| p.release == t)
    }

    /// Short stable fingerprint of the canonical JSON encoding.
    pub fn hash_hex(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        hex::encode(&digest[..8])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NotTwoBounded,
    DeadlineBeforeRelease,
    NonPositiveValue,
    DuplicateId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub packet: PacketId,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let reason = match self.kind {
            ViolationKind::NotTwoBounded => "not 2-bounded (deadline - release > 1)",
            ViolationKind::DeadlineBeforeRelease => "deadline before release",
            ViolationKind::NonPositiveValue => "non-positive value",
            ViolationKind::DuplicateId => "duplicate id",
        };
        write!(f, "packet {}: {}", self.packet.0, reason)
    }
}

/// Every broken packet or instance invariant, one entry each.
pub fn validate_instance(inst: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for p in &inst.packets {
        if !seen.insert(p.id) {
            out.push(Violation { packet: p.id, kind: ViolationKind::DuplicateId });
        }
        if p.deadline < p.release {
            out.push(Violation { packet: p.id, kind: ViolationKind::DeadlineBeforeRelease });
        } else if p.deadline - p.release > 1 {
            out.push(Violation { packet: p.id, kind: ViolationKind::NotTwoBounded });
        }
        if !p.value.is_positive() {
            out.push(Violation { packet: p.id, kind: ViolationKind::NonPositiveValue });
        }
    }
    out
}

/// Which packet, if any, is transmitted in each slot.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    slots: BTreeMap<Time, PacketId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("slot {slot}: unknown packet {id}")]
    UnknownPacket { slot: Time, id: PacketId },
    #[error("packet {id} scheduled twice (slots {first} and {second})")]
    Duplicate { id: PacketId, first: Time, second: Time },
    #[error("slot {slot}: packet {id} outside its window [{release}, {deadline}]")]
    OutsideWindow { slot: Time, id: PacketId, release: Time, deadline: Time },
}

impl Schedule {
    pub fn new() -> Self {
        Schedule::default()
    }

    /// Overwrites whatever occupied `t`.
    pub fn assign(&mut self, t: Time, id: PacketId) {
        self.slots.insert(t, id);
    }

    pub fn at(&self, t: Time) -> Option<PacketId> {
        self.slots.get(&t).copied()
    }

    pub fn time_of(&self, id: PacketId) -> Option<Time> {
        self.slots.iter().find(|(_, &p)| p == id).map(|(&t, _)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Time, PacketId)> + '_ {
        self.slots.iter().map(|(&t, &p)| (t, p))
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn last_time(&self) -> Option<Time> {
        self.slots.keys().next_back().copied()
    }

    pub fn packet_ids(&self) -> BTreeSet<PacketId> {
        self.slots.values().copied().collect()
    }

    pub fn check_feasible(&self, inst: &Instance) -> Result<(), ScheduleError> {
        let mut seen: BTreeMap<PacketId, Time> = BTreeMap::new();
        for (t, id) in self.iter() {
            let p = inst.get(id).ok_or(ScheduleError::UnknownPacket { slot: t, id })?;
            if !p.available_at(t) {
                return Err(ScheduleError::OutsideWindow {
                    slot: t,
                    id,
                    release: p.release,
                    deadline: p.deadline,
                });
            }
            if let Some(first) = seen.insert(id, t) {
                return Err(ScheduleError::Duplicate { id, first, second: t });
            }
        }
        Ok(())
    }
}

impl FromIterator<(Time, PacketId)> for Schedule {
    fn from_iter<I: IntoIterator<Item = (Time, PacketId)>>(iter: I) -> Self {
        Schedule { slots: iter.into_iter().collect() }
    }
}

/// Exact total value of a feasible schedule.
pub fn profit(sched: &Schedule, inst: &Instance) -> Result<Rat, ScheduleError> {
    sched.check_feasible(inst)?;
    Ok(sched.iter().map(|(_, id)| inst.value(id)).sum())
}

/// Packets pending in a buffer immediately before the arrival subphase at
/// `time`: released before `time`, not yet transmitted, deadline at least
/// `time`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BufferState {
    pub time: Time,
    pub pending: BTreeSet<PacketId>,
}

impl BufferState {
    pub fn empty(time: Time) -> Self {
        BufferState { time, pending: BTreeSet::new() }
    }
}
