//! Instance sources: exhaustive grids, seeded random instances, and a
//! no-lookahead greedy baseline for contrast.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cp::CaseLabel;
use crate::model::{Instance, Packet, PacketId, Rat, Schedule, Time};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("value grid is empty")]
    EmptyGrid,
    #[error("value grid entry {0} is not positive")]
    NonPositiveValue(Rat),
}

/// Grid of candidate instances for exhaustive enumeration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Latest release time.
    pub horizon: Time,
    pub max_packets: usize,
    pub value_grid: Vec<Rat>,
    /// Whether several packets may share the same (release, deadline).
    pub allow_multi: bool,
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), GridError> {
        if self.value_grid.is_empty() {
            return Err(GridError::EmptyGrid);
        }
        match self.value_grid.iter().find(|v| !v.is_positive()) {
            Some(v) => Err(GridError::NonPositiveValue(v.clone())),
            None => Ok(()),
        }
    }

    /// Distinct packet shapes sorted by (release, deadline, value).
    pub fn packet_types(&self) -> Vec<(Time, Time, Rat)> {
        let values: BTreeSet<&Rat> = self.value_grid.iter().collect();
        let mut out = Vec::new();
        for r in 0..=self.horizon {
            for d in [r, r + 1] {
                for v in &values {
                    out.push((r, d, (*v).clone()));
                }
            }
        }
        out
    }

    /// Number of instances [`enumerate_instances`] yields.
    pub fn instance_count(&self) -> u128 {
        if self.max_packets == 0 {
            return 1;
        }
        let types = self.packet_types().len() as u128;
        let windows = 2 * (self.horizon as u128 + 1);
        let per_window = types / windows.max(1);
        (1..=self.max_packets as u128)
            .map(|k| {
                if self.allow_multi {
                    binomial(types + k - 1, k)
                } else {
                    binomial(windows, k).saturating_mul(per_window.saturating_pow(k as u32))
                }
            })
            .fold(0u128, |a, b| a.saturating_add(b))
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Lazy stream of every grid instance with between 1 and `max_packets`
/// packets, each multiset of packet shapes exactly once (packets sorted by
/// release, deadline, value, ids 0..). With `max_packets = 0` the stream is
/// the single empty instance.
pub struct InstanceStream {
    types: Vec<(Time, Time, Rat)>,
    allow_multi: bool,
    max: usize,
    k: usize,
    idx: Vec<usize>,
    started: bool,
    done: bool,
}

pub fn enumerate_instances(spec: &GridSpec) -> InstanceStream {
    let types = spec.packet_types();
    let done = spec.max_packets > 0 && types.is_empty();
    InstanceStream {
        types,
        allow_multi: spec.allow_multi,
        max: spec.max_packets,
        k: spec.max_packets.min(1),
        idx: Vec::new(),
        started: false,
        done,
    }
}

impl InstanceStream {
    fn first_of_size(&mut self) -> bool {
        let n = self.types.len();
        if self.allow_multi {
            self.idx = vec![0; self.k];
            true
        } else {
            self.idx = (0..self.k).collect();
            self.k <= n
        }
    }

    fn advance(&mut self) -> bool {
        let n = self.types.len();
        let k = self.k;
        for i in (0..k).rev() {
            let cap = if self.allow_multi { n - 1 } else { n - k + i };
            if self.idx[i] < cap {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = if self.allow_multi { self.idx[i] } else { self.idx[j - 1] + 1 };
                }
                return true;
            }
        }
        false
    }

    fn step(&mut self) -> bool {
        if !self.started {
            self.started = true;
            return self.first_of_size();
        }
        if self.k == 0 {
            return false;
        }
        if self.advance() {
            return true;
        }
        while self.k < self.max {
            self.k += 1;
            if self.first_of_size() {
                return true;
            }
        }
        false
    }

    fn distinct_windows(&self) -> bool {
        self.idx
            .windows(2)
            .all(|w| (self.types[w[0]].0, self.types[w[0]].1) != (self.types[w[1]].0, self.types[w[1]].1))
    }
}

impl Iterator for InstanceStream {
    type Item = Instance;

    fn next(&mut self) -> Option<Instance> {
        while !self.done {
            if !self.step() {
                self.done = true;
                break;
            }
            if !self.allow_multi && !self.distinct_windows() {
                continue;
            }
            let packets = self
                .idx
                .iter()
                .enumerate()
                .map(|(i, &ti)| {
                    let (r, d, v) = &self.types[ti];
                    Packet::new(i as u32, *r, *d, v.clone())
                })
                .collect();
            return Some(Instance::new(packets));
        }
        None
    }
}

/// Parameters for seeded random instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomConfig {
    /// Latest release time.
    pub horizon: Time,
    /// Expected arrivals per time step.
    pub arrival_rate: f64,
    /// Hard cap on arrivals per time step.
    pub max_per_step: u32,
    /// Values are drawn uniformly from `{lo/den, ..., hi/den}`.
    pub value_range: (u32, u32),
    pub value_denominator: u32,
    /// Probability that a packet has a two-slot window.
    pub two_slot_prob: f64,
}

impl Default for RandomConfig {
    fn default() -> Self {
        RandomConfig {
            horizon: 8,
            arrival_rate: 1.5,
            max_per_step: 4,
            value_range: (1, 16),
            value_denominator: 4,
            two_slot_prob: 0.5,
        }
    }
}

/// Reproducible random instance: arrivals per step are binomial with mean
/// `arrival_rate` capped at `max_per_step`.
pub fn gen_random(seed: u64, cfg: &RandomConfig) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = cfg.max_per_step.max(1);
    let p = (cfg.arrival_rate / cap as f64).clamp(0.0, 1.0);
    let (lo, hi) = (cfg.value_range.0.max(1), cfg.value_range.1.max(cfg.value_range.0.max(1)));
    let den = cfg.value_denominator.max(1);
    let mut packets = Vec::new();
    for t in 0..=cfg.horizon {
        let count = (0..cap).filter(|_| rng.random_bool(p)).count();
        for _ in 0..count {
            let d = if rng.random_bool(cfg.two_slot_prob.clamp(0.0, 1.0)) { t + 1 } else { t };
            let num = rng.random_range(lo..=hi);
            packets.push(Packet::new(packets.len() as u32, t, d, Rat::new(num, den)));
        }
    }
    Instance::new(packets)
}

/// At each step send the most valuable pending packet (ties: deadline, id).
pub fn greedy_baseline(inst: &Instance) -> Schedule {
    let mut sched = Schedule::new();
    if inst.is_empty() {
        return sched;
    }
    let mut pending: Vec<&Packet> = Vec::new();
    for t in 0..=inst.horizon() {
        pending.extend(inst.arrivals_at(t));
        let best = pending
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                b.value.cmp(&a.value).then(a.deadline.cmp(&b.deadline)).then(a.id.cmp(&b.id))
            })
            .map(|(i, _)| i);
        if let Some(i) = best {
            let p = pending.swap_remove(i);
            sched.assign(t, p.id);
        }
        pending.retain(|p| p.deadline > t);
    }
    sched
}

/// Two packets at time 0: the greedy choice of the slightly heavier
/// two-slot packet lets the one-slot packet expire.
pub fn greedy_killer() -> Instance {
    Instance::new(vec![
        Packet::new(0, 0, 0, Rat::one()),
        Packet::new(1, 0, 1, Rat::new(101, 100)),
    ])
}

fn triples(t: &[(Time, Time, i64, i64)]) -> Instance {
    Instance::new(
        t.iter()
            .enumerate()
            .map(|(i, &(r, d, n, den))| Packet::new(i as u32, r, d, Rat::new(n, den)))
            .collect(),
    )
}

/// Small instances on which CP reaches each second- and third-level leaf of
/// its case tree without a fallback. Found by random search and shrunk with
/// [`crate::harness::minimize_witness`].
pub fn case_witnesses() -> Vec<(CaseLabel, Instance)> {
    use CaseLabel::*;
    vec![
        (C2_1, triples(&[(0, 1, 4, 1), (0, 1, 4, 1), (1, 2, 21, 5)])),
        (C2_2_1, triples(&[(0, 1, 2, 1), (0, 1, 3, 1), (1, 2, 18, 5), (2, 2, 5, 1)])),
        (C2_2_2_1, triples(&[(0, 1, 2, 1), (0, 1, 3, 1), (1, 2, 4, 1), (2, 3, 3, 1), (2, 3, 5, 1)])),
        (C2_2_2_2, triples(&[(0, 1, 2, 1), (0, 1, 19, 10), (1, 2, 29, 10), (2, 3, 4, 1)])),
        (C2_2_2_3, triples(&[(0, 1, 12, 5), (0, 1, 7, 2), (1, 2, 19, 5), (2, 3, 6, 1)])),
        (C3_1, triples(&[(0, 1, 12, 5), (0, 1, 7, 2), (1, 2, 19, 5), (2, 3, 6, 1)])),
        (C3_2_1, triples(&[(0, 1, 2, 1), (0, 1, 3, 1), (1, 2, 18, 5), (2, 3, 23, 5), (3, 3, 59, 10)])),
        (
            C3_2_2,
            triples(&[(0, 1, 8, 5), (0, 1, 5, 2), (1, 2, 29, 10), (2, 3, 18, 5), (3, 4, 5, 1), (3, 4, 3, 1)]),
        ),
        (C3_2_3, triples(&[(0, 1, 29, 10), (0, 1, 19, 10), (1, 2, 3, 1), (2, 3, 22, 5), (3, 4, 6, 1)])),
    ]
}

/// Every instance obtained from `inst` by moving one packet's value by
/// `±k/den` for `k = 1..=steps`, keeping values positive.
pub fn value_perturbations(inst: &Instance, steps: i64, den: i64) -> Vec<Instance> {
    let mut out = Vec::new();
    for i in 0..inst.len() {
        for k in (-steps..=steps).filter(|&k| k != 0) {
            let mut ps = inst.packets().to_vec();
            let v = &ps[i].value + &Rat::new(k, den);
            if v.is_positive() {
                ps[i].value = v;
                out.push(Instance::new(ps));
            }
        }
    }
    out
}

/// Id of the packet greedy leaves behind, for display.
pub fn dropped_by(sched: &Schedule, inst: &Instance) -> Vec<PacketId> {
    let sent = sched.packet_ids();
    inst.packets().iter().map(|p| p.id).filter(|id| !sent.contains(id)).collect()
}
