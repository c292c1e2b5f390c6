use std::collections::{BTreeMap, BTreeSet, HashSet};

use proptest::prelude::*;

use bdsched::analysis::{audit, partition_cp, within_r};
use bdsched::cp::run_cp;
use bdsched::generators::{enumerate_instances, gen_random, greedy_baseline, GridSpec, RandomConfig};
use bdsched::model::{profit, validate_instance, BufferState, Instance, Packet, PacketId, Rat, Time};
use bdsched::offline::{brute_force_partial, opt_full, p_set, solve_partial, PartialQuery};

fn value() -> impl Strategy<Value = Rat> {
    (1i64..=40, prop::sample::select(vec![1i64, 2, 4, 5, 10])).prop_map(|(n, d)| Rat::new(n, d))
}

fn instance(max_len: usize, max_release: Time) -> impl Strategy<Value = Instance> {
    prop::collection::vec((0..=max_release, any::<bool>(), value()), 0..=max_len).prop_map(|ps| {
        Instance::new(
            ps.into_iter()
                .enumerate()
                .map(|(i, (r, two, v))| Packet::new(i as u32, r, r + u32::from(two), v))
                .collect(),
        )
    })
}

/// Any subset of packets that could be pending just before arrivals at `t`.
fn buffer_at(inst: &Instance, t: Time, mask: u64) -> BufferState {
    let pending = inst
        .packets()
        .iter()
        .filter(|p| p.release < t && p.deadline >= t)
        .enumerate()
        .filter(|(i, _)| mask >> (i % 64) & 1 == 1)
        .map(|(_, p)| p.id)
        .collect();
    BufferState { time: t, pending }
}

fn canonical(inst: &Instance) -> Vec<(Time, Time, Rat)> {
    let mut v: Vec<_> = inst.packets().iter().map(|p| (p.release, p.deadline, p.value.clone())).collect();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn solver_matches_brute_force(
        inst in instance(9, 4),
        start in 0u32..4,
        a in 0u32..3,
        b in 0u32..3,
        mask in any::<u64>(),
    ) {
        let buf = buffer_at(&inst, start, mask);
        let q = PartialQuery::new(start, start + a, start + a + b, buf.pending);
        let fast = solve_partial(&q, &inst);
        let slow = brute_force_partial(&q, &inst).unwrap();
        prop_assert!(fast.check(&q, &inst));
        prop_assert_eq!(fast.total_value, slow.total_value);
    }

    #[test]
    fn arrival_and_slot_nesting(inst in instance(9, 4), t in 0u32..4, k in 0u32..3, mask in any::<u64>()) {
        let buf = buffer_at(&inst, t, mask);
        let e = (t + k) as i64;
        let base = p_set(t, e, e, &buf, &inst);
        prop_assert!(base.is_subset(&p_set(t, e + 1, e + 1, &buf, &inst)));
        prop_assert!(base.is_subset(&p_set(t, e, e + 1, &buf, &inst)));
    }

    #[test]
    fn cp_is_deterministic_and_feasible(inst in instance(10, 6)) {
        let a = run_cp(&inst).unwrap();
        let b = run_cp(&inst).unwrap();
        prop_assert_eq!(&a.schedule, &b.schedule);
        prop_assert_eq!(&a.trace, &b.trace);
        prop_assert!(a.schedule.check_feasible(&inst).is_ok());
        for s in &a.trace.steps {
            prop_assert_eq!(a.schedule.at(s.t), s.transmitted);
        }
    }

    #[test]
    fn cp_never_looks_past_next_step(inst in instance(10, 6)) {
        let run = run_cp(&inst).unwrap();
        for s in &run.trace.steps {
            if let Some(r) = s.reach {
                prop_assert!(r <= s.t + 1);
            }
            for c in s.m.iter().chain(&s.q) {
                if let Some(id) = c.id {
                    prop_assert!(inst.packet(id).release <= s.t + 1);
                }
            }
        }
    }

    #[test]
    fn baselines_bounded_by_opt(inst in instance(10, 6)) {
        let (opt, v_opt) = opt_full(&inst);
        prop_assert!(opt.check_feasible(&inst).is_ok());
        prop_assert_eq!(profit(&opt, &inst).unwrap(), v_opt.clone());
        let greedy = greedy_baseline(&inst);
        prop_assert!(greedy.check_feasible(&inst).is_ok());
        prop_assert!(profit(&greedy, &inst).unwrap() <= v_opt);
    }

    #[test]
    fn intervals_tile_and_cover(inst in instance(10, 6)) {
        let a = audit(&inst).unwrap();
        let r = &a.report;
        prop_assert_eq!(profit(&a.run.schedule, &inst).unwrap(), r.v_cp.clone());
        prop_assert!(r.v_cp <= r.v_opt);
        prop_assert!(within_r(&r.v_opt, &r.v_cp));
        prop_assert_eq!(r.uncovered.len(), 0);
        prop_assert_eq!(&r.v_opt_split, &r.v_opt);

        let spans = partition_cp(&a.run.trace).unwrap();
        if let Some(tau) = a.run.schedule.last_time() {
            prop_assert_eq!(spans.first().map(|s| s.start), Some(0));
            prop_assert_eq!(spans.last().map(|s| s.end), Some(tau));
            for w in spans.windows(2) {
                prop_assert_eq!(w[0].end + 1, w[1].start);
            }
        } else {
            prop_assert!(spans.is_empty());
        }
        let cp_sum = r.intervals.iter().fold(Rat::zero(), |acc, i| &acc + &i.v_cp);
        prop_assert_eq!(cp_sum, r.v_cp.clone());
    }

    #[test]
    fn json_round_trip(inst in instance(10, 6)) {
        let back = Instance::from_json(&inst.to_json()).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(back.hash_hex(), inst.hash_hex());
        for p in inst.packets() {
            prop_assert_eq!(p.value.to_string().parse::<Rat>().unwrap(), p.value.clone());
        }
    }

    #[test]
    fn random_instances_are_valid(seed in any::<u64>()) {
        let inst = gen_random(seed, &RandomConfig::default());
        prop_assert!(validate_instance(&inst).is_empty());
        prop_assert_eq!(gen_random(seed, &RandomConfig::default()), inst);
    }
}

// Start law with `B(t+1)` built from the oracle's own choice at `t` rather
// than from CP's.
proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn start_nesting_when_following_oracle(inst in instance(9, 4), t in 0u32..4, k in 1u32..3, mask in any::<u64>()) {
        let buf = buffer_at(&inst, t, mask);
        let e = (t + k) as i64;
        let base = p_set(t, e, e, &buf, &inst);
        let sent = base.assignment.get(&t).copied();
        let pending: BTreeSet<PacketId> = inst
            .packets()
            .iter()
            .filter(|p| buf.pending.contains(&p.id) || p.release == t)
            .filter(|p| p.deadline > t && Some(p.id) != sent)
            .map(|p| p.id)
            .collect();
        let next = BufferState { time: t + 1, pending };
        prop_assert!(p_set(t + 1, e, e, &next, &inst).is_subset(&base));
    }
}

#[test]
fn enumeration_has_no_relabelled_duplicates() {
    for allow_multi in [true, false] {
        let spec = GridSpec {
            horizon: 2,
            max_packets: 3,
            value_grid: vec![Rat::from(1), Rat::new(3, 2), Rat::from(2)],
            allow_multi,
        };
        let mut seen = HashSet::new();
        let mut n = 0;
        for inst in enumerate_instances(&spec) {
            n += 1;
            assert!(validate_instance(&inst).is_empty());
            assert!(seen.insert(canonical(&inst)), "duplicate {}", inst.to_json());
        }
        assert_eq!(n, spec.instance_count());
    }
}

#[test]
fn exhaustive_small_grid_is_within_r() {
    let spec = GridSpec {
        horizon: 2,
        max_packets: 3,
        value_grid: vec![Rat::from(1), Rat::new(8, 5), Rat::from(2)],
        allow_multi: true,
    };
    let mut by_size: BTreeMap<usize, usize> = BTreeMap::new();
    for inst in enumerate_instances(&spec) {
        let a = audit(&inst).unwrap();
        assert!(a.report.global_within_r, "{}", inst.to_json());
        *by_size.entry(inst.len()).or_default() += 1;
    }
    assert_eq!(by_size.keys().copied().collect::<Vec<_>>(), vec![1, 2, 3]);
}
