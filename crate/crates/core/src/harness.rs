//! Campaign runners and report emission.
//!
//! A campaign evaluates a stream of instances in parallel and merges the
//! results by instance index, so reports are byte-identical across runs and
//! worker counts.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    audit, check_inclusions, check_oracle_equivalence, within_r, AnalysisError, Check, Finding,
    InclusionFailure,
};
use crate::generators::{enumerate_instances, gen_random, greedy_baseline, GridSpec, RandomConfig};
use crate::model::{profit, Instance, Packet, Rat};

/// Fractional digits in decimal renderings of exact ratios.
pub const DECIMAL_DIGITS: usize = 12;

/// Instance counts above this need explicit confirmation on the CLI.
pub const CONFIRM_THRESHOLD: u128 = 10_000_000;

/// Optional per-instance probes beyond the interval checks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Probes {
    /// Nesting laws of partial optima along the run.
    pub inclusions: bool,
    /// Fast solver against brute force on every logged query.
    pub oracle: bool,
}

/// One CSV/JSON report line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Row {
    pub index: u64,
    pub instance_hash: String,
    pub packets: usize,
    pub v_cp: Rat,
    pub v_opt: Rat,
    pub v_greedy: Rat,
    /// `V_OPT / V_CP`; absent when CP earns nothing.
    pub ratio_cp: Option<Rat>,
    pub ratio_cp_decimal: String,
    /// `V_OPT ≤ R·V_CP`, decided exactly.
    pub within_r: bool,
    pub worst_interval_ratio: Option<Rat>,
    /// Failed checks of any kind, including probes.
    pub lemma_findings: usize,
    pub fallbacks: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub const CSV_HEADER: &str = "index,instance_hash,packets,v_cp,v_opt,v_greedy,ratio_cp,ratio_cp_decimal,within_r,worst_interval_ratio,lemma_findings,fallbacks,error";

impl Row {
    pub fn to_csv(&self) -> String {
        let opt = |r: &Option<Rat>| r.as_ref().map(Rat::to_string).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.index,
            self.instance_hash,
            self.packets,
            self.v_cp,
            self.v_opt,
            self.v_greedy,
            opt(&self.ratio_cp),
            self.ratio_cp_decimal,
            self.within_r,
            opt(&self.worst_interval_ratio),
            self.lemma_findings,
            self.fallbacks,
            self.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
        )
    }
}

/// Everything learned from one instance.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub row: Row,
    pub violations: Vec<Finding>,
    /// Start-law nesting failures where CP's packet at `t` differs from
    /// the oracle's; reported, not counted as violations.
    pub known_failures: Vec<InclusionFailure>,
    pub oracle_queries: usize,
}

impl Evaluation {
    pub fn is_violation(&self) -> bool {
        !self.violations.is_empty() || self.row.error.is_some()
    }
}

pub fn ratio_decimal(r: &Option<Rat>) -> String {
    r.as_ref().map(|r| r.to_decimal(DECIMAL_DIGITS)).unwrap_or_default()
}

pub fn evaluate_instance(index: u64, inst: &Instance, probes: Probes) -> Evaluation {
    let greedy = greedy_baseline(inst);
    let v_greedy = profit(&greedy, inst).expect("greedy schedule is feasible");
    let mut row = Row {
        index,
        instance_hash: inst.hash_hex(),
        packets: inst.len(),
        v_cp: Rat::zero(),
        v_opt: Rat::zero(),
        v_greedy,
        ratio_cp: None,
        ratio_cp_decimal: String::new(),
        within_r: false,
        worst_interval_ratio: None,
        lemma_findings: 0,
        fallbacks: 0,
        error: None,
    };
    let a = match audit(inst) {
        Ok(a) => a,
        Err(e) => {
            row.error = Some(e.to_string());
            row.lemma_findings = 1;
            return Evaluation { row, violations: Vec::new(), known_failures: Vec::new(), oracle_queries: 0 };
        }
    };
    let mut violations: Vec<Finding> = a.violations().cloned().collect();
    let mut known_failures = Vec::new();
    if probes.inclusions {
        for f in check_inclusions(inst, &a.run) {
            if f.finding.lemma == Check::InclusionStart && !f.cp_follows_oracle {
                known_failures.push(f);
            } else {
                violations.push(f.finding);
            }
        }
    }
    let mut oracle_queries = 0;
    if probes.oracle {
        let (bad, n) = check_oracle_equivalence(inst, &a.run);
        violations.extend(bad);
        oracle_queries = n;
    }

    row.v_cp = a.report.v_cp.clone();
    row.v_opt = a.report.v_opt.clone();
    row.ratio_cp = a.report.v_cp.is_positive().then(|| &a.report.v_opt / &a.report.v_cp);
    row.ratio_cp_decimal = ratio_decimal(&row.ratio_cp);
    row.within_r = a.report.global_within_r;
    row.worst_interval_ratio = a.report.worst_interval_ratio();
    row.lemma_findings = violations.len() + known_failures.len();
    row.fallbacks = a.run.trace.fallback_count();
    Evaluation { row, violations, known_failures, oracle_queries }
}

/// Largest OPT/CP ratio seen, with the instance that produced it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioWitness {
    pub index: u64,
    pub instance_hash: String,
    pub v_opt: Rat,
    pub v_cp: Rat,
    pub ratio: Rat,
    pub ratio_decimal: String,
    pub within_r: bool,
    pub instance: Instance,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub instances: u64,
    pub max_ratio_found: Option<RatioWitness>,
    pub violations: u64,
    pub violating_instances: u64,
    /// Start-law nesting failures in the characterized class.
    pub known_start_law_failures: u64,
    pub fallbacks: u64,
    pub oracle_queries: u64,
    pub worst_interval_ratio: Option<Rat>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<Row>,
    pub summary: Summary,
    /// Every failed check, in instance order.
    pub findings: Vec<Finding>,
    /// First violating instance, minimized.
    pub witness: Option<Instance>,
}

impl Report {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.to_csv());
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Summary recomputed from rows alone. Must agree with `summary` on the
    /// ratio fields.
    pub fn recompute_max(&self) -> Option<(u64, Rat)> {
        let mut best: Option<(u64, Rat)> = None;
        for r in &self.rows {
            if let Some(x) = &r.ratio_cp {
                if best.as_ref().is_none_or(|(_, b)| x > b) {
                    best = Some((r.index, x.clone()));
                }
            }
        }
        best
    }

    pub fn summary_text(&self) -> String {
        let s = &self.summary;
        let mut out = String::new();
        let _ = writeln!(out, "instances: {}", s.instances);
        match &s.max_ratio_found {
            Some(w) => {
                let _ = writeln!(
                    out,
                    "max OPT/CP: {} ({}) with V_OPT={} V_CP={} at #{} [{}], within R: {}",
                    w.ratio, w.ratio_decimal, w.v_opt, w.v_cp, w.index, w.instance_hash, w.within_r
                );
            }
            None => {
                let _ = writeln!(out, "max OPT/CP: n/a");
            }
        }
        if let Some(r) = &s.worst_interval_ratio {
            let _ = writeln!(out, "worst interval V'/V: {} ({})", r, r.to_decimal(DECIMAL_DIGITS));
        }
        let _ = writeln!(out, "violations: {} in {} instances", s.violations, s.violating_instances);
        let _ = writeln!(out, "known start-law nesting failures: {}", s.known_start_law_failures);
        let _ = writeln!(out, "fallback steps: {}", s.fallbacks);
        if s.oracle_queries > 0 {
            let _ = writeln!(out, "oracle queries compared: {}", s.oracle_queries);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CampaignOptions {
    /// 0 picks the rayon default.
    pub workers: usize,
    pub probes: Probes,
    /// Keep per-instance rows in the report.
    pub keep_rows: bool,
    /// Shrink the first violating instance before reporting it.
    pub minimize: bool,
}

const CHUNK: usize = 4096;

struct Merge {
    report: Report,
    first_violation: Option<Instance>,
}

impl Merge {
    fn new() -> Self {
        Merge { report: Report::default(), first_violation: None }
    }

    fn push(&mut self, inst: Instance, ev: Evaluation, keep_rows: bool) {
        let s = &mut self.report.summary;
        s.instances += 1;
        s.fallbacks += ev.row.fallbacks as u64;
        s.oracle_queries += ev.oracle_queries as u64;
        s.known_start_law_failures += ev.known_failures.len() as u64;
        let bad = ev.violations.len() as u64 + u64::from(ev.row.error.is_some());
        s.violations += bad;
        if bad > 0 {
            s.violating_instances += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some(inst.clone());
            }
        }
        if let Some(w) = &ev.row.worst_interval_ratio {
            if s.worst_interval_ratio.as_ref().is_none_or(|b| w > b) {
                s.worst_interval_ratio = Some(w.clone());
            }
        }
        if let Some(r) = &ev.row.ratio_cp {
            if s.max_ratio_found.as_ref().is_none_or(|b| r > &b.ratio) {
                s.max_ratio_found = Some(RatioWitness {
                    index: ev.row.index,
                    instance_hash: ev.row.instance_hash.clone(),
                    v_opt: ev.row.v_opt.clone(),
                    v_cp: ev.row.v_cp.clone(),
                    ratio: r.clone(),
                    ratio_decimal: ev.row.ratio_cp_decimal.clone(),
                    within_r: within_r(&ev.row.v_opt, &ev.row.v_cp),
                    instance: inst,
                });
            }
        }
        self.report.findings.extend(ev.violations);
        if keep_rows {
            self.report.rows.push(ev.row);
        }
    }

    fn finish(mut self, opts: &CampaignOptions) -> Report {
        self.report.witness = self.first_violation.map(|inst| {
            if opts.minimize {
                let probes = opts.probes;
                minimize_witness(&inst, |c| evaluate_instance(0, c, probes).is_violation())
            } else {
                inst
            }
        });
        self.report
    }
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Evaluate a stream of instances, chunk by chunk, in parallel.
pub fn run_stream<I>(instances: I, opts: &CampaignOptions) -> Report
where
    I: Iterator<Item = Instance> + Send,
{
    with_pool(opts.workers, || {
        let mut merge = Merge::new();
        let mut base = 0u64;
        let mut it = instances.peekable();
        while it.peek().is_some() {
            let chunk: Vec<Instance> = it.by_ref().take(CHUNK).collect();
            let evals: Vec<Evaluation> = chunk
                .par_iter()
                .enumerate()
                .map(|(i, inst)| evaluate_instance(base + i as u64, inst, opts.probes))
                .collect();
            base += chunk.len() as u64;
            for (inst, ev) in chunk.into_iter().zip(evals) {
                merge.push(inst, ev, opts.keep_rows);
            }
        }
        merge.finish(opts)
    })
}

pub fn run_exhaustive(spec: &GridSpec, opts: &CampaignOptions) -> Report {
    run_stream(enumerate_instances(spec), opts)
}

/// Seeds `[first, last)`; the row index is the seed.
pub fn run_fuzz(seeds: std::ops::Range<u64>, cfg: &RandomConfig, opts: &CampaignOptions) -> Report {
    with_pool(opts.workers, || {
        let evals: Vec<(Instance, Evaluation)> = seeds
            .into_par_iter()
            .map(|seed| {
                let inst = gen_random(seed, cfg);
                let ev = evaluate_instance(seed, &inst, opts.probes);
                (inst, ev)
            })
            .collect();
        let mut merge = Merge::new();
        for (inst, ev) in evals {
            merge.push(inst, ev, opts.keep_rows);
        }
        merge.finish(opts)
    })
}

/// Shrink `inst` while `still_bad` holds: drop packets one at a time, then
/// simplify values toward 1, then shift time so the first release is 0.
pub fn minimize_witness(inst: &Instance, still_bad: impl Fn(&Instance) -> bool) -> Instance {
    let renumber = |ps: Vec<Packet>| {
        Instance::new(
            ps.into_iter()
                .enumerate()
                .map(|(i, p)| Packet::new(i as u32, p.release, p.deadline, p.value))
                .collect(),
        )
    };
    let mut cur: Vec<Packet> = inst.packets().to_vec();
    if !still_bad(&renumber(cur.clone())) {
        return inst.clone();
    }
    loop {
        let mut changed = false;
        let mut i = 0;
        while i < cur.len() {
            let mut cand = cur.clone();
            cand.remove(i);
            if still_bad(&renumber(cand.clone())) {
                cur = cand;
                changed = true;
            } else {
                i += 1;
            }
        }
        for i in 0..cur.len() {
            let v = cur[i].value.clone();
            let whole = Rat::from_integer(v.numer() / v.denom());
            for simpler in [Rat::one(), whole] {
                if simpler.is_positive() && simpler < v {
                    let mut cand = cur.clone();
                    cand[i].value = simpler;
                    if still_bad(&renumber(cand.clone())) {
                        cur = cand;
                        changed = true;
                        break;
                    }
                }
            }
        }
        if let Some(shift) = cur.iter().map(|p| p.release).min().filter(|&m| m > 0) {
            let cand: Vec<Packet> = cur
                .iter()
                .map(|p| Packet::new(p.id.0, p.release - shift, p.deadline - shift, p.value.clone()))
                .collect();
            if still_bad(&renumber(cand.clone())) {
                cur = cand;
                changed = true;
            }
        }
        if !changed {
            return renumber(cur);
        }
    }
}

/// Profits and exact ratios of CP, greedy and OPT on one instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub instance_hash: String,
    pub v_opt: Rat,
    pub algorithms: Vec<AlgorithmResult>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgorithmResult {
    pub name: String,
    pub profit: Rat,
    pub ratio: Option<Rat>,
    pub ratio_decimal: String,
    pub within_r: bool,
}

pub fn compare(inst: &Instance) -> Result<Comparison, AnalysisError> {
    let a = audit(inst)?;
    let v_opt = a.report.v_opt.clone();
    let greedy = greedy_baseline(inst);
    let v_greedy = profit(&greedy, inst).expect("greedy schedule is feasible");
    let entry = |name: &str, p: Rat| {
        let ratio = p.is_positive().then(|| &v_opt / &p);
        AlgorithmResult {
            name: name.into(),
            ratio_decimal: ratio_decimal(&ratio),
            within_r: within_r(&v_opt, &p),
            ratio,
            profit: p,
        }
    };
    let algorithms = vec![entry("cp", a.report.v_cp.clone()), entry("greedy", v_greedy), entry("opt", v_opt.clone())];
    Ok(Comparison { instance_hash: inst.hash_hex(), v_opt, algorithms })
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("algorithm,profit,ratio_opt_over_alg,ratio_decimal,within_r\n");
        for a in &self.algorithms {
            let ratio = a.ratio.as_ref().map(Rat::to_string).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{}", a.name, a.profit, ratio, a.ratio_decimal, a.within_r);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::greedy_killer;

    fn grid() -> GridSpec {
        GridSpec {
            horizon: 1,
            max_packets: 3,
            value_grid: vec![Rat::one(), Rat::new(8, 5), Rat::from(3)],
            allow_multi: true,
        }
    }

    #[test]
    fn worker_count_does_not_change_report() {
        let one = CampaignOptions { workers: 1, keep_rows: true, ..Default::default() };
        let four = CampaignOptions { workers: 4, ..one };
        let a = run_exhaustive(&grid(), &one);
        let b = run_exhaustive(&grid(), &four);
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.summary.instances, grid().instance_count() as u64);
    }

    #[test]
    fn summary_max_matches_rows() {
        let opts = CampaignOptions { keep_rows: true, ..Default::default() };
        let r = run_fuzz(0..200, &RandomConfig::default(), &opts);
        let (idx, best) = r.recompute_max().unwrap();
        let w = r.summary.max_ratio_found.as_ref().unwrap();
        assert_eq!((w.index, &w.ratio), (idx, &best));
        assert!(w.within_r);
        assert_eq!(r.summary.violations, 0);
    }

    #[test]
    fn witness_reproduces_ratio() {
        let r = run_exhaustive(&grid(), &CampaignOptions::default());
        let w = r.summary.max_ratio_found.unwrap();
        let again = evaluate_instance(0, &w.instance, Probes::default());
        assert_eq!(again.row.ratio_cp, Some(w.ratio));
    }

    #[test]
    fn minimizer_keeps_predicate() {
        let inst = Instance::from_triples(&[(0, 0, Rat::from(5)), (2, 3, Rat::new(7, 2)), (3, 3, Rat::from(9))]);
        let has_big = |i: &Instance| i.packets().iter().any(|p| p.value >= 4);
        let m = minimize_witness(&inst, has_big);
        assert_eq!(m, Instance::from_triples(&[(0, 0, 9)]));
    }

    #[test]
    fn compare_greedy_killer() {
        let c = compare(&greedy_killer()).unwrap();
        let greedy = &c.algorithms[1];
        assert_eq!(greedy.ratio, Some(Rat::new(201, 101)));
        assert_eq!(greedy.ratio_decimal, "1.990099009900");
        assert!(!greedy.within_r);
        assert_eq!(c.algorithms[0].ratio, Some(Rat::one()));
        assert!(c.to_csv().starts_with("algorithm,profit"));
    }

    #[test]
    fn csv_row_shape() {
        let ev = evaluate_instance(3, &Instance::from_triples(&[(0, 1, 5), (0, 1, 3)]), Probes::default());
        let line = ev.row.to_csv();
        assert_eq!(line.split(',').count(), CSV_HEADER.split(',').count());
        assert!(line.starts_with("3,"));
        assert!(line.contains(",2,8,8,8,1,1.000000000000,true,1,0,0,"));
    }
}
