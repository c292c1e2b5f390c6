//! Interval accounting over a CP run and executable checks of the
//! inequalities the competitive analysis relies on.
//!
//! CP's timeline `[0, τ]` is cut into spans `T_i = [t, t']` by the case
//! chain that starts at `t`. Each span gets a companion `T'_i` on OPT's
//! timeline, shifted by one step at either end when a two-slot packet sent
//! by CP at the boundary is sent by OPT one step later. All comparisons
//! against `R` are exact.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cp::{run_cp, CaseLabel, CaseTrace, CpError, CpRun, FallbackReason};
use crate::model::{Instance, PacketId, Quad17, Rat, Schedule, Time};
use crate::offline::{
    brute_force_partial, m_packet, opt_full, p_set, solve_partial, PSet, BRUTE_FORCE_LIMIT,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Cp(#[from] CpError),
    #[error("t={t}: case {case} does not continue a known chain ({detail})")]
    Structure { t: Time, case: CaseLabel, detail: &'static str },
    #[error("t={t}: trace ends inside a case chain")]
    TruncatedChain { t: Time },
}

/// One span `T_i` of CP's timeline and the case chain that produced it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpSpan {
    pub start: Time,
    pub end: Time,
    pub chain: Vec<CaseLabel>,
    /// Set when the chain was cut short by a fallback step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<FallbackReason>,
}

/// `T'_i`, inclusive at both ends. `start = end + 1` encodes an empty span.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptSpan {
    pub start: Time,
    pub end: Time,
}

impl OptSpan {
    pub fn contains(&self, t: Time) -> bool {
        self.start <= t && t <= self.end
    }

    pub fn is_empty(&self) -> bool {
        self.start > self.end
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub index: usize,
    pub cp_span: (Time, Time),
    pub opt_span: (Time, Time),
    /// `V_i`.
    pub v_cp: Rat,
    /// `V'_i`.
    pub v_opt: Rat,
    pub trigger: Vec<CaseLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<FallbackReason>,
    /// `V'_i ≤ R·V_i`, decided exactly.
    pub within_r: bool,
}

impl Interval {
    pub fn trigger_string(&self) -> String {
        let chain: Vec<&str> = self.trigger.iter().map(|c| c.as_str()).collect();
        chain.join(">")
    }
}

/// `lhs ≤ R·rhs`, decided in `Q(√17)`.
pub fn within_r(lhs: &Rat, rhs: &Rat) -> bool {
    Quad17::r().scale(rhs).cmp_rat(lhs).is_ge()
}

/// Cut CP's timeline `[0, τ]` into spans. Steps after the last transmission
/// are ignored, idle steps form one-step spans.
pub fn partition_cp(trace: &CaseTrace) -> Result<Vec<CpSpan>, AnalysisError> {
    let Some(tau) = trace.steps.iter().rev().find(|s| s.transmitted.is_some()).map(|s| s.t) else {
        return Ok(Vec::new());
    };
    let step = |t: Time| trace.step(t).ok_or(AnalysisError::TruncatedChain { t });
    let committed_at = |t: Time| -> Result<(), AnalysisError> {
        let s = step(t)?;
        if s.case == CaseLabel::Committed {
            Ok(())
        } else {
            Err(AnalysisError::Structure { t, case: s.case, detail: "expected a committed step" })
        }
    };

    let mut spans = Vec::new();
    let mut t = 0;
    while t <= tau {
        let first = step(t)?;
        let mut chain = vec![first.case];
        let mut fallback = first.fallback;
        let end = if fallback.is_some() || first.case == CaseLabel::Idle {
            t
        } else {
            use CaseLabel::*;
            match first.case {
                C1_1 => t,
                C1_2_1 | C1_2_2 | C1_2_3_1 | C1_2_3_2 | C1_2_3_3 => {
                    committed_at(t + 1)?;
                    chain.push(Committed);
                    t + 1
                }
                C1_2_3_4 => {
                    let second = step(t + 1)?;
                    chain.push(second.case);
                    fallback = second.fallback;
                    if fallback.is_some() {
                        if second.case.family() != Some(2) {
                            return Err(AnalysisError::Structure {
                                t: t + 1,
                                case: second.case,
                                detail: "expected the second level after 1.2.3.4",
                            });
                        }
                        t + 1
                    } else {
                        match second.case {
                            C2_1 | C2_2_1 | C2_2_2_2 => {
                                committed_at(t + 2)?;
                                chain.push(Committed);
                                t + 2
                            }
                            C2_2_2_1 => t + 1,
                            C2_2_2_3 => {
                                let third = step(t + 2)?;
                                chain.push(third.case);
                                fallback = third.fallback;
                                match third.case {
                                    _ if fallback.is_some() && third.case.family() == Some(3) => t + 2,
                                    C3_1 | C3_2_1 | C3_2_3 => {
                                        committed_at(t + 3)?;
                                        chain.push(Committed);
                                        t + 3
                                    }
                                    C3_2_2 => t + 2,
                                    other => {
                                        return Err(AnalysisError::Structure {
                                            t: t + 2,
                                            case: other,
                                            detail: "expected the third level after 2.2.2.3",
                                        })
                                    }
                                }
                            }
                            other => {
                                return Err(AnalysisError::Structure {
                                    t: t + 1,
                                    case: other,
                                    detail: "expected the second level after 1.2.3.4",
                                })
                            }
                        }
                    }
                }
                other => {
                    return Err(AnalysisError::Structure { t, case: other, detail: "chain must start in case 1" })
                }
            }
        };
        spans.push(CpSpan { start: t, end, chain, fallback });
        t = end + 1;
    }
    Ok(spans)
}

fn sent_as_two_packet(cp: &Schedule, opt: &Schedule, inst: &Instance, t: Time) -> bool {
    cp.at(t)
        .filter(|&p| inst.packet(p).is_two_packet_of(t))
        .is_some_and(|p| opt.at(t + 1) == Some(p))
}

/// OPT-side spans. A span starts one step late when OPT spends its first
/// slot on the two-slot packet CP sent just before, and ends one step late
/// when OPT sends CP's last two-slot packet after it.
pub fn partition_opt(spans: &[CpSpan], cp_sched: &Schedule, opt_sched: &Schedule, inst: &Instance) -> Vec<OptSpan> {
    spans
        .iter()
        .map(|s| {
            let start = if s.start > 0 && sent_as_two_packet(cp_sched, opt_sched, inst, s.start - 1) {
                s.start + 1
            } else {
                s.start
            };
            let end = if sent_as_two_packet(cp_sched, opt_sched, inst, s.end) { s.end + 1 } else { s.end };
            OptSpan { start, end }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub intervals: Vec<Interval>,
    pub v_cp: Rat,
    pub v_opt: Rat,
    /// `Σ V'_i`.
    pub v_opt_split: Rat,
    /// OPT transmission times outside every `T'_j`.
    pub uncovered: Vec<Time>,
    /// `V_OPT ≤ R·V_CP`.
    pub global_within_r: bool,
}

impl IntervalReport {
    /// Largest `V'_i / V_i` over intervals with `V_i > 0`.
    pub fn worst_interval_ratio(&self) -> Option<Rat> {
        self.intervals
            .iter()
            .filter(|i| i.v_cp.is_positive())
            .map(|i| &i.v_opt / &i.v_cp)
            .max()
    }

    pub fn all_within_r(&self) -> bool {
        self.global_within_r && self.intervals.iter().all(|i| i.within_r)
    }
}

/// Per-interval profits for a finished run against a given OPT schedule.
pub fn build_report(
    inst: &Instance,
    run: &CpRun,
    opt_sched: &Schedule,
) -> Result<(Vec<CpSpan>, Vec<OptSpan>, IntervalReport), AnalysisError> {
    let spans = partition_cp(&run.trace)?;
    let opt_spans = partition_opt(&spans, &run.schedule, opt_sched, inst);

    let mut v_opt_parts = vec![Rat::zero(); spans.len()];
    let mut uncovered = Vec::new();
    for (t, id) in opt_sched.iter() {
        match opt_spans.iter().position(|s| s.contains(t)) {
            Some(j) => v_opt_parts[j] += inst.value(id),
            None => uncovered.push(t),
        }
    }

    let intervals: Vec<Interval> = spans
        .iter()
        .zip(&opt_spans)
        .zip(v_opt_parts)
        .enumerate()
        .map(|(index, ((s, o), v_opt))| {
            let v_cp: Rat = (s.start..=s.end)
                .filter_map(|t| run.schedule.at(t))
                .map(|id| inst.value(id))
                .sum();
            let within = within_r(&v_opt, &v_cp);
            Interval {
                index,
                cp_span: (s.start, s.end),
                opt_span: (o.start, o.end),
                v_cp,
                v_opt,
                trigger: s.chain.clone(),
                fallback: s.fallback,
                within_r: within,
            }
        })
        .collect();

    let v_cp: Rat = run.schedule.iter().map(|(_, id)| inst.value(id)).sum();
    let v_opt: Rat = opt_sched.iter().map(|(_, id)| inst.value(id)).sum();
    let v_opt_split = intervals.iter().map(|i| &i.v_opt).sum();
    let global_within_r = within_r(&v_opt, &v_cp);
    let report = IntervalReport { intervals, v_cp, v_opt, v_opt_split, uncovered, global_within_r };
    Ok((spans, opt_spans, report))
}

pub fn interval_report(inst: &Instance) -> Result<IntervalReport, AnalysisError> {
    let run = run_cp(inst)?;
    let (opt, _) = opt_full(inst);
    Ok(build_report(inst, &run, &opt)?.2)
}

/// Which inequality a [`Finding`] records.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// `V'_i ≤ V(t, t', t')` when CP's last packet in the span is not a
    /// two-slot packet released at `t'`.
    PrefixBound,
    /// `V'_i ≤ V(t, t', t'+1)` otherwise.
    ExtendedPrefixBound,
    /// After 2.2.2.1 at `t+1`, OPT sends `m_0(t)`, `m_1(t)` at `t`, `t+1`.
    ForcedPair,
    /// After 3.2.2 at `t+2`, OPT sends `m_0..m_2(t)` at `t..t+2`.
    ForcedTriple,
    /// `V'_i ≤ R·V_i`.
    IntervalRatio,
    /// OPT transmission time inside some `T'_j`.
    Coverage,
    /// `V_OPT ≤ Σ V'_i`.
    OptSplit,
    /// `V_OPT ≤ R·V_CP`.
    GlobalRatio,
    /// `P(t, t', t') ⊆ P(t, t'+1, t'+1)`.
    InclusionArrival,
    /// `P(t, t', t') ⊆ P(t, t', t'+1)`.
    InclusionSlot,
    /// `P(t+1, t', t') ⊆ P(t, t', t')`.
    InclusionStart,
    /// Fast solver value equals brute force on a logged query.
    OracleEquivalence,
}

impl Check {
    pub fn as_str(self) -> &'static str {
        match self {
            Check::PrefixBound => "prefix_bound",
            Check::ExtendedPrefixBound => "extended_prefix_bound",
            Check::ForcedPair => "forced_pair",
            Check::ForcedTriple => "forced_triple",
            Check::IntervalRatio => "interval_ratio",
            Check::Coverage => "coverage",
            Check::OptSplit => "opt_split",
            Check::GlobalRatio => "global_ratio",
            Check::InclusionArrival => "inclusion_arrival",
            Check::InclusionSlot => "inclusion_slot",
            Check::InclusionStart => "inclusion_start",
            Check::OracleEquivalence => "oracle_equivalence",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One evaluated inequality. `verdict` is true when it holds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub instance_hash: String,
    pub interval_index: Option<usize>,
    pub lemma: Check,
    pub lhs: String,
    pub rhs: String,
    pub verdict: bool,
}

/// Everything derived from one instance.
#[derive(Clone, Debug)]
pub struct Audit {
    pub run: CpRun,
    pub opt_schedule: Schedule,
    pub spans: Vec<CpSpan>,
    pub opt_spans: Vec<OptSpan>,
    pub report: IntervalReport,
    /// Every evaluated check, passing or not.
    pub checks: Vec<Finding>,
}

impl Audit {
    pub fn violations(&self) -> impl Iterator<Item = &Finding> {
        self.checks.iter().filter(|f| !f.verdict)
    }
}

fn ids(p: &PSet) -> String {
    let v: Vec<String> = p.members.iter().map(|id| id.0.to_string()).collect();
    format!("{{{}}}", v.join(","))
}

fn sched_ids(ids: &[Option<PacketId>]) -> String {
    let v: Vec<String> = ids.iter().map(|id| id.map_or("-".into(), |p| p.0.to_string())).collect();
    format!("[{}]", v.join(","))
}

/// Run CP and OPT on `inst` and evaluate the per-instance checks: interval
/// bounds, forced OPT transmissions, interval and global ratios, coverage.
pub fn audit(inst: &Instance) -> Result<Audit, AnalysisError> {
    let run = run_cp(inst)?;
    let (opt, _) = opt_full(inst);
    let (spans, opt_spans, report) = build_report(inst, &run, &opt)?;
    let hash = inst.hash_hex();
    let mut checks = Vec::new();
    let mut push = |interval_index, lemma, lhs: String, rhs: String, verdict| {
        checks.push(Finding { instance_hash: hash.clone(), interval_index, lemma, lhs, rhs, verdict });
    };

    for iv in &report.intervals {
        let (t, end) = iv.cp_span;
        let buffer = run.buffer(t);
        let extended = run
            .schedule
            .at(end)
            .is_some_and(|p| inst.packet(p).is_two_packet_of(end));
        let (lemma, slot_end) = if extended {
            (Check::ExtendedPrefixBound, end as i64 + 1)
        } else {
            (Check::PrefixBound, end as i64)
        };
        let bound = p_set(t, end as i64, slot_end, &buffer, inst).total_value;
        push(Some(iv.index), lemma, iv.v_opt.to_string(), bound.to_string(), iv.v_opt <= bound);
        push(
            Some(iv.index),
            Check::IntervalRatio,
            iv.v_opt.to_string(),
            format!("R*{}", iv.v_cp),
            iv.within_r,
        );
    }

    for step in &run.trace.steps {
        if step.fallback.is_some() {
            continue;
        }
        let (lemma, lag) = match step.case {
            CaseLabel::C2_2_2_1 => (Check::ForcedPair, 1),
            CaseLabel::C3_2_2 => (Check::ForcedTriple, 2),
            _ => continue,
        };
        let t = step.t - lag;
        let buffer = run.buffer(t);
        let mut expected = Vec::new();
        for i in 0..=lag {
            expected.push(m_packet(t, i, &buffer, inst).ok().flatten());
        }
        let actual: Vec<Option<PacketId>> = (t..=step.t).map(|u| opt.at(u)).collect();
        let holds = expected.iter().all(Option::is_some) && expected == actual;
        let index = spans.iter().position(|s| s.start <= t && t <= s.end);
        push(index, lemma, sched_ids(&actual), sched_ids(&expected), holds);
    }

    for &u in &report.uncovered {
        push(None, Check::Coverage, u.to_string(), "covered".into(), false);
    }
    push(
        None,
        Check::OptSplit,
        report.v_opt.to_string(),
        report.v_opt_split.to_string(),
        report.v_opt <= report.v_opt_split,
    );
    push(
        None,
        Check::GlobalRatio,
        report.v_opt.to_string(),
        format!("R*{}", report.v_cp),
        report.global_within_r,
    );

    Ok(Audit { run, opt_schedule: opt, spans, opt_spans, report, checks })
}

/// Failed interval bounds and forced-transmission checks.
pub fn check_lemma_bounds(inst: &Instance) -> Result<Vec<Finding>, AnalysisError> {
    let a = audit(inst)?;
    Ok(a.checks
        .into_iter()
        .filter(|f| {
            !f.verdict
                && matches!(
                    f.lemma,
                    Check::PrefixBound | Check::ExtendedPrefixBound | Check::ForcedPair | Check::ForcedTriple
                )
        })
        .collect())
}

/// A failed nesting law at `(t, t')`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InclusionFailure {
    pub finding: Finding,
    pub t: Time,
    pub t_end: Time,
    /// Whether CP's packet at `t` is the one `OPT*(t, t', t')` sends at `t`.
    /// Only meaningful for [`Check::InclusionStart`]: the start law can fail
    /// once CP sends something else at `t`, since `B(t+1)` then keeps
    /// packets the oracle at `t` would have dropped.
    pub cp_follows_oracle: bool,
}

/// Nesting of partial optima along a run, for every `t ≤ t'` inside the
/// simulated window. Returns the failures only.
pub fn check_inclusions(inst: &Instance, run: &CpRun) -> Vec<InclusionFailure> {
    let n = run.buffers.len() as Time;
    let hash = inst.hash_hex();
    let mut out = Vec::new();
    for t in 0..n {
        let b = run.buffer(t);
        let next = run.buffer(t + 1);
        for t2 in t..n {
            let (s, e) = (t as i64, t2 as i64);
            let base = p_set(t, e, e, &b, inst);
            let follows = run.schedule.at(t) == base.assignment.get(&t).copied();
            let mut test = |lemma, small: &PSet, big: &PSet| {
                if !small.is_subset(big) {
                    out.push(InclusionFailure {
                        finding: Finding {
                            instance_hash: hash.clone(),
                            interval_index: None,
                            lemma,
                            lhs: format!("t={t},t'={t2}:{}", ids(small)),
                            rhs: ids(big),
                            verdict: false,
                        },
                        t,
                        t_end: t2,
                        cp_follows_oracle: follows,
                    });
                }
            };
            test(Check::InclusionArrival, &base, &p_set(t, e + 1, e + 1, &b, inst));
            test(Check::InclusionSlot, &base, &p_set(t, e, e + 1, &b, inst));
            if e > s && t + 1 < n {
                test(Check::InclusionStart, &p_set(t + 1, e, e, &next, inst), &base);
            }
        }
    }
    out
}

/// Compare the fast solver against brute force on every distinct query the
/// run issued with at most [`BRUTE_FORCE_LIMIT`] eligible packets. Returns
/// the failures and the number of queries compared.
pub fn check_oracle_equivalence(inst: &Instance, run: &CpRun) -> (Vec<Finding>, usize) {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut compared = 0;
    for q in &run.queries {
        if !seen.insert(q) || q.eligible(inst).len() > BRUTE_FORCE_LIMIT {
            continue;
        }
        let Ok(slow) = brute_force_partial(q, inst) else { continue };
        compared += 1;
        let fast = solve_partial(q, inst);
        if fast.total_value != slow.total_value {
            out.push(Finding {
                instance_hash: inst.hash_hex(),
                interval_index: None,
                lemma: Check::OracleEquivalence,
                lhs: format!("P({},{},{})={}", q.start, q.arrival_end, q.slot_end, fast.total_value),
                rhs: slow.total_value.to_string(),
                verdict: false,
            });
        }
    }
    (out, compared)
}
