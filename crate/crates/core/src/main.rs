use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bdsched::analysis::{audit, Audit};
use bdsched::generators::{greedy_baseline, GridSpec, RandomConfig};
use bdsched::harness::{
    compare, run_exhaustive, run_fuzz, CampaignOptions, Probes, Report, CONFIRM_THRESHOLD,
    DECIMAL_DIGITS,
};
use bdsched::model::{profit, validate_instance, Instance, Rat, Schedule};

const EXIT_VIOLATION: u8 = 1;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "bdsched", version, about = "Simulate and certify the CP online scheduler with exact arithmetic")]
struct Cli {
    /// Worker threads for campaigns (0 = one per core).
    #[arg(long, global = true, env = "BDSCHED_WORKERS", default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run CP on an instance file and print trace, schedules and checks.
    Run(RunArgs),
    /// Print the CP case trace as JSON lines.
    Trace(RunArgs),
    /// Evaluate every instance of a small grid.
    Exhaustive(ExhaustiveArgs),
    /// Evaluate seeded random instances.
    Fuzz(FuzzArgs),
    /// Profits and ratios of CP, greedy and OPT.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Instance JSON: one object or an array of objects.
    #[arg(long, value_name = "FILE")]
    instances: PathBuf,
    /// Machine-readable output.
    #[arg(long)]
    json: bool,
    /// Write one `<hash>.jsonl` trace per instance here.
    #[arg(long, value_name = "DIR")]
    trace_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Skip per-instance rows; print only the summary.
    #[arg(long)]
    summary_only: bool,
    /// Write the first violating instance, or the worst-ratio instance if
    /// none violate.
    #[arg(long, value_name = "PATH")]
    emit_witness: Option<PathBuf>,
}

#[derive(Args)]
struct ExhaustiveArgs {
    #[arg(long, default_value_t = 2)]
    horizon: u32,
    #[arg(long, default_value_t = 3)]
    max_packets: usize,
    /// Comma-separated value grid, e.g. `1,5/4,8/5,2,3`.
    #[arg(long, default_value = "1,2,3")]
    values: String,
    /// At most one packet per (release, deadline) pair.
    #[arg(long)]
    distinct: bool,
    /// Also probe nesting laws and oracle equivalence.
    #[arg(long)]
    probes: bool,
    /// Proceed past the instance-count guard.
    #[arg(long)]
    yes: bool,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct FuzzArgs {
    /// Half-open seed range `A..B`.
    #[arg(long, default_value = "0..10000")]
    seeds: String,
    #[arg(long, default_value_t = RandomConfig::default().horizon)]
    horizon: u32,
    /// Expected arrivals per step.
    #[arg(long, default_value_t = RandomConfig::default().arrival_rate)]
    rate: f64,
    #[arg(long, default_value_t = RandomConfig::default().max_per_step)]
    max_per_step: u32,
    /// Skip nesting and oracle-equivalence probes.
    #[arg(long)]
    no_probes: bool,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, value_name = "FILE")]
    instances: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

struct Failure {
    code: u8,
    message: String,
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_INPUT, message: message.into() }
}

fn load_instances(path: &Path) -> Result<Vec<Instance>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let ctx = |e: String| input_error(format!("{}: {e}", path.display()));
    if text.trim_start().starts_with('[') {
        let all: Vec<Instance> = serde_json::from_str(&text).map_err(|e| {
            ctx(format!("malformed instance JSON at line {}, column {}: {e}", e.line(), e.column()))
        })?;
        for (k, inst) in all.iter().enumerate() {
            let v = validate_instance(inst);
            if !v.is_empty() {
                let msg: Vec<String> = v.iter().map(|v| v.to_string()).collect();
                return Err(ctx(format!("instance {k}: invalid instance: {}", msg.join("; "))));
            }
        }
        Ok(all)
    } else {
        Instance::load_json(&text).map(|i| vec![i]).map_err(|e| ctx(e.to_string()))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| input_error(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn audit_or_fail(inst: &Instance) -> Result<Audit, Failure> {
    audit(inst).map_err(|e| Failure { code: EXIT_VIOLATION, message: format!("simulation failed: {e}") })
}

fn fmt_schedule(s: &Schedule) -> String {
    let parts: Vec<String> = s.iter().map(|(t, id)| format!("{t}:{id}")).collect();
    parts.join(" ")
}

fn render_run(inst: &Instance, a: &Audit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "instance {} ({} packets)", inst.hash_hex(), inst.len());
    let _ = writeln!(out, "\ntrace");
    for s in &a.run.trace.steps {
        let tx = s.transmitted.map_or("-".to_string(), |p| p.to_string());
        let fb = s.fallback.map(|f| format!("  fallback {f:?}")).unwrap_or_default();
        let _ = writeln!(out, "  t={:<3} {:<9} sends {tx}{fb}", s.t, s.case.as_str());
    }
    let greedy = greedy_baseline(inst);
    let v_greedy = profit(&greedy, inst).expect("greedy schedule is feasible");
    let _ = writeln!(out, "\nschedules");
    let _ = writeln!(out, "  cp     {}  profit {}", fmt_schedule(&a.run.schedule), a.report.v_cp);
    let _ = writeln!(out, "  opt    {}  profit {}", fmt_schedule(&a.opt_schedule), a.report.v_opt);
    let _ = writeln!(out, "  greedy {}  profit {}", fmt_schedule(&greedy), v_greedy);
    if a.report.v_cp.is_positive() {
        let r = &a.report.v_opt / &a.report.v_cp;
        let _ = writeln!(out, "  OPT/CP = {r} ({})", r.to_decimal(DECIMAL_DIGITS));
    }
    let _ = writeln!(out, "\nintervals");
    for iv in &a.report.intervals {
        let _ = writeln!(
            out,
            "  #{:<3} T=[{},{}] T'=[{},{}] V={} V'={} {} {}{}",
            iv.index,
            iv.cp_span.0,
            iv.cp_span.1,
            iv.opt_span.0,
            iv.opt_span.1,
            iv.v_cp,
            iv.v_opt,
            iv.trigger_string(),
            if iv.within_r { "ok" } else { "EXCEEDS R" },
            if iv.fallback.is_some() { " (fallback)" } else { "" },
        );
    }
    let _ = writeln!(out, "\nchecks");
    for f in &a.checks {
        let at = f.interval_index.map(|i| format!(" #{i}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "  {:<22}{at:<5} {} <= {}  {}",
            f.lemma.as_str(),
            f.lhs,
            f.rhs,
            if f.verdict { "holds" } else { "VIOLATED" }
        );
    }
    out
}

fn write_trace(dir: &Path, inst: &Instance, a: &Audit) -> Result<(), Failure> {
    write_file(&dir.join(format!("{}.jsonl", inst.hash_hex())), &a.run.trace.to_jsonl())
}

fn cmd_run(args: &RunArgs, trace_only: bool) -> Result<bool, Failure> {
    let all = load_instances(&args.instances)?;
    let mut clean = true;
    let mut json_out = Vec::new();
    for inst in &all {
        let a = audit_or_fail(inst)?;
        clean &= a.violations().next().is_none();
        if let Some(dir) = &args.trace_dir {
            write_trace(dir, inst, &a)?;
        }
        if trace_only {
            print!("{}", a.run.trace.to_jsonl());
        } else if args.json {
            json_out.push(serde_json::json!({
                "instance_hash": inst.hash_hex(),
                "trace": a.run.trace.steps,
                "cp_schedule": a.run.schedule,
                "opt_schedule": a.opt_schedule,
                "report": a.report,
                "checks": a.checks,
            }));
        } else {
            println!("{}", render_run(inst, &a));
        }
    }
    if !json_out.is_empty() {
        let v = if json_out.len() == 1 { json_out.remove(0) } else { serde_json::Value::Array(json_out) };
        println!("{}", serde_json::to_string_pretty(&v).expect("json renders"));
    }
    Ok(clean)
}

fn parse_values(list: &str) -> Result<Vec<Rat>, Failure> {
    list.split(',')
        .map(|s| s.trim().parse::<Rat>().map_err(|e| input_error(format!("--values: {e}"))))
        .collect()
}

fn parse_seeds(s: &str) -> Result<Range<u64>, Failure> {
    let bad = || input_error(format!("--seeds: expected A..B, got `{s}`"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok(a..b)
}

fn emit_report(report: &Report, args: &ReportArgs) -> Result<bool, Failure> {
    let clean = report.summary.violations == 0;
    match (args.format, args.summary_only) {
        (Format::Csv, false) => print!("{}", report.to_csv()),
        (Format::Csv, true) => {}
        (Format::Json, false) => print!("{}", report.to_json()),
        (Format::Json, true) => {
            println!("{}", serde_json::to_string_pretty(&report.summary).expect("summary renders"))
        }
    }
    eprint!("{}", report.summary_text());
    let witness = report
        .witness
        .as_ref()
        .or(report.summary.max_ratio_found.as_ref().map(|w| &w.instance));
    if let Some(w) = &report.witness {
        eprintln!("witness: {}", w.to_json());
    }
    if let (Some(path), Some(w)) = (&args.emit_witness, witness) {
        write_file(path, &(w.to_json_pretty() + "\n"))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(clean)
}

fn cmd_exhaustive(args: &ExhaustiveArgs, workers: usize) -> Result<bool, Failure> {
    let spec = GridSpec {
        horizon: args.horizon,
        max_packets: args.max_packets,
        value_grid: parse_values(&args.values)?,
        allow_multi: !args.distinct,
    };
    spec.validate().map_err(|e| input_error(e.to_string()))?;
    let count = spec.instance_count();
    eprintln!("estimated instances: {count}");
    if count > CONFIRM_THRESHOLD && !args.yes {
        return Err(input_error(format!("{count} instances exceeds {CONFIRM_THRESHOLD}; pass --yes to proceed")));
    }
    let opts = CampaignOptions {
        workers,
        probes: Probes { inclusions: args.probes, oracle: args.probes },
        keep_rows: !args.report.summary_only,
        minimize: true,
    };
    emit_report(&run_exhaustive(&spec, &opts), &args.report)
}

fn cmd_fuzz(args: &FuzzArgs, workers: usize) -> Result<bool, Failure> {
    let seeds = parse_seeds(&args.seeds)?;
    if !(args.rate >= 0.0 && args.rate.is_finite()) {
        return Err(input_error("--rate must be a non-negative number"));
    }
    let cfg = RandomConfig {
        horizon: args.horizon,
        arrival_rate: args.rate,
        max_per_step: args.max_per_step,
        ..RandomConfig::default()
    };
    let probes = !args.no_probes;
    let opts = CampaignOptions {
        workers,
        probes: Probes { inclusions: probes, oracle: probes },
        keep_rows: !args.report.summary_only,
        minimize: true,
    };
    emit_report(&run_fuzz(seeds, &cfg, &opts), &args.report)
}

fn cmd_compare(args: &CompareArgs) -> Result<bool, Failure> {
    let mut all = Vec::new();
    for inst in load_instances(&args.instances)? {
        all.push(compare(&inst).map_err(|e| Failure { code: EXIT_VIOLATION, message: e.to_string() })?);
    }
    let clean = all.iter().all(|c| c.algorithms[0].within_r);
    match args.format {
        Format::Csv => {
            for c in &all {
                println!("# {}  OPT = {}", c.instance_hash, c.v_opt);
                print!("{}", c.to_csv());
            }
        }
        Format::Json => println!("{}", serde_json::to_string_pretty(&all).expect("json renders")),
    }
    Ok(clean)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Command::Run(a) => cmd_run(a, false),
        Command::Trace(a) => cmd_run(a, true),
        Command::Exhaustive(a) => cmd_exhaustive(a, cli.workers),
        Command::Fuzz(a) => cmd_fuzz(a, cli.workers),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VIOLATION),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
