//! Command-line driver: `synth`, `bench` and `verify`.
//!
//! Exit codes: 0 success, 1 usage or input errors, 2 synthesis failure or a
//! result that does not verify.

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ftrevise::casestudies::{generate, CaseParams, Family};
use ftrevise::dsl::{check, emit_result, EmitMode};
use ftrevise::synthesis::{synthesize_with_info, Mode, SynthError, SynthesisOptions};
use ftrevise::verify::{verify_dump, verify_result, ResultDump};
use ftrevise::{SynthesisStats, SystemSpec};

pub const STATS_SCHEMA: &str = "ftrevise-stats/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "ftrevise", version, about = "Add fault tolerance to distributed programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Synthesize a fault-tolerant revision.
    Synth(SynthArgs),
    /// Time synthesis over sizes and worker counts.
    Bench(BenchArgs),
    /// Check a result dump against its system.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// System file.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Generated case study: byz:N, byzfs:N or token:N.
    #[arg(long, value_name = "FAMILY:N")]
    pub case: Option<String>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value = "seq", value_parser = parse_mode)]
    pub mode: Mode,
    /// Write the result dump (JSON) here.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Write run statistics (JSON) here.
    #[arg(long, value_name = "FILE")]
    pub stats: Option<PathBuf>,
    /// List every transition of the revised program.
    #[arg(long)]
    pub dump: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// byz, byzfs or token.
    #[arg(long)]
    pub case: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub workers: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
    #[arg(long, default_value = "par-group", value_parser = parse_mode)]
    pub mode: Mode,
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: Source,
    /// Result dump written by `synth --out`.
    #[arg(long, value_name = "DUMP")]
    pub result: PathBuf,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

/// A failure with its exit code; the message goes to stderr.
#[derive(Debug)]
pub struct Exit {
    pub code: i32,
    pub message: String,
}

impl Exit {
    fn usage(m: impl Display) -> Exit {
        Exit { code: EXIT_USAGE, message: m.to_string() }
    }
    fn failed(m: impl Display) -> Exit {
        Exit { code: EXIT_FAILED, message: m.to_string() }
    }
}

impl From<SynthError> for Exit {
    fn from(e: SynthError) -> Exit {
        match e {
            SynthError::Failure(_) | SynthError::NoConvergence(_) => Exit::failed(e),
            _ => Exit::usage(e),
        }
    }
}

pub fn load_source(src: &Source) -> Result<SystemSpec, Exit> {
    if let Some(path) = &src.input {
        let text = fs::read_to_string(path).map_err(|e| Exit::usage(format!("{}: {e}", path.display())))?;
        let (spec, diags) = check(&text).map_err(|e| Exit::usage(format!("{}:{e}", path.display())))?;
        if !diags.is_empty() {
            let lines: Vec<String> = diags.iter().map(|d| format!("{}:{d}", path.display())).collect();
            return Err(Exit::usage(lines.join("\n")));
        }
        Ok(spec)
    } else {
        let case = src.case.as_deref().unwrap_or_default();
        let params: CaseParams = case.parse().map_err(Exit::usage)?;
        generate(params).map_err(Exit::usage)
    }
}

#[derive(Serialize)]
pub struct StatsFile<'a> {
    pub schema: &'static str,
    pub system: &'a str,
    pub mode: &'static str,
    pub workers: usize,
    pub invariant_states: String,
    pub fault_span_states: String,
    pub program_transitions: String,
    pub group_mismatches: u64,
    pub stats: &'a SynthesisStats,
}

pub fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Sequential => "seq",
        Mode::ParallelGroup => "par-group",
        Mode::ParallelPartition => "par-partition",
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Exit> {
    fs::write(path, text).map_err(|e| Exit::usage(format!("{}: {e}", path.display())))
}

pub fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> Result<(), Exit> {
    let spec = load_source(&args.source)?;
    let opts = SynthesisOptions {
        mode: args.mode,
        workers: args.workers,
        ..Default::default()
    };
    let (mut enc, result, info) = synthesize_with_info(&spec, &opts)?;
    let mode = if args.dump { EmitMode::FullDump } else { EmitMode::Summary };
    let text = emit_result(&result, &spec, &mut enc, mode).map_err(Exit::usage)?;
    let _ = out.write_all(text.as_bytes());
    if let Some(path) = &args.stats {
        let file = StatsFile {
            schema: STATS_SCHEMA,
            system: &spec.name,
            mode: mode_name(args.mode),
            workers: args.workers,
            invariant_states: enc.count_states(result.s_prime).map_err(Exit::usage)?.to_string(),
            fault_span_states: enc.count_states(result.fault_span).map_err(Exit::usage)?.to_string(),
            program_transitions: enc.count_transitions(result.p_prime).map_err(Exit::usage)?.to_string(),
            group_mismatches: info.group_mismatches,
            stats: &result.stats,
        };
        let json = serde_json::to_string_pretty(&file).map_err(Exit::usage)?;
        write_file(path, &json)?;
    }
    if let Some(path) = &args.out {
        let dump = ResultDump::new(&spec, &enc, &result).map_err(Exit::usage)?;
        let json = serde_json::to_string(&dump).map_err(Exit::usage)?;
        write_file(path, &json)?;
    }
    Ok(())
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<(), Exit> {
    let spec = load_source(&args.source)?;
    let text = fs::read_to_string(&args.result)
        .map_err(|e| Exit::usage(format!("{}: {e}", args.result.display())))?;
    let dump: ResultDump = serde_json::from_str(&text)
        .map_err(|e| Exit::usage(format!("{}: {e}", args.result.display())))?;
    let report = verify_dump(&spec, &dump).map_err(Exit::usage)?;
    let _ = writeln!(out, "{report}");
    if report.passed() {
        Ok(())
    } else {
        let witness = report
            .first_failure()
            .map(|v| v.to_string())
            .unwrap_or_default();
        Err(Exit::failed(witness))
    }
}

/// One CSV row of `bench`.
#[derive(Serialize, Debug, Clone)]
pub struct BenchRow {
    pub family: String,
    pub n: usize,
    pub workers: usize,
    pub group_time: f64,
    pub deadlock_resolution_time: f64,
    pub total_time: f64,
    pub speedup_vs_1worker: f64,
}

/// Runs one configuration `repeat` times, verifying each result, and keeps
/// the fastest run.
fn bench_one(spec: &SystemSpec, mode: Mode, workers: usize, repeat: usize) -> Result<SynthesisStats, Exit> {
    let opts = SynthesisOptions {
        mode,
        workers,
        ..Default::default()
    };
    let mut best: Option<SynthesisStats> = None;
    for _ in 0..repeat.max(1) {
        let (enc, result, _) = synthesize_with_info(spec, &opts)?;
        let report = verify_result(spec, &enc, &result).map_err(Exit::usage)?;
        if !report.passed() {
            return Err(Exit::failed(format!("{}: {report}", spec.name)));
        }
        if best.as_ref().is_none_or(|b| result.stats.total_time < b.total_time) {
            best = Some(result.stats);
        }
    }
    Ok(best.expect("at least one repeat"))
}

pub fn run_bench(args: &BenchArgs) -> Result<Vec<BenchRow>, Exit> {
    let family: Family = args.case.parse().map_err(Exit::usage)?;
    let mut rows = Vec::new();
    for &n in &args.sizes {
        let spec = generate(CaseParams { family, n }).map_err(Exit::usage)?;
        let mode_for = |w: usize| if w == 1 && args.mode == Mode::ParallelPartition { Mode::Sequential } else { args.mode };
        let base = if args.workers.contains(&1) {
            None
        } else {
            Some(bench_one(&spec, mode_for(1), 1, args.repeat)?)
        };
        let mut per_worker = Vec::new();
        for &w in &args.workers {
            per_worker.push((w, bench_one(&spec, mode_for(w), w, args.repeat)?));
        }
        let base_stats = base
            .or_else(|| per_worker.iter().find(|(w, _)| *w == 1).map(|(_, s)| s.clone()))
            .expect("baseline run");
        let base_time = baseline_time(args.mode, &base_stats);
        for (w, s) in per_worker {
            let t = baseline_time(args.mode, &s);
            rows.push(BenchRow {
                family: family.tag().to_string(),
                n,
                workers: w,
                group_time: s.group_wall_time,
                deadlock_resolution_time: s.deadlock_resolution_time,
                total_time: s.total_time,
                speedup_vs_1worker: if w == 1 || t <= 0.0 { 1.0 } else { base_time / t },
            });
        }
    }
    Ok(rows)
}

/// The time the parallel mode is meant to shrink.
fn baseline_time(mode: Mode, s: &SynthesisStats) -> f64 {
    match mode {
        Mode::ParallelPartition => s.deadlock_resolution_time,
        _ => s.group_wall_time,
    }
}

/// Rows per size, one speedup column per worker count.
pub fn format_table(rows: &[BenchRow]) -> String {
    let mut workers: Vec<usize> = rows.iter().map(|r| r.workers).collect();
    workers.sort_unstable();
    workers.dedup();
    let mut out = String::from("family    n  time(1)");
    for w in &workers {
        out.push_str(&format!("  x{w:<5}"));
    }
    out.push('\n');
    let mut sizes: Vec<(String, usize)> = rows.iter().map(|r| (r.family.clone(), r.n)).collect();
    sizes.dedup();
    for (fam, n) in sizes {
        let mine: Vec<&BenchRow> = rows.iter().filter(|r| r.family == fam && r.n == n).collect();
        let t1 = mine
            .iter()
            .find(|r| r.workers == 1)
            .map(|r| format!("{:.3}s", r.group_time))
            .unwrap_or_else(|| "-".into());
        out.push_str(&format!("{fam:<7}{n:>4}  {t1:>7}"));
        for w in &workers {
            match mine.iter().find(|r| r.workers == *w) {
                Some(r) => out.push_str(&format!("  {:<6.2}", r.speedup_vs_1worker)),
                None => out.push_str("  -     "),
            }
        }
        out.push('\n');
    }
    out
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<(), Exit> {
    let rows = run_bench(args)?;
    if let Some(path) = &args.csv {
        let mut w = csv::Writer::from_path(path).map_err(|e| Exit::usage(format!("{}: {e}", path.display())))?;
        for r in &rows {
            w.serialize(r).map_err(Exit::usage)?;
        }
        w.flush().map_err(Exit::usage)?;
    }
    let _ = out.write_all(format_table(&rows).as_bytes());
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
            } else {
                let _ = write!(out, "{}", e.render());
            }
            return code;
        }
    };
    let res = match &cli.command {
        Command::Synth(a) => cmd_synth(a, out),
        Command::Bench(a) => cmd_bench(a, out),
        Command::Verify(a) => cmd_verify(a, out),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}
