use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use gridvis::bench::{run_one, sweep, Sweep};
use gridvis::check::{audit_trace, final_metrics};
use gridvis::cv::{builtin_ruleset, classify, load_ruleset, Milestone, MIN_ROBOTS};
use gridvis::gen::random_config;
use gridvis::geometry::Configuration;
use gridvis::render;
use gridvis::rules::RuleSet;
use gridvis::sim::{explore, replay, ExploreMode, ExploreOptions, Heuristic, SchedulerSpec, Status, Trace};

const EXIT_USAGE: u8 = 1;
const EXIT_VIOLATION: u8 = 2;
const EXIT_STEP_LIMIT: u8 = 3;

/// Simulator and checker for two-color complete visibility on the grid.
#[derive(Parser)]
#[command(name = "gridvis", version)]
struct Cli {
    /// Rule file; a sibling `.errata` file is applied when present.
    #[arg(long, global = true, env = "GRIDVIS_RULES")]
    rules: Option<PathBuf>,
    /// Output file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Jsonl,
    Csv,
    Svg,
    Ascii,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SchedulerName {
    Fsync,
    Ssync,
    AsyncRandom,
    AsyncAdversary,
    Exhaustive,
}

#[derive(Args, Clone)]
struct SchedArgs {
    #[arg(long, value_enum, default_value = "fsync")]
    scheduler: SchedulerName,
    #[arg(long)]
    seed: Option<u64>,
    /// Unfairness bound for the asynchronous schedulers.
    #[arg(long, default_value_t = 3)]
    k: u64,
    /// Activation probability for ssync.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Adversary strategy: delay-moves or sequential.
    #[arg(long, default_value = "delay-moves")]
    heuristic: String,
    #[arg(long, default_value_t = 1_000_000)]
    step_limit: u64,
}

impl SchedArgs {
    fn spec(&self) -> anyhow::Result<SchedulerSpec> {
        let need_seed = || self.seed.context("--seed is required for randomized schedulers");
        let spec = match self.scheduler {
            SchedulerName::Fsync => SchedulerSpec::Fsync,
            SchedulerName::Ssync => SchedulerSpec::Ssync { seed: need_seed()?, p: self.p },
            SchedulerName::AsyncRandom => SchedulerSpec::AsyncRandom { seed: need_seed()?, k: self.k },
            SchedulerName::AsyncAdversary => {
                SchedulerSpec::AsyncAdversary { heuristic: Heuristic::parse(&self.heuristic)?, k: self.k }
            }
            SchedulerName::Exhaustive => bail!(usage("the exhaustive scheduler is only available through `explore`")),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a random initial configuration (all robots color A).
    Gen {
        #[arg(long)]
        n: usize,
        /// Box width; defaults to 3n.
        #[arg(long)]
        width: Option<u32>,
        /// Box height; defaults to 3n.
        #[arg(long)]
        height: Option<u32>,
        #[arg(long)]
        seed: u64,
    },
    /// Simulate from a configuration file, or replay a trace.
    Run {
        /// Initial configuration (JSON).
        config: Option<PathBuf>,
        /// Re-execute the schedule recorded in a trace and compare hashes.
        #[arg(long, conflicts_with = "config")]
        replay: Option<PathBuf>,
        #[command(flatten)]
        sched: SchedArgs,
    },
    /// Search every interleaving reachable from a configuration.
    Explore {
        config: PathBuf,
        /// async (default) or ssync interleavings.
        #[arg(long, value_enum, default_value = "exhaustive")]
        scheduler: ExploreSched,
        #[arg(long, default_value_t = 300)]
        depth: usize,
        #[arg(long, default_value_t = 2_000_000)]
        max_states: usize,
    },
    /// Audit a trace file.
    Check { trace: PathBuf },
    /// Sweep seeded random runs and tabulate rounds, area and conflicts.
    Bench {
        /// A single n or an inclusive range such as 4..12.
        #[arg(long, default_value = "4..12")]
        n: String,
        /// Number of seeds per n.
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        /// Box side as a multiple of n.
        #[arg(long, default_value_t = 3)]
        box_factor: u32,
        #[command(flatten)]
        sched: SchedArgs,
    },
    /// Draw a configuration, or frame t of a trace.
    Render {
        /// Configuration (.json) or trace (.jsonl).
        input: PathBuf,
        /// Number of events applied before drawing; defaults to the last frame.
        #[arg(long)]
        frame: Option<usize>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ExploreSched {
    Exhaustive,
    Ssync,
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn load_rules(cli: &Cli) -> anyhow::Result<RuleSet> {
    Ok(match &cli.rules {
        Some(p) => load_ruleset(p).with_context(|| format!("loading rules from {}", p.display()))?,
        None => builtin_ruleset()?,
    })
}

fn emit(cli: &Cli, text: &str) -> anyhow::Result<()> {
    match &cli.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read_config(path: &Path) -> anyhow::Result<Configuration> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Configuration::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_trace(path: &Path) -> anyhow::Result<Trace> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Trace::from_jsonl(&text).with_context(|| format!("parsing {}", path.display()))
}

fn allow(cli: &Cli, allowed: &[Format], default: Format) -> anyhow::Result<Format> {
    let f = cli.format.unwrap_or(default);
    if !allowed.contains(&f) {
        bail!(usage(format!("--format {f:?} is not available here")));
    }
    Ok(f)
}

fn outcome_code(status: Status, last: Milestone) -> u8 {
    match status {
        Status::StepLimit => EXIT_STEP_LIMIT,
        Status::InvariantViolation => EXIT_VIOLATION,
        Status::Terminated if last == Milestone::CF => 0,
        Status::Terminated => EXIT_VIOLATION,
    }
}

fn dispatch(cli: &Cli) -> anyhow::Result<u8> {
    match &cli.cmd {
        Cmd::Gen { n, width, height, seed } => {
            allow(cli, &[Format::Json], Format::Json)?;
            if *n < MIN_ROBOTS {
                if cli.rules.is_none() {
                    bail!(usage(format!("the builtin algorithm needs at least {MIN_ROBOTS} robots")));
                }
                eprintln!("warning: {n} robots is below what the builtin algorithm supports");
            }
            let side = 3 * *n as u32;
            let c = random_config(*n, width.unwrap_or(side), height.unwrap_or(side), *seed)?;
            emit(cli, &(c.to_json() + "\n"))?;
            Ok(0)
        }
        Cmd::Run { config, replay: replay_path, sched } => {
            allow(cli, &[Format::Jsonl], Format::Jsonl)?;
            let rules = load_rules(cli)?;
            let trace = match (config, replay_path) {
                (_, Some(path)) => {
                    let recorded = read_trace(path)?;
                    let again = replay(&recorded, &rules)?;
                    let same = again.hash() == recorded.hash();
                    eprintln!("replay hash {} ({})", again.hash(), if same { "identical" } else { "DIFFERS" });
                    if !same {
                        return Ok(EXIT_VIOLATION);
                    }
                    again
                }
                (Some(path), None) => {
                    let c = read_config(path)?;
                    if cli.rules.is_none() && c.len() < MIN_ROBOTS {
                        bail!(usage(format!("the builtin algorithm needs at least {MIN_ROBOTS} robots")));
                    }
                    let spec = sched.spec()?;
                    let (mut row, trace) = run_one(&c, &rules, &spec, sched.step_limit, false)?;
                    row.seed = sched.seed.unwrap_or(0);
                    eprintln!("{}", serde_json::to_string(&row)?);
                    trace
                }
                (None, None) => bail!(usage("give a configuration file or --replay TRACE")),
            };
            emit(cli, &trace.to_jsonl())?;
            Ok(outcome_code(trace.outcome.status, classify(&trace.outcome.final_config)))
        }
        Cmd::Explore { config, scheduler, depth, max_states } => {
            allow(cli, &[Format::Json], Format::Json)?;
            let rules = load_rules(cli)?;
            let c = read_config(config)?;
            let mode = match scheduler {
                ExploreSched::Exhaustive => ExploreMode::Async,
                ExploreSched::Ssync => ExploreMode::Ssync,
            };
            let report = explore(&c, &rules, ExploreOptions { mode, depth: *depth, max_states: *max_states });
            emit(cli, &(serde_json::to_string_pretty(&report)? + "\n"))?;
            if !report.dead_rules.is_empty() {
                eprintln!("dead rules: {}", report.dead_rules.join(" "));
            }
            Ok(if report.is_clean() { 0 } else { EXIT_VIOLATION })
        }
        Cmd::Check { trace } => {
            allow(cli, &[Format::Json], Format::Json)?;
            let rules = load_rules(cli)?;
            let t = read_trace(trace)?;
            let findings = audit_trace(&t, &rules)?;
            let metrics = final_metrics(&t)?;
            let last = classify(&t.outcome.final_config);
            let errors = findings.iter().filter(|v| !v.is_warning()).count();
            let clean = errors == 0 && last == Milestone::CF;
            let report = json!({
                "clean": clean,
                "final": last,
                "status": t.outcome.status,
                "violations": findings,
                "metrics": {
                    "rounds": metrics.rounds,
                    "area": metrics.area,
                    "initialDiameter": metrics.initial_diameter,
                    "conflicts": metrics.conflicts,
                },
            });
            emit(cli, &(serde_json::to_string_pretty(&report)? + "\n"))?;
            Ok(if clean { 0 } else { EXIT_VIOLATION })
        }
        Cmd::Bench { n, seeds, box_factor, sched } => {
            let fmt = allow(cli, &[Format::Csv, Format::Json], Format::Csv)?;
            let rules = load_rules(cli)?;
            let ns = parse_range(n)?;
            if ns[0] < MIN_ROBOTS && cli.rules.is_none() {
                bail!(usage(format!("the builtin algorithm needs at least {MIN_ROBOTS} robots")));
            }
            let first = sched.seed.unwrap_or(0);
            let spec = SchedArgs { seed: Some(first), ..sched.clone() }.spec()?;
            let s = Sweep {
                ns,
                seeds: (first..first + seeds).collect(),
                schedulers: vec![spec],
                width_factor: *box_factor,
                height_factor: *box_factor,
                step_limit: sched.step_limit,
                audit: false,
            };
            let rows = sweep(&s, &rules)?;
            let text = match fmt {
                Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
                _ => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record(["n", "D", "rounds", "area", "conflicts", "seed", "scheduler", "status", "final"])?;
                    for r in &rows {
                        w.write_record([
                            r.n.to_string(),
                            r.diameter.to_string(),
                            r.rounds.to_string(),
                            r.area.to_string(),
                            r.conflicts.to_string(),
                            r.seed.to_string(),
                            r.scheduler.clone(),
                            serde_json::to_value(r.status)?.as_str().unwrap_or_default().to_string(),
                            r.milestone.to_string(),
                        ])?;
                    }
                    String::from_utf8(w.into_inner()?)?
                }
            };
            emit(cli, &text)?;
            let worst = rows
                .iter()
                .map(|r| outcome_code(r.status, r.milestone))
                .max_by_key(|&c| match c {
                    EXIT_VIOLATION => 2,
                    EXIT_STEP_LIMIT => 1,
                    _ => 0,
                })
                .unwrap_or(0);
            Ok(worst)
        }
        Cmd::Render { input, frame } => {
            let fmt = allow(cli, &[Format::Ascii, Format::Svg], Format::Ascii)?;
            let is_trace = input.extension().is_some_and(|e| e == "jsonl");
            let (config, title) = if is_trace {
                let t = read_trace(input)?;
                let at = frame.unwrap_or(t.events.len());
                if at > t.events.len() {
                    bail!(usage(format!("frame {at} is past the last event ({})", t.events.len())));
                }
                (t.config_at(at)?, format!("{} after {at} events", input.display()))
            } else {
                if frame.is_some() {
                    bail!(usage("--frame needs a trace file"));
                }
                (read_config(input)?, input.display().to_string())
            };
            let text = match fmt {
                Format::Svg => render::svg(&config, &title),
                _ => render::ascii(&config),
            };
            emit(cli, &text)?;
            Ok(0)
        }
    }
}

fn parse_range(s: &str) -> anyhow::Result<Vec<usize>> {
    let bad = || usage(format!("expected N or LO..HI, got {s:?}"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let v = s.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo == 0 || lo > hi {
        bail!(bad());
    }
    Ok((lo..=hi).collect())
}
