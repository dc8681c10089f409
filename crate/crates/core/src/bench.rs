//! Parameter sweeps: many independent seeded runs, fanned out over a
//! thread pool.

use rayon::prelude::*;
use serde::Serialize;

use crate::check::{audit_trace, complete_visibility};
use crate::cv::{classify, Milestone};
use crate::error::Result;
use crate::gen::random_config;
use crate::geometry::{Color, Configuration};
use crate::rules::RuleSet;
use crate::sim::{run, SchedulerSpec, Status};

#[derive(Clone, Debug)]
pub struct Sweep {
    pub ns: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Seeded kinds get each run's seed substituted in.
    pub schedulers: Vec<SchedulerSpec>,
    /// Box width as a multiple of n.
    pub width_factor: u32,
    /// Box height as a multiple of n.
    pub height_factor: u32,
    pub step_limit: u64,
    /// Also audit each trace (slower).
    pub audit: bool,
}

/// One run's summary.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub seed: u64,
    pub scheduler: String,
    pub diameter: i64,
    pub rounds: u64,
    pub area: i64,
    pub conflicts: u64,
    pub events: u64,
    pub status: Status,
    pub milestone: Milestone,
    pub complete_visibility: bool,
    pub all_b: bool,
    /// Non-warning audit findings; zero when not audited.
    pub audit_violations: usize,
    pub trace_hash: String,
}

pub fn run_one(
    config: &Configuration,
    rules: &RuleSet,
    spec: &SchedulerSpec,
    step_limit: u64,
    audit: bool,
) -> Result<(BenchRow, crate::sim::Trace)> {
    let t = run(config, rules, spec, step_limit)?;
    let fin = &t.outcome.final_config;
    let audit_violations =
        if audit { audit_trace(&t, rules)?.iter().filter(|v| !v.is_warning()).count() } else { 0 };
    let row = BenchRow {
        n: config.len(),
        seed: 0,
        scheduler: spec.label(),
        diameter: t.outcome.diameter0,
        rounds: t.outcome.rounds,
        area: t.outcome.area,
        conflicts: t.outcome.conflicts,
        events: t.outcome.events,
        status: t.outcome.status,
        milestone: classify(fin),
        complete_visibility: complete_visibility(fin),
        all_b: fin.count_color(Color::A) == 0,
        audit_violations,
        trace_hash: t.hash(),
    };
    Ok((row, t))
}

/// Runs every `(n, seed, scheduler)` combination. Rows come back in a
/// fixed order regardless of thread timing.
pub fn sweep(s: &Sweep, rules: &RuleSet) -> Result<Vec<BenchRow>> {
    let mut jobs = Vec::new();
    for &n in &s.ns {
        for &seed in &s.seeds {
            for k in &s.schedulers {
                jobs.push((n, seed, k.with_seed(seed)));
            }
        }
    }
    jobs.par_iter()
        .map(|(n, seed, spec)| {
            let c = random_config(*n, s.width_factor * *n as u32, s.height_factor * *n as u32, *seed)?;
            let (mut row, _) = run_one(&c, rules, spec, s.step_limit, s.audit)?;
            row.seed = *seed;
            Ok(row)
        })
        .collect()
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
