//! Global correctness predicates and trace auditing.

use std::collections::HashMap;

use serde::Serialize;

use crate::cv::{classify, derive_context, smallest_prime_geq, Milestone};
use crate::error::{Error, Result};
use crate::geometry::{bounding_area, collinear, diameter, mutually_visible, Configuration, LocalView, Point, RobotId};
use crate::rules::{select_action, Move, RuleSet};
use crate::sim::trace::apply_effect;
use crate::sim::{frame_matches_truth, EventKind, Status, Trace};

/// No three robots collinear, by direct enumeration of triples.
pub fn complete_visibility(config: &Configuration) -> bool {
    let pts: Vec<Point> = config.positions().collect();
    let n = pts.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if collinear(pts[i], pts[j], pts[k]) {
                    return false;
                }
            }
        }
    }
    true
}

/// Every robot sees every other one.
pub fn all_mutually_visible(config: &Configuration) -> bool {
    let ids: Vec<RobotId> = config.ids().collect();
    ids.iter().enumerate().all(|(i, &u)| ids[i + 1..].iter().all(|&v| mutually_visible(config, u, v)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum ViolationKind {
    Occupancy,
    NonUnitMove,
    SimultaneousTarget,
    IllegalRecolor,
    /// The recorded rule, move or veto differs from re-evaluation.
    RuleMismatch,
    FrameMismatch,
    /// A move aborted at Move time. A warning: the model allows it.
    ConflictAbort,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ViolationRecord {
    pub step: usize,
    pub kind: ViolationKind,
    pub detail: String,
}

impl ViolationRecord {
    pub fn is_warning(&self) -> bool {
        self.kind == ViolationKind::ConflictAbort
    }
}

enum Cycle {
    Idle,
    Looked(LocalView, bool),
    Computed(Option<Move>),
}

/// Replays a trace from its recorded effects and checks each event against
/// the model: legal order, rules re-evaluated on the same snapshot, unit
/// moves into free cells, one mover per cell per tick, and reference frames
/// that match the robots actually present. A corrupt trace is an error.
pub fn audit_trace(trace: &Trace, rules: &RuleSet) -> Result<Vec<ViolationRecord>> {
    let mut config = trace.init.config.clone();
    let n = config.len();
    let true_m = smallest_prime_geq(n as i64).ok();
    let mut cycles: Vec<Cycle> = (0..n).map(|_| Cycle::Idle).collect();
    let mut out = Vec::new();
    let mut tick_targets: HashMap<Point, usize> = HashMap::new();
    let mut current_tick = None;
    let mut flag = |step: usize, kind: ViolationKind, detail: String| out.push(ViolationRecord { step, kind, detail });
    for (i, e) in trace.events.iter().enumerate() {
        let r = e.robot;
        let id = RobotId(r);
        if r >= n {
            return Err(Error::Trace(format!("event {i}: unknown robot {r}")));
        }
        let state = std::mem::replace(&mut cycles[r], Cycle::Idle);
        match (e.kind, state) {
            (EventKind::Look, Cycle::Idle) => {
                let view = crate::geometry::visible_set(&config, id)?;
                let ok = frame_matches_truth(&config, config.robot(id).pos, &view);
                cycles[r] = Cycle::Looked(view, ok);
            }
            (EventKind::Compute, Cycle::Looked(view, frame_ok)) => {
                let ctx = derive_context(&view);
                let sel = select_action(&view, rules, &ctx);
                let want_rule = sel.map(|s| s.name.to_string());
                let want_recolor = sel.and_then(|s| s.action.recolor);
                let want_mv = sel.and_then(|s| s.action.mv);
                let want_veto = want_mv.is_some_and(|m| view.occupied(m.delta()));
                if e.recolor != want_recolor {
                    flag(i, ViolationKind::IllegalRecolor, format!("recorded {:?}, rules give {:?}", e.recolor, want_recolor));
                }
                if e.rule != want_rule || e.mv != want_mv || e.vetoed != want_veto {
                    flag(
                        i,
                        ViolationKind::RuleMismatch,
                        format!("recorded {:?} {:?}, rules give {:?} {:?}", e.rule, e.mv, want_rule, want_mv),
                    );
                }
                if let Some(s) = sel {
                    let rule = &rules.rules[s.index];
                    if rule.needs_frame() && (ctx.frame.is_none() || !frame_ok) {
                        flag(i, ViolationKind::FrameMismatch, format!("{} used a frame that is not the true one", rule.name));
                    }
                    if rule.uses_m() && ctx.m_hat != true_m {
                        flag(i, ViolationKind::FrameMismatch, format!("{} used m={:?}, true m={:?}", rule.name, ctx.m_hat, true_m));
                    }
                }
                apply_effect(&mut config, e).map_err(|m| Error::Trace(format!("event {i}: {m}")))?;
                if e.rule.is_some() {
                    cycles[r] = Cycle::Computed(if e.vetoed { None } else { e.mv });
                }
            }
            (EventKind::Move, Cycle::Computed(pending)) => {
                if e.tick.is_some() && e.tick != current_tick {
                    tick_targets.clear();
                    current_tick = e.tick;
                }
                let here = config.robot(id).pos;
                if e.from.is_some_and(|f| f != here) {
                    return Err(Error::Trace(format!("event {i}: robot {r} is at {here}, record says {:?}", e.from)));
                }
                let Some(to) = e.to else {
                    if pending.is_some() {
                        flag(i, ViolationKind::RuleMismatch, format!("robot {r} dropped its pending move"));
                    }
                    continue;
                };
                if e.tick.is_some() {
                    if let Some(other) = tick_targets.insert(to, r) {
                        flag(i, ViolationKind::SimultaneousTarget, format!("robots {other} and {r} both target {to}"));
                    }
                }
                if here.manhattan(to) != 1 {
                    flag(i, ViolationKind::NonUnitMove, format!("{here} -> {to}"));
                } else if pending.map(|m| here + m.delta()) != Some(to) {
                    flag(i, ViolationKind::RuleMismatch, format!("move to {to} was not the computed one"));
                }
                if e.aborted {
                    flag(i, ViolationKind::ConflictAbort, format!("robot {r} found {to} occupied"));
                    continue;
                }
                if config.is_occupied(to) {
                    flag(i, ViolationKind::Occupancy, format!("robot {r} moved onto occupied {to}"));
                    continue;
                }
                let me = *config.robot(id);
                config.set(id, crate::geometry::RobotRecord { pos: to, ..me });
            }
            (kind, _) => return Err(Error::Trace(format!("event {i}: robot {r} cannot fire {kind:?} now"))),
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Metrics {
    pub rounds: u64,
    pub area: i64,
    pub initial_diameter: i64,
    pub conflicts: u64,
}

pub fn final_metrics(trace: &Trace) -> Result<Metrics> {
    if trace.outcome.status != Status::Terminated {
        return Err(Error::usage(format!("trace ended with {:?}, not termination", trace.outcome.status)));
    }
    Ok(Metrics {
        rounds: crate::sim::round_count(&trace.events, trace.init.config.len()),
        area: bounding_area(&trace.outcome.final_config),
        initial_diameter: diameter(&trace.init.config),
        conflicts: trace.events.iter().filter(|e| e.aborted).count() as u64,
    })
}

/// Milestone tags seen along a trace, consecutive repeats merged. Synchronous
/// traces are sampled at tick boundaries, others after every change.
pub fn milestone_trajectory(trace: &Trace) -> Result<Vec<Milestone>> {
    let mut config = trace.init.config.clone();
    let mut out = vec![classify(&config)];
    let push = |m: Milestone, out: &mut Vec<Milestone>| {
        if out.last() != Some(&m) {
            out.push(m);
        }
    };
    let events = &trace.events;
    for (i, e) in events.iter().enumerate() {
        apply_effect(&mut config, e).map_err(|m| Error::Trace(format!("event {i}: {m}")))?;
        let sample = match e.tick {
            Some(t) => events.get(i + 1).is_none_or(|nx| nx.tick != Some(t)),
            None => e.recolor.is_some() || e.applied_move().is_some(),
        };
        if sample {
            push(classify(&config), &mut out);
        }
    }
    Ok(out)
}

/// Tagged milestones never go back to an earlier phase.
pub fn is_weakly_ordered(trajectory: &[Milestone]) -> bool {
    let ranks: Vec<usize> = trajectory.iter().filter_map(|m| m.rank()).collect();
    ranks.windows(2).all(|w| w[0] <= w[1])
}
