//! Atomic Look/Compute/Move execution.
//!
//! A robot's cycle is split into three events that a scheduler interleaves
//! freely. Look freezes a snapshot; Compute evaluates the rules on that
//! snapshot, applies the recolor at once and vetoes a move whose
//! destination was occupied in the snapshot; Move applies the stored step
//! if the destination is free at that instant and aborts it otherwise.

pub mod explore;
pub mod rounds;
pub mod scheduler;
pub mod trace;

use serde::{Deserialize, Serialize};

use crate::cv::{derive_context, ground_truth_frames, smallest_prime_geq};
use crate::error::{Error, Result};
use crate::geometry::{visible_set, Color, Configuration, LocalView, Point, RobotId, RobotRecord};
use crate::rules::{select_action, Action, EvalContext, Move, RuleSet};

pub use explore::{explore, ExploreMode, ExploreOptions, ExplorationReport};
pub use rounds::round_count;
pub use scheduler::{Heuristic, SchedulerSpec};
pub use trace::{replay, run, trace_hash, EventRecord, Outcome, Status, Trace, TraceInit};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CycleState {
    Idle,
    /// Snapshot taken; `frame_ok` records whether a frame recognized in it
    /// agreed with the true reference robots at that instant.
    Looked { view: LocalView, frame_ok: bool },
    /// Recolor already applied; the move still to perform, if any.
    Computed(Option<Move>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Look,
    Compute,
    Move,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    pub robot: RobotId,
    pub kind: EventKind,
}

impl Event {
    pub fn new(robot: usize, kind: EventKind) -> Self {
        Event { robot: RobotId(robot), kind }
    }
}

/// Whether performing `action` from a snapshot would change anything: a
/// recolor to a different color, or a move into a cell that looked free.
pub fn is_effective(action: &Action, view: &LocalView) -> bool {
    action.recolor.is_some_and(|c| c != view.my_color)
        || action.mv.is_some_and(|m| !view.occupied(m.delta()))
}

/// What one event did, beyond its trace record.
#[derive(Clone, Debug)]
pub struct Stepped {
    pub record: EventRecord,
    /// Set on Compute.
    pub ctx: Option<EvalContext>,
    /// Set on Compute when a rule needing the frame or `m` fired with a
    /// frame or `m` that disagrees with ground truth.
    pub frame_error: Option<String>,
    /// Compute only: the rule had an effect.
    pub effective: bool,
    /// The configuration changed.
    pub changed: bool,
}

/// Configuration plus every robot's position in its cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct World {
    pub config: Configuration,
    pub cycles: Vec<CycleState>,
}

impl World {
    pub fn new(config: Configuration) -> Self {
        let cycles = vec![CycleState::Idle; config.len()];
        World { config, cycles }
    }

    /// The event a robot may fire next.
    pub fn next_kind(&self, robot: RobotId) -> EventKind {
        match self.cycles[robot.0] {
            CycleState::Idle => EventKind::Look,
            CycleState::Looked { .. } => EventKind::Compute,
            CycleState::Computed(_) => EventKind::Move,
        }
    }

    pub fn step(&mut self, ev: Event, rules: &RuleSet) -> Result<Stepped> {
        let r = ev.robot;
        if r.0 >= self.config.len() {
            return Err(Error::Schedule(format!("unknown robot {r}")));
        }
        let expected = self.next_kind(r);
        if ev.kind != expected {
            return Err(Error::Schedule(format!("{r} fired {:?} but must fire {:?}", ev.kind, expected)));
        }
        let mut record = EventRecord::bare(r.0, ev.kind);
        let mut out = Stepped { record: record.clone(), ctx: None, frame_error: None, effective: false, changed: false };
        match ev.kind {
            EventKind::Look => {
                let view = visible_set(&self.config, r)?;
                let frame_ok = frame_matches_truth(&self.config, self.config.robot(r).pos, &view);
                self.cycles[r.0] = CycleState::Looked { view, frame_ok };
            }
            EventKind::Compute => {
                let CycleState::Looked { view, frame_ok } = std::mem::replace(&mut self.cycles[r.0], CycleState::Idle)
                else {
                    unreachable!("checked above")
                };
                let ctx = derive_context(&view);
                out.ctx = Some(ctx);
                if let Some(sel) = select_action(&view, rules, &ctx) {
                    let rule = &rules.rules[sel.index];
                    out.frame_error = frame_error(rule, &ctx, frame_ok, self.config.len());
                    record.rule = Some(sel.name.to_string());
                    record.recolor = sel.action.recolor;
                    record.mv = sel.action.mv;
                    out.effective = is_effective(&sel.action, &view);
                    if let Some(c) = sel.action.recolor {
                        let me = *self.config.robot(r);
                        if c != me.color {
                            self.config.set(r, RobotRecord { color: c, ..me });
                            out.changed = true;
                        }
                    }
                    let vetoed = sel.action.mv.is_some_and(|m| view.occupied(m.delta()));
                    record.vetoed = vetoed;
                    let pending = if vetoed { None } else { sel.action.mv };
                    self.cycles[r.0] = CycleState::Computed(pending);
                }
            }
            EventKind::Move => {
                let CycleState::Computed(pending) = std::mem::replace(&mut self.cycles[r.0], CycleState::Idle) else {
                    unreachable!("checked above")
                };
                let me = *self.config.robot(r);
                record.from = Some(me.pos);
                if let Some(m) = pending {
                    let to = me.pos + m.delta();
                    record.mv = Some(m);
                    record.to = Some(to);
                    if self.config.is_occupied(to) {
                        record.aborted = true;
                    } else {
                        self.config.set(r, RobotRecord { pos: to, ..me });
                        out.changed = true;
                    }
                }
            }
        }
        out.record = record;
        Ok(out)
    }

    /// Every robot idle and none would act on a fresh look.
    pub fn is_terminal(&self, rules: &RuleSet) -> bool {
        self.cycles.iter().all(|c| *c == CycleState::Idle) && quiescent(&self.config, rules)
    }
}

/// No robot has an effective action on a fresh look.
pub fn quiescent(config: &Configuration, rules: &RuleSet) -> bool {
    config.ids().all(|id| {
        let view = visible_set(config, id).expect("id from the same configuration");
        let ctx = derive_context(&view);
        select_action(&view, rules, &ctx).is_none_or(|s| !is_effective(&s.action, &view))
    })
}

/// Checks a frame recognized in `view` (taken from `at`) against the
/// reference robots actually present. No frame is trivially fine.
pub fn frame_matches_truth(config: &Configuration, at: Point, view: &LocalView) -> bool {
    match crate::cv::find_frame(view) {
        None => true,
        Some(f) => ground_truth_frames(config).iter().any(|t| t.origin == at + f.origin && t.m == f.m),
    }
}

fn frame_error(rule: &crate::rules::Rule, ctx: &EvalContext, frame_ok: bool, n: usize) -> Option<String> {
    if rule.needs_frame() && (ctx.frame.is_none() || !frame_ok) {
        return Some(format!("{} fired on a frame that does not match the reference robots", rule.name));
    }
    if rule.uses_m() {
        let truth = smallest_prime_geq(n as i64).ok();
        if ctx.m_hat != truth {
            return Some(format!("{} fired with m={:?}, true m={:?}", rule.name, ctx.m_hat, truth));
        }
    }
    None
}

/// Color of every robot, for convenience in tests and reports.
pub fn colors(config: &Configuration) -> Vec<Color> {
    config.robots().iter().map(|r| r.color).collect()
}
