//! Running a schedule to completion and the JSON Lines trace it leaves.
//!
//! ```text
//! {"type":"init","config":{...},"ruleset_hash":"…","scheduler":{...},"step_limit":N}
//! {"type":"event","robot":0,"kind":"look","aborted":false}
//! {"type":"event","robot":0,"kind":"compute","rule":"R2","move":"x+","aborted":false}
//! {"type":"event","robot":0,"kind":"move","move":"x+","from":{...},"to":{...},"aborted":false}
//! {"type":"outcome","status":"terminated","final":{...},"rounds":3,...}
//! ```

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::rounds::round_count;
use super::scheduler::{Scheduler, Scripted};
use super::{CycleState, Event, EventKind, SchedulerSpec, World};
use crate::error::{Error, Result};
use crate::geometry::{bounding_area, diameter, Color, Configuration, Point, RobotId, RobotRecord};
use crate::rules::{format_ruleset, Move, RuleSet};

fn is_false(b: &bool) -> bool {
    !*b
}

/// One event and what it did.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub robot: usize,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tick: Option<u64>,
    /// Compute: the rule that fired.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    /// Compute: the color the rule set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recolor: Option<Color>,
    /// Compute: the intended move. Move: the move performed or aborted.
    #[serde(rename = "move", default, skip_serializing_if = "Option::is_none")]
    pub mv: Option<Move>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<Point>,
    /// Compute: the move was dropped because its cell looked occupied.
    #[serde(default, skip_serializing_if = "is_false")]
    pub vetoed: bool,
    /// Move: the cell was occupied at that instant.
    pub aborted: bool,
}

impl EventRecord {
    pub fn bare(robot: usize, kind: EventKind) -> Self {
        EventRecord {
            robot,
            kind,
            tick: None,
            rule: None,
            recolor: None,
            mv: None,
            from: None,
            to: None,
            vetoed: false,
            aborted: false,
        }
    }

    /// Whether the robot's cycle ends with this event.
    pub fn completes_cycle(&self) -> bool {
        match self.kind {
            EventKind::Look => false,
            EventKind::Compute => self.rule.is_none(),
            EventKind::Move => true,
        }
    }

    /// The position change this event made, if any.
    pub fn applied_move(&self) -> Option<(Point, Point)> {
        match (self.kind, self.from, self.to) {
            (EventKind::Move, Some(from), Some(to)) if !self.aborted => Some((from, to)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceInit {
    pub config: Configuration,
    pub ruleset_hash: String,
    pub scheduler: SchedulerSpec,
    pub step_limit: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Terminated,
    StepLimit,
    InvariantViolation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(rename = "final")]
    pub final_config: Configuration,
    pub rounds: u64,
    pub area: i64,
    pub diameter0: i64,
    pub conflicts: u64,
    pub events: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub init: TraceInit,
    pub events: Vec<EventRecord>,
    pub outcome: Outcome,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Line {
    Init(TraceInit),
    Event(EventRecord),
    Outcome(Outcome),
}

impl Trace {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |line: &Line| {
            out.push_str(&serde_json::to_string(line).expect("trace lines serialize"));
            out.push('\n');
        };
        push(&Line::Init(self.init.clone()));
        for e in &self.events {
            push(&Line::Event(e.clone()));
        }
        push(&Line::Outcome(self.outcome.clone()));
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Trace> {
        let mut init = None;
        let mut events = Vec::new();
        let mut outcome = None;
        for (i, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let line: Line =
                serde_json::from_str(raw).map_err(|e| Error::Trace(format!("line {}: {e}", i + 1)))?;
            match line {
                Line::Init(v) if init.is_none() && events.is_empty() => init = Some(v),
                Line::Event(e) if init.is_some() && outcome.is_none() => events.push(e),
                Line::Outcome(o) if init.is_some() && outcome.is_none() => outcome = Some(o),
                _ => return Err(Error::Trace(format!("line {}: out of place", i + 1))),
            }
        }
        let init = init.ok_or_else(|| Error::Trace("missing init line".into()))?;
        let outcome = outcome.ok_or_else(|| Error::Trace("missing outcome line".into()))?;
        for (i, e) in events.iter().enumerate() {
            if e.robot >= init.config.len() {
                return Err(Error::Trace(format!("event {i}: unknown robot {}", e.robot)));
            }
        }
        Ok(Trace { init, events, outcome })
    }

    /// SHA-256 of the JSON Lines text.
    pub fn hash(&self) -> String {
        trace_hash(&self.to_jsonl())
    }

    /// Configuration after the first `t` events, rebuilt from the recorded
    /// effects alone.
    pub fn config_at(&self, t: usize) -> Result<Configuration> {
        let mut c = self.init.config.clone();
        for (i, e) in self.events.iter().take(t).enumerate() {
            apply_effect(&mut c, e).map_err(|m| Error::Trace(format!("event {i}: {m}")))?;
        }
        Ok(c)
    }
}

pub fn trace_hash(jsonl: &str) -> String {
    hex::encode(Sha256::digest(jsonl.as_bytes()))
}

pub fn ruleset_hash(rules: &RuleSet) -> String {
    hex::encode(Sha256::digest(format_ruleset(rules).as_bytes()))
}

/// Applies a record's recorded recolor or move to `config`, without
/// re-evaluating any rule.
pub(crate) fn apply_effect(config: &mut Configuration, e: &EventRecord) -> std::result::Result<(), String> {
    let id = RobotId(e.robot);
    let me = *config.get(id).ok_or_else(|| format!("unknown robot {}", e.robot))?;
    match e.kind {
        EventKind::Compute => {
            if let Some(c) = e.recolor {
                config.set(id, RobotRecord { color: c, ..me });
            }
        }
        EventKind::Move => {
            if let Some((from, to)) = e.applied_move() {
                if from != me.pos {
                    return Err(format!("robot {} is at {}, record says {from}", e.robot, me.pos));
                }
                if config.is_occupied(to) {
                    return Err(format!("robot {} moves onto occupied {to}", e.robot));
                }
                config.set(id, RobotRecord { pos: to, ..me });
            }
        }
        EventKind::Look => {}
    }
    Ok(())
}

/// Runs `rules` from `config0` under `spec` until the configuration is
/// terminal, a monitor trips, or `step_limit` events have fired.
pub fn run(config0: &Configuration, rules: &RuleSet, spec: &SchedulerSpec, step_limit: u64) -> Result<Trace> {
    let sched = spec.build(config0.len())?;
    run_with(config0, rules, spec.clone(), step_limit, sched)
}

/// Re-executes a trace's event sequence and returns the trace it produces.
/// The result hashes identically to the input when the run is reproducible.
pub fn replay(trace: &Trace, rules: &RuleSet) -> Result<Trace> {
    if ruleset_hash(rules) != trace.init.ruleset_hash {
        return Err(Error::Trace("trace was recorded with a different rule set".into()));
    }
    let script = trace.events.iter().map(|e| (Event::new(e.robot, e.kind), e.tick)).collect();
    run_with(
        &trace.init.config,
        rules,
        trace.init.scheduler.clone(),
        trace.init.step_limit,
        Box::new(Scripted::new(script)),
    )
}

/// Incremental termination test. A robot is quiet once it completed a
/// Look+Compute with no effect after the last configuration change; the run
/// is terminal when every robot is quiet and any cycle in progress started
/// after that change, since such a cycle saw the same view.
struct Quiet {
    last_change: i64,
    cycle_look: Vec<i64>,
    quiet_look: Vec<Option<i64>>,
}

impl Quiet {
    fn new(n: usize) -> Self {
        Quiet { last_change: -1, cycle_look: vec![-1; n], quiet_look: vec![None; n] }
    }

    fn holds(&self, world: &World) -> bool {
        (0..world.cycles.len()).all(|r| {
            self.quiet_look[r].is_some_and(|q| q > self.last_change)
                && (world.cycles[r] == CycleState::Idle || self.cycle_look[r] > self.last_change)
        })
    }
}

pub(crate) fn run_with(
    config0: &Configuration,
    rules: &RuleSet,
    spec: SchedulerSpec,
    step_limit: u64,
    mut sched: Box<dyn Scheduler>,
) -> Result<Trace> {
    let n = config0.len();
    let mut world = World::new(config0.clone());
    let mut events: Vec<EventRecord> = Vec::new();
    let mut quiet = Quiet::new(n);
    let mut tick_targets: HashMap<Point, usize> = HashMap::new();
    let mut current_tick = None;
    let mut violation: Option<String> = None;
    let status = loop {
        if quiet.holds(&world) {
            debug_assert!(super::quiescent(&world.config, rules));
            break Status::Terminated;
        }
        if events.len() as u64 >= step_limit {
            break Status::StepLimit;
        }
        let Some((ev, tick)) = sched.next(&world) else {
            return Err(Error::Trace(format!("event script ended after {} events", events.len())));
        };
        let idx = events.len() as i64;
        let r = ev.robot.0;
        if tick.is_some() && tick != current_tick {
            tick_targets.clear();
            current_tick = tick;
        }
        if let (EventKind::Move, Some(_), Some(CycleState::Computed(Some(m)))) = (ev.kind, tick, world.cycles.get(r)) {
            let dest = world.config.robot(ev.robot).pos + m.delta();
            if let Some(other) = tick_targets.insert(dest, r) {
                violation = Some(format!("event {idx}: robots {other} and {r} both move to {dest} in one tick"));
            }
        }
        let st = world.step(ev, rules)?;
        let mut rec = st.record;
        rec.tick = tick;
        match ev.kind {
            EventKind::Look => quiet.cycle_look[r] = idx,
            EventKind::Compute => {
                quiet.quiet_look[r] = if st.effective { None } else { Some(quiet.cycle_look[r]) };
            }
            EventKind::Move => {}
        }
        if st.changed {
            quiet.last_change = idx;
        }
        if let Some((from, to)) = rec.applied_move() {
            if from.manhattan(to) != 1 {
                violation.get_or_insert(format!("event {idx}: move {from} -> {to} is not a unit step"));
            }
            let distinct: HashSet<Point> = world.config.positions().collect();
            if distinct.len() != n {
                violation.get_or_insert(format!("event {idx}: two robots share a cell"));
            }
        }
        if let Some(msg) = st.frame_error {
            violation.get_or_insert(format!("event {idx}: {msg}"));
        }
        events.push(rec);
        if violation.is_some() {
            break Status::InvariantViolation;
        }
    };
    let outcome = Outcome {
        status,
        detail: violation,
        final_config: world.config.clone(),
        rounds: round_count(&events, n),
        area: bounding_area(&world.config),
        diameter0: diameter(config0),
        conflicts: events.iter().filter(|e| e.aborted).count() as u64,
        events: events.len() as u64,
    };
    let init = TraceInit { config: config0.clone(), ruleset_hash: ruleset_hash(rules), scheduler: spec, step_limit };
    Ok(Trace { init, events, outcome })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cv::{builtin_ruleset, classify, Milestone};
    use crate::rules::parse_ruleset;

    fn cf4() -> Configuration {
        Configuration::from_points(&[(0, 0), (1, 1), (4, 2), (1, 4)], Color::B).unwrap()
    }

    #[test]
    fn quiescent_start_terminates_in_one_round() {
        let rs = builtin_ruleset().unwrap();
        for spec in [SchedulerSpec::Fsync, SchedulerSpec::AsyncRandom { seed: 3, k: 3 }] {
            let t = run(&cf4(), &rs, &spec, 10_000).unwrap();
            assert_eq!(t.outcome.status, Status::Terminated);
            assert_eq!(t.outcome.final_config, cf4());
            assert_eq!(t.outcome.rounds, 1);
            assert!(t.events.iter().all(|e| e.applied_move().is_none()));
        }
    }

    #[test]
    fn step_limit_outcome() {
        let rs = parse_ruleset("R: myC=A & #(x:any,y:any,*)>=0 -> (x+, _)").unwrap();
        let c = Configuration::from_points(&[(0, 0), (0, 5)], Color::A).unwrap();
        let t = run(&c, &rs, &SchedulerSpec::Fsync, 30).unwrap();
        assert_eq!(t.outcome.status, Status::StepLimit);
        assert_eq!(t.events.len(), 30);
        assert_eq!(t.outcome.rounds, 5);
    }

    #[test]
    fn simultaneous_target_is_a_violation() {
        // Two robots two cells apart on a row both step into the middle.
        let rs = parse_ruleset("R1: myC=A & #(x=2,y=0,A)=1 -> (x+, _)\nR2: myC=A & #(x=-2,y=0,A)=1 -> (x-, _)").unwrap();
        let c = Configuration::from_points(&[(0, 0), (2, 0)], Color::A).unwrap();
        let t = run(&c, &rs, &SchedulerSpec::Fsync, 100).unwrap();
        assert_eq!(t.outcome.status, Status::InvariantViolation);
        assert!(t.outcome.detail.unwrap().contains("both move to (1,0)"));
    }

    #[test]
    fn jsonl_round_trip_and_hash() {
        let rs = builtin_ruleset().unwrap();
        let c = Configuration::from_points(&[(0, 3), (2, 0), (4, 4), (1, 1)], Color::A).unwrap();
        let t = run(&c, &rs, &SchedulerSpec::AsyncRandom { seed: 9, k: 3 }, 100_000).unwrap();
        let text = t.to_jsonl();
        let back = Trace::from_jsonl(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.hash(), t.hash());
        assert_eq!(replay(&back, &rs).unwrap().hash(), t.hash());
        assert_eq!(t.config_at(t.events.len()).unwrap(), t.outcome.final_config);
    }

    #[test]
    fn trace_line_shapes() {
        let rs = builtin_ruleset().unwrap();
        let t = run(&cf4(), &rs, &SchedulerSpec::Fsync, 100).unwrap();
        let text = t.to_jsonl();
        let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines[0]["type"], "init");
        assert_eq!(lines[0]["scheduler"]["kind"], "fsync");
        assert_eq!(lines[0]["ruleset_hash"].as_str().unwrap().len(), 64);
        assert_eq!(lines[1]["type"], "event");
        assert_eq!(lines[1]["kind"], "look");
        assert_eq!(lines[1]["aborted"], false);
        let last = lines.last().unwrap();
        assert_eq!(last["type"], "outcome");
        assert_eq!(last["status"], "terminated");
        for key in ["rounds", "area", "diameter0", "conflicts", "final"] {
            assert!(!last[key].is_null(), "{key}");
        }
    }

    #[test]
    fn corrupt_traces_are_rejected() {
        assert!(Trace::from_jsonl("").is_err());
        assert!(Trace::from_jsonl("{\"type\":\"event\",\"robot\":0,\"kind\":\"look\",\"aborted\":false}").is_err());
        let rs = builtin_ruleset().unwrap();
        let t = run(&cf4(), &rs, &SchedulerSpec::Fsync, 100).unwrap();
        let text = t.to_jsonl();
        let truncated: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(Trace::from_jsonl(&truncated).is_err());
        let bad_robot = text.replacen("\"robot\":0", "\"robot\":99", 1);
        assert!(Trace::from_jsonl(&bad_robot).is_err());
    }

    #[test]
    fn replay_rejects_other_rules() {
        let rs = builtin_ruleset().unwrap();
        let t = run(&cf4(), &rs, &SchedulerSpec::Fsync, 100).unwrap();
        let other = parse_ruleset("R: myC=A & #(x:any,y:any,*)>=0 -> (x+, _)").unwrap();
        assert!(replay(&t, &other).is_err());
    }

    #[test]
    fn ce_n9_fsync_reaches_cf() {
        let rs = builtin_ruleset().unwrap();
        let mut robots = vec![
            RobotRecord { pos: Point::new(0, 0), color: Color::B },
            RobotRecord { pos: Point::new(1, 1), color: Color::B },
            RobotRecord { pos: Point::new(1, 10), color: Color::B },
        ];
        robots.extend((2..=7).map(|y| RobotRecord { pos: Point::new(2, y), color: Color::A }));
        let c = Configuration::new(robots).unwrap();
        let t = run(&c, &rs, &SchedulerSpec::Fsync, 100_000).unwrap();
        assert_eq!(t.outcome.status, Status::Terminated, "{:?}", t.outcome.detail);
        assert_eq!(classify(&t.outcome.final_config), Milestone::CF);
        let mut want = crate::cv::roth_points(11, &[0, 1, 2, 3, 4, 5, 6, 7, 10]).unwrap();
        let mut have: Vec<Point> = t.outcome.final_config.positions().collect();
        want.sort();
        have.sort();
        assert_eq!(have, want);
    }
}
