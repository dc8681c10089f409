//! Exhaustive interleaving search for small configurations.
//!
//! States are configurations plus each robot's cycle position. A robot that
//! has looked is stored with the action its snapshot yields (after the
//! occupied-cell veto) rather than the snapshot itself, since that is all
//! the rest of its cycle depends on. States are translated so the minimum
//! corner is the origin and robots are sorted, which is sound because
//! robots are anonymous and never see global coordinates.
//!
//! A Look whose rule has no effect is never expanded: it leaves the state
//! unchanged.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::Serialize;

use crate::cv::{classify, derive_context, Milestone};
use crate::geometry::{visible_set, Color, Configuration, Point, RobotRecord};
use crate::rules::{select_action, Move, RuleSet};

use super::{frame_matches_truth, is_effective};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExploreMode {
    /// One event of one robot per transition.
    Async,
    /// Every nonempty subset of enabled robots runs a full cycle together.
    Ssync,
}

#[derive(Clone, Copy, Debug)]
pub struct ExploreOptions {
    pub mode: ExploreMode,
    /// Longest event sequence (or tick sequence) explored.
    pub depth: usize,
    /// Stop and flag the report incomplete beyond this many states.
    pub max_states: usize,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions { mode: ExploreMode::Async, depth: 300, max_states: 2_000_000 }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ExplorationReport {
    pub states: usize,
    pub transitions: usize,
    pub deepest: usize,
    /// False when the depth bound or the state cap cut the search short.
    pub complete: bool,
    /// Distinct quiescent configurations reached.
    pub terminals: Vec<Configuration>,
    pub non_cf_terminals: Vec<Configuration>,
    /// Moves aborted because the cell filled after the snapshot.
    pub conflicts: usize,
    pub occupancy_violations: usize,
    pub simultaneous_targets: usize,
    pub frame_mismatches: usize,
    /// Explored states from which no quiescent state is reachable.
    pub stuck: usize,
    pub stuck_examples: Vec<Configuration>,
    pub fired_rules: Vec<String>,
    pub dead_rules: Vec<String>,
}

impl ExplorationReport {
    /// Every terminal is C_F and no safety or liveness problem was found.
    pub fn is_clean(&self) -> bool {
        self.non_cf_terminals.is_empty()
            && self.occupancy_violations == 0
            && self.simultaneous_targets == 0
            && self.frame_mismatches == 0
            && self.stuck == 0
            && !self.terminals.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Phase {
    Idle,
    Looked { rule: u16, mv: Option<Move>, recolor: Option<Color> },
    Computed(Move),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Bot {
    pos: Point,
    color: Color,
    phase: Phase,
}

type State = Vec<Bot>;

fn canonical(mut s: State) -> State {
    let ox = s.iter().map(|b| b.pos.x).min().unwrap_or(0);
    let oy = s.iter().map(|b| b.pos.y).min().unwrap_or(0);
    for b in &mut s {
        b.pos = b.pos - Point::new(ox, oy);
    }
    s.sort();
    s
}

fn config_of(s: &State) -> Configuration {
    Configuration::new(s.iter().map(|b| RobotRecord { pos: b.pos, color: b.color }).collect())
        .expect("explored states keep cells distinct")
}

struct Look {
    rule: u16,
    mv: Option<Move>,
    recolor: Option<Color>,
    frame_ok: bool,
}

/// The effective action robot `i` takes on a fresh look, if any.
fn look(config: &Configuration, i: usize, rules: &RuleSet) -> Option<Look> {
    let id = crate::geometry::RobotId(i);
    let view = visible_set(config, id).expect("index within configuration");
    let ctx = derive_context(&view);
    let sel = select_action(&view, rules, &ctx)?;
    if !is_effective(&sel.action, &view) {
        return None;
    }
    let rule = &rules.rules[sel.index];
    let frame_ok = if rule.needs_frame() {
        ctx.frame.is_some() && frame_matches_truth(config, config.robot(id).pos, &view)
    } else {
        true
    } && (!rule.uses_m()
        || ctx.m_hat == crate::cv::smallest_prime_geq(config.len() as i64).ok());
    let mv = sel.action.mv.filter(|m| !view.occupied(m.delta()));
    let recolor = sel.action.recolor.filter(|&c| c != view.my_color);
    Some(Look { rule: sel.index as u16, mv, recolor, frame_ok })
}

#[derive(Default)]
struct Tally {
    conflicts: usize,
    occupancy: usize,
    simultaneous: usize,
    frames: usize,
    fired: HashSet<u16>,
}

fn async_successors(s: &State, rules: &RuleSet, tally: &mut Tally) -> Vec<State> {
    let config = config_of(s);
    let mut out = Vec::new();
    for i in 0..s.len() {
        let mut next = s.clone();
        let b = &mut next[i];
        match b.phase {
            Phase::Idle => {
                let Some(l) = look(&config, i, rules) else { continue };
                tally.fired.insert(l.rule);
                if !l.frame_ok {
                    tally.frames += 1;
                }
                b.phase = Phase::Looked { rule: l.rule, mv: l.mv, recolor: l.recolor };
            }
            Phase::Looked { mv, recolor, .. } => {
                if let Some(c) = recolor {
                    b.color = c;
                }
                b.phase = mv.map_or(Phase::Idle, Phase::Computed);
            }
            Phase::Computed(m) => {
                let to = b.pos + m.delta();
                b.phase = Phase::Idle;
                if config.is_occupied(to) {
                    tally.conflicts += 1;
                } else {
                    b.pos = to;
                    let cells: HashSet<Point> = next.iter().map(|b| b.pos).collect();
                    if cells.len() != next.len() {
                        tally.occupancy += 1;
                        continue;
                    }
                }
            }
        }
        out.push(canonical(next));
    }
    out
}

fn ssync_successors(s: &State, rules: &RuleSet, tally: &mut Tally) -> Vec<State> {
    let config = config_of(s);
    let enabled: Vec<(usize, Look)> =
        (0..s.len()).filter_map(|i| look(&config, i, rules).map(|l| (i, l))).collect();
    for (_, l) in &enabled {
        tally.fired.insert(l.rule);
        if !l.frame_ok {
            tally.frames += 1;
        }
    }
    let mut out = Vec::new();
    for mask in 1u32..(1 << enabled.len()) {
        let mut next = s.clone();
        let mut targets = HashSet::new();
        let mut clash = false;
        for (bit, (i, l)) in enabled.iter().enumerate() {
            if mask & (1 << bit) == 0 {
                continue;
            }
            if let Some(c) = l.recolor {
                next[*i].color = c;
            }
            if let Some(m) = l.mv {
                let to = s[*i].pos + m.delta();
                clash |= !targets.insert(to);
                next[*i].pos = to;
            }
        }
        if clash {
            tally.simultaneous += 1;
            continue;
        }
        out.push(canonical(next));
    }
    out
}

/// Breadth-first search over every interleaving reachable from `config0`.
pub fn explore(config0: &Configuration, rules: &RuleSet, opts: ExploreOptions) -> ExplorationReport {
    let start: State = canonical(
        config0.robots().iter().map(|r| Bot { pos: r.pos, color: r.color, phase: Phase::Idle }).collect(),
    );
    let mut index: HashMap<State, u32> = HashMap::new();
    let mut states: Vec<State> = Vec::new();
    let mut depth: Vec<u32> = Vec::new();
    let mut succ: Vec<Vec<u32>> = Vec::new();
    let mut expanded: Vec<bool> = Vec::new();
    index.insert(start.clone(), 0);
    states.push(start);
    depth.push(0);
    succ.push(Vec::new());
    expanded.push(false);
    let mut queue = VecDeque::from([0u32]);
    let mut tally = Tally::default();
    let mut complete = true;
    let mut transitions = 0;
    while let Some(id) = queue.pop_front() {
        let d = depth[id as usize];
        if d as usize >= opts.depth {
            complete = false;
            continue;
        }
        let s = states[id as usize].clone();
        let next = match opts.mode {
            ExploreMode::Async => async_successors(&s, rules, &mut tally),
            ExploreMode::Ssync => ssync_successors(&s, rules, &mut tally),
        };
        expanded[id as usize] = true;
        let mut edges = Vec::with_capacity(next.len());
        for t in next {
            transitions += 1;
            let tid = match index.get(&t) {
                Some(&tid) => tid,
                None => {
                    if states.len() >= opts.max_states {
                        complete = false;
                        continue;
                    }
                    let tid = states.len() as u32;
                    index.insert(t.clone(), tid);
                    states.push(t);
                    depth.push(d + 1);
                    succ.push(Vec::new());
                    expanded.push(false);
                    queue.push_back(tid);
                    tid
                }
            };
            edges.push(tid);
        }
        edges.sort_unstable();
        edges.dedup();
        succ[id as usize] = edges;
    }

    // A state with no successors after expansion is quiescent: every robot
    // idle and no effective rule.
    let terminal: Vec<bool> = (0..states.len()).map(|i| expanded[i] && succ[i].is_empty()).collect();
    let mut pred: Vec<Vec<u32>> = vec![Vec::new(); states.len()];
    for (i, es) in succ.iter().enumerate() {
        for &t in es {
            pred[t as usize].push(i as u32);
        }
    }
    // Unexpanded states might still reach a terminal, so they seed the
    // backward search too.
    let mut live = vec![false; states.len()];
    let mut stack: Vec<u32> = Vec::new();
    for i in 0..states.len() {
        if terminal[i] || !expanded[i] {
            live[i] = true;
            stack.push(i as u32);
        }
    }
    while let Some(i) = stack.pop() {
        for &p in &pred[i as usize] {
            if !live[p as usize] {
                live[p as usize] = true;
                stack.push(p);
            }
        }
    }

    let mut terminals = Vec::new();
    let mut non_cf = Vec::new();
    let mut seen_cfg = HashSet::new();
    for i in (0..states.len()).filter(|&i| terminal[i]) {
        let c = config_of(&states[i]);
        if seen_cfg.insert(c.point_set()) {
            if classify(&c) != Milestone::CF {
                non_cf.push(c.clone());
            }
            terminals.push(c);
        }
    }
    let stuck: Vec<usize> = (0..states.len()).filter(|&i| !live[i]).collect();
    let stuck_examples = stuck.iter().take(5).map(|&i| config_of(&states[i])).collect();
    let mut fired: Vec<u16> = tally.fired.iter().copied().collect();
    fired.sort_unstable();
    ExplorationReport {
        states: states.len(),
        transitions,
        deepest: depth.iter().copied().max().unwrap_or(0) as usize,
        complete,
        terminals,
        non_cf_terminals: non_cf,
        conflicts: tally.conflicts,
        occupancy_violations: tally.occupancy,
        simultaneous_targets: tally.simultaneous,
        frame_mismatches: tally.frames,
        stuck: stuck.len(),
        stuck_examples,
        fired_rules: fired.iter().map(|&i| rules.rules[i as usize].name.clone()).collect(),
        dead_rules: rules
            .rules
            .iter()
            .enumerate()
            .filter(|(i, _)| !tally.fired.contains(&(*i as u16)))
            .map(|(_, r)| r.name.clone())
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cv::builtin_ruleset;
    use crate::rules::parse_ruleset;

    fn cf4() -> Configuration {
        Configuration::from_points(&[(0, 0), (1, 1), (4, 2), (1, 4)], Color::B).unwrap()
    }

    #[test]
    fn cf_start_is_a_single_terminal_state() {
        let r = explore(&cf4(), &builtin_ruleset().unwrap(), ExploreOptions::default());
        assert_eq!(r.states, 1);
        assert_eq!(r.terminals.len(), 1);
        assert!(r.is_clean());
        assert!(r.complete);
        assert_eq!(r.dead_rules.len(), 26);
    }

    #[test]
    fn canonical_ignores_translation_and_order() {
        let a = vec![
            Bot { pos: Point::new(3, 3), color: Color::A, phase: Phase::Idle },
            Bot { pos: Point::new(5, 4), color: Color::B, phase: Phase::Idle },
        ];
        let b = vec![
            Bot { pos: Point::new(-8, 1), color: Color::B, phase: Phase::Idle },
            Bot { pos: Point::new(-10, 0), color: Color::A, phase: Phase::Idle },
        ];
        assert_eq!(canonical(a), canonical(b));
    }

    #[test]
    fn ssync_simultaneous_target_is_reported() {
        let rs = parse_ruleset("R1: myC=A & #(x=2,y=0,A)=1 -> (x+, _)\nR2: myC=A & #(x=-2,y=0,A)=1 -> (x-, _)").unwrap();
        let c = Configuration::from_points(&[(0, 0), (2, 0)], Color::A).unwrap();
        let r = explore(&c, &rs, ExploreOptions { mode: ExploreMode::Ssync, ..Default::default() });
        assert!(r.simultaneous_targets > 0);
    }

    #[test]
    fn async_conflict_is_found() {
        // Either robot may step into the middle cell; under ASYNC both can
        // have committed before either moves.
        let rs = parse_ruleset("R1: myC=A & #(x=2,y=0,A)=1 -> (x+, _)\nR2: myC=A & #(x=-2,y=0,A)=1 -> (x-, _)").unwrap();
        let c = Configuration::from_points(&[(0, 0), (2, 0)], Color::A).unwrap();
        let r = explore(&c, &rs, ExploreOptions::default());
        assert!(r.conflicts > 0);
    }

    #[test]
    fn livelock_is_stuck() {
        // Two robots that chase each other around forever.
        let rs = parse_ruleset("R1: myC=A & #(x:any,y:any,*)>=1 -> (_, B)\nR2: myC=B & #(x:any,y:any,*)>=1 -> (_, A)").unwrap();
        let c = Configuration::from_points(&[(0, 0), (0, 1)], Color::A).unwrap();
        let r = explore(&c, &rs, ExploreOptions::default());
        assert!(r.complete);
        assert!(r.terminals.is_empty());
        assert!(r.stuck > 0);
        assert!(!r.is_clean());
    }

    #[test]
    fn depth_bound_marks_incomplete() {
        // The robot with the other one on its left keeps walking away.
        let rs = parse_ruleset("R: myC=A & #(x<=0,y:any,*)=1 -> (x+, _)").unwrap();
        let c = Configuration::from_points(&[(0, 0), (0, 5)], Color::A).unwrap();
        let r = explore(&c, &rs, ExploreOptions { depth: 10, ..Default::default() });
        assert!(!r.complete);
        assert_eq!(r.stuck, 0);
    }
}
