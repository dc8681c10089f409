//! Activation schedules.
//!
//! Synchronous schedules work in ticks: every active robot looks, then
//! every active robot computes, then every robot holding a move performs
//! it. Asynchronous schedules fire one event of one robot at a time and
//! bound unfairness: no robot goes more than `k·n` events without firing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CycleState, Event, EventKind, World};
use crate::error::{Error, Result};
use crate::geometry::RobotId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Heuristic {
    /// Fire Looks and Computes eagerly and hold every Move back until the
    /// fairness bound forces it, so snapshots are as stale as allowed.
    DelayMoves,
    /// One robot at a time runs a whole cycle, in id order.
    Sequential,
}

impl Heuristic {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "delay-moves" => Ok(Heuristic::DelayMoves),
            "sequential" => Ok(Heuristic::Sequential),
            _ => Err(Error::usage(format!("unknown heuristic {s:?} (delay-moves, sequential)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SchedulerSpec {
    Fsync,
    Ssync { seed: u64, p: f64 },
    AsyncRandom { seed: u64, k: u64 },
    AsyncAdversary { heuristic: Heuristic, k: u64 },
    /// Only meaningful for the explorer.
    Exhaustive { depth: u64 },
}

impl SchedulerSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SchedulerSpec::Ssync { p, .. } if !(p > 0.0 && p <= 1.0) => {
                Err(Error::usage(format!("activation probability {p} outside (0, 1]")))
            }
            SchedulerSpec::AsyncRandom { k, .. } | SchedulerSpec::AsyncAdversary { k, .. } if k < 1 => {
                Err(Error::usage("unfairness bound k must be at least 1"))
            }
            _ => Ok(()),
        }
    }

    /// The same scheduler with its random seed replaced; seedless kinds are
    /// returned unchanged.
    pub fn with_seed(&self, seed: u64) -> SchedulerSpec {
        match *self {
            SchedulerSpec::Ssync { p, .. } => SchedulerSpec::Ssync { seed, p },
            SchedulerSpec::AsyncRandom { k, .. } => SchedulerSpec::AsyncRandom { seed, k },
            ref other => other.clone(),
        }
    }

    /// Short name with parameters, e.g. `ssync(p=0.5)`.
    pub fn label(&self) -> String {
        match self {
            SchedulerSpec::Fsync => "fsync".into(),
            SchedulerSpec::Ssync { p, .. } => format!("ssync(p={p})"),
            SchedulerSpec::AsyncRandom { k, .. } => format!("async-random(k={k})"),
            SchedulerSpec::AsyncAdversary { heuristic, k } => {
                let h = match heuristic {
                    Heuristic::DelayMoves => "delay-moves",
                    Heuristic::Sequential => "sequential",
                };
                format!("async-adversary({h},k={k})")
            }
            SchedulerSpec::Exhaustive { depth } => format!("exhaustive(depth={depth})"),
        }
    }

    pub fn is_synchronous(&self) -> bool {
        matches!(self, SchedulerSpec::Fsync | SchedulerSpec::Ssync { .. })
    }

    pub(crate) fn build(&self, n: usize) -> Result<Box<dyn Scheduler>> {
        self.validate()?;
        Ok(match *self {
            SchedulerSpec::Fsync => Box::new(Ticks::new(n, None)),
            SchedulerSpec::Ssync { seed, p } => Box::new(Ticks::new(n, Some((ChaCha8Rng::seed_from_u64(seed), p)))),
            SchedulerSpec::AsyncRandom { seed, k } => {
                Box::new(Async::new(n, k, Pick::Random(Box::new(ChaCha8Rng::seed_from_u64(seed)))))
            }
            SchedulerSpec::AsyncAdversary { heuristic, k } => Box::new(Async::new(n, k, Pick::Adversary(heuristic))),
            SchedulerSpec::Exhaustive { .. } => {
                return Err(Error::usage("the exhaustive scheduler only drives `explore`"));
            }
        })
    }
}

/// Chooses the next event. `tick` is set for synchronous schedules.
pub(crate) trait Scheduler {
    fn next(&mut self, world: &World) -> Option<(Event, Option<u64>)>;
}

struct Ticks {
    n: usize,
    coin: Option<(ChaCha8Rng, f64)>,
    tick: u64,
    queue: Vec<Event>,
    stage: Option<EventKind>,
    active: Vec<usize>,
}

impl Ticks {
    fn new(n: usize, coin: Option<(ChaCha8Rng, f64)>) -> Self {
        Ticks { n, coin, tick: 0, queue: Vec::new(), stage: None, active: Vec::new() }
    }

    fn pick_active(&mut self) -> Vec<usize> {
        match &mut self.coin {
            None => (0..self.n).collect(),
            Some((rng, p)) => {
                let p = *p;
                let mut act: Vec<usize> = (0..self.n).filter(|_| rng.gen_bool(p)).collect();
                if act.is_empty() {
                    act.push(rng.gen_range(0..self.n));
                }
                act
            }
        }
    }

    fn refill(&mut self, world: &World) {
        let next_stage = match self.stage {
            None | Some(EventKind::Move) => {
                if self.stage.is_some() {
                    self.tick += 1;
                }
                self.active = self.pick_active();
                EventKind::Look
            }
            Some(EventKind::Look) => EventKind::Compute,
            Some(EventKind::Compute) => EventKind::Move,
        };
        self.stage = Some(next_stage);
        // Robots whose Compute ended in Wait are already idle and skip Move.
        self.queue = self
            .active
            .iter()
            .rev()
            .copied()
            .filter(|&r| next_stage != EventKind::Move || matches!(world.cycles[r], CycleState::Computed(_)))
            .map(|r| Event::new(r, next_stage))
            .collect();
    }
}

impl Scheduler for Ticks {
    fn next(&mut self, world: &World) -> Option<(Event, Option<u64>)> {
        while self.queue.is_empty() {
            self.refill(world);
        }
        self.queue.pop().map(|e| (e, Some(self.tick)))
    }
}

enum Pick {
    Random(Box<ChaCha8Rng>),
    Adversary(Heuristic),
}

/// One event at a time with an earliest-deadline guard: a robot whose
/// deadline `last + k·n` is fewer than `n` events away is served first.
struct Async {
    n: usize,
    window: i64,
    t: i64,
    last: Vec<i64>,
    pick: Pick,
    cursor: usize,
    busy: bool,
}

impl Async {
    fn new(n: usize, k: u64, pick: Pick) -> Self {
        Async { n, window: k as i64 * n as i64, t: 0, last: vec![-1; n], pick, cursor: 0, busy: false }
    }

    fn urgent(&self) -> Option<usize> {
        (0..self.n)
            .map(|r| (self.last[r] + self.window, self.last[r], r))
            .filter(|&(d, _, _)| d - self.t < self.n as i64)
            .min()
            .map(|(_, _, r)| r)
    }

    fn choose(&mut self, world: &World) -> usize {
        if let Some(r) = self.urgent() {
            return r;
        }
        let n = self.n;
        match &mut self.pick {
            Pick::Random(rng) => rng.gen_range(0..n),
            Pick::Adversary(Heuristic::Sequential) => {
                // Stay on the current robot until its cycle is back to Idle.
                if self.busy && world.cycles[self.cursor] == CycleState::Idle {
                    self.cursor = (self.cursor + 1) % n;
                }
                self.busy = true;
                self.cursor
            }
            Pick::Adversary(Heuristic::DelayMoves) => {
                let not_moving = (0..n)
                    .map(|i| (self.cursor + i) % n)
                    .find(|&r| !matches!(world.cycles[r], CycleState::Computed(_)));
                match not_moving {
                    Some(r) => {
                        self.cursor = (r + 1) % n;
                        r
                    }
                    None => (0..n).min_by_key(|&r| self.last[r]).expect("n >= 1"),
                }
            }
        }
    }
}

impl Scheduler for Async {
    fn next(&mut self, world: &World) -> Option<(Event, Option<u64>)> {
        let r = self.choose(world);
        self.last[r] = self.t;
        self.t += 1;
        Some((Event { robot: RobotId(r), kind: world.next_kind(RobotId(r)) }, None))
    }
}

/// Re-issues a recorded event sequence.
pub(crate) struct Scripted {
    events: std::vec::IntoIter<(Event, Option<u64>)>,
}

impl Scripted {
    pub(crate) fn new(events: Vec<(Event, Option<u64>)>) -> Self {
        Scripted { events: events.into_iter() }
    }
}

impl Scheduler for Scripted {
    fn next(&mut self, _world: &World) -> Option<(Event, Option<u64>)> {
        self.events.next()
    }
}
