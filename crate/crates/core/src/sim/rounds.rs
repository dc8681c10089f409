//! Asynchronous rounds: the event list is cut greedily into the shortest
//! windows in which every robot runs a whole cycle. A cycle counts for a
//! window only if its Look lies inside the window; it ends at its Move, or
//! at its Compute when no rule fired.

use super::trace::EventRecord;
use super::EventKind;

pub fn round_count(events: &[EventRecord], n: usize) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut window_start = 0usize;
    let mut cycle_start = vec![None::<usize>; n];
    let mut done = vec![false; n];
    let mut remaining = n;
    let mut rounds = 0;
    for (i, e) in events.iter().enumerate() {
        let r = e.robot;
        if e.kind == EventKind::Look {
            cycle_start[r] = Some(i);
        }
        if e.completes_cycle() {
            if !done[r] && cycle_start[r].is_some_and(|s| s >= window_start) {
                done[r] = true;
                remaining -= 1;
            }
            cycle_start[r] = None;
        }
        if remaining == 0 {
            rounds += 1;
            window_start = i + 1;
            done.iter_mut().for_each(|d| *d = false);
            remaining = n;
        }
    }
    rounds
}
