//! Interception analysis for a single watcher against a single raid plan.
//!
//! A raid plan's *significant targets* are the strikes whose node carries a
//! penalty worth protecting (|penalty| > δ). The watcher can protect target i
//! by arriving at its node no later than the strike step and waiting there:
//! co-location removes the drone before the strike lands. `catch` reports the
//! first target protectable from a given start node, 1-based over the
//! significant list, with `len+1` as the "none" sentinel.

use crate::model::{AttackPlan, CityGraph};

/// Result of an interception query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatchOutcome {
    /// 1-based index of the first protectable significant target; equals
    /// `significant + 1` when none can be reached in time.
    pub index: u32,
    /// Number of significant targets the plan has (after the δ filter).
    pub significant: u32,
    /// Shortest interception route from the start to the caught target's
    /// node (inclusive on both ends); `None` at the sentinel.
    pub path: Option<Vec<u32>>,
    /// Step at which the caught target would have been struck; `None` at the
    /// sentinel.
    pub strike_step: Option<u32>,
}

/// Significant targets of `plan` from step `from_t` on: `(node, step)` in
/// strike order, skipping nodes with |penalty| ≤ δ and nodes already in
/// `destroyed`.
pub(crate) fn significant_targets(
    zone: &CityGraph,
    plan: &AttackPlan,
    destroyed: &[u32],
    delta: u64,
    from_t: u32,
) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for &t in &plan.attacks {
        if t < from_t {
            continue;
        }
        let node = plan.path[(t - 1) as usize];
        if zone.penalty(node).unsigned_abs() <= delta {
            continue;
        }
        if destroyed.binary_search(&node).is_ok() {
            continue;
        }
        out.push((node, t));
    }
    out
}

/// First index (1-based) in `targets` reachable from a watcher standing at
/// the node with BFS distances `dists` at step `at_t`: arrival `at_t + d`
/// must not exceed the strike step. Returns `targets.len() + 1` when none.
pub(crate) fn first_interceptable(dists: &[u32], targets: &[(u32, u32)], at_t: u32) -> usize {
    for (i, &(node, t)) in targets.iter().enumerate() {
        let d = dists[node as usize];
        if d != u32::MAX && at_t.saturating_add(d) <= t {
            return i + 1;
        }
    }
    targets.len() + 1
}

/// Index of the first significant target of `plan` that a watcher starting
/// at `v_d` can protect, per the arrival rule `1 + d(v_d, v_i) ≤ t_i`, plus
/// the shortest route there. Targets with |penalty| ≤ δ are dropped before
/// indexing; the sentinel `significant + 1` means the plan cannot be
/// intercepted from this start.
pub fn catch(zone: &CityGraph, plan: &AttackPlan, v_d: u32, delta: u64) -> CatchOutcome {
    assert!(zone.contains(v_d), "watcher start {v_d} not in the zone");
    let targets = significant_targets(zone, plan, &[], delta, 1);
    let dists = zone.bfs_dists(v_d);
    let index = first_interceptable(&dists, &targets, 1);
    let (path, strike_step) = if index <= targets.len() {
        let (node, t) = targets[index - 1];
        (zone.shortest_path(v_d, node), Some(t))
    } else {
        (None, None)
    };
    CatchOutcome {
        index: index as u32,
        significant: targets.len() as u32,
        path,
        strike_step,
    }
}
