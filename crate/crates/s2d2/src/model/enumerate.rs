//! Exhaustive single-drone strategy enumeration for small horizons.
//!
//! Counts are computed first (in u128, saturating) so oversized requests are
//! refused with the estimate instead of silently truncated or materialized.

use super::{AttackPlan, CityGraph, ModelError};

/// Number of B-position paths from `start` (or from anywhere), in u128.
fn count_paths(graph: &CityGraph, battery: u32, start: Option<u32>) -> u128 {
    let n = graph.n() as usize;
    // ways[v] = number of paths of the current length ending at v.
    let mut ways = vec![0u128; n + 1];
    match start {
        Some(s) => ways[s as usize] = 1,
        None => ways[1..].fill(1),
    }
    for _ in 1..battery {
        let mut next = vec![0u128; n + 1];
        for v in 1..=n {
            if ways[v] == 0 {
                continue;
            }
            next[v] = next[v].saturating_add(ways[v]); // hover
            for &w in graph.neighbors(v as u32) {
                next[w as usize] = next[w as usize].saturating_add(ways[v]);
            }
        }
        ways = next;
    }
    ways[1..].iter().fold(0u128, |acc, &w| acc.saturating_add(w))
}

/// Σ_{k=0..min(P,B)} C(B, k), saturating.
fn count_attack_sets(battery: u32, payload: u32) -> u128 {
    let mut total = 0u128;
    let mut binom = 1u128; // C(B, 0)
    for k in 0..=payload.min(battery) {
        if k > 0 {
            binom = binom
                .saturating_mul((battery - k + 1) as u128)
                .checked_div(k as u128)
                .unwrap_or(u128::MAX);
        }
        total = total.saturating_add(binom);
    }
    total
}

/// Number of single-drone (path, attack set) strategies.
pub fn count_attacker_strategies(
    graph: &CityGraph,
    battery: u32,
    payload: u32,
    start: Option<u32>,
) -> u128 {
    count_paths(graph, battery, start).saturating_mul(count_attack_sets(battery, payload))
}

/// All B-position paths (hovering allowed) in lexicographic order, refused
/// when the count exceeds `limit`.
pub fn enumerate_paths(
    graph: &CityGraph,
    battery: u32,
    start: Option<u32>,
    limit: u64,
) -> Result<Vec<Vec<u32>>, ModelError> {
    if battery == 0 {
        return Err(ModelError::InvalidConfig("battery must be >= 1".into()));
    }
    if let Some(s) = start {
        if !graph.contains(s) {
            return Err(ModelError::InvalidStrategy(format!("start node {s} not in graph")));
        }
    }
    let estimated = count_paths(graph, battery, start);
    if estimated > limit as u128 {
        return Err(ModelError::Explosion { estimated, limit });
    }

    let starts: Vec<u32> = match start {
        Some(s) => vec![s],
        None => graph.nodes().collect(),
    };
    let mut out = Vec::with_capacity(estimated as usize);
    let mut prefix = Vec::with_capacity(battery as usize);
    for s in starts {
        prefix.push(s);
        extend_paths(graph, battery, &mut prefix, &mut out);
        prefix.pop();
    }
    Ok(out)
}

fn extend_paths(graph: &CityGraph, battery: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if prefix.len() == battery as usize {
        out.push(prefix.clone());
        return;
    }
    let v = *prefix.last().unwrap();
    // Hover merged into the neighbor list at its sorted position.
    let mut nexts: Vec<u32> = graph.neighbors(v).to_vec();
    let slot = nexts.binary_search(&v).unwrap_err();
    nexts.insert(slot, v);
    for w in nexts {
        prefix.push(w);
        extend_paths(graph, battery, prefix, out);
        prefix.pop();
    }
}

/// All subsets of {1..B} with at most P elements: sizes ascending,
/// lexicographic within a size.
pub(crate) fn attack_sets(battery: u32, payload: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for k in 1..=payload.min(battery) {
        let mut current = Vec::with_capacity(k as usize);
        push_combinations(1, battery, k, &mut current, &mut out);
    }
    out
}

fn push_combinations(from: u32, battery: u32, k: u32, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if k == 0 {
        out.push(current.clone());
        return;
    }
    for t in from..=(battery - k + 1) {
        current.push(t);
        push_combinations(t + 1, battery, k - 1, current, out);
        current.pop();
    }
}

/// Exhaustive single-drone strategy space T_{P,B} × P_B over the graph,
/// optionally pinned to a start node. Deterministic order: paths
/// lexicographic, attack sets by size then lexicographic.
pub fn enumerate_attacker_strategies(
    graph: &CityGraph,
    battery: u32,
    payload: u32,
    start: Option<u32>,
    limit: u64,
) -> Result<Vec<AttackPlan>, ModelError> {
    let estimated = count_attacker_strategies(graph, battery, payload, start);
    if estimated > limit as u128 {
        return Err(ModelError::Explosion { estimated, limit });
    }
    let paths = enumerate_paths(graph, battery, start, limit)?;
    let sets = attack_sets(battery, payload);
    let mut out = Vec::with_capacity(paths.len() * sets.len());
    for path in &paths {
        for set in &sets {
            out.push(AttackPlan { path: path.clone(), attacks: set.clone() });
        }
    }
    Ok(out)
}
