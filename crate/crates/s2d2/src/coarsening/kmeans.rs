//! Coordinate clustering for maps that resist scale-based neighborhood
//! detection: weighted K-Means with farthest-point seeding, followed by a
//! repair pass that makes every cluster induce a connected subgraph.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::model::CityGraph;

/// Squared Euclidean distance; every comparison here only needs the order.
fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    dx * dx + dy * dy
}

/// Partitions the graph's nodes into `k` connected clusters by coordinates.
///
/// Lloyd iterations with per-node weights run until the largest centroid
/// move drops below 1e-6 (or 100 rounds). The first center is drawn
/// weight-proportionally from `seed`; the rest are placed farthest-point,
/// so the result is deterministic given `(graph, k, weights, seed)`.
/// Clusters are then repaired for connectivity: the smallest disconnected
/// fragment (ties towards the lowest node id) moves to the adjacent cluster
/// with the nearest centroid until every cluster induces a connected
/// subgraph; a fragment with no neighbors outside itself becomes its own
/// cluster, so the output can exceed `k` clusters on a disconnected graph.
/// `k` is clamped to the node count, all-zero weights fall back to uniform,
/// and the result lists each cluster sorted, ordered by smallest member.
///
/// Panics when the graph lacks coordinates or `weights` is not one
/// non-negative weight per node.
pub fn weighted_kmeans(graph: &CityGraph, k: usize, weights: &[f64], seed: u64) -> Vec<Vec<u32>> {
    let n = graph.n() as usize;
    assert_eq!(weights.len(), n, "clustering needs one weight per node");
    let coords: Vec<(f64, f64)> = graph
        .nodes()
        .map(|v| graph.coord(v).expect("clustering needs node coordinates"))
        .collect();
    let k = k.clamp(1, n);
    let weights: Vec<f64> = if weights.iter().all(|&w| w <= 0.0) {
        vec![1.0; n]
    } else {
        weights.to_vec()
    };

    let mut centers = seed_centers(&coords, &weights, k, seed);
    let mut assign = vec![0usize; n];
    for _ in 0..100 {
        assign_nearest(&coords, &centers, &mut assign);
        let moved = update_centers(&coords, &weights, &assign, &mut centers);
        // `moved` is squared, so the 1e-6 movement threshold squares too.
        if moved < 1e-12 {
            break;
        }
    }
    assign_nearest(&coords, &centers, &mut assign);

    let mut clusters: Vec<Vec<u32>> = vec![Vec::new(); centers.len()];
    for (i, &c) in assign.iter().enumerate() {
        clusters[c].push(i as u32 + 1);
    }
    clusters.retain(|c| !c.is_empty());
    repair_connectivity(graph, &coords, &weights, &mut clusters);
    clusters.sort_by_key(|c| c[0]);
    clusters
}

/// One center drawn weight-proportionally, the rest placed at the node
/// farthest from every chosen center (ties towards the lowest node id).
fn seed_centers(coords: &[(f64, f64)], weights: &[f64], k: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let total: f64 = weights.iter().sum();
    let mut draw = rng.gen::<f64>() * total;
    let mut first = weights.len() - 1;
    for (i, &w) in weights.iter().enumerate() {
        if draw < w {
            first = i;
            break;
        }
        draw -= w;
    }
    let mut centers = vec![coords[first]];
    while centers.len() < k {
        let mut pick = 0usize;
        let mut far = -1.0f64;
        for (i, &p) in coords.iter().enumerate() {
            let d = centers.iter().map(|&c| dist2(p, c)).fold(f64::INFINITY, f64::min);
            if d > far {
                far = d;
                pick = i;
            }
        }
        centers.push(coords[pick]);
    }
    centers
}

/// Assigns every node to its nearest center, ties towards the lower index.
fn assign_nearest(coords: &[(f64, f64)], centers: &[(f64, f64)], assign: &mut [usize]) {
    for (i, &p) in coords.iter().enumerate() {
        let mut best = 0usize;
        let mut near = f64::INFINITY;
        for (c, &center) in centers.iter().enumerate() {
            let d = dist2(p, center);
            if d < near {
                near = d;
                best = c;
            }
        }
        assign[i] = best;
    }
}

/// Moves each center to its cluster's weighted mean and reports the largest
/// squared displacement. A cluster of weightless nodes keeps its plain mean;
/// an emptied cluster is re-seeded at the node farthest from every center so
/// it can win members back next round.
fn update_centers(
    coords: &[(f64, f64)],
    weights: &[f64],
    assign: &[usize],
    centers: &mut [(f64, f64)],
) -> f64 {
    let k = centers.len();
    let mut wsum = vec![0.0f64; k];
    let mut wx = vec![0.0f64; k];
    let mut wy = vec![0.0f64; k];
    let mut count = vec![0usize; k];
    let mut x = vec![0.0f64; k];
    let mut y = vec![0.0f64; k];
    for (i, &c) in assign.iter().enumerate() {
        let w = weights[i];
        wsum[c] += w;
        wx[c] += w * coords[i].0;
        wy[c] += w * coords[i].1;
        count[c] += 1;
        x[c] += coords[i].0;
        y[c] += coords[i].1;
    }
    let mut moved = 0.0f64;
    for c in 0..k {
        let next = if wsum[c] > 0.0 {
            (wx[c] / wsum[c], wy[c] / wsum[c])
        } else if count[c] > 0 {
            (x[c] / count[c] as f64, y[c] / count[c] as f64)
        } else {
            let mut pick = 0usize;
            let mut far = -1.0f64;
            for (i, &p) in coords.iter().enumerate() {
                let d = centers.iter().map(|&ctr| dist2(p, ctr)).fold(f64::INFINITY, f64::min);
                if d > far {
                    far = d;
                    pick = i;
                }
            }
            coords[pick]
        };
        moved = moved.max(dist2(centers[c], next));
        centers[c] = next;
    }
    moved
}

/// Connected pieces of the subgraph induced on `members` (sorted ascending),
/// each piece sorted, ordered by smallest node.
pub(super) fn fragments(graph: &CityGraph, members: &[u32]) -> Vec<Vec<u32>> {
    let mut inside = vec![false; graph.n() as usize + 1];
    for &v in members {
        inside[v as usize] = true;
    }
    let mut seen = vec![false; graph.n() as usize + 1];
    let mut out = Vec::new();
    for &v in members {
        if seen[v as usize] {
            continue;
        }
        let mut part = Vec::new();
        let mut stack = vec![v];
        seen[v as usize] = true;
        while let Some(u) = stack.pop() {
            part.push(u);
            for &w in graph.neighbors(u) {
                if inside[w as usize] && !seen[w as usize] {
                    seen[w as usize] = true;
                    stack.push(w);
                }
            }
        }
        part.sort_unstable();
        out.push(part);
    }
    out
}

/// Moves disconnected fragments between clusters until every cluster induces
/// a connected subgraph. Each round picks the globally smallest fragment of
/// any split cluster (ties towards the lowest node id) and hands it to the
/// adjacent cluster whose centroid is nearest to the fragment's own (ties
/// towards the lower cluster index); a fragment bordering no other cluster
/// becomes a cluster of its own. Every move lowers the total fragment count,
/// so the loop terminates.
fn repair_connectivity(
    graph: &CityGraph,
    coords: &[(f64, f64)],
    weights: &[f64],
    clusters: &mut Vec<Vec<u32>>,
) {
    loop {
        let mut split: Vec<(usize, Vec<u32>)> = Vec::new();
        for (ci, cluster) in clusters.iter().enumerate() {
            let parts = fragments(graph, cluster);
            if parts.len() > 1 {
                split.extend(parts.into_iter().map(|part| (ci, part)));
            }
        }
        let Some((ci, frag)) =
            split.into_iter().min_by(|a, b| a.1.len().cmp(&b.1.len()).then(a.1[0].cmp(&b.1[0])))
        else {
            return;
        };

        let mut membership = vec![usize::MAX; graph.n() as usize + 1];
        for (cj, cluster) in clusters.iter().enumerate() {
            for &v in cluster {
                membership[v as usize] = cj;
            }
        }
        let mut adjacent: BTreeSet<usize> = BTreeSet::new();
        for &v in &frag {
            for &w in graph.neighbors(v) {
                let cj = membership[w as usize];
                if cj != ci && cj != usize::MAX {
                    adjacent.insert(cj);
                }
            }
        }

        clusters[ci].retain(|v| !frag.contains(v));
        if adjacent.is_empty() {
            clusters.push(frag);
            continue;
        }
        let anchor = mean_point(coords, weights, &frag);
        let target = adjacent
            .into_iter()
            .min_by(|&a, &b| {
                let da = dist2(anchor, mean_point(coords, weights, &clusters[a]));
                let db = dist2(anchor, mean_point(coords, weights, &clusters[b]));
                da.partial_cmp(&db).expect("coordinates are finite").then(a.cmp(&b))
            })
            .expect("fragment borders at least one cluster");
        clusters[target].extend(frag);
        clusters[target].sort_unstable();
    }
}

/// Weighted mean coordinate of `members`, plain mean when their weights sum
/// to zero.
fn mean_point(coords: &[(f64, f64)], weights: &[f64], members: &[u32]) -> (f64, f64) {
    let mut wsum = 0.0f64;
    let mut x = 0.0f64;
    let mut y = 0.0f64;
    for &v in members {
        let i = v as usize - 1;
        wsum += weights[i];
        x += weights[i] * coords[i].0;
        y += weights[i] * coords[i].1;
    }
    if wsum > 0.0 {
        (x / wsum, y / wsum)
    } else {
        let m = members.len() as f64;
        let (sx, sy) = members.iter().fold((0.0, 0.0), |acc, &v| {
            let i = v as usize - 1;
            (acc.0 + coords[i].0, acc.1 + coords[i].1)
        });
        (sx / m, sy / m)
    }
}
