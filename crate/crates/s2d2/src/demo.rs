//! A small hand-built city used by tests and examples.
//!
//! The map has 41 nodes: three rich districts (reward pairs {5,7}, {23,28},
//! {32,37}, each pair 3–4 hops apart with a guard post at nodes 2, 1 and 3
//! respectively), one poor outpost (node 40) on a long spur, and a gray
//! periphery of spokes joined at a hub (node 20). Rich districts are at
//! least 11 hops from each other and from the outpost, so short-range
//! analyses treat them as independent. The graph is a tree with planar
//! coordinates.

use crate::model::{CityGraph, DefensePolicy, Obs, StepObs};

/// Rewarded nodes of the three rich districts.
pub const TOY_RICH: [u32; 6] = [5, 7, 23, 28, 32, 37];
/// The low-value outpost.
pub const TOY_POOR: u32 = 40;
/// Guard posts, one per rich district in the order {5,7}, {23,28}, {32,37}.
pub const TOY_POSTS: [u32; 3] = [2, 1, 3];

/// Builds the toy city with the given reward at the six rich nodes and at
/// the poor outpost; penalties are the negated rewards.
pub fn toy_city(rich: u64, poor: u64) -> CityGraph {
    let n = 41usize;
    let mut rewards = vec![0u64; n];
    for &v in &TOY_RICH {
        rewards[v as usize - 1] = rich;
    }
    rewards[TOY_POOR as usize - 1] = poor;
    let penalties: Vec<i64> = rewards.iter().map(|&r| -(r as i64)).collect();

    let edges: [(u32, u32); 40] = [
        // Rich district around post 2: chain 5-4-2-6-7.
        (5, 4),
        (4, 2),
        (2, 6),
        (6, 7),
        // Rich district around post 1: chain 28-27-1-22-23.
        (28, 27),
        (27, 1),
        (1, 22),
        (22, 23),
        // Rich district around post 3: chain 3-37-38-39-32.
        (3, 37),
        (37, 38),
        (38, 39),
        (39, 32),
        // Spokes from the hub (20) to each post.
        (2, 8),
        (8, 9),
        (9, 10),
        (10, 20),
        (1, 24),
        (24, 25),
        (25, 26),
        (26, 20),
        (3, 33),
        (33, 34),
        (34, 35),
        (35, 20),
        // Long spur to the poor outpost.
        (20, 11),
        (11, 12),
        (12, 13),
        (13, 21),
        (21, 29),
        (29, 40),
        // Gray padding leaves.
        (20, 14),
        (14, 15),
        (10, 16),
        (9, 17),
        (26, 18),
        (25, 19),
        (12, 30),
        (13, 31),
        (21, 36),
        (29, 41),
    ];

    let coords: Vec<(f64, f64)> = (1..=n as u32).map(toy_coord).collect();
    CityGraph::new(rewards, penalties, &edges, Some(coords))
        .expect("the toy city is a valid graph")
}

fn toy_coord(v: u32) -> (f64, f64) {
    match v {
        // Hub and spoke toward post 2 (upward).
        20 => (0.0, 0.0),
        10 => (0.0, 1.0),
        9 => (0.0, 2.0),
        8 => (0.0, 3.0),
        2 => (0.0, 4.0),
        4 => (-1.0, 5.0),
        5 => (-2.0, 6.0),
        6 => (1.0, 5.0),
        7 => (2.0, 6.0),
        // Spoke toward post 1 (lower left).
        26 => (-0.9, -0.5),
        25 => (-1.7, -1.0),
        24 => (-2.6, -1.5),
        1 => (-3.5, -2.0),
        27 => (-4.4, -1.5),
        28 => (-5.2, -1.0),
        22 => (-4.4, -2.5),
        23 => (-5.2, -3.0),
        // Spoke toward post 3 (lower right).
        35 => (0.9, -0.5),
        34 => (1.7, -1.0),
        33 => (2.6, -1.5),
        3 => (3.5, -2.0),
        37 => (4.4, -1.5),
        38 => (5.2, -1.0),
        39 => (6.1, -0.5),
        32 => (7.0, 0.0),
        // Poor spur (upper left).
        11 => (-1.0, 0.5),
        12 => (-2.0, 1.0),
        13 => (-3.0, 1.5),
        21 => (-4.0, 2.0),
        29 => (-5.0, 2.5),
        40 => (-6.0, 3.0),
        // Padding.
        14 => (0.7, 0.7),
        15 => (1.4, 1.4),
        16 => (1.0, 1.0),
        17 => (1.0, 2.0),
        18 => (-0.9, -1.5),
        19 => (-1.7, -2.0),
        30 => (-2.0, 2.0),
        31 => (-3.0, 2.5),
        36 => (-4.0, 3.0),
        41 => (-5.0, 3.5),
        _ => unreachable!("toy city has 41 nodes"),
    }
}

/// Defense policy that hops along a shortest path toward the nearest
/// currently-observed attacker, re-aiming every step; hovers while nothing
/// is visible.
pub struct ChaseClosest<'a> {
    pub graph: &'a CityGraph,
    pub start: u32,
}

impl DefensePolicy for ChaseClosest<'_> {
    fn start(&self) -> u32 {
        self.start
    }

    fn next_move(&self, _t: u32, own: u32, seen: &[StepObs]) -> u32 {
        let Some(latest) = seen.last() else { return own };
        let dist = self.graph.bfs_dists(own);
        let mut target: Option<(u32, u32)> = None; // (distance, node)
        for obs in &latest.obs {
            if let Obs::At(v) = *obs {
                let d = dist[v as usize];
                if d != u32::MAX && target.map_or(true, |(bd, _)| d < bd) {
                    target = Some((d, v));
                }
            }
        }
        match target {
            Some((_, v)) if v != own => self.graph.shortest_path(own, v).expect("reachable")[1],
            _ => own,
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::model::{
        mixed_utility, rollout, AttackPlan, AttackerPureStrategy, GameConfig, MixedDefense, Pos,
        Visibility,
    };

    use super::*;

    #[test]
    fn toy_city_layout() {
        let g = toy_city(1, 1);
        assert_eq!(g.n(), 41);
        assert_eq!(g.components().len(), 1);
        // Guard posts sit centrally in their districts.
        assert_eq!(g.bfs_dists(1)[28], 2);
        assert_eq!(g.bfs_dists(1)[23], 2);
        assert_eq!(g.bfs_dists(2)[5], 2);
        assert_eq!(g.bfs_dists(2)[7], 2);
        assert_eq!(g.bfs_dists(3)[37], 1);
        assert_eq!(g.bfs_dists(3)[32], 4);
        // Rewarded pairs are co-raidable on one battery...
        assert_eq!(g.bfs_dists(5)[7], 4);
        assert_eq!(g.bfs_dists(28)[23], 4);
        assert_eq!(g.bfs_dists(37)[32], 3);
        // ...but districts are far apart from each other and from the outpost.
        for &a in &TOY_RICH {
            for &b in TOY_RICH.iter().filter(|&&b| b > a) {
                let d = g.bfs_dists(a)[b as usize];
                if !(d <= 4) {
                    assert!(d >= 11, "d({a},{b}) = {d}");
                }
            }
            assert!(g.bfs_dists(a)[TOY_POOR as usize] >= 11);
        }
        assert!(g.has_coords());
    }

    /// The two-district raid: one drone sweeps 37→38→39→32 striking the
    /// ends, the other sweeps 28→27→1→22→23 striking the ends.
    fn stated_attack() -> AttackerPureStrategy {
        AttackerPureStrategy {
            drones: vec![
                AttackPlan { path: vec![37, 38, 39, 32, 32], attacks: vec![1, 4] },
                AttackPlan { path: vec![28, 27, 1, 22, 23], attacks: vec![1, 5] },
            ],
        }
    }

    #[test]
    fn chasers_intercept_the_slow_raider_but_not_the_fast_one() {
        let g = toy_city(1, 1);
        let cfg = GameConfig::sized(2, 2, 5, 2);
        let defense =
            [ChaseClosest { graph: &g, start: 3 }, ChaseClosest { graph: &g, start: 1 }];
        let r = rollout(&g, &cfg, &defense, &stated_attack(), Visibility::FirstStrike).unwrap();
        // The guard at 1 meets the second drone at node 27 on step 2,
        // before its second strike lands; the guard at 3 trails the first
        // drone one hop behind the whole way.
        assert_eq!(r.trace[1].attackers[1], Pos::Down);
        assert_eq!(r.trace[1].defenders[1], 27);
        assert_eq!(r.trace[4].destroyed, vec![28, 32, 37]);
        assert_eq!((r.u_a, r.u_d), (3, -3));
    }

    #[test]
    fn guard_rotation_intercepts_two_thirds_of_the_time() {
        let g = toy_city(1, 1);
        let cfg = GameConfig::sized(2, 2, 5, 2);
        let chase = |v: u32| ChaseClosest { graph: &g, start: v };
        let mixed = MixedDefense {
            support: vec![
                (vec![chase(3), chase(1)], 1.0 / 3.0),
                (vec![chase(2), chase(3)], 1.0 / 3.0),
                (vec![chase(1), chase(2)], 1.0 / 3.0),
            ],
        };
        let attack = stated_attack();
        // Exactly the two atoms fielding a guard at node 1 stop the raid on
        // node 23; the third concedes all four strikes.
        let mut intercepted = 0;
        for (policies, _) in &mixed.support {
            let r = rollout(&g, &cfg, policies, &attack, Visibility::FirstStrike).unwrap();
            if !r.trace[4].destroyed.contains(&23) {
                intercepted += 1;
                assert_eq!(r.u_a, 3);
            } else {
                assert_eq!(r.u_a, 4);
            }
        }
        assert_eq!(intercepted, 2);
        let (ua, ud) = mixed_utility(&g, &cfg, &mixed, &attack, Visibility::FirstStrike).unwrap();
        assert!((ua - 10.0 / 3.0).abs() < 1e-9);
        assert!((ud + 10.0 / 3.0).abs() < 1e-9);
    }
}
