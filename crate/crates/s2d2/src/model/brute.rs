//! Exact one-on-one equilibrium search over the full strategy spaces.
//!
//! The defender's contingency space is explored as an observation tree:
//! nodes are information sets (what the defender has seen and done), edges
//! are moves, and realization weights over edges form the sequence form of
//! the defense. For every candidate attacker strategy we solve one LP that
//! maximizes defender utility subject to the candidate being an attacker
//! best response; the best candidate over all LPs is the equilibrium, which
//! matches the leader's optimistic tie-breaking. The returned mixture is
//! recovered from the optimal realization weights by peeling pure
//! contingency trees off the flow.
//!
//! Playouts here use a dedicated single-drone stepper rather than the
//! general rollout so the two implementations check each other in tests.

use std::collections::BTreeMap;

use crate::optim::{solve_lp, LinearProgram, LpOutcome, Row, Sense};

use super::{
    enumerate_attacker_strategies, AttackPlan, CityGraph, GameConfig, MixedDefense, ModelError,
    Obs, ObsKey, PolicyBranch, PolicyNode, PolicyTree, Pos, Visibility,
};

/// Equilibrium of a one-on-one instance: the optimal mixed defense, the
/// attacker best response it induces, and the equilibrium utilities.
#[derive(Debug, Clone)]
pub struct SseOutcome {
    pub defense: MixedDefense<PolicyTree>,
    pub attack: AttackPlan,
    pub u_a: f64,
    pub u_d: f64,
}

/// One attacker drone's live state in the dedicated stepper.
#[derive(Debug, Clone)]
struct SimState {
    att: Pos,
    payload: u32,
    destroyed: Vec<u32>, // sorted
    revealed: bool,
    u_a: i64,
    u_d: i64,
}

impl SimState {
    fn initial(plan: &AttackPlan, payload: u32) -> SimState {
        SimState {
            att: Pos::At(plan.path[0]),
            payload,
            destroyed: Vec::new(),
            revealed: false,
            u_a: 0,
            u_d: 0,
        }
    }
}

/// Advances one step: move (t ≥ 2), catch on co-location, strike, payload
/// elimination. Returns the key the defender observes at the end of the
/// step. `defender` is `None` for undefended playouts.
fn advance(
    graph: &CityGraph,
    plan: &AttackPlan,
    st: &mut SimState,
    t: u32,
    defender: Option<u32>,
    vis: Visibility,
) -> ObsKey {
    if t >= 2 {
        if let Pos::At(_) = st.att {
            st.att = Pos::At(plan.path[(t - 1) as usize]);
        }
    }
    if let (Pos::At(v), Some(d)) = (st.att, defender) {
        if v == d {
            st.att = Pos::Down;
        }
    }
    if let Pos::At(v) = st.att {
        if plan.strike_at(t).is_some() && st.payload > 0 {
            st.payload -= 1;
            st.revealed = true;
            if let Err(slot) = st.destroyed.binary_search(&v) {
                st.u_a += graph.reward(v) as i64;
                st.u_d += graph.penalty(v);
                st.destroyed.insert(slot, v);
            }
        }
    }
    if matches!(st.att, Pos::At(_)) && st.payload == 0 {
        st.att = Pos::Down;
    }
    let pos = match st.att {
        Pos::Down => Obs::Down,
        Pos::At(v) => match vis {
            Visibility::AlwaysVisible => Obs::At(v),
            Visibility::FirstStrike => {
                if st.revealed {
                    Obs::At(v)
                } else {
                    Obs::Hidden
                }
            }
        },
    };
    ObsKey { pos, destroyed: st.destroyed.clone() }
}

/// Utilities of a plan played out with no defender on the board.
fn undefended(graph: &CityGraph, plan: &AttackPlan, payload: u32, battery: u32) -> (i64, i64) {
    let mut st = SimState::initial(plan, payload);
    for t in 1..=battery {
        advance(graph, plan, &mut st, t, None, Visibility::AlwaysVisible);
    }
    (st.u_a, st.u_d)
}

fn closed_neighborhood(graph: &CityGraph, v: u32) -> Vec<u32> {
    let mut out = graph.neighbors(v).to_vec();
    let slot = out.binary_search(&v).unwrap_err();
    out.insert(slot, v);
    out
}

struct TreeEdge {
    /// Defender position after this move.
    to: u32,
    /// Child information sets (empty when the edge is terminal).
    children: Vec<usize>,
    /// Terminal payoffs: (attacker strategy index, blended u_a, blended u_d).
    leaf: Vec<(usize, f64, f64)>,
}

struct TreeInfo {
    parent_edge: Option<usize>,
    /// Observation that selects this information set under the parent edge.
    obs: Option<ObsKey>,
    edges: Vec<usize>,
}

struct TreeBuilder<'a> {
    graph: &'a CityGraph,
    plans: &'a [AttackPlan],
    /// Undefended (u_a, u_d) per plan, for λ-blending.
    greedy: &'a [(i64, i64)],
    vis: Visibility,
    battery: u32,
    lambda: f64,
    edge_cap: u64,
    edges: Vec<TreeEdge>,
    infos: Vec<TreeInfo>,
}

impl TreeBuilder<'_> {
    fn blend(&self, s: usize, u_a: i64, u_d: i64) -> (f64, f64) {
        let (ga, gd) = self.greedy[s];
        (
            self.lambda * u_a as f64 + (1.0 - self.lambda) * ga as f64,
            self.lambda * u_d as f64 + (1.0 - self.lambda) * gd as f64,
        )
    }

    /// Expands the information set where the defender, at `pos` (None =
    /// pre-placement), picks its move for step `t` knowing `states` are the
    /// attacker strategies consistent with what it has seen.
    fn build(
        &mut self,
        t: u32,
        pos: Option<u32>,
        parent_edge: Option<usize>,
        obs: Option<ObsKey>,
        states: Vec<(usize, SimState)>,
    ) -> Result<usize, ModelError> {
        let info_id = self.infos.len();
        self.infos.push(TreeInfo { parent_edge, obs, edges: Vec::new() });

        let actions: Vec<u32> = match pos {
            None => self.graph.nodes().collect(),
            Some(v) => closed_neighborhood(self.graph, v),
        };
        for to in actions {
            if self.edges.len() as u64 >= self.edge_cap {
                return Err(ModelError::Explosion {
                    estimated: self.edges.len() as u128 + 1,
                    limit: self.edge_cap,
                });
            }
            let edge_id = self.edges.len();
            self.edges.push(TreeEdge { to, children: Vec::new(), leaf: Vec::new() });
            self.infos[info_id].edges.push(edge_id);

            let mut advanced: Vec<(usize, SimState, ObsKey)> = Vec::with_capacity(states.len());
            for (s, st) in &states {
                let mut next = st.clone();
                let key = advance(self.graph, &self.plans[*s], &mut next, t, Some(to), self.vis);
                advanced.push((*s, next, key));
            }

            if t == self.battery || self.settled(to, t, &advanced) {
                // Nothing the defender does from here changes any outcome:
                // hover out the clock and record the payoffs.
                for (s, mut st, _) in advanced {
                    for tau in (t + 1)..=self.battery {
                        advance(self.graph, &self.plans[s], &mut st, tau, Some(to), self.vis);
                    }
                    let (ua, ud) = self.blend(s, st.u_a, st.u_d);
                    self.edges[edge_id].leaf.push((s, ua, ud));
                }
            } else {
                let mut groups: BTreeMap<ObsKey, Vec<(usize, SimState)>> = BTreeMap::new();
                for (s, st, key) in advanced {
                    groups.entry(key).or_default().push((s, st));
                }
                for (key, group) in groups {
                    let child = self.build(t + 1, Some(to), Some(edge_id), Some(key), group)?;
                    self.edges[edge_id].children.push(child);
                }
            }
        }
        Ok(info_id)
    }

    /// Conservative check that the defender at `def_pos` after step `t` can
    /// no longer reach any consistent drone at or before its last pending
    /// strike. When true, every continuation yields identical payoffs, so
    /// the subtree is not expanded.
    fn settled(&self, def_pos: u32, t: u32, advanced: &[(usize, SimState, ObsKey)]) -> bool {
        let mut dist: Option<Vec<u32>> = None;
        for (s, st, _) in advanced {
            if !matches!(st.att, Pos::At(_)) {
                continue;
            }
            let plan = &self.plans[*s];
            let Some(last) = plan.attacks.iter().copied().filter(|&tau| tau > t).max() else {
                continue;
            };
            let d = dist.get_or_insert_with(|| self.graph.bfs_dists(def_pos));
            for tau in (t + 1)..=last {
                let node = plan.path[(tau - 1) as usize];
                let dn = d[node as usize];
                if dn != u32::MAX && dn as u64 <= (tau - t) as u64 {
                    return false;
                }
            }
        }
        true
    }
}

/// Greedily peels pure contingency trees off a realization-weight vector.
/// Each pass picks the highest-flow edge at every reached information set
/// (ties to the lower edge id), subtracts the bottleneck, and emits the
/// selection as one mixture atom; the subtraction preserves flow
/// conservation, so at most one pass per edge is needed.
fn peel(
    infos: &[TreeInfo],
    edges: &[TreeEdge],
    flows: &mut [f64],
    tol: f64,
) -> Vec<(Vec<PolicyTree>, f64)> {
    fn select(
        info: usize,
        infos: &[TreeInfo],
        edges: &[TreeEdge],
        flows: &[f64],
        chosen: &mut Vec<usize>,
    ) -> (u32, PolicyNode) {
        let mut best = infos[info].edges[0];
        for &e in &infos[info].edges[1..] {
            if flows[e] > flows[best] {
                best = e;
            }
        }
        chosen.push(best);
        let mut node = PolicyNode::default();
        for &child in &edges[best].children {
            let key = infos[child].obs.clone().expect("non-root info set has an observation");
            let (mv, then) = select(child, infos, edges, flows, chosen);
            node.branches.insert(key, PolicyBranch { mv, then });
        }
        (edges[best].to, node)
    }

    let mut atoms: Vec<(Vec<PolicyTree>, f64)> = Vec::new();
    for _ in 0..edges.len() + 8 {
        let root_flow: f64 = infos[0].edges.iter().map(|&e| flows[e]).sum();
        if root_flow <= tol {
            break;
        }
        let mut chosen = Vec::new();
        let (start, root) = select(0, infos, edges, flows, &mut chosen);
        let w = chosen.iter().map(|&e| flows[e]).fold(f64::INFINITY, f64::min);
        if !(w > 0.0) {
            break;
        }
        for &e in &chosen {
            flows[e] = (flows[e] - w).max(0.0);
        }
        atoms.push((vec![PolicyTree { start, root }], w));
    }
    let total: f64 = atoms.iter().map(|(_, w)| w).sum();
    let mut out: Vec<(Vec<PolicyTree>, f64)> = atoms
        .into_iter()
        .filter(|(_, w)| *w / total > 1e-12)
        .map(|(p, w)| (p, w / total))
        .collect();
    // Renormalize the survivors exactly.
    let kept: f64 = out.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut out {
        *w /= kept;
    }
    out
}

/// Exact equilibrium for A = D = 1 by exhausting both strategy spaces.
/// `lambda` blends every playout with its undefended counterpart
/// (λ=1 is the plain game); `limit` caps both the attacker enumeration and
/// the defender tree size. Ties between equally good defenses resolve
/// toward the higher attacker utility, then the earlier candidate.
pub fn brute_force_sse(
    graph: &CityGraph,
    config: &GameConfig,
    vis: Visibility,
    lambda: f64,
    limit: u64,
) -> Result<SseOutcome, ModelError> {
    config.validate()?;
    if config.attackers != 1 || config.defenders != 1 {
        return Err(ModelError::Unsupported(format!(
            "exhaustive equilibrium search handles exactly one drone per side (A={}, D={})",
            config.attackers, config.defenders
        )));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(ModelError::LambdaRange(lambda));
    }

    let plans = enumerate_attacker_strategies(graph, config.battery, config.payload, None, limit)?;
    let greedy: Vec<(i64, i64)> =
        plans.iter().map(|p| undefended(graph, p, config.payload, config.battery)).collect();

    let mut builder = TreeBuilder {
        graph,
        plans: &plans,
        greedy: &greedy,
        vis,
        battery: config.battery,
        lambda,
        edge_cap: limit.min(100_000),
        edges: Vec::new(),
        infos: Vec::new(),
    };
    let states: Vec<(usize, SimState)> = plans
        .iter()
        .enumerate()
        .map(|(i, p)| (i, SimState::initial(p, config.payload)))
        .collect();
    builder.build(1, None, None, None, states)?;
    let TreeBuilder { edges, infos, .. } = builder;

    // Leaf coefficients per strategy: which terminal edges it reaches and
    // with what payoffs. Realization weights over any strategy's terminal
    // edges sum to 1, which is what lets λ-blending live in the
    // coefficients.
    let mut strat_leaves: Vec<Vec<(usize, f64, f64)>> = vec![Vec::new(); plans.len()];
    for (e, edge) in edges.iter().enumerate() {
        for &(s, ua, ud) in &edge.leaf {
            strat_leaves[s].push((e, ua, ud));
        }
    }

    // Strategies with identical attacker coefficient vectors impose the same
    // best-response constraint; identical (u_a, u_d) vectors make the same
    // candidate. Deduplicate both, keeping the earliest strategy.
    let mut br_class: BTreeMap<Vec<(usize, u64)>, usize> = BTreeMap::new();
    let mut cand_class: BTreeMap<Vec<(usize, u64, u64)>, usize> = BTreeMap::new();
    let mut ua_key: Vec<Vec<(usize, u64)>> = Vec::with_capacity(plans.len());
    for (s, leaves) in strat_leaves.iter().enumerate() {
        let ka: Vec<(usize, u64)> = leaves.iter().map(|&(e, ua, _)| (e, ua.to_bits())).collect();
        let kf: Vec<(usize, u64, u64)> =
            leaves.iter().map(|&(e, ua, ud)| (e, ua.to_bits(), ud.to_bits())).collect();
        br_class.entry(ka.clone()).or_insert(s);
        cand_class.entry(kf).or_insert(s);
        ua_key.push(ka);
    }
    let br_reps: Vec<usize> = {
        let mut v: Vec<usize> = br_class.values().copied().collect();
        v.sort_unstable();
        v
    };

    // Candidates ordered by an optimistic bound on the defender value: the
    // best single leaf payoff the candidate can yield.
    let mut candidates: Vec<(usize, f64)> = cand_class
        .values()
        .map(|&s| {
            let ub = strat_leaves[s].iter().map(|&(_, _, ud)| ud).fold(f64::NEG_INFINITY, f64::max);
            (s, ub)
        })
        .collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let nvars = edges.len();
    let flow_rows: Vec<Row> = {
        let mut rows = Vec::with_capacity(infos.len());
        rows.push(Row {
            coeffs: infos[0].edges.iter().map(|&e| (e, 1.0)).collect(),
            sense: Sense::Eq,
            rhs: 1.0,
        });
        for info in &infos[1..] {
            let mut coeffs: Vec<(usize, f64)> = info.edges.iter().map(|&e| (e, 1.0)).collect();
            coeffs.push((info.parent_edge.expect("non-root"), -1.0));
            rows.push(Row { coeffs, sense: Sense::Eq, rhs: 0.0 });
        }
        rows
    };

    let tie = 1e-9;
    let mut best: Option<(f64, f64, usize, Vec<f64>)> = None; // (u_d, u_a, strategy, flows)
    for &(cand, ub) in &candidates {
        if let Some((bv, ..)) = &best {
            if ub <= *bv + tie {
                break;
            }
        }
        let mut objective = vec![0.0; nvars];
        for &(e, _, ud) in &strat_leaves[cand] {
            objective[e] = ud;
        }
        let mut rows = flow_rows.clone();
        for &rep in &br_reps {
            if ua_key[rep] == ua_key[cand] {
                continue;
            }
            let mut coeffs: BTreeMap<usize, f64> = BTreeMap::new();
            for &(e, ua, _) in &strat_leaves[rep] {
                *coeffs.entry(e).or_insert(0.0) += ua;
            }
            for &(e, ua, _) in &strat_leaves[cand] {
                *coeffs.entry(e).or_insert(0.0) -= ua;
            }
            rows.push(Row {
                coeffs: coeffs.into_iter().filter(|&(_, c)| c != 0.0).collect(),
                sense: Sense::Le,
                rhs: 0.0,
            });
        }
        let lp = LinearProgram {
            objective,
            rows,
            bounds: vec![(0.0, f64::INFINITY); nvars],
        };
        let sol = match solve_lp(&lp, config.lp_tolerance)? {
            LpOutcome::Optimal(s) => s,
            LpOutcome::Infeasible => continue, // candidate can't be a best response
            LpOutcome::Unbounded => {
                return Err(ModelError::Unsupported("unbounded defense flow".into()))
            }
        };
        let ua_val: f64 = strat_leaves[cand].iter().map(|&(e, ua, _)| ua * sol.point[e]).sum();
        let take = match &best {
            None => true,
            Some((bv, ba, _, _)) => {
                sol.value > *bv + tie || ((sol.value - *bv).abs() <= tie && ua_val > *ba + tie)
            }
        };
        if take {
            best = Some((sol.value, ua_val, cand, sol.point));
        }
    }

    let Some((u_d, u_a, cand, mut flows)) = best else {
        return Err(ModelError::Unsupported(
            "no attacker strategy is supportable as a best response".into(),
        ));
    };
    let support = peel(&infos, &edges, &mut flows, 1e-9);
    let defense = MixedDefense { support };
    defense.validate(1, config.lp_tolerance)?;
    Ok(SseOutcome { defense, attack: plans[cand].clone(), u_a, u_d })
}

#[cfg(test)]
mod tests {
    use super::super::{mixed_utility, AttackerPureStrategy, DEFAULT_EXPLOSION_LIMIT};
    use super::*;

    fn cfg(battery: u32, payload: u32) -> GameConfig {
        GameConfig::sized(1, 1, battery, payload)
    }

    fn sse(graph: &CityGraph, config: &GameConfig) -> SseOutcome {
        brute_force_sse(graph, config, Visibility::FirstStrike, 1.0, DEFAULT_EXPLOSION_LIMIT)
            .unwrap()
    }

    /// Hub 1 worthless, leaves 2 and 3 rewarded 10 and 6.
    fn star_10_6() -> CityGraph {
        CityGraph::new(vec![0, 10, 6], vec![0, -10, -6], &[(1, 2), (1, 3)], None).unwrap()
    }

    #[test]
    fn lone_rewarded_node_is_fully_covered() {
        let g = CityGraph::new(vec![5], vec![-5], &[], None).unwrap();
        let out = sse(&g, &cfg(1, 1));
        assert_eq!(out.u_a, 0.0);
        assert_eq!(out.u_d, 0.0);
        assert_eq!(out.defense.support.len(), 1);
        let (policies, w) = &out.defense.support[0];
        assert_eq!(policies[0].start, 1);
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn null_game_is_worthless_for_both() {
        let g = CityGraph::new(vec![0, 0, 0], vec![0, 0, 0], &[(1, 2), (2, 3)], None).unwrap();
        let out = sse(&g, &cfg(2, 1));
        assert_eq!((out.u_a, out.u_d), (0.0, 0.0));
    }

    #[test]
    fn star_coverage_equalizes_attacker_payoffs() {
        let out = sse(&star_10_6(), &cfg(1, 1));
        assert!((out.u_a - 3.75).abs() < 1e-9, "u_a = {}", out.u_a);
        assert!((out.u_d + 3.75).abs() < 1e-9, "u_d = {}", out.u_d);
        let coverage = |node: u32| -> f64 {
            out.defense
                .support
                .iter()
                .filter(|(p, _)| p[0].start == node)
                .map(|(_, w)| w)
                .sum()
        };
        assert!((coverage(2) - 0.625).abs() < 1e-9);
        assert!((coverage(3) - 0.375).abs() < 1e-9);
        assert_eq!(out.attack.path, vec![2]);
        assert_eq!(out.attack.attacks, vec![1]);
    }

    #[test]
    fn hovering_guard_shuts_out_a_single_target() {
        // Only node 2 is worth anything; the defender parks on it.
        let g = CityGraph::new(vec![0, 9], vec![0, -9], &[(1, 2)], None).unwrap();
        let out = sse(&g, &cfg(2, 1));
        assert_eq!((out.u_a, out.u_d), (0.0, 0.0));
    }

    #[test]
    fn lambda_zero_ignores_the_defense() {
        let out = brute_force_sse(
            &star_10_6(),
            &cfg(1, 1),
            Visibility::FirstStrike,
            0.0,
            DEFAULT_EXPLOSION_LIMIT,
        )
        .unwrap();
        assert!((out.u_a - 10.0).abs() < 1e-9);
        assert!((out.u_d + 10.0).abs() < 1e-9);
    }

    #[test]
    fn equilibrium_replays_identically_through_the_rollout_engine() {
        for (g, config) in [
            (star_10_6(), cfg(1, 1)),
            (
                CityGraph::new(vec![5, 0, 7], vec![-5, 0, -7], &[(1, 2), (2, 3)], None).unwrap(),
                cfg(2, 1),
            ),
        ] {
            let out = sse(&g, &config);
            let attack = AttackerPureStrategy::single(out.attack.clone());
            let (ua, ud) =
                mixed_utility(&g, &config, &out.defense, &attack, Visibility::FirstStrike)
                    .unwrap();
            assert!((ua - out.u_a).abs() < 1e-6, "u_a replay {ua} vs {}", out.u_a);
            assert!((ud - out.u_d).abs() < 1e-6, "u_d replay {ud} vs {}", out.u_d);
        }
    }

    #[test]
    fn beats_every_coarse_grid_mixture() {
        let g = star_10_6();
        let config = cfg(1, 1);
        let plans =
            enumerate_attacker_strategies(&g, 1, 1, None, DEFAULT_EXPLOSION_LIMIT).unwrap();
        let out = sse(&g, &config);
        for tenths1 in 0..=10u32 {
            for tenths2 in 0..=(10 - tenths1) {
                let probs = [tenths1, tenths2, 10 - tenths1 - tenths2];
                let support: Vec<(Vec<PolicyTree>, f64)> = probs
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0)
                    .map(|(i, &p)| (vec![PolicyTree::parked(i as u32 + 1)], p as f64 / 10.0))
                    .collect();
                let mix = MixedDefense { support };
                // Attacker best response with ties resolved toward the
                // defender, as the equilibrium definition prescribes.
                let mut br = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                for plan in &plans {
                    let attack = AttackerPureStrategy::single(plan.clone());
                    let (ua, ud) =
                        mixed_utility(&g, &config, &mix, &attack, Visibility::FirstStrike)
                            .unwrap();
                    if ua > br.0 + 1e-12 || ((ua - br.0).abs() <= 1e-12 && ud > br.1) {
                        br = (ua, ud);
                    }
                }
                assert!(
                    out.u_d + 1e-9 >= br.1,
                    "grid mixture {probs:?} reaches {} but the equilibrium claims {}",
                    br.1,
                    out.u_d
                );
            }
        }
    }

    #[test]
    fn rejects_multi_drone_configs() {
        let g = star_10_6();
        let bad = GameConfig::sized(2, 1, 1, 1);
        assert!(matches!(
            brute_force_sse(&g, &bad, Visibility::FirstStrike, 1.0, DEFAULT_EXPLOSION_LIMIT),
            Err(ModelError::Unsupported(_))
        ));
    }

    #[test]
    fn policy_trees_branch_on_observations() {
        // Line 1-2-3-4 with valuables at the ends; B=3 lets the defender
        // start in the middle and react. The peeled trees must be playable
        // and at least as good as any static parking spot.
        let g = CityGraph::new(
            vec![8, 0, 0, 8],
            vec![-8, 0, 0, -8],
            &[(1, 2), (2, 3), (3, 4)],
            None,
        )
        .unwrap();
        let config = cfg(3, 1);
        let out = brute_force_sse(
            &g,
            &config,
            Visibility::AlwaysVisible,
            1.0,
            DEFAULT_EXPLOSION_LIMIT,
        )
        .unwrap();
        let attack = AttackerPureStrategy::single(out.attack.clone());
        let (ua, ud) =
            mixed_utility(&g, &config, &out.defense, &attack, Visibility::AlwaysVisible).unwrap();
        assert!((ua - out.u_a).abs() < 1e-6);
        assert!((ud - out.u_d).abs() < 1e-6);

        let plans = enumerate_attacker_strategies(&g, 3, 1, None, DEFAULT_EXPLOSION_LIMIT).unwrap();
        let parked_best = g
            .nodes()
            .map(|v| {
                let mix = MixedDefense::pure(vec![PolicyTree::parked(v)]);
                let mut br = (f64::NEG_INFINITY, 0.0);
                for plan in &plans {
                    let attack = AttackerPureStrategy::single(plan.clone());
                    let (ua, ud) =
                        mixed_utility(&g, &config, &mix, &attack, Visibility::AlwaysVisible)
                            .unwrap();
                    if ua > br.0 {
                        br = (ua, ud);
                    }
                }
                br.1
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(out.u_d >= parked_best - 1e-9);
    }
}
