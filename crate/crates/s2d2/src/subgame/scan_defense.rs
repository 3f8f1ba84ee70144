//! Candidate watcher policies for one zone against a set of raid plans.
//!
//! Recursive construction: at each decision step the watcher's next node is
//! chosen, the consistent plans are advanced one step against it and split
//! into groups by the observation they produce, and each group is handled
//! recursively. A policy emerges as one sub-policy per observation branch;
//! the candidate set at a node is the cross product of the per-branch sets,
//! capped (with a flag) by `defense_cap`.
//!
//! Pruning, per the catch proxy: a next node is dropped when another one
//! promises a weakly earlier catch against every consistent plan and a
//! strictly earlier one against some plan (exact ties are all kept). When a
//! single plan remains consistent, the recursion collapses to the policy
//! that walks the interception route and waits. Once no consistent plan can
//! be intercepted before its last strike, further branching cannot change
//! any outcome, so the subtree collapses to hovering.

use std::collections::BTreeMap;
use std::rc::Rc;

use super::catch::{first_interceptable, significant_targets};
use super::{SolveMode, SubgameError, SubgameOptions};
use crate::model::{
    AttackPlan, CityGraph, GameConfig, ModelError, Obs, ObsKey, Pos, PolicyBranch, PolicyNode,
    PolicyTree, Visibility,
};

/// Result of the defense scan.
#[derive(Debug, Clone)]
pub struct DefenseScan {
    pub policies: Vec<PolicyTree>,
    /// True when `defense_cap` truncated the candidate set.
    pub truncated: bool,
}

/// One plan's playout state from the watcher's bookkeeping point of view.
#[derive(Debug, Clone, PartialEq, Eq)]
struct PlanState {
    idx: usize,
    pos: Pos,
    payload: u32,
    revealed: bool,
    destroyed: Vec<u32>,
    u_a: i64,
    u_d: i64,
}

impl PlanState {
    fn fresh(idx: usize, plan: &AttackPlan, payload: u32) -> Self {
        PlanState {
            idx,
            pos: Pos::At(plan.path[0]),
            payload,
            revealed: false,
            destroyed: Vec::new(),
            u_a: 0,
            u_d: 0,
        }
    }
}

struct Scan<'a> {
    zone: &'a CityGraph,
    plans: &'a [AttackPlan],
    battery: u32,
    delta: u64,
    vis: Visibility,
    cap: usize,
    exact: bool,
    exact_dominance: bool,
    explosion_limit: u64,
    dists: BTreeMap<u32, Rc<Vec<u32>>>,
    memo: BTreeMap<Vec<u32>, Rc<Vec<(u32, PolicyNode)>>>,
    truncated: bool,
}

fn closed_neighborhood(zone: &CityGraph, v: u32) -> Vec<u32> {
    let mut out = zone.neighbors(v).to_vec();
    let slot = out.binary_search(&v).unwrap_err();
    out.insert(slot, v);
    out
}

impl<'a> Scan<'a> {
    fn new(
        zone: &'a CityGraph,
        plans: &'a [AttackPlan],
        config: &GameConfig,
        options: &SubgameOptions,
    ) -> Self {
        let exact = options.mode == SolveMode::Exact;
        Scan {
            zone,
            plans,
            battery: config.battery,
            delta: options.delta,
            vis: options.visibility,
            cap: if exact { usize::MAX } else { options.defense_cap.max(1) },
            exact,
            exact_dominance: options.exact_dominance,
            explosion_limit: options.explosion_limit,
            dists: BTreeMap::new(),
            memo: BTreeMap::new(),
            truncated: false,
        }
    }

    fn dists(&mut self, v: u32) -> Rc<Vec<u32>> {
        if let Some(d) = self.dists.get(&v) {
            return Rc::clone(d);
        }
        let d = Rc::new(self.zone.bfs_dists(v));
        self.dists.insert(v, Rc::clone(&d));
        d
    }

    /// Advances one plan state through step `t` against a watcher at `def`,
    /// mirroring the playout engine: move, co-location catch, strike (credit
    /// once per node), payload exhaustion, observation snapshot.
    fn advance(&self, st: &mut PlanState, t: u32, def: u32) -> ObsKey {
        let plan = &self.plans[st.idx];
        if t == 1 {
            st.pos = Pos::At(plan.path[0]);
        } else if let Pos::At(_) = st.pos {
            st.pos = Pos::At(plan.path[(t - 1) as usize]);
        }
        if let Pos::At(v) = st.pos {
            if v == def {
                st.pos = Pos::Down;
            }
        }
        if let Pos::At(v) = st.pos {
            if plan.strike_at(t).is_some() && st.payload > 0 {
                st.payload -= 1;
                st.revealed = true;
                if let Err(slot) = st.destroyed.binary_search(&v) {
                    st.u_a += self.zone.reward(v) as i64;
                    st.u_d += self.zone.penalty(v);
                    st.destroyed.insert(slot, v);
                }
            }
        }
        if matches!(st.pos, Pos::At(_)) && st.payload == 0 {
            st.pos = Pos::Down;
        }
        let obs = match st.pos {
            Pos::Down => Obs::Down,
            Pos::At(v) => match self.vis {
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
        ObsKey { pos: obs, destroyed: st.destroyed.clone() }
    }

    /// Per-plan catch scores for a candidate node `m` occupied at step `t`:
    /// the 1-based index of the first significant target still interceptable
    /// (arrival `t + d` by the strike step), or `len+1` as sentinel. With
    /// `exact_dominance`, the negated future defender utility of chasing
    /// from `m` instead.
    fn scores(&mut self, m: u32, t: u32, states: &[PlanState], targets: &[Vec<(u32, u32)>]) -> Vec<i64> {
        if self.exact_dominance {
            return states.iter().map(|st| -self.chase_value(m, t, st)).collect();
        }
        let dists = self.dists(m);
        states
            .iter()
            .zip(targets)
            .map(|(st, tg)| {
                if matches!(st.pos, Pos::Down) && t > 1 {
                    return (tg.len() + 1) as i64;
                }
                first_interceptable(&dists, tg, t) as i64
            })
            .collect()
    }

    /// Defender utility accumulated from step `t` on when the watcher moves
    /// to `m` now and then follows interception routes greedily.
    fn chase_value(&mut self, m: u32, t: u32, st: &PlanState) -> i64 {
        let mut st = st.clone();
        let before = st.u_d;
        let mut pos = m;
        for step in t..=self.battery {
            if step > t {
                let targets =
                    significant_targets(self.zone, &self.plans[st.idx], &st.destroyed, self.delta, step);
                let dists = self.dists(pos);
                let idx = first_interceptable(&dists, &targets, step - 1);
                if idx <= targets.len() {
                    let (node, _) = targets[idx - 1];
                    if let Some(route) = self.zone.shortest_path(pos, node) {
                        if route.len() > 1 {
                            pos = route[1];
                        }
                    }
                }
            }
            self.advance(&mut st, step, pos);
        }
        st.u_d - before
    }

    /// True when, with the watcher at `m` after step `t`, no consistent
    /// surviving plan can be intercepted at or before its last strike —
    /// every continuation then yields identical outcomes.
    fn settled_after(&mut self, m: u32, t: u32, advanced: &[PlanState]) -> bool {
        for st in advanced {
            if !matches!(st.pos, Pos::At(_)) {
                continue;
            }
            let plan = &self.plans[st.idx];
            let last = match plan.attacks.iter().copied().filter(|&tau| tau > t).max() {
                Some(l) => l,
                None => continue,
            };
            let dists = self.dists(m);
            for tau in (t + 1)..=last {
                let node = plan.path[(tau - 1) as usize];
                let d = dists[node as usize];
                if d != u32::MAX && d <= tau - t {
                    return false;
                }
            }
        }
        true
    }

    /// Interception chain against a single consistent plan: walk the
    /// shortest route to the first protectable significant target and wait
    /// there; hover when nothing is protectable. Returns the step-`t` move
    /// and the branch structure below it.
    fn chain(&mut self, t: u32, prev: u32, st: &PlanState) -> (u32, PolicyNode) {
        let targets =
            significant_targets(self.zone, &self.plans[st.idx], &st.destroyed, self.delta, t);
        let dists = self.dists(prev);
        let idx = if matches!(st.pos, Pos::Down) {
            targets.len() + 1
        } else {
            first_interceptable(&dists, &targets, t - 1)
        };
        let mv = if idx <= targets.len() {
            let (node, _) = targets[idx - 1];
            match self.zone.shortest_path(prev, node) {
                Some(route) if route.len() > 1 => route[1],
                _ => prev,
            }
        } else {
            prev
        };
        let mut st2 = st.clone();
        let key = self.advance(&mut st2, t, mv);
        if t == self.battery {
            return (mv, PolicyNode::default());
        }
        let (mv2, node2) = self.chain(t + 1, mv, &st2);
        if mv2 == mv && node2.branches.is_empty() {
            // All-hover tail: the replay falls back to hovering off-tree.
            return (mv, PolicyNode::default());
        }
        let mut node = PolicyNode::default();
        node.branches.insert(key, PolicyBranch { mv: mv2, then: node2 });
        (mv, node)
    }

    fn memo_key(t: u32, prev: Option<u32>, moves: &[u32], states: &[PlanState]) -> Vec<u32> {
        let mut key = Vec::with_capacity(4 + moves.len() + states.len() * 6);
        key.push(t);
        key.push(prev.map_or(0, |p| p + 1));
        key.push(moves.len() as u32);
        key.extend_from_slice(moves);
        for st in states {
            key.push(st.idx as u32);
            key.push(match st.pos {
                Pos::Down => 0,
                Pos::At(v) => v,
            });
            key.push(st.payload);
            key.push(st.revealed as u32);
            key.push(st.destroyed.len() as u32);
            key.extend_from_slice(&st.destroyed);
        }
        key
    }

    /// Candidate (step-`t` move, branching below) pairs for an information
    /// set whose consistent plans are in `states` (end-of-step-`t−1` form).
    fn candidates_for(
        &mut self,
        t: u32,
        prev: Option<u32>,
        moves: &[u32],
        states: &[PlanState],
    ) -> Result<Rc<Vec<(u32, PolicyNode)>>, SubgameError> {
        let key = Self::memo_key(t, prev, moves, states);
        if let Some(hit) = self.memo.get(&key) {
            return Ok(Rc::clone(hit));
        }

        // Reduced-mode base case: one consistent plan left — delegate to the
        // interception chain instead of branching.
        if !self.exact && states.len() == 1 {
            if let Some(p) = prev {
                let cand = self.chain(t, p, &states[0]);
                let out = Rc::new(vec![cand]);
                self.memo.insert(key, Rc::clone(&out));
                return Ok(out);
            }
        }

        let targets: Vec<Vec<(u32, u32)>> = states
            .iter()
            .map(|st| {
                significant_targets(self.zone, &self.plans[st.idx], &st.destroyed, self.delta, t)
            })
            .collect();
        let scored: Vec<(u32, Vec<i64>)> =
            moves.iter().map(|&m| (m, self.scores(m, t, states, &targets))).collect();

        // Nothing significant is interceptable from anywhere, ever: one
        // representative (hovering) stands for all continuations.
        if !self.exact_dominance {
            let all_sentinel = scored
                .iter()
                .all(|(_, vec)| {
                    vec.iter().zip(&targets).all(|(&s, tg)| s == (tg.len() + 1) as i64)
                });
            if all_sentinel {
                let stay = prev.filter(|p| moves.contains(p)).unwrap_or(moves[0]);
                let out = Rc::new(vec![(stay, PolicyNode::default())]);
                self.memo.insert(key, Rc::clone(&out));
                return Ok(out);
            }
        }

        // Weak dominance with strict improvement; exact ties all survive.
        let kept: Vec<(u32, &Vec<i64>)> = scored
            .iter()
            .enumerate()
            .filter(|(i, (_, vec))| {
                !scored.iter().enumerate().any(|(j, (_, other))| {
                    j != *i
                        && other.iter().zip(vec.iter()).all(|(o, v)| o <= v)
                        && other.iter().zip(vec.iter()).any(|(o, v)| o < v)
                })
            })
            .map(|(_, (m, vec))| (*m, vec))
            .collect();

        let mut out: Vec<(u32, PolicyNode)> = Vec::new();
        'moves: for &(m, _) in &kept {
            let mut advanced: Vec<(ObsKey, PlanState)> = Vec::with_capacity(states.len());
            for st in states {
                let mut st2 = st.clone();
                let k = self.advance(&mut st2, t, m);
                advanced.push((k, st2));
            }
            let after: Vec<PlanState> = advanced.iter().map(|(_, s)| s.clone()).collect();
            if t == self.battery || self.settled_after(m, t, &after) {
                if out.len() >= self.cap {
                    self.truncated = true;
                    break 'moves;
                }
                out.push((m, PolicyNode::default()));
                continue;
            }
            let mut groups: BTreeMap<ObsKey, Vec<PlanState>> = BTreeMap::new();
            for (k, st) in advanced {
                groups.entry(k).or_default().push(st);
            }
            let next_moves = closed_neighborhood(self.zone, m);
            let mut subs: Vec<(ObsKey, Rc<Vec<(u32, PolicyNode)>>)> = Vec::with_capacity(groups.len());
            for (k, group) in groups {
                let sub = self.candidates_for(t + 1, Some(m), &next_moves, &group)?;
                subs.push((k, sub));
            }
            let mut combos: u128 = 1;
            for (_, sub) in &subs {
                combos = combos.saturating_mul(sub.len() as u128);
            }
            if self.exact && combos > self.explosion_limit as u128 {
                return Err(ModelError::Explosion {
                    estimated: combos,
                    limit: self.explosion_limit,
                }
                .into());
            }
            // Cross product of per-branch candidates, odometer order (last
            // branch fastest); stops with the flag when the cap bites.
            let mut digits = vec![0usize; subs.len()];
            loop {
                if out.len() >= self.cap {
                    self.truncated = true;
                    break 'moves;
                }
                let mut node = PolicyNode::default();
                for (d, (k, sub)) in digits.iter().zip(&subs) {
                    let (mv, then) = &sub[*d];
                    node.branches.insert(k.clone(), PolicyBranch { mv: *mv, then: then.clone() });
                }
                out.push((m, node));
                let mut slot = subs.len();
                loop {
                    if slot == 0 {
                        digits.clear();
                        break;
                    }
                    slot -= 1;
                    digits[slot] += 1;
                    if digits[slot] < subs[slot].1.len() {
                        break;
                    }
                    digits[slot] = 0;
                    if slot == 0 {
                        digits.clear();
                        break;
                    }
                }
                if digits.is_empty() {
                    break;
                }
            }
        }

        let out = Rc::new(out);
        self.memo.insert(key, Rc::clone(&out));
        Ok(out)
    }
}

/// Runs the scan from a set of permitted placement nodes. Used with all zone
/// nodes by the subgame solver and with a single node by
/// [`scan_defense_strategies`].
pub(crate) fn defense_candidates(
    zone: &CityGraph,
    attacks: &[AttackPlan],
    config: &GameConfig,
    options: &SubgameOptions,
    starts: &[u32],
) -> Result<DefenseScan, SubgameError> {
    if attacks.is_empty() {
        return Err(ModelError::InvalidStrategy("defense scan needs at least one plan".into()).into());
    }
    for plan in attacks {
        plan.validate(zone, config.battery, config.payload)?;
    }
    let mut scan = Scan::new(zone, attacks, config, options);
    let states: Vec<PlanState> =
        attacks.iter().enumerate().map(|(i, p)| PlanState::fresh(i, p, config.payload)).collect();
    let roots = scan.candidates_for(1, None, starts, &states)?;
    let policies =
        roots.iter().map(|(start, root)| PolicyTree { start: *start, root: root.clone() }).collect();
    Ok(DefenseScan { policies, truncated: scan.truncated })
}

/// Candidate watcher policies with placement fixed at `v_d`, against plans
/// that all start at `v_a`. The returned set carries at most
/// `options.defense_cap` policies; `truncated` reports whether the cap bit.
pub fn scan_defense_strategies(
    zone: &CityGraph,
    v_d: u32,
    v_a: u32,
    attacks: &[AttackPlan],
    config: &GameConfig,
    options: &SubgameOptions,
) -> Result<DefenseScan, SubgameError> {
    if !zone.contains(v_d) || !zone.contains(v_a) {
        return Err(ModelError::InvalidStrategy(format!(
            "positions ({v_d}, {v_a}) outside the zone"
        ))
        .into());
    }
    for plan in attacks {
        if plan.path.first() != Some(&v_a) {
            return Err(ModelError::InvalidStrategy(format!(
                "plan starts at {:?}, expected {v_a}",
                plan.path.first()
            ))
            .into());
        }
    }
    defense_candidates(zone, attacks, config, options, &[v_d])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rollout, AttackerPureStrategy};

    fn path4() -> CityGraph {
        CityGraph::new(
            vec![0, 0, 0, 9],
            vec![0, 0, 0, -9],
            &[(1, 2), (2, 3), (3, 4)],
            None,
        )
        .unwrap()
    }

    /// Star used for the observation-branching example: center 2 with leaves
    /// 1 and 3 carrying value, plus a watcher roost at 4.
    fn crossroads() -> CityGraph {
        CityGraph::new(
            vec![4, 0, 4, 0],
            vec![-4, 0, -4, 0],
            &[(1, 2), (2, 3), (2, 4)],
            None,
        )
        .unwrap()
    }

    fn opts() -> SubgameOptions {
        SubgameOptions::default()
    }

    #[test]
    fn state_advance_matches_the_playout_engine() {
        let zone = path4();
        let plan = AttackPlan { path: vec![4, 3, 2], attacks: vec![1, 3] };
        let config = GameConfig::sized(1, 1, 3, 2);
        for vis in [Visibility::AlwaysVisible, Visibility::FirstStrike] {
            let options = SubgameOptions { visibility: vis, ..opts() };
            let scan = Scan::new(&zone, std::slice::from_ref(&plan), &config, &options);
            let mut st = PlanState::fresh(0, &plan, 2);
            let keys: Vec<ObsKey> =
                (1..=3).map(|t| scan.advance(&mut st, t, 1)).collect();
            let run = rollout(
                &zone,
                &config,
                &[PolicyTree::parked(1)],
                &AttackerPureStrategy::single(plan.clone()),
                vis,
            )
            .unwrap();
            let expected: Vec<ObsKey> = run
                .observations
                .iter()
                .map(|o| ObsKey { pos: o.obs[0], destroyed: o.destroyed.clone() })
                .collect();
            assert_eq!(keys, expected, "visibility {vis:?}");
            assert_eq!(st.u_a, run.u_a);
            assert_eq!(st.u_d, run.u_d);
        }
    }

    #[test]
    fn lone_plan_yields_the_interception_chain() {
        let zone = path4();
        let plan = AttackPlan { path: vec![2, 3, 4], attacks: vec![3] };
        let config = GameConfig::sized(1, 1, 3, 1);
        let scan =
            scan_defense_strategies(&zone, 2, 2, std::slice::from_ref(&plan), &config, &opts())
                .unwrap();
        assert!(!scan.truncated);
        assert_eq!(scan.policies.len(), 1);
        // Placement on the raider's own start catches it immediately.
        let run = rollout(
            &zone,
            &config,
            &[scan.policies[0].clone()],
            &AttackerPureStrategy::single(plan),
            Visibility::AlwaysVisible,
        )
        .unwrap();
        assert_eq!((run.u_a, run.u_d), (0, 0));
    }

    #[test]
    fn out_of_reach_raid_collapses_to_a_parked_policy() {
        // Both plans blow up node 5 at placement; nothing is interceptable
        // from the far end, and afterwards there is nothing left to protect,
        // so the scan returns exactly one parked policy rather than a
        // thicket of equivalent wanderings.
        let zone = CityGraph::new(
            vec![0, 0, 0, 0, 7],
            vec![0, 0, 0, 0, -7],
            &[(1, 2), (2, 3), (3, 4), (4, 5)],
            None,
        )
        .unwrap();
        let plans = vec![
            AttackPlan { path: vec![5, 5], attacks: vec![1] },
            AttackPlan { path: vec![5, 4], attacks: vec![1] },
        ];
        let config = GameConfig::sized(1, 1, 2, 1);
        let scan = scan_defense_strategies(&zone, 1, 5, &plans, &config, &opts()).unwrap();
        assert_eq!(scan.policies, vec![PolicyTree::parked(1)]);
        assert!(!scan.truncated);
    }

    #[test]
    fn branches_react_to_the_observed_move() {
        // From the roost the watcher must step to the center, then follow
        // whichever leaf the raider turned towards; one lifted policy with a
        // sub-policy per observation branch.
        let zone = crossroads();
        let plans = vec![
            AttackPlan { path: vec![2, 1, 1], attacks: vec![3] },
            AttackPlan { path: vec![2, 3, 3], attacks: vec![3] },
        ];
        let config = GameConfig::sized(1, 1, 3, 1);
        let scan = scan_defense_strategies(&zone, 4, 2, &plans, &config, &opts()).unwrap();
        assert_eq!(scan.policies.len(), 1);
        let tree = &scan.policies[0];
        assert_eq!(tree.start, 4);
        let step1 = tree
            .root
            .branches
            .get(&ObsKey { pos: Obs::At(2), destroyed: vec![] })
            .expect("both plans share the placement observation");
        assert_eq!(step1.mv, 2);
        let left = step1.then.branches.get(&ObsKey { pos: Obs::At(1), destroyed: vec![] }).unwrap();
        let right = step1.then.branches.get(&ObsKey { pos: Obs::At(3), destroyed: vec![] }).unwrap();
        assert_eq!((left.mv, right.mv), (1, 3));
        // And the policy really stops both raids.
        for plan in &plans {
            let run = rollout(
                &zone,
                &config,
                &[tree.clone()],
                &AttackerPureStrategy::single(plan.clone()),
                Visibility::AlwaysVisible,
            )
            .unwrap();
            assert_eq!((run.u_a, run.u_d), (0, 0), "plan {plan:?}");
        }
    }

    #[test]
    fn exact_dominance_agrees_here() {
        let zone = crossroads();
        let plans = vec![
            AttackPlan { path: vec![2, 1, 1], attacks: vec![3] },
            AttackPlan { path: vec![2, 3, 3], attacks: vec![3] },
        ];
        let config = GameConfig::sized(1, 1, 3, 1);
        let proxy = scan_defense_strategies(&zone, 4, 2, &plans, &config, &opts()).unwrap();
        let exact = scan_defense_strategies(
            &zone,
            4,
            2,
            &plans,
            &config,
            &SubgameOptions { exact_dominance: true, ..opts() },
        )
        .unwrap();
        assert_eq!(proxy.policies, exact.policies);
    }

    #[test]
    fn horizon_of_one_leaves_only_placement() {
        let zone = path4();
        let plan = AttackPlan { path: vec![4], attacks: vec![1] };
        let config = GameConfig::sized(1, 1, 1, 1);
        let scan =
            scan_defense_strategies(&zone, 4, 4, std::slice::from_ref(&plan), &config, &opts())
                .unwrap();
        assert_eq!(scan.policies, vec![PolicyTree::parked(4)]);
    }

    #[test]
    fn cap_truncates_with_a_flag() {
        // Three equally good placements (all catch both campers in time):
        // ties survive pruning, so the cap has to bite.
        let zone = CityGraph::new(
            vec![5, 0, 5],
            vec![-5, 0, -5],
            &[(1, 2), (2, 3)],
            None,
        )
        .unwrap();
        let plans = vec![
            AttackPlan { path: vec![1, 1, 1], attacks: vec![3] },
            AttackPlan { path: vec![3, 3, 3], attacks: vec![3] },
        ];
        let config = GameConfig::sized(1, 1, 3, 1);
        let full =
            defense_candidates(&zone, &plans, &config, &opts(), &[1, 2, 3]).unwrap();
        assert!(full.policies.len() >= 3);
        assert!(!full.truncated);
        let capped = defense_candidates(
            &zone,
            &plans,
            &config,
            &SubgameOptions { defense_cap: 2, ..opts() },
            &[1, 2, 3],
        )
        .unwrap();
        assert_eq!(capped.policies.len(), 2);
        assert!(capped.truncated);
        assert_eq!(capped.policies, full.policies[..2].to_vec());
    }

    #[test]
    fn chains_walk_and_wait() {
        // Watcher two hops away, strike at t=3: the chain closes the gap and
        // the raid dies at the target node.
        let zone = path4();
        let plan = AttackPlan { path: vec![4, 4, 4], attacks: vec![3] };
        let config = GameConfig::sized(1, 1, 3, 1);
        let scan =
            scan_defense_strategies(&zone, 2, 4, std::slice::from_ref(&plan), &config, &opts())
                .unwrap();
        assert_eq!(scan.policies.len(), 1);
        let tree = &scan.policies[0];
        // t=2 move towards the target, t=3 onto it.
        let run = rollout(
            &zone,
            &config,
            &[tree.clone()],
            &AttackerPureStrategy::single(plan),
            Visibility::AlwaysVisible,
        )
        .unwrap();
        assert_eq!((run.u_a, run.u_d), (0, 0));
        assert_eq!(run.trace[2].defenders, vec![4]);
        assert_eq!(run.trace[2].attackers, vec![Pos::Down]);
    }
}
