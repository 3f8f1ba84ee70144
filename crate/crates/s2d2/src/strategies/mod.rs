//! End-to-end defense synthesis and the players built around it.
//!
//! [`s2d2`] runs the full pipeline — split the city into neighborhoods,
//! solve each neighborhood's one-on-one duel across the λ grid, then place
//! the defense drones with the allocation program — and returns a
//! [`DefenseSolution`] carrying every stage's output plus the approximation
//! bound when the scale search succeeded. Alongside it live the two players
//! used for head-to-head evaluation: a proportional-patrol baseline defense
//! ([`greedy_baseline`]) whose drones chase raiders toward interceptable
//! targets, and a best-response raider ([`best_response_attacker`]) that
//! reads the solved coverage and picks the neighborhoods and raids that hurt
//! the most.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coarsening::{coarsen, Coarsening, CoarseningError};
use crate::metagame::{solve_meta, MetaCurve, MetaError, MetaSolution};
use crate::model::{
    enumerate_attacker_strategies, greedy_playout, mixed_utility, AttackPlan,
    AttackerPureStrategy, CityGraph, DefensePolicy, GameConfig, MixedDefense, ModelError, Obs,
    PolicyTree, StepObs, Visibility, DEFAULT_EXPLOSION_LIMIT,
};
use crate::subgame::{build_utility_curves, truncate, SubgameError, SubgameOptions, UtilityCurve};

/// Which pipeline stage fell over, wrapping the stage's own error.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("coarsening stage: {0}")]
    Coarsening(#[from] CoarseningError),
    #[error("utility-curve stage, neighborhood {index}: {source}")]
    Curves { index: usize, source: SubgameError },
    #[error("allocation stage: {0}")]
    Allocation(#[from] MetaError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Wall-clock seconds spent in each pipeline stage.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub coarsening_s: f64,
    pub curves_s: f64,
    pub allocation_s: f64,
}

impl StageTimings {
    pub fn total_s(&self) -> f64 {
        self.coarsening_s + self.curves_s + self.allocation_s
    }
}

/// Everything the pipeline commits to: the city split, one utility curve per
/// neighborhood (each λ breakpoint carrying the duel's defense mix and the
/// raid it answers), the drone allocation over those neighborhoods, and the
/// quality bound.
///
/// `epsilon` is `Some` exactly when the coarsening's scale search succeeded
/// (`coarsening.delta` is `Some`); the clustering fallback comes with no
/// guarantee.
#[derive(Debug, Clone)]
pub struct DefenseSolution {
    pub coarsening: Coarsening,
    /// One curve per neighborhood, in `coarsening.neighborhoods` order. The
    /// stored policies and raids use zone-local node ids (position in the
    /// sorted member list, 1-based).
    pub curves: Vec<UtilityCurve>,
    pub meta: MetaSolution,
    /// Suboptimality bound on the defender's committed value, when the
    /// returned split supports one.
    pub epsilon: Option<f64>,
    pub runtime_breakdown: StageTimings,
}

impl DefenseSolution {
    /// Coverage probability assigned to one neighborhood.
    pub fn coverage(&self, neighborhood: usize) -> f64 {
        self.meta.coverage[neighborhood]
    }

    /// The defense mix a covering drone plays in `neighborhood`: the one
    /// solved at the λ breakpoint nearest the neighborhood's coverage, which
    /// is the commitment the allocation program priced.
    pub fn defense_mix_for(&self, neighborhood: usize) -> &MixedDefense<PolicyTree> {
        &self.curves[neighborhood].nearest_point(self.meta.coverage[neighborhood]).defense_mix
    }
}

/// Defender suboptimality bound of a solution built at scale `delta`:
/// `2·attackers·payload·delta + 2·duel_error`.
pub fn error_bound(delta: f64, attackers: u32, payload: u32, duel_error: f64) -> f64 {
    2.0 * attackers as f64 * payload as f64 * delta + 2.0 * duel_error
}

/// Bound on the error a single duel contributes when its curve is only
/// trusted up to the λ cutoff: `lambda_cutoff·payload·max_reward`.
pub fn epsilon_prime(lambda_cutoff: f64, payload: u32, max_reward: u64) -> f64 {
    lambda_cutoff * payload as f64 * max_reward as f64
}

/// Runs the full S2D2 pipeline: coarsen the city, build each neighborhood's
/// utility curve over the λ grid (on stakes truncated at the coarsening's
/// scale), and solve the drone-allocation program over those curves.
///
/// The returned bound is [`error_bound`] with [`epsilon_prime`] plugged in
/// when the scale search succeeded, and `None` after the clustering
/// fallback.
pub fn s2d2(graph: &CityGraph, config: &GameConfig) -> Result<DefenseSolution, PipelineError> {
    config.validate()?;

    let clock = Instant::now();
    let coarsening = coarsen(graph, config)?;
    let coarsening_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let duel = GameConfig { attackers: 1, defenders: 1, ..config.clone() };
    let options = SubgameOptions { delta: coarsening.effective_delta, ..SubgameOptions::default() };
    let mut curves = Vec::with_capacity(coarsening.neighborhoods.len());
    for (index, hood) in coarsening.neighborhoods.iter().enumerate() {
        let (zone, _) = graph
            .induced(hood)
            .map_err(|e| PipelineError::Curves { index, source: e.into() })?;
        let trimmed = truncate(&zone, coarsening.effective_delta);
        let curve = build_utility_curves(&trimmed, index as u32, &duel, &options)
            .map_err(|source| PipelineError::Curves { index, source })?;
        curves.push(curve);
    }
    let curves_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let meta_curves: Vec<MetaCurve> = curves.iter().map(MetaCurve::from).collect();
    let meta = solve_meta(&meta_curves, config.attackers, config.defenders, config)?;
    let allocation_s = clock.elapsed().as_secs_f64();

    let epsilon = coarsening.delta.map(|d| {
        let duel_error = epsilon_prime(config.lambda_cutoff, config.payload, graph.max_reward());
        error_bound(d as f64, config.attackers, config.payload, duel_error)
    });

    Ok(DefenseSolution {
        coarsening,
        curves,
        meta,
        epsilon,
        runtime_breakdown: StageTimings { coarsening_s, curves_s, allocation_s },
    })
}

/// The `payload` most attractive raid targets among `candidates`, skipping
/// `excluded` (sorted): highest reward first, reward ties to the node the
/// defender minds losing more (larger |penalty|), then to the lower id.
fn top_payload_nodes(
    graph: &CityGraph,
    candidates: &[u32],
    payload: u32,
    excluded: &[u32],
) -> Vec<u32> {
    let mut alive: Vec<u32> = candidates
        .iter()
        .copied()
        .filter(|v| excluded.binary_search(v).is_err())
        .collect();
    alive.sort_by(|&a, &b| {
        graph
            .reward(b)
            .cmp(&graph.reward(a))
            .then_with(|| graph.penalty(b).unsigned_abs().cmp(&graph.penalty(a).unsigned_abs()))
            .then_with(|| a.cmp(&b))
    });
    alive.truncate(payload as usize);
    alive
}

/// Spreads `drones` units of coverage proportionally to `weights`, clamping
/// every entry to 1 and handing each round's excess back to the still-open
/// entries, again proportionally. All-zero weights spread uniformly.
/// Zero-weight entries stay at zero even when budget is left over.
fn proportional_coverage(weights: &[f64], drones: u32) -> Vec<f64> {
    let n = weights.len();
    let mut cover = vec![0.0; n];
    if n == 0 || drones == 0 {
        return cover;
    }
    let uniform = vec![1.0; n];
    let w: &[f64] = if weights.iter().sum::<f64>() > 0.0 { weights } else { &uniform };
    let mut open = vec![true; n];
    loop {
        let budget = drones as f64 - cover.iter().sum::<f64>();
        let pool: f64 = (0..n).filter(|&i| open[i]).map(|i| w[i]).sum();
        if budget <= 0.0 || pool <= 0.0 {
            return cover;
        }
        let mut clamped = false;
        for i in 0..n {
            if open[i] && budget * w[i] / pool >= 1.0 {
                cover[i] = 1.0;
                open[i] = false;
                clamped = true;
            }
        }
        if !clamped {
            for i in 0..n {
                if open[i] {
                    cover[i] = budget * w[i] / pool;
                }
            }
            return cover;
        }
    }
}

/// The baseline defense: per-neighborhood coverage proportional to how much
/// the defender stands to lose there, plus a chaser policy generator for the
/// drones that land.
#[derive(Debug, Clone)]
pub struct BaselineDefense {
    /// Coverage per neighborhood, each in [0, 1], summing to at most the
    /// drone count.
    pub coverage: Vec<f64>,
    /// The raw weights behind the split: summed |penalty| over each
    /// neighborhood's top-payload reward targets.
    pub weights: Vec<f64>,
    /// Sorted member list per neighborhood (city node ids).
    pub members: Vec<Vec<u32>>,
    /// Induced neighborhood graphs (zone-local ids) the chasers navigate.
    pub zones: Vec<CityGraph>,
    pub payload: u32,
    pub delta: u64,
}

impl BaselineDefense {
    /// A chaser for `neighborhood` starting at `start` (a member node).
    pub fn chaser(&self, neighborhood: usize, start: u32) -> Result<BaselineChaser, ModelError> {
        if self.members[neighborhood].binary_search(&start).is_err() {
            return Err(ModelError::InvalidStrategy(format!(
                "chaser start {start} is outside its patrol neighborhood"
            )));
        }
        Ok(BaselineChaser {
            zone: self.zones[neighborhood].clone(),
            members: self.members[neighborhood].clone(),
            start,
            payload: self.payload,
            delta: self.delta,
        })
    }

    /// A chaser with its start drawn uniformly over the neighborhood.
    pub fn draw_chaser(&self, neighborhood: usize, rng: &mut impl Rng) -> BaselineChaser {
        let members = &self.members[neighborhood];
        let start = members[rng.gen_range(0..members.len())];
        self.chaser(neighborhood, start).expect("drawn start is a member")
    }

    /// The neighborhood's full mixed policy: one chaser per possible start,
    /// uniformly weighted. Handy for exact small-case evaluation; samplers
    /// should prefer [`BaselineDefense::draw_chaser`].
    pub fn mixed(&self, neighborhood: usize) -> MixedDefense<BaselineChaser> {
        let members = &self.members[neighborhood];
        let p = 1.0 / members.len() as f64;
        MixedDefense {
            support: members
                .iter()
                .map(|&s| (vec![self.chaser(neighborhood, s).expect("member start")], p))
                .collect(),
        }
    }
}

/// Builds the baseline defense for a coarsened city: each neighborhood is
/// weighed by the |penalty| mass of its top-`payload` reward targets (reward
/// ties going to the larger |penalty|), and `defenders` units of coverage
/// are spread proportionally with per-neighborhood clamping at 1. All-zero
/// weights fall back to a uniform spread.
pub fn greedy_baseline(
    graph: &CityGraph,
    coarsening: &Coarsening,
    delta: u64,
    config: &GameConfig,
) -> Result<BaselineDefense, ModelError> {
    config.validate()?;
    if coarsening.neighborhoods.is_empty() {
        return Err(ModelError::InvalidGraph("no neighborhoods to patrol".into()));
    }
    let mut zones = Vec::with_capacity(coarsening.neighborhoods.len());
    let mut members = Vec::with_capacity(coarsening.neighborhoods.len());
    let mut weights = Vec::with_capacity(coarsening.neighborhoods.len());
    for hood in &coarsening.neighborhoods {
        let (zone, sorted) = graph.induced(hood)?;
        let top = top_payload_nodes(graph, &sorted, config.payload, &[]);
        let w: u64 = top.iter().map(|&v| graph.penalty(v).unsigned_abs()).sum();
        weights.push(w as f64);
        zones.push(zone);
        members.push(sorted);
    }
    let coverage = proportional_coverage(&weights, config.defenders);
    Ok(BaselineDefense { coverage, weights, members, zones, payload: config.payload, delta })
}

/// The baseline's per-drone policy: watch one neighborhood and, while a
/// raider is observed inside it, step along the shortest zone path toward
/// the best interceptable target. Hovers before any sighting and after the
/// raider leaves or goes down, so departure halts the drone observably.
///
/// Per step it hunts the observed raider nearest to itself (ties to the
/// lower node id), then among the still-standing top-`payload` reward
/// targets with |penalty| > `delta` that it can reach no later than that
/// raider, walks toward the one closest to the raider (ties to the lower
/// id). With no such target it closes in on the raider directly.
#[derive(Debug, Clone)]
pub struct BaselineChaser {
    /// Induced neighborhood graph, zone-local ids.
    zone: CityGraph,
    /// Sorted city ids; position (1-based) is the zone-local id.
    members: Vec<u32>,
    start: u32,
    payload: u32,
    delta: u64,
}

impl BaselineChaser {
    /// Builds a chaser patrolling `hood` within `arena` from `start`. The
    /// arena can be the full city or an already-induced zone; only `hood`'s
    /// induced subgraph is navigated either way.
    pub fn new(
        arena: &CityGraph,
        hood: &[u32],
        start: u32,
        payload: u32,
        delta: u64,
    ) -> Result<BaselineChaser, ModelError> {
        let (zone, members) = arena.induced(hood)?;
        if members.binary_search(&start).is_err() {
            return Err(ModelError::InvalidStrategy(format!(
                "chaser start {start} is outside its patrol neighborhood"
            )));
        }
        Ok(BaselineChaser { zone, members, start, payload, delta })
    }

    fn local(&self, arena_id: u32) -> Option<u32> {
        self.members.binary_search(&arena_id).ok().map(|i| i as u32 + 1)
    }

    /// One chase move in zone-local ids.
    fn chase(&self, own: u32, raiders: &[u32], destroyed: &[u32]) -> u32 {
        let dist_own = self.zone.bfs_dists(own);
        let hunted =
            *raiders.iter().min_by_key(|&&a| (dist_own[a as usize], a)).expect("raider in sight");
        let dist_raider = self.zone.bfs_dists(hunted);
        let everyone: Vec<u32> = self.zone.nodes().collect();
        let top = top_payload_nodes(&self.zone, &everyone, self.payload, destroyed);
        let mut goal = hunted;
        let mut best = (u32::MAX, u32::MAX);
        for &v in &top {
            if self.zone.penalty(v).unsigned_abs() <= self.delta {
                continue;
            }
            let (dv_own, dv_raider) = (dist_own[v as usize], dist_raider[v as usize]);
            if dv_own == u32::MAX || dv_raider == u32::MAX || dv_own > dv_raider {
                continue;
            }
            if (dv_raider, v) < best {
                best = (dv_raider, v);
                goal = v;
            }
        }
        match self.zone.shortest_path(own, goal) {
            Some(path) if path.len() > 1 => path[1],
            _ => own,
        }
    }
}

impl DefensePolicy for BaselineChaser {
    fn start(&self) -> u32 {
        self.start
    }

    fn next_move(&self, _t: u32, own: u32, seen: &[StepObs]) -> u32 {
        let (Some(last), Some(own_l)) = (seen.last(), self.local(own)) else {
            return own;
        };
        let raiders: Vec<u32> = last
            .obs
            .iter()
            .filter_map(|o| if let Obs::At(v) = o { self.local(*v) } else { None })
            .collect();
        if raiders.is_empty() {
            return own;
        }
        let destroyed: Vec<u32> =
            last.destroyed.iter().filter_map(|&v| self.local(v)).collect();
        let mv = self.chase(own_l, &raiders, &destroyed);
        self.members[(mv - 1) as usize]
    }
}

/// A raider plan for the whole city built from a solved defense: which
/// neighborhood each drone raids and with what plan (city node ids).
#[derive(Debug, Clone)]
pub struct BestResponseAttack {
    pub strategy: AttackerPureStrategy,
    /// Neighborhood index each drone raids, parallel to `strategy.drones`.
    pub neighborhoods: Vec<usize>,
    /// False when there were fewer neighborhoods than drones and the surplus
    /// had to double up on the best one.
    pub respects_coarsening: bool,
}

/// Rewrites a zone-local plan into the ids of the arena the zone was induced
/// from. `members` is the zone's sorted member list.
pub fn plan_to_original(plan: &AttackPlan, members: &[u32]) -> AttackPlan {
    AttackPlan {
        path: plan.path.iter().map(|&l| members[(l - 1) as usize]).collect(),
        attacks: plan.attacks.clone(),
    }
}

/// Rewrites an arena-id plan into zone-local ids; `None` if the plan ever
/// leaves the member set.
pub fn plan_to_local(plan: &AttackPlan, members: &[u32]) -> Option<AttackPlan> {
    let path = plan
        .path
        .iter()
        .map(|v| members.binary_search(v).ok().map(|i| i as u32 + 1))
        .collect::<Option<Vec<u32>>>()?;
    Some(AttackPlan { path, attacks: plan.attacks.clone() })
}

/// Assembles the output once per-neighborhood scores and plans are known.
fn assemble_attack(
    solution: &DefenseSolution,
    attackers: u32,
    scored: Vec<(usize, f64)>,
    plan_for: impl Fn(usize) -> AttackPlan,
) -> BestResponseAttack {
    let mut order = scored;
    order.sort_by(|a, b| {
        b.1.partial_cmp(&a.1).expect("finite raid scores").then(a.0.cmp(&b.0))
    });

    let mut drones = Vec::with_capacity(attackers as usize);
    let mut neighborhoods = Vec::with_capacity(attackers as usize);
    for &(hood, _) in order.iter().take(attackers as usize) {
        let members = &solution.coarsening.neighborhoods[hood];
        drones.push(plan_to_original(&plan_for(hood), members));
        neighborhoods.push(hood);
    }

    // Short on neighborhoods: every spare drone re-raids the best one with
    // its unhindered plan (the λ=0 breakpoint), which breaks the
    // one-raider-per-neighborhood premise and is flagged as such.
    let respects_coarsening = order.len() >= attackers as usize;
    if !respects_coarsening {
        let top = order[0].0;
        let members = &solution.coarsening.neighborhoods[top];
        let greedy = &solution.curves[top].points[0].attacker_best;
        while drones.len() < attackers as usize {
            drones.push(plan_to_original(greedy, members));
            neighborhoods.push(top);
        }
    }

    BestResponseAttack {
        strategy: AttackerPureStrategy { drones },
        neighborhoods,
        respects_coarsening,
    }
}

/// The raider's answer to a solved defense, read straight off the stored
/// curves: raid the `attackers` neighborhoods whose curves promise the most
/// at their coverage, each with the plan stored at the λ breakpoint nearest
/// that coverage. Deterministic; score ties go to the lower neighborhood
/// index.
///
/// [`best_response_attacker_exact`] trades the stored plans for a fresh
/// enumeration when exactness matters more than speed.
pub fn best_response_attacker(solution: &DefenseSolution, config: &GameConfig) -> BestResponseAttack {
    let scored: Vec<(usize, f64)> = solution
        .curves
        .iter()
        .enumerate()
        .map(|(i, curve)| (i, curve.eval_attacker(solution.meta.coverage[i])))
        .collect();
    assemble_attack(solution, config.attackers, scored, |hood| {
        solution.curves[hood].nearest_point(solution.meta.coverage[hood]).attacker_best.clone()
    })
}

/// Exact variant of [`best_response_attacker`]: for every neighborhood,
/// enumerates all raid plans and evaluates each against the committed
/// defense — caught with the coverage probability and playing the stored
/// mix, unhindered otherwise — then raids the top scorers with the best
/// plans found. Exponential in zone size; meant for validation and small
/// instances.
pub fn best_response_attacker_exact(
    graph: &CityGraph,
    solution: &DefenseSolution,
    config: &GameConfig,
) -> Result<BestResponseAttack, PipelineError> {
    let duel = GameConfig { attackers: 1, defenders: 1, ..config.clone() };
    let mut scored = Vec::with_capacity(solution.curves.len());
    let mut plans = Vec::with_capacity(solution.curves.len());
    for (hood, members) in solution.coarsening.neighborhoods.iter().enumerate() {
        let (zone, _) = graph.induced(members)?;
        let c = solution.meta.coverage[hood].clamp(0.0, 1.0);
        let mix = solution.defense_mix_for(hood);
        let mut best: Option<(f64, AttackPlan)> = None;
        for plan in enumerate_attacker_strategies(
            &zone,
            config.battery,
            config.payload,
            None,
            DEFAULT_EXPLOSION_LIMIT,
        )? {
            let raid = AttackerPureStrategy::single(plan.clone());
            let (covered, _) = mixed_utility(&zone, &duel, mix, &raid, Visibility::AlwaysVisible)?;
            let free = greedy_playout(&zone, &plan).0 as f64;
            let value = c * covered + (1.0 - c) * free;
            if best.as_ref().map_or(true, |(b, _)| value > *b) {
                best = Some((value, plan));
            }
        }
        let (value, plan) = best.expect("every zone admits at least the idle plan");
        scored.push((hood, value));
        plans.push(plan);
    }
    Ok(assemble_attack(solution, config.attackers, scored, |hood| plans[hood].clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coarsening::{Condition, ConditionReport};
    use crate::demo::toy_city;
    use crate::model::rollout;
    use crate::subgame::CurvePoint;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    /// A 47-node path with sixteen rich outposts three apart, zero-sum
    /// elsewhere: the scale search settles at δ=1 and every outpost becomes
    /// its own three-node neighborhood.
    fn outpost_city() -> CityGraph {
        let n = 47u32;
        let mut rewards = vec![0u64; n as usize];
        let mut penalties = vec![0i64; n as usize];
        for k in 0..16 {
            let v = 2 + 3 * k;
            rewards[v - 1] = 10;
            penalties[v - 1] = -10_000;
        }
        let edges: Vec<(u32, u32)> = (1..n).map(|v| (v, v + 1)).collect();
        CityGraph::new(rewards, penalties, &edges, None).unwrap()
    }

    /// Coarsening wrapper for hand-picked neighborhoods, for exercising the
    /// baseline and raider construction without running the scale search.
    fn bare_coarsening(neighborhoods: Vec<Vec<u32>>) -> Coarsening {
        let ok = Condition { holds: true, witness: None };
        Coarsening {
            neighborhoods,
            delta: None,
            effective_delta: 0,
            removed: vec![],
            report: ConditionReport {
                c1_separation: ok.clone(),
                c2a_count: ok.clone(),
                c2b_value_balance: ok.clone(),
                c3_payload_battery: ok.clone(),
                c4_defense_impact: ok,
                kept: vec![],
                poor: vec![],
                impacts: vec![],
            },
            warnings: vec![],
        }
    }

    /// Hand-built single-breakpoint-pair curve: linear from `(top, -top)` at
    /// λ=0 down to `(0, 0)` at λ=1, with distinguishable stored raids (the
    /// λ=0 plan strikes local node 1, the λ=1 plan strikes local node 2).
    fn linear_curve(zone_id: u32, top: f64) -> UtilityCurve {
        let mix = || MixedDefense::pure(vec![PolicyTree::parked(1)]);
        let plan = |node: u32| AttackPlan { path: vec![node], attacks: vec![1] };
        UtilityCurve {
            zone_id,
            points: vec![
                CurvePoint {
                    lambda: 0.0,
                    u_a: top,
                    u_d: -top,
                    defense_mix: mix(),
                    attacker_best: plan(1),
                },
                CurvePoint {
                    lambda: 1.0,
                    u_a: 0.0,
                    u_d: 0.0,
                    defense_mix: mix(),
                    attacker_best: plan(2),
                },
            ],
            greedy_max: top,
            truncated: false,
            diagnostics: vec![],
        }
    }

    fn solution_with(
        neighborhoods: Vec<Vec<u32>>,
        curves: Vec<UtilityCurve>,
        coverage: Vec<f64>,
    ) -> DefenseSolution {
        DefenseSolution {
            coarsening: bare_coarsening(neighborhoods),
            curves,
            meta: MetaSolution {
                coverage,
                attacked: vec![],
                threshold: 0.0,
                value_d: 0.0,
                value_a: 0.0,
                optimal: true,
            },
            epsilon: None,
            runtime_breakdown: StageTimings::default(),
        }
    }

    #[test]
    fn error_bound_is_plain_arithmetic() {
        assert_eq!(error_bound(0.0, 1, 1, 0.0), 0.0);
        assert_eq!(error_bound(1.0, 4, 4, 0.0), 32.0);
        assert_eq!(error_bound(3.0, 2, 2, 1.5), 27.0);
    }

    #[test]
    fn duel_error_bound_is_plain_arithmetic() {
        assert_eq!(epsilon_prime(0.0, 4, 100), 0.0);
        assert_eq!(epsilon_prime(0.5, 4, 10), 20.0);
        assert_eq!(epsilon_prime(1.0, 1, 7), 7.0);
    }

    #[test]
    fn pipeline_solves_the_outpost_city_with_a_bound() {
        let g = outpost_city();
        let config = GameConfig::sized(4, 4, 1, 1);
        let sol = s2d2(&g, &config).unwrap();

        assert_eq!(sol.coarsening.delta, Some(1));
        assert_eq!(sol.curves.len(), 16);
        assert_eq!(sol.meta.coverage.len(), 16);
        assert_eq!(sol.meta.attacked.len(), 4);

        // The bound follows the committed formula exactly, and is present
        // exactly because the scale search succeeded.
        let expected = error_bound(1.0, 4, 1, epsilon_prime(0.5, 1, 10));
        assert_eq!(expected, 18.0);
        assert_eq!(sol.epsilon, Some(expected));

        // Coverage is a feasible drone split.
        let total: f64 = sol.meta.coverage.iter().sum();
        assert!(total <= 4.0 + 1e-6, "coverage total {total}");
        for &c in &sol.meta.coverage {
            assert!((-1e-9..=1.0 + 1e-9).contains(&c));
        }
        for hood in 0..16 {
            sol.defense_mix_for(hood).validate(1, 1e-9).unwrap();
        }
        assert!(sol.runtime_breakdown.total_s() >= 0.0);
    }

    #[test]
    fn pipeline_falls_back_on_the_toy_city_without_a_bound() {
        let g = toy_city(1, 1);
        let config = GameConfig::sized(1, 1, 4, 2);
        let sol = s2d2(&g, &config).unwrap();
        assert_eq!(sol.coarsening.delta, None);
        assert_eq!(sol.epsilon, None);
        assert_eq!(sol.curves.len(), 8);
        let total: f64 = sol.meta.coverage.iter().sum();
        assert!(total <= 1.0 + 1e-6);
    }

    #[test]
    fn pipeline_on_a_worthless_city_is_a_wash() {
        let rewards = vec![0u64; 6];
        let penalties = vec![-1i64; 6];
        let edges: Vec<(u32, u32)> = (1..6).map(|v| (v, v + 1)).collect();
        let coords: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, 0.0)).collect();
        let g = CityGraph::new(rewards, penalties, &edges, Some(coords)).unwrap();
        let sol = s2d2(&g, &GameConfig::sized(1, 1, 2, 1)).unwrap();
        assert_eq!(sol.coarsening.delta, None);
        assert_eq!(sol.epsilon, None);
        assert_eq!(sol.meta.value_d, 0.0);
        assert_eq!(sol.meta.value_a, 0.0);
    }

    #[test]
    fn baseline_weighs_neighborhoods_by_their_top_targets() {
        // Two two-node neighborhoods; payload 1 keeps only the best target
        // of each, so the weights are |−3| and |−1|.
        let g = CityGraph::new(
            vec![10, 0, 10, 0],
            vec![-3, 0, -1, 0],
            &[(1, 2), (3, 4), (2, 3)],
            None,
        )
        .unwrap();
        let coarsening = bare_coarsening(vec![vec![1, 2], vec![3, 4]]);
        let config = GameConfig::sized(1, 1, 2, 1);
        let base = greedy_baseline(&g, &coarsening, 0, &config).unwrap();
        assert_eq!(base.weights, vec![3.0, 1.0]);
        assert_eq!(base.coverage, vec![0.75, 0.25]);
    }

    #[test]
    fn baseline_reward_ties_go_to_the_costlier_node() {
        let g = CityGraph::new(vec![5, 5, 0], vec![-1, -7, 0], &[(1, 2), (2, 3)], None).unwrap();
        let coarsening = bare_coarsening(vec![vec![1, 2, 3]]);
        let config = GameConfig::sized(1, 1, 2, 1);
        let base = greedy_baseline(&g, &coarsening, 0, &config).unwrap();
        assert_eq!(base.weights, vec![7.0]);
        assert_eq!(base.coverage, vec![1.0]);
    }

    #[test]
    fn baseline_clamps_and_hands_excess_onward() {
        let g = CityGraph::new(
            vec![5, 5, 5],
            vec![-10, -10, 0],
            &[(1, 2), (2, 3)],
            None,
        )
        .unwrap();
        let coarsening = bare_coarsening(vec![vec![1], vec![2], vec![3]]);
        let config = GameConfig::sized(1, 2, 2, 1);
        let base = greedy_baseline(&g, &coarsening, 0, &config).unwrap();
        assert_eq!(base.weights, vec![10.0, 10.0, 0.0]);
        assert_eq!(base.coverage, vec![1.0, 1.0, 0.0]);

        // Clamping cascades: with weights 3:1 and three drones, both
        // neighborhoods saturate.
        let g2 = CityGraph::new(vec![5, 5], vec![-3, -1], &[(1, 2)], None).unwrap();
        let c2 = bare_coarsening(vec![vec![1], vec![2]]);
        let base2 =
            greedy_baseline(&g2, &c2, 0, &GameConfig::sized(1, 3, 2, 1)).unwrap();
        assert_eq!(base2.coverage, vec![1.0, 1.0]);
    }

    #[test]
    fn baseline_spreads_uniformly_when_nothing_is_at_stake() {
        let g = CityGraph::new(vec![0, 0, 0, 0], vec![0, 0, 0, 0], &[(1, 2), (3, 4)], None)
            .unwrap();
        let coarsening = bare_coarsening(vec![vec![1, 2], vec![3, 4]]);
        let base =
            greedy_baseline(&g, &coarsening, 0, &GameConfig::sized(1, 1, 2, 1)).unwrap();
        assert_eq!(base.coverage, vec![0.5, 0.5]);
    }

    /// Line 1–…–5 with valuable endpoints for chaser geometry tests.
    fn chase_line() -> CityGraph {
        CityGraph::new(
            vec![10, 0, 0, 0, 8],
            vec![-5, 0, 0, 0, -4],
            &[(1, 2), (2, 3), (3, 4), (4, 5)],
            None,
        )
        .unwrap()
    }

    fn obs_at(positions: &[u32], destroyed: &[u32]) -> StepObs {
        StepObs {
            obs: positions.iter().map(|&v| Obs::At(v)).collect(),
            destroyed: destroyed.to_vec(),
        }
    }

    #[test]
    fn chaser_cuts_off_the_interceptable_target() {
        let g = chase_line();
        let chaser = BaselineChaser::new(&g, &[1, 2, 3, 4, 5], 3, 2, 0).unwrap();
        // Raider at 5: it owns node 5 (distance 0), but node 1 is four steps
        // away from it and only two from the chaser.
        let mv = chaser.next_move(2, 3, &[obs_at(&[5], &[])]);
        assert_eq!(mv, 2);
    }

    #[test]
    fn chaser_hovers_before_sightings_and_after_departures() {
        let g = chase_line();
        let chaser = BaselineChaser::new(&g, &[1, 2, 3], 2, 1, 0).unwrap();
        // Nothing seen yet (hidden raider): hover.
        let hidden = StepObs { obs: vec![Obs::Hidden], destroyed: vec![] };
        assert_eq!(chaser.next_move(2, 2, &[hidden]), 2);
        // Raider outside the neighborhood: hover.
        assert_eq!(chaser.next_move(2, 2, &[obs_at(&[5], &[])]), 2);
        // Raider down: hover.
        let down = StepObs { obs: vec![Obs::Down], destroyed: vec![] };
        assert_eq!(chaser.next_move(2, 2, &[down]), 2);
    }

    #[test]
    fn chaser_stays_inside_its_neighborhood() {
        // Star: hub 4 joins the patrol pair {1, 2} to outside node 3. The
        // shortest city path from 1 to 2 runs through the hub only if the
        // zone lacks the direct edge — give the zone no shortcut and verify
        // the move never leaves the member set.
        let g = CityGraph::new(
            vec![5, 5, 0, 0],
            vec![-5, -5, 0, 0],
            &[(1, 4), (2, 4), (3, 4)],
            None,
        )
        .unwrap();
        let chaser = BaselineChaser::new(&g, &[1, 2, 4], 1, 2, 0).unwrap();
        for own in [1u32, 4] {
            let mv = chaser.next_move(2, own, &[obs_at(&[2], &[])]);
            assert!([1, 2, 4].contains(&mv), "moved to {mv}");
        }
    }

    #[test]
    fn chaser_hunts_the_nearer_raider_and_breaks_target_ties_low() {
        let g = CityGraph::new(
            vec![0, 6, 0, 6, 0],
            vec![0, -5, 0, -5, 0],
            &[(1, 2), (2, 3), (3, 4), (4, 5)],
            None,
        )
        .unwrap();
        let chaser = BaselineChaser::new(&g, &[1, 2, 3, 4, 5], 3, 2, 0).unwrap();
        // Raiders at both ends are equally far: hunt the lower one (node 1),
        // whose closest interceptable target is node 2.
        assert_eq!(chaser.next_move(2, 3, &[obs_at(&[1, 5], &[])]), 2);
        // Only the far raider: its closest target is node 4 instead.
        assert_eq!(chaser.next_move(2, 3, &[obs_at(&[5], &[])]), 4);
    }

    #[test]
    fn chaser_ignores_destroyed_targets_and_then_hunts() {
        let g = chase_line();
        let chaser = BaselineChaser::new(&g, &[1, 2, 3, 4, 5], 3, 2, 0).unwrap();
        // Node 1 already destroyed: node 5 is unreachable-first (raider sits
        // on it), so no target qualifies and the chaser closes in.
        let mv = chaser.next_move(2, 3, &[obs_at(&[5], &[1])]);
        assert_eq!(mv, 4);
    }

    #[test]
    fn chaser_skips_targets_beneath_the_scale() {
        // Same geometry as the interception test, but the far target's
        // penalty is within δ, so only the hunt remains.
        let g = CityGraph::new(
            vec![10, 0, 0, 0, 8],
            vec![-1, 0, 0, 0, -4],
            &[(1, 2), (2, 3), (3, 4), (4, 5)],
            None,
        )
        .unwrap();
        let chaser = BaselineChaser::new(&g, &[1, 2, 3, 4, 5], 3, 2, 1).unwrap();
        let mv = chaser.next_move(2, 3, &[obs_at(&[5], &[])]);
        assert_eq!(mv, 4, "with node 1 beneath the scale the chaser hunts the raider");
    }

    #[test]
    fn chaser_halt_is_visible_in_a_playout() {
        // Path 1–…–6; patrol {1,2,3}; the raider starts inside and leaves at
        // step 2. The chaser commits one step toward the interceptable
        // target, then freezes.
        let g = CityGraph::new(
            vec![0, 5, 0, 0, 0, 0],
            vec![0, -5, 0, 0, 0, 0],
            &[(1, 2), (2, 3), (3, 4), (4, 5), (5, 6)],
            None,
        )
        .unwrap();
        let config = GameConfig::sized(1, 1, 3, 1);
        let chaser = BaselineChaser::new(&g, &[1, 2, 3], 1, 1, 0).unwrap();
        let raid = AttackerPureStrategy::single(AttackPlan {
            path: vec![3, 4, 4],
            attacks: vec![3],
        });
        let run = rollout(&g, &config, &[chaser], &raid, Visibility::AlwaysVisible).unwrap();
        let track: Vec<u32> = run.trace.iter().map(|s| s.defenders[0]).collect();
        assert_eq!(track, vec![1, 2, 2]);
    }

    #[test]
    fn baseline_mixture_is_uniform_over_starts() {
        let g = chase_line();
        let coarsening = bare_coarsening(vec![vec![1, 2, 3], vec![4, 5]]);
        let base =
            greedy_baseline(&g, &coarsening, 0, &GameConfig::sized(1, 1, 2, 1)).unwrap();
        let mix = base.mixed(0);
        assert_eq!(mix.support.len(), 3);
        mix.validate(1, 1e-9).unwrap();
        let starts: Vec<u32> = mix.support.iter().map(|(p, _)| p[0].start()).collect();
        assert_eq!(starts, vec![1, 2, 3]);

        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..200 {
            let c = base.draw_chaser(0, &mut rng);
            assert!([1, 2, 3].contains(&c.start()));
            seen.insert(c.start());
        }
        assert_eq!(seen.len(), 3, "every start should appear over 200 draws");
    }

    #[test]
    fn raider_attacks_the_first_of_tied_neighborhoods() {
        // Curves 10·(1−λ) and 6·(1−λ) under coverage (0.625, 0.375) promise
        // 3.75 each; the tie goes to the lower index.
        let sol = solution_with(
            vec![vec![5, 9], vec![11, 13]],
            vec![linear_curve(0, 10.0), linear_curve(1, 6.0)],
            vec![0.625, 0.375],
        );
        let config = GameConfig::sized(1, 1, 1, 1);
        let br = best_response_attacker(&sol, &config);
        assert_eq!(br.neighborhoods, vec![0]);
        assert!(br.respects_coarsening);
        // Nearest breakpoint to coverage 0.625 is λ=1, whose stored plan
        // strikes local node 2 — city node 9 after translation.
        assert_eq!(br.strategy.drones[0].path, vec![9]);
    }

    #[test]
    fn raider_collapses_to_greedy_under_zero_coverage() {
        let sol = solution_with(
            vec![vec![5, 9], vec![11, 13]],
            vec![linear_curve(0, 6.0), linear_curve(1, 10.0)],
            vec![0.0, 0.0],
        );
        let config = GameConfig::sized(1, 1, 1, 1);
        let br = best_response_attacker(&sol, &config);
        // Undefended values rank neighborhood 1 first, and the λ=0 stored
        // plan (local node 1 → city node 11) comes out.
        assert_eq!(br.neighborhoods, vec![1]);
        assert_eq!(br.strategy.drones[0].path, vec![11]);
        assert_eq!(br.strategy.drones[0].attacks, vec![1]);
    }

    #[test]
    fn raider_covers_every_neighborhood_when_it_can() {
        let sol = solution_with(
            vec![vec![1, 2], vec![3, 4]],
            vec![linear_curve(0, 6.0), linear_curve(1, 10.0)],
            vec![0.5, 0.5],
        );
        let config = GameConfig::sized(2, 1, 1, 1);
        let br = best_response_attacker(&sol, &config);
        let mut hoods = br.neighborhoods.clone();
        hoods.sort_unstable();
        assert_eq!(hoods, vec![0, 1]);
        assert!(br.respects_coarsening);
    }

    #[test]
    fn surplus_raiders_double_up_and_say_so() {
        let sol = solution_with(
            vec![vec![1, 2], vec![3, 4]],
            vec![linear_curve(0, 10.0), linear_curve(1, 6.0)],
            vec![0.0, 0.0],
        );
        let config = GameConfig::sized(3, 1, 1, 1);
        let br = best_response_attacker(&sol, &config);
        assert_eq!(br.neighborhoods, vec![0, 1, 0]);
        assert!(!br.respects_coarsening);
        // The spare drone replays the top neighborhood's unhindered plan.
        assert_eq!(br.strategy.drones[2].path, vec![1]);
    }

    #[test]
    fn plan_translation_round_trips() {
        let members = vec![4, 7, 9];
        let local = AttackPlan { path: vec![1, 3, 3], attacks: vec![2] };
        let original = plan_to_original(&local, &members);
        assert_eq!(original.path, vec![4, 9, 9]);
        assert_eq!(plan_to_local(&original, &members).unwrap(), local);
        assert_eq!(plan_to_local(&AttackPlan { path: vec![5], attacks: vec![] }, &members), None);
    }

    /// The exact raider matches an independent exhaustive search over
    /// neighborhood-respecting raids, and the curve-read raider never beats
    /// that bound.
    #[test]
    fn exact_raider_matches_exhaustive_search() {
        let g = outpost_city();
        let config = GameConfig::sized(4, 4, 1, 1);
        let sol = s2d2(&g, &config).unwrap();
        let duel = GameConfig { attackers: 1, defenders: 1, ..config.clone() };

        // Independent evaluation: every zone, every plan, against the
        // committed coverage and mix.
        let mut hood_best = Vec::new();
        for (hood, members) in sol.coarsening.neighborhoods.iter().enumerate() {
            let (zone, _) = g.induced(members).unwrap();
            let c = sol.meta.coverage[hood];
            let mix = sol.defense_mix_for(hood);
            let mut best = f64::NEG_INFINITY;
            for plan in
                enumerate_attacker_strategies(&zone, 1, 1, None, DEFAULT_EXPLOSION_LIMIT).unwrap()
            {
                let raid = AttackerPureStrategy::single(plan.clone());
                let (covered, _) =
                    mixed_utility(&zone, &duel, mix, &raid, Visibility::AlwaysVisible).unwrap();
                let free = greedy_playout(&zone, &plan).0 as f64;
                best = best.max(c * covered + (1.0 - c) * free);
            }
            hood_best.push(best);
        }
        let mut ranked = hood_best.clone();
        ranked.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let exhaustive: f64 = ranked.iter().take(4).sum();

        let value_of = |br: &BestResponseAttack| -> f64 {
            br.neighborhoods
                .iter()
                .zip(&br.strategy.drones)
                .map(|(&hood, plan)| {
                    let members = &sol.coarsening.neighborhoods[hood];
                    let (zone, _) = g.induced(members).unwrap();
                    let local = plan_to_local(plan, members).unwrap();
                    let raid = AttackerPureStrategy::single(local.clone());
                    let (covered, _) =
                        mixed_utility(&zone, &duel, sol.defense_mix_for(hood), &raid, Visibility::AlwaysVisible)
                            .unwrap();
                    let free = greedy_playout(&zone, &local).0 as f64;
                    let c = sol.meta.coverage[hood];
                    c * covered + (1.0 - c) * free
                })
                .sum()
        };

        let exact = best_response_attacker_exact(&g, &sol, &config).unwrap();
        assert!(exact.respects_coarsening);
        assert_eq!(exact.neighborhoods.len(), 4);
        let exact_value = value_of(&exact);
        assert!(
            (exact_value - exhaustive).abs() <= 1e-6,
            "exact raider {exact_value} vs exhaustive {exhaustive}"
        );

        let read = best_response_attacker(&sol, &config);
        let read_value = value_of(&read);
        assert!(
            read_value <= exhaustive + 1e-9,
            "curve-read raider {read_value} beats the exhaustive bound {exhaustive}"
        );
    }
}
