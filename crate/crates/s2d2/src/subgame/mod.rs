//! Single-zone λ-parameterized defense games.
//!
//! A zone game pits one watcher drone against one raider drone whose
//! objective is a blend: with weight λ the raider plays the zone out against
//! the committed defense, with weight 1−λ it collects its undefended payoff.
//! The λ=0 end reproduces pure greedy raiding, the λ=1 end the fully
//! adversarial zone game; sweeping λ over a grid yields a utility curve per
//! zone that the allocation layer consumes.
//!
//! Pipeline per λ: [`scan_attack_strategies`] keeps the raid plans whose
//! undefended payoff clears (1−λ)·max, [`scan_defense_strategies`] builds
//! candidate watcher policies against them, [`utility_matrices`] evaluates
//! the blended payoff matrices, and [`solve_subgame_sse`] runs one small LP
//! per candidate raid to find the best defender commitment under optimistic
//! (defender-favored) tie-breaking.

mod catch;
mod scan_attack;
mod scan_defense;

pub use catch::{catch, CatchOutcome};
pub use scan_attack::{scan_attack_strategies, AttackScan};
pub use scan_defense::{scan_defense_strategies, DefenseScan};

use thiserror::Error;

use crate::model::{
    greedy_playout, rollout, AttackPlan, AttackerPureStrategy, CityGraph, GameConfig,
    MixedDefense, ModelError, PolicyTree, Visibility, DEFAULT_EXPLOSION_LIMIT,
};
use crate::optim::{solve_lp, LinearProgram, LpOutcome, OptimError, Row, Sense};

#[derive(Debug, Error)]
pub enum SubgameError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error("no raid candidate admits a feasible best-response program")]
    NoFeasibleCandidate,
}

/// How hard the solver tries to be exhaustive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    /// Candidate reduction with the configured caps (the default).
    Reduced,
    /// Caps disabled: no attack filtering or sampling, no defense-candidate
    /// cap. Blows up (with an explicit error) beyond small zones.
    Exact,
}

/// Zone-solver knobs beyond [`GameConfig`].
#[derive(Debug, Clone)]
pub struct SubgameOptions {
    pub mode: SolveMode,
    /// What the watcher sees of the raider during a zone game.
    pub visibility: Visibility,
    /// Coarsening scale: strike targets with |penalty| ≤ δ are beneath the
    /// interception scoring's notice.
    pub delta: u64,
    /// Cap on candidate watcher policies per scan (Reduced mode).
    pub defense_cap: usize,
    /// Score defense moves by simulated chase utility instead of the
    /// first-interceptable-target index.
    pub exact_dominance: bool,
    /// Refusal threshold for strategy-space enumerations.
    pub explosion_limit: u64,
}

impl Default for SubgameOptions {
    fn default() -> Self {
        SubgameOptions {
            mode: SolveMode::Reduced,
            visibility: Visibility::AlwaysVisible,
            delta: 0,
            defense_cap: 128,
            exact_dominance: false,
            explosion_limit: DEFAULT_EXPLOSION_LIMIT,
        }
    }
}

/// Solution of one zone game at a fixed λ.
#[derive(Debug, Clone)]
pub struct SubgameSolution {
    pub lambda: f64,
    /// Optimal watcher commitment (mixture over policy trees).
    pub defense_mix: MixedDefense<PolicyTree>,
    /// The raid the raider best-responds with under optimistic tie-breaking.
    pub attacker_best: AttackPlan,
    /// Raider's blended utility at the solution.
    pub u_a: f64,
    /// Defender's blended utility at the solution.
    pub u_d: f64,
    /// Exact undefended optimum u_a of the zone (the λ=0 anchor).
    pub greedy_max: f64,
    /// True when a cap truncated either candidate scan.
    pub truncated: bool,
    pub attack_candidates: usize,
    pub defense_candidates: usize,
}

/// One solved λ grid point of a zone's utility curve.
#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub lambda: f64,
    pub u_a: f64,
    pub u_d: f64,
    pub defense_mix: MixedDefense<PolicyTree>,
    pub attacker_best: AttackPlan,
}

/// Piecewise-linear zone utility curve over λ, anchored at λ=0 and λ=1.
#[derive(Debug, Clone)]
pub struct UtilityCurve {
    pub zone_id: u32,
    /// Breakpoints with strictly increasing λ covering [0, λ_c] plus 1.
    pub points: Vec<CurvePoint>,
    /// Exact undefended optimum u_a of the zone.
    pub greedy_max: f64,
    /// True when any grid point's candidate scan was truncated.
    pub truncated: bool,
    /// Notes on repairs (monotonicity clipping) worth surfacing.
    pub diagnostics: Vec<String>,
}

impl UtilityCurve {
    pub fn eval_attacker(&self, lambda: f64) -> f64 {
        interpolate(&self.points, lambda, |p| p.u_a)
    }

    pub fn eval_defender(&self, lambda: f64) -> f64 {
        interpolate(&self.points, lambda, |p| p.u_d)
    }

    /// Breakpoint nearest to `lambda` (ties towards the smaller λ).
    pub fn nearest_point(&self, lambda: f64) -> &CurvePoint {
        self.points
            .iter()
            .min_by(|a, b| {
                let da = (a.lambda - lambda).abs();
                let db = (b.lambda - lambda).abs();
                da.partial_cmp(&db).expect("λ grid is finite")
            })
            .expect("curves always carry at least two points")
    }
}

fn interpolate(points: &[CurvePoint], lambda: f64, f: impl Fn(&CurvePoint) -> f64) -> f64 {
    let first = points.first().expect("curves always carry at least two points");
    if lambda <= first.lambda {
        return f(first);
    }
    for pair in points.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if lambda <= b.lambda {
            let w = (lambda - a.lambda) / (b.lambda - a.lambda);
            return f(a) + w * (f(b) - f(a));
        }
    }
    f(points.last().unwrap())
}

/// Copy of `zone` with reward and penalty zeroed on every node whose reward
/// is at most `delta`. The graph structure is untouched; only the stakes
/// change, which is what makes two δ-equivalent zones interchangeable.
pub fn truncate(zone: &CityGraph, delta: u64) -> CityGraph {
    let nodes: Vec<u32> = zone.nodes().collect();
    let rewards: Vec<u64> =
        nodes.iter().map(|&v| if zone.reward(v) <= delta { 0 } else { zone.reward(v) }).collect();
    let penalties: Vec<i64> =
        nodes.iter().map(|&v| if zone.reward(v) <= delta { 0 } else { zone.penalty(v) }).collect();
    let mut edges = Vec::new();
    for &v in &nodes {
        for &w in zone.neighbors(v) {
            if v < w {
                edges.push((v, w));
            }
        }
    }
    let coords = zone.has_coords().then(|| nodes.iter().map(|&v| zone.coord(v).unwrap()).collect());
    CityGraph::new(rewards, penalties, &edges, coords)
        .expect("a valid zone stays valid under truncation")
}

/// Exact undefended optimum (u_a, u_d) of a zone: the best raid a single
/// drone with `payload` strikes and `battery` steps can fly with no watcher
/// on the board, ties broken towards the defender (higher u_d).
///
/// Searches reward-bearing target subsets in descending potential order with
/// bound pruning; a subset is flyable when some visiting order fits in
/// `battery − 1` moves. `limit` bounds the number of search nodes.
pub fn undefended_optimum(
    zone: &CityGraph,
    battery: u32,
    payload: u32,
    limit: u64,
) -> Result<(i64, i64), SubgameError> {
    let mut valuables: Vec<u32> = zone.nodes().filter(|&v| zone.reward(v) > 0).collect();
    valuables.sort_by(|&a, &b| zone.reward(b).cmp(&zone.reward(a)).then(a.cmp(&b)));
    let k_max = (payload as usize).min(valuables.len());
    if k_max > 9 {
        return Err(ModelError::Unsupported(format!(
            "undefended optimum visits up to {k_max} targets; the ordering search handles at most 9"
        ))
        .into());
    }
    // Suffix sums of the sorted rewards bound what any extension can add.
    let mut suffix_top: Vec<Vec<i64>> = Vec::with_capacity(valuables.len() + 1);
    for start in 0..=valuables.len() {
        let available = valuables.len() - start;
        let mut best = vec![0i64; k_max + 1];
        for take in 1..=k_max {
            best[take] = best[take - 1]
                + if take <= available { zone.reward(valuables[start + take - 1]) as i64 } else { 0 };
        }
        suffix_top.push(best);
    }
    let dists: Vec<Vec<u32>> = valuables.iter().map(|&v| zone.bfs_dists(v)).collect();
    let moves = (battery - 1) as u64;

    struct Search<'a> {
        zone: &'a CityGraph,
        valuables: &'a [u32],
        dists: &'a [Vec<u32>],
        suffix_top: &'a [Vec<i64>],
        k_max: usize,
        moves: u64,
        limit: u64,
        explored: u64,
        best: (i64, i64),
    }

    impl Search<'_> {
        /// Minimum move count of any visiting order (start node free).
        fn min_walk(&self, chosen: &[usize]) -> u64 {
            let k = chosen.len();
            if k <= 1 {
                return 0;
            }
            let mut perm: Vec<usize> = (0..k).collect();
            let mut best = u64::MAX;
            // Heap's algorithm over the (small) index permutation.
            let mut c = vec![0usize; k];
            let eval = |perm: &[usize], best: &mut u64| {
                let mut cost = 0u64;
                for w in perm.windows(2) {
                    let d = self.dists[chosen[w[0]]][self.zone_node(chosen[w[1]]) as usize];
                    if d == u32::MAX {
                        return;
                    }
                    cost += d as u64;
                    if cost >= *best {
                        return;
                    }
                }
                *best = cost;
            };
            eval(&perm, &mut best);
            let mut i = 0;
            while i < k {
                if c[i] < i {
                    if i % 2 == 0 {
                        perm.swap(0, i);
                    } else {
                        perm.swap(c[i], i);
                    }
                    eval(&perm, &mut best);
                    c[i] += 1;
                    i = 0;
                } else {
                    c[i] = 0;
                    i += 1;
                }
            }
            best
        }

        fn zone_node(&self, idx: usize) -> u32 {
            self.valuables[idx]
        }

        fn dfs(
            &mut self,
            from: usize,
            chosen: &mut Vec<usize>,
            sum_r: i64,
            sum_p: i64,
        ) -> Result<(), SubgameError> {
            self.explored += 1;
            if self.explored > self.limit {
                return Err(ModelError::Explosion {
                    estimated: self.explored as u128,
                    limit: self.limit,
                }
                .into());
            }
            if !chosen.is_empty() && self.min_walk(chosen) <= self.moves {
                let cand = (sum_r, sum_p);
                if cand > self.best {
                    self.best = cand;
                }
            }
            if chosen.len() == self.k_max {
                return Ok(());
            }
            let headroom = self.k_max - chosen.len();
            for i in from..self.valuables.len() {
                let bound = sum_r
                    + self.suffix_top[i][headroom.min(self.valuables.len() - i)];
                if bound < self.best.0 || (bound == self.best.0 && sum_p <= self.best.1) {
                    // Extensions cannot beat the incumbent lexicographically:
                    // rewards top out at `bound` and penalties only sink.
                    break;
                }
                chosen.push(i);
                let v = self.valuables[i];
                self.dfs(
                    i + 1,
                    chosen,
                    sum_r + self.zone.reward(v) as i64,
                    sum_p + self.zone.penalty(v),
                )?;
                chosen.pop();
            }
            Ok(())
        }
    }

    let mut search = Search {
        zone,
        valuables: &valuables,
        dists: &dists,
        suffix_top: &suffix_top,
        k_max,
        moves,
        limit: limit.max(1),
        explored: 0,
        best: (0, 0),
    };
    search.dfs(0, &mut Vec::new(), 0, 0)?;
    Ok(search.best)
}

/// Blended payoff matrices of candidate watcher policies (rows) against raid
/// plans (columns), with dominated rows removed.
#[derive(Debug, Clone)]
pub struct UtilityMatrices {
    pub u_a: Vec<Vec<f64>>,
    pub u_d: Vec<Vec<f64>>,
    /// Index into the scanned policy slice for each surviving row.
    pub kept_rows: Vec<usize>,
}

/// Evaluates U_a[i][j] = λ·u_a(defense i, raid j) + (1−λ)·u_a(no defense,
/// raid j) and likewise U_d, then drops every row that another row renders
/// pointless: identical raider payoffs with defender payoffs at least as
/// good everywhere (strictly better somewhere, or an exact duplicate of an
/// earlier row). Rows that merely score worse for the defender are kept —
/// they can still shape which raid the commitment deters.
pub fn utility_matrices(
    zone: &CityGraph,
    config: &GameConfig,
    defenses: &[PolicyTree],
    attacks: &[AttackPlan],
    lambda: f64,
    visibility: Visibility,
) -> Result<UtilityMatrices, SubgameError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(ModelError::LambdaRange(lambda).into());
    }
    if defenses.is_empty() || attacks.is_empty() {
        return Err(ModelError::InvalidStrategy(
            "payoff matrices need at least one policy and one plan".into(),
        )
        .into());
    }
    let mut duel = config.clone();
    duel.attackers = 1;
    duel.defenders = 1;
    let greedy: Vec<(i64, i64)> = attacks.iter().map(|p| greedy_playout(zone, p)).collect();

    let mut u_a: Vec<Vec<f64>> = Vec::with_capacity(defenses.len());
    let mut u_d: Vec<Vec<f64>> = Vec::with_capacity(defenses.len());
    for tree in defenses {
        let mut row_a = Vec::with_capacity(attacks.len());
        let mut row_d = Vec::with_capacity(attacks.len());
        for (plan, &(ga, gd)) in attacks.iter().zip(&greedy) {
            let run = rollout(
                zone,
                &duel,
                std::slice::from_ref(tree),
                &AttackerPureStrategy::single(plan.clone()),
                visibility,
            )?;
            row_a.push(lambda * run.u_a as f64 + (1.0 - lambda) * ga as f64);
            row_d.push(lambda * run.u_d as f64 + (1.0 - lambda) * gd as f64);
        }
        u_a.push(row_a);
        u_d.push(row_d);
    }

    let rows = defenses.len();
    let mut kept_rows = Vec::with_capacity(rows);
    for i in 0..rows {
        let redundant = (0..rows).any(|j| {
            j != i
                && u_a[j] == u_a[i]
                && u_d[j].iter().zip(&u_d[i]).all(|(a, b)| a >= b)
                && (u_d[j].iter().zip(&u_d[i]).any(|(a, b)| a > b) || (u_d[j] == u_d[i] && j < i))
        });
        if !redundant {
            kept_rows.push(i);
        }
    }
    let u_a = kept_rows.iter().map(|&i| u_a[i].clone()).collect();
    let u_d = kept_rows.iter().map(|&i| u_d[i].clone()).collect();
    Ok(UtilityMatrices { u_a, u_d, kept_rows })
}

/// Solves the zone game at one λ: scans both candidate spaces, then for each
/// surviving raid solves the commitment LP that makes it the raider's best
/// response and keeps the defender-best program. Ties are broken towards
/// higher raider utility, then the earlier candidate.
pub fn solve_subgame_sse(
    zone: &CityGraph,
    lambda: f64,
    config: &GameConfig,
    options: &SubgameOptions,
) -> Result<SubgameSolution, SubgameError> {
    config.validate()?;
    let scan = scan_attack_strategies(zone, lambda, config, options, config.seed)?;
    let starts: Vec<u32> = zone.nodes().collect();
    let defense = scan_defense::defense_candidates(zone, &scan.candidates, config, options, &starts)?;
    let mats =
        utility_matrices(zone, config, &defense.policies, &scan.candidates, lambda, options.visibility)?;
    let rows = mats.kept_rows.len();
    let cols = scan.candidates.len();

    // The best-response constraints only need one row per distinct raider
    // column; candidates further collapse when both columns coincide.
    let mut ua_rep = vec![0usize; cols];
    let mut duplicate = vec![false; cols];
    for j in 0..cols {
        ua_rep[j] = j;
        for k in 0..j {
            if (0..rows).all(|i| mats.u_a[i][k] == mats.u_a[i][j]) {
                if ua_rep[j] == j {
                    ua_rep[j] = k;
                }
                if (0..rows).all(|i| mats.u_d[i][k] == mats.u_d[i][j]) {
                    duplicate[j] = true;
                    break;
                }
            }
        }
    }
    let constraint_cols: Vec<usize> = (0..cols).filter(|&j| ua_rep[j] == j).collect();

    let upper: Vec<f64> = (0..cols)
        .map(|j| (0..rows).map(|i| mats.u_d[i][j]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut order: Vec<usize> = (0..cols).filter(|&j| !duplicate[j]).collect();
    order.sort_by(|&a, &b| upper[b].partial_cmp(&upper[a]).unwrap().then(a.cmp(&b)));

    let mut best: Option<(f64, f64, usize, Vec<f64>)> = None;
    for &j in &order {
        if let Some((bd, ..)) = &best {
            if upper[j] <= bd + 1e-9 {
                break;
            }
        }
        let mut lp_rows = Vec::with_capacity(constraint_cols.len());
        lp_rows.push(Row {
            coeffs: (0..rows).map(|i| (i, 1.0)).collect(),
            sense: Sense::Eq,
            rhs: 1.0,
        });
        for &k in &constraint_cols {
            if k == ua_rep[j] {
                continue;
            }
            let coeffs: Vec<(usize, f64)> = (0..rows)
                .map(|i| (i, mats.u_a[i][k] - mats.u_a[i][j]))
                .filter(|&(_, c)| c != 0.0)
                .collect();
            lp_rows.push(Row { coeffs, sense: Sense::Le, rhs: 0.0 });
        }
        let lp = LinearProgram {
            objective: (0..rows).map(|i| mats.u_d[i][j]).collect(),
            rows: lp_rows,
            bounds: vec![(0.0, 1.0); rows],
        };
        match solve_lp(&lp, config.lp_tolerance)? {
            LpOutcome::Optimal(sol) => {
                let u_d_val = sol.value;
                let u_a_val: f64 = (0..rows).map(|i| sol.point[i] * mats.u_a[i][j]).sum();
                let improves = match &best {
                    None => true,
                    Some((bd, ba, bj, _)) => {
                        u_d_val > bd + 1e-9
                            || ((u_d_val - bd).abs() <= 1e-9
                                && (u_a_val > ba + 1e-9
                                    || ((u_a_val - ba).abs() <= 1e-9 && j < *bj)))
                    }
                };
                if improves {
                    best = Some((u_d_val, u_a_val, j, sol.point));
                }
            }
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded => {
                unreachable!("zone commitment programs are box-bounded")
            }
        }
    }
    let (u_d, u_a, j_star, x) = best.ok_or(SubgameError::NoFeasibleCandidate)?;

    let mut support: Vec<(Vec<PolicyTree>, f64)> = x
        .iter()
        .enumerate()
        .filter(|&(_, &p)| p > 1e-12)
        .map(|(i, &p)| (vec![defense.policies[mats.kept_rows[i]].clone()], p))
        .collect();
    let total: f64 = support.iter().map(|(_, p)| *p).sum();
    for (_, p) in &mut support {
        *p /= total;
    }
    let defense_mix = MixedDefense { support };
    defense_mix.validate(1, config.lp_tolerance)?;

    Ok(SubgameSolution {
        lambda,
        defense_mix,
        attacker_best: scan.candidates[j_star].clone(),
        u_a,
        u_d,
        greedy_max: scan.greedy_max,
        truncated: scan.sampled || defense.truncated,
        attack_candidates: cols,
        defense_candidates: defense.policies.len(),
    })
}

/// λ grid: the even grid points i/(n−1) that fall inside [0, λ_c], plus the
/// anchor λ=1.
pub fn lambda_grid(config: &GameConfig) -> Vec<f64> {
    let n = config.lambda_grid_size.max(2);
    let mut grid: Vec<f64> = (0..n)
        .map(|i| i as f64 / (n - 1) as f64)
        .filter(|&l| l <= config.lambda_cutoff + 1e-12)
        .collect();
    if grid.last().map_or(true, |&l| (l - 1.0).abs() > 1e-12) {
        grid.push(1.0);
    }
    grid
}

/// Pool-adjacent-violators pass towards a non-decreasing sequence; returns
/// the largest absolute adjustment applied.
fn isotonic_non_decreasing(vals: &mut [f64]) -> f64 {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(vals.len());
    for &v in vals.iter() {
        let mut mean = v;
        let mut count = 1usize;
        while let Some(&(m, c)) = blocks.last() {
            if m > mean {
                blocks.pop();
                mean = (m * c as f64 + mean * count as f64) / (c + count) as f64;
                count += c;
            } else {
                break;
            }
        }
        blocks.push((mean, count));
    }
    let mut adjusted = 0.0f64;
    let mut at = 0usize;
    for (mean, count) in blocks {
        for _ in 0..count {
            adjusted = adjusted.max((vals[at] - mean).abs());
            vals[at] = mean;
            at += 1;
        }
    }
    adjusted
}

/// Solves the zone at every λ grid point and assembles its utility curve.
/// The raider values must fall and the defender values rise with λ; LP
/// tie-breaking noise that bends that the wrong way is clipped back by an
/// isotonic pass, loudly when the repair exceeds 10× the LP tolerance.
pub fn build_utility_curves(
    zone: &CityGraph,
    zone_id: u32,
    config: &GameConfig,
    options: &SubgameOptions,
) -> Result<UtilityCurve, SubgameError> {
    let grid = lambda_grid(config);
    let mut points = Vec::with_capacity(grid.len());
    let mut truncated = false;
    let mut greedy_max = 0.0;
    for &l in &grid {
        let sol = solve_subgame_sse(zone, l, config, options)?;
        truncated |= sol.truncated;
        greedy_max = sol.greedy_max;
        points.push(CurvePoint {
            lambda: l,
            u_a: sol.u_a,
            u_d: sol.u_d,
            defense_mix: sol.defense_mix,
            attacker_best: sol.attacker_best,
        });
    }

    let mut ua: Vec<f64> = points.iter().map(|p| -p.u_a).collect();
    let adj_a = isotonic_non_decreasing(&mut ua);
    let mut ud: Vec<f64> = points.iter().map(|p| p.u_d).collect();
    let adj_d = isotonic_non_decreasing(&mut ud);
    for (p, (&na, &nd)) in points.iter_mut().zip(ua.iter().zip(&ud)) {
        p.u_a = -na;
        p.u_d = nd;
    }
    let mut diagnostics = Vec::new();
    let loud = 10.0 * config.lp_tolerance;
    if adj_a > loud {
        diagnostics.push(format!(
            "zone {zone_id}: raider curve clipped to non-increasing, largest adjustment {adj_a:.3e}"
        ));
    }
    if adj_d > loud {
        diagnostics.push(format!(
            "zone {zone_id}: defender curve clipped to non-decreasing, largest adjustment {adj_d:.3e}"
        ));
    }

    Ok(UtilityCurve { zone_id, points, greedy_max, truncated, diagnostics })
}
