//! Defense allocation across neighborhoods.
//!
//! Each neighborhood's one-on-one game is summarized by a piecewise-linear
//! utility curve over the local defense probability λ. This module decides
//! where the drones go: a mixed-integer program picks a coverage vector and
//! the attacker's best-response set so that the defender's value is maximal
//! subject to the attacker genuinely best-responding (a threshold separates
//! attacked from unattacked neighborhoods). A subset-enumeration oracle
//! solves the same problem with nothing but LPs for cross-checking, and a
//! systematic sampler turns coverage vectors into joint drone placements
//! with exactly matching marginals.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{GameConfig, DEFAULT_EXPLOSION_LIMIT};
use crate::optim::{
    solve_lp, solve_milp, LpOutcome, MilpOptions, MilpOutcome, MipBuilder, MixedIntegerProgram,
    OptimError, Sense,
};
use crate::subgame::UtilityCurve;

/// Weight support below this is treated as zero when reading LP vertices.
const SUPPORT_TOLERANCE: f64 = 1e-7;
/// Numerical grace on coverage-vector validation.
const COVERAGE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MetaError {
    #[error("a best-response threshold needs more neighborhoods than attacker drones; got {neighborhoods} neighborhoods for {attackers} attackers")]
    TooFewNeighborhoods { neighborhoods: usize, attackers: u32 },
    #[error("invalid utility curve {index}: {reason}")]
    BadCurve { index: usize, reason: String },
    #[error("invalid coverage vector: {0}")]
    BadCoverage(String),
    #[error("the allocation program is infeasible")]
    Infeasible,
    #[error("enumerating {estimated} attacked subsets exceeds the limit {limit}")]
    Explosion { estimated: u128, limit: u64 },
    #[error(transparent)]
    Optim(#[from] OptimError),
}

/// Breakpoint view of one neighborhood's utility curve: strictly increasing
/// λ values spanning [0, 1] with the attacker and defender utilities at each.
/// Attacker values must be non-negative and non-increasing, defender values
/// non-decreasing — more defense never helps the raider or hurts the watcher.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetaCurve {
    pub lambdas: Vec<f64>,
    pub attacker: Vec<f64>,
    pub defender: Vec<f64>,
}

impl MetaCurve {
    fn validate(&self, index: usize) -> Result<(), MetaError> {
        let bad = |reason: String| MetaError::BadCurve { index, reason };
        let k = self.lambdas.len();
        if k < 2 {
            return Err(bad(format!("{k} breakpoints; at least 2 required")));
        }
        if self.attacker.len() != k || self.defender.len() != k {
            return Err(bad(format!(
                "{k} breakpoints but {} attacker and {} defender values",
                self.attacker.len(),
                self.defender.len()
            )));
        }
        let finite = self
            .lambdas
            .iter()
            .chain(&self.attacker)
            .chain(&self.defender)
            .all(|v| v.is_finite());
        if !finite {
            return Err(bad("non-finite value".into()));
        }
        if self.lambdas[0] != 0.0 || self.lambdas[k - 1] != 1.0 {
            return Err(bad(format!(
                "breakpoints span [{}, {}]; they must span [0, 1]",
                self.lambdas[0],
                self.lambdas[k - 1]
            )));
        }
        if self.lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("breakpoints must be strictly increasing".into()));
        }
        if self.attacker.iter().any(|&v| v < -COVERAGE_TOLERANCE) {
            return Err(bad("attacker values must be non-negative".into()));
        }
        if self.attacker.windows(2).any(|w| w[1] > w[0] + COVERAGE_TOLERANCE) {
            return Err(bad("attacker values must not increase with coverage".into()));
        }
        if self.defender.windows(2).any(|w| w[1] < w[0] - COVERAGE_TOLERANCE) {
            return Err(bad("defender values must not decrease with coverage".into()));
        }
        Ok(())
    }

    pub fn eval_attacker(&self, lambda: f64) -> f64 {
        interp(&self.lambdas, &self.attacker, lambda)
    }

    pub fn eval_defender(&self, lambda: f64) -> f64 {
        interp(&self.lambdas, &self.defender, lambda)
    }

}

impl From<&UtilityCurve> for MetaCurve {
    fn from(curve: &UtilityCurve) -> MetaCurve {
        MetaCurve {
            lambdas: curve.points.iter().map(|p| p.lambda).collect(),
            attacker: curve.points.iter().map(|p| p.u_a).collect(),
            defender: curve.points.iter().map(|p| p.u_d).collect(),
        }
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    for i in 1..xs.len() {
        if x <= xs[i] {
            let w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            return ys[i - 1] + w * (ys[i] - ys[i - 1]);
        }
    }
    ys[ys.len() - 1]
}

/// A solved drone allocation: which neighborhoods the attacker hits, how the
/// defense probability spreads, and the threshold certifying the attacker's
/// best response.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetaSolution {
    /// Defense probability per neighborhood (curve order), in [0, 1],
    /// summing to at most the defender drone count.
    pub coverage: Vec<f64>,
    /// Attacked neighborhood indices, ascending, one per attacker drone.
    pub attacked: Vec<usize>,
    /// Best-response threshold: attacked neighborhoods promise the raider at
    /// least this much, unattacked ones at most this much.
    pub threshold: f64,
    pub value_d: f64,
    pub value_a: f64,
    /// False when the integer solve hit its node cap and returned the best
    /// incumbent without certifying optimality.
    pub optimal: bool,
}

/// The assembled allocation program plus the variable map needed to read a
/// solution back out of a point.
#[derive(Debug, Clone)]
pub struct MetaMip {
    pub mip: MixedIntegerProgram,
    pub layout: MetaLayout,
}

/// Variable and constraint indices of one [`MetaMip`], in curve order.
#[derive(Debug, Clone)]
pub struct MetaLayout {
    /// Attack indicator binaries x_a.
    pub attack: Vec<usize>,
    /// Coverage variables x_d.
    pub coverage: Vec<usize>,
    /// Threshold variable θ.
    pub theta: usize,
    /// Interpolated attacker utility output per curve.
    pub attacker_value: Vec<usize>,
    /// Interpolated defender utility output per curve.
    pub defender_value: Vec<usize>,
    /// Product x_a · θ per curve.
    pub threshold_product: Vec<usize>,
    /// Product x_a · defender utility per curve (the objective terms).
    pub objective_product: Vec<usize>,
    /// Segment-selector binaries per curve (empty on single-segment curves).
    pub segment_bits: Vec<Vec<usize>>,
    /// Row indices of the two resource constraints (Σx_a, Σx_d).
    pub resource_rows: Vec<usize>,
    /// Row indices of the per-curve best-response inequalities (two each).
    pub best_response_rows: Vec<usize>,
}

fn validate_curves(curves: &[MetaCurve]) -> Result<(), MetaError> {
    for (i, curve) in curves.iter().enumerate() {
        curve.validate(i)?;
    }
    Ok(())
}

/// Builds the allocation program: maximize the defender's value over
/// coverage vectors and attacked sets, subject to the attacker
/// best-responding. Binary x_a flags the attacked neighborhoods, continuous
/// x_d carries coverage, and a shared threshold θ enforces best response via
/// `ũ^a(x_d) ≥ x_a·θ` and `ũ^a(x_d) ≤ (1−x_a)·θ + x_a·ũ^a(0)`. Curve
/// evaluations expand through the piecewise encoder. The product x_a·θ is
/// linearized exactly over θ's range; the objective product x_a·ũ^d rides on
/// the piecewise weights (one product per breakpoint), which keeps the
/// relaxation tight enough to prune with, and the best-response pair is
/// additionally multiplied through by x_a and 1−x_a on the same products.
/// Duplicate curves get coverage-ordering rows so the search visits one
/// representative per symmetric orbit.
pub fn build_meta_mip(
    curves: &[MetaCurve],
    attackers: u32,
    defenders: u32,
) -> Result<MetaMip, MetaError> {
    validate_curves(curves)?;
    let n = curves.len();
    if n <= attackers as usize {
        return Err(MetaError::TooFewNeighborhoods { neighborhoods: n, attackers });
    }

    let theta_cap = curves.iter().map(|c| c.attacker[0].max(0.0)).fold(0.0, f64::max);

    let mut b = MipBuilder::new();
    let theta = b.var(0.0, theta_cap, 0.0);

    let mut layout = MetaLayout {
        attack: Vec::with_capacity(n),
        coverage: Vec::with_capacity(n),
        theta,
        attacker_value: Vec::with_capacity(n),
        defender_value: Vec::with_capacity(n),
        threshold_product: Vec::with_capacity(n),
        objective_product: Vec::with_capacity(n),
        segment_bits: Vec::with_capacity(n),
        resource_rows: Vec::new(),
        best_response_rows: Vec::new(),
    };

    for curve in curves {
        let x_a = b.binary(0.0);
        let x_d = b.var(0.0, 1.0, 0.0);
        let pw = crate::optim::piecewise_encode(
            &mut b,
            x_d,
            &curve.lambdas,
            &[&curve.attacker, &curve.defender],
        )?;
        let (u_a, u_d) = (pw.outputs[0], pw.outputs[1]);

        // z = x_a · θ: off forces z to zero, on pins it to θ (θ ≥ 0).
        let z = b.var(0.0, theta_cap, 0.0);
        b.row(vec![(z, 1.0), (x_a, -theta_cap)], Sense::Le, 0.0);
        b.row(vec![(z, 1.0), (theta, -1.0)], Sense::Le, 0.0);
        b.row(vec![(z, 1.0), (theta, -1.0), (x_a, -theta_cap)], Sense::Ge, -theta_cap);

        // w = x_a · ũ^d: the neighborhood's objective contribution, built
        // breakpoint by breakpoint. With p_k = x_a · ζ_k for the convex
        // weights ζ of the piecewise encoding, w = Σ_k d_k p_k. Tying the
        // products to the weights confines the relaxation slack to one
        // segment's value range; a single big-M product against ũ^d would
        // let a fractional x_a wipe out the whole curve amplitude, leaving
        // the search tree nothing to prune with.
        let dmin = curve.defender.iter().copied().fold(f64::INFINITY, f64::min);
        let dmax = curve.defender.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w = b.var(dmin.min(0.0), dmax.max(0.0), 1.0);
        let mut products = Vec::with_capacity(pw.weights.len());
        for &zeta in &pw.weights {
            let p = b.var(0.0, 1.0, 0.0);
            b.row(vec![(p, 1.0), (zeta, -1.0)], Sense::Le, 0.0);
            b.row(vec![(p, 1.0), (zeta, -1.0), (x_a, -1.0)], Sense::Ge, -1.0);
            products.push(p);
        }
        // The weights sum to one, so the products sum to x_a (this also caps
        // each p_k at x_a, the remaining product bound).
        let mut sum_row: Vec<(usize, f64)> = products.iter().map(|&p| (p, 1.0)).collect();
        sum_row.push((x_a, -1.0));
        b.row(sum_row, Sense::Eq, 0.0);
        let mut w_row = vec![(w, 1.0)];
        for (&p, &d) in products.iter().zip(&curve.defender) {
            w_row.push((p, -d));
        }
        b.row(w_row, Sense::Eq, 0.0);

        // Best response: attacked neighborhoods clear the threshold,
        // unattacked ones stay below it.
        layout.best_response_rows.push(b.num_rows());
        b.row(vec![(u_a, 1.0), (z, -1.0)], Sense::Ge, 0.0);
        layout.best_response_rows.push(b.num_rows());
        b.row(
            vec![(u_a, 1.0), (z, 1.0), (theta, -1.0), (x_a, -curve.attacker[0])],
            Sense::Le,
            0.0,
        );
        // The same pair multiplied through by x_a and by 1 − x_a, expressed
        // with the products (x_a·ũ^a = Σ_k a_k p_k): implied at integer x_a,
        // strictly tighter in between.
        let mut attacked_row = vec![(z, -1.0)];
        for (&p, &a) in products.iter().zip(&curve.attacker) {
            attacked_row.push((p, a));
        }
        b.row(attacked_row, Sense::Ge, 0.0);
        let mut unattacked_row = vec![(u_a, 1.0), (theta, -1.0), (z, 1.0)];
        for (&p, &a) in products.iter().zip(&curve.attacker) {
            unattacked_row.push((p, -a));
        }
        b.row(unattacked_row, Sense::Le, 0.0);

        layout.attack.push(x_a);
        layout.coverage.push(x_d);
        layout.attacker_value.push(u_a);
        layout.defender_value.push(u_d);
        layout.threshold_product.push(z);
        layout.objective_product.push(w);
        layout.segment_bits.push(pw.gray_bits);
    }

    // Identical curves make permuted assignments interchangeable, which
    // multiplies the search tree by the orbit size for nothing. Ordering
    // coverage within each duplicate class keeps exactly one representative
    // of every orbit (permuting whole per-curve variable blocks maps feasible
    // points to feasible points of equal value, so some optimum survives).
    let mut last_seen: std::collections::BTreeMap<Vec<u64>, usize> = Default::default();
    for (i, curve) in curves.iter().enumerate() {
        let key: Vec<u64> = curve
            .lambdas
            .iter()
            .chain(&curve.attacker)
            .chain(&curve.defender)
            .map(|v| v.to_bits())
            .collect();
        if let Some(prev) = last_seen.insert(key, i) {
            b.row(
                vec![(layout.coverage[prev], 1.0), (layout.coverage[i], -1.0)],
                Sense::Ge,
                0.0,
            );
        }
    }

    layout.resource_rows.push(b.num_rows());
    b.row(
        layout.attack.iter().map(|&v| (v, 1.0)).collect(),
        Sense::Eq,
        attackers as f64,
    );
    layout.resource_rows.push(b.num_rows());
    // Coverage saturates at one unit per neighborhood, so with more drones
    // than neighborhoods the equality binds at the saturation point. The
    // utilities rise with coverage, which is what makes equality (rather
    // than ≤) harmless.
    b.row(
        layout.coverage.iter().map(|&v| (v, 1.0)).collect(),
        Sense::Eq,
        (defenders as usize).min(n) as f64,
    );

    Ok(MetaMip { mip: b.into_mip(), layout })
}

/// Solves the allocation program and decodes the solution.
pub fn solve_meta(
    curves: &[MetaCurve],
    attackers: u32,
    defenders: u32,
    config: &GameConfig,
) -> Result<MetaSolution, MetaError> {
    let MetaMip { mip, layout } = build_meta_mip(curves, attackers, defenders)?;
    let options = MilpOptions {
        gap: config.milp_gap,
        lp_tolerance: config.lp_tolerance,
        ..MilpOptions::default()
    };
    let solved = match solve_milp(&mip, &options)? {
        MilpOutcome::Solved(s) => s,
        MilpOutcome::Infeasible | MilpOutcome::Unbounded => return Err(MetaError::Infeasible),
    };
    let point = &solved.point;
    let coverage: Vec<f64> =
        layout.coverage.iter().map(|&v| point[v].clamp(0.0, 1.0)).collect();
    let attacked: Vec<usize> = (0..curves.len())
        .filter(|&i| point[layout.attack[i]] > 0.5)
        .collect();
    let value_a = attacked.iter().map(|&i| point[layout.attacker_value[i]]).sum();
    Ok(MetaSolution {
        coverage,
        attacked,
        threshold: point[layout.theta],
        value_d: solved.value,
        value_a,
        optimal: solved.optimal,
    })
}

/// Checks that a solution's attacked set is threshold-separated on the given
/// curves: every attacked neighborhood offers the raider at least
/// `threshold − tol`, every unattacked one at most `threshold + tol`.
/// Returns the first violation as an error message.
pub fn threshold_certificate(
    curves: &[MetaCurve],
    solution: &MetaSolution,
    tol: f64,
) -> Result<(), String> {
    if solution.coverage.len() != curves.len() {
        return Err(format!(
            "{} coverage entries for {} curves",
            solution.coverage.len(),
            curves.len()
        ));
    }
    if let Some(&i) = solution.attacked.iter().find(|&&i| i >= curves.len()) {
        return Err(format!("attacked index {i} out of range"));
    }
    for (i, curve) in curves.iter().enumerate() {
        let u = curve.eval_attacker(solution.coverage[i]);
        if solution.attacked.contains(&i) {
            if u < solution.threshold - tol {
                return Err(format!(
                    "attacked neighborhood {i} offers {u:.9}, below the threshold {:.9}",
                    solution.threshold
                ));
            }
        } else if u > solution.threshold + tol {
            return Err(format!(
                "unattacked neighborhood {i} offers {u:.9}, above the threshold {:.9}",
                solution.threshold
            ));
        }
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    c
}

/// Exact value and coverage for one fixed attacked subset, found with plain
/// LPs: the convex-hull relaxation of every curve is solved first, and any
/// curve whose breakpoint weights land on a non-adjacent support is branched
/// into its segments (which pins the curve to a single linear piece) until
/// every evaluation is a genuine interpolation. Bounds from the relaxation
/// prune branches against the incumbent.
struct SubsetSolve {
    value_d: f64,
    value_a: f64,
    coverage: Vec<f64>,
    theta: f64,
}

fn subset_lp(
    curves: &[MetaCurve],
    attacked: &[bool],
    coverage_total: f64,
    theta_cap: f64,
    ranges: &[(usize, usize)],
) -> Result<Option<(f64, Vec<Vec<f64>>, f64)>, MetaError> {
    let mut b = MipBuilder::new();
    let theta = b.var(0.0, theta_cap, 0.0);
    let mut weight_vars: Vec<Vec<usize>> = Vec::with_capacity(curves.len());
    let mut coverage_row: Vec<(usize, f64)> = Vec::new();
    for (v, curve) in curves.iter().enumerate() {
        let (lo, hi) = ranges[v];
        let ws: Vec<usize> = (lo..=hi)
            .map(|j| {
                let obj = if attacked[v] { curve.defender[j] } else { 0.0 };
                let w = b.var(0.0, 1.0, obj);
                coverage_row.push((w, curve.lambdas[j]));
                w
            })
            .collect();
        b.row(ws.iter().map(|&w| (w, 1.0)).collect(), Sense::Eq, 1.0);
        let mut br: Vec<(usize, f64)> =
            ws.iter().zip(lo..=hi).map(|(&w, j)| (w, curve.attacker[j])).collect();
        br.push((theta, -1.0));
        b.row(br, if attacked[v] { Sense::Ge } else { Sense::Le }, 0.0);
        weight_vars.push(ws);
    }
    b.row(coverage_row, Sense::Eq, coverage_total);
    let lp = b.into_lp();
    match solve_lp(&lp, crate::optim::DEFAULT_LP_TOLERANCE)? {
        LpOutcome::Optimal(s) => {
            let weights: Vec<Vec<f64>> = weight_vars
                .iter()
                .map(|ws| ws.iter().map(|&w| s.point[w]).collect())
                .collect();
            Ok(Some((s.value, weights, s.point[theta])))
        }
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(MetaError::Infeasible),
    }
}

fn branch_subset(
    curves: &[MetaCurve],
    attacked: &[bool],
    coverage_total: f64,
    theta_cap: f64,
    ranges: &mut Vec<(usize, usize)>,
    incumbent: f64,
) -> Result<Option<SubsetSolve>, MetaError> {
    let Some((bound, weights, theta)) =
        subset_lp(curves, attacked, coverage_total, theta_cap, ranges)?
    else {
        return Ok(None);
    };
    if bound <= incumbent + 1e-12 {
        return Ok(None);
    }
    // A curve's weights are honest exactly when their support sits on two
    // adjacent breakpoints (one segment); a wider support means the LP used
    // the convex hull instead of the curve.
    let offender = (0..curves.len()).find(|&v| {
        let support: Vec<usize> = weights[v]
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > SUPPORT_TOLERANCE)
            .map(|(j, _)| j)
            .collect();
        match (support.first(), support.last()) {
            (Some(&a), Some(&z)) => z - a > 1,
            _ => false,
        }
    });
    let Some(v) = offender else {
        let mut coverage = Vec::with_capacity(curves.len());
        let mut value_a = 0.0;
        for (u, curve) in curves.iter().enumerate() {
            let (lo, _) = ranges[u];
            let x: f64 = weights[u]
                .iter()
                .zip(lo..)
                .map(|(&w, j)| w * curve.lambdas[j])
                .sum();
            coverage.push(x.clamp(0.0, 1.0));
            if attacked[u] {
                value_a += weights[u]
                    .iter()
                    .zip(lo..)
                    .map(|(&w, j)| w * curve.attacker[j])
                    .sum::<f64>();
            }
        }
        return Ok(Some(SubsetSolve { value_d: bound, value_a, coverage, theta }));
    };
    let (lo, hi) = ranges[v];
    let mut best: Option<SubsetSolve> = None;
    let mut cutoff = incumbent;
    for seg in lo..hi {
        ranges[v] = (seg, seg + 1);
        if let Some(sol) =
            branch_subset(curves, attacked, coverage_total, theta_cap, ranges, cutoff)?
        {
            cutoff = sol.value_d;
            best = Some(sol);
        }
    }
    ranges[v] = (lo, hi);
    Ok(best)
}

/// Solves the allocation problem exactly by trying every attacked subset of
/// the right size, each as a chain of plain LPs (no integer search shared
/// with the main solver), and keeping the defender-best subset. Ties keep
/// the lexicographically first subset. Refuses when the subset count
/// explodes.
pub fn meta_oracle_enumerate(
    curves: &[MetaCurve],
    attackers: u32,
    defenders: u32,
) -> Result<MetaSolution, MetaError> {
    validate_curves(curves)?;
    let n = curves.len();
    let a = attackers as usize;
    if a > n {
        return Err(MetaError::TooFewNeighborhoods { neighborhoods: n, attackers });
    }
    let subsets = binomial(n, a);
    if subsets > DEFAULT_EXPLOSION_LIMIT as u128 {
        return Err(MetaError::Explosion { estimated: subsets, limit: DEFAULT_EXPLOSION_LIMIT });
    }
    let coverage_total = (defenders as usize).min(n) as f64;
    let theta_cap = curves.iter().map(|c| c.attacker[0].max(0.0)).fold(0.0, f64::max);

    let mut best: Option<(Vec<usize>, SubsetSolve)> = None;
    let mut subset: Vec<usize> = (0..a).collect();
    let mut done = false;
    while !done {
        let mut attacked = vec![false; n];
        for &i in &subset {
            attacked[i] = true;
        }
        let mut ranges: Vec<(usize, usize)> =
            curves.iter().map(|c| (0, c.lambdas.len() - 1)).collect();
        let incumbent = best.as_ref().map_or(f64::NEG_INFINITY, |(_, s)| s.value_d);
        if let Some(sol) =
            branch_subset(curves, &attacked, coverage_total, theta_cap, &mut ranges, incumbent)?
        {
            best = Some((subset.clone(), sol));
        }

        // Advance to the next A-subset in lexicographic order.
        done = true;
        for i in (0..a).rev() {
            if subset[i] < n - a + i {
                subset[i] += 1;
                for j in i + 1..a {
                    subset[j] = subset[j - 1] + 1;
                }
                done = false;
                break;
            }
        }
    }

    let (attacked, sol) = best.ok_or(MetaError::Infeasible)?;
    Ok(MetaSolution {
        coverage: sol.coverage,
        attacked,
        threshold: sol.theta,
        value_d: sol.value_d,
        value_a: sol.value_a,
        optimal: true,
    })
}

/// Draws a joint defense placement whose per-neighborhood inclusion
/// probability equals the coverage exactly: the entries are laid end to end
/// on a circle, one uniform offset positions `⌈Σ coverage⌉` pointers at unit
/// spacing, and a neighborhood is selected when a pointer lands in its arc.
/// Arcs are at most one unit long, so no arc catches two pointers, and at
/// most `defenders` neighborhoods come back.
pub fn implement_coverage(
    coverage: &[f64],
    defenders: u32,
    rng: &mut impl Rng,
) -> Result<Vec<usize>, MetaError> {
    let mut total = 0.0;
    for (i, &c) in coverage.iter().enumerate() {
        if !c.is_finite() || !(-COVERAGE_TOLERANCE..=1.0 + COVERAGE_TOLERANCE).contains(&c) {
            return Err(MetaError::BadCoverage(format!("entry {i} is {c}, outside [0, 1]")));
        }
        total += c.clamp(0.0, 1.0);
    }
    if total > defenders as f64 + COVERAGE_TOLERANCE {
        return Err(MetaError::BadCoverage(format!(
            "entries sum to {total}, above the {defenders} available drones"
        )));
    }
    if total <= COVERAGE_TOLERANCE {
        return Ok(Vec::new());
    }
    let offset: f64 = rng.gen();
    let mut selected = Vec::new();
    let mut cum = 0.0;
    let pointers = total.ceil().min(defenders as f64);
    for (i, &c) in coverage.iter().enumerate() {
        let c = c.clamp(0.0, 1.0);
        if c > 0.0 {
            // First pointer at or past the arc start; inside the arc wins.
            let k = (cum - offset).ceil();
            let position = offset + k;
            if position < cum + c && k < pointers {
                selected.push(i);
            }
        }
        cum += c;
    }
    Ok(selected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn linear_curve(ua0: f64, ud0: f64) -> MetaCurve {
        MetaCurve {
            lambdas: vec![0.0, 1.0],
            attacker: vec![ua0, 0.0],
            defender: vec![ud0, 0.0],
        }
    }

    fn config() -> GameConfig {
        GameConfig::sized(1, 1, 1, 1)
    }

    #[test]
    fn the_builder_produces_the_documented_structure() {
        // Linear curves: one attack binary per neighborhood, no segment bits.
        let curves = vec![linear_curve(10.0, -10.0), linear_curve(6.0, -6.0)];
        let built = build_meta_mip(&curves, 1, 1).unwrap();
        assert_eq!(built.mip.binaries, built.layout.attack);
        assert_eq!(built.mip.binaries.len(), 2);
        assert!(built.layout.segment_bits.iter().all(|b| b.is_empty()));

        // Three-breakpoint curves: two segments, hence one selector bit each.
        let bent = MetaCurve {
            lambdas: vec![0.0, 0.5, 1.0],
            attacker: vec![8.0, 5.0, 1.0],
            defender: vec![-8.0, -5.0, -1.0],
        };
        let curves = vec![bent.clone(), bent.clone(), bent.clone(), bent];
        let built = build_meta_mip(&curves, 2, 2).unwrap();
        assert!(built.layout.segment_bits.iter().all(|b| b.len() == 1));
        assert_eq!(built.mip.binaries.len(), 4 + 4);
        assert_eq!(built.layout.resource_rows.len(), 2);
        assert_eq!(built.layout.best_response_rows.len(), 8);

        // The resource rows really are the advertised equalities.
        for (&row, expect) in built.layout.resource_rows.iter().zip([2.0, 2.0]) {
            let r = &built.mip.lp.rows[row];
            assert!(matches!(r.sense, Sense::Eq));
            assert_eq!(r.rhs, expect);
        }
    }

    #[test]
    fn too_few_neighborhoods_are_rejected() {
        let curves = vec![linear_curve(10.0, -10.0), linear_curve(6.0, -6.0)];
        assert!(matches!(
            build_meta_mip(&curves, 2, 1),
            Err(MetaError::TooFewNeighborhoods { neighborhoods: 2, attackers: 2 })
        ));
        assert!(matches!(
            solve_meta(&curves, 3, 1, &config()),
            Err(MetaError::TooFewNeighborhoods { .. })
        ));
    }

    #[test]
    fn malformed_curves_are_rejected() {
        let mut c = linear_curve(10.0, -10.0);
        c.lambdas = vec![0.0, 0.5];
        assert!(matches!(
            build_meta_mip(&[c, linear_curve(1.0, -1.0)], 1, 1),
            Err(MetaError::BadCurve { index: 0, .. })
        ));
        let rising = MetaCurve {
            lambdas: vec![0.0, 1.0],
            attacker: vec![1.0, 2.0],
            defender: vec![-1.0, 0.0],
        };
        assert!(matches!(
            build_meta_mip(&[rising, linear_curve(1.0, -1.0)], 1, 1),
            Err(MetaError::BadCurve { index: 0, .. })
        ));
    }

    #[test]
    fn two_neighborhoods_equalize_at_the_textbook_coverage() {
        let curves = vec![linear_curve(10.0, -10.0), linear_curve(6.0, -6.0)];
        let sol = solve_meta(&curves, 1, 1, &config()).unwrap();
        assert!((sol.coverage[0] - 0.625).abs() < 1e-6, "coverage {:?}", sol.coverage);
        assert!((sol.coverage[1] - 0.375).abs() < 1e-6, "coverage {:?}", sol.coverage);
        assert!((sol.value_d + 3.75).abs() < 1e-6, "value {}", sol.value_d);
        assert_eq!(sol.attacked.len(), 1);
        assert!(sol.optimal);
        threshold_certificate(&curves, &sol, 1e-6).unwrap();

        let oracle = meta_oracle_enumerate(&curves, 1, 1).unwrap();
        assert!((oracle.value_d - sol.value_d).abs() < 1e-6);
        assert!((oracle.coverage[0] - 0.625).abs() < 1e-6);
        assert_eq!(oracle.attacked, vec![0], "ties keep the first subset");
        threshold_certificate(&curves, &oracle, 1e-6).unwrap();
    }

    #[test]
    fn saturated_defense_silences_the_raider() {
        let curves =
            vec![linear_curve(5.0, -5.0), linear_curve(4.0, -4.0), linear_curve(3.0, -3.0)];
        let sol = solve_meta(&curves, 1, 5, &config()).unwrap();
        assert!(sol.coverage.iter().all(|&c| (c - 1.0).abs() < 1e-6), "{:?}", sol.coverage);
        assert!(sol.value_a.abs() < 1e-6);
        assert!(sol.value_d.abs() < 1e-6);
        threshold_certificate(&curves, &sol, 1e-6).unwrap();
    }

    #[test]
    fn with_no_defenders_the_raider_takes_the_richest_neighborhoods() {
        let curves = vec![
            linear_curve(10.0, -10.0),
            linear_curve(8.0, -8.0),
            linear_curve(6.0, -6.0),
            linear_curve(4.0, -4.0),
        ];
        let sol = solve_meta(&curves, 3, 0, &config()).unwrap();
        assert_eq!(sol.attacked, vec![0, 1, 2]);
        assert!(sol.coverage.iter().all(|&c| c.abs() < 1e-9));
        // The threshold separates the third-best from the fourth-best value.
        assert!(sol.threshold >= 4.0 - 1e-6 && sol.threshold <= 6.0 + 1e-6, "{}", sol.threshold);
        assert!((sol.value_d + 24.0).abs() < 1e-6);
        assert!((sol.value_a - 24.0).abs() < 1e-6);

        let oracle = meta_oracle_enumerate(&curves, 3, 0).unwrap();
        assert_eq!(oracle.attacked, vec![0, 1, 2]);
        assert!((oracle.value_d - sol.value_d).abs() < 1e-6);
    }

    fn random_curves(rng: &mut ChaCha20Rng, n: usize) -> Vec<MetaCurve> {
        (0..n)
            .map(|_| {
                let bent = rng.gen_bool(0.5);
                let ua0 = rng.gen_range(2.0..20.0f64);
                let ua1 = ua0 * rng.gen_range(0.0..0.8);
                let ud1 = -rng.gen_range(0.0..5.0f64);
                let ud0 = ud1 - rng.gen_range(0.5..15.0);
                if bent {
                    let mid = rng.gen_range(0.2..0.8);
                    MetaCurve {
                        lambdas: vec![0.0, mid, 1.0],
                        attacker: vec![ua0, rng.gen_range(ua1..=ua0), ua1],
                        defender: vec![ud0, rng.gen_range(ud0..=ud1), ud1],
                    }
                } else {
                    MetaCurve {
                        lambdas: vec![0.0, 1.0],
                        attacker: vec![ua0, ua1],
                        defender: vec![ud0, ud1],
                    }
                }
            })
            .collect()
    }

    #[test]
    fn the_oracle_and_the_integer_solver_agree_on_random_curves() {
        let mut rng = ChaCha20Rng::seed_from_u64(40);
        for case in 0..12 {
            let n = rng.gen_range(3..=6);
            let curves = random_curves(&mut rng, n);
            let attackers = rng.gen_range(1..=2.min(n as u32 - 1));
            let defenders = rng.gen_range(1..=2);
            let sol = solve_meta(&curves, attackers, defenders, &config()).unwrap();
            let oracle = meta_oracle_enumerate(&curves, attackers, defenders).unwrap();
            assert!(
                (sol.value_d - oracle.value_d).abs() < 1e-5,
                "case {case}: solver {} vs oracle {}",
                sol.value_d,
                oracle.value_d
            );
            threshold_certificate(&curves, &sol, 1e-5)
                .unwrap_or_else(|e| panic!("case {case} solver certificate: {e}"));
            threshold_certificate(&curves, &oracle, 1e-5)
                .unwrap_or_else(|e| panic!("case {case} oracle certificate: {e}"));
            let total: f64 = sol.coverage.iter().sum();
            assert!(total <= defenders as f64 + 1e-6, "case {case}: coverage sums to {total}");
            assert_eq!(sol.attacked.len(), attackers as usize);
        }
    }

    #[test]
    fn identical_curves_tie_across_subsets() {
        let c = MetaCurve {
            lambdas: vec![0.0, 0.5, 1.0],
            attacker: vec![9.0, 4.0, 2.0],
            defender: vec![-9.0, -4.0, -2.0],
        };
        let curves = vec![c.clone(), c.clone(), c];
        let theta_cap = 9.0;
        let mut values = Vec::new();
        for pick in 0..3 {
            let mut attacked = [false; 3];
            attacked[pick] = true;
            let mut ranges = vec![(0, 2); 3];
            let sol = branch_subset(&curves, &attacked, 1.0, theta_cap, &mut ranges, f64::NEG_INFINITY)
                .unwrap()
                .unwrap();
            values.push(sol.value_d);
        }
        assert!((values[0] - values[1]).abs() < 1e-9);
        assert!((values[1] - values[2]).abs() < 1e-9);

        // With every neighborhood attacked there is a single subset and the
        // solve is one LP chain.
        let curves = vec![linear_curve(5.0, -5.0), linear_curve(3.0, -3.0)];
        let all = meta_oracle_enumerate(&curves, 2, 1).unwrap();
        assert_eq!(all.attacked, vec![0, 1]);
        threshold_certificate(&curves, &all, 1e-6).unwrap();
    }

    #[test]
    fn a_perturbed_program_keeps_the_solution_within_double_the_shift() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let curves = random_curves(&mut rng, 5);
        let sol = solve_meta(&curves, 2, 2, &config()).unwrap();
        for eps in [0.01, 0.1] {
            let shaken: Vec<MetaCurve> = curves
                .iter()
                .map(|c| MetaCurve {
                    lambdas: c.lambdas.clone(),
                    attacker: c
                        .attacker
                        .iter()
                        .map(|v| v + rng.gen_range(-eps..=eps))
                        .collect(),
                    defender: c
                        .defender
                        .iter()
                        .map(|v| v + rng.gen_range(-eps..=eps))
                        .collect(),
                })
                .collect();
            threshold_certificate(&shaken, &sol, 2.0 * eps + 1e-9)
                .unwrap_or_else(|e| panic!("eps {eps}: {e}"));
        }
    }

    #[test]
    fn coverage_sampling_matches_the_marginals_exactly() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);

        // Certain coverage always comes back.
        for _ in 0..50 {
            assert_eq!(implement_coverage(&[1.0, 0.0], 1, &mut rng).unwrap(), vec![0]);
        }

        // A split unit: exactly one selection per draw, half-half marginals.
        let draws = 20_000;
        let mut counts = [0u32; 2];
        for _ in 0..draws {
            let picked = implement_coverage(&[0.5, 0.5], 1, &mut rng).unwrap();
            assert_eq!(picked.len(), 1);
            counts[picked[0]] += 1;
        }
        // 3σ for a fair coin over 20k draws is about 0.0106.
        let f = counts[0] as f64 / draws as f64;
        assert!((f - 0.5).abs() < 0.011, "marginal {f}");

        // The textbook equalizer split.
        let coverage = [0.625, 0.375];
        let mut counts = [0u32; 2];
        for _ in 0..draws {
            let picked = implement_coverage(&coverage, 1, &mut rng).unwrap();
            assert_eq!(picked.len(), 1);
            counts[picked[0]] += 1;
        }
        for (i, &c) in coverage.iter().enumerate() {
            let f = counts[i] as f64 / draws as f64;
            let sigma = (c * (1.0 - c) / draws as f64).sqrt();
            assert!((f - c).abs() < 3.0 * sigma + 1e-9, "marginal {i}: {f} vs {c}");
        }

        // Fractional totals leave some draws empty but never overdraw.
        let coverage = [0.4, 0.3, 0.2];
        let mut hits = [0u32; 3];
        for _ in 0..draws {
            let picked = implement_coverage(&coverage, 2, &mut rng).unwrap();
            assert!(picked.len() <= 2);
            for &i in &picked {
                hits[i] += 1;
            }
        }
        for (i, &c) in coverage.iter().enumerate() {
            let f = hits[i] as f64 / draws as f64;
            let sigma = (c * (1.0 - c) / draws as f64).sqrt();
            assert!((f - c).abs() < 3.0 * sigma + 1e-9, "marginal {i}: {f} vs {c}");
        }
    }

    #[test]
    fn coverage_sampling_rejects_bad_vectors() {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert!(matches!(
            implement_coverage(&[1.2, 0.0], 2, &mut rng),
            Err(MetaError::BadCoverage(_))
        ));
        assert!(matches!(
            implement_coverage(&[0.8, 0.8], 1, &mut rng),
            Err(MetaError::BadCoverage(_))
        ));
        assert_eq!(implement_coverage(&[0.0, 0.0], 1, &mut rng).unwrap(), Vec::<usize>::new());
    }

    #[test]
    fn the_certificate_flags_a_broken_threshold() {
        let curves = vec![linear_curve(10.0, -10.0), linear_curve(6.0, -6.0)];
        let mut sol = solve_meta(&curves, 1, 1, &config()).unwrap();
        sol.threshold += 1.0;
        let err = threshold_certificate(&curves, &sol, 1e-6).unwrap_err();
        assert!(err.contains("below the threshold"), "{err}");
    }
}
