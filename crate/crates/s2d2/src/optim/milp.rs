//! Best-first branch and bound over binary variables.
//!
//! Every node's relaxation is solved eagerly at creation, so the heap always
//! holds true bounds and the search can stop the moment the best open bound
//! drops to the incumbent (plus gap). Branching picks the most fractional
//! binary, ties to the lowest variable index, which keeps runs bit-for-bit
//! reproducible.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::lp::{solve_lp, LpOutcome, LpSolution};
use super::{
    MixedIntegerProgram, OptimError, DEFAULT_LP_TOLERANCE, DEFAULT_MILP_GAP, MILP_NODE_CAP,
};

#[derive(Debug, Clone, Copy)]
pub struct MilpOptions {
    /// Absolute optimality gap: open nodes with bound <= incumbent + gap are
    /// discarded.
    pub gap: f64,
    /// Maximum number of branch-and-bound nodes before giving up.
    pub node_cap: u64,
    pub lp_tolerance: f64,
    /// How far from 0/1 a binary may sit and still count as integral.
    pub int_tolerance: f64,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions {
            gap: DEFAULT_MILP_GAP,
            node_cap: MILP_NODE_CAP,
            lp_tolerance: DEFAULT_LP_TOLERANCE,
            int_tolerance: 1e-7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub value: f64,
    pub point: Vec<f64>,
    /// False when the node cap was hit before the tree was exhausted; the
    /// incumbent is then feasible but not certified optimal.
    pub optimal: bool,
    /// Nodes whose relaxation was solved (the root counts as one).
    pub nodes: u64,
    /// Tightest proven upper bound on the true optimum at termination.
    pub gap_bound: f64,
}

#[derive(Debug, Clone)]
pub enum MilpOutcome {
    Solved(MilpSolution),
    Infeasible,
    Unbounded,
}

struct OpenNode {
    bound: f64,
    id: u64,
    relax: LpSolution,
    /// (var, fixed value) pairs accumulated along the branch.
    fixes: Vec<(usize, f64)>,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.id == other.id
    }
}
impl Eq for OpenNode {}
impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OpenNode {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap: larger bound first, then smaller id first.
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Picks the branching variable: most fractional binary, ties to the lowest
/// index. Returns None when all binaries are integral within `int_tol`.
fn most_fractional(point: &[f64], binaries: &[usize], int_tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &v in binaries {
        let frac = (point[v] - point[v].round()).abs();
        if frac > int_tol {
            let better = match best {
                None => true,
                Some((_, bf)) => frac > bf + 1e-15,
            };
            if better {
                best = Some((v, frac));
            }
        }
    }
    best.map(|(v, _)| v)
}

/// Solves a maximization MILP whose integer variables are all binary.
pub fn solve_milp(mip: &MixedIntegerProgram, opts: &MilpOptions) -> Result<MilpOutcome, OptimError> {
    mip.validate()?;

    let mut scratch = mip.lp.clone();
    let base_bounds = scratch.bounds.clone();
    let mut solve_with = |fixes: &[(usize, f64)]| -> Result<LpOutcome, OptimError> {
        scratch.bounds.copy_from_slice(&base_bounds);
        for &(v, x) in fixes {
            scratch.bounds[v] = (x, x);
        }
        solve_lp(&scratch, opts.lp_tolerance)
    };

    let mut nodes: u64 = 1;
    let root = match solve_with(&[])? {
        LpOutcome::Optimal(s) => s,
        LpOutcome::Infeasible => return Ok(MilpOutcome::Infeasible),
        LpOutcome::Unbounded => return Ok(MilpOutcome::Unbounded),
    };

    let mut heap: BinaryHeap<OpenNode> = BinaryHeap::new();
    let mut next_id: u64 = 0;
    heap.push(OpenNode {
        bound: root.value,
        id: next_id,
        relax: root,
        fixes: Vec::new(),
    });

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut capped = false;

    while let Some(node) = heap.pop() {
        if std::env::var_os("S2D2_LP_TRACE").is_some() && nodes % 50 == 0 {
            eprintln!(
                "milp trace: nodes={} open={} bound={:.6} incumbent={:?}",
                nodes,
                heap.len(),
                node.bound,
                incumbent.as_ref().map(|(v, _)| *v)
            );
        }
        if let Some((inc, _)) = &incumbent {
            if node.bound <= inc + opts.gap {
                // Best-first order: every other open node is at least as weak.
                heap.push(node);
                break;
            }
        }
        match most_fractional(&node.relax.point, &mip.binaries, opts.int_tolerance) {
            None => {
                // Integral relaxation: feasible for the MILP. Snap binaries
                // exactly before storing.
                let mut point = node.relax.point.clone();
                for &v in &mip.binaries {
                    point[v] = point[v].round();
                }
                let better = incumbent.as_ref().is_none_or(|(inc, _)| node.relax.value > *inc);
                if better {
                    incumbent = Some((node.relax.value, point));
                }
            }
            Some(branch_var) => {
                for fix in [0.0, 1.0] {
                    if nodes >= opts.node_cap {
                        capped = true;
                        break;
                    }
                    let mut fixes = node.fixes.clone();
                    fixes.push((branch_var, fix));
                    nodes += 1;
                    match solve_with(&fixes)? {
                        LpOutcome::Optimal(s) => {
                            let skip = incumbent
                                .as_ref()
                                .is_some_and(|(inc, _)| s.value <= inc + opts.gap);
                            if !skip {
                                next_id += 1;
                                heap.push(OpenNode {
                                    bound: s.value,
                                    id: next_id,
                                    relax: s,
                                    fixes,
                                });
                            }
                        }
                        LpOutcome::Infeasible => {}
                        // A child region is contained in the parent's, whose
                        // relaxation was bounded, so this cannot happen.
                        LpOutcome::Unbounded => return Ok(MilpOutcome::Unbounded),
                    }
                }
                if capped {
                    break;
                }
            }
        }
    }

    let open_bound = heap.peek().map(|n| n.bound);
    match incumbent {
        Some((value, point)) => {
            let gap_bound = match open_bound {
                Some(b) if (capped || b > value) => b.max(value),
                _ => value,
            };
            Ok(MilpOutcome::Solved(MilpSolution {
                value,
                point,
                optimal: !capped,
                nodes,
                gap_bound,
            }))
        }
        None if capped => Err(OptimError::NodeCapNoIncumbent),
        None => Ok(MilpOutcome::Infeasible),
    }
}
