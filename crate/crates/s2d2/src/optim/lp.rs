//! Two-phase dense-tableau primal simplex.
//!
//! Rows are equilibrated to unit max |coefficient| on entry; upper bounds are
//! folded in as explicit rows and lower bounds by variable shifting, which
//! keeps the tableau logic uniform. Numerical hygiene rests on three guards:
//! pivots are refused on noise-scale elements, elimination residue below a
//! drop threshold is zeroed outright, and the tableau is periodically
//! refactorized — rebuilt from the pristine rows for the current basis — so
//! round-off cannot accumulate across more than a bounded pivot window.
//! Optimality and unboundedness are only declared on a freshly refactorized
//! tableau. Degeneracy is handled by switching to Bland's rule after
//! `3 * (rows + cols)` pivots without real objective progress; once engaged
//! it stays on.

use super::{LinearProgram, OptimError, Sense, LP_ITERATION_CAP};

/// Elimination residue below this is round-off; keeping it would feed later
/// pivot and pricing decisions pure noise.
const DROP_TOLERANCE: f64 = 1e-12;
/// Pivots between routine refactorizations.
const REFRESH_INTERVAL: u64 = 1_000;

/// Result of a successful solve.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub value: f64,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// (m+1) x (ncols+1) row-major; last row is the cost row, last column rhs.
    a: Vec<f64>,
    /// Pristine constraint rows (m x (ncols+1)), the refactorization source.
    a0: Vec<f64>,
    /// Objective of the current phase over all columns (rhs slot zero).
    c: Vec<f64>,
    m: usize,
    ncols: usize,
    basis: Vec<usize>,
    /// Columns that may never enter the basis again (artificials in phase 2).
    banned: Vec<bool>,
    tol: f64,
    pivots: u64,
    /// Pivot count at the last refactorization; equality with `pivots` means
    /// the tableau is exactly as trustworthy as the input data.
    fresh_at: u64,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * (self.ncols + 1) + c]
    }
    #[inline]
    fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.a[r * (self.ncols + 1) + c]
    }
    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.ncols)
    }

    /// Gauss-Jordan step on (row, col) across every row including the cost
    /// row; drops sub-noise residue. Does not touch the basis bookkeeping.
    fn eliminate(&mut self, row: usize, col: usize) {
        let w = self.ncols + 1;
        let inv = 1.0 / self.at(row, col);
        let base = row * w;
        for j in 0..w {
            self.a[base + j] *= inv;
        }
        self.a[base + col] = 1.0;
        for r in 0..=self.m {
            if r == row {
                continue;
            }
            let f = self.at(r, col);
            if f == 0.0 {
                continue;
            }
            let rb = r * w;
            for j in 0..w {
                let v = self.a[rb + j] - f * self.a[base + j];
                self.a[rb + j] = if v.abs() < DROP_TOLERANCE { 0.0 } else { v };
            }
            // Kill residual round-off in the pivot column outright.
            self.a[rb + col] = 0.0;
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        self.eliminate(row, col);
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Re-prices the cost row for the current phase objective on the current
    /// basis: cost = c − c_B · rows, with basic columns zeroed exactly.
    fn rebuild_cost_row(&mut self) {
        let w = self.ncols + 1;
        let base = self.m * w;
        for j in 0..w {
            self.a[base + j] = self.c[j];
        }
        for r in 0..self.m {
            let cb = self.c[self.basis[r]];
            if cb != 0.0 {
                for j in 0..w {
                    let v = self.a[base + j] - cb * self.a[r * w + j];
                    self.a[base + j] = if v.abs() < DROP_TOLERANCE { 0.0 } else { v };
                }
            }
        }
        for r in 0..self.m {
            self.a[base + self.basis[r]] = 0.0;
        }
    }

    /// Rebuilds the whole tableau from the pristine rows for the current
    /// basis, discarding accumulated elimination round-off. Each basic column
    /// is reduced to a unit vector with the pivot row chosen freely among the
    /// rows not yet claimed (complete pivoting over the basic submatrix) —
    /// the historical row-to-variable pairing may put a structural zero on
    /// its own diagonal, so rows are relabeled by where each unit lands.
    fn refactor(&mut self) {
        let w = self.ncols + 1;
        self.a[..self.m * w].copy_from_slice(&self.a0);
        let mut cols = self.basis.clone();
        let mut open_rows: Vec<usize> = (0..self.m).collect();
        let mut new_basis = vec![usize::MAX; self.m];
        while !cols.is_empty() {
            let mut best = -1.0;
            let mut pick = (0, 0); // (index into open_rows, index into cols)
            for (ri, &r) in open_rows.iter().enumerate() {
                for (ci, &c) in cols.iter().enumerate() {
                    let mag = self.at(r, c).abs();
                    if mag > best {
                        best = mag;
                        pick = (ri, ci);
                    }
                }
            }
            if best <= DROP_TOLERANCE {
                // Numerically singular basic submatrix: pair the leftovers
                // without elimination rather than divide by noise.
                for (&r, &c) in open_rows.iter().zip(cols.iter()) {
                    new_basis[r] = c;
                }
                break;
            }
            let r = open_rows.swap_remove(pick.0);
            let c = cols.swap_remove(pick.1);
            self.eliminate(r, c);
            new_basis[r] = c;
        }
        self.basis = new_basis;
        self.rebuild_cost_row();
        self.fresh_at = self.pivots;
        if std::env::var_os("S2D2_LP_TRACE_ALL").is_some() {
            eprintln!(
                "refactor at pivots={}, basis={:?}, rhs={:?}",
                self.pivots,
                self.basis,
                (0..=self.m).map(|i| self.rhs(i)).collect::<Vec<_>>()
            );
        }
    }

    /// Runs the simplex loop on the current cost row until optimal, unbounded,
    /// or the pivot budget runs out. Returns Ok(true) on optimal, Ok(false)
    /// on unbounded; either verdict is certified against a freshly
    /// refactorized tableau before being returned.
    fn optimize(&mut self) -> Result<bool, OptimError> {
        let stall_limit = 3 * (self.m + self.ncols) as u64;
        // A pivot element below this is cancellation noise relative to the
        // equilibrated data; dividing a row by it would blow the tableau up.
        let pivot_tol = self.tol * 100.0;
        let mut stall: u64 = 0;
        let mut bland = false;
        let mut skipped: Vec<usize> = Vec::new();
        loop {
            if self.pivots > LP_ITERATION_CAP {
                return Err(OptimError::IterationCap);
            }
            if self.pivots - self.fresh_at >= REFRESH_INTERVAL {
                self.refactor();
            }
            let cost = self.m;
            skipped.clear();
            // Entering column and leaving row are chosen together: a column
            // only enters on a numerically safe pivot element.
            let (e, r) = loop {
                // Entering: Dantzig (most positive reduced cost) until
                // degeneracy stalls progress, then Bland (lowest eligible).
                let mut enter: Option<usize> = None;
                if bland {
                    for j in 0..self.ncols {
                        if !self.banned[j]
                            && self.at(cost, j) > self.tol
                            && !skipped.contains(&j)
                        {
                            enter = Some(j);
                            break;
                        }
                    }
                } else {
                    let mut best = self.tol;
                    for j in 0..self.ncols {
                        let c = self.at(cost, j);
                        if !self.banned[j] && c > best && !skipped.contains(&j) {
                            best = c;
                            enter = Some(j);
                        }
                    }
                }
                let Some(e) = enter else {
                    // No improving column. Certify on fresh data only.
                    if self.pivots == self.fresh_at {
                        return Ok(true);
                    }
                    self.refactor();
                    skipped.clear();
                    continue;
                };

                // Ratio test, two passes. First the tightest ratio over rows
                // with a safe pivot element; right-hand sides that drifted
                // slightly negative are round-off and count as zero.
                let mut best_ratio = f64::INFINITY;
                let mut any_positive = false;
                for r in 0..self.m {
                    let coef = self.at(r, e);
                    if coef > self.tol {
                        any_positive = true;
                    }
                    if coef > pivot_tol {
                        let ratio = self.rhs(r).max(0.0) / coef;
                        if ratio < best_ratio {
                            best_ratio = ratio;
                        }
                    }
                }
                if best_ratio.is_infinite() {
                    if !any_positive {
                        // No positive entry at all: an unbounded ray, if the
                        // tableau can be trusted.
                        if self.pivots == self.fresh_at {
                            return Ok(false);
                        }
                        self.refactor();
                        skipped.clear();
                        continue;
                    }
                    // Only noise-scale pivots on offer: never divide by one.
                    skipped.push(e);
                    continue;
                }
                // Then the leaving row from the near-ties. The largest pivot
                // element keeps the elimination numerically tame — degenerate
                // vertices tie dozens of rows, and the tie-break decides what
                // the tableau is divided by. Under Bland's rule the lowest
                // basic index wins instead, preserving the anti-cycling
                // termination argument.
                let mut leave: Option<usize> = None;
                for r in 0..self.m {
                    let coef = self.at(r, e);
                    if coef > pivot_tol && self.rhs(r).max(0.0) / coef <= best_ratio + self.tol {
                        let better = match leave {
                            None => true,
                            Some(lr) => {
                                if bland {
                                    self.basis[r] < self.basis[lr]
                                } else {
                                    coef > self.at(lr, e)
                                }
                            }
                        };
                        if better {
                            leave = Some(r);
                        }
                    }
                }
                match leave {
                    Some(r) => break (e, r),
                    // A finite best ratio implies a row inside the tie band.
                    None => {
                        return Err(OptimError::Dimension("ratio test lost its row".into()))
                    }
                }
            };

            if std::env::var_os("S2D2_LP_TRACE_ALL").is_some() {
                eprintln!(
                    "pivot #{}: enter={} leave_row={} (basic {}), cost={:.3e}, rhs={:?}",
                    self.pivots,
                    e,
                    r,
                    self.basis[r],
                    self.at(cost, e),
                    (0..=self.m).map(|i| self.rhs(i)).collect::<Vec<_>>()
                );
            }
            let before = self.rhs(cost);
            self.pivot(r, e);
            // Progress is judged on the objective itself (the cost-row rhs is
            // its negation), relative to its scale: round-off wiggle must not
            // reset the clock, or a degenerate crawl never trips Bland's rule.
            if before - self.rhs(cost) > self.tol * (1.0 + before.abs()) {
                stall = 0;
            } else {
                stall += 1;
                if stall > stall_limit {
                    bland = true;
                }
            }
        }
    }
}

/// Solves `lp` to optimality within `tol` (primal simplex, two phases).
pub fn solve_lp(lp: &LinearProgram, tol: f64) -> Result<LpOutcome, OptimError> {
    lp.validate()?;
    let n = lp.objective.len();

    // Shift every variable by its lower bound so the working variables are
    // >= 0, and materialize finite upper bounds as extra rows.
    let lo: Vec<f64> = lp.bounds.iter().map(|b| b.0).collect();
    let mut rows: Vec<(Vec<(usize, f64)>, Sense, f64)> = Vec::with_capacity(lp.rows.len() + n);
    for row in &lp.rows {
        let shift: f64 = row.coeffs.iter().map(|&(v, c)| c * lo[v]).sum();
        rows.push((row.coeffs.clone(), row.sense, row.rhs - shift));
    }
    for (v, &(l, h)) in lp.bounds.iter().enumerate() {
        if h.is_finite() {
            rows.push((vec![(v, 1.0)], Sense::Le, h - l));
        }
    }

    // Row equilibration: scale every row to unit max |coefficient| so the
    // pivot tolerances mean the same thing whatever the stakes' magnitude.
    // The feasible set and objective are unchanged (slacks absorb the scale).
    for row in rows.iter_mut() {
        let maxabs = row.0.iter().map(|&(_, c)| c.abs()).fold(0.0f64, f64::max);
        if maxabs > 0.0 && maxabs != 1.0 {
            let inv = 1.0 / maxabs;
            for c in row.0.iter_mut() {
                c.1 *= inv;
            }
            row.2 *= inv;
        }
    }

    let m = rows.len();
    // Column layout: structural 0..n, then one slack/surplus per Le/Ge row,
    // then one artificial per row that needs it.
    let mut slack_col = vec![usize::MAX; m];
    let mut ncols = n;
    // Normalize to nonnegative rhs first so the senses below are final.
    for row in rows.iter_mut() {
        if row.2 < 0.0 {
            for c in row.0.iter_mut() {
                c.1 = -c.1;
            }
            row.2 = -row.2;
            row.1 = match row.1 {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }
    let mut surplus = Vec::new(); // (row, col, sign)
    for (i, row) in rows.iter().enumerate() {
        match row.1 {
            Sense::Le => {
                slack_col[i] = ncols;
                surplus.push((i, ncols, 1.0));
                ncols += 1;
            }
            Sense::Ge => {
                slack_col[i] = ncols;
                surplus.push((i, ncols, -1.0));
                ncols += 1;
            }
            Sense::Eq => {}
        }
    }
    let mut art_col = vec![usize::MAX; m];
    let art_start = ncols;
    for (i, row) in rows.iter().enumerate() {
        if !matches!(row.1, Sense::Le) {
            art_col[i] = ncols;
            ncols += 1;
        }
    }

    let w = ncols + 1;
    let mut t = Tableau {
        a: vec![0.0; (m + 1) * w],
        a0: Vec::new(),
        c: vec![0.0; w],
        m,
        ncols,
        basis: vec![usize::MAX; m],
        banned: vec![false; ncols],
        tol,
        pivots: 0,
        fresh_at: 0,
    };
    for (i, row) in rows.iter().enumerate() {
        for &(v, c) in &row.0 {
            *t.at_mut(i, v) += c;
        }
        *t.at_mut(i, ncols) = row.2;
        t.basis[i] = match row.1 {
            Sense::Le => slack_col[i],
            _ => art_col[i],
        };
    }
    for &(i, col, sign) in &surplus {
        *t.at_mut(i, col) = sign;
    }
    for (i, &ac) in art_col.iter().enumerate() {
        if ac != usize::MAX {
            *t.at_mut(i, ac) = 1.0;
        }
    }
    t.a0 = t.a[..m * w].to_vec();

    // Phase 1: maximize -(sum of artificials); the re-priced cost row comes
    // out as the sum of the artificial-basic rows, with artificials at zero.
    let need_phase1 = art_col.iter().any(|&c| c != usize::MAX);
    if need_phase1 {
        for &ac in art_col.iter().filter(|&&c| c != usize::MAX) {
            t.c[ac] = -1.0;
        }
        t.rebuild_cost_row();
        if !t.optimize()? {
            // Phase 1 objective is bounded above by 0, so this cannot happen.
            return Err(OptimError::Dimension("phase-1 reported unbounded".into()));
        }
        let infeasibility = t.rhs(m); // equals sum of artificials still in
        if infeasibility > (tol * 10.0).max(1e-7) {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive lingering artificial basics out where possible, pivoting on
        // the largest available coefficient for numerical safety.
        for r in 0..m {
            if t.basis[r] >= art_start {
                let mut best_j = usize::MAX;
                let mut best_c = tol * 10.0;
                for j in 0..art_start {
                    let c = t.at(r, j).abs();
                    if c > best_c {
                        best_c = c;
                        best_j = j;
                    }
                }
                if best_j != usize::MAX {
                    t.pivot(r, best_j);
                }
                // Otherwise the row is redundant; its zero artificial stays.
            }
        }
        for j in art_start..ncols {
            t.banned[j] = true;
        }
    }

    // Phase 2: the real objective, re-priced on the basis phase 1 left.
    t.c.fill(0.0);
    t.c[..n].copy_from_slice(&lp.objective);
    t.rebuild_cost_row();
    if !t.optimize()? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut point = lo;
    for r in 0..m {
        let b = t.basis[r];
        if b < n {
            point[b] += t.rhs(r);
        }
    }
    let value = lp
        .objective
        .iter()
        .zip(&point)
        .map(|(c, x)| c * x)
        .sum::<f64>();
    Ok(LpOutcome::Optimal(LpSolution { value, point }))
}
