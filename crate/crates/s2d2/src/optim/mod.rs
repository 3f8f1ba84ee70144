//! Self-contained linear and mixed-integer optimization layer.
//!
//! Provides exactly what the game solvers upstream need and nothing more:
//!
//! - [`solve_lp`]: dense-tableau two-phase primal simplex with a Bland's-rule
//!   fallback for degenerate cycling,
//! - [`solve_milp`]: best-first branch-and-bound over LP relaxations with
//!   binary variables only,
//! - [`piecewise_encode`]: convex-combination encoding of a piecewise-linear
//!   curve with a logarithmic (reflected-Gray-code) number of binaries.
//!
//! Problem sizes stay in the "few thousand variables" regime, so a dense
//! tableau is deliberate; sparse factorizations and presolve are non-goals.

mod lp;
mod milp;
mod piecewise;

pub use lp::{solve_lp, LpOutcome, LpSolution};
pub use milp::{solve_milp, MilpOptions, MilpOutcome, MilpSolution};
pub use piecewise::{piecewise_encode, PiecewiseVars};

use thiserror::Error;

/// Default optimality / feasibility tolerance for the simplex.
pub const DEFAULT_LP_TOLERANCE: f64 = 1e-9;
/// Default absolute optimality gap for branch-and-bound.
pub const DEFAULT_MILP_GAP: f64 = 1e-6;
/// Simplex pivot budget before declaring a numeric failure.
pub const LP_ITERATION_CAP: u64 = 1_000_000;
/// Branch-and-bound node budget before returning the incumbent as-is.
pub const MILP_NODE_CAP: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("variable {0} has lower bound {1}; finite lower bounds are required")]
    UnboundedBelow(usize, f64),
    #[error("simplex iteration cap ({LP_ITERATION_CAP}) exceeded")]
    IterationCap,
    #[error("branch-and-bound node cap exceeded with no incumbent")]
    NodeCapNoIncumbent,
    #[error("piecewise breakpoints invalid: {0}")]
    Piecewise(String),
}

/// Row sense of a linear constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// One sparse constraint row: `Σ coeffs · x  sense  rhs`.
#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A linear program in maximization form.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    /// Objective coefficients (maximize `objective · x`).
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    /// Per-variable `(lower, upper)`; upper may be `f64::INFINITY`.
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// Checks index ranges and bound ordering; every solver entry point calls this.
    pub fn validate(&self) -> Result<(), OptimError> {
        let n = self.objective.len();
        if self.bounds.len() != n {
            return Err(OptimError::Dimension(format!(
                "{} objective coefficients vs {} bounds",
                n,
                self.bounds.len()
            )));
        }
        for (v, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !lo.is_finite() {
                return Err(OptimError::UnboundedBelow(v, lo));
            }
            if lo > hi {
                return Err(OptimError::Dimension(format!(
                    "variable {v} bounds are inverted: [{lo}, {hi}]"
                )));
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            for &(v, _) in &row.coeffs {
                if v >= n {
                    return Err(OptimError::Dimension(format!(
                        "row {r} references variable {v} but there are only {n}"
                    )));
                }
            }
            if !row.rhs.is_finite() {
                return Err(OptimError::Dimension(format!("row {r} has non-finite rhs")));
            }
        }
        Ok(())
    }

    /// Plain-text dump (objective line, then one line per constraint) for
    /// external cross-checking of a misbehaving program.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let term = |v: usize, c: f64| format!("{c:+}*x{v}");
        let _ = writeln!(
            out,
            "max {}",
            self.objective
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(v, &c)| term(v, c))
                .collect::<Vec<_>>()
                .join(" ")
        );
        for row in &self.rows {
            let lhs = row
                .coeffs
                .iter()
                .map(|&(v, c)| term(v, c))
                .collect::<Vec<_>>()
                .join(" ");
            let op = match row.sense {
                Sense::Le => "<=",
                Sense::Eq => "=",
                Sense::Ge => ">=",
            };
            let _ = writeln!(out, "{lhs} {op} {}", row.rhs);
        }
        for (v, &(lo, hi)) in self.bounds.iter().enumerate() {
            let _ = writeln!(out, "{lo} <= x{v} <= {hi}");
        }
        out
    }
}

/// A linear program plus the set of variables constrained to {0, 1}.
#[derive(Debug, Clone)]
pub struct MixedIntegerProgram {
    pub lp: LinearProgram,
    pub binaries: Vec<usize>,
}

impl MixedIntegerProgram {
    pub fn validate(&self) -> Result<(), OptimError> {
        self.lp.validate()?;
        let n = self.lp.objective.len();
        for &v in &self.binaries {
            if v >= n {
                return Err(OptimError::Dimension(format!(
                    "binary index {v} out of range ({n} variables)"
                )));
            }
            let (lo, hi) = self.lp.bounds[v];
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) {
                return Err(OptimError::Dimension(format!(
                    "binary variable {v} has bounds [{lo}, {hi}] outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Incremental builder used by the meta-game assembly and the tests.
#[derive(Debug, Default, Clone)]
pub struct MipBuilder {
    objective: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    rows: Vec<Row>,
    binaries: Vec<usize>,
}

impl MipBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a continuous variable and returns its index.
    pub fn var(&mut self, lo: f64, hi: f64, obj: f64) -> usize {
        self.objective.push(obj);
        self.bounds.push((lo, hi));
        self.objective.len() - 1
    }

    /// Adds a {0,1} variable and returns its index.
    pub fn binary(&mut self, obj: f64) -> usize {
        let v = self.var(0.0, 1.0, obj);
        self.binaries.push(v);
        v
    }

    pub fn row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Row { coeffs, sense, rhs });
    }

    /// Overwrites the objective coefficient of an existing variable.
    pub fn set_objective(&mut self, var: usize, coef: f64) {
        self.objective[var] = coef;
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn into_lp(self) -> LinearProgram {
        LinearProgram {
            objective: self.objective,
            rows: self.rows,
            bounds: self.bounds,
        }
    }

    pub fn into_mip(self) -> MixedIntegerProgram {
        let binaries = self.binaries.clone();
        MixedIntegerProgram {
            lp: self.into_lp(),
            binaries,
        }
    }
}
