//! Piecewise-linear function encoding with logarithmically many binaries.
//!
//! Classic convex-combination model: one weight per breakpoint, weights sum
//! to one, the input and every output are weight-averages of the breakpoint
//! columns. Adjacency (at most two nonzero weights, on a shared segment) is
//! enforced by ceil(log2(segments)) binaries whose values spell a reflected
//! Gray code of the active segment. Adjacent segments differ in one bit, so
//! a weight survives exactly when the bits match one of its two segments;
//! code words that name no segment zero out every weight and die against the
//! sum-to-one row.

use super::{MipBuilder, OptimError, Sense};

/// Variable indices added to the builder by [`piecewise_encode`].
#[derive(Debug, Clone)]
pub struct PiecewiseVars {
    /// One convex weight per breakpoint, in `[0, 1]`.
    pub weights: Vec<usize>,
    /// Segment-selector binaries; empty when there is a single segment.
    pub gray_bits: Vec<usize>,
    /// One output variable per curve, constrained to the interpolated value.
    pub outputs: Vec<usize>,
}

#[inline]
fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Adds variables and rows tying `x_var` and one output per curve to the
/// piecewise-linear interpolation through `(xs[i], curve[i])`. The same
/// weights drive every curve, so several outputs of the same argument cost
/// one set of binaries.
pub fn piecewise_encode(
    b: &mut MipBuilder,
    x_var: usize,
    xs: &[f64],
    curves: &[&[f64]],
) -> Result<PiecewiseVars, OptimError> {
    let s = xs.len();
    if s < 2 {
        return Err(OptimError::Piecewise(format!(
            "need at least 2 breakpoints, got {s}"
        )));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(OptimError::Piecewise(
            "breakpoint arguments must be strictly increasing".into(),
        ));
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(OptimError::Piecewise("non-finite breakpoint".into()));
    }
    for (k, curve) in curves.iter().enumerate() {
        if curve.len() != s {
            return Err(OptimError::Piecewise(format!(
                "curve {k} has {} values for {s} breakpoints",
                curve.len()
            )));
        }
        if curve.iter().any(|v| !v.is_finite()) {
            return Err(OptimError::Piecewise(format!("curve {k} has a non-finite value")));
        }
    }
    if x_var >= b.num_vars() {
        return Err(OptimError::Piecewise(format!("x variable {x_var} not in builder")));
    }

    let weights: Vec<usize> = (0..s).map(|_| b.var(0.0, 1.0, 0.0)).collect();

    // sum w = 1
    b.row(weights.iter().map(|&w| (w, 1.0)).collect(), Sense::Eq, 1.0);
    // x = sum w_i xs_i
    let mut x_row: Vec<(usize, f64)> = vec![(x_var, -1.0)];
    x_row.extend(weights.iter().zip(xs).map(|(&w, &x)| (w, x)));
    b.row(x_row, Sense::Eq, 0.0);

    let outputs: Vec<usize> = curves
        .iter()
        .map(|curve| {
            let lo = curve.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = curve.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let y = b.var(lo, hi, 0.0);
            let mut row: Vec<(usize, f64)> = vec![(y, -1.0)];
            row.extend(weights.iter().zip(curve.iter()).map(|(&w, &c)| (w, c)));
            b.row(row, Sense::Eq, 0.0);
            y
        })
        .collect();

    // Segment selector. Segment t (0-based, t in 0..s-1) spans breakpoints
    // t and t+1 and is assigned code gray(t).
    let nseg = s - 1;
    let nbits = usize::BITS as usize - (nseg - 1).leading_zeros() as usize;
    let nbits = if nseg <= 1 { 0 } else { nbits };
    let gray_bits: Vec<usize> = (0..nbits).map(|_| b.binary(0.0)).collect();

    for (bit, &y_bit) in gray_bits.iter().enumerate() {
        // Breakpoint i touches segments i-1 and i (clipped to range). If all
        // its segments carry bit value 1 the weight needs y_bit on; if all
        // carry 0 it needs y_bit off.
        let mut ones: Vec<(usize, f64)> = Vec::new();
        let mut zeros: Vec<(usize, f64)> = Vec::new();
        for i in 0..s {
            let lo_seg = i.saturating_sub(1);
            let hi_seg = i.min(nseg - 1);
            let all_one = (lo_seg..=hi_seg).all(|t| gray(t) >> bit & 1 == 1);
            let all_zero = (lo_seg..=hi_seg).all(|t| gray(t) >> bit & 1 == 0);
            if all_one {
                ones.push((weights[i], 1.0));
            } else if all_zero {
                zeros.push((weights[i], 1.0));
            }
        }
        if !ones.is_empty() {
            let mut row = ones;
            row.push((y_bit, -1.0));
            b.row(row, Sense::Le, 0.0);
        }
        if !zeros.is_empty() {
            let mut row = zeros;
            row.push((y_bit, 1.0));
            b.row(row, Sense::Le, 1.0);
        }
    }

    Ok(PiecewiseVars {
        weights,
        gray_bits,
        outputs,
    })
}
