//! Eigenvalues by bisection on counting functions.

use super::sweep::{count_dirichlet, count_periodic, spectral_bounds};
use crate::error::{Error, Result};

pub(crate) const EIGEN_TOLERANCE: f64 = 1e-12;

/// Smallest `E` in `[lo, hi]` with `pred(E)`, assuming `pred` is monotone.
pub(crate) fn bisect(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    while hi - lo > EIGEN_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The `i`-th (0-based) Dirichlet eigenvalue.
pub fn dirichlet_eigenvalue(diag: &[f64], i: usize, bounds: (f64, f64)) -> f64 {
    bisect(bounds.0, bounds.1, |e| count_dirichlet(diag, e) > i)
}

/// Eigenvalues with indices in `range` for a monotone counting function,
/// found by splitting `[lo, hi]` until each piece holds one eigenvalue.
fn isolate(
    count: &impl Fn(f64) -> usize,
    lo: f64,
    hi: f64,
    range: std::ops::Range<usize>,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(range.len());
    let mut stack = vec![(lo, hi, count(lo), count(hi))];
    // Depth-first, upper half pushed first so output comes out ascending.
    while let Some((a, b, ca, cb)) = stack.pop() {
        let first = ca.max(range.start);
        let last = cb.min(range.end);
        if first >= last {
            continue;
        }
        let mid = 0.5 * (a + b);
        if b - a <= EIGEN_TOLERANCE || mid <= a || mid >= b {
            out.extend(std::iter::repeat(mid).take(last - first));
            continue;
        }
        if cb - ca == 1 {
            out.push(bisect(a, b, |e| count(e) > ca));
            continue;
        }
        let cm = count(mid);
        stack.push((mid, b, cm, cb));
        stack.push((a, mid, ca, cm));
    }
    out
}

/// Dirichlet eigenvalues with indices in `range`, ascending.
pub fn dirichlet_eigenvalues_in(diag: &[f64], range: std::ops::Range<usize>) -> Vec<f64> {
    let (lo, hi) = spectral_bounds(diag);
    isolate(&|e| count_dirichlet(diag, e), lo - 1e-9, hi + 1e-9, range)
}

pub fn dirichlet_eigenvalues(diag: &[f64]) -> Vec<f64> {
    dirichlet_eigenvalues_in(diag, 0..diag.len())
}

/// Indices `i` with eigenvalue `μ_i ∈ [e1, e2]`.
pub fn dirichlet_index_range(diag: &[f64], e1: f64, e2: f64) -> std::ops::Range<usize> {
    let below = count_dirichlet(diag, e1 - f64::EPSILON * e1.abs().max(1.0));
    let upto = count_dirichlet(diag, e2);
    below..upto.max(below)
}

/// Periodic eigenvalues, ascending.
pub fn periodic_eigenvalues(diag: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n < 3 {
        return Err(Error::InvalidInput("periodic boxes need n ≥ 3".into()));
    }
    let (lo, hi) = spectral_bounds(diag);
    let count = |e: f64| count_periodic(diag, e);
    let (lo, hi) = (lo - 1e-9, hi + 1e-9);
    if count(lo) != 0 || count(hi) != n {
        return Err(Error::BracketFailure { index: 0 });
    }
    Ok(isolate(&count, lo, hi, 0..n))
}
