//! Three-term recurrences for `P_n(x, E) = det(H_n(x) − E)` and Sturm counts.

use super::scaled::{LogProduct, ScaledValue};

/// Zero pivots are replaced by `−PIVMIN`.
pub(crate) const PIVMIN: f64 = 1e-290;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    /// `P_n`
    pub det: ScaledValue,
    /// `P_{n−1}`
    pub det_prev: ScaledValue,
    /// Eigenvalues of the full block that are `≤ E`.
    pub count: usize,
    /// Same for the leading `n − 1` block.
    pub count_prev: usize,
}

/// Pivots of `H − E` for the tridiagonal matrix with unit off-diagonals.
pub fn sweep(diag: &[f64], e: f64) -> Sweep {
    let n = diag.len();
    let mut prod = LogProduct::new();
    let mut prev_prod = LogProduct::new();
    let mut prev_pivot = 0.0f64;
    let mut count = 0usize;
    let mut count_prev = 0usize;
    let mut det_is_zero = false;
    for (i, &v) in diag.iter().enumerate() {
        let mut d = v - e;
        if i > 0 {
            d -= 1.0 / prev_pivot;
        }
        if i + 1 == n {
            prev_prod = prod;
            count_prev = count;
            if d == 0.0 {
                det_is_zero = true;
            }
        }
        if d.abs() < PIVMIN {
            d = -PIVMIN;
        }
        if d < 0.0 {
            count += 1;
        }
        prod.push(d);
        prev_pivot = d;
    }
    let det = if n == 0 {
        ScaledValue::ONE
    } else if det_is_zero {
        ScaledValue::ZERO
    } else {
        prod.finish()
    };
    let det_prev = if n == 0 {
        ScaledValue::ZERO
    } else {
        prev_prod.finish()
    };
    Sweep {
        det,
        det_prev,
        count,
        count_prev,
    }
}

/// `P_n(x, E)` for the Dirichlet box with the given diagonal.
pub fn det_dirichlet(diag: &[f64], e: f64) -> ScaledValue {
    sweep(diag, e).det
}

/// Number of Dirichlet eigenvalues `≤ E`.
pub fn count_dirichlet(diag: &[f64], e: f64) -> usize {
    sweep(diag, e).count
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicEval {
    /// `P̃_n(x, E) = P_n(x) − P_{n−2}(Tx) − 2(−1)^n`
    pub det: ScaledValue,
    /// Periodic eigenvalues `≤ E`.
    pub count: usize,
    /// Dirichlet eigenvalues `≤ E` of the same box.
    pub dirichlet_count: usize,
}

/// Periodic determinant and count for `n ≥ 3`.
///
/// Deleting the last site leaves the leading Dirichlet block `T`, whose
/// eigenvalues interlace the periodic ones, so the periodic count is the
/// inertia of `T − E` plus one when the Schur complement
/// `P̃_n / P_{n−1}` is not positive. The inertia and the complement come from
/// a symmetric block factorization of `T − E` with 1×1 or 2×2 pivots, which
/// stays accurate for clustered eigenvalues and tiny pivots.
pub fn periodic_eval(diag: &[f64], e: f64) -> PeriodicEval {
    let n = diag.len();
    debug_assert!(n >= 3);
    let full = sweep(diag, e);
    let inner = sweep(&diag[1..n - 1], e).det;
    let corner = ScaledValue::from_f64(if n % 2 == 0 { -2.0 } else { 2.0 });
    let det = full.det.sub(inner).add(corner);
    PeriodicEval {
        det,
        count: bordered_inertia(diag, e),
        dirichlet_count: full.count,
    }
}

/// Periodic eigenvalues `≤ E`, without the determinant.
pub fn count_periodic(diag: &[f64], e: f64) -> usize {
    bordered_inertia(diag, e)
}

/// Bunch's threshold for tridiagonal block factorization: with unit
/// off-diagonals a 1×1 pivot `a` is taken when `|a|·σ ≥ (√5 − 1)/2`, `σ` the
/// largest entry next to it. Otherwise the 2×2 pivot has `|det| ≥ 1 − α`.
const PIVOT_ALPHA: f64 = 0.618_033_988_749_894_8;

/// Negative eigenvalues of `H̃ − E` when `H̃` is viewed as the block `T`
/// (sites `0..n−1`) bordered by site `n − 1`, coupled to sites `0` and `n − 2`.
fn bordered_inertia(diag: &[f64], e: f64) -> usize {
    let m = diag.len() - 1;
    let border = |i: usize| if i == 0 || i + 1 == m { 1.0 } else { 0.0 };
    let mut schur = diag[m] - e;
    let mut count = 0usize;
    // Current diagonal entry and border entry of the partially reduced row i.
    let mut a = diag[0] - e;
    let mut b = border(0);
    let mut i = 0;
    while i < m {
        let sigma = if i + 1 < m { (diag[i + 1] - e).abs().max(1.0) } else { 1.0 };
        if a.abs() * sigma >= PIVOT_ALPHA || i + 1 == m {
            let p = if a.abs() < PIVMIN { -PIVMIN } else { a };
            if p < 0.0 {
                count += 1;
            }
            schur -= b * (b / p);
            if i + 1 < m {
                a = diag[i + 1] - e - 1.0 / p;
                b = border(i + 1) - b / p;
            }
            i += 1;
        } else {
            // 2×2 pivot [[a, 1], [1, a2]] on rows i, i + 1.
            let a2 = diag[i + 1] - e;
            let b2 = border(i + 1);
            let mut d = a * a2 - 1.0;
            if d.abs() < PIVMIN {
                d = -PIVMIN;
            }
            count += if d < 0.0 {
                1
            } else if a2 < 0.0 {
                2
            } else {
                0
            };
            schur -= (a2 * b * b - 2.0 * b * b2 + a * b2 * b2) / d;
            if i + 2 < m {
                let (a0, b0) = (a, b);
                a = diag[i + 2] - e - a0 / d;
                b = border(i + 2) - (a0 * b2 - b0) / d;
            }
            i += 2;
        }
    }
    count + !(schur > 0.0) as usize
}

/// Gershgorin interval containing every eigenvalue of either boundary type.
pub fn spectral_bounds(diag: &[f64]) -> (f64, f64) {
    let lo = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo - 2.0, hi + 2.0)
}
