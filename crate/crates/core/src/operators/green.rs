//! Edge entries of the window resolvent `G = (H_{[a,b]} − E)^{-1}`.

use serde::{Deserialize, Serialize};

use super::scaled::ScaledValue;
use super::sweep::det_dirichlet;
use crate::error::{Error, Result};

/// Denominators below `10^-700` mark the window as singular.
pub const SINGULAR_LOG_FLOOR: f64 = -700.0 * std::f64::consts::LN_10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowEdge {
    /// Column `a`: `G(a, m)`.
    Left,
    /// Column `b`: `G(m, b)`.
    Right,
}

/// `G(a, m)` or `G(m, b)` for the window diagonal `window = v_a, …, v_b`, with
/// `row = m − a`. `a` and `b` are labels for error reports.
pub fn green_entry(
    window: &[f64],
    e: f64,
    row: usize,
    edge: WindowEdge,
    labels: (i64, i64),
) -> Result<ScaledValue> {
    let len = window.len();
    if row >= len {
        return Err(Error::InvalidInput("row outside the window".into()));
    }
    let denom = det_dirichlet(window, e);
    if denom.is_zero() || denom.log_mag < SINGULAR_LOG_FLOOR {
        return Err(Error::NearSingularWindow {
            a: labels.0,
            b: labels.1,
            energy: e,
        });
    }
    let (numer, parity) = match edge {
        WindowEdge::Left => (det_dirichlet(&window[row + 1..], e), row),
        WindowEdge::Right => (det_dirichlet(&window[..row], e), len - 1 - row),
    };
    let sign = if parity % 2 == 0 { 1.0 } else { -1.0 };
    Ok(numer.mul(ScaledValue::from_f64(sign)).div(denom))
}

/// Both edge entries for every row of a window, from one forward and one
/// backward sweep of determinants.
pub fn green_edges(window: &[f64], e: f64, labels: (i64, i64)) -> Result<(Vec<ScaledValue>, Vec<ScaledValue>)> {
    let len = window.len();
    // prefix[m] = det of the first m sites, suffix[m] = det of sites m..len.
    let prefix = leading_dets(window.iter().copied(), e);
    let suffix = {
        let mut s = leading_dets(window.iter().rev().copied(), e);
        s.reverse();
        s
    };
    let denom = prefix[len];
    if denom.is_zero() || denom.log_mag < SINGULAR_LOG_FLOOR {
        return Err(Error::NearSingularWindow {
            a: labels.0,
            b: labels.1,
            energy: e,
        });
    }
    let sgn = |p: usize| ScaledValue::from_f64(if p % 2 == 0 { 1.0 } else { -1.0 });
    let left = (0..len)
        .map(|m| suffix[m + 1].mul(sgn(m)).div(denom))
        .collect();
    let right = (0..len)
        .map(|m| prefix[m].mul(sgn(len - 1 - m)).div(denom))
        .collect();
    Ok((left, right))
}

/// `[P_0, P_1, …, P_len]` along the given order of diagonal entries.
fn leading_dets(diag: impl Iterator<Item = f64>, e: f64) -> Vec<ScaledValue> {
    let mut out = vec![ScaledValue::ONE];
    let mut prev = ScaledValue::ZERO;
    let mut cur = ScaledValue::ONE;
    for v in diag {
        let next = cur.mul(ScaledValue::from_f64(v - e)).sub(prev);
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}
