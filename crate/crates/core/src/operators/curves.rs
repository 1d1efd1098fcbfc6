//! Periodic box eigenvalues `μ̃_i(x)` of size `q_k` as functions of the phase,
//! and the comparison bounds between them.

use rayon::prelude::*;
use serde::Serialize;

use super::eigen::periodic_eigenvalues;
use super::{Model, Side};
use crate::caps::{check_cap, Caps};
use crate::circle_maps::Phase;
use crate::error::{Error, Result};

pub const CURVE_SLACK: f64 = 1e-8;
/// `ε` in the vertical separation bound.
pub const VERTICAL_EPSILON: f64 = 0.5;
const POINTS_PER_INTERVAL: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub phase: Phase,
    pub x: f64,
    /// `l` with the point in `I_l = [β_l, β_{l+1})`.
    pub interval: usize,
    /// Left limit at a discontinuity rather than the value there.
    pub left_limit: bool,
    /// `μ̃_0 ≤ … ≤ μ̃_{q−1}`
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenvalueCurves {
    pub level: usize,
    pub q: u64,
    pub q_next: u64,
    /// `β_l` as points of `[0, 1)`, increasing.
    pub betas: Vec<f64>,
    pub beta_phases: Vec<Phase>,
    /// Sorted by phase, left limits first.
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub pairs: u64,
    pub violations: u64,
    /// Smallest `bound − measured` (or `measured − bound` for lower bounds).
    pub worst_margin: f64,
}

impl BoundCheck {
    fn new() -> Self {
        BoundCheck {
            pairs: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
        }
    }

    fn record(&mut self, margin: f64) {
        self.pairs += 1;
        if margin < -CURVE_SLACK {
            self.violations += 1;
        }
        self.worst_margin = self.worst_margin.min(margin);
    }

    fn merge(mut self, o: BoundCheck) -> Self {
        self.pairs += o.pairs;
        self.violations += o.violations;
        self.worst_margin = self.worst_margin.min(o.worst_margin);
        self
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveChecks {
    pub q: u64,
    /// `λγ_−C_−ν ≤ μ̃_i(y) − μ̃_i(x) ≤ λγ_+C_+ν` inside one `I_l`.
    pub lipschitz: BoundCheck,
    /// `|μ̃_i(x) − μ̃_i(T^r x)| ≤ λγ_+C_+/q_{k+1}`, `|r| < q_k`.
    pub horizontal: BoundCheck,
    /// The same comparison restricted to shifts `r` for which no exchanged
    /// pair `T^m x`, `T^{m+q_k} x` straddles the jump of `f` at 0.
    pub horizontal_no_jump: BoundCheck,
    /// `|μ̃_i(x) − μ̃_i(y)| ≤ 3λγ_+C_+/q_k`.
    pub global: BoundCheck,
    /// `μ̃_{i+j}(x) − μ̃_i(x) ≥ λγ_−C_−(1−ε)j/q_k` for `j ≥ j_0`.
    pub vertical: BoundCheck,
    pub j0: u64,
    /// `μ̃_i(β−0) ≤ μ̃_{i+1}(β) ≤ μ̃_{i+1}(β−0)`.
    pub jump: BoundCheck,
}

impl CurveChecks {
    pub fn all_passed(&self) -> bool {
        self.lipschitz.passed()
            && self.horizontal.passed()
            && self.global.passed()
            && self.vertical.passed()
            && self.jump.passed()
    }
}

/// Samples `μ̃_i` at `grid` uniform ν-phases, at `POINTS_PER_INTERVAL` interior
/// points of every `I_l`, and on both sides of every `β_l`.
pub fn eigenvalue_curves(model: &Model, k: usize, grid: usize) -> Result<EigenvalueCurves> {
    let alpha = model.map.alpha();
    let q = alpha.q(k)?;
    let q_next = alpha.q(k + 1)?;
    if q < 3 {
        return Err(Error::InvalidInput(format!(
            "q_{k} = {q} is below the periodic minimum of 3"
        )));
    }
    check_cap("periodic eigen n", q as u128, Caps::global().eigen_periodic as u128)?;
    let beta_phases = model.map.discontinuity_phases(q);
    let mut samples: Vec<(Phase, bool)> = Vec::new();
    for (l, &b) in beta_phases.iter().enumerate() {
        let next = beta_phases.get(l + 1).copied().unwrap_or(Phase::ZERO);
        let width = b.arc_to(next).0;
        samples.push((b, false));
        samples.push((b, true));
        for s in 1..=POINTS_PER_INTERVAL as u128 {
            let offset = width / (POINTS_PER_INTERVAL as u128 + 1) * s;
            samples.push((b.wrapping_add(Phase(offset)), false));
        }
    }
    for i in 0..grid as u64 {
        samples.push((Phase::grid(i, grid as u64), false));
    }
    samples.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    samples.dedup();
    let points = samples
        .par_iter()
        .map(|&(phase, left)| {
            let side = if left { Side::Left } else { Side::Right };
            let diag = model.site_values(phase, q as usize, side);
            let mu = periodic_eigenvalues(&diag)?;
            let l = beta_phases.partition_point(|&b| b <= phase) - 1;
            let interval = if left { (l + q as usize - 1) % q as usize } else { l };
            Ok(CurvePoint {
                phase,
                x: model.map.point(phase),
                interval,
                left_limit: left,
                mu,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EigenvalueCurves {
        level: k,
        q,
        q_next,
        betas: beta_phases.iter().map(|&b| model.map.point(b)).collect(),
        beta_phases,
        points,
    })
}

impl EigenvalueCurves {
    /// `Λ_i = μ̃_{(i+l) mod q}` on `I_l`.
    pub fn stitched(&self, i: usize, point: usize) -> f64 {
        let p = &self.points[point];
        p.mu[(i + p.interval) % self.q as usize]
    }

    /// Rows `x,i,mu`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,i,mu\n");
        for p in &self.points {
            for (i, m) in p.mu.iter().enumerate() {
                out.push_str(&format!("{:.17e},{},{:.17e}\n", p.x, i, m));
            }
        }
        out
    }

    /// ν-mass from `a` to `b` along the positive direction; a left limit at
    /// `β` counts as the point `β` itself.
    fn nu(a: &CurvePoint, b: &CurvePoint) -> f64 {
        a.phase.arc_to(b.phase).to_unit()
    }

    /// Runs every bound; `horizontal_bases` base phases are shifted by all
    /// `|r| < q_k` for the horizontal comparison.
    pub fn check(&self, model: &Model, horizontal_bases: usize) -> Result<CurveChecks> {
        let q = self.q as usize;
        let (gm, gp) = model.potential.slope_constants();
        let (cm, cp) = model.map.constants();
        let lam = model.lambda;
        let lower_rate = lam * gm * cm;
        let upper_rate = lam * gp * cp;

        let mut lipschitz = BoundCheck::new();
        let mut by_interval: Vec<Vec<&CurvePoint>> = vec![Vec::new(); q];
        for p in &self.points {
            by_interval[p.interval].push(p);
        }
        for members in &mut by_interval {
            // The left limit at β_{l+1} closes the interval.
            members.sort_by_key(|p| (p.left_limit, p.phase));
            for a in 0..members.len() {
                for b in a + 1..members.len() {
                    let (x, y) = (members[a], members[b]);
                    let nu = Self::nu(x, y);
                    for i in 0..q {
                        let d = y.mu[i] - x.mu[i];
                        lipschitz.record((d - lower_rate * nu).min(upper_rate * nu - d));
                    }
                }
            }
        }

        let mut global = BoundCheck::new();
        let global_bound = 3.0 * upper_rate / q as f64;
        let right_points: Vec<&CurvePoint> = self.points.iter().filter(|p| !p.left_limit).collect();
        for i in 0..q {
            let (lo, hi) = right_points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.mu[i]), hi.max(p.mu[i]))
            });
            let n = right_points.len() as u64;
            global.pairs += n * (n - 1) / 2;
            let margin = global_bound - (hi - lo);
            if margin < -CURVE_SLACK {
                global.violations += right_points
                    .iter()
                    .flat_map(|a| right_points.iter().map(move |b| (a.mu[i] - b.mu[i]).abs()))
                    .filter(|d| *d > global_bound + CURVE_SLACK)
                    .count() as u64
                    / 2;
            }
            global.worst_margin = global.worst_margin.min(margin);
        }

        let j0 = (2.0 * gp * cp / (VERTICAL_EPSILON * gm * cm)).ceil() as usize;
        let vertical_rate = lower_rate * (1.0 - VERTICAL_EPSILON) / q as f64;
        let mut vertical = BoundCheck::new();
        for p in &right_points {
            for j in j0.max(1)..q {
                for i in 0..q - j {
                    vertical.record(p.mu[i + j] - p.mu[i] - vertical_rate * j as f64);
                }
            }
        }

        let mut jump = BoundCheck::new();
        for w in self.points.windows(2) {
            let (left, right) = (&w[0], &w[1]);
            if left.left_limit && !right.left_limit && left.phase == right.phase {
                for i in 0..q - 1 {
                    let a = right.mu[i + 1] - left.mu[i];
                    let b = left.mu[i + 1] - right.mu[i + 1];
                    jump.record(a.min(b));
                }
            }
        }

        let horizontal_bound = upper_rate / self.q_next as f64;
        let alpha = model.map.alpha();
        // T^{q_k} moves every phase by the short residual of sign (−1)^k.
        let shift = alpha.frac_of_multiple(self.q as i128);
        let forward = self.level % 2 == 0;
        let straddles = |p: Phase| {
            if forward {
                p.0.checked_add(shift).map_or(true, |v| v == 0)
            } else {
                p.0 < shift.wrapping_neg()
            }
        };
        let (horizontal, horizontal_no_jump) = (0..horizontal_bases as u64)
            .into_par_iter()
            .map(|b| -> Result<(BoundCheck, BoundCheck)> {
                // Offset the bases off the grid so they avoid discontinuities.
                let base = Phase::grid(b, horizontal_bases as u64).wrapping_add(Phase(1u128 << 100));
                let at = |r: i64| -> Result<Vec<f64>> {
                    let p = base.rotate(r as i128, alpha);
                    periodic_eigenvalues(&model.site_values(p, q, Side::Right))
                };
                let mu0 = at(0)?;
                let mut all = BoundCheck::new();
                let mut clean = BoundCheck::new();
                for r in -(q as i64 - 1)..=(q as i64 - 1) {
                    if r == 0 {
                        continue;
                    }
                    let mu = at(r)?;
                    let worst = mu0
                        .iter()
                        .zip(&mu)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    all.record(horizontal_bound - worst);
                    let exchanged = r.min(0)..r.max(0);
                    if !exchanged.into_iter().any(|m| straddles(base.rotate(m as i128, alpha))) {
                        clean.record(horizontal_bound - worst);
                    }
                }
                Ok((all, clean))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold((BoundCheck::new(), BoundCheck::new()), |(a, c), (x, y)| (a.merge(x), c.merge(y)));

        Ok(CurveChecks {
            q: self.q,
            lipschitz,
            horizontal,
            horizontal_no_jump,
            global,
            vertical,
            j0: j0 as u64,
            jump,
        })
    }
}
