//! Ergodic averages over the invariant measure: Lyapunov exponent, integrated
//! density of states, the Thouless relation between them, and the scans that
//! bound `|P_n|` from above and measure where it is small.

use rayon::prelude::*;
use serde::Serialize;

use crate::caps::{check_cap, Caps};
use crate::circle_maps::{Phase, SampleScheme};
use crate::error::{Error, Result};
use crate::operators::sweep::{count_periodic, sweep};
use crate::operators::{Model, Side, TransferProduct};
use crate::stats::{fit_line, mean_stderr};

/// Nodes of the ν-quadrature shared by every estimator.
pub const SCHEME: SampleScheme = SampleScheme::LowDiscrepancy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovEstimate {
    pub energy: f64,
    pub n: usize,
    pub samples: usize,
    pub value: f64,
    pub stderr: f64,
}

/// Mean of `(1/n) ln ‖M_n(x, E)‖` over `samples` ν-distributed phases.
pub fn lyapunov(model: &Model, e: f64, n: usize, samples: usize) -> Result<LyapunovEstimate> {
    if n < 100 || samples == 0 {
        return Err(Error::Precondition(
            "lyapunov needs n ≥ 100 and at least one sample".into(),
        ));
    }
    let phases = model.map.sample_phases(samples, SCHEME);
    let values: Vec<f64> = phases
        .par_iter()
        .map(|&p| {
            let mut m = TransferProduct::identity();
            for v in model.sites(p, Side::Right).take(n) {
                m.step(e, v);
            }
            m.log_norm() / n as f64
        })
        .collect();
    let (value, stderr) = mean_stderr(&values);
    Ok(LyapunovEstimate {
        energy: e,
        n,
        samples,
        value,
        stderr,
    })
}

/// `max{0, ln(λγ_−C_−/(2e))}`
pub fn lyapunov_lower_bound(model: &Model) -> f64 {
    let d = model.lambda * model.potential.gamma_minus() * model.map.c_minus();
    (d / (2.0 * std::f64::consts::E)).ln().max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdsEstimate {
    pub energy: f64,
    pub n: usize,
    pub samples: usize,
    pub value: f64,
    pub stderr: f64,
}

/// Mean of `Ñ_n(x, E)/n`, the normalized periodic counting function.
pub fn ids(model: &Model, e: f64, n: usize, samples: usize) -> Result<IdsEstimate> {
    check_ids_size(n, samples)?;
    let phases = model.map.sample_phases(samples, SCHEME);
    let values: Vec<f64> = phases
        .par_iter()
        .map(|&p| count_periodic(&model.site_values(p, n, Side::Right), e) as f64 / n as f64)
        .collect();
    let (value, stderr) = mean_stderr(&values);
    Ok(IdsEstimate {
        energy: e,
        n,
        samples,
        value,
        stderr,
    })
}

fn check_ids_size(n: usize, samples: usize) -> Result<()> {
    check_cap("periodic eigen n", n as u128, Caps::global().eigen_periodic as u128)?;
    if n < 3 || samples == 0 {
        return Err(Error::Precondition(
            "periodic boxes need n ≥ 3 and at least one sample".into(),
        ));
    }
    Ok(())
}

/// Rows `E,n,samples,value,stderr`.
pub fn estimates_csv<'a>(rows: impl IntoIterator<Item = (f64, usize, usize, f64, f64)> + 'a) -> String {
    let mut out = String::from("E,n,samples,value,stderr\n");
    for (e, n, s, v, se) in rows {
        out.push_str(&format!("{e:.17e},{n},{s},{v:.17e},{se:.17e}\n"));
    }
    out
}

/// Periodic eigenvalues pooled over ν-samples and binned on
/// `[−2 − λ sup f, 2 + λ sup f]`. Bin masses come from counts at the edges, so
/// no eigenvalue is computed individually.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityHistogram {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub samples: usize,
    /// Fraction of pooled eigenvalues in each bin; sums to 1.
    pub mass: Vec<f64>,
}

impl DensityHistogram {
    pub fn pooled(model: &Model, n: usize, samples: usize, bins: usize) -> Result<Self> {
        if bins < 64 {
            return Err(Error::Precondition("the histogram needs at least 64 bins".into()));
        }
        check_ids_size(n, samples)?;
        let reach = 2.0 + model.lambda * model.potential.sup();
        let (lo, hi) = (-reach, reach);
        let edge = |j: usize| lo + (hi - lo) * j as f64 / bins as f64;
        let phases = model.map.sample_phases(samples, SCHEME);
        let per_sample: Vec<Vec<usize>> = phases
            .par_iter()
            .map(|&p| {
                let diag = model.site_values(p, n, Side::Right);
                (0..=bins).map(|j| count_periodic(&diag, edge(j))).collect()
            })
            .collect();
        let total = (n * samples) as f64;
        let mut mass = vec![0.0; bins];
        for counts in &per_sample {
            for j in 0..bins {
                mass[j] += (counts[j + 1] - counts[j]) as f64;
            }
        }
        for m in &mut mass {
            *m /= total;
        }
        Ok(DensityHistogram {
            lo,
            hi,
            n,
            samples,
            mass,
        })
    }

    pub fn bins(&self) -> usize {
        self.mass.len()
    }

    pub fn center(&self, j: usize) -> f64 {
        self.lo + (self.hi - self.lo) * (j as f64 + 0.5) / self.bins() as f64
    }

    /// `Σ ln|c_j − E| ΔN_j`
    pub fn log_potential(&self, e: f64) -> Result<f64> {
        let mut sum = 0.0;
        for (j, &m) in self.mass.iter().enumerate() {
            let d = (self.center(j) - e).abs();
            if d < 1e-12 {
                return Err(Error::EnergyOnAtom { energy: e });
            }
            if m > 0.0 {
                sum += d.ln() * m;
            }
        }
        Ok(sum)
    }

    /// Rows `E,N` of the staircase at the right bin edges.
    pub fn staircase_csv(&self) -> String {
        let mut out = String::from("E,N\n");
        let mut acc = 0.0;
        for (j, m) in self.mass.iter().enumerate() {
            acc += m;
            let e = self.lo + (self.hi - self.lo) * (j + 1) as f64 / self.bins() as f64;
            out.push_str(&format!("{e:.17e},{acc:.17e}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThoulessCheck {
    pub energy: f64,
    /// Lyapunov estimate.
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// `∫ ln|E′ − E| dN(E′)` from the histogram.
    pub rhs: f64,
    pub gap: f64,
}

pub fn thouless_check(model: &Model, e: f64, n: usize, samples: usize, bins: usize) -> Result<ThoulessCheck> {
    let hist = DensityHistogram::pooled(model, n, samples, bins)?;
    let lyap = lyapunov(model, e, n, samples)?;
    thouless_from(&hist, &lyap)
}

/// Both sides from precomputed pieces, so one histogram serves many energies.
pub fn thouless_from(hist: &DensityHistogram, lyap: &LyapunovEstimate) -> Result<ThoulessCheck> {
    let rhs = hist.log_potential(lyap.energy)?;
    Ok(ThoulessCheck {
        energy: lyap.energy,
        lhs: lyap.value,
        lhs_stderr: lyap.stderr,
        rhs,
        gap: (lyap.value - rhs).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdsLipschitz {
    pub e1: f64,
    pub e2: f64,
    pub lhs: f64,
    pub bound: f64,
    pub ok: bool,
}

/// `|N(E) − N(E′)|` against `|E − E′|/(λγ_−C_−)` plus finite-size and noise
/// allowances `4/n + 3σ`.
pub fn ids_lipschitz_check(model: &Model, e1: f64, e2: f64, n: usize, samples: usize) -> Result<IdsLipschitz> {
    if e1 == e2 {
        return Err(Error::Precondition("the two energies must differ".into()));
    }
    let a = ids(model, e1, n, samples)?;
    let b = ids(model, e2, n, samples)?;
    Ok(ids_lipschitz_from(model, &a, &b))
}

pub fn ids_lipschitz_from(model: &Model, a: &IdsEstimate, b: &IdsEstimate) -> IdsLipschitz {
    let d = model.lambda * model.potential.gamma_minus() * model.map.c_minus();
    let lhs = (a.value - b.value).abs();
    let noise = 3.0 * a.stderr.hypot(b.stderr);
    let bound = (a.energy - b.energy).abs() / d + 4.0 / a.n.min(b.n) as f64 + noise;
    IdsLipschitz {
        e1: a.energy,
        e2: b.energy,
        lhs,
        bound,
        ok: lhs <= bound,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NumeratorBound {
    pub energy: f64,
    pub kappa: f64,
    pub lyapunov: f64,
    /// Largest `(1/n) ln|P_n(x, E)| − (L̂ + κ)` seen.
    pub worst: f64,
    pub worst_n: usize,
    pub worst_x: f64,
    pub flagged: bool,
}

/// Scans `n ∈ n_range` at `phases` grid points; one sweep per phase covers
/// every `n` because `ln|P_n|` is a running sum of pivot logarithms.
pub fn numerator_bound_check(
    model: &Model,
    e: f64,
    kappa: f64,
    lyapunov: f64,
    n_range: std::ops::RangeInclusive<usize>,
    phases: usize,
) -> Result<NumeratorBound> {
    if !(kappa > 0.0) {
        return Err(Error::Precondition("κ must be positive".into()));
    }
    let (n_min, n_max) = (*n_range.start(), *n_range.end());
    if n_min == 0 || n_min > n_max || phases == 0 {
        return Err(Error::Precondition("empty scan".into()));
    }
    let limit = lyapunov + kappa;
    let worst = (0..phases as u64)
        .into_par_iter()
        .map(|i| {
            let p = Phase::grid(i, phases as u64);
            let mut log_p = 0.0;
            let mut prev = 0.0f64;
            let mut best = (f64::NEG_INFINITY, 0usize, p);
            for (j, v) in model.sites(p, Side::Right).take(n_max).enumerate() {
                let mut d = v - e;
                if j > 0 {
                    d -= 1.0 / prev;
                }
                if d == 0.0 {
                    d = -crate::operators::sweep::PIVMIN;
                }
                log_p += d.abs().ln();
                prev = d;
                let n = j + 1;
                if n >= n_min {
                    let excess = log_p / n as f64 - limit;
                    if excess > best.0 {
                        best = (excess, n, p);
                    }
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NEG_INFINITY, 0usize, Phase::ZERO), |a, b| if b.0 > a.0 { b } else { a });
    Ok(NumeratorBound {
        energy: e,
        kappa,
        lyapunov,
        worst: worst.0,
        worst_n: worst.1,
        worst_x: model.map.point(worst.2),
        flagged: worst.0 > 0.0,
    })
}

/// One maximal interval of the deviation set, in ν-coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationInterval {
    pub start: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdtReport {
    pub energy: f64,
    pub level: usize,
    pub q: u64,
    pub delta: f64,
    pub lyapunov: f64,
    pub threshold: f64,
    pub cells: usize,
    pub deviation_mass: f64,
    pub component_count: usize,
    /// At most `q_k` components.
    pub components_ok: bool,
    pub c0: Option<f64>,
    /// `e^{−C_0 δ q_k}` once `C_0` is known.
    pub bound: Option<f64>,
    pub intervals: Vec<DeviationInterval>,
}

/// Phase offsets below this are invisible to the `f64` evaluation of `f`.
const PHASE_RESOLUTION: u128 = 1 << 72;
/// Distance from a root of `P_q` inside which `|P_q|` is taken as linear.
const ROOT_NEIGHBORHOOD: u128 = 1 << 80;
const SAMPLES_BETWEEN_ANCHORS: u128 = 4;

struct Scanner<'a> {
    model: &'a Model,
    e: f64,
    q: usize,
    threshold: f64,
}

impl Scanner<'_> {
    /// `(N_q(x, E), (1/q) ln|P_q(x, E)| − threshold)`
    fn eval(&self, p: Phase) -> (usize, f64) {
        let s = sweep(&self.model.site_values(p, self.q, Side::Right), self.e);
        let g = if s.det.is_zero() {
            f64::NEG_INFINITY
        } else {
            s.det.log_mag / self.q as f64 - self.threshold
        };
        (s.count, g)
    }

    fn g(&self, p: Phase) -> f64 {
        self.eval(p).1
    }

    /// Deviation pieces `(offset, length)` inside the continuity cell
    /// `[start, start + len)`.
    fn cell(&self, start: u128, len: u128) -> Vec<(u128, u128)> {
        let at = |t: u128| Phase(start.wrapping_add(t));
        let last = len - 1;
        let n0 = self.eval(at(0)).0;
        let n1 = self.eval(at(last)).0;
        // Eigenvalues increase across a continuity cell, so N_q drops by one
        // at every root.
        let roots: Vec<u128> = (1..=n0.saturating_sub(n1))
            .map(|m| {
                let (mut lo, mut hi) = (0u128, last);
                while hi - lo > PHASE_RESOLUTION {
                    let mid = lo + (hi - lo) / 2;
                    if self.eval(at(mid)).0 <= n0 - m {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            })
            .collect();

        // Anchors: cell ends and roots, each root flanked by neighborhood
        // points; interior samples between anchors catch dips without roots.
        let mut points: Vec<(u128, bool)> = vec![(0, false), (last, false)];
        for &r in &roots {
            points.push((r, true));
            points.push((r.saturating_sub(ROOT_NEIGHBORHOOD), false));
            points.push((r.saturating_add(ROOT_NEIGHBORHOOD).min(last), false));
        }
        points.sort();
        points.dedup_by(|a, b| a.0 == b.0 && (b.1 |= a.1, true).1);
        let mut full: Vec<(u128, bool)> = Vec::new();
        for w in points.windows(2) {
            full.push(w[0]);
            let gap = w[1].0 - w[0].0;
            if gap > ROOT_NEIGHBORHOOD {
                for s in 1..SAMPLES_BETWEEN_ANCHORS {
                    full.push((w[0].0 + gap / SAMPLES_BETWEEN_ANCHORS * s, false));
                }
            }
        }
        full.push(*points.last().unwrap());
        let values: Vec<f64> = full
            .iter()
            .map(|&(t, root)| if root { f64::NEG_INFINITY } else { self.g(at(t)) })
            .collect();

        let q = self.q as f64;
        let mut pieces = Vec::new();
        for j in 0..full.len() - 1 {
            let ((a, ra), (b, rb)) = (full[j], full[j + 1]);
            let (ga, gb) = (values[j], values[j + 1]);
            if b == a {
                continue;
            }
            if (ra || rb) && b - a <= ROOT_NEIGHBORHOOD && !(ra && rb) {
                // |P| is linear in the distance to the root here.
                let g_far = if ra { gb } else { ga };
                let reach = if g_far < 0.0 {
                    b - a
                } else {
                    let frac = (-q * g_far).exp();
                    ((b - a) as f64 * frac) as u128
                };
                if reach > 0 {
                    pieces.push(if ra { (a, reach) } else { (b - reach, reach) });
                }
                continue;
            }
            match (ga < 0.0, gb < 0.0) {
                (true, true) => pieces.push((a, b - a)),
                (false, false) => {}
                (left_low, _) => {
                    let (mut lo, mut hi) = (a, b);
                    while hi - lo > PHASE_RESOLUTION {
                        let mid = lo + (hi - lo) / 2;
                        if (self.g(at(mid)) < 0.0) == left_low {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    let cut = lo + (hi - lo) / 2;
                    pieces.push(if left_low { (a, cut - a) } else { (cut, b - cut) });
                }
            }
        }
        // The last point sits one unit before the cell end.
        if let Some(p) = pieces.last_mut() {
            if p.0 + p.1 == last {
                p.1 += 1;
            }
        }
        merge_pieces(pieces)
    }
}

fn merge_pieces(mut pieces: Vec<(u128, u128)>) -> Vec<(u128, u128)> {
    pieces.sort();
    let mut out: Vec<(u128, u128)> = Vec::new();
    for (s, l) in pieces {
        if let Some(prev) = out.last_mut() {
            if s <= prev.0 + prev.1 {
                let end = (prev.0 + prev.1).max(s + l);
                prev.1 = end - prev.0;
                continue;
            }
        }
        out.push((s, l));
    }
    out
}

const TWO_POW_128: f64 = 340_282_366_920_938_463_463_374_607_431_768_211_456.0;

/// Measures `{x : (1/q_k) ln|P_{q_k}(x, E)| < L̂ − δ}` on `cells` uniform
/// ν-cells, each split further at the discontinuities of `x ↦ P_{q_k}(x, E)`.
pub fn ldt_scan(model: &Model, e: f64, level: usize, delta: f64, lyapunov: f64, cells: usize) -> Result<LdtReport> {
    let q = model.map.alpha().q(level)?;
    check_cap("q_k", q as u128, Caps::global().eigen_dirichlet as u128)?;
    if !(delta > 0.0 && delta < lyapunov) {
        return Err(Error::DeltaTooLarge { delta, lyapunov });
    }
    if (cells as u64) < 16 * q {
        return Err(Error::Precondition(format!(
            "scan resolution {cells} is below 16·q_k = {}",
            16 * q
        )));
    }
    let scanner = Scanner {
        model,
        e,
        q: q as usize,
        threshold: lyapunov - delta,
    };
    let mut cuts: Vec<u128> = (0..cells as u64).map(|i| Phase::grid(i, cells as u64).0).collect();
    cuts.extend(model.map.discontinuity_phases(q).into_iter().map(|p| p.0));
    cuts.sort_unstable();
    cuts.dedup();
    let spans: Vec<(u128, u128)> = (0..cuts.len())
        .map(|i| {
            let end = cuts.get(i + 1).copied().unwrap_or(0);
            (cuts[i], end.wrapping_sub(cuts[i]))
        })
        .collect();
    let found: Vec<Vec<(u128, u128)>> = spans
        .par_iter()
        .map(|&(s, l)| {
            scanner
                .cell(s, l)
                .into_iter()
                .map(|(o, len)| (s.wrapping_add(o), len))
                .collect()
        })
        .collect();

    // Join pieces that touch across cell boundaries, including across 0.
    let mut joined: Vec<(u128, u128)> = Vec::new();
    for (s, l) in found.into_iter().flatten() {
        if let Some(prev) = joined.last_mut() {
            if prev.0.wrapping_add(prev.1) == s {
                prev.1 += l;
                continue;
            }
        }
        joined.push((s, l));
    }
    if joined.len() > 1 {
        let (fs, fl) = joined[0];
        let (ls, ll) = *joined.last().unwrap();
        if ls.wrapping_add(ll) == fs {
            joined.pop();
            joined[0] = (ls, ll + fl);
        }
    }
    let deviation_mass = joined.iter().map(|&(_, l)| l as f64 / TWO_POW_128).sum();
    let intervals: Vec<DeviationInterval> = joined
        .iter()
        .map(|&(s, l)| DeviationInterval {
            start: Phase(s).to_unit(),
            mass: l as f64 / TWO_POW_128,
        })
        .collect();
    Ok(LdtReport {
        energy: e,
        level,
        q,
        delta,
        lyapunov,
        threshold: scanner.threshold,
        cells,
        deviation_mass,
        component_count: intervals.len(),
        components_ok: intervals.len() as u64 <= q,
        c0: None,
        bound: None,
        intervals,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdtSweep {
    pub reports: Vec<LdtReport>,
    /// Fitted decay rate `C_0 δ` of the deviation mass in `q_k`.
    pub decay_rate: Option<f64>,
    pub c0: Option<f64>,
    /// Masses strictly decrease along the levels.
    pub decreasing: bool,
    /// `ln(mass)/q_k` per level.
    pub log_mass_per_q: Vec<f64>,
}

/// Runs [`ldt_scan`] over several levels and fits `ln(mass) ≈ a − C_0δ q_k`.
/// A configured `c0` overrides the fitted constant in the reported bounds.
pub fn ldt_sweep(
    model: &Model,
    e: f64,
    levels: &[usize],
    delta: f64,
    lyapunov: f64,
    cells_per_q: usize,
    c0: Option<f64>,
) -> Result<LdtSweep> {
    let mut reports = levels
        .iter()
        .map(|&k| {
            let q = model.map.alpha().q(k)? as usize;
            ldt_scan(model, e, k, delta, lyapunov, cells_per_q.max(16) * q)
        })
        .collect::<Result<Vec<_>>>()?;
    let positive: Vec<&LdtReport> = reports.iter().filter(|r| r.deviation_mass > 0.0).collect();
    let decay_rate = if positive.len() == reports.len() && positive.len() >= 2 {
        let xs: Vec<f64> = positive.iter().map(|r| r.q as f64).collect();
        let ys: Vec<f64> = positive.iter().map(|r| r.deviation_mass.ln()).collect();
        fit_line(&xs, &ys).map(|f| -f.slope)
    } else {
        None
    };
    let c0 = c0.or(decay_rate.map(|c| c / delta));
    for r in &mut reports {
        r.c0 = c0;
        r.bound = c0.map(|c| (-c * delta * r.q as f64).exp());
    }
    let decreasing = reports
        .windows(2)
        .all(|w| w[1].deviation_mass < w[0].deviation_mass);
    let log_mass_per_q = reports.iter().map(|r| r.deviation_mass.ln() / r.q as f64).collect();
    Ok(LdtSweep {
        reports,
        decay_rate,
        c0,
        decreasing,
        log_mass_per_q,
    })
}

impl LdtSweep {
    /// Rows `qk,delta,mass,components`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("qk,delta,mass,components\n");
        for r in &self.reports {
            out.push_str(&format!(
                "{},{:.17e},{:.17e},{}\n",
                r.q, r.delta, r.deviation_mass, r.component_count
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::IrrationalSpec;
    use crate::circle_maps::{CircleMap, MapSpec};
    use crate::potentials::Potential;

    fn model(lambda: f64) -> Model {
        let map = CircleMap::new(&MapSpec::rotation(IrrationalSpec::golden())).unwrap();
        Model::new(lambda, Potential::sawtooth(), map).unwrap()
    }

    #[test]
    fn free_lyapunov_outside_band() {
        let l = lyapunov(&model(0.0), 3.0, 2000, 4).unwrap();
        let exact = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((l.value - exact).abs() < 1e-3, "{}", l.value);
        assert!(l.stderr < 1e-12);
    }

    #[test]
    fn free_lyapunov_in_band_vanishes() {
        let l = lyapunov(&model(0.0), 0.0, 10_000, 4).unwrap();
        assert!(l.value.abs() <= 1e-2);
    }

    #[test]
    fn lyapunov_rejects_short_products() {
        assert!(matches!(lyapunov(&model(1.0), 0.0, 50, 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn free_ids() {
        let m = model(0.0);
        let n = 4096;
        let half = ids(&m, 0.0, n, 2).unwrap();
        assert!((half.value - 0.5).abs() <= 2.0 / n as f64);
        let third = ids(&m, 1.0, n, 2).unwrap();
        assert!((third.value - 2.0 / 3.0).abs() <= 2.0 / n as f64);
        assert_eq!(ids(&m, 2.5, 64, 2).unwrap().value, 1.0);
    }

    #[test]
    fn ids_above_the_spectrum_is_one() {
        assert_eq!(ids(&model(10.0), 12.5, 128, 8).unwrap().value, 1.0);
    }

    #[test]
    fn thouless_far_from_spectrum() {
        let m = model(10.0);
        let t = thouless_check(&m, 1e3, 256, 4, 64).unwrap();
        assert!((t.lhs / 1e3f64.ln() - 1.0).abs() < 0.01);
        assert!((t.rhs / 1e3f64.ln() - 1.0).abs() < 0.01);
    }

    #[test]
    fn histogram_rejects_coarse_grids() {
        assert!(DensityHistogram::pooled(&model(1.0), 64, 2, 32).is_err());
    }

    #[test]
    fn close_energies_differ_by_resolution_only() {
        let c = ids_lipschitz_check(&model(10.0), 4.0, 4.0 + 1e-9, 256, 8).unwrap();
        assert!(c.lhs <= 4.0 / 256.0);
        assert!(c.ok);
    }

    #[test]
    fn numerator_growth_of_the_free_operator() {
        let m = model(0.0);
        let l = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        let r = numerator_bound_check(&m, 3.0, 0.05, l, 50..=400, 8).unwrap();
        assert!(!r.flagged, "{r:?}");
        assert!(numerator_bound_check(&m, 3.0, -0.5, l, 50..=400, 8).is_err());
    }

    #[test]
    fn no_deviation_far_from_spectrum() {
        let m = model(10.0);
        let l = lyapunov(&m, 40.0, 1000, 8).unwrap().value;
        let r = ldt_scan(&m, 40.0, 6, 0.3, l, 16 * 13).unwrap();
        assert_eq!(r.deviation_mass, 0.0);
        assert_eq!(r.component_count, 0);
    }

    #[test]
    fn delta_must_stay_below_the_exponent() {
        let m = model(10.0);
        assert!(matches!(
            ldt_scan(&m, 5.0, 6, 2.0, 1.5, 16 * 13),
            Err(Error::DeltaTooLarge { .. })
        ));
    }

    #[test]
    fn merging_touching_pieces() {
        assert_eq!(merge_pieces(vec![(5, 5), (0, 5), (20, 1)]), vec![(0, 10), (20, 1)]);
    }
}
