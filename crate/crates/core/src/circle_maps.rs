//! Circle homeomorphisms realized as rotations conjugated by an explicit lift.
//!
//! A map is `T = φ⁻¹ ∘ R_α ∘ φ`. Orbits are tracked in the coordinate
//! `ν = φ(x)`, where `T` acts as an exact rotation on a 128-bit fixed-point
//! circle, and converted to points with one inversion of `φ`.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::arithmetic::{Alpha, IrrationalSpec};
use crate::caps::{check_cap, Caps};
use crate::error::{Error, Result};

const ONE_MINUS: f64 = 1.0 - f64::EPSILON / 2.0;
const ROUNDTRIP_TOLERANCE: f64 = 1e-13;
const TWO_POW_128: f64 = 340_282_366_920_938_463_463_374_607_431_768_211_456.0;

/// A point of the ν-circle as `⌊ν·2^128⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Phase(pub u128);

impl Phase {
    pub const ZERO: Phase = Phase(0);

    pub fn from_unit(v: f64) -> Phase {
        let v = v - v.floor();
        Phase((v * TWO_POW_128) as u128)
    }

    pub fn to_unit(self) -> f64 {
        (self.0 as f64 / TWO_POW_128).min(ONE_MINUS)
    }

    pub fn rotate(self, steps: i128, alpha: &Alpha) -> Phase {
        Phase(self.0.wrapping_add(alpha.frac_of_multiple(steps)))
    }

    pub fn wrapping_add(self, other: Phase) -> Phase {
        Phase(self.0.wrapping_add(other.0))
    }

    /// Positively oriented ν-length from `self` to `other`.
    pub fn arc_to(self, other: Phase) -> Phase {
        Phase(other.0.wrapping_sub(self.0))
    }

    /// Grid point `⌊i·2^128 / count⌋`.
    pub fn grid(i: u64, count: u64) -> Phase {
        let count = count as u128;
        let step = u128::MAX / count;
        let rem = (u128::MAX % count + 1) % count;
        let i = i as u128;
        let carry = if rem == 0 { 0 } else { i * rem / count };
        Phase(if rem == 0 { i * (step + 1) } else { i * step + carry })
    }

    /// Base-2 radical inverse of `i`.
    pub fn van_der_corput(i: u64) -> Phase {
        Phase((i as u128).reverse_bits())
    }
}

impl Serialize for Phase {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_unit())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConjugacySpec {
    Identity,
    /// `φ(x) = x + ε/(2π)·sin 2πx`, `|ε| < 1`.
    Sinusoidal { epsilon: f64 },
    /// `φ` with slope `slopes[i]` on `[breakpoints[i], breakpoints[i+1])`.
    PiecewiseLinear {
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
    },
}

impl Default for ConjugacySpec {
    fn default() -> Self {
        ConjugacySpec::Identity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    PureRotation,
    ConjugatedRotation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub kind: MapKind,
    pub alpha: IrrationalSpec,
    #[serde(default)]
    pub conjugacy: ConjugacySpec,
}

impl MapSpec {
    pub fn rotation(alpha: IrrationalSpec) -> Self {
        MapSpec {
            kind: MapKind::PureRotation,
            alpha,
            conjugacy: ConjugacySpec::Identity,
        }
    }

    pub fn sinusoidal(alpha: IrrationalSpec, epsilon: f64) -> Self {
        MapSpec {
            kind: MapKind::ConjugatedRotation,
            alpha,
            conjugacy: ConjugacySpec::Sinusoidal { epsilon },
        }
    }
}

#[derive(Debug, Clone)]
enum Lift {
    Identity,
    Sinusoidal { eps: f64 },
    PiecewiseLinear { breaks: Vec<f64>, slopes: Vec<f64>, base: Vec<f64> },
}

impl Lift {
    fn new(spec: &ConjugacySpec) -> Result<(Lift, f64, f64)> {
        match spec {
            ConjugacySpec::Identity => Ok((Lift::Identity, 1.0, 1.0)),
            ConjugacySpec::Sinusoidal { epsilon } => {
                let e = epsilon.abs();
                if !(e < 1.0) {
                    return Err(Error::InvalidInput("sinusoidal conjugacy needs |ε| < 1".into()));
                }
                Ok((Lift::Sinusoidal { eps: *epsilon }, 1.0 / (1.0 + e), 1.0 / (1.0 - e)))
            }
            ConjugacySpec::PiecewiseLinear { breakpoints, slopes } => {
                if breakpoints.is_empty()
                    || breakpoints.len() != slopes.len()
                    || breakpoints[0] != 0.0
                    || breakpoints.windows(2).any(|w| !(w[0] < w[1]))
                    || *breakpoints.last().unwrap() >= 1.0
                    || slopes.iter().any(|s| !(s.is_finite() && *s > 0.0))
                {
                    return Err(Error::InvalidInput(
                        "piecewise-linear conjugacy needs increasing breakpoints from 0 and positive slopes".into(),
                    ));
                }
                let mut base = Vec::with_capacity(slopes.len());
                let mut acc = 0.0;
                for (i, s) in slopes.iter().enumerate() {
                    base.push(acc);
                    acc += s * (breakpoints.get(i + 1).copied().unwrap_or(1.0) - breakpoints[i]);
                }
                if (acc - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "conjugacy lift advances by {acc} instead of 1"
                    )));
                }
                let s_min = slopes.iter().copied().fold(f64::INFINITY, f64::min);
                let s_max = slopes.iter().copied().fold(0.0, f64::max);
                Ok((
                    Lift::PiecewiseLinear {
                        breaks: breakpoints.clone(),
                        slopes: slopes.clone(),
                        base,
                    },
                    1.0 / s_max,
                    1.0 / s_min,
                ))
            }
        }
    }

    /// `φ` on `[0, 1]`.
    fn eval(&self, x: f64) -> f64 {
        match self {
            Lift::Identity => x,
            Lift::Sinusoidal { eps } => x + eps / TAU * (TAU * x).sin(),
            Lift::PiecewiseLinear { breaks, slopes, base } => {
                if x >= 1.0 {
                    return 1.0;
                }
                let i = breaks.partition_point(|&b| b <= x) - 1;
                base[i] + slopes[i] * (x - breaks[i])
            }
        }
    }

    /// `φ⁻¹` on `[0, 1]`.
    fn inverse(&self, v: f64) -> f64 {
        match self {
            Lift::Identity => v,
            Lift::Sinusoidal { eps } => {
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                let mut x = v;
                for _ in 0..200 {
                    let g = x + eps / TAU * (TAU * x).sin() - v;
                    if g == 0.0 {
                        return x;
                    }
                    if g < 0.0 {
                        lo = x;
                    } else {
                        hi = x;
                    }
                    let dg = 1.0 + eps * (TAU * x).cos();
                    let mut next = x - g / dg;
                    if !(next > lo && next < hi) {
                        next = 0.5 * (lo + hi);
                    }
                    if (next - x).abs() <= 1e-17 || hi - lo <= 2.0 * f64::EPSILON * hi.max(1e-300) {
                        return next;
                    }
                    x = next;
                }
                x
            }
            Lift::PiecewiseLinear { breaks, slopes, base } => {
                let i = base.partition_point(|&b| b <= v).max(1) - 1;
                (breaks[i] + (v - base[i]) / slopes[i]).min(1.0)
            }
        }
    }
}

/// How quadrature nodes for ν are placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleScheme {
    Grid,
    LowDiscrepancy,
}

#[derive(Debug, Clone)]
pub struct CircleMap {
    spec: MapSpec,
    alpha: Alpha,
    lift: Lift,
    c_minus: f64,
    c_plus: f64,
}

impl CircleMap {
    pub fn new(spec: &MapSpec) -> Result<Self> {
        if spec.kind == MapKind::PureRotation && spec.conjugacy != ConjugacySpec::Identity {
            return Err(Error::InvalidInput(
                "a pure rotation takes the identity conjugacy".into(),
            ));
        }
        let alpha = Alpha::resolve(&spec.alpha)?;
        let (lift, c_minus, c_plus) = Lift::new(&spec.conjugacy)?;
        Ok(CircleMap {
            spec: spec.clone(),
            alpha,
            lift,
            c_minus,
            c_plus,
        })
    }

    pub fn spec(&self) -> &MapSpec {
        &self.spec
    }

    pub fn alpha(&self) -> &Alpha {
        &self.alpha
    }

    /// `(C_−, C_+)` with `C_− ν([x,y]) ≤ |x − y| ≤ C_+ ν([x,y])`.
    pub fn constants(&self) -> (f64, f64) {
        (self.c_minus, self.c_plus)
    }

    pub fn c_minus(&self) -> f64 {
        self.c_minus
    }

    pub fn c_plus(&self) -> f64 {
        self.c_plus
    }

    /// `φ(x)` for `x ∈ [0, 1)`, as a real number.
    pub fn lift(&self, x: f64) -> f64 {
        let x = x - x.floor();
        self.lift.eval(x)
    }

    pub fn phase_of(&self, x: f64) -> Phase {
        Phase::from_unit(self.lift(x))
    }

    /// The point `φ⁻¹(ν)` in `[0, 1)`.
    pub fn point(&self, p: Phase) -> f64 {
        self.lift.inverse(p.to_unit()).clamp(0.0, ONE_MINUS)
    }

    /// `T^steps(x)`, computed as one rotation of `φ(x)` followed by one inversion.
    pub fn forward(&self, x: f64, steps: i64) -> Result<f64> {
        if steps == 0 {
            return Ok(x - x.floor());
        }
        let target = self.phase_of(x).rotate(steps as i128, &self.alpha);
        let y = self.point(target);
        let back = self.lift(y);
        let miss = (back - target.to_unit()).abs();
        if miss.min(1.0 - miss) > ROUNDTRIP_TOLERANCE {
            return Err(Error::RootFindFailure {
                target: target.to_unit(),
            });
        }
        Ok(y)
    }

    /// `ν([x, y])` along the positively oriented arc from `x` to `y`.
    /// Arguments are read on the lift, so `[0, 1]` has mass 1.
    pub fn invariant_mass(&self, x: f64, y: f64) -> f64 {
        let y = if y < x { y + (x - y).ceil() } else { y };
        let lifted = |t: f64| t.floor() + self.lift.eval(t - t.floor());
        lifted(y) - lifted(x)
    }

    /// ν-length of the shorter arc between `x` and `y`.
    pub fn circle_mass(&self, x: f64, y: f64) -> f64 {
        let m = self.invariant_mass(x, y);
        m.min(1.0 - m)
    }

    pub fn sample_phases(&self, count: usize, scheme: SampleScheme) -> Vec<Phase> {
        (0..count as u64)
            .map(|i| match scheme {
                SampleScheme::Grid => Phase::grid(i, count as u64),
                SampleScheme::LowDiscrepancy => Phase::van_der_corput(i),
            })
            .collect()
    }

    /// Nodes `φ⁻¹(u_i)` for equidistributed `u_i`.
    pub fn sample_invariant(&self, count: usize, scheme: SampleScheme) -> Vec<f64> {
        self.sample_phases(count, scheme)
            .into_iter()
            .map(|p| self.point(p))
            .collect()
    }

    /// `q_k` bounded by a cap.
    fn level_q(&self, k: usize, cap: u64) -> Result<u64> {
        let q = self.alpha.q(k)?;
        check_cap("q_k", q as u128, cap as u128)?;
        Ok(q)
    }

    /// `|q_k α − p_k|` as a fixed-point fraction; the sign is `(−1)^k`.
    fn residual_len(&self, k: usize) -> Result<Phase> {
        let f = self.alpha.frac_of_multiple(self.alpha.q(k)? as i128);
        Ok(Phase(if k % 2 == 0 { f } else { f.wrapping_neg() }))
    }

    /// Phases `T^{-j}(0)`, `j = 0..q`, in increasing order.
    pub fn discontinuity_phases(&self, q: u64) -> Vec<Phase> {
        let mut out: Vec<Phase> = (0..q as i128)
            .map(|j| Phase::ZERO.rotate(-j, &self.alpha))
            .collect();
        out.sort();
        out
    }

    pub fn dynamical_partition(&self, z: f64, k: usize) -> Result<DynamicalPartition> {
        if k == 0 {
            return Err(Error::InvalidInput("partition level starts at 1".into()));
        }
        let caps = Caps::global();
        let qk = self.level_q(k, caps.partition)?;
        let qk1 = self.alpha.q(k - 1)?;
        let zp = self.phase_of(z);
        let short_arc = oriented_arc(zp, self.residual_len(k)?, k % 2 == 0);
        let long_arc = oriented_arc(zp, self.residual_len(k - 1)?, k % 2 == 1);
        let mut arcs = Vec::with_capacity((qk + qk1) as usize);
        for (label, (left, len), count) in [
            (ArcLabel::Short, short_arc, qk1),
            (ArcLabel::Long, long_arc, qk),
        ] {
            for j in 0..count {
                let l = left.rotate(j as i128, &self.alpha);
                arcs.push(self.make_arc(label, j, l, len));
            }
        }
        arcs.sort_by_key(|a| a.left_phase);
        Ok(DynamicalPartition {
            level: k,
            q_k: qk,
            q_k_minus_1: qk1,
            base_point: z,
            short_mass: short_arc.1,
            long_mass: long_arc.1,
            arcs,
        })
    }

    fn make_arc(&self, label: ArcLabel, index: u64, left: Phase, len: Phase) -> Arc {
        let x = self.point(left);
        let y = self.point(left.wrapping_add(len));
        let mut length = y - x;
        if length < 0.0 {
            length += 1.0;
        }
        Arc {
            label,
            index,
            left: x,
            length,
            nu_mass: len.to_unit(),
            left_phase: left,
            mass_phase: len,
        }
    }

    /// Gaps between the orbit points `T^j x`, `j < q_k`, measured with ν
    /// through the conjugacy lift.
    pub fn gap_statistics(&self, x: f64, k: usize) -> Result<GapStatistics> {
        if k < 2 {
            return Err(Error::InvalidInput("gap statistics start at level 2".into()));
        }
        let qk = self.level_q(k, Caps::global().partition)?;
        let qk1 = self.alpha.q(k - 1)?;
        let qk_next = self.alpha.q(k + 1)?;
        let x0 = self.phase_of(x);
        let mut pts: Vec<f64> = (0..qk as i128)
            .map(|j| self.point(x0.rotate(j, &self.alpha)))
            .collect();
        pts.sort_by(f64::total_cmp);
        let gaps: Vec<f64> = (0..pts.len())
            .map(|i| self.invariant_mass(pts[i], pts[(i + 1) % pts.len()]))
            .map(|g| if g <= 0.0 { g + 1.0 } else { g })
            .collect();
        let small_ref = self.residual_len(k - 1)?.to_unit();
        let large_ref = small_ref + self.residual_len(k)?.to_unit();
        let split = 0.5 * (small_ref + large_ref);
        let (large, small): (Vec<f64>, Vec<f64>) = gaps.iter().partition(|&&g| g > split);
        let q = qk as f64;
        let small_lo = 1.0 / q - qk1 as f64 / (q * qk_next as f64);
        let small_hi = 1.0 / q;
        let large_lo = 1.0 / q;
        let large_hi = 1.0 / q + 1.0 / qk_next as f64;
        let slack = 1e-10;
        let within = |v: &[f64], lo: f64, hi: f64| v.iter().all(|&g| g >= lo - slack && g <= hi + slack);
        let bounds_ok = within(&large, large_lo, large_hi) && within(&small, small_lo, small_hi);
        let reference_ok = large.iter().all(|g| (g - large_ref).abs() <= slack)
            && small.iter().all(|g| (g - small_ref).abs() <= slack);
        Ok(GapStatistics {
            level: k,
            large_count: large.len() as u64,
            small_count: small.len() as u64,
            large_mass: large.iter().copied().fold(0.0, f64::max),
            small_mass: small.iter().copied().fold(f64::INFINITY, f64::min),
            large_reference: large_ref,
            small_reference: small_ref,
            counts_ok: large.len() as u64 == qk1 && small.len() as u64 == qk - qk1,
            bounds_ok: bounds_ok && reference_ok,
        })
    }

    /// Whether `ν[x, T^i x] ≥ ν[x, T^{q_k} x]` for `0 < i < q_{k+1}`, with arcs
    /// measured along the shorter side.
    pub fn best_return_check(&self, x: f64, k: usize) -> Result<bool> {
        let q_next = self.alpha.q(k + 1)?;
        check_cap("q_{k+1}", q_next as u128, Caps::global().exhaustive as u128)?;
        let qk = self.alpha.q(k)?;
        let x = x - x.floor();
        let dist = |i: u64| -> Result<f64> { Ok(self.circle_mass(x, self.forward(x, i as i64)?)) };
        let best = dist(qk)?;
        for i in 1..q_next {
            if dist(i)? < best - 1e-12 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// The arc between `z` and `z ± len` as `(left, ν-length)`.
fn oriented_arc(z: Phase, len: Phase, forward: bool) -> (Phase, Phase) {
    if forward {
        (z, len)
    } else {
        (Phase(z.0.wrapping_sub(len.0)), len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArcLabel {
    Short,
    Long,
}

impl ArcLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ArcLabel::Short => "short",
            ArcLabel::Long => "long",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub label: ArcLabel,
    /// `j` in `T^j(I)`.
    pub index: u64,
    pub left: f64,
    pub length: f64,
    pub nu_mass: f64,
    pub left_phase: Phase,
    pub mass_phase: Phase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicalPartition {
    pub level: usize,
    pub q_k: u64,
    pub q_k_minus_1: u64,
    pub base_point: f64,
    /// `ν(I_k)`
    pub short_mass: Phase,
    /// `ν(I_{k−1})`
    pub long_mass: Phase,
    /// Sorted by left endpoint.
    pub arcs: Vec<Arc>,
}

impl DynamicalPartition {
    pub fn short_count(&self) -> usize {
        self.arcs.iter().filter(|a| a.label == ArcLabel::Short).count()
    }

    pub fn long_count(&self) -> usize {
        self.arcs.iter().filter(|a| a.label == ArcLabel::Long).count()
    }

    /// Consecutive arcs abut exactly and the last one closes the circle.
    pub fn covers_circle(&self) -> bool {
        let n = self.arcs.len();
        (0..n).all(|i| {
            let a = &self.arcs[i];
            let b = &self.arcs[(i + 1) % n];
            a.left_phase.wrapping_add(a.mass_phase) == b.left_phase
        })
    }

    /// `q_k ν(I_{k−1}) + q_{k−1} ν(I_k) − 1`.
    pub fn mass_identity_residual(&self) -> f64 {
        self.q_k as f64 * self.long_mass.to_unit()
            + self.q_k_minus_1 as f64 * self.short_mass.to_unit()
            - 1.0
    }

    /// Whether every long arc of `self` splits into exactly `a_{k+1}` long arcs
    /// and one short arc of `finer` (level `k + 1`, same base point).
    pub fn refined_by(&self, finer: &DynamicalPartition, a_next: u64) -> bool {
        if finer.level != self.level + 1 || self.arcs.is_empty() {
            return false;
        }
        let mut long = vec![0u64; self.arcs.len()];
        let mut short = vec![0u64; self.arcs.len()];
        for f in &finer.arcs {
            let i = match self.arcs.partition_point(|c| c.left_phase <= f.left_phase) {
                0 => self.arcs.len() - 1,
                i => i - 1,
            };
            let c = &self.arcs[i];
            let offset = c.left_phase.arc_to(f.left_phase).0;
            if offset.checked_add(f.mass_phase.0).is_none_or(|end| end > c.mass_phase.0) {
                return false;
            }
            match f.label {
                ArcLabel::Long => long[i] += 1,
                ArcLabel::Short => short[i] += 1,
            }
        }
        self.arcs.iter().enumerate().all(|(i, c)| match c.label {
            ArcLabel::Long => long[i] == a_next && short[i] == 1,
            ArcLabel::Short => long[i] == 1 && short[i] == 0,
        })
    }

    /// Rows `level,index,label,left,length,nu_mass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,index,label,left,length,nu_mass\n");
        for a in &self.arcs {
            out.push_str(&format!(
                "{},{},{},{:.17e},{:.17e},{:.17e}\n",
                self.level,
                a.index,
                a.label.as_str(),
                a.left,
                a.length,
                a.nu_mass
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapStatistics {
    pub level: usize,
    pub large_count: u64,
    pub small_count: u64,
    /// Largest measured large gap.
    pub large_mass: f64,
    /// Smallest measured small gap.
    pub small_mass: f64,
    /// `‖q_k α‖ + ‖q_{k−1} α‖`
    pub large_reference: f64,
    /// `‖q_{k−1} α‖`
    pub small_reference: f64,
    pub counts_ok: bool,
    pub bounds_ok: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn golden() -> CircleMap {
        CircleMap::new(&MapSpec::rotation(IrrationalSpec::golden())).unwrap()
    }

    fn wobbly(eps: f64) -> CircleMap {
        CircleMap::new(&MapSpec::sinusoidal(IrrationalSpec::golden(), eps)).unwrap()
    }

    #[test]
    fn rotation_orbit() {
        let t = golden();
        assert!((t.forward(0.0, 3).unwrap() - 0.854_101_966_249_684_5).abs() < 1e-15);
        assert_eq!(t.forward(0.3, 0).unwrap(), 0.3);
        let back = t.forward(t.forward(0.3, 17).unwrap(), -17).unwrap();
        assert!((back - 0.3).abs() < 1e-15);
    }

    #[test]
    fn sinusoidal_step_from_zero() {
        let t = wobbly(0.3);
        let y = t.forward(0.0, 1).unwrap();
        let alpha = t.alpha().value();
        assert!((t.lift(y) - alpha).abs() < 1e-15);
        assert_eq!(t.constants(), (1.0 / 1.3, 1.0 / 0.7));
    }

    #[test]
    fn masses() {
        let t = golden();
        assert!((t.invariant_mass(0.2, 0.5) - 0.3).abs() < 1e-15);
        let s = wobbly(0.3);
        assert!((s.invariant_mass(0.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((s.invariant_mass(0.9, 0.1) - s.invariant_mass(0.9, 1.1)).abs() < 1e-15);
        for x in [0.0, 0.1, 0.45, 0.9] {
            let m = s.invariant_mass(x, s.forward(x, 1).unwrap());
            assert!((m - s.alpha().value()).abs() < 1e-13);
        }
    }

    #[test]
    fn sampling() {
        let t = golden();
        assert_eq!(t.sample_invariant(4, SampleScheme::Grid), vec![0.0, 0.25, 0.5, 0.75]);
        assert_eq!(t.sample_invariant(1, SampleScheme::LowDiscrepancy), vec![0.0]);
        let s = wobbly(0.3);
        let nodes = s.sample_invariant(2, SampleScheme::Grid);
        assert_eq!(nodes[0], 0.0);
        assert!((s.lift(nodes[1]) - 0.5).abs() < 1e-15);
        assert_eq!(Phase::grid(1, 3).0, u128::MAX / 3);
    }

    #[test]
    fn partition_counts_and_cover() {
        let t = golden();
        let p = t.dynamical_partition(0.0, 4).unwrap();
        assert_eq!((p.short_count(), p.long_count()), (3, 5));
        assert!(p.covers_circle());
        assert!(p.mass_identity_residual().abs() < 1e-12);
        let p1 = t.dynamical_partition(0.0, 1).unwrap();
        assert_eq!((p1.short_count(), p1.long_count()), (1, 1));
        assert!(p1.covers_circle());
    }

    #[test]
    fn partition_refines() {
        for map in [golden(), wobbly(0.3)] {
            for k in 1..12 {
                let coarse = map.dynamical_partition(0.17, k).unwrap();
                let fine = map.dynamical_partition(0.17, k + 1).unwrap();
                assert!(coarse.refined_by(&fine, map.alpha().cf().digit(k + 1)), "k = {k}");
            }
        }
    }

    #[test]
    fn conjugated_partition_masses_match_distances() {
        let s = wobbly(0.3);
        let p = s.dynamical_partition(0.0, 6).unwrap();
        let d6 = crate::arithmetic::dist_to_integers(
            s.alpha().cf().q(6),
            &IrrationalSpec::golden(),
            64,
        )
        .unwrap()
        .to_f64();
        for a in p.arcs.iter().filter(|a| a.label == ArcLabel::Short) {
            assert!((a.nu_mass - d6).abs() < 1e-15);
            let measured = s.invariant_mass(a.left, a.left + a.length);
            assert!((measured - d6).abs() < 1e-12);
        }
    }

    #[test]
    fn gap_counts() {
        let t = golden();
        let g = t.gap_statistics(0.0, 4).unwrap();
        assert_eq!((g.large_count, g.small_count), (3, 2));
        let g = t.gap_statistics(0.0, 2).unwrap();
        assert_eq!((g.large_count, g.small_count), (1, 1));
        assert!(g.bounds_ok);
        let g = wobbly(0.3).gap_statistics(0.4, 7).unwrap();
        assert!(g.bounds_ok && g.counts_ok);
    }

    #[test]
    fn best_returns() {
        assert!(golden().best_return_check(0.3, 5).unwrap());
        assert!(golden().best_return_check(0.0, 1).unwrap());
        assert!(wobbly(0.5).best_return_check(0.2, 6).unwrap());
    }

    #[test]
    fn pure_rotation_rejects_conjugacy() {
        let spec = MapSpec {
            kind: MapKind::PureRotation,
            alpha: IrrationalSpec::golden(),
            conjugacy: ConjugacySpec::Sinusoidal { epsilon: 0.3 },
        };
        assert!(CircleMap::new(&spec).is_err());
    }

    #[test]
    fn piecewise_linear_conjugacy() {
        let spec = MapSpec {
            kind: MapKind::ConjugatedRotation,
            alpha: IrrationalSpec::golden(),
            conjugacy: ConjugacySpec::PiecewiseLinear {
                breakpoints: vec![0.0, 0.5],
                slopes: vec![0.5, 1.5],
            },
        };
        let t = CircleMap::new(&spec).unwrap();
        assert_eq!(t.constants(), (1.0 / 1.5, 2.0));
        let y = t.forward(0.2, 5).unwrap();
        assert!((t.forward(y, -5).unwrap() - 0.2).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn conjugacy_identity(x in 0.0f64..1.0, eps in -0.9f64..0.9) {
            let t = wobbly(eps);
            let y = t.forward(x, 1).unwrap();
            let d = t.lift(y) - t.lift(x) - t.alpha().value();
            prop_assert!((d - d.round()).abs() < 1e-12);
        }

        #[test]
        fn lipschitz_comparability(x in 0.0f64..1.0, len in 0.0f64..1.0) {
            let t = wobbly(0.3);
            let y = x + len;
            let (cm, cp) = t.constants();
            let nu = t.invariant_mass(x, y);
            prop_assert!(cm * nu <= len + 1e-13);
            prop_assert!(len <= cp * nu + 1e-13);
        }

        #[test]
        fn roundtrip(x in 0.0f64..1.0, steps in -1000i64..1000) {
            let t = wobbly(0.6);
            let y = t.forward(x, steps).unwrap();
            let z = t.forward(y, -steps).unwrap();
            let d = (z - x).abs();
            prop_assert!(d.min(1.0 - d) < 1e-12);
        }
    }
}
