//! Continued fractions with exact convergents, certified expansion of numeric
//! inputs, finite-depth β proxies and certified distances `‖nα‖`.
//!
//! The canonical form of a rotation number is its digit sequence. Numeric
//! inputs are converted once, through an exact rational bracket that is
//! refined by doubling the working precision until every emitted digit is
//! certified.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::caps::{check_cap, Caps};
use crate::error::{Error, Result};

pub const DEFAULT_PRECISION_BITS: u32 = 1024;
pub const DEFAULT_MAX_PRECISION_BITS: u32 = 16384;
/// Default relative guard for certified distances: error ≤ 2^-64 of the value.
pub const DEFAULT_GUARD_BITS: u32 = 64;

const MAX_RESOLVED_DEPTH: usize = 512;
const MAX_GENERATED_DEPTH: usize = 4096;
/// The 128-bit orbit arithmetic needs α to at least this many bits.
const FIXED_POINT_BITS: u32 = 112;

/// Rule producing the partial quotients `a_1, a_2, …` of an explicit number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DigitRule {
    Constant {
        value: u64,
    },
    Periodic {
        #[serde(default)]
        prefix: Vec<u64>,
        period: Vec<u64>,
    },
    /// A finite table, optionally continued by a constant tail digit.
    Tabulated {
        digits: Vec<u64>,
        #[serde(default)]
        tail: Option<u64>,
    },
    /// `a_k = ⌈e^{c·q_{k-1}} / q_{k-1}⌉`, so that `ln q_{k+1} / q_k → c`.
    Liouville {
        c: f64,
    },
}

/// A real number given by value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NumericValue {
    /// `(a + b·√d) / c`
    QuadraticSurd { a: i64, b: i64, d: u64, c: i64 },
    Rational { num: i64, den: i64 },
    /// Exact decimal literal such as `"0.25"`.
    Decimal { value: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IrrationalSpec {
    ExplicitDigits {
        rule: DigitRule,
    },
    NumericValue {
        value: NumericValue,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        precision_bits: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_precision_bits: Option<u32>,
    },
}

impl IrrationalSpec {
    /// `(√5 − 1) / 2`
    pub fn golden() -> Self {
        Self::surd(-1, 1, 5, 2)
    }

    /// `√2 − 1`
    pub fn silver() -> Self {
        Self::surd(-1, 1, 2, 1)
    }

    pub fn surd(a: i64, b: i64, d: u64, c: i64) -> Self {
        IrrationalSpec::NumericValue {
            value: NumericValue::QuadraticSurd { a, b, d, c },
            precision_bits: None,
            max_precision_bits: None,
        }
    }

    pub fn decimal(value: &str) -> Self {
        IrrationalSpec::NumericValue {
            value: NumericValue::Decimal {
                value: value.to_string(),
            },
            precision_bits: None,
            max_precision_bits: None,
        }
    }

    pub fn digits(rule: DigitRule) -> Self {
        IrrationalSpec::ExplicitDigits { rule }
    }

    pub fn liouville(c: f64) -> Self {
        Self::digits(DigitRule::Liouville { c })
    }

    fn precision_policy(&self) -> (u32, u32) {
        match self {
            IrrationalSpec::NumericValue {
                precision_bits,
                max_precision_bits,
                ..
            } => {
                let start = precision_bits.unwrap_or(DEFAULT_PRECISION_BITS).max(64);
                let cap = max_precision_bits
                    .unwrap_or(DEFAULT_MAX_PRECISION_BITS)
                    .max(start);
                (start, cap)
            }
            IrrationalSpec::ExplicitDigits { .. } => {
                (DEFAULT_PRECISION_BITS, DEFAULT_MAX_PRECISION_BITS)
            }
        }
    }
}

/// Partial quotients with exact convergents.
///
/// Index conventions follow the recurrence `q_k = a_k q_{k-1} + q_{k-2}` with
/// seeds `p_{-1} = 1, p_0 = 0, q_{-1} = 0, q_0 = 1`; [`p`](Self::p) and
/// [`q`](Self::q) accept `k = 0..=depth`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuedFraction {
    digits: Vec<u64>,
    p: Vec<BigUint>,
    q: Vec<BigUint>,
    p_prev: BigUint,
    q_prev: BigUint,
}

impl Default for ContinuedFraction {
    fn default() -> Self {
        ContinuedFraction {
            digits: Vec::new(),
            p: vec![BigUint::zero()],
            q: vec![BigUint::one()],
            p_prev: BigUint::one(),
            q_prev: BigUint::zero(),
        }
    }
}

impl ContinuedFraction {
    pub fn from_digits(digits: &[u64]) -> Result<Self> {
        let mut cf = ContinuedFraction::default();
        for &a in digits {
            cf.push(a)?;
        }
        Ok(cf)
    }

    pub fn push(&mut self, a: u64) -> Result<()> {
        if a == 0 {
            return Err(Error::InvalidInput(
                "partial quotients must be positive".into(),
            ));
        }
        let k = self.digits.len();
        let (p2, q2) = if k == 0 {
            (self.p_prev.clone(), self.q_prev.clone())
        } else {
            (self.p[k - 1].clone(), self.q[k - 1].clone())
        };
        let a_big = BigUint::from(a);
        let p = &a_big * &self.p[k] + p2;
        let q = &a_big * &self.q[k] + q2;
        self.digits.push(a);
        self.p.push(p);
        self.q.push(q);
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.digits.len()
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    /// `a_k`, 1-based.
    pub fn digit(&self, k: usize) -> u64 {
        self.digits[k - 1]
    }

    pub fn p(&self, k: usize) -> &BigUint {
        &self.p[k]
    }

    pub fn q(&self, k: usize) -> &BigUint {
        &self.q[k]
    }

    pub fn q_u64(&self, k: usize) -> Option<u64> {
        self.q.get(k).and_then(|q| q.to_u64())
    }

    /// `(p_k, q_k)` for `k = 1..=depth`.
    pub fn convergents(&self) -> Vec<(BigUint, BigUint)> {
        (1..=self.depth())
            .map(|k| (self.p[k].clone(), self.q[k].clone()))
            .collect()
    }

    /// Smallest `k ≥ 1` with `q_k = q`.
    pub fn level_of_q(&self, q: u64) -> Option<usize> {
        let target = BigUint::from(q);
        (1..=self.depth()).find(|&k| self.q[k] == target)
    }

    pub fn convergent_ratio(&self, k: usize) -> BigRational {
        BigRational::new(
            BigInt::from(self.p[k].clone()),
            BigInt::from(self.q[k].clone()),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct ContinuedFractionRecord {
    digits: Vec<u64>,
    convergents: Vec<[String; 2]>,
}

impl Serialize for ContinuedFraction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ContinuedFractionRecord {
            digits: self.digits.clone(),
            convergents: self
                .convergents()
                .into_iter()
                .map(|(p, q)| [p.to_string(), q.to_string()])
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ContinuedFraction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = ContinuedFractionRecord::deserialize(d)?;
        let cf = ContinuedFraction::from_digits(&rec.digits).map_err(serde::de::Error::custom)?;
        for (k, [p, q]) in rec.convergents.iter().enumerate() {
            if cf.p(k + 1).to_string() != *p || cf.q(k + 1).to_string() != *q {
                return Err(serde::de::Error::custom(format!(
                    "convergent {} disagrees with the digits",
                    k + 1
                )));
            }
        }
        Ok(cf)
    }
}

impl DigitRule {
    /// `a_k` for `k ≥ 1`; `Ok(None)` when a finite table is exhausted.
    fn digit(&self, k: usize, q_prev: &BigUint) -> Result<Option<u64>> {
        let a = match self {
            DigitRule::Constant { value } => Some(*value),
            DigitRule::Periodic { prefix, period } => {
                if k <= prefix.len() {
                    Some(prefix[k - 1])
                } else if period.is_empty() {
                    None
                } else {
                    Some(period[(k - 1 - prefix.len()) % period.len()])
                }
            }
            DigitRule::Tabulated { digits, tail } => digits.get(k - 1).copied().or(*tail),
            DigitRule::Liouville { c } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(Error::InvalidInput(
                        "Liouville parameter c must be positive".into(),
                    ));
                }
                let ln_q = ln_biguint(q_prev);
                let q = q_prev.to_f64().unwrap_or(f64::INFINITY);
                let ln_a = c * q - ln_q;
                if ln_a > 63.0 * std::f64::consts::LN_2 {
                    return Err(Error::DigitOverflow { index: k });
                }
                Some((ln_a.exp().ceil() as u64).max(1))
            }
        };
        match a {
            Some(0) => Err(Error::InvalidInput(format!("digit a_{k} is zero"))),
            other => Ok(other),
        }
    }
}

/// Why digit generation stopped before the requested depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GenerationStop {
    Done,
    Exhausted,
    Overflow,
}

fn generate_digits(
    rule: &DigitRule,
    max_depth: usize,
    enough: impl Fn(&ContinuedFraction) -> bool,
) -> Result<(ContinuedFraction, GenerationStop)> {
    let mut cf = ContinuedFraction::default();
    while cf.depth() < max_depth && !enough(&cf) {
        let k = cf.depth() + 1;
        match rule.digit(k, cf.q(k - 1)) {
            Ok(Some(a)) => cf.push(a)?,
            Ok(None) => return Ok((cf, GenerationStop::Exhausted)),
            Err(Error::DigitOverflow { .. }) if cf.depth() > 0 => {
                return Ok((cf, GenerationStop::Overflow))
            }
            Err(e) => return Err(e),
        }
    }
    Ok((cf, GenerationStop::Done))
}

/// Closed rational interval `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedReal {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl CertifiedReal {
    pub fn exact(v: BigRational) -> Self {
        CertifiedReal {
            lo: v.clone(),
            hi: v,
        }
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) / BigRational::from_integer(BigInt::from(2))
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.midpoint())
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    /// `width / lo`, or infinity when the lower end is zero.
    pub fn relative_width(&self) -> f64 {
        if self.lo.is_zero() {
            if self.hi.is_zero() {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            ratio_to_f64(&(self.width() / &self.lo))
        }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    // Shift into a range where the integer conversion is exact enough.
    let num = r.numer();
    let den = r.denom();
    if num.is_zero() {
        return 0.0;
    }
    let shift = num.bits() as i64 - den.bits() as i64;
    let scale = 70i64 - shift;
    let scaled = if scale >= 0 {
        (num << scale as usize) / den
    } else {
        num / (den << (-scale) as usize)
    };
    scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-scale as i32)
}

pub(crate) fn ln_biguint(q: &BigUint) -> f64 {
    let bits = q.bits();
    if bits <= 1000 {
        q.to_f64().unwrap_or(f64::INFINITY).ln()
    } else {
        let shift = bits - 64;
        (q >> shift as usize).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
    }
}

fn pow2(bits: u32) -> BigInt {
    BigInt::one() << bits as usize
}

fn numeric_bracket(v: &NumericValue, bits: u32) -> Result<CertifiedReal> {
    match v {
        NumericValue::QuadraticSurd { a, b, d, c } => {
            if *c == 0 {
                return Err(Error::InvalidInput("surd denominator is zero".into()));
            }
            let scaled = BigUint::from(*d) << (2 * bits as usize);
            let s = scaled.sqrt();
            let exact = &s * &s == scaled;
            let scale = BigRational::from_integer(pow2(bits));
            let root_lo = BigRational::from_integer(BigInt::from(s.clone())) / &scale;
            let root_hi = if exact {
                root_lo.clone()
            } else {
                BigRational::from_integer(BigInt::from(s + 1u32)) / &scale
            };
            let a = BigRational::from_integer(BigInt::from(*a));
            let b = BigRational::from_integer(BigInt::from(*b));
            let c = BigRational::from_integer(BigInt::from(*c));
            let e1 = (&a + &b * &root_lo) / &c;
            let e2 = (&a + &b * &root_hi) / &c;
            Ok(if e1 <= e2 {
                CertifiedReal { lo: e1, hi: e2 }
            } else {
                CertifiedReal { lo: e2, hi: e1 }
            })
        }
        NumericValue::Rational { num, den } => {
            if *den == 0 {
                return Err(Error::InvalidInput("rational denominator is zero".into()));
            }
            Ok(CertifiedReal::exact(BigRational::new(
                BigInt::from(*num),
                BigInt::from(*den),
            )))
        }
        NumericValue::Decimal { value } => parse_decimal(value).map(CertifiedReal::exact),
    }
}

fn parse_decimal(s: &str) -> Result<BigRational> {
    let bad = || Error::InvalidInput(format!("not a decimal literal: {s:?}"));
    let t = s.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let num = digits.parse::<BigInt>().map_err(|_| bad())?;
    let den = num_traits::pow(BigInt::from(10), frac_part.len());
    let r = BigRational::new(num, den);
    Ok(if neg { -r } else { r })
}

enum ExpandOutcome {
    Complete(Vec<u64>),
    Terminated(Vec<u64>),
    Ambiguous(Vec<u64>),
}

/// Expands every number of the bracket simultaneously and stops as soon as
/// the bracket endpoints disagree on a partial quotient.
fn expand_bracket(x: &CertifiedReal, depth: usize) -> Result<ExpandOutcome> {
    let one = BigRational::one();
    if x.is_exact() && (x.lo <= BigRational::zero() || x.lo >= one) {
        return Err(Error::InvalidInput(
            "numeric value must lie strictly in (0, 1)".into(),
        ));
    }
    if x.lo <= BigRational::zero() || x.hi >= one {
        return Ok(ExpandOutcome::Ambiguous(Vec::new()));
    }
    let (mut ln, mut ld) = (x.lo.numer().clone(), x.lo.denom().clone());
    let (mut hn, mut hd) = (x.hi.numer().clone(), x.hi.denom().clone());
    let mut digits = Vec::new();
    while digits.len() < depth {
        if hn.is_zero() {
            return Ok(ExpandOutcome::Terminated(digits));
        }
        if ln.is_zero() {
            return Ok(ExpandOutcome::Ambiguous(digits));
        }
        let a_lo = hd.div_floor(&hn);
        let a_hi = ld.div_floor(&ln);
        if a_lo != a_hi {
            return Ok(ExpandOutcome::Ambiguous(digits));
        }
        let a = a_lo
            .to_u64()
            .ok_or(Error::DigitOverflow {
                index: digits.len() + 1,
            })?;
        digits.push(a);
        // [1/hi − a, 1/lo − a]
        let new_lo = (&hd - &a_lo * &hn, hn.clone());
        let new_hi = (&ld - &a_lo * &ln, ln.clone());
        (ln, ld) = new_lo;
        (hn, hd) = new_hi;
    }
    Ok(ExpandOutcome::Complete(digits))
}

/// Continued fraction of depth `depth`, with every digit certified.
pub fn cf_expand(spec: &IrrationalSpec, depth: usize) -> Result<ContinuedFraction> {
    if depth == 0 {
        return Err(Error::InvalidInput("depth must be at least 1".into()));
    }
    match spec {
        IrrationalSpec::ExplicitDigits { rule } => {
            let (cf, stop) = generate_digits(rule, depth, |_| false)?;
            match stop {
                GenerationStop::Done => Ok(cf),
                GenerationStop::Exhausted => Err(Error::DepthTooSmall {
                    needed: depth,
                    have: cf.depth(),
                }),
                GenerationStop::Overflow => Err(Error::DigitOverflow {
                    index: cf.depth() + 1,
                }),
            }
        }
        IrrationalSpec::NumericValue { value, .. } => {
            let (mut bits, cap) = spec.precision_policy();
            loop {
                let bracket = numeric_bracket(value, bits)?;
                match expand_bracket(&bracket, depth)? {
                    ExpandOutcome::Complete(d) => return ContinuedFraction::from_digits(&d),
                    ExpandOutcome::Terminated(digits) => {
                        return Err(Error::RationalInput { digits })
                    }
                    ExpandOutcome::Ambiguous(d) => {
                        if bits >= cap {
                            return Err(Error::InsufficientPrecision(format!(
                                "only {} digits certified at {bits} bits",
                                d.len()
                            )));
                        }
                        bits = (bits * 2).min(cap);
                    }
                }
            }
        }
    }
}

/// Exact convergents `(p_k, q_k)`, `k = 1..=depth`.
pub fn convergents(cf: &ContinuedFraction) -> Vec<(BigUint, BigUint)> {
    cf.convergents()
}

/// Finite-depth proxy for `β(α) = limsup ln q_{k+1} / q_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaProxy {
    pub k_min: usize,
    /// `ln q_{k+1} / q_k` for `k = k_min, k_min + 1, …`.
    pub values: Vec<f64>,
    pub proxy: f64,
}

pub fn beta_estimate(cf: &ContinuedFraction, k_min: usize) -> Result<BetaProxy> {
    if cf.depth() < k_min + 1 {
        return Err(Error::DepthTooSmall {
            needed: k_min + 1,
            have: cf.depth(),
        });
    }
    let values: Vec<f64> = (k_min..cf.depth())
        .map(|k| {
            let q = cf.q(k);
            ln_biguint(cf.q(k + 1)) / q.to_f64().unwrap_or(f64::INFINITY)
        })
        .collect();
    let proxy = values.iter().copied().fold(0.0, f64::max);
    Ok(BetaProxy {
        k_min,
        values,
        proxy,
    })
}

/// A rotation number resolved to digits, an exact bracket and a 128-bit
/// fixed-point fraction used for exact orbit arithmetic `{nα}`.
#[derive(Debug, Clone)]
pub struct Alpha {
    spec: IrrationalSpec,
    cf: ContinuedFraction,
    lo: BigRational,
    hi: BigRational,
    fixed: u128,
    precision_bits: u32,
}

impl Alpha {
    pub fn resolve(spec: &IrrationalSpec) -> Result<Alpha> {
        let (bits, cap) = spec.precision_policy();
        let mut bits = bits;
        loop {
            match Self::resolve_with(spec, bits) {
                Err(Error::InsufficientPrecision(msg)) => {
                    if bits >= cap {
                        return Err(Error::InsufficientPrecision(msg));
                    }
                    bits = (bits * 2).min(cap);
                }
                other => return other,
            }
        }
    }

    /// Resolution at a fixed working precision, without the doubling policy.
    pub fn resolve_with(spec: &IrrationalSpec, bits: u32) -> Result<Alpha> {
        let (cf, lo, hi) = match spec {
            IrrationalSpec::ExplicitDigits { rule } => {
                let target = BigUint::one() << (bits as usize).div_ceil(2);
                let (cf, stop) =
                    generate_digits(rule, MAX_GENERATED_DEPTH, |cf| cf.q(cf.depth()) >= &target)?;
                if cf.depth() == 0 {
                    return Err(Error::InvalidInput("digit rule produced no digits".into()));
                }
                // α = [a_1, …, a_D, t] for a tail t ≥ t_min.
                let t_min = match stop {
                    GenerationStop::Overflow => BigUint::one() << 64usize,
                    _ => BigUint::one(),
                };
                let d = cf.depth();
                let edge = cf.convergent_ratio(d);
                let other = BigRational::new(
                    BigInt::from(cf.p(d) * &t_min + if d >= 2 { cf.p(d - 1).clone() } else { BigUint::one() }),
                    BigInt::from(cf.q(d) * &t_min + if d >= 2 { cf.q(d - 1).clone() } else { BigUint::zero() }),
                );
                let (lo, hi) = if edge <= other { (edge, other) } else { (other, edge) };
                (cf, lo, hi)
            }
            IrrationalSpec::NumericValue { value, .. } => {
                let bracket = numeric_bracket(value, bits)?;
                let digits = match expand_bracket(&bracket, MAX_RESOLVED_DEPTH)? {
                    ExpandOutcome::Complete(d) | ExpandOutcome::Ambiguous(d) => d,
                    ExpandOutcome::Terminated(digits) => {
                        return Err(Error::RationalInput { digits })
                    }
                };
                if digits.is_empty() {
                    return Err(Error::InsufficientPrecision(format!(
                        "no digit certified at {bits} bits"
                    )));
                }
                (ContinuedFraction::from_digits(&digits)?, bracket.lo, bracket.hi)
            }
        };
        let scale = BigRational::from_integer(pow2(128));
        let f_lo = (&lo * &scale).floor().to_integer();
        let f_hi = (&hi * &scale).floor().to_integer();
        let width = &hi - &lo;
        let tolerance = BigRational::new(BigInt::one(), pow2(FIXED_POINT_BITS));
        if f_lo != f_hi && width > tolerance {
            return Err(Error::InsufficientPrecision(format!(
                "bracket of width {:e} is too wide for orbit arithmetic",
                ratio_to_f64(&width)
            )));
        }
        let mid = ((&lo + &hi) * &scale / BigRational::from_integer(BigInt::from(2)))
            .floor()
            .to_integer();
        let fixed = mid
            .to_u128()
            .ok_or_else(|| Error::InvalidInput("rotation number must lie in (0, 1)".into()))?;
        Ok(Alpha {
            spec: spec.clone(),
            cf,
            lo,
            hi,
            fixed,
            precision_bits: bits,
        })
    }

    pub fn spec(&self) -> &IrrationalSpec {
        &self.spec
    }

    pub fn cf(&self) -> &ContinuedFraction {
        &self.cf
    }

    pub fn bracket(&self) -> (&BigRational, &BigRational) {
        (&self.lo, &self.hi)
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    /// `⌊α·2^128⌋`
    pub fn fixed(&self) -> u128 {
        self.fixed
    }

    pub fn value(&self) -> f64 {
        self.fixed as f64 * 2f64.powi(-128)
    }

    /// `{nα}·2^128` in wrapping arithmetic; exact up to `|n|·2^-112`.
    pub fn frac_of_multiple(&self, n: i128) -> u128 {
        (n as u128).wrapping_mul(self.fixed)
    }

    /// `nα − round(nα)`, signed.
    pub fn signed_residual(&self, n: i128) -> f64 {
        let f = self.frac_of_multiple(n);
        if f >> 127 == 1 {
            -((f.wrapping_neg()) as f64 * 2f64.powi(-128))
        } else {
            f as f64 * 2f64.powi(-128)
        }
    }

    /// `q_k` as an integer, failing when the resolved depth is too small.
    pub fn q(&self, k: usize) -> Result<u64> {
        if k > self.cf.depth() {
            return Err(Error::DepthTooSmall {
                needed: k,
                have: self.cf.depth(),
            });
        }
        self.cf.q_u64(k).ok_or(Error::CapExceeded {
            what: "q_k",
            value: u128::MAX,
            cap: u64::MAX as u128,
        })
    }

    /// Certified `‖nα‖` from the resolved bracket.
    pub fn dist_to_integers(&self, n: &BigUint) -> Result<CertifiedReal> {
        let n = BigRational::from_integer(BigInt::from(n.clone()));
        let t_lo = &n * &self.lo;
        let t_hi = &n * &self.hi;
        let m = t_lo.floor();
        let one = BigRational::one();
        if t_hi > &m + &one {
            return Err(Error::InsufficientPrecision(
                "bracket of nα contains an integer".into(),
            ));
        }
        let f_lo = t_lo - &m;
        let f_hi = t_hi - &m;
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let (lo, hi) = if f_hi <= half {
            (f_lo, f_hi)
        } else if f_lo >= half {
            (&one - f_hi, &one - f_lo)
        } else {
            let a = f_lo.clone();
            let b = &one - &f_hi;
            (if a < b { a } else { b }, half)
        };
        if lo.is_zero() && !(hi.is_zero()) {
            return Err(Error::InsufficientPrecision(
                "bracket of nα touches an integer".into(),
            ));
        }
        Ok(CertifiedReal { lo, hi })
    }

    /// `‖nα‖ ≥ ‖q_k α‖` for every `1 ≤ n < q_{k+1}`, checked exhaustively.
    pub fn best_approximation_holds(&self, k: usize) -> Result<bool> {
        let q_next = self.q(k + 1)?;
        check_cap("q_{k+1}", q_next as u128, Caps::global().exhaustive as u128)?;
        let qk = self.q(k)?;
        let best = circle_dist_fixed(self.frac_of_multiple(qk as i128));
        // Orbit errors are below n·2^-112, far under the gaps being compared.
        let slack: u128 = 1 << 32;
        Ok((1..q_next).all(|n| {
            circle_dist_fixed(self.frac_of_multiple(n as i128)) + slack >= best
        }))
    }

    /// `1/(2q_{k+1}) ≤ ‖q_k α‖ ≤ 1/q_{k+1}`, decided on certified intervals.
    pub fn sandwich_holds(&self, k: usize) -> Result<bool> {
        if k + 1 > self.cf.depth() {
            return Err(Error::DepthTooSmall {
                needed: k + 1,
                have: self.cf.depth(),
            });
        }
        let d = self.dist_to_integers(self.cf.q(k))?;
        let q_next = BigInt::from(self.cf.q(k + 1).clone());
        let lower = BigRational::new(BigInt::one(), &q_next * 2);
        let upper = BigRational::new(BigInt::one(), q_next);
        Ok(d.lo >= lower && d.hi <= upper)
    }
}

fn circle_dist_fixed(f: u128) -> u128 {
    f.min(f.wrapping_neg())
}

/// Certified `‖nα‖` with relative error at most `2^-guard`, raising the
/// working precision of `spec` until that is achieved.
pub fn dist_to_integers(n: &BigUint, spec: &IrrationalSpec, guard: u32) -> Result<CertifiedReal> {
    let (mut bits, cap) = spec.precision_policy();
    let bound = 2f64.powi(-(guard as i32));
    loop {
        let attempt = Alpha::resolve_with(spec, bits).and_then(|a| a.dist_to_integers(n));
        match attempt {
            Ok(d) if d.is_exact() || d.relative_width() <= bound => return Ok(d),
            Ok(_) | Err(Error::InsufficientPrecision(_)) => {
                if bits >= cap {
                    return Err(Error::InsufficientPrecision(format!(
                        "‖nα‖ not certified to 2^-{guard} at {bits} bits"
                    )));
                }
                bits = (bits * 2).min(cap);
            }
            Err(e) => return Err(e),
        }
    }
}

/// Sign of `p_k/q_k − α` decided on the certified bracket.
pub fn convergent_side(alpha: &Alpha, k: usize) -> Option<std::cmp::Ordering> {
    let r = alpha.cf.convergent_ratio(k);
    let (lo, hi) = alpha.bracket();
    if &r > hi {
        Some(std::cmp::Ordering::Greater)
    } else if &r < lo {
        Some(std::cmp::Ordering::Less)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q_list(cf: &ContinuedFraction) -> Vec<u64> {
        (1..=cf.depth()).map(|k| cf.q_u64(k).unwrap()).collect()
    }

    #[test]
    fn golden_digits_are_all_ones() {
        let cf = cf_expand(&IrrationalSpec::golden(), 8).unwrap();
        assert_eq!(cf.digits(), &[1; 8]);
    }

    #[test]
    fn silver_digits_are_all_twos() {
        let cf = cf_expand(&IrrationalSpec::silver(), 5).unwrap();
        assert_eq!(cf.digits(), &[2; 5]);
    }

    #[test]
    fn one_half_is_rational() {
        let err = cf_expand(&IrrationalSpec::decimal("0.5"), 3).unwrap_err();
        assert_eq!(err, Error::RationalInput { digits: vec![2] });
        assert_eq!(err.code(), "rational-input");
    }

    #[test]
    fn out_of_range_numeric_is_rejected() {
        assert!(matches!(
            cf_expand(&IrrationalSpec::decimal("1.5"), 3),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn low_precision_cap_is_a_hard_error() {
        let spec = IrrationalSpec::NumericValue {
            value: NumericValue::QuadraticSurd { a: -1, b: 1, d: 5, c: 2 },
            precision_bits: Some(64),
            max_precision_bits: Some(128),
        };
        let err = cf_expand(&spec, 400).unwrap_err();
        assert_eq!(err.code(), "insufficient-precision");
        // The same input succeeds once the cap allows doubling far enough.
        let spec = IrrationalSpec::NumericValue {
            value: NumericValue::QuadraticSurd { a: -1, b: 1, d: 5, c: 2 },
            precision_bits: Some(64),
            max_precision_bits: Some(1024),
        };
        assert_eq!(cf_expand(&spec, 400).unwrap().depth(), 400);
    }

    #[test]
    fn convergent_examples() {
        let cf = ContinuedFraction::from_digits(&[1; 8]).unwrap();
        assert_eq!(q_list(&cf), vec![1, 2, 3, 5, 8, 13, 21, 34]);
        let cf = ContinuedFraction::from_digits(&[2, 2, 2]).unwrap();
        assert_eq!(q_list(&cf), vec![2, 5, 12]);
        let cf = ContinuedFraction::from_digits(&[1, 10]).unwrap();
        let pairs: Vec<(u64, u64)> = convergents(&cf)
            .into_iter()
            .map(|(p, q)| (p.to_u64().unwrap(), q.to_u64().unwrap()))
            .collect();
        assert_eq!(pairs, vec![(1, 1), (10, 11)]);
    }

    #[test]
    fn beta_of_golden_at_q_55() {
        let cf = cf_expand(&IrrationalSpec::golden(), 11).unwrap();
        let k = cf.level_of_q(55).unwrap();
        let beta = beta_estimate(&cf, k).unwrap();
        assert!((beta.values[0] - 89f64.ln() / 55.0).abs() < 1e-15);
        assert!((beta.values[0] - 0.08157).abs() < 1e-4);
        assert!(matches!(
            beta_estimate(&cf, 11),
            Err(Error::DepthTooSmall { .. })
        ));
    }

    #[test]
    fn beta_sees_a_large_digit() {
        let rule = DigitRule::Tabulated {
            digits: vec![1, 1, 1, 1, 1, 1_000_000],
            tail: Some(1),
        };
        let cf = cf_expand(&IrrationalSpec::digits(rule), 9).unwrap();
        assert_eq!(cf.q_u64(5), Some(8));
        assert_eq!(cf.q_u64(6), Some(8_000_005));
        let beta = beta_estimate(&cf, 1).unwrap();
        assert!(beta.proxy >= (8_000_005f64).ln() / 8.0 - 1e-15);
    }

    #[test]
    fn golden_beta_proxy_shrinks() {
        let cf = cf_expand(&IrrationalSpec::digits(DigitRule::Constant { value: 1 }), 60).unwrap();
        let early = beta_estimate(&cf, 5).unwrap().proxy;
        let late = beta_estimate(&cf, 40).unwrap().proxy;
        assert!(late < early);
        assert!(late < 1e-6);
    }

    #[test]
    fn liouville_family_tracks_c() {
        let spec = IrrationalSpec::liouville(0.1);
        let alpha = Alpha::resolve(&spec).unwrap();
        let cf = alpha.cf();
        let last = cf.depth() - 1;
        let beta = beta_estimate(cf, last).unwrap();
        // ln q_{k+1}/q_k = ln(a_{k+1} q_k + q_{k-1})/q_k ≈ c once a_{k+1} is large.
        assert!((beta.proxy - 0.1).abs() < 0.02, "{beta:?}");
    }

    #[test]
    fn dist_at_q5_matches_exact_value() {
        let n = BigUint::from(8u32);
        let d = dist_to_integers(&n, &IrrationalSpec::golden(), DEFAULT_GUARD_BITS).unwrap();
        // 8α − 5 = 4√5 − 9
        let exact = 4.0 * 5f64.sqrt() - 9.0;
        assert!((d.to_f64() - exact.abs()).abs() < 1e-15);
        assert!(d.relative_width() <= 2f64.powi(-64));
    }

    #[test]
    fn dist_near_a_quarter() {
        // 0.25 + 1e-12·√2
        let spec = IrrationalSpec::surd(250_000_000_000, 1, 2, 1_000_000_000_000);
        let d = dist_to_integers(&BigUint::one(), &spec, DEFAULT_GUARD_BITS).unwrap();
        assert!((d.to_f64() - 0.25).abs() < 1e-11);
    }

    #[test]
    fn golden_sandwich_and_best_approximation() {
        let alpha = Alpha::resolve(&IrrationalSpec::golden()).unwrap();
        for k in 1..=15 {
            assert!(alpha.sandwich_holds(k).unwrap(), "k = {k}");
        }
        for k in 1..=18 {
            assert!(alpha.best_approximation_holds(k).unwrap(), "k = {k}");
        }
    }

    #[test]
    fn fixed_point_matches_value() {
        let alpha = Alpha::resolve(&IrrationalSpec::golden()).unwrap();
        assert!((alpha.value() - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-16);
        let third = alpha.frac_of_multiple(3) as f64 * 2f64.powi(-128);
        assert!((third - 0.854_101_966_249_684_5).abs() < 1e-15);
        assert!((alpha.signed_residual(-1) - (1.0 - alpha.value())).abs() < 1e-15);
    }

    #[test]
    fn digit_mode_and_numeric_mode_agree() {
        let a = Alpha::resolve(&IrrationalSpec::golden()).unwrap();
        let b = Alpha::resolve(&IrrationalSpec::digits(DigitRule::Constant { value: 1 })).unwrap();
        let diff = a.fixed().abs_diff(b.fixed());
        assert!(diff < 1 << 20, "{diff}");
    }

    #[test]
    fn serialization_uses_decimal_strings() {
        let cf = ContinuedFraction::from_digits(&[1, 10]).unwrap();
        let json = serde_json::to_string(&cf).unwrap();
        assert_eq!(json, r#"{"digits":[1,10],"convergents":[["1","1"],["10","11"]]}"#);
        let back: ContinuedFraction = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cf);
    }
}
