use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// A real number stored as sign and natural log of its magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledValue {
    pub sign: i8,
    pub log_mag: f64,
}

impl ScaledValue {
    pub const ZERO: ScaledValue = ScaledValue {
        sign: 0,
        log_mag: f64::NEG_INFINITY,
    };
    pub const ONE: ScaledValue = ScaledValue {
        sign: 1,
        log_mag: 0.0,
    };

    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            ScaledValue {
                sign: if v > 0.0 { 1 } else { -1 },
                log_mag: v.abs().ln(),
            }
        }
    }

    /// May overflow to ±∞ or underflow to 0.
    pub fn to_f64(self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            self.sign as f64 * self.log_mag.exp()
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn abs(self) -> Self {
        ScaledValue {
            sign: self.sign.abs(),
            log_mag: self.log_mag,
        }
    }

    pub fn neg(self) -> Self {
        ScaledValue {
            sign: -self.sign,
            log_mag: self.log_mag,
        }
    }

    pub fn mul(self, o: Self) -> Self {
        if self.sign == 0 || o.sign == 0 {
            return Self::ZERO;
        }
        ScaledValue {
            sign: self.sign * o.sign,
            log_mag: self.log_mag + o.log_mag,
        }
    }

    /// `self / o`; division by zero yields a signed infinity magnitude.
    pub fn div(self, o: Self) -> Self {
        if self.sign == 0 {
            return Self::ZERO;
        }
        ScaledValue {
            sign: self.sign * if o.sign == 0 { 1 } else { o.sign },
            log_mag: self.log_mag - o.log_mag,
        }
    }

    pub fn add(self, o: Self) -> Self {
        if self.sign == 0 {
            return o;
        }
        if o.sign == 0 {
            return self;
        }
        let (big, small) = if self.log_mag >= o.log_mag {
            (self, o)
        } else {
            (o, self)
        };
        let r = (small.log_mag - big.log_mag).exp();
        let factor = if big.sign == small.sign { 1.0 + r } else { 1.0 - r };
        if factor == 0.0 {
            return Self::ZERO;
        }
        ScaledValue {
            sign: big.sign,
            log_mag: big.log_mag + factor.ln(),
        }
    }

    pub fn sub(self, o: Self) -> Self {
        self.add(o.neg())
    }

    /// Compares `|self|` with `e^t`.
    pub fn cmp_abs_exp(self, t: f64) -> Ordering {
        if self.sign == 0 {
            return Ordering::Less;
        }
        self.log_mag.total_cmp(&t)
    }

    /// `|a − b| / max(|a|, |b|)`, computed without leaving log space.
    pub fn relative_diff(self, o: Self) -> f64 {
        if self.sign == 0 && o.sign == 0 {
            return 0.0;
        }
        let scale = self.log_mag.max(o.log_mag);
        let d = self.sub(o);
        if d.sign == 0 {
            0.0
        } else {
            (d.log_mag - scale).exp()
        }
    }
}

/// Product of many factors without overflow.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogProduct {
    mantissa: f64,
    log: f64,
    sign: i8,
}

const RESCALE: f64 = 1e100;

impl LogProduct {
    pub(crate) fn new() -> Self {
        LogProduct {
            mantissa: 1.0,
            log: 0.0,
            sign: 1,
        }
    }

    #[inline]
    pub(crate) fn push(&mut self, p: f64) {
        if p == 0.0 {
            self.sign = 0;
            return;
        }
        if p < 0.0 {
            self.sign = -self.sign;
        }
        let a = p.abs();
        if !(1.0 / RESCALE..=RESCALE).contains(&a) {
            self.log += a.ln();
            return;
        }
        self.mantissa *= a;
        if !(1.0 / RESCALE..=RESCALE).contains(&self.mantissa) {
            self.log += self.mantissa.ln();
            self.mantissa = 1.0;
        }
    }

    pub(crate) fn finish(self) -> ScaledValue {
        if self.sign == 0 {
            ScaledValue::ZERO
        } else {
            ScaledValue {
                sign: self.sign,
                log_mag: self.log + self.mantissa.ln(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_round_trips() {
        let a = ScaledValue::from_f64(-3.0);
        let b = ScaledValue::from_f64(2.0);
        assert!((a.mul(b).to_f64() + 6.0).abs() < 1e-14);
        assert!((a.div(b).to_f64() + 1.5).abs() < 1e-14);
        assert!((a.add(b).to_f64() + 1.0).abs() < 1e-14);
        assert!(a.add(a.neg()).is_zero());
        assert_eq!(b.cmp_abs_exp(0.0), Ordering::Greater);
    }

    #[test]
    fn product_survives_overflow() {
        let mut p = LogProduct::new();
        for _ in 0..1000 {
            p.push(-1e10);
        }
        let v = p.finish();
        assert_eq!(v.sign, 1);
        assert!((v.log_mag - 1000.0 * 1e10f64.ln()).abs() < 1e-8);
    }
}
