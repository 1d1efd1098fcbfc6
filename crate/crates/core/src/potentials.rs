//! Monotone piecewise-linear sampling functions on the circle, with a single
//! jump at 0 where `f(0) = 0` and `f(1 − 0) = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SLOPE_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    Sawtooth,
    PiecewiseLinear {
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    spec: PotentialSpec,
    breaks: Vec<f64>,
    slopes: Vec<f64>,
    /// `f` at each breakpoint.
    base: Vec<f64>,
    gamma_minus: f64,
    gamma_plus: f64,
}

impl Potential {
    pub fn new(spec: PotentialSpec) -> Result<Self> {
        let (breaks, slopes) = match &spec {
            PotentialSpec::Sawtooth => (vec![0.0], vec![1.0]),
            PotentialSpec::PiecewiseLinear {
                breakpoints,
                slopes,
            } => (breakpoints.clone(), slopes.clone()),
        };
        if breaks.is_empty() || breaks.len() != slopes.len() {
            return Err(Error::InvalidInput(
                "potential needs one slope per breakpoint".into(),
            ));
        }
        if breaks[0] != 0.0 {
            return Err(Error::InvalidInput("first breakpoint must be 0".into()));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) || *breaks.last().unwrap() >= 1.0 {
            return Err(Error::InvalidInput(
                "breakpoints must increase strictly inside [0, 1)".into(),
            ));
        }
        if slopes.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidInput("slopes must be positive".into()));
        }
        let mut base = Vec::with_capacity(breaks.len());
        let mut acc = 0.0;
        for (i, s) in slopes.iter().enumerate() {
            base.push(acc);
            let end = breaks.get(i + 1).copied().unwrap_or(1.0);
            acc += s * (end - breaks[i]);
        }
        if (acc - 1.0).abs() > SLOPE_SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "potential rises by {acc} over the circle instead of 1"
            )));
        }
        let gamma_minus = slopes.iter().copied().fold(f64::INFINITY, f64::min);
        let gamma_plus = slopes.iter().copied().fold(0.0, f64::max);
        Ok(Potential {
            spec,
            breaks,
            slopes,
            base,
            gamma_minus,
            gamma_plus,
        })
    }

    pub fn sawtooth() -> Self {
        Potential::new(PotentialSpec::Sawtooth).expect("sawtooth is valid")
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    /// Value of the 1-periodic extension, right-continuous at integers.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x - x.floor();
        let i = self.breaks.partition_point(|&b| b <= x) - 1;
        self.base[i] + self.slopes[i] * (x - self.breaks[i])
    }

    /// `f(1 − 0)`
    pub fn left_limit_at_one(&self) -> f64 {
        1.0
    }

    pub fn sup(&self) -> f64 {
        1.0
    }

    /// `(γ_−, γ_+)`: the extreme slopes.
    pub fn slope_constants(&self) -> (f64, f64) {
        (self.gamma_minus, self.gamma_plus)
    }

    pub fn gamma_minus(&self) -> f64 {
        self.gamma_minus
    }

    pub fn gamma_plus(&self) -> f64 {
        self.gamma_plus
    }

    /// Breakpoint interval `[b_i, b_{i+1})` carrying the smallest slope.
    pub fn flattest_segment(&self) -> (f64, f64) {
        let i = (0..self.slopes.len())
            .min_by(|&a, &b| self.slopes[a].total_cmp(&self.slopes[b]))
            .unwrap();
        (self.breaks[i], self.breaks.get(i + 1).copied().unwrap_or(1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pwl(breakpoints: &[f64], slopes: &[f64]) -> Potential {
        Potential::new(PotentialSpec::PiecewiseLinear {
            breakpoints: breakpoints.to_vec(),
            slopes: slopes.to_vec(),
        })
        .unwrap()
    }

    #[test]
    fn sawtooth_values() {
        let f = Potential::sawtooth();
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(0.75), 0.75);
        assert_eq!(f.eval(1.25), 0.25);
        assert_eq!(f.slope_constants(), (1.0, 1.0));
    }

    #[test]
    fn two_piece_values() {
        let f = pwl(&[0.0, 0.5], &[0.5, 1.5]);
        assert_eq!(f.eval(0.5), 0.25);
        assert_eq!(f.slope_constants(), (0.5, 1.5));
        assert!((f.eval(1.0 - 1e-12) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn three_piece_constants() {
        let f = pwl(&[0.0, 0.25, 0.5], &[0.2, 1.0, 1.4]);
        assert_eq!(f.slope_constants(), (0.2, 1.4));
        let f = pwl(&[0.0, 0.4, 0.8], &[0.2, 1.8, 1.0]);
        assert_eq!(f.slope_constants(), (0.2, 1.8));
    }

    #[test]
    fn rejects_bad_total_rise() {
        let err = Potential::new(PotentialSpec::PiecewiseLinear {
            breakpoints: vec![0.0, 0.5],
            slopes: vec![1.0, 1.5],
        })
        .unwrap_err();
        assert_eq!(err.code(), "invalid-input");
    }

    #[test]
    fn json_shape() {
        let spec: PotentialSpec = serde_json::from_str(
            r#"{"form": "piecewise-linear", "breakpoints": [0, 0.5], "slopes": [0.5, 1.5]}"#,
        )
        .unwrap();
        assert_eq!(Potential::new(spec).unwrap().eval(0.5), 0.25);
    }

    #[test]
    fn lower_constant_is_tight() {
        let f = pwl(&[0.0, 0.4, 0.8], &[0.2, 1.8, 1.0]);
        let (a, b) = f.flattest_segment();
        let (x, y) = (a + 0.1 * (b - a), a + 0.9 * (b - a));
        let ratio = (f.eval(y) - f.eval(x)) / (y - x);
        assert!((ratio - f.gamma_minus()).abs() < 1e-12);
        assert!(ratio < f.gamma_minus() * 1.001);
    }

    proptest! {
        #[test]
        fn slope_sandwich(x in 0.0f64..1.0, y in 0.0f64..1.0) {
            let f = pwl(&[0.0, 0.4, 0.8], &[0.2, 1.8, 1.0]);
            let (x, y) = if x < y { (x, y) } else { (y, x) };
            prop_assume!(y > x);
            let rise = f.eval(y) - f.eval(x);
            let (lo, hi) = f.slope_constants();
            prop_assert!(rise >= lo * (y - x) - 1e-15);
            prop_assert!(rise <= hi * (y - x) + 1e-15);
            prop_assert!(rise > 0.0);
        }
    }
}
