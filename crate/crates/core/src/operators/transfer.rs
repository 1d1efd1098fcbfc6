//! Products `M_n = A_{n−1} ⋯ A_0` of the one-step matrices
//! `A_i = [[E − v_i, −1], [1, 0]]`, kept as `Q·R` with `Q` a rotation and `R`
//! upper triangular with logarithmic diagonal.

use serde::Serialize;

use super::scaled::ScaledValue;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferProduct {
    steps: usize,
    /// `(cos θ, sin θ)` of `Q`.
    rot: (f64, f64),
    log_r11: f64,
    sign_r11: i8,
    log_r22: f64,
    sign_r22: i8,
    /// `r12 / r11`
    t: f64,
}

impl TransferProduct {
    pub fn identity() -> Self {
        TransferProduct {
            steps: 0,
            rot: (1.0, 0.0),
            log_r11: 0.0,
            sign_r11: 1,
            log_r22: 0.0,
            sign_r22: 1,
            t: 0.0,
        }
    }

    /// Multiplies by `A = [[E − v, −1], [1, 0]]` on the left.
    pub fn step(&mut self, e: f64, v: f64) {
        let (c, s) = self.rot;
        let a = e - v;
        // B = A·Q with Q = [[c, −s], [s, c]].
        let b00 = a * c - s;
        let b01 = -a * s - c;
        let b10 = c;
        let b11 = -s;
        let h = b00.hypot(b10);
        let (c2, s2) = (b00 / h, b10 / h);
        let r01 = c2 * b01 + s2 * b11;
        let r11 = -s2 * b01 + c2 * b11;
        // R_new = [[h, r01], [0, r11]]·R
        let ratio = self.sign_r22 as f64 * self.sign_r11 as f64 * (self.log_r22 - self.log_r11).exp();
        self.t += r01 / h * ratio;
        self.log_r11 += h.ln();
        self.log_r22 += r11.abs().ln();
        if r11 < 0.0 {
            self.sign_r22 = -self.sign_r22;
        }
        self.rot = (c2, s2);
        self.steps += 1;
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn rho(&self) -> f64 {
        self.sign_r11 as f64 * self.sign_r22 as f64 * (self.log_r22 - self.log_r11).exp()
    }

    /// `Q·[[1, t], [0, ρ]]`, equal to `M_n / r11`.
    fn core(&self) -> [[f64; 2]; 2] {
        let (c, s) = self.rot;
        let rho = self.rho();
        [
            [c, c * self.t - s * rho],
            [s, s * self.t + c * rho],
        ]
    }

    /// Product scaled so its largest entry has magnitude 1.
    pub fn normalized(&self) -> [[f64; 2]; 2] {
        let m = self.core();
        let big = m.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()));
        m.map(|row| row.map(|x| x / big))
    }

    /// Log of the factor removed by [`normalized`](Self::normalized).
    pub fn log_scale(&self) -> f64 {
        let m = self.core();
        let big = m.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()));
        self.log_r11 + big.ln()
    }

    /// `ln ‖M_n‖₂`
    pub fn log_norm(&self) -> f64 {
        // ‖M‖₂ = r11·‖[[1, t], [0, ρ]]‖₂ because Q is orthogonal.
        let rho = self.rho();
        let fro = 1.0 + self.t * self.t + rho * rho;
        let det = rho.abs();
        let disc = (fro * fro - 4.0 * det * det).max(0.0).sqrt();
        self.log_r11 + (0.5 * (fro + disc)).sqrt().ln()
    }

    pub fn entry(&self, i: usize, j: usize) -> ScaledValue {
        let m = self.core();
        let mut v = ScaledValue::from_f64(m[i][j]);
        if v.sign != 0 {
            v.log_mag += self.log_r11;
            v.sign *= self.sign_r11;
        }
        v
    }

    /// `(ln |det M_n|, sign det M_n)`; exact arithmetic gives `(0, +1)`.
    pub fn det(&self) -> (f64, i8) {
        (self.log_r11 + self.log_r22, self.sign_r11 * self.sign_r22)
    }
}

/// `M_n` for the diagonal `v_0, …, v_{n−1}`.
pub fn transfer(diag: &[f64], e: f64) -> TransferProduct {
    let mut m = TransferProduct::identity();
    for &v in diag {
        m.step(e, v);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step() {
        let m = transfer(&[0.7], 2.0);
        let expect = [[1.3, -1.0], [1.0, 0.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((m.entry(i, j).to_f64() - expect[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn free_growth_rate() {
        let m = transfer(&vec![0.0; 100], 3.0);
        let rate = m.log_norm() / 100.0;
        assert!((rate - ((3.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 0.01);
        let (l, s) = m.det();
        assert!(l.abs() < 1e-12 && s == 1);
    }
}
