//! Finite-volume Schrödinger operators `(Hψ)(n) = ψ(n+1) + ψ(n−1) + λf(T^n x)ψ(n)`
//! and the determinant, transfer-matrix and eigenvalue machinery built on them.

pub mod curves;
pub mod eigen;
pub mod green;
pub mod scaled;
pub mod sweep;
pub mod transfer;

use serde::{Deserialize, Serialize};

use crate::caps::{check_cap, Caps};
use crate::circle_maps::{CircleMap, Phase};
use crate::error::{Error, Result};
use crate::potentials::Potential;

pub use curves::{eigenvalue_curves, CurveChecks, EigenvalueCurves};
pub use green::{green_edges, green_entry, WindowEdge, SINGULAR_LOG_FLOOR};
pub use scaled::ScaledValue;
pub use sweep::{periodic_eval, sweep, PeriodicEval, Sweep};
pub use transfer::{transfer, TransferProduct};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

/// Which one-sided limit to take where an orbit point lands exactly on the
/// potential's jump at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Side {
    #[default]
    Right,
    Left,
}

/// Coupling, potential and map: everything except the phase and the box.
#[derive(Debug, Clone)]
pub struct Model {
    pub lambda: f64,
    pub potential: Potential,
    pub map: CircleMap,
}

impl Model {
    pub fn new(lambda: f64, potential: Potential, map: CircleMap) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidInput("coupling λ must be finite and ≥ 0".into()));
        }
        Ok(Model {
            lambda,
            potential,
            map,
        })
    }

    /// `λf(T^j x)` for `j = 0..n`, with `x` given by its phase.
    pub fn site_values(&self, start: Phase, n: usize, side: Side) -> Vec<f64> {
        self.sites(start, side).take(n).collect()
    }

    /// The endless sequence `λf(T^j x)`, `j = 0, 1, …`.
    pub fn sites(&self, start: Phase, side: Side) -> impl Iterator<Item = f64> + '_ {
        let step = self.map.alpha().fixed();
        let jump = self.lambda * self.potential.left_limit_at_one();
        let mut p = start;
        std::iter::from_fn(move || {
            let v = if side == Side::Left && p == Phase::ZERO {
                jump
            } else {
                self.lambda * self.potential.eval(self.map.point(p))
            };
            p = Phase(p.0.wrapping_add(step));
            Some(v)
        })
    }

    /// Site values on the lattice interval `[first, first + n)` relative to `x`.
    pub fn lattice_values(&self, x: Phase, first: i64, n: usize) -> Vec<f64> {
        self.site_values(x.rotate(first as i128, self.map.alpha()), n, Side::Right)
    }

    pub fn box_at(&self, x: f64, n: usize, boundary: Boundary) -> Result<BoxOperator> {
        BoxOperator::new(
            self.site_values(self.map.phase_of(x), n, Side::Right),
            boundary,
        )
    }

    pub fn box_at_phase(&self, p: Phase, n: usize, boundary: Boundary, side: Side) -> Result<BoxOperator> {
        BoxOperator::new(self.site_values(p, n, side), boundary)
    }

    /// `M_n(x, E)`
    pub fn transfer(&self, p: Phase, e: f64, n: usize) -> TransferProduct {
        transfer(&self.site_values(p, n, Side::Right), e)
    }

    /// `λ·inf f − 2` and `λ·sup f + 2`.
    pub fn spectrum_hull(&self) -> (f64, f64) {
        (-2.0, 2.0 + self.lambda * self.potential.sup())
    }
}

/// Dense row-major symmetric matrix used for oracle cross-checks.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// First line `n`, then `n` rows of space-separated entries.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| format!("{:.17e}", self.get(i, j))).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput("malformed dense matrix text".into());
        let mut lines = s.lines();
        let n: usize = lines.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        let mut data = Vec::with_capacity(n * n);
        for line in lines.take(n) {
            for tok in line.split_whitespace() {
                data.push(tok.parse::<f64>().map_err(|_| bad())?);
            }
        }
        if data.len() != n * n {
            return Err(bad());
        }
        Ok(DenseMatrix { n, data })
    }
}

/// `H_n(x)` or `H̃_n(x)` restricted to a box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxOperator {
    diag: Vec<f64>,
    boundary: Boundary,
}

impl BoxOperator {
    pub fn new(diag: Vec<f64>, boundary: Boundary) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidInput("box size must be at least 1".into()));
        }
        if boundary == Boundary::Periodic && diag.len() < 3 {
            return Err(Error::InvalidInput(
                "periodic boxes need n ≥ 3; smaller corners collide with the band".into(),
            ));
        }
        Ok(BoxOperator { diag, boundary })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn build_matrix(&self) -> Result<DenseMatrix> {
        let n = self.n();
        check_cap("dense n", n as u128, Caps::global().dense as u128)?;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = self.diag[i];
            if i + 1 < n {
                data[i * n + i + 1] = 1.0;
                data[(i + 1) * n + i] = 1.0;
            }
        }
        if self.boundary == Boundary::Periodic {
            data[n - 1] = 1.0;
            data[(n - 1) * n] = 1.0;
        }
        Ok(DenseMatrix { n, data })
    }

    pub fn det_dirichlet(&self, e: f64) -> Result<ScaledValue> {
        match self.boundary {
            Boundary::Dirichlet => Ok(sweep::det_dirichlet(&self.diag, e)),
            Boundary::Periodic => Err(Error::InvalidInput("box is periodic".into())),
        }
    }

    pub fn det_periodic(&self, e: f64) -> Result<ScaledValue> {
        match self.boundary {
            Boundary::Periodic => Ok(periodic_eval(&self.diag, e).det),
            Boundary::Dirichlet => Err(Error::InvalidInput("box is Dirichlet".into())),
        }
    }

    /// `det(H − E)` for the box's own boundary condition.
    pub fn det(&self, e: f64) -> ScaledValue {
        match self.boundary {
            Boundary::Dirichlet => sweep::det_dirichlet(&self.diag, e),
            Boundary::Periodic => periodic_eval(&self.diag, e).det,
        }
    }

    /// Number of eigenvalues `≤ E`.
    pub fn count_below(&self, e: f64) -> usize {
        match self.boundary {
            Boundary::Dirichlet => sweep::count_dirichlet(&self.diag, e),
            Boundary::Periodic => periodic_eval(&self.diag, e).count,
        }
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let caps = Caps::global();
        match self.boundary {
            Boundary::Dirichlet => {
                check_cap("dirichlet eigen n", self.n() as u128, caps.eigen_dirichlet as u128)?;
                Ok(eigen::dirichlet_eigenvalues(&self.diag))
            }
            Boundary::Periodic => {
                check_cap("periodic eigen n", self.n() as u128, caps.eigen_periodic as u128)?;
                eigen::periodic_eigenvalues(&self.diag)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_matrices() {
        let m = BoxOperator::new(vec![0.4], Boundary::Dirichlet).unwrap().build_matrix().unwrap();
        assert_eq!(m.data, vec![0.4]);
        let m = BoxOperator::new(vec![0.0; 3], Boundary::Periodic).unwrap().build_matrix().unwrap();
        assert_eq!(m.data, vec![0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]);
        assert!(BoxOperator::new(vec![0.0; 2], Boundary::Periodic).is_err());
        let back = DenseMatrix::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn free_determinants() {
        let b = BoxOperator::new(vec![0.7], Boundary::Dirichlet).unwrap();
        assert!((b.det(0.2).to_f64() - 0.5).abs() < 1e-15);
        let b = BoxOperator::new(vec![0.0; 2], Boundary::Dirichlet).unwrap();
        assert!((b.det(0.0).to_f64() + 1.0).abs() < 1e-15);
        let b = BoxOperator::new(vec![0.0; 3], Boundary::Periodic).unwrap();
        assert!((b.det(0.0).to_f64() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn free_spectra() {
        let b = BoxOperator::new(vec![0.0; 3], Boundary::Periodic).unwrap();
        let ev = b.eigenvalues().unwrap();
        for (got, want) in ev.iter().zip([-1.0, -1.0, 2.0]) {
            assert!((got - want).abs() < 1e-11, "{ev:?}");
        }
        let b = BoxOperator::new(vec![0.0; 8], Boundary::Dirichlet).unwrap();
        let ev = b.eigenvalues().unwrap();
        for (j, got) in ev.iter().enumerate() {
            let want = 2.0 * ((8 - j) as f64 * std::f64::consts::PI / 9.0).cos();
            assert!((got - want).abs() < 1e-11);
        }
        assert_eq!(b.count_below(0.0), 4);
        assert_eq!(b.count_below(-3.0), 0);
    }
}
