//! Scaled determinants, transfer products, Green entries and spectra checked
//! against dense linear algebra from nalgebra.

use csl_core::operators::eigen::{dirichlet_eigenvalues, periodic_eigenvalues};
use csl_core::operators::{
    green_edges, green_entry, periodic_eval, sweep, transfer, Boundary, BoxOperator, WindowEdge,
};
use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dense(diag: &[f64], periodic: bool, e: f64) -> DMatrix<f64> {
    let n = diag.len();
    let b = BoxOperator::new(
        diag.to_vec(),
        if periodic { Boundary::Periodic } else { Boundary::Dirichlet },
    )
    .unwrap();
    let m = b.build_matrix().unwrap();
    DMatrix::from_row_slice(n, n, &m.data) - DMatrix::identity(n, n) * e
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn random_box(rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
    let n = rng.gen_range(3..=64);
    let lambda = [0.0, 1.0, 10.0][rng.gen_range(0..3)];
    let diag: Vec<f64> = (0..n).map(|_| lambda * rng.gen::<f64>()).collect();
    let e = rng.gen_range(-2.5..2.5 + lambda);
    (diag, e)
}

#[test]
fn determinants_match_lu() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let (diag, e) = random_box(&mut rng);
        let lu = dense(&diag, false, e).lu().determinant();
        let got = sweep(&diag, e).det.to_f64();
        assert!(rel(got, lu) < 1e-9, "n={} E={e}: {got} vs {lu}", diag.len());

        let lu = dense(&diag, true, e).lu().determinant();
        let got = periodic_eval(&diag, e).det.to_f64();
        assert!(rel(got, lu) < 1e-9, "periodic n={} E={e}: {got} vs {lu}", diag.len());
    }
}

#[test]
fn transfer_entries_match_naive_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let (diag, e) = random_box(&mut rng);
        let mut naive = Matrix2::identity();
        for &v in &diag {
            naive = Matrix2::new(e - v, -1.0, 1.0, 0.0) * naive;
        }
        let m = transfer(&diag, e);
        for i in 0..2 {
            for j in 0..2 {
                let got = m.entry(i, j).to_f64();
                assert!(
                    (got - naive[(i, j)]).abs() <= 1e-9 * naive.norm(),
                    "entry ({i},{j}): {got} vs {}",
                    naive[(i, j)]
                );
            }
        }
        // Top-left entry is det(E − H) = (−1)^n P_n.
        let n = diag.len();
        let p = sweep(&diag, e).det.to_f64() * if n % 2 == 0 { 1.0 } else { -1.0 };
        assert!((m.entry(0, 0).to_f64() - p).abs() <= 1e-9 * naive.norm());
    }
}

#[test]
fn transfer_determinant_is_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for n in [1usize, 10, 100, 500, 1000] {
        let diag: Vec<f64> = (0..n).map(|_| 10.0 * rng.gen::<f64>()).collect();
        for e in [-2.0, 0.3, 5.0, 12.5] {
            let (log, sign) = transfer(&diag, e).det();
            assert_eq!(sign, 1);
            assert!(log.abs() < 1e-10, "n={n} E={e}: ln det = {log}");
        }
    }
}

#[test]
fn green_entries_match_dense_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..200 {
        let (diag, e) = random_box(&mut rng);
        let n = diag.len();
        let inv = dense(&diag, false, e).try_inverse().unwrap();
        let scale = inv.amax();
        let (left, right) = green_edges(&diag, e, (0, n as i64 - 1)).unwrap();
        for m in 0..n {
            let a = inv[(0, m)];
            let b = inv[(m, n - 1)];
            assert!((left[m].to_f64() - a).abs() <= 1e-9 * scale.max(a.abs()));
            assert!((right[m].to_f64() - b).abs() <= 1e-9 * scale.max(b.abs()));
        }
        let m = rng.gen_range(0..n);
        let single = green_entry(&diag, e, m, WindowEdge::Left, (0, n as i64 - 1)).unwrap();
        assert!(single.relative_diff(left[m]) < 1e-9);
        let single = green_entry(&diag, e, m, WindowEdge::Right, (0, n as i64 - 1)).unwrap();
        assert!(single.relative_diff(right[m]) < 1e-9);
    }
}

#[test]
fn spectra_match_symmetric_eigen() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..200 {
        let (diag, _) = random_box(&mut rng);
        for periodic in [false, true] {
            let mut want: Vec<f64> = SymmetricEigen::new(dense(&diag, periodic, 0.0))
                .eigenvalues
                .iter()
                .copied()
                .collect();
            want.sort_by(f64::total_cmp);
            let got = if periodic {
                periodic_eigenvalues(&diag).unwrap()
            } else {
                dirichlet_eigenvalues(&diag)
            };
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-9 * w.abs().max(1.0), "periodic={periodic}: {g} vs {w} diag={diag:?} got={got:?} want={want:?}");
            }
            let b = BoxOperator::new(
                diag.clone(),
                if periodic { Boundary::Periodic } else { Boundary::Dirichlet },
            )
            .unwrap();
            let probe = rng.gen_range(want[0] - 1.0..want[want.len() - 1] + 1.0);
            let expected = want.iter().filter(|&&w| w <= probe).count();
            assert_eq!(b.count_below(probe), expected);
        }
    }
}

#[test]
fn free_periodic_pairs_stay_resolved() {
    // Every interior eigenvalue 2cos(2πj/n) of the free ring is double.
    for n in 3..=64usize {
        let got = periodic_eigenvalues(&vec![0.0; n]).unwrap();
        let mut want: Vec<f64> = (0..n)
            .map(|j| 2.0 * (2.0 * std::f64::consts::PI * j as f64 / n as f64).cos())
            .collect();
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-9 * w.abs().max(1.0), "n={n}: {g} vs {w}");
        }
    }
}
