//! The verification suite: every check produces records with a measured
//! value, the bound it is held to, and the margin between them.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use num_bigint::BigUint;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use csl_core::arithmetic::{cf_expand, Alpha, IrrationalSpec};
use csl_core::circle_maps::{CircleMap, ConjugacySpec, MapKind, MapSpec};
use csl_core::localization::{localization_study, window_count_bounds_hold, Verdict};
use csl_core::operators::eigen::{dirichlet_eigenvalues, periodic_eigenvalues};
use csl_core::operators::{
    eigenvalue_curves, green_edges, periodic_eval, sweep, transfer, Boundary, BoxOperator, Model,
};
use csl_core::potentials::Potential;
use csl_core::spectral::{
    ids, ids_lipschitz_from, ldt_sweep, lyapunov, lyapunov_lower_bound, numerator_bound_check,
    thouless_from, DensityHistogram,
};
use csl_core::{Error, Result};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub id: String,
    pub parameters: Value,
    pub measured: f64,
    pub bound: f64,
    /// Positive when the check passes with room to spare.
    pub margin: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

impl CheckRecord {
    /// A check of the form `measured ≤ bound`.
    fn at_most(id: &str, parameters: Value, measured: f64, bound: f64) -> Self {
        let margin = bound - measured;
        CheckRecord {
            id: id.into(),
            parameters,
            measured,
            bound,
            margin,
            pass: margin >= 0.0,
            details: Value::Null,
        }
    }

    /// A check of the form `measured ≥ bound`.
    fn at_least(id: &str, parameters: Value, measured: f64, bound: f64) -> Self {
        let margin = measured - bound;
        CheckRecord {
            id: id.into(),
            parameters,
            measured,
            bound,
            margin,
            pass: margin >= 0.0,
            details: Value::Null,
        }
    }

    /// A yes/no property; `measured` counts failures.
    fn flag(id: &str, parameters: Value, failures: usize) -> Self {
        Self::at_most(id, parameters, failures as f64, 0.0)
    }

    fn with(mut self, details: Value) -> Self {
        self.details = details;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
    pub environment: Value,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

type Group = fn(&ExperimentConfig) -> Result<Vec<CheckRecord>>;

/// Check groups with the ids each one produces.
pub const GROUPS: &[(&str, &[&str], Group)] = &[
    ("continued-fractions", &["cf-digits", "cf-convergents", "cf-best-approximation", "cf-sandwich"], continued_fractions),
    ("gap-statistics", &["gaps-counts", "gaps-mass-bounds"], gap_statistics),
    (
        "operator-oracles",
        &[
            "oracle-dirichlet-determinant",
            "oracle-periodic-determinant",
            "oracle-transfer",
            "oracle-green",
            "oracle-eigenvalues",
            "transfer-unimodular",
        ],
        operator_oracles,
    ),
    (
        "eigenvalue-curves",
        &[
            "curves-lipschitz",
            "curves-horizontal",
            "curves-horizontal-away-from-jump",
            "curves-global",
            "curves-vertical",
            "curves-jump",
        ],
        eigenvalue_curve_bounds,
    ),
    ("lyapunov", &["lyapunov-free", "lyapunov-lower-bound", "numerator-bound"], lyapunov_checks),
    ("ids", &["ids-free-staircase", "ids-lipschitz"], ids_checks),
    ("thouless", &["thouless-gap"], thouless_checks),
    ("large-deviations", &["ldt-components", "ldt-decay"], ldt_checks),
    (
        "localization",
        &[
            "loc-poisson",
            "loc-decay-fit",
            "loc-peak-singular",
            "loc-deviation",
            "loc-separation",
            "loc-envelope",
            "loc-decay-floor",
            "loc-window-count",
        ],
        localization_checks,
    ),
];

pub fn known_ids() -> Vec<&'static str> {
    GROUPS.iter().flat_map(|g| g.1.iter().copied()).collect()
}

/// Runs the whole suite, or the group that owns `only` and keeps its records.
pub fn run_verify(cfg: &ExperimentConfig, only: Option<&str>) -> Result<VerificationReport> {
    let mut checks = Vec::new();
    match only {
        Some(id) => {
            let group = GROUPS
                .iter()
                .find(|g| g.1.contains(&id))
                .ok_or_else(|| Error::InvalidInput(format!("unknown check id {id:?}")))?;
            checks.extend((group.2)(cfg)?.into_iter().filter(|c| c.id == id));
        }
        None => {
            for g in GROUPS {
                checks.extend((g.2)(cfg)?);
            }
            let present: BTreeSet<&str> = checks.iter().map(|c| c.id.as_str()).collect();
            let missing: Vec<&str> = known_ids().into_iter().filter(|id| !present.contains(id)).collect();
            checks.push(
                CheckRecord::flag("report-complete", json!({}), missing.len()).with(json!({ "missing": missing })),
            );
        }
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    Ok(VerificationReport {
        summary: Summary {
            total: checks.len(),
            passed,
            failed: checks.len() - passed,
        },
        checks,
        environment: json!({
            "tool": "csl",
            "version": env!("CARGO_PKG_VERSION"),
            "caps": caps_json(),
            "seed": cfg.seed,
        }),
    })
}

fn caps_json() -> Value {
    let c = csl_core::caps::Caps::global();
    json!({
        "dense": c.dense,
        "eigen_dirichlet": c.eigen_dirichlet,
        "eigen_periodic": c.eigen_periodic,
        "partition": c.partition,
        "exhaustive": c.exhaustive,
    })
}

/// The configured map as a rotation and as a conjugated rotation.
fn map_models(cfg: &ExperimentConfig) -> Result<Vec<(&'static str, CircleMap)>> {
    let conjugacy = match (&cfg.map.kind, &cfg.map.conjugacy) {
        (MapKind::ConjugatedRotation, c) => c.clone(),
        _ => ConjugacySpec::Sinusoidal {
            epsilon: cfg.curves.conjugated_epsilon,
        },
    };
    Ok(vec![
        ("rotation", CircleMap::new(&MapSpec::rotation(cfg.alpha.clone()))?),
        (
            "conjugated",
            CircleMap::new(&MapSpec {
                kind: MapKind::ConjugatedRotation,
                alpha: cfg.alpha.clone(),
                conjugacy,
            })?,
        ),
    ])
}

fn continued_fractions(cfg: &ExperimentConfig) -> Result<Vec<CheckRecord>> {
    let depth = cfg.verify.cf_depth;
    let mut specs = vec![("golden", IrrationalSpec::golden(), Some(1u64)), ("silver", IrrationalSpec::silver(), Some(2))];
    if cfg.alpha != IrrationalSpec::golden() && cfg.alpha != IrrationalSpec::silver() {
        specs.push(("configured", cfg.alpha.clone(), None));
    }
    let mut out = Vec::new();
    let (mut digit_bad, mut conv_bad, mut best_bad, mut sandwich_bad) = (0, 0, 0, 0);
    let mut best_levels = Vec::new();
    let cap = csl_core::caps::Caps::global().exhaustive;
    for (name, spec, digit) in &specs {
        let cf = cf_expand(spec, depth)?;
        if let Some(d) = digit {
            digit_bad += cf.digits().iter().filter(|a| *a != d).count();
        }
        // Products of [[a, 1], [1, 0]] carry (p_k, q_k) in their first column.
        let (mut m00, mut m01, mut m10, mut m11) = (BigUint::one(), BigUint::from(0u8), BigUint::from(0u8), BigUint::one());
        for (k, &a) in cf.digits().iter().enumerate() {
            let a = BigUint::from(a);
            let n00 = &m00 * &a + &m01;
            let n10 = &m10 * &a + &m11;
            m01 = std::mem::replace(&mut m00, n00);
            m11 = std::mem::replace(&mut m10, n10);
            // With α = [a_1, a_2, …] the product gives q_k on top and p_k below.
            if cf.q(k + 1) != &m00 || cf.p(k + 1) != &m10 {
                conv_bad += 1;
            }
        }
        let alpha = Alpha::resolve(spec)?;
        let mut k = 1;
        while k < depth && alpha.q(k + 1)? <= cap {
            if !alpha.best_approximation_holds(k)? {
                best_bad += 1;
            }
            best_levels.push(json!({ "alpha": name, "k": k, "q_next": alpha.q(k + 1)? }));
            k += 1;
        }
        for k in 1..depth {
            if !alpha.sandwich_holds(k)? {
                sandwich_bad += 1;
            }
        }
    }
    let names: Vec<&str> = specs.iter().map(|s| s.0).collect();
    out.push(CheckRecord::flag("cf-digits", json!({ "alphas": names, "depth": depth }), digit_bad));
    out.push(CheckRecord::flag("cf-convergents", json!({ "alphas": names, "depth": depth }), conv_bad));
    out.push(
        CheckRecord::flag("cf-best-approximation", json!({ "alphas": names, "q_next_max": cap }), best_bad)
            .with(json!({ "levels": best_levels.len() })),
    );
    out.push(CheckRecord::flag("cf-sandwich", json!({ "alphas": names, "depth": depth }), sandwich_bad));
    Ok(out)
}

fn gap_statistics(cfg: &ExperimentConfig) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    for (name, map) in map_models(cfg)? {
        let (mut count_bad, mut bound_bad) = (0, 0);
        let mut rows = Vec::new();
        for &k in &cfg.verify.gap_levels {
            let g = map.gap_statistics(0.0, k)?;
            count_bad += !g.counts_ok as usize;
            bound_bad += !g.bounds_ok as usize;
            rows.push(json!({ "k": k, "large": g.large_count, "small": g.small_count }));
        }
        let params = json!({ "map": name, "levels": cfg.verify.gap_levels, "slack": cfg.tolerances.gap_slack });
        out.push(CheckRecord::flag("gaps-counts", params.clone(), count_bad).with(json!(rows)));
        out.push(CheckRecord::flag("gaps-mass-bounds", params, bound_bad));
    }
    Ok(out)
}

fn dense(diag: &[f64], periodic: bool, e: f64) -> Result<DMatrix<f64>> {
    let n = diag.len();
    let b = BoxOperator::new(diag.to_vec(), if periodic { Boundary::Periodic } else { Boundary::Dirichlet })?;
    let m = b.build_matrix()?;
    Ok(DMatrix::from_row_slice(n, n, &m.data) - DMatrix::identity(n, n) * e)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn operator_oracles(cfg: &ExperimentConfig) -> Result<Vec<CheckRecord>> {
    let tol = cfg.tolerances.oracle_relative;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut det_d, mut det_p, mut tr, mut gr, mut ev) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..cfg.verify.oracle_boxes {
        let n = rng.gen_range(3..=64);
        let lambda = [0.0, 1.0, 10.0][rng.gen_range(0..3)];
        let diag: Vec<f64> = (0..n).map(|_| lambda * rng.gen::<f64>()).collect();
        let e = rng.gen_range(-2.5..2.5 + lambda);

        det_d = det_d.max(rel(sweep(&diag, e).det.to_f64(), dense(&diag, false, e)?.lu().determinant()));
        det_p = det_p.max(rel(periodic_eval(&diag, e).det.to_f64(), dense(&diag, true, e)?.lu().determinant()));

        let mut naive = Matrix2::identity();
        for &v in &diag {
            naive = Matrix2::new(e - v, -1.0, 1.0, 0.0) * naive;
        }
        let m = transfer(&diag, e);
        for i in 0..2 {
            for j in 0..2 {
                tr = tr.max((m.entry(i, j).to_f64() - naive[(i, j)]).abs() / naive.norm());
            }
        }

        let inv = dense(&diag, false, e)?
            .try_inverse()
            .ok_or_else(|| Error::Precondition("oracle box is singular".into()))?;
        let scale = inv.amax();
        let (left, right) = green_edges(&diag, e, (0, n as i64 - 1))?;
        for m in 0..n {
            let (a, b) = (inv[(0, m)], inv[(m, n - 1)]);
            gr = gr.max((left[m].to_f64() - a).abs() / scale.max(a.abs()));
            gr = gr.max((right[m].to_f64() - b).abs() / scale.max(b.abs()));
        }

        for periodic in [false, true] {
            let mut want: Vec<f64> = SymmetricEigen::new(dense(&diag, periodic, 0.0)?).eigenvalues.iter().copied().collect();
            want.sort_by(f64::total_cmp);
            let got = if periodic { periodic_eigenvalues(&diag)? } else { dirichlet_eigenvalues(&diag) };
            for (g, w) in got.iter().zip(&want) {
                ev = ev.max((g - w).abs() / w.abs().max(1.0));
            }
        }
    }
    let mut uni = 0.0f64;
    let mut sign_bad = 0;
    for n in [1usize, 10, 100, 500, cfg.verify.unimodular_max_n] {
        let diag: Vec<f64> = (0..n).map(|_| 10.0 * rng.gen::<f64>()).collect();
        for e in [-2.0, 0.3, 5.0, 12.5] {
            let (log, sign) = transfer(&diag, e).det();
            uni = uni.max(log.abs());
            sign_bad += (sign != 1) as usize;
        }
    }
    let p = json!({ "boxes": cfg.verify.oracle_boxes, "n_max": 64, "oracle": "nalgebra" });
    Ok(vec![
        CheckRecord::at_most("oracle-dirichlet-determinant", p.clone(), det_d, tol),
        CheckRecord::at_most("oracle-periodic-determinant", p.clone(), det_p, tol),
        CheckRecord::at_most("oracle-transfer", p.clone(), tr, tol),
        CheckRecord::at_most("oracle-green", p.clone(), gr, tol),
        CheckRecord::at_most("oracle-eigenvalues", p, ev, tol),
        CheckRecord::at_most(
            "transfer-unimodular",
            json!({ "n_max": cfg.verify.unimodular_max_n }),
            if sign_bad > 0 { f64::INFINITY } else { uni },
            cfg.tolerances.unimodular,
        ),
    ])
}

fn eigenvalue_curve_bounds(cfg: &ExperimentConfig) -> Result<Vec<CheckRecord>> {
    let slack = cfg.tolerances.curve_slack;
    let mut out = Vec::new();
    for (name, map) in map_models(cfg)? {
        let model = Model::new(cfg.lambda, Potential::new(cfg.potential.clone())?, map)?;
        for &k in &cfg.scales {
            let curves = eigenvalue_curves(&model, k, cfg.curves.grid)?;
            let c = curves.check(&model, cfg.curves.horizontal_bases)?;
            let params = json!({ "map": name, "k": k, "q": c.q, "lambda": cfg.lambda });
            for (id, b) in [
                ("curves-lipschitz", c.lipschitz),
                ("curves-horizontal", c.horizontal),
                ("curves-horizontal-away-from-jump", c.horizontal_no_jump),
                ("curves-global", c.global),
                ("curves-vertical", c.vertical),
                ("curves-jump", c.jump),
            ] {
                let mut r = CheckRecord::at_least(id, params.clone(), b.worst_margin, -slack)
                    .with(json!({ "pairs": b.pairs, "violations": b.violations }));
                // The away-from-jump subset is a diagnostic and may be smaller.
                let min_pairs = if id == "curves-horizontal-away-from-jump" { 1 } else { 1000 };
                r.pass = r.pass && b.violations == 0 && b.pairs >= min_pairs;
                out.push(r);
            }
        }
    }
    Ok(out)
}

fn hull_grid(model: &Model, count: usize, pad: f64) -> Vec<f64> {
    let (lo, hi) = model.spectrum_hull();
    let (lo, hi) = (lo - pad, hi + pad);
    (0..count).map(|j| lo + (hi - lo) * (j as f64 + 0.5) / count as f64).collect()
}

fn lyapunov_checks(cfg: &ExperimentConfig) -> Result<Vec<CheckRecord>> {
    let v = &cfg.verify;
    let free = cfg.model_with(0.0)?;
    let l = lyapunov(&free, 3.0, v.lyapunov_n, 1)?;
    let exact = ((3.0 + 5f64.sqrt()) / 2.0).ln();
    let mut out = vec![CheckRecord::at_most(
        "lyapunov-free",
        json!({ "lambda": 0.0, "E": 3.0, "n": v.lyapunov_n }),
        (l.value - exact).abs(),
        cfg.tolerances.free_lyapunov,
    )
    .with(json!({ "value": l.value, "reference": exact }))];

    let model = cfg.model()?;
    let bound = lyapunov_lower_bound(&model);
    let mut worst = f64::INFINITY;
    let mut rows = Vec::new();
    for e in hull_grid(&model, v.lyapunov_energies, 0.0) {
        let l = lyapunov(&model, e, v.lyapunov_n, cfg.samples)?;
        worst = worst.min(l.value + cfg.tolerances.lyapunov_sigmas * l.stderr);
        rows.push(json!({ "E": e, "value": l.value, "stderr": l.stderr }));
    }
    out.push(
        CheckRecord::at_least(
            "lyapunov-lower-bound",
            json!({ "lambda": cfg.lambda, "n": v.lyapunov_n, "samples": cfg.samples, "energies": v.lyapunov_energies }),
            worst,
            bound,
        )
        .with(json!(rows)),
    );

    let e = mid_energy(&model);
    let lhat = lyapunov(&model, e, v.lyapunov_n, cfg.samples)?.value;
    let nb = numerator_bound_check(&model, e, 0.1, lhat, 50..=500, 256)?;
    out.push(
        CheckRecord::at_most("numerator-bound", json!({ "E": e, "kappa": 0.1, "n": [50, 500], "phases": 256 }), nb.worst, 0.0)
            .with(json!({ "worst_n": nb.worst_n, "lyapunov": lhat })),
    );
    Ok(out)
}

fn mid_energy(model: &Model) -> f64 {
    let (lo, hi) = model.spectrum_hull();
    0.5 * (lo + hi)
}

fn ids_checks(cfg: &ExperimentConfig) -> Result<Vec<CheckRecord>> {
    let v = &cfg.verify;
    let free = cfg.model_with(0.0)?;
    let n = v.ids_n;
    let mut worst = 0.0f64;
    for j in 0..v.ids_free_energies {
        let e = -2.0 + 4.0 * (j as f64 + 0.5) / v.ids_free_energies as f64;
        let got = ids(&free, e, n, 1)?.value;
        let want = 1.0 - (e / 2.0).acos() / std::f64::consts::PI;
        worst = worst.max((got - want).abs());
    }
    let mut out = vec![CheckRecord::at_most(
        "ids-free-staircase",
        json!({ "n": n, "energies": v.ids_free_energies }),
        worst,
        2.0 / n as f64 + cfg.tolerances.ids_extra,
    )];

    let model = cfg.model()?;
    let (lo, hi) = model.spectrum_hull();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x1D5);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..v.ids_pairs {
        let e1 = rng.gen_range(lo..hi);
        let e2 = rng.gen_range(lo..hi);
        let a = ids(&model, e1, v.ids_lipschitz_n, cfg.samples)?;
        let b = ids(&model, e2, v.ids_lipschitz_n, cfg.samples)?;
        let c = ids_lipschitz_from(&model, &a, &b);
        worst = worst.max(c.lhs - c.bound);
    }
    out.push(CheckRecord::at_most(
        "ids-lipschitz",
        json!({ "pairs": v.ids_pairs, "n": v.ids_lipschitz_n, "samples": cfg.samples }),
        worst,
        0.0,
    ));
    Ok(out)
}

fn thouless_checks(cfg: &ExperimentConfig) -> Result<Vec<CheckRecord>> {
    let v = &cfg.verify;
    let mut out = Vec::new();
    for lambda in [0.0, cfg.lambda] {
        let model = cfg.model_with(lambda)?;
        let hist = DensityHistogram::pooled(&model, v.thouless_n, cfg.samples, v.thouless_bins)?;
        let mut worst = 0.0f64;
        let mut rows = Vec::new();
        for e in hull_grid(&model, v.thouless_energies, 0.5) {
            let l = lyapunov(&model, e, v.thouless_n, cfg.samples)?;
            let t = thouless_from(&hist, &l)?;
            worst = worst.max(t.gap);
            rows.push(json!({ "E": e, "lhs": t.lhs, "rhs": t.rhs }));
        }
        out.push(
            CheckRecord::at_most(
                "thouless-gap",
                json!({ "lambda": lambda, "n": v.thouless_n, "samples": cfg.samples, "bins": v.thouless_bins }),
                worst,
                cfg.tolerances.thouless_gap,
            )
            .with(json!(rows)),
        );
    }
    Ok(out)
}

fn ldt_checks(cfg: &ExperimentConfig) -> Result<Vec<CheckRecord>> {
    let model = cfg.model()?;
    let e = cfg.ldt.energy.unwrap_or_else(|| mid_energy(&model));
    let lhat = lyapunov(&model, e, cfg.verify.lyapunov_n, cfg.samples)?.value;
    let delta = cfg.ldt.delta.unwrap_or(lhat / 2.0);
    let sweep = ldt_sweep(&model, e, &cfg.ldt.levels, delta, lhat, cfg.ldt.cells_per_q, cfg.ldt.c0)?;
    let params = json!({ "E": e, "delta": delta, "lyapunov": lhat, "levels": cfg.ldt.levels });
    let excess = sweep
        .reports
        .iter()
        .map(|r| r.component_count as f64 - r.q as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    let rows: Vec<Value> = sweep
        .reports
        .iter()
        .map(|r| json!({ "q": r.q, "mass": r.deviation_mass, "components": r.component_count }))
        .collect();
    let rate = sweep.decay_rate.unwrap_or(f64::NAN);
    let all_negative = sweep.log_mass_per_q.iter().all(|v| *v < 0.0);
    let per_q_monotone = sweep.log_mass_per_q.windows(2).all(|w| w[1] < w[0]);
    let mut decay = CheckRecord::at_least("ldt-decay", params.clone(), rate, 0.0).with(json!({
        "masses_decreasing": sweep.decreasing,
        "log_mass_per_q": sweep.log_mass_per_q,
        "log_mass_per_q_decreasing": per_q_monotone,
        "c0": sweep.c0,
    }));
    decay.pass = rate > 0.0 && sweep.decreasing && all_negative;
    Ok(vec![
        CheckRecord::at_most("ldt-components", params, excess, 0.0).with(json!(rows)),
        decay,
    ])
}

fn localization_checks(cfg: &ExperimentConfig) -> Result<Vec<CheckRecord>> {
    let model = cfg.model()?;
    let p = &cfg.localization;
    let s = localization_study(&model, p, cfg.seed)?;
    let t = &cfg.tolerances;
    let params = json!({ "n": p.n, "pairs": p.pairs, "q": s.q, "phase": p.phase, "lambda": cfg.lambda });
    let r = &s.reports;
    let max = |f: &dyn Fn(&csl_core::localization::PairReport) -> f64| r.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let min = |f: &dyn Fn(&csl_core::localization::PairReport) -> f64| r.iter().map(f).fold(f64::INFINITY, f64::min);

    let mut fit = CheckRecord::at_least("loc-decay-fit", params.clone(), min(&|x| x.rate), 0.0)
        .with(json!({ "min_fit_quality": min(&|x| x.fit_quality) }));
    fit.pass = fit.measured > 0.0 && min(&|x| x.fit_quality) >= t.min_fit_quality;
    let env = &s.envelope;
    let mut envelope = CheckRecord::at_least("loc-envelope", params.clone(), env.c, 0.0).with(json!({
        "C": env.big_c,
        "regression_C": env.regression_c,
        "violations": env.violations.len(),
    }));
    envelope.pass = env.c > 0.0 && env.violations.is_empty() && env.localized;
    Ok(vec![
        CheckRecord::at_most("loc-poisson", params.clone(), max(&|x| x.poisson), t.poisson),
        fit,
        CheckRecord::flag(
            "loc-peak-singular",
            params.clone(),
            r.iter().filter(|x| x.peak != Verdict::Singular).count(),
        ),
        CheckRecord::at_most(
            "loc-deviation",
            params.clone(),
            max(&|x| x.deviation.worst - x.deviation.limit),
            t.deviation_slack,
        ),
        CheckRecord::flag("loc-separation", params.clone(), r.iter().filter(|x| !x.separation_ok).count())
            .with(json!({ "max_cluster_diameter": r.iter().map(|x| x.cluster_diameter).max() })),
        envelope,
        CheckRecord::at_least("loc-decay-floor", params, min(&|x| x.rate - x.decay_floor), 0.0),
        CheckRecord::flag(
            "loc-window-count",
            json!({ "q_max": cfg.verify.window_count_limit }),
            !window_count_bounds_hold(cfg.verify.window_count_limit) as usize,
        ),
    ])
}
