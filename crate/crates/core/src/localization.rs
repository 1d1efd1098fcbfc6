//! Eigenvectors of large Dirichlet boxes, their exponential decay, and the
//! regular/singular classification of lattice sites through Green entries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::caps::{check_cap, Caps};
use crate::circle_maps::Phase;
use crate::error::{Error, Result};
use crate::operators::eigen::{dirichlet_eigenvalues_in, dirichlet_index_range};
use crate::operators::{green_edges, green_entry, sweep, Model, Side, WindowEdge};
use crate::stats::fit_line;

pub const DEFAULT_FLOOR: f64 = 1e-12;
pub const MIN_FIT_POINTS: usize = 20;
/// Eigenvalues closer than this are treated as one cluster.
pub const CLUSTER_GAP: f64 = 1e-10;
pub const RESIDUAL_LIMIT: f64 = 1e-8;
const MIN_ITERATIONS: usize = 2;
const MAX_ITERATIONS: usize = 6;

/// Site values `λf(T^m x)` for labels `m ∈ [first, first + len)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub origin: Phase,
    pub first: i64,
    pub diag: Vec<f64>,
}

impl Lattice {
    pub fn new(model: &Model, origin: Phase, first: i64, len: usize) -> Self {
        let start = origin.rotate(first as i128, model.map.alpha());
        Lattice {
            origin,
            first,
            diag: model.site_values(start, len, Side::Right),
        }
    }

    /// Box of `n` sites labelled `−n/2 … n/2 − 1` around `x`.
    pub fn centered(model: &Model, origin: Phase, n: usize) -> Self {
        Self::new(model, origin, -(n as i64 / 2), n)
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn end(&self) -> i64 {
        self.first + self.len() as i64
    }

    pub fn index(&self, label: i64) -> usize {
        (label - self.first) as usize
    }

    /// Diagonal of the window `[a, a + len)`, if it lies inside.
    pub fn window(&self, a: i64, len: usize) -> Option<&[f64]> {
        if a < self.first || a + len as i64 > self.end() {
            return None;
        }
        let i = self.index(a);
        Some(&self.diag[i..i + len])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenpairDecay {
    /// Rayleigh quotient of the final vector.
    pub energy: f64,
    /// Normalized to `ψ(n0) = 1 = ‖ψ‖_∞`.
    #[serde(skip)]
    pub psi: Vec<f64>,
    /// Leftmost index of the maximum of `|ψ|`.
    pub n0: usize,
    pub residual: f64,
    pub rate: f64,
    pub rate_stderr: f64,
    pub intercept: f64,
    pub fit_quality: f64,
    /// Index range `[start, end)` the fit drew from.
    pub window: (usize, usize),
    pub fit_points: usize,
    /// Sites at or below this magnitude were left out of the fit.
    pub floor: f64,
}

impl EigenpairDecay {
    fn from_vector(energy: f64, psi: Vec<f64>, residual: f64) -> Self {
        let (n0, _) = psi
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
        let scale = psi[n0];
        let psi: Vec<f64> = psi.iter().map(|v| v / scale).collect();
        EigenpairDecay {
            energy,
            psi,
            n0,
            residual: residual / scale.abs(),
            rate: f64::NAN,
            rate_stderr: f64::NAN,
            intercept: f64::NAN,
            fit_quality: f64::NAN,
            window: (0, 0),
            fit_points: 0,
            floor: 0.0,
        }
    }

    /// A synthetic pair for a given profile; `energy` is only carried along.
    pub fn from_profile(energy: f64, psi: Vec<f64>) -> Self {
        Self::from_vector(energy, psi, 0.0)
    }

    /// Rows `site,offset,log_abs_psi`.
    pub fn decay_csv(&self) -> String {
        let mut out = String::from("site,offset,log_abs_psi\n");
        for (i, v) in self.psi.iter().enumerate() {
            let offset = i as i64 - self.n0 as i64;
            out.push_str(&format!("{i},{offset},{:.17e}\n", v.abs().ln()));
        }
        out
    }
}

/// `‖(H − E)ψ‖_∞` for the Dirichlet box.
pub fn residual(diag: &[f64], e: f64, psi: &[f64]) -> f64 {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let mut r = (diag[i] - e) * psi[i];
            if i > 0 {
                r += psi[i - 1];
            }
            if i + 1 < n {
                r += psi[i + 1];
            }
            r.abs()
        })
        .fold(0.0, f64::max)
}

/// `H − σ` for unit off-diagonals, factored with partial pivoting.
struct ShiftedFactor {
    /// Rows of `U`: entries at columns `k`, `k + 1`, `k + 2`.
    u: Vec<[f64; 3]>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedFactor {
    fn new(diag: &[f64], sigma: f64) -> Self {
        let n = diag.len();
        let tiny = f64::EPSILON * diag.iter().fold(2.0f64, |m, v| m.max((v - sigma).abs() + 2.0));
        let mut u = vec![[0.0; 3]; n];
        let mut mult = vec![0.0; n];
        let mut swapped = vec![false; n];
        let mut row = [diag[0] - sigma, if n > 1 { 1.0 } else { 0.0 }, 0.0];
        for k in 0..n {
            if k + 1 == n {
                if row[0].abs() < tiny {
                    row[0] = tiny;
                }
                u[k] = row;
                break;
            }
            let next = [1.0, diag[k + 1] - sigma, if k + 2 < n { 1.0 } else { 0.0 }];
            if row[0].abs() >= 1.0 {
                let m = 1.0 / row[0];
                u[k] = row;
                mult[k] = m;
                row = [next[1] - m * row[1], next[2] - m * row[2], 0.0];
            } else {
                let m = row[0];
                u[k] = next;
                mult[k] = m;
                swapped[k] = true;
                row = [row[1] - m * next[1], row[2] - m * next[2], 0.0];
            }
        }
        ShiftedFactor { u, mult, swapped }
    }

    fn solve(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        for k in 0..n.saturating_sub(1) {
            if self.swapped[k] {
                rhs.swap(k, k + 1);
            }
            rhs[k + 1] -= self.mult[k] * rhs[k];
        }
        for k in (0..n).rev() {
            let mut v = rhs[k];
            if k + 1 < n {
                v -= self.u[k][1] * rhs[k + 1];
            }
            if k + 2 < n {
                v -= self.u[k][2] * rhs[k + 2];
            }
            rhs[k] = v / self.u[k][0];
        }
    }
}

fn normalize_sup(v: &mut [f64]) {
    let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if m > 0.0 {
        v.iter_mut().for_each(|x| *x /= m);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rayleigh(diag: &[f64], v: &[f64]) -> f64 {
    let n = v.len();
    let mut num = 0.0;
    for i in 0..n {
        num += diag[i] * v[i] * v[i];
        if i + 1 < n {
            num += 2.0 * v[i] * v[i + 1];
        }
    }
    num / dot(v, v)
}

/// Eigenpairs with eigenvalues in `[e1, e2]`: bisection for the values,
/// inverse iteration from seeded random vectors for the vectors.
pub fn eigenpairs(diag: &[f64], e1: f64, e2: f64, seed: u64) -> Result<Vec<EigenpairDecay>> {
    check_cap("dirichlet eigen n", diag.len() as u128, Caps::global().eigen_dirichlet as u128)?;
    let range = dirichlet_index_range(diag, e1, e2);
    eigenpairs_by_index(diag, range, seed)
}

/// Eigenpairs for the index range (ascending eigenvalues).
pub fn eigenpairs_by_index(diag: &[f64], range: std::ops::Range<usize>, seed: u64) -> Result<Vec<EigenpairDecay>> {
    check_cap("dirichlet eigen n", diag.len() as u128, Caps::global().eigen_dirichlet as u128)?;
    let first = range.start;
    let values = dirichlet_eigenvalues_in(diag, range);
    let mut clusters: Vec<Vec<(usize, f64)>> = Vec::new();
    for (j, &e) in values.iter().enumerate() {
        match clusters.last_mut() {
            Some(c) if e - c.last().unwrap().1 < CLUSTER_GAP => c.push((first + j, e)),
            _ => clusters.push(vec![(first + j, e)]),
        }
    }
    let done = clusters
        .par_iter()
        .map(|c| cluster_vectors(diag, c, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(done.into_iter().flatten().collect())
}

fn cluster_vectors(diag: &[f64], cluster: &[(usize, f64)], seed: u64) -> Result<Vec<EigenpairDecay>> {
    let n = diag.len();
    let sigma = cluster.iter().map(|c| c.1).sum::<f64>() / cluster.len() as f64;
    let factor = ShiftedFactor::new(diag, sigma);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cluster.len());
    for &(index, e) in cluster {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut it = 0;
        loop {
            factor.solve(&mut v);
            for b in &basis {
                let c = dot(&v, b) / dot(b, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
            normalize_sup(&mut v);
            it += 1;
            if it >= MIN_ITERATIONS && residual(diag, rayleigh(diag, &v), &v) <= RESIDUAL_LIMIT {
                break;
            }
            if it >= MAX_ITERATIONS {
                return Err(Error::IterationStall {
                    energy: e,
                    residual: residual(diag, rayleigh(diag, &v), &v),
                });
            }
        }
        basis.push(v);
    }
    if basis.len() == 2 {
        localize_pair(&mut basis);
    }
    Ok(basis
        .into_iter()
        .map(|v| {
            let e = rayleigh(diag, &v);
            let r = residual(diag, e, &v);
            EigenpairDecay::from_vector(e, v, r)
        })
        .collect())
}

/// Rotates an orthogonal pair so the first vector carries the joint peak and
/// the second vanishes there.
fn localize_pair(basis: &mut [Vec<f64>]) {
    let (u, v) = (&basis[0], &basis[1]);
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    let u: Vec<f64> = u.iter().map(|x| x / nu).collect();
    let v: Vec<f64> = v.iter().map(|x| x / nv).collect();
    let peak = (0..u.len())
        .max_by(|&i, &j| (u[i] * u[i] + v[i] * v[i]).total_cmp(&(u[j] * u[j] + v[j] * v[j])))
        .unwrap();
    let (a, b) = (u[peak], v[peak]);
    basis[0] = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
    basis[1] = u.iter().zip(&v).map(|(x, y)| -b * x + a * y).collect();
    normalize_sup(&mut basis[0]);
    normalize_sup(&mut basis[1]);
}

/// Least squares of `ln|ψ(n)|` against `|n − n0|` over sites above `floor`,
/// leaving out `margin` sites at each end of the box.
pub fn decay_fit(pair: &mut EigenpairDecay, floor: f64, margin: usize) -> Result<()> {
    if !(floor > f64::MIN_POSITIVE) {
        return Err(Error::Precondition("the fit floor must exceed underflow".into()));
    }
    let n = pair.psi.len();
    let window = (margin.min(n), n.saturating_sub(margin));
    let (xs, ys): (Vec<f64>, Vec<f64>) = (window.0..window.1)
        .filter(|&i| pair.psi[i].abs() > floor)
        .map(|i| ((i as f64 - pair.n0 as f64).abs(), pair.psi[i].abs().ln()))
        .unzip();
    if xs.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            usable: xs.len(),
            needed: MIN_FIT_POINTS,
        });
    }
    let fit = fit_line(&xs, &ys).ok_or(Error::TooFewPoints {
        usable: xs.len(),
        needed: MIN_FIT_POINTS,
    })?;
    pair.rate = -fit.slope;
    pair.rate_stderr = fit.slope_stderr;
    pair.intercept = fit.intercept;
    pair.fit_quality = fit.r_squared;
    pair.window = window;
    pair.fit_points = xs.len();
    pair.floor = floor;
    Ok(())
}

/// Rows `index,E,n0,rate,fit_quality`.
pub fn eigenpairs_csv(pairs: &[EigenpairDecay]) -> String {
    let mut out = String::from("index,E,n0,rate,fit_quality\n");
    for (i, p) in pairs.iter().enumerate() {
        out.push_str(&format!(
            "{i},{:.17e},{},{:.17e},{:.17e}\n",
            p.energy, p.n0, p.rate, p.fit_quality
        ));
    }
    out
}

/// JSON header line followed by the vectors as little-endian `f64`.
pub fn eigenvectors_binary(pairs: &[EigenpairDecay]) -> Vec<u8> {
    let header = serde_json::json!({
        "format": "f64-le",
        "count": pairs.len(),
        "length": pairs.first().map_or(0, |p| p.psi.len()),
        "energies": pairs.iter().map(|p| p.energy).collect::<Vec<_>>(),
    });
    let mut out = header.to_string().into_bytes();
    out.push(b'\n');
    for p in pairs {
        for v in &p.psi {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Regular,
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularityReport {
    pub site: i64,
    pub q: u64,
    pub rate: f64,
    pub verdict: Verdict,
    /// `[a, b]` meeting both Green bounds.
    pub window: Option<(i64, i64)>,
    pub windows_tried: usize,
    /// Windows skipped because their restriction was numerically singular.
    pub singular_windows: usize,
}

/// Left ends `a` of windows `[a, a + q − 1]` with `|a − n| ≥ q/5` and
/// `|n − b| ≥ q/5`.
pub fn admissible_windows(site: i64, q: u64) -> std::ops::RangeInclusive<i64> {
    let q = q as i64;
    let m = (q + 4) / 5;
    (site - q + 1 + m)..=(site - m)
}

/// `(x, c, q)`-regularity of `site` at energy `E`.
pub fn classify(lattice: &Lattice, e: f64, site: i64, rate: f64, q: u64) -> Result<RegularityReport> {
    let windows = admissible_windows(site, q);
    if lattice.window(*windows.start(), q as usize).is_none() || lattice.window(*windows.end(), q as usize).is_none() {
        return Err(Error::Precondition(format!(
            "windows around site {site} leave the computed lattice [{}, {})",
            lattice.first,
            lattice.end()
        )));
    }
    let mut singular_windows = 0;
    let mut tried = 0;
    for a in windows {
        tried += 1;
        let b = a + q as i64 - 1;
        let w = lattice.window(a, q as usize).unwrap();
        let row = (site - a) as usize;
        let left = green_entry(w, e, row, WindowEdge::Left, (a, b));
        let right = green_entry(w, e, row, WindowEdge::Right, (a, b));
        match (left, right) {
            (Ok(l), Ok(r)) => {
                let ok_l = l.is_zero() || l.log_mag <= -rate * (site - a) as f64;
                let ok_r = r.is_zero() || r.log_mag <= -rate * (b - site) as f64;
                if ok_l && ok_r {
                    return Ok(RegularityReport {
                        site,
                        q,
                        rate,
                        verdict: Verdict::Regular,
                        window: Some((a, b)),
                        windows_tried: tried,
                        singular_windows,
                    });
                }
            }
            (Err(Error::NearSingularWindow { .. }), _) | (_, Err(Error::NearSingularWindow { .. })) => {
                singular_windows += 1;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    Ok(RegularityReport {
        site,
        q,
        rate,
        verdict: Verdict::Singular,
        window: None,
        windows_tried: tried,
        singular_windows,
    })
}

/// `N_k = ⌊3q/4⌋ − ⌊q/4⌋ + 1`
pub fn window_count(q: u64) -> u64 {
    3 * q / 4 - q / 4 + 1
}

/// `(q + 1)/2 ≤ N_k ≤ (q + 3)/2` for every `q ≤ limit`, in integers.
pub fn window_count_bounds_hold(limit: u64) -> bool {
    (1..=limit).all(|q| {
        let twice = 2 * window_count(q);
        q + 1 <= twice && twice <= q + 3
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationNearSite {
    pub site: i64,
    pub q: u64,
    /// `L̂ − δ/10`
    pub limit: f64,
    /// Largest `(1/q) ln|P_q(T^a x, E)|` over `a ∈ [n − ⌊3q/4⌋, n − ⌊q/4⌋]`.
    pub worst: f64,
    pub windows: u64,
}

impl DeviationNearSite {
    pub fn holds(&self, slack: f64) -> bool {
        self.worst <= self.limit + slack
    }
}

/// Upper deviation of `|P_q|` on the windows that a singular site forces.
pub fn deviation_near_site(
    lattice: &Lattice,
    e: f64,
    site: i64,
    q: u64,
    lyapunov: f64,
    delta: f64,
) -> Result<DeviationNearSite> {
    let lo = site - (3 * q / 4) as i64;
    let hi = site - (q / 4) as i64;
    let mut worst = f64::NEG_INFINITY;
    for a in lo..=hi {
        let w = lattice.window(a, q as usize).ok_or_else(|| {
            Error::Precondition(format!("window at {a} leaves the computed lattice"))
        })?;
        let det = sweep(w, e).det;
        let v = if det.is_zero() { f64::NEG_INFINITY } else { det.log_mag / q as f64 };
        worst = worst.max(v);
    }
    Ok(DeviationNearSite {
        site,
        q,
        limit: lyapunov - delta / 10.0,
        worst,
        windows: (hi - lo + 1) as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    pub energy: f64,
    pub q: u64,
    pub q_next: u64,
    pub rate: f64,
    pub scanned: (i64, i64),
    pub singular: Vec<i64>,
    /// Exclusion zone `((q+1)/2, q_{k+1} − 1 − (q+1)/2]` for `n − m`.
    pub zone: (f64, f64),
    pub violations: Vec<(i64, i64)>,
    /// Smallest distance between singular sites beyond `(q+1)/2`.
    pub min_gap: Option<i64>,
    /// Largest distance inside a run of singular sites no more than
    /// `(q+1)/2` apart.
    pub cluster_diameter: i64,
    pub ok: bool,
}

/// Classifies every site in `sites` at rate `L̂ − δ` and looks for two
/// singular sites inside the exclusion zone. `delta_floor` is `β̂/Ĉ_0`.
pub fn separation_scan(
    model: &Model,
    lattice: &Lattice,
    e: f64,
    level: usize,
    delta: f64,
    lyapunov: f64,
    delta_floor: f64,
    sites: std::ops::Range<i64>,
) -> Result<SeparationReport> {
    if !(delta > delta_floor && delta < lyapunov) {
        return Err(Error::Precondition(format!(
            "δ = {delta} must lie in (β̂/Ĉ0, L̂) = ({delta_floor}, {lyapunov})"
        )));
    }
    let alpha = model.map.alpha();
    let q = alpha.q(level)?;
    let q_next = alpha.q(level + 1)?;
    if ((sites.end - sites.start) as u64) < q_next {
        return Err(Error::Precondition(format!(
            "the scanned range must be at least q_(k+1) = {q_next}"
        )));
    }
    let rate = lyapunov - delta;
    let verdicts = sites
        .clone()
        .into_par_iter()
        .map(|n| classify(lattice, e, n, rate, q).map(|r| (n, r.verdict)))
        .collect::<Result<Vec<_>>>()?;
    let singular: Vec<i64> = verdicts
        .into_iter()
        .filter(|v| v.1 == Verdict::Singular)
        .map(|v| v.0)
        .collect();
    let lo2 = q as i64 + 1;
    let hi2 = 2 * q_next as i64 - 2 - (q as i64 + 1);
    let mut violations = Vec::new();
    let mut min_gap: Option<i64> = None;
    for (i, &m) in singular.iter().enumerate() {
        for &n in &singular[i + 1..] {
            let d = n - m;
            if 2 * d > lo2 {
                min_gap = Some(min_gap.map_or(d, |g| g.min(d)));
                if 2 * d <= hi2 {
                    violations.push((m, n));
                }
            }
        }
    }
    let mut cluster_diameter = 0;
    let mut start = None;
    for w in singular.windows(2) {
        let s = *start.get_or_insert(w[0]);
        if 2 * (w[1] - w[0]) <= lo2 {
            cluster_diameter = cluster_diameter.max(w[1] - s);
        } else {
            start = None;
        }
    }
    Ok(SeparationReport {
        energy: e,
        q,
        q_next,
        rate,
        scanned: (sites.start, sites.end),
        singular,
        zone: (lo2 as f64 / 2.0, hi2 as f64 / 2.0),
        ok: violations.is_empty(),
        violations,
        min_gap,
        cluster_diameter,
    })
}

/// `max_{n∈[a,b]} |ψ(n) + G(a,n)ψ(a−1) + G(n,b)ψ(b+1)|` with box indices.
pub fn poisson_residual(diag: &[f64], e: f64, psi: &[f64], a: usize, b: usize) -> Result<f64> {
    if a == 0 || b + 1 >= psi.len() || a > b {
        return Err(Error::Precondition("the window must be interior to the box".into()));
    }
    let (left, right) = green_edges(&diag[a..=b], e, (a as i64, b as i64))?;
    let (pa, pb) = (psi[a - 1], psi[b + 1]);
    Ok((a..=b)
        .map(|n| {
            let k = n - a;
            (psi[n] + left[k].to_f64() * pa + right[k].to_f64() * pb).abs()
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Envelope {
    pub c: f64,
    /// Smallest `C ≥ 1` with `|ψ(n)| ≤ C e^{−c|n−n0|}` on every fitted site.
    #[serde(rename = "C")]
    pub big_c: f64,
    /// `max(1, e^b)` over the regression intercepts `b`.
    pub regression_c: f64,
    /// `(pair, site)` above the floor, anywhere in the box, that the envelope
    /// does not cover. Fitted sites are covered by construction, so these come
    /// from the excluded boundary strips.
    pub violations: Vec<(usize, usize)>,
    pub localized: bool,
}

/// A common envelope `C e^{−c|n − n0|}`: `c` is the smallest fitted rate
/// less one standard error and `C` the largest intercept of the lines of
/// slope `−c` lying above the fitted sites.
pub fn uniform_envelope(pairs: &[EigenpairDecay]) -> Result<Envelope> {
    if pairs.len() < 2 {
        return Err(Error::Precondition("the envelope needs at least two pairs".into()));
    }
    if pairs.iter().any(|p| !p.rate.is_finite()) {
        return Err(Error::Precondition("every pair needs a decay fit first".into()));
    }
    let c = pairs
        .iter()
        .map(|p| p.rate - p.rate_stderr)
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    let dist = |p: &EigenpairDecay, i: usize| (i as f64 - p.n0 as f64).abs();
    let mut log_c = 0.0f64;
    for p in pairs {
        for i in p.window.0..p.window.1 {
            if p.psi[i].abs() > p.floor {
                log_c = log_c.max(p.psi[i].abs().ln() + c * dist(p, i));
            }
        }
    }
    let regression_c = pairs.iter().map(|p| p.intercept.exp()).fold(1.0, f64::max);
    let mut violations = Vec::new();
    for (j, p) in pairs.iter().enumerate() {
        for (i, v) in p.psi.iter().enumerate() {
            if v.abs() > p.floor && v.abs().ln() > log_c - c * dist(p, i) + 1e-12 {
                violations.push((j, i));
            }
        }
    }
    Ok(Envelope {
        c,
        big_c: log_c.exp(),
        regression_c,
        localized: c > 1e-3,
        violations,
    })
}

/// Settings for a full localization study on one box.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyParams {
    pub n: usize,
    /// Unit-interval phase of the box centre.
    pub phase: f64,
    /// Continued-fraction level `k` for the checks.
    pub level: usize,
    pub pairs: usize,
    pub floor: f64,
    /// Fixed `δ`; `None` takes `L̂/2` clamped into `(β̂/C_0 + 0.01, L̂ − 0.01)`.
    pub delta: Option<f64>,
    pub c0: f64,
    pub epsilon: f64,
    pub lyapunov_n: usize,
    pub lyapunov_samples: usize,
    /// Offset of `n0` from the left end of the Poisson window.
    pub poisson_offset: usize,
}

impl Default for StudyParams {
    fn default() -> Self {
        StudyParams {
            n: 2048,
            phase: 0.1,
            level: 8,
            pairs: 50,
            floor: DEFAULT_FLOOR,
            delta: None,
            c0: 1.0,
            epsilon: 0.1,
            lyapunov_n: 100_000,
            lyapunov_samples: 16,
            poisson_offset: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReport {
    pub energy: f64,
    /// Lattice label of the peak.
    pub site: i64,
    pub rate: f64,
    pub rate_stderr: f64,
    pub fit_quality: f64,
    pub residual: f64,
    pub poisson: f64,
    pub lyapunov: f64,
    pub lyapunov_stderr: f64,
    pub delta: f64,
    pub peak: Verdict,
    pub deviation: DeviationNearSite,
    pub separation_ok: bool,
    pub singular_sites: usize,
    pub cluster_diameter: i64,
    /// `(L̂ − β̂/C_0 − ε)/10`
    pub decay_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizationStudy {
    pub q: u64,
    pub q_next: u64,
    pub beta_proxy: f64,
    pub reports: Vec<PairReport>,
    pub envelope: Envelope,
    #[serde(skip)]
    pub pairs: Vec<EigenpairDecay>,
}

/// Computes eigenpairs in the middle of the spectrum of a centred box, keeps
/// the `pairs` whose peak leaves room for every window at levels `k` and
/// `k + 1`, and runs the decay fit, the Poisson identity, the peak
/// classification, the deviation and separation scans and the envelope.
pub fn localization_study(model: &Model, params: &StudyParams, seed: u64) -> Result<LocalizationStudy> {
    let alpha = model.map.alpha();
    let q = alpha.q(params.level)?;
    let q_next = alpha.q(params.level + 1)?;
    let beta_proxy = crate::arithmetic::beta_estimate(alpha.cf(), params.level)?.proxy;
    let n = params.n;
    let room = (q + q_next) as usize;
    if n < 2 * room + params.pairs {
        return Err(Error::Precondition(format!("a box of {n} sites is too small for level {}", params.level)));
    }
    let lattice = Lattice::centered(model, Phase::from_unit(params.phase), n);
    let mut found = Vec::new();
    let mut spread = params.pairs;
    while found.len() < params.pairs {
        let lo = (n / 2).saturating_sub(spread);
        let hi = (n / 2 + spread).min(n);
        found = eigenpairs_by_index(&lattice.diag, lo..hi, seed)?;
        found.retain(|p| p.n0 >= room && p.n0 + room <= n);
        if lo == 0 && hi == n {
            break;
        }
        spread *= 2;
    }
    if found.len() < params.pairs {
        return Err(Error::Precondition(format!(
            "only {} eigenpairs peak far enough from the box ends",
            found.len()
        )));
    }
    let mid = found.len() / 2;
    let start = (mid + 1).saturating_sub(params.pairs.div_ceil(2)).min(found.len() - params.pairs);
    let mut pairs: Vec<EigenpairDecay> = found.drain(start..start + params.pairs).collect();
    let margin = (q as usize).div_ceil(5);
    for p in pairs.iter_mut() {
        decay_fit(p, params.floor, margin)?;
    }
    let envelope = uniform_envelope(&pairs)?;
    let reports = pairs
        .iter()
        .map(|p| {
            let lyap = crate::spectral::lyapunov(model, p.energy, params.lyapunov_n, params.lyapunov_samples)?;
            let l = lyap.value;
            let floor = beta_proxy / params.c0;
            let delta = params.delta.unwrap_or_else(|| (l / 2.0).clamp(floor + 0.01, (l - 0.01).max(floor + 0.01)));
            let a = p.n0 - params.poisson_offset;
            let poisson = poisson_residual(&lattice.diag, p.energy, &p.psi, a, a + q as usize - 1)?;
            let site = lattice.first + p.n0 as i64;
            let peak = classify(&lattice, p.energy, site, l - delta, q)?.verdict;
            let deviation = deviation_near_site(&lattice, p.energy, site, q, l, delta)?;
            let sep = separation_scan(
                model,
                &lattice,
                p.energy,
                params.level,
                delta,
                l,
                floor,
                site - q_next as i64..site + q_next as i64 + 1,
            )?;
            Ok(PairReport {
                energy: p.energy,
                site,
                rate: p.rate,
                rate_stderr: p.rate_stderr,
                fit_quality: p.fit_quality,
                residual: p.residual,
                poisson,
                lyapunov: l,
                lyapunov_stderr: lyap.stderr,
                delta,
                peak,
                deviation,
                separation_ok: sep.ok,
                singular_sites: sep.singular.len(),
                cluster_diameter: sep.cluster_diameter,
                decay_floor: (l - floor - params.epsilon) / 10.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LocalizationStudy {
        q,
        q_next,
        beta_proxy,
        reports,
        envelope,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::arithmetic::IrrationalSpec;
    use crate::circle_maps::{CircleMap, MapSpec};
    use crate::potentials::Potential;
    use proptest::prelude::*;

    fn golden(lambda: f64) -> Model {
        let map = CircleMap::new(&MapSpec::rotation(IrrationalSpec::golden())).unwrap();
        Model::new(lambda, Potential::sawtooth(), map).unwrap()
    }

    #[test]
    fn exact_exponential_profile() {
        let psi: Vec<f64> = (0..400).map(|n| (-0.5 * (n as f64 - 100.0).abs()).exp()).collect();
        let mut p = EigenpairDecay::from_profile(0.0, psi);
        decay_fit(&mut p, DEFAULT_FLOOR, 0).unwrap();
        assert_eq!(p.n0, 100);
        assert!((p.rate - 0.5).abs() < 1e-6);
        assert!(p.fit_quality >= 0.999);
    }

    #[test]
    fn flat_profile_has_no_decay() {
        let mut p = EigenpairDecay::from_profile(0.0, vec![1.0; 64]);
        decay_fit(&mut p, DEFAULT_FLOOR, 0).unwrap();
        assert_eq!(p.rate, 0.0);
    }

    #[test]
    fn fit_needs_twenty_sites() {
        let psi: Vec<f64> = (0..30).map(|n| (-3.0 * (n as f64 - 15.0).abs()).exp()).collect();
        let mut p = EigenpairDecay::from_profile(0.0, psi);
        assert!(matches!(decay_fit(&mut p, DEFAULT_FLOOR, 0), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn free_box_is_extended() {
        let pairs = eigenpairs(&[0.0; 64], -3.0, 3.0, 7).unwrap();
        assert_eq!(pairs.len(), 64);
        for (j, mut p) in pairs.into_iter().enumerate() {
            assert!(p.residual <= RESIDUAL_LIMIT);
            decay_fit(&mut p, DEFAULT_FLOOR, 0).unwrap();
            // The two half-wave modes at the band edges bend like ln sin.
            let cap = if j == 0 || j == 63 { 0.08 } else { 0.02 };
            assert!(p.rate.abs() <= cap, "mode {j} rate {}", p.rate);
        }
    }

    #[test]
    fn strong_coupling_gives_near_delta_vectors() {
        let m = golden(1e4);
        let lattice = Lattice::centered(&m, Phase::from_unit(0.3), 64);
        let pairs = eigenpairs(&lattice.diag, -3.0, 1e4 + 3.0, 1).unwrap();
        for p in &pairs {
            assert!(p.residual <= RESIDUAL_LIMIT);
            let n0 = p.n0;
            for (i, v) in p.psi.iter().enumerate() {
                if i != n0 {
                    let d = (i as i64 - n0 as i64).unsigned_abs() as i32;
                    // Each step away from the peak costs at least a factor λ/2 e^{−2}.
                    let cap = ((2.0f64).ln() + 2.0 - (1e4f64).ln()) * d as f64;
                    assert!(v.abs() == 0.0 || v.abs().ln() <= cap.max(DEFAULT_FLOOR.ln()) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn poisson_identity_and_perturbation() {
        let m = golden(10.0);
        let lattice = Lattice::centered(&m, Phase::from_unit(0.1), 256);
        let pairs = eigenpairs_by_index(&lattice.diag, 120..124, 3).unwrap();
        let p = &pairs[0];
        let (a, b) = (p.n0.saturating_sub(3).max(1), (p.n0 + 30).min(254));
        let r = poisson_residual(&lattice.diag, p.energy, &p.psi, a, b).unwrap();
        assert!(r <= 1e-7, "{r}");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noisy: Vec<f64> = p.psi.iter().map(|v| v + 1e-3 * rng.gen_range(-1.0..1.0)).collect();
        let far = if p.n0 > 128 { 20 } else { 200 };
        let r = poisson_residual(&lattice.diag, p.energy, &noisy, far, far + 33).unwrap();
        assert!(r >= 1e-4, "{r}");
    }

    #[test]
    fn far_energies_are_regular() {
        let m = golden(1.0);
        let lattice = Lattice::centered(&m, Phase::from_unit(0.2), 200);
        let r = classify(&lattice, 10.0, 0, (7.0f64).ln() - (2.0f64).ln(), 34).unwrap();
        assert_eq!(r.verdict, Verdict::Regular);
    }

    #[test]
    fn free_interior_site_is_singular() {
        let m = golden(0.0);
        let lattice = Lattice::centered(&m, Phase::ZERO, 200);
        let r = classify(&lattice, 0.0, 0, 0.05, 34).unwrap();
        assert_eq!(r.verdict, Verdict::Singular);
    }

    #[test]
    fn classify_needs_room() {
        let m = golden(1.0);
        let lattice = Lattice::centered(&m, Phase::ZERO, 40);
        assert!(classify(&lattice, 0.0, 15, 0.1, 34).is_err());
    }

    #[test]
    fn window_counts() {
        assert!(window_count_bounds_hold(100_000));
        assert_eq!(window_count(34), 25 - 8 + 1);
        assert_eq!(admissible_windows(0, 34), -26..=-7);
    }

    #[test]
    fn zero_coupling_has_no_admissible_delta() {
        let m = golden(0.0);
        let lattice = Lattice::centered(&m, Phase::ZERO, 400);
        let r = separation_scan(&m, &lattice, 0.0, 8, 0.01, 0.0, 0.0, -100..100);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn envelope_of_two_exponentials() {
        let pairs: Vec<EigenpairDecay> = [0.4, 0.6]
            .iter()
            .map(|&r| {
                let psi: Vec<f64> = (0..200).map(|n| (-r * (n as f64 - 100.0).abs()).exp()).collect();
                let mut p = EigenpairDecay::from_profile(0.0, psi);
                decay_fit(&mut p, DEFAULT_FLOOR, 0).unwrap();
                p
            })
            .collect();
        let env = uniform_envelope(&pairs).unwrap();
        assert!((env.c - 0.4).abs() < 1e-9);
        assert!((env.big_c - 1.0).abs() < 1e-9);
        assert!(env.violations.is_empty());
        assert!(env.localized);
    }

    #[test]
    fn extended_pair_flattens_the_envelope() {
        let mut a = EigenpairDecay::from_profile(0.0, (0..200).map(|n| (-0.5 * (n as f64 - 100.0).abs()).exp()).collect());
        decay_fit(&mut a, DEFAULT_FLOOR, 0).unwrap();
        let mut b = eigenpairs(&[0.0; 64], -0.1, 0.1, 2).unwrap().remove(0);
        decay_fit(&mut b, DEFAULT_FLOOR, 0).unwrap();
        let env = uniform_envelope(&[a, b]).unwrap();
        assert!(!env.localized);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn inverse_iteration_residuals(seed in 0u64..1000, lambda in 0.5f64..20.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let diag: Vec<f64> = (0..48).map(|_| lambda * rng.gen::<f64>()).collect();
            let pairs = eigenpairs(&diag, -3.0, lambda + 3.0, seed).unwrap();
            prop_assert_eq!(pairs.len(), 48);
            for p in &pairs {
                prop_assert!(p.residual <= RESIDUAL_LIMIT);
                prop_assert_eq!(p.psi[p.n0], 1.0);
                prop_assert!(p.psi.iter().all(|v| v.abs() <= 1.0));
            }
        }
    }
}
