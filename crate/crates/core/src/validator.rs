//! Marginal-law comparisons, martingale residuals and compensator probes.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::compensator::CompensatorAccumulator;
use crate::ensemble::ParticleEnsemble;
use crate::error::{arg, Result};
use crate::family::TestFunctionFamily;
use crate::grid::TimeGrid;

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Walk the merged order statistics of two sorted samples, calling
/// `visit(x, F_a(x), F_b(x), next_x)` at every distinct value.
fn merged_ecdf(a: &[f64], b: &[f64], mut visit: impl FnMut(f64, f64, Option<f64>)) {
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(u), Some(v)) => u.min(*v),
            (Some(u), None) => *u,
            (None, Some(v)) => *v,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        let next = match (a.get(i), b.get(j)) {
            (Some(u), Some(v)) => Some(u.min(*v)),
            (Some(u), None) => Some(*u),
            (None, Some(v)) => Some(*v),
            (None, None) => None,
        };
        visit(libm::fabs(i as f64 / n - j as f64 / m), x, next);
    }
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 1.0;
    }
    let (a, b) = (sorted(a), sorted(b));
    let mut ks: f64 = 0.0;
    merged_ecdf(&a, &b, |gap, _, _| ks = ks.max(gap));
    ks
}

/// Asymptotic two-sample KS critical value at level `alpha`.
pub fn ks_critical(n: usize, m: usize, alpha: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    libm::sqrt(libm::log(2.0 / alpha) * (n + m) / (2.0 * n * m))
}

/// Empirical 1-Wasserstein distance `∫ |F_a − F_b| dx`.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let (a, b) = (sorted(a), sorted(b));
    let mut w = 0.0;
    merged_ecdf(&a, &b, |gap, x, next| {
        if let Some(nx) = next {
            w += gap * (nx - x);
        }
    });
    w
}

pub fn is_integer_valued(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite() && libm::round(*x) == *x)
}

fn pmf(v: &[f64]) -> BTreeMap<i64, f64> {
    let mut out = BTreeMap::new();
    let w = 1.0 / v.len() as f64;
    for x in v {
        *out.entry(libm::round(*x) as i64).or_insert(0.0) += w;
    }
    out
}

/// Total variation between the empirical pmfs of two integer samples.
pub fn tv_integer(a: &[f64], b: &[f64]) -> f64 {
    let (pa, pb) = (pmf(a), pmf(b));
    let mut keys: Vec<i64> = pa.keys().chain(pb.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    0.5 * keys.iter().map(|k| libm::fabs(pa.get(k).unwrap_or(&0.0) - pb.get(k).unwrap_or(&0.0))).sum::<f64>()
}

/// Total variation between an integer sample and a pmf on `{0, 1, …}`
/// given by `reference[n]`; reference mass beyond the slice is taken as
/// `1 − Σ reference`.
pub fn tv_against_pmf(samples: &[f64], reference: &[f64]) -> f64 {
    let p = pmf(samples);
    let mut acc = 0.0;
    for (n, q) in reference.iter().enumerate() {
        acc += libm::fabs(p.get(&(n as i64)).unwrap_or(&0.0) - q);
    }
    let outside: f64 = p.iter().filter(|(k, _)| **k < 0 || **k as usize >= reference.len()).map(|(_, v)| v).sum();
    let missing = (1.0 - reference.iter().sum::<f64>()).max(0.0);
    0.5 * (acc + outside + missing)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Tolerances {
    /// `None`: the KS critical value at α = 0.01 plus 0.005.
    pub ks: Option<f64>,
    pub tv: Option<f64>,
    pub w1: Option<f64>,
}

pub const KS_ALPHA: f64 = 0.01;
pub const KS_MARGIN: f64 = 0.005;

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalRow {
    pub t: f64,
    pub coord: usize,
    pub n_a: usize,
    pub n_b: usize,
    pub ks: f64,
    pub ks_tol: f64,
    pub w1: f64,
    /// Only for integer-valued coordinates.
    pub tv: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MarginalReport {
    pub rows: Vec<MarginalRow>,
}

impl MarginalReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

fn time_index(grid: &TimeGrid, t: f64) -> Result<usize> {
    let k = grid.index_of(t)?;
    if k > grid.n_steps() {
        return arg("comparison time beyond the horizon");
    }
    Ok(k)
}

/// Compare the one-dimensional marginals of `Z` coordinate by coordinate.
pub fn compare_marginals(a: &ParticleEnsemble, b: &ParticleEnsemble, times: &[f64], tol: &Tolerances) -> Result<MarginalReport> {
    if a.state_dim() != b.state_dim() {
        return arg("ensembles live on state spaces of different dimension");
    }
    let mut rows = Vec::new();
    for &t in times {
        let (ia, ib) = (time_index(a.grid(), t)?, time_index(b.grid(), t)?);
        for coord in 0..a.state_dim() {
            let (xa, xb) = (a.state_samples(ia, coord), b.state_samples(ib, coord));
            let ks = ks_two_sample(&xa, &xb);
            let ks_tol = tol.ks.unwrap_or_else(|| ks_critical(xa.len(), xb.len(), KS_ALPHA) + KS_MARGIN);
            let w1 = wasserstein1(&xa, &xb);
            let tv = (is_integer_valued(&xa) && is_integer_valued(&xb)).then(|| tv_integer(&xa, &xb));
            let pass = ks <= ks_tol
                && tol.w1.is_none_or(|m| w1 <= m)
                && match (tv, tol.tv) {
                    (Some(v), Some(m)) => v <= m,
                    _ => true,
                };
            rows.push(MarginalRow { t, coord, n_a: xa.len(), n_b: xb.len(), ks, ks_tol, w1, tv, pass });
        }
    }
    Ok(MarginalReport { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualProcess {
    /// `Y(h) − B`
    Drift,
    /// `(Y(h) − B)(Y(h) − B)ᵀ − C̃`
    Quadratic,
    /// `f * μ − f * ν`
    Jumps,
}

impl ResidualProcess {
    pub fn name(&self) -> &'static str {
        match self {
            ResidualProcess::Drift => "drift",
            ResidualProcess::Quadratic => "quadratic",
            ResidualProcess::Jumps => "jumps",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleRow {
    pub process: ResidualProcess,
    pub component: String,
    pub start: f64,
    pub end: f64,
    pub mean: f64,
    pub se: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MartingaleReport {
    pub rows: Vec<MartingaleRow>,
}

impl MartingaleReport {
    pub fn max_abs_z(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(libm::fabs(r.z)))
    }
}

/// Standard errors below this are treated as this value.
pub const SE_FLOOR: f64 = 1e-12;

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, SE_FLOOR);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var / n).max(SE_FLOOR))
}

/// `count` consecutive grid-aligned windows covering `[0, T]`.
pub fn equal_windows(grid: &TimeGrid, count: usize) -> Vec<(f64, f64)> {
    let n = grid.n_steps();
    let count = count.clamp(1, n);
    (0..count).map(|k| (grid.time(k * n / count), grid.time((k + 1) * n / count))).collect()
}

/// Integrals of every kernel of the ensemble against each family member.
fn kernel_table(ens: &ParticleEnsemble, family: &TestFunctionFamily) -> Result<Vec<Vec<f64>>> {
    ens.kernels().kernels().iter().map(|k| family.members().iter().map(|f| k.integral(|x| f.eval(x))).collect()).collect()
}

/// Window increments of the three residual processes, averaged over
/// particles and reported with standard errors and z-scores.
pub fn martingale_residuals(
    ens: &ParticleEnsemble,
    family: &TestFunctionFamily,
    windows: &[(f64, f64)],
) -> Result<MartingaleReport> {
    if !ens.stores_characteristics() {
        return arg("martingale residuals need stored characteristics");
    }
    let grid = *ens.grid();
    let dt = grid.dt();
    let d = ens.noise_dim();
    let h = ens.truncation();
    let fvals = kernel_table(ens, family)?;
    let mut hh: Vec<Vec<f64>> = Vec::with_capacity(ens.kernels().len());
    for k in ens.kernels().kernels() {
        let mut out = alloc::vec![0.0; d * d];
        let mut hx = alloc::vec![0.0; d];
        k.vector_integral(
            |xi, o| {
                h.apply(xi, &mut hx);
                for r in 0..d {
                    for c in 0..d {
                        o[r * d + c] = hx[r] * hx[c];
                    }
                }
            },
            &mut out,
        )?;
        hh.push(out);
    }
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|r| (r..d).map(move |c| (r, c))).collect();

    let mut rows = Vec::new();
    for &(start, end) in windows {
        let (s, e) = (grid.index_of(start)?, grid.index_of(end)?);
        if !(s < e) || e > grid.n_steps() {
            return arg("windows must be nonempty and inside the horizon");
        }
        let np = ens.len();
        let mut drift = alloc::vec![Vec::with_capacity(np); d];
        let mut quad = alloc::vec![Vec::with_capacity(np); pairs.len()];
        let mut jumps = alloc::vec![Vec::with_capacity(np); family.len()];
        let mut m = alloc::vec![0.0; d];
        for p in ens.particles() {
            let ch = p.chars.as_ref().expect("checked above");
            for k in 0..d {
                m[k] = p.y.at(e)[k] - p.y.at(s)[k];
            }
            let mut fsum = alloc::vec![0.0; family.len()];
            for j in p.y.jumps().iter().filter(|j| j.index > s && j.index <= e) {
                if !h.keeps(&j.delta) {
                    for k in 0..d {
                        m[k] -= j.delta[k];
                    }
                }
                for (acc, f) in fsum.iter_mut().zip(family.members()) {
                    *acc += f.eval(&j.delta);
                }
            }
            let mut ctil = alloc::vec![0.0; pairs.len()];
            for i in s..e {
                let b = ch.b_at(i, d);
                for k in 0..d {
                    m[k] -= b[k] * dt;
                }
                let c = ch.c_at(i, d);
                let id = ch.kernel_ids[i] as usize;
                for (q, (r, col)) in pairs.iter().enumerate() {
                    ctil[q] += (c[r * d + col] + hh[id][r * d + col]) * dt;
                }
                for (acc, v) in fsum.iter_mut().zip(&fvals[id]) {
                    *acc -= v * dt;
                }
            }
            for k in 0..d {
                drift[k].push(m[k]);
            }
            for (q, (r, col)) in pairs.iter().enumerate() {
                quad[q].push(m[*r] * m[*col] - ctil[q]);
            }
            for (k, v) in fsum.into_iter().enumerate() {
                jumps[k].push(v);
            }
        }
        let mut push = |process, component: String, v: &[f64]| {
            let (mean, se) = mean_se(v);
            rows.push(MartingaleRow { process, component, start, end, mean, se, z: mean / se });
        };
        for (k, v) in drift.iter().enumerate() {
            push(ResidualProcess::Drift, alloc::format!("y{k}"), v);
        }
        for ((r, c), v) in pairs.iter().zip(&quad) {
            push(ResidualProcess::Quadratic, alloc::format!("y{r}y{c}"), v);
        }
        for (f, v) in family.members().iter().zip(&jumps) {
            push(ResidualProcess::Jumps, f.label(), v);
        }
    }
    Ok(MartingaleReport { rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub function: String,
    pub t: f64,
    pub mean_a: f64,
    pub se_a: f64,
    pub mean_b: f64,
    pub se_b: f64,
    pub diff: f64,
    pub rel_diff: f64,
    /// `|diff| ≤ 3·√(se_a² + se_b²)`
    pub within_3se: bool,
}

fn accumulated(ens: &ParticleEnsemble, table: &[Vec<f64>], f: usize, step: usize) -> Vec<f64> {
    let dt = ens.grid().dt();
    ens.particles()
        .iter()
        .map(|p| {
            let ch = p.chars.as_ref().expect("checked by caller");
            ch.kernel_ids[..step].iter().map(|id| table[*id as usize][f] * dt).sum()
        })
        .collect()
}

/// Compare `E[(f * ν)_t]` between two ensembles for every family member.
pub fn compensator_probe(
    a: &ParticleEnsemble,
    b: &ParticleEnsemble,
    family: &TestFunctionFamily,
    times: &[f64],
) -> Result<Vec<ProbeRow>> {
    if !a.stores_characteristics() || !b.stores_characteristics() {
        return arg("compensator probe needs stored kernels on both sides");
    }
    if a.noise_dim() != b.noise_dim() {
        return arg("ensembles have different jump dimensions");
    }
    let (ta, tb) = (kernel_table(a, family)?, kernel_table(b, family)?);
    let mut rows = Vec::new();
    for &t in times {
        let (sa, sb) = (time_index(a.grid(), t)?, time_index(b.grid(), t)?);
        for (k, f) in family.members().iter().enumerate() {
            let (mean_a, se_a) = mean_se(&accumulated(a, &ta, k, sa));
            let (mean_b, se_b) = mean_se(&accumulated(b, &tb, k, sb));
            let diff = mean_a - mean_b;
            let scale = libm::fabs(mean_a).max(libm::fabs(mean_b));
            let rel_diff = if scale > 0.0 { diff / scale } else { 0.0 };
            let bound = 3.0 * libm::sqrt(se_a * se_a + se_b * se_b);
            let within_3se = diff == 0.0 || libm::fabs(diff) <= bound;
            rows.push(ProbeRow { function: f.label(), t, mean_a, se_a, mean_b, se_b, diff, rel_diff, within_3se });
        }
    }
    Ok(rows)
}

/// The running measure `M_t` of one particle's realized kernels.
pub fn particle_compensator(ens: &ParticleEnsemble, index: usize) -> Result<CompensatorAccumulator> {
    let p = ens.particles().get(index).ok_or_else(|| crate::Error::Argument("particle index out of range".into()))?;
    let ch = p.chars.as_ref().ok_or_else(|| crate::Error::Argument("particle has no stored kernels".into()))?;
    let grid = *ens.grid();
    let mut acc = CompensatorAccumulator::new(grid, ens.noise_dim());
    for i in 0..grid.n_steps() {
        acc.accumulate(i, ens.kernel(ch.kernel_ids[i]), grid.dt())?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let a = [0.3, -1.0, 2.0, 2.0, 5.5];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        assert_eq!(wasserstein1(&a, &a), 0.0);
        assert_eq!(tv_integer(&[1.0, 2.0], &[2.0, 1.0]), 0.0);
    }

    #[test]
    fn shifted_samples() {
        let a = [0.0, 1.0, 2.0, 3.0];
        let b = [0.5, 1.5, 2.5, 3.5];
        assert_eq!(ks_two_sample(&a, &b), 0.25);
        assert_eq!(wasserstein1(&a, &b), 0.5);
        assert_eq!(ks_two_sample(&a, &[10.0]), 1.0);
    }

    #[test]
    fn ties_across_samples() {
        assert_eq!(ks_two_sample(&[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]), 1.0 / 3.0);
    }

    #[test]
    fn wasserstein_matches_brute_force_assignment() {
        let a = [0.3, -1.2, 4.0, 2.2, 0.0, 7.5, -3.0, 1.1, 0.9, 2.0];
        let b = [1.0, 0.5, -0.5, 3.3, 2.1, 6.0, -2.0, 0.0, 4.4, 1.5];
        // exhaustive search over all assignments
        fn search(a: &[f64], b: &[f64], used: &mut [bool], i: usize, acc: f64, best: &mut f64) {
            if acc >= *best {
                return;
            }
            if i == a.len() {
                *best = acc;
                return;
            }
            for j in 0..b.len() {
                if !used[j] {
                    used[j] = true;
                    search(a, b, used, i + 1, acc + (a[i] - b[j]).abs(), best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        search(&a, &b, &mut [false; 10], 0, 0.0, &mut best);
        assert!((wasserstein1(&a, &b) - best / 10.0).abs() < 1e-12);
    }

    #[test]
    fn tv_against_reference() {
        let s = [0.0, 0.0, 1.0, 3.0];
        // p̂ = (.5, .25, 0, .25); reference (.5, .5)
        assert!((tv_against_pmf(&s, &[0.5, 0.5]) - 0.25).abs() < 1e-15);
        assert!(is_integer_valued(&s));
        assert!(!is_integer_valued(&[0.5]));
    }

    #[test]
    fn critical_value() {
        let c = ks_critical(100_000, 100_000, 0.01);
        assert!((c - libm::sqrt(libm::log(200.0) / 100_000.0)).abs() < 1e-15);
    }

    #[test]
    fn windows_cover_horizon() {
        let g = TimeGrid::new(1.0 / 256.0, 256).unwrap();
        let w = equal_windows(&g, 20);
        assert_eq!(w.len(), 20);
        assert_eq!(w[0].0, 0.0);
        assert_eq!(w[19].1, 1.0);
        assert!(w.windows(2).all(|p| p[0].1 == p[1].0));
    }
}
