//! Binned conditional-expectation estimates of the projected characteristics.
//!
//! At every projection time the state space is cut into a tensor grid of
//! cells (quantile edges per coordinate). Non-empty cells form bins; bins with
//! fewer than `min_bin_count` particles are merged into the bin with the
//! nearest centroid. Within a bin, `b̂` and `ĉ` are sample means and `κ̂` is
//! the equal-weight mixture of the particles' kernels.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;

use crate::ensemble::ParticleEnsemble;
use crate::error::{arg, Error, Result};
use crate::family::TestFunctionFamily;
use crate::grid::TimeGrid;
use crate::kernel::{KernelRegistry, LevyKernel};
use crate::linalg::clip_psd;
use crate::scenario::{CharacteristicRule, StepChars};
use crate::truncation::Truncation;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditioningScheme {
    /// Every `stride`-th grid index is a projection time.
    pub stride: usize,
    pub n_bins: usize,
    pub min_bin_count: usize,
    /// Coordinates whose sample range is below this collapse to one bin.
    pub degenerate_threshold: f64,
}

impl Default for ConditioningScheme {
    fn default() -> Self {
        Self { stride: 4, n_bins: 30, min_bin_count: 50, degenerate_threshold: 1e-9 }
    }
}

impl ConditioningScheme {
    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 || self.n_bins == 0 || self.min_bin_count == 0 {
            return arg("stride, n_bins and min_bin_count must be positive");
        }
        if !(self.degenerate_threshold >= 0.0) {
            return arg("degenerate threshold must be nonnegative");
        }
        Ok(())
    }

    pub fn slice_steps(&self, grid: &TimeGrid) -> Vec<usize> {
        (0..=grid.n_steps()).step_by(self.stride).collect()
    }
}

/// Cells of one coordinate: `[lo, e₁), [e₁, e₂), …, [e_k, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub interior: Vec<f64>,
}

impl Axis {
    /// Edges from sorted samples: midpoints between distinct values when there
    /// are at most `n_bins` of them, nearest-rank quantiles otherwise.
    pub fn from_sorted(sorted: &[f64], n_bins: usize, degenerate_threshold: f64) -> Self {
        let lo = sorted[0];
        let hi = sorted[sorted.len() - 1];
        let mut interior = Vec::new();
        if hi - lo >= degenerate_threshold && hi > lo {
            let mut distinct: Vec<f64> = Vec::new();
            for v in sorted {
                if distinct.last() != Some(v) {
                    distinct.push(*v);
                    if distinct.len() > n_bins {
                        break;
                    }
                }
            }
            if distinct.len() <= n_bins {
                interior = distinct.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0).collect();
            } else {
                let n = sorted.len();
                for q in 1..n_bins {
                    let rank = (q * n).div_ceil(n_bins);
                    let e = sorted[rank.max(1) - 1];
                    if e > lo && interior.last().is_none_or(|last| e > *last) {
                        interior.push(e);
                    }
                }
            }
        }
        Self { lo, hi, interior }
    }

    /// Rebuild an axis from the lower and upper ends of its cells.
    pub fn from_cell_bounds(mut los: Vec<f64>, mut his: Vec<f64>) -> Result<Self> {
        los.sort_by(f64::total_cmp);
        los.dedup();
        his.sort_by(f64::total_cmp);
        his.dedup();
        if los.is_empty() || los.len() != his.len() {
            return arg("cell bounds do not describe a partition");
        }
        if los[1..] != his[..his.len() - 1] {
            return arg("cell bounds do not describe a partition");
        }
        Ok(Self { lo: los[0], hi: his[his.len() - 1], interior: los[1..].to_vec() })
    }

    pub fn n_cells(&self) -> usize {
        self.interior.len() + 1
    }

    pub fn cell(&self, v: f64) -> usize {
        self.interior.partition_point(|e| *e <= v)
    }

    pub fn bounds(&self, k: usize) -> (f64, f64) {
        let lo = if k == 0 { self.lo } else { self.interior[k - 1] };
        let hi = if k == self.interior.len() { self.hi } else { self.interior[k] };
        (lo, hi)
    }

    fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lo - tol && v <= self.hi + tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureMember {
    /// Id in the projection's kernel registry.
    pub id: u32,
    pub kernel: LevyKernel,
    pub weight: f64,
}

/// `κ̂ = Σ w_k κ_k` with nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureKernel {
    members: Vec<MixtureMember>,
    flat: LevyKernel,
}

impl MixtureKernel {
    pub fn new(dim: usize, members: Vec<MixtureMember>) -> Result<Self> {
        if members.is_empty() {
            return arg("a mixture needs at least one member");
        }
        let total: f64 = members.iter().map(|m| m.weight).sum();
        if members.iter().any(|m| !(m.weight >= 0.0)) || libm::fabs(total - 1.0) > 1e-12 {
            return arg("mixture weights must be nonnegative and sum to one");
        }
        let parts: Vec<(LevyKernel, f64)> = members.iter().map(|m| (m.kernel.clone(), m.weight)).collect();
        let flat = LevyKernel::mixture(dim, &parts)?;
        Ok(Self { members, flat })
    }

    pub fn members(&self) -> &[MixtureMember] {
        &self.members
    }

    /// The mixture as a single kernel.
    pub fn flat(&self) -> &LevyKernel {
        &self.flat
    }

    pub fn total_rate(&self) -> f64 {
        self.members.iter().map(|m| m.weight * m.kernel.total_rate()).sum()
    }

    /// `∫ f dκ̂` as the weighted mean of member integrals.
    pub fn integral(&self, f: impl Fn(&[f64]) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for m in &self.members {
            acc += m.weight * m.kernel.integral(&f)?;
        }
        Ok(acc)
    }

    /// Draw a mark: pick member `k` with probability `w_k κ_k(R^d) / κ̂(R^d)`,
    /// then sample its normalized law. Returns `false` for a zero mixture.
    pub fn sample_mark<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> Result<bool> {
        let total = self.total_rate();
        if !(total > 0.0) {
            return Ok(false);
        }
        let mut u = rng.random::<f64>() * total;
        let mut chosen = None;
        for m in &self.members {
            let r = m.weight * m.kernel.total_rate();
            if r > 0.0 {
                chosen = Some(m);
                if u < r {
                    break;
                }
                u -= r;
            }
        }
        chosen.expect("positive total rate").kernel.sample_mark(rng, out)?;
        Ok(true)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinEstimate {
    pub count: usize,
    pub centroid: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    /// Frobenius size of the PSD clipping applied to the raw mean of `c`.
    pub clip_perturbation: f64,
    pub mixture: MixtureKernel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub count: usize,
    pub bin: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceTable {
    pub step: usize,
    pub axes: Vec<Axis>,
    pub cells: Vec<Cell>,
    pub bins: Vec<BinEstimate>,
}

fn cell_bounds(axes: &[Axis], mut cell: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lo = alloc::vec![0.0; axes.len()];
    let mut hi = alloc::vec![0.0; axes.len()];
    for k in (0..axes.len()).rev() {
        let n = axes[k].n_cells();
        let (l, h) = axes[k].bounds(cell % n);
        lo[k] = l;
        hi[k] = h;
        cell /= n;
    }
    (lo, hi)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl SliceTable {
    /// Build the cell table; `occupied` lists `(cell index, count, bin)` for
    /// non-empty cells. Empty cells borrow the bin of the nearest occupied
    /// cell by center distance (lowest index on ties).
    pub fn new(step: usize, axes: Vec<Axis>, occupied: &[(usize, usize, usize)], bins: Vec<BinEstimate>) -> Result<Self> {
        let n_cells: usize = axes.iter().map(Axis::n_cells).product();
        if occupied.is_empty() || bins.is_empty() {
            return Err(Error::Estimation("projection slice has no occupied cell".into()));
        }
        let mut cells: Vec<Cell> = (0..n_cells)
            .map(|k| {
                let (lo, hi) = cell_bounds(&axes, k);
                Cell { lo, hi, count: 0, bin: usize::MAX }
            })
            .collect();
        for &(k, count, bin) in occupied {
            if k >= n_cells || bin >= bins.len() {
                return arg("occupied cell or bin index out of range");
            }
            cells[k].count = count;
            cells[k].bin = bin;
        }
        let center = |c: &Cell| -> Vec<f64> { c.lo.iter().zip(&c.hi).map(|(l, h)| l + (h - l) / 2.0).collect() };
        let occupied_centers: Vec<(usize, Vec<f64>)> =
            cells.iter().enumerate().filter(|(_, c)| c.bin != usize::MAX).map(|(k, c)| (k, center(c))).collect();
        for k in 0..n_cells {
            if cells[k].bin != usize::MAX {
                continue;
            }
            let me = center(&cells[k]);
            let mut best = (f64::INFINITY, 0);
            for (j, cj) in &occupied_centers {
                let dist = sq_dist(&me, cj);
                if dist < best.0 {
                    best = (dist, *j);
                }
            }
            cells[k].bin = cells[best.1].bin;
        }
        Ok(Self { step, axes, cells, bins })
    }

    pub fn locate(&self, z: &[f64], tol: f64) -> (usize, bool) {
        let mut cell = 0;
        let mut outside = false;
        for (axis, v) in self.axes.iter().zip(z) {
            cell = cell * axis.n_cells() + axis.cell(*v);
            outside |= !axis.contains(*v, tol);
        }
        (cell, outside)
    }
}

/// Projected characteristics on a set of time slices.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedCharacteristics {
    grid: TimeGrid,
    state_dim: usize,
    noise_dim: usize,
    truncation: Truncation,
    scheme: ConditioningScheme,
    slices: Vec<SliceTable>,
    kernels: KernelRegistry,
}

/// One bin before its kernels are mapped into the projection registry.
#[derive(Debug, Clone)]
pub struct RawBin {
    count: usize,
    centroid: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    clip_perturbation: f64,
    /// (ensemble kernel id, particle count), ascending ids
    members: Vec<(u32, usize)>,
}

#[derive(Debug, Clone)]
pub struct RawSlice {
    step: usize,
    axes: Vec<Axis>,
    occupied: Vec<(usize, usize, usize)>,
    bins: Vec<RawBin>,
}

struct Group {
    cells: Vec<usize>,
    count: usize,
    sum: Vec<f64>,
}

impl Group {
    fn centroid(&self) -> Vec<f64> {
        self.sum.iter().map(|s| s / self.count as f64).collect()
    }
}

/// Estimate one projection slice at grid index `step`.
pub fn estimate_slice(ens: &ParticleEnsemble, scheme: &ConditioningScheme, step: usize) -> Result<RawSlice> {
    scheme.validate()?;
    if ens.is_empty() {
        return arg("cannot project an empty ensemble");
    }
    if !ens.stores_characteristics() {
        return arg("projection needs stored characteristics");
    }
    if step > ens.grid().n_steps() {
        return arg("projection time beyond the horizon");
    }
    if ens.len() < scheme.min_bin_count {
        return Err(Error::Estimation("every bin is below the minimum particle count".into()));
    }
    let m = ens.state_dim();
    let d = ens.noise_dim();
    let particles = ens.particles();

    let axes: Vec<Axis> = (0..m)
        .map(|k| {
            let mut v = ens.state_samples(step, k);
            if v.iter().any(|x| x.is_nan()) {
                return Err(Error::Estimation("state sample is NaN".into()));
            }
            v.sort_by(f64::total_cmp);
            Ok(Axis::from_sorted(&v, scheme.n_bins, scheme.degenerate_threshold))
        })
        .collect::<Result<_>>()?;
    let n_cells: usize = axes.iter().map(Axis::n_cells).product();
    let cell_of: Vec<usize> = particles
        .iter()
        .map(|p| {
            let z = p.z.at(step);
            axes.iter().zip(z).fold(0, |cell, (a, v)| cell * a.n_cells() + a.cell(*v))
        })
        .collect();

    let mut counts = alloc::vec![0usize; n_cells];
    let mut sums = alloc::vec![0.0; n_cells * m];
    for (p, &k) in particles.iter().zip(&cell_of) {
        counts[k] += 1;
        for (s, v) in sums[k * m..(k + 1) * m].iter_mut().zip(p.z.at(step)) {
            *s += v;
        }
    }
    let mut groups: Vec<Group> = (0..n_cells)
        .filter(|k| counts[*k] > 0)
        .map(|k| Group { cells: alloc::vec![k], count: counts[k], sum: sums[k * m..(k + 1) * m].to_vec() })
        .collect();
    while groups.len() > 1 {
        let mut small = None;
        for (i, g) in groups.iter().enumerate() {
            if g.count < scheme.min_bin_count && small.is_none_or(|s: usize| g.count < groups[s].count) {
                small = Some(i);
            }
        }
        let Some(s) = small else { break };
        let cs = groups[s].centroid();
        let mut best = (f64::INFINITY, usize::MAX);
        for (i, g) in groups.iter().enumerate() {
            if i == s {
                continue;
            }
            let dist = sq_dist(&cs, &g.centroid());
            if dist < best.0 {
                best = (dist, i);
            }
        }
        let src = groups.remove(s);
        let target = if best.1 > s { best.1 - 1 } else { best.1 };
        let g = &mut groups[target];
        g.cells.extend(src.cells);
        g.cells.sort_unstable();
        g.count += src.count;
        for (a, b) in g.sum.iter_mut().zip(&src.sum) {
            *a += b;
        }
    }

    let mut bin_of_cell = alloc::vec![usize::MAX; n_cells];
    for (gi, g) in groups.iter().enumerate() {
        for &k in &g.cells {
            bin_of_cell[k] = gi;
        }
    }
    let nb = groups.len();
    let mut b_sum = alloc::vec![0.0; nb * d];
    let mut c_sum = alloc::vec![0.0; nb * d * d];
    let mut members: Vec<BTreeMap<u32, usize>> = alloc::vec![BTreeMap::new(); nb];
    for (p, &k) in particles.iter().zip(&cell_of) {
        let gi = bin_of_cell[k];
        let ch = p.chars.as_ref().expect("checked above");
        for (s, v) in b_sum[gi * d..(gi + 1) * d].iter_mut().zip(ch.b_at(step, d)) {
            *s += v;
        }
        for (s, v) in c_sum[gi * d * d..(gi + 1) * d * d].iter_mut().zip(ch.c_at(step, d)) {
            *s += v;
        }
        *members[gi].entry(ch.kernel_ids[step]).or_insert(0) += 1;
    }
    let bins = groups
        .iter()
        .enumerate()
        .map(|(gi, g)| {
            let n = g.count as f64;
            let b = b_sum[gi * d..(gi + 1) * d].iter().map(|s| s / n).collect();
            let raw_c: Vec<f64> = c_sum[gi * d * d..(gi + 1) * d * d].iter().map(|s| s / n).collect();
            let (c, clip_perturbation) = clip_psd(&raw_c, d);
            RawBin {
                count: g.count,
                centroid: g.centroid(),
                b,
                c,
                clip_perturbation,
                members: members[gi].iter().map(|(id, n)| (*id, *n)).collect(),
            }
        })
        .collect();
    let occupied = (0..n_cells).filter(|k| counts[*k] > 0).map(|k| (k, counts[k], bin_of_cell[k])).collect();
    Ok(RawSlice { step, axes, occupied, bins })
}

/// Combine slices (in increasing step order) into a projection, assigning
/// projection kernel ids by first appearance.
pub fn assemble_projection(
    ens: &ParticleEnsemble,
    scheme: &ConditioningScheme,
    raw: Vec<RawSlice>,
) -> Result<ProjectedCharacteristics> {
    let d = ens.noise_dim();
    let mut kernels = KernelRegistry::new();
    let mut slices = Vec::with_capacity(raw.len());
    for rs in raw {
        let bins = rs
            .bins
            .into_iter()
            .map(|rb| {
                let members = rb
                    .members
                    .iter()
                    .map(|(id, n)| {
                        let kernel = ens.kernel(*id).clone();
                        MixtureMember { id: kernels.intern(&kernel), kernel, weight: *n as f64 / rb.count as f64 }
                    })
                    .collect();
                Ok(BinEstimate {
                    count: rb.count,
                    centroid: rb.centroid,
                    b: rb.b,
                    c: rb.c,
                    clip_perturbation: rb.clip_perturbation,
                    mixture: MixtureKernel::new(d, members)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        slices.push(SliceTable::new(rs.step, rs.axes, &rs.occupied, bins)?);
    }
    ProjectedCharacteristics::from_parts(*ens.grid(), ens.state_dim(), d, ens.truncation(), *scheme, slices, kernels)
}

/// Serial estimator over all projection times of the scheme.
pub fn estimate(ens: &ParticleEnsemble, scheme: &ConditioningScheme) -> Result<ProjectedCharacteristics> {
    let raw = scheme.slice_steps(ens.grid()).into_iter().map(|s| estimate_slice(ens, scheme, s)).collect::<Result<Vec<_>>>()?;
    assemble_projection(ens, scheme, raw)
}

/// Result of a table lookup.
#[derive(Debug, Clone, Copy)]
pub struct Resolved<'a> {
    pub slice: &'a SliceTable,
    pub bin: &'a BinEstimate,
    pub bin_index: usize,
    /// The state lay outside the slice's sampled range.
    pub fallback: bool,
}

impl ProjectedCharacteristics {
    pub fn from_parts(
        grid: TimeGrid,
        state_dim: usize,
        noise_dim: usize,
        truncation: Truncation,
        scheme: ConditioningScheme,
        slices: Vec<SliceTable>,
        kernels: KernelRegistry,
    ) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::Estimation("projection has no time slice".into()));
        }
        if slices[0].step != 0 || slices.windows(2).any(|w| w[0].step >= w[1].step) {
            return arg("projection slices must start at t = 0 and increase");
        }
        for s in &slices {
            if s.axes.len() != state_dim {
                return arg("slice axes do not match the state dimension");
            }
            for b in &s.bins {
                if b.b.len() != noise_dim || b.c.len() != noise_dim * noise_dim {
                    return arg("bin characteristics do not match the noise dimension");
                }
            }
        }
        Ok(Self { grid, state_dim, noise_dim, truncation, scheme, slices, kernels })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn scheme(&self) -> &ConditioningScheme {
        &self.scheme
    }

    pub fn slices(&self) -> &[SliceTable] {
        &self.slices
    }

    pub fn kernels(&self) -> &KernelRegistry {
        &self.kernels
    }

    /// Slice at the latest projection time not after grid index `step`.
    pub fn slice_for_step(&self, step: usize) -> &SliceTable {
        let k = self.slices.partition_point(|s| s.step <= step);
        &self.slices[k.max(1) - 1]
    }

    pub fn lookup_step(&self, step: usize, z: &[f64]) -> Result<Resolved<'_>> {
        if z.len() != self.state_dim || z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Lookup("state has the wrong dimension or is not finite".into()));
        }
        let slice = self.slice_for_step(step);
        let (cell, fallback) = slice.locate(z, self.scheme.degenerate_threshold);
        let bin_index = slice.cells[cell].bin;
        Ok(Resolved { slice, bin: &slice.bins[bin_index], bin_index, fallback })
    }

    pub fn lookup(&self, t: f64, z: &[f64]) -> Result<Resolved<'_>> {
        if !(t >= 0.0) {
            return Err(Error::Lookup("negative time".into()));
        }
        self.lookup_step(self.grid.floor_index(t), z)
    }

    /// `∫ f dκ̂(t, z, ·)` for every member of the family.
    pub fn khat_probe(&self, t: f64, z: &[f64], family: &TestFunctionFamily) -> Result<Vec<f64>> {
        let r = self.lookup(t, z)?;
        family.members().iter().map(|f| r.bin.mixture.integral(|x| f.eval(x))).collect()
    }

    /// Total rate of `κ̂(t, z, ·)` and the mixture to draw marks from.
    pub fn sample_jump(&self, t: f64, z: &[f64]) -> Result<(f64, &MixtureKernel)> {
        let r = self.lookup(t, z)?;
        Ok((r.bin.mixture.total_rate(), &r.bin.mixture))
    }
}

impl CharacteristicRule for ProjectedCharacteristics {
    fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    fn evaluate(&self, step: usize, _t: f64, z: &[f64], _latent: &[f64], out: &mut StepChars) -> Result<()> {
        let r = self.lookup_step(step, z)?;
        out.b.copy_from_slice(&r.bin.b);
        out.c.copy_from_slice(&r.bin.c);
        out.kernel = r.bin.mixture.flat().clone();
        out.fallback = r.fallback;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Domain};
    use alloc::vec;

    #[test]
    fn axis_uses_midpoints_for_few_values() {
        let a = Axis::from_sorted(&[0.0, 0.0, 1.0, 1.0, 3.0], 30, 1e-9);
        assert_eq!(a.interior, vec![0.5, 2.0]);
        assert_eq!(a.cell(0.0), 0);
        assert_eq!(a.cell(1.0), 1);
        assert_eq!(a.cell(5.0), 2);
    }

    #[test]
    fn axis_quantiles_are_strictly_increasing() {
        let v: Vec<f64> = (0..1000).map(|i| (i / 10) as f64).collect();
        let a = Axis::from_sorted(&v, 30, 1e-9);
        assert!(a.interior.windows(2).all(|w| w[0] < w[1]));
        assert!(a.n_cells() <= 30);
        let back = Axis::from_cell_bounds(
            (0..a.n_cells()).map(|k| a.bounds(k).0).collect(),
            (0..a.n_cells()).map(|k| a.bounds(k).1).collect(),
        )
        .unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn degenerate_axis_is_one_cell() {
        let a = Axis::from_sorted(&[1.0, 1.0 + 1e-12, 1.0 + 2e-12], 30, 1e-9);
        assert_eq!(a.n_cells(), 1);
    }

    fn member(xi: f64, rate: f64, w: f64) -> MixtureMember {
        MixtureMember { id: 0, kernel: LevyKernel::atom(vec![xi], rate).unwrap(), weight: w }
    }

    #[test]
    fn mixture_probe_examples() {
        let single = MixtureKernel::new(1, vec![member(1.0, 2.0, 1.0)]).unwrap();
        assert_eq!(single.integral(crate::kernel::truncated_square).unwrap(), 2.0);
        let mix = MixtureKernel::new(1, vec![member(1.0, 1.0, 0.5), member(1.0, 4.0, 0.5)]).unwrap();
        assert_eq!(mix.integral(crate::kernel::truncated_square).unwrap(), 2.5);
        let f = crate::family::TestFunction::Ramp { a: 0.25 };
        assert_eq!(mix.integral(|x| f.eval(x)).unwrap(), 0.0);
        assert!(MixtureKernel::new(1, vec![member(1.0, 1.0, 0.5)]).is_err());
    }

    #[test]
    fn rate_weighted_member_choice() {
        let mix = MixtureKernel::new(1, vec![member(1.0, 1.0, 0.5), member(2.0, 3.0, 0.5)]).unwrap();
        assert_eq!(mix.total_rate(), 2.0);
        let mut rng = substream(1, Domain::Axioms, 99);
        let mut out = [0.0];
        let n = 40_000;
        let mut twos = 0;
        for _ in 0..n {
            assert!(mix.sample_mark(&mut rng, &mut out).unwrap());
            if out[0] == 2.0 {
                twos += 1;
            }
        }
        let p = twos as f64 / n as f64;
        // 4 standard errors
        assert!((p - 0.75).abs() < 4.0 * (0.75f64 * 0.25 / n as f64).sqrt());
        let zero = MixtureKernel::new(1, vec![MixtureMember { id: 0, kernel: LevyKernel::zero(1), weight: 1.0 }]).unwrap();
        assert_eq!(zero.total_rate(), 0.0);
        assert!(!zero.sample_mark(&mut rng, &mut out).unwrap());
    }
}
