//! Finite-activity Lévy kernels: atoms plus optional rate densities on boxes.
//!
//! A [`LevyKernel`] is a jump-intensity measure on `R^d \ {0}` with finite
//! total mass. Atomic parts are exact; density parts are integrated and sampled
//! through a midpoint tensor quadrature on their declared bounding box.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::error::{arg, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub xi: Vec<f64>,
    pub rate: f64,
}

impl Atom {
    pub fn new(xi: Vec<f64>, rate: f64) -> Self {
        Self { xi, rate }
    }

    pub fn norm(&self) -> f64 {
        norm(&self.xi)
    }
}

pub type RateDensity = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub struct BoxSupport {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub nodes_per_dim: usize,
}

#[derive(Clone)]
struct DensityPart {
    density: RateDensity,
    weight: f64,
    support: Option<BoxSupport>,
    mass: f64,
    // cumulative (unweighted) cell masses of the midpoint quadrature
    cells: Vec<f64>,
}

impl DensityPart {
    fn weighted_mass(&self) -> f64 {
        self.weight * self.mass
    }

    fn cell_midpoint(support: &BoxSupport, mut cell: usize, out: &mut [f64]) {
        let n = support.nodes_per_dim;
        for k in 0..out.len() {
            let idx = cell % n;
            cell /= n;
            let h = (support.hi[k] - support.lo[k]) / n as f64;
            out[k] = support.lo[k] + (idx as f64 + 0.5) * h;
        }
    }
}

struct Inner {
    dim: usize,
    atoms: Vec<Atom>,
    densities: Vec<DensityPart>,
    total_rate: f64,
}

/// Jump-intensity measure with finite total mass. Cloning is cheap.
#[derive(Clone)]
pub struct LevyKernel(Arc<Inner>);

pub(crate) fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum::<f64>())
}

/// `1 ∧ |ξ|²`, the weight that makes every Lévy measure finite.
pub fn truncated_square(xi: &[f64]) -> f64 {
    let s: f64 = xi.iter().map(|x| x * x).sum();
    if s < 1.0 {
        s
    } else {
        1.0
    }
}

impl LevyKernel {
    pub fn zero(dim: usize) -> Self {
        Self(Arc::new(Inner { dim, atoms: Vec::new(), densities: Vec::new(), total_rate: 0.0 }))
    }

    pub fn atomic(dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        if dim == 0 {
            return arg("kernel dimension must be positive");
        }
        for a in &atoms {
            if a.xi.len() != dim {
                return arg("atom location has the wrong dimension");
            }
            if a.xi.iter().all(|v| *v == 0.0) {
                return arg("a Lévy kernel cannot charge the origin");
            }
            if !(a.rate > 0.0) || !a.rate.is_finite() || a.xi.iter().any(|v| !v.is_finite()) {
                return arg("atom rates must be positive and finite");
            }
        }
        let total_rate = atoms.iter().map(|a| a.rate).sum();
        Ok(Self(Arc::new(Inner { dim, atoms, densities: Vec::new(), total_rate })))
    }

    /// Single atom `rate·δ_ξ`.
    pub fn atom(xi: Vec<f64>, rate: f64) -> Result<Self> {
        Self::atomic(xi.len(), alloc::vec![Atom::new(xi, rate)])
    }

    /// Rate density on the box `[lo, hi]`, integrated with a midpoint rule on
    /// `nodes_per_dim^d` cells. The cached mass is the quadrature mass.
    pub fn density_on_box(density: RateDensity, support: BoxSupport) -> Result<Self> {
        let dim = support.lo.len();
        if dim == 0 || support.hi.len() != dim || support.nodes_per_dim == 0 {
            return arg("density support must be a nonempty box with at least one node per side");
        }
        if support.lo.iter().zip(&support.hi).any(|(l, h)| !(h > l)) {
            return arg("density support must have positive width in every dimension");
        }
        let n_cells =
            support.nodes_per_dim.checked_pow(dim as u32).ok_or_else(|| Error::Argument("quadrature grid too large".into()))?;
        let vol: f64 = support.lo.iter().zip(&support.hi).map(|(l, h)| (h - l) / support.nodes_per_dim as f64).product();
        let mut mid = alloc::vec![0.0; dim];
        let mut cells = Vec::with_capacity(n_cells);
        let mut acc = 0.0;
        for cell in 0..n_cells {
            DensityPart::cell_midpoint(&support, cell, &mut mid);
            let v = if mid.iter().all(|x| *x == 0.0) { 0.0 } else { density(&mid) };
            if !(v >= 0.0) || !v.is_finite() {
                return arg("rate density must be nonnegative and finite on its support");
            }
            acc += v * vol;
            cells.push(acc);
        }
        let part = DensityPart { density, weight: 1.0, support: Some(support), mass: acc, cells };
        Ok(Self(Arc::new(Inner { dim, atoms: Vec::new(), densities: alloc::vec![part], total_rate: acc })))
    }

    /// Rate density with a known total mass but no declared support. Such a
    /// kernel can report its rate but cannot be integrated or sampled.
    pub fn density_unbounded(dim: usize, density: RateDensity, mass: f64) -> Result<Self> {
        if dim == 0 || !(mass >= 0.0) || !mass.is_finite() {
            return arg("density mass must be finite and nonnegative");
        }
        let part = DensityPart { density, weight: 1.0, support: None, mass, cells: Vec::new() };
        Ok(Self(Arc::new(Inner { dim, atoms: Vec::new(), densities: alloc::vec![part], total_rate: mass })))
    }

    /// Weighted sum `Σ w_k κ_k` as a single kernel. Equal atoms are merged.
    pub fn mixture(dim: usize, members: &[(LevyKernel, f64)]) -> Result<Self> {
        let mut atoms: Vec<Atom> = Vec::new();
        let mut densities = Vec::new();
        for (k, w) in members {
            if k.dim() != dim {
                return arg("mixture members must share a dimension");
            }
            if !(*w >= 0.0) {
                return arg("mixture weights must be nonnegative");
            }
            if *w == 0.0 {
                continue;
            }
            for a in k.atoms() {
                match atoms.iter_mut().find(|b| bits_eq(&b.xi, &a.xi)) {
                    Some(b) => b.rate += w * a.rate,
                    None => atoms.push(Atom::new(a.xi.clone(), w * a.rate)),
                }
            }
            for d in &k.0.densities {
                let mut d = d.clone();
                d.weight *= w;
                densities.push(d);
            }
        }
        let total_rate =
            atoms.iter().map(|a| a.rate).sum::<f64>() + densities.iter().map(DensityPart::weighted_mass).sum::<f64>();
        Ok(Self(Arc::new(Inner { dim, atoms, densities, total_rate })))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.0.atoms
    }

    pub fn has_density(&self) -> bool {
        !self.0.densities.is_empty()
    }

    /// Mass of the kernel on `R^d \ {0}`.
    pub fn total_rate(&self) -> f64 {
        self.0.total_rate
    }

    pub fn is_zero(&self) -> bool {
        self.0.total_rate == 0.0
    }

    /// `∫ f dκ`; exact on atoms, midpoint quadrature on densities.
    pub fn integral(&self, f: impl Fn(&[f64]) -> f64) -> Result<f64> {
        let mut acc: f64 = self.0.atoms.iter().map(|a| a.rate * f(&a.xi)).sum();
        if self.0.densities.is_empty() {
            return Ok(acc);
        }
        let mut mid = alloc::vec![0.0; self.0.dim];
        for d in &self.0.densities {
            let support = d
                .support
                .as_ref()
                .ok_or_else(|| Error::UnsupportedKernel("density kernel without a declared bounded support".into()))?;
            let mut prev = 0.0;
            for (cell, cum) in d.cells.iter().enumerate() {
                let cell_mass = cum - prev;
                prev = *cum;
                if cell_mass == 0.0 {
                    continue;
                }
                DensityPart::cell_midpoint(support, cell, &mut mid);
                acc += d.weight * cell_mass * f(&mid);
            }
        }
        Ok(acc)
    }

    /// `∫ v(ξ) κ(dξ)` for a vector-valued integrand, written into `out`.
    pub fn vector_integral(&self, mut f: impl FnMut(&[f64], &mut [f64]), out: &mut [f64]) -> Result<()> {
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut buf = alloc::vec![0.0; out.len()];
        for a in &self.0.atoms {
            f(&a.xi, &mut buf);
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += a.rate * b;
            }
        }
        if self.0.densities.is_empty() {
            return Ok(());
        }
        let mut mid = alloc::vec![0.0; self.0.dim];
        for d in &self.0.densities {
            let support = d
                .support
                .as_ref()
                .ok_or_else(|| Error::Integrability("density kernel without a declared bounded support".into()))?;
            let mut prev = 0.0;
            for (cell, cum) in d.cells.iter().enumerate() {
                let cell_mass = cum - prev;
                prev = *cum;
                if cell_mass == 0.0 {
                    continue;
                }
                DensityPart::cell_midpoint(support, cell, &mut mid);
                f(&mid, &mut buf);
                for (o, b) in out.iter_mut().zip(&buf) {
                    *o += d.weight * cell_mass * b;
                }
            }
        }
        Ok(())
    }

    /// Draw one jump mark from the normalized kernel `κ / κ(R^d)`.
    pub fn sample_mark<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> Result<()> {
        let total = self.0.total_rate;
        if !(total > 0.0) {
            return Err(Error::Argument("cannot sample a mark from a zero kernel".into()));
        }
        let mut u = rng.random::<f64>() * total;
        for a in &self.0.atoms {
            if u < a.rate {
                out.copy_from_slice(&a.xi);
                return Ok(());
            }
            u -= a.rate;
        }
        for d in &self.0.densities {
            let w = d.weighted_mass();
            if u < w || core::ptr::eq(d, self.0.densities.last().unwrap()) {
                let support = d
                    .support
                    .as_ref()
                    .ok_or_else(|| Error::UnsupportedKernel("cannot sample a density without declared support".into()))?;
                let target = (u / d.weight).min(d.mass);
                let cell = d.cells.partition_point(|c| *c <= target).min(d.cells.len() - 1);
                let n = support.nodes_per_dim;
                let mut idx = cell;
                for k in 0..out.len() {
                    let h = (support.hi[k] - support.lo[k]) / n as f64;
                    out[k] = support.lo[k] + ((idx % n) as f64 + rng.random::<f64>()) * h;
                    idx /= n;
                }
                return Ok(());
            }
            u -= w;
        }
        // Rounding left u just above the accumulated mass: take the last atom.
        match self.0.atoms.last() {
            Some(a) => {
                out.copy_from_slice(&a.xi);
                Ok(())
            }
            None => Err(Error::Argument("kernel has no mass to sample".into())),
        }
    }

    /// Atoms plus the quadrature cells of every density part, as weighted atoms.
    pub fn discretized_atoms(&self) -> Result<Vec<Atom>> {
        let mut out = self.0.atoms.clone();
        let mut mid = alloc::vec![0.0; self.0.dim];
        for d in &self.0.densities {
            let support = d
                .support
                .as_ref()
                .ok_or_else(|| Error::UnsupportedKernel("density kernel without a declared bounded support".into()))?;
            let mut prev = 0.0;
            for (cell, cum) in d.cells.iter().enumerate() {
                let cell_mass = cum - prev;
                prev = *cum;
                if cell_mass > 0.0 {
                    DensityPart::cell_midpoint(support, cell, &mut mid);
                    out.push(Atom::new(mid.clone(), d.weight * cell_mass));
                }
            }
        }
        Ok(out)
    }

    /// True when both handles share the same allocation.
    pub fn ptr_eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Bit-level identity used to deduplicate kernels.
    pub fn identity_key(&self) -> Vec<u64> {
        let mut key = Vec::with_capacity(2 + self.0.atoms.len() * (self.0.dim + 1));
        key.push(self.0.dim as u64);
        key.push(self.0.atoms.len() as u64);
        for a in &self.0.atoms {
            key.extend(a.xi.iter().map(|v| v.to_bits()));
            key.push(a.rate.to_bits());
        }
        for d in &self.0.densities {
            key.push(Arc::as_ptr(&d.density) as *const () as usize as u64);
            key.push(d.weight.to_bits());
            key.push(d.mass.to_bits());
        }
        key
    }
}

fn bits_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

impl PartialEq for LevyKernel {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.identity_key() == other.identity_key()
    }
}

impl fmt::Debug for LevyKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevyKernel")
            .field("dim", &self.0.dim)
            .field("atoms", &self.0.atoms)
            .field("densities", &self.0.densities.len())
            .field("total_rate", &self.0.total_rate)
            .finish()
    }
}

/// Interning table assigning stable ids to kernels in order of first appearance.
#[derive(Debug, Clone, Default)]
pub struct KernelRegistry {
    kernels: Vec<LevyKernel>,
    index: BTreeMap<u64, Vec<u32>>,
}

fn fnv(words: &[u64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for w in words {
        for b in w.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

impl KernelRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, k: &LevyKernel) -> u32 {
        let key = k.identity_key();
        let h = fnv(&key);
        let bucket = self.index.entry(h).or_default();
        for &id in bucket.iter() {
            if self.kernels[id as usize].identity_key() == key {
                return id;
            }
        }
        let id = self.kernels.len() as u32;
        self.kernels.push(k.clone());
        bucket.push(id);
        id
    }

    pub fn get(&self, id: u32) -> Option<&LevyKernel> {
        self.kernels.get(id as usize)
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn kernels(&self) -> &[LevyKernel] {
        &self.kernels
    }
}

impl PartialEq for KernelRegistry {
    fn eq(&self, other: &Self) -> bool {
        self.kernels == other.kernels
    }
}
