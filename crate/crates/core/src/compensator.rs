//! Running measure `M_t(A) = ∫₀ᵗ ∫_A 1∧|ξ|² κ_s(dξ) ds` along one path.
//!
//! The accumulator keeps one weighted atom per distinct jump location and one
//! mass vector per grid time, so monotonicity can be checked atom by atom.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{arg, Result};
use crate::grid::TimeGrid;
use crate::kernel::{truncated_square, LevyKernel};

#[derive(Debug, Clone, PartialEq)]
pub struct CompensatorAccumulator {
    grid: TimeGrid,
    dim: usize,
    locations: Vec<Vec<f64>>,
    lookup: BTreeMap<Vec<u64>, usize>,
    // masses[i][k]: mass of location k at grid time i (missing tail = 0)
    masses: Vec<Vec<f64>>,
}

impl CompensatorAccumulator {
    pub fn new(grid: TimeGrid, dim: usize) -> Self {
        Self { grid, dim, locations: Vec::new(), lookup: BTreeMap::new(), masses: alloc::vec![Vec::new()] }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Index of the latest grid time with an accumulated mass.
    pub fn current_step(&self) -> usize {
        self.masses.len() - 1
    }

    pub fn locations(&self) -> &[Vec<f64>] {
        &self.locations
    }

    /// Add `dt·(1∧|ξ|²)·κ(dξ)` over the step starting at grid index `step`.
    pub fn accumulate(&mut self, step: usize, kernel: &LevyKernel, dt: f64) -> Result<()> {
        if !(dt >= 0.0) {
            return arg("compensator step must have nonnegative length");
        }
        if step != self.current_step() {
            return arg("compensator steps must be accumulated consecutively");
        }
        if step >= self.grid.n_steps() {
            return arg("compensator already covers the whole grid");
        }
        if kernel.dim() != self.dim {
            return arg("kernel dimension does not match the accumulator");
        }
        let mut next = self.masses[step].clone();
        for atom in kernel.discretized_atoms()? {
            let key: Vec<u64> = atom.xi.iter().map(|v| v.to_bits()).collect();
            let k = match self.lookup.get(&key) {
                Some(k) => *k,
                None => {
                    let k = self.locations.len();
                    self.locations.push(atom.xi.clone());
                    self.lookup.insert(key, k);
                    k
                }
            };
            if next.len() <= k {
                next.resize(k + 1, 0.0);
            }
            next[k] += dt * atom.rate * truncated_square(&atom.xi);
        }
        self.masses.push(next);
        Ok(())
    }

    pub fn mass_at(&self, step: usize, location: usize) -> f64 {
        self.masses.get(step).and_then(|m| m.get(location)).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self, step: usize) -> f64 {
        self.masses.get(step).map(|m| m.iter().sum()).unwrap_or(0.0)
    }

    /// `M_t(A)` for the set `A = {ξ : in_set(ξ)}`.
    pub fn measure(&self, step: usize, in_set: impl Fn(&[f64]) -> bool) -> f64 {
        self.locations.iter().enumerate().filter(|(_, xi)| in_set(xi)).map(|(k, _)| self.mass_at(step, k)).sum()
    }

    /// `∫₀ᵗ ∫ f dκ_s ds` recovered as `∫ f/(1∧|ξ|²) dM_t`.
    pub fn integral(&self, step: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.locations
            .iter()
            .enumerate()
            .map(|(k, xi)| {
                let m = self.mass_at(step, k);
                if m == 0.0 {
                    0.0
                } else {
                    f(xi) / truncated_square(xi) * m
                }
            })
            .sum()
    }

    /// True when every location's mass is nondecreasing in time.
    pub fn is_monotone(&self) -> bool {
        (0..self.locations.len()).all(|k| (1..self.masses.len()).all(|i| self.mass_at(i, k) >= self.mass_at(i - 1, k)))
    }
}
