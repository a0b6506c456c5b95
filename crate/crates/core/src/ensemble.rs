//! Particle ensembles: simulated paths plus per-step realized characteristics.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{arg, Result};
use crate::grid::TimeGrid;
use crate::kernel::{KernelRegistry, LevyKernel};
use crate::path::CadlagPath;
use crate::scenario::{CharBounds, SourceKind};
use crate::truncation::Truncation;
use crate::updating::UpdatingFunction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_particles: usize,
    pub grid: TimeGrid,
    pub seed: u64,
    pub store_characteristics: bool,
}

impl SimConfig {
    pub fn new(n_particles: usize, grid: TimeGrid, seed: u64) -> Result<Self> {
        if n_particles == 0 {
            return arg("an ensemble needs at least one particle");
        }
        Ok(Self { n_particles, grid, seed, store_characteristics: true })
    }

    pub fn without_characteristics(mut self) -> Self {
        self.store_characteristics = false;
        self
    }
}

/// Realized characteristics at every grid index `0..=n_steps`; entry `i` was
/// used over the step `(t_i, t_{i+1}]`, the terminal entry only for lookups.
#[derive(Debug, Clone, PartialEq)]
pub struct CharTrack {
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub kernel_ids: Vec<u32>,
}

impl CharTrack {
    pub fn b_at(&self, i: usize, d: usize) -> &[f64] {
        &self.b[i * d..(i + 1) * d]
    }

    pub fn c_at(&self, i: usize, d: usize) -> &[f64] {
        &self.c[i * d * d..(i + 1) * d * d]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleTrack {
    pub z: CadlagPath,
    pub y: CadlagPath,
    pub latent: Vec<f64>,
    pub chars: Option<CharTrack>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Diagnostics {
    pub steps: u64,
    /// Steps with `κ(R^d)·dt > 0.1`.
    pub rate_warnings: u64,
    /// Steps whose characteristics came from a nearest-bin fallback.
    pub fallback_steps: u64,
}

impl Diagnostics {
    pub fn merge(&mut self, other: &Diagnostics) {
        self.steps += other.steps;
        self.rate_warnings += other.rate_warnings;
        self.fallback_steps += other.fallback_steps;
    }

    pub fn fallback_fraction(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.fallback_steps as f64 / self.steps as f64
        }
    }

    /// More than 1% of steps needed a fallback.
    pub fn flagged(&self) -> bool {
        self.fallback_fraction() > 0.01
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    label: String,
    kind: SourceKind,
    config: SimConfig,
    phi: UpdatingFunction,
    z0: Vec<f64>,
    truncation: Truncation,
    noise_dim: usize,
    particles: Vec<ParticleTrack>,
    kernels: KernelRegistry,
    diagnostics: Diagnostics,
}

impl ParticleEnsemble {
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        label: String,
        kind: SourceKind,
        config: SimConfig,
        phi: UpdatingFunction,
        z0: Vec<f64>,
        truncation: Truncation,
        particles: Vec<ParticleTrack>,
        kernels: KernelRegistry,
        diagnostics: Diagnostics,
    ) -> Result<Self> {
        let d = phi.increment_dim();
        let m = phi.state_dim();
        if particles.len() != config.n_particles {
            return arg("particle count differs from the configuration");
        }
        for p in &particles {
            if p.y.grid() != &config.grid || p.z.grid() != &config.grid || p.y.dim() != d || p.z.dim() != m {
                return arg("particle paths do not match the ensemble grid or dimensions");
            }
            if let Some(ch) = &p.chars {
                let n = config.grid.len();
                if ch.b.len() != n * d || ch.c.len() != n * d * d || ch.kernel_ids.len() != n {
                    return arg("characteristic records have the wrong length");
                }
                if ch.kernel_ids.iter().any(|id| *id as usize >= kernels.len()) {
                    return arg("characteristic record refers to an unknown kernel");
                }
            } else if config.store_characteristics {
                return arg("ensemble declares stored characteristics but a particle has none");
            }
        }
        Ok(Self { label, kind, config, phi, z0, truncation, noise_dim: d, particles, kernels, diagnostics })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.config.grid
    }

    pub fn phi(&self) -> UpdatingFunction {
        self.phi
    }

    pub fn z0(&self) -> &[f64] {
        &self.z0
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn state_dim(&self) -> usize {
        self.phi.state_dim()
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[ParticleTrack] {
        &self.particles
    }

    pub fn kernels(&self) -> &KernelRegistry {
        &self.kernels
    }

    pub fn kernel(&self, id: u32) -> &LevyKernel {
        self.kernels.get(id).expect("kernel ids are validated on construction")
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    pub fn stores_characteristics(&self) -> bool {
        self.config.store_characteristics
    }

    /// Coordinate `coord` of `Z` at grid index `step`, one value per particle.
    pub fn state_samples(&self, step: usize, coord: usize) -> Vec<f64> {
        self.particles.iter().map(|p| p.z.at(step)[coord]).collect()
    }

    /// Number of particles whose stored `Z` differs from `Φ(Z₀, Y)` anywhere.
    pub fn adaptedness_mismatches(&self) -> usize {
        self.particles
            .iter()
            .filter(|p| self.phi.apply(&self.z0, &p.y).map(|z| z.values() != p.z.values()).unwrap_or(true))
            .count()
    }

    /// Number of recorded steps violating the declared bounds.
    pub fn bound_violations(&self, bounds: &CharBounds) -> usize {
        let d = self.noise_dim;
        let mut bad = 0;
        for p in &self.particles {
            let Some(ch) = &p.chars else { continue };
            for i in 0..ch.kernel_ids.len() {
                let rate = self.kernel(ch.kernel_ids[i]).total_rate();
                if !bounds.holds(ch.b_at(i, d), ch.c_at(i, d), rate) {
                    bad += 1;
                }
            }
        }
        bad
    }

    pub fn total_jumps(&self) -> usize {
        self.particles.iter().map(|p| p.y.jumps().len()).sum()
    }
}
