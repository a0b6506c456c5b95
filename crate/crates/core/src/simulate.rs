//! Euler scheme with per-step Poisson jump counts.
//!
//! Over the step `(t_i, t_{i+1}]` the characteristics are frozen at the left
//! endpoint. Jumps are drawn first: a Poisson count with mean `κ(R^d)·dt`,
//! then marks from the normalized kernel, the kernel being re-evaluated at
//! the intermediate state after each jump of the step. The continuous part
//! `(b − ∫h dκ)·dt + L·g·√dt` with `L Lᵀ = c` is added last.
//!
//! Draw order inside a particle's substream: latent variables, then per step
//! `d` standard normals, the Poisson count (only when the rate is positive)
//! and the marks.

use alloc::vec::Vec;

use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::ensemble::{CharTrack, Diagnostics, ParticleEnsemble, ParticleTrack, SimConfig};
use crate::error::{Error, Result};
use crate::kernel::{KernelRegistry, LevyKernel};
use crate::linalg::{clip_psd, psd_factor};
use crate::path::{CadlagPath, Jump};
use crate::rng::substream;
use crate::scenario::{Dynamics, StepChars};

/// Above this expected jump count per step a warning is counted.
pub const RATE_WARNING: f64 = 0.1;
/// Above this expected jump count per step the run is rejected.
pub const RATE_LIMIT: f64 = 1.0;

/// One simulated particle whose kernel ids index `kernels` (local to it).
#[derive(Debug, Clone)]
pub struct RawParticle {
    pub track: ParticleTrack,
    pub kernels: Vec<LevyKernel>,
    pub diagnostics: Diagnostics,
}

struct LocalKernels {
    registry: KernelRegistry,
    last: Option<(LevyKernel, u32)>,
}

impl LocalKernels {
    fn id(&mut self, k: &LevyKernel) -> u32 {
        if let Some((last, id)) = &self.last {
            if last.ptr_eq(k) {
                return *id;
            }
        }
        let id = self.registry.intern(k);
        self.last = Some((k.clone(), id));
        id
    }
}

pub fn simulate_particle<S: Dynamics + ?Sized>(src: &S, cfg: &SimConfig, index: usize) -> Result<RawParticle> {
    let grid = cfg.grid;
    let n = grid.n_steps();
    let dt = grid.dt();
    let sqdt = libm::sqrt(dt);
    let phi = src.phi();
    let d = phi.increment_dim();
    let m = phi.state_dim();
    if src.noise_dim() != d {
        return Err(Error::Argument("rule and updating function dimensions differ".into()));
    }
    let e = src.initial_state().to_vec();
    let truncation = src.truncation();
    let mut rng = substream(cfg.seed, src.kind().domain(), index as u64);
    let latent = src.sample_latent(&mut rng);

    let mut y = Vec::with_capacity(grid.len() * d);
    y.resize(d, 0.0);
    let mut z = Vec::with_capacity(grid.len() * m);
    z.extend_from_slice(&e);
    let mut jumps: Vec<Jump> = Vec::new();
    let mut kernels = LocalKernels { registry: KernelRegistry::new(), last: None };
    let mut chars = cfg.store_characteristics.then(|| CharTrack {
        b: Vec::with_capacity(grid.len() * d),
        c: Vec::with_capacity(grid.len() * d * d),
        kernel_ids: Vec::with_capacity(grid.len()),
    });
    let mut diag = Diagnostics::default();

    let mut sc = StepChars::new(d);
    let mut mid = StepChars::new(d);
    let mut l = alloc::vec![0.0; d * d];
    let mut g = alloc::vec![0.0; d];
    let mut x = alloc::vec![0.0; d];
    let mut mark = alloc::vec![0.0; d];
    let mut z_tmp = alloc::vec![0.0; m];
    let mut step_jumps: Vec<Vec<f64>> = Vec::new();

    for i in 0..=n {
        let t = grid.time(i);
        src.evaluate(i, t, &z[i * m..(i + 1) * m], &latent, &mut sc)?;
        if let Some(ch) = chars.as_mut() {
            ch.b.extend_from_slice(&sc.b);
            ch.c.extend_from_slice(&sc.c);
            ch.kernel_ids.push(kernels.id(&sc.kernel));
        }
        if i == n {
            break;
        }
        diag.steps += 1;
        if sc.fallback {
            diag.fallback_steps += 1;
        }
        if psd_factor(&sc.c, d, &mut l).is_err() {
            let (clipped, _) = clip_psd(&sc.c, d);
            psd_factor(&clipped, d, &mut l)
                .map_err(|_| Error::Scenario("diffusion matrix has no Cholesky factor after PSD clipping".into()))?;
        }
        let rate = sc.kernel.total_rate();
        let expected = rate * dt;
        if expected > RATE_LIMIT {
            return Err(Error::Scenario(alloc::format!("expected {expected} jumps per step at t = {t}; refine the grid")));
        }
        if expected > RATE_WARNING {
            diag.rate_warnings += 1;
        }
        let comp = truncation.compensated_mean(&sc.kernel)?;

        for gk in g.iter_mut() {
            *gk = StandardNormal.sample(&mut rng);
        }
        let count = if rate > 0.0 {
            let dist = Poisson::new(expected).map_err(|_| Error::Scenario("invalid Poisson mean".into()))?;
            let k: f64 = dist.sample(&mut rng);
            k as u64
        } else {
            0
        };

        let z_prev = &z[i * m..(i + 1) * m];
        x.copy_from_slice(&y[i * d..(i + 1) * d]);
        step_jumps.clear();
        let mut kernel = sc.kernel.clone();
        for j in 0..count {
            if j > 0 {
                phi.step(&e, z_prev, &x, step_jumps.iter().map(|v| v.as_slice()), 0.0, &mut z_tmp);
                src.evaluate(i, t, &z_tmp, &latent, &mut mid)?;
                kernel = mid.kernel.clone();
                if !(kernel.total_rate() > 0.0) {
                    break;
                }
            }
            kernel.sample_mark(&mut rng, &mut mark)?;
            if mark.iter().all(|v| *v == 0.0) {
                continue;
            }
            for (xk, mk) in x.iter_mut().zip(&mark) {
                *xk += mk;
            }
            step_jumps.push(mark.clone());
        }
        for k in 0..d {
            let mut noise = 0.0;
            for (lkj, gj) in l[k * d..(k + 1) * d].iter().zip(&g) {
                noise += lkj * gj;
            }
            x[k] += (sc.b[k] - comp[k]) * dt + noise * sqdt;
        }
        phi.step(&e, z_prev, &x, step_jumps.iter().map(|v| v.as_slice()), dt, &mut z_tmp);
        y.extend_from_slice(&x);
        z.extend_from_slice(&z_tmp);
        for delta in step_jumps.drain(..) {
            jumps.push(Jump { index: i + 1, delta });
        }
    }

    Ok(RawParticle {
        track: ParticleTrack {
            z: CadlagPath::from_parts_unchecked(grid, m, z, Vec::new()),
            y: CadlagPath::from_parts_unchecked(grid, d, y, jumps),
            latent,
            chars,
        },
        kernels: kernels.registry.kernels().to_vec(),
        diagnostics: diag,
    })
}

/// Assemble particles simulated in any order into an ensemble. Kernel ids
/// are assigned by first appearance in particle order, so the result does
/// not depend on how the particles were scheduled.
pub fn assemble<S: Dynamics + ?Sized>(src: &S, cfg: &SimConfig, raws: Vec<RawParticle>) -> Result<ParticleEnsemble> {
    let mut registry = KernelRegistry::new();
    let mut diagnostics = Diagnostics::default();
    let mut particles = Vec::with_capacity(raws.len());
    for raw in raws {
        let RawParticle { mut track, kernels, diagnostics: diag } = raw;
        diagnostics.merge(&diag);
        if let Some(ch) = track.chars.as_mut() {
            let map: Vec<u32> = kernels.iter().map(|k| registry.intern(k)).collect();
            for id in ch.kernel_ids.iter_mut() {
                *id = map[*id as usize];
            }
        }
        particles.push(track);
    }
    ParticleEnsemble::from_parts(
        src.label(),
        src.kind(),
        *cfg,
        src.phi(),
        src.initial_state().to_vec(),
        src.truncation(),
        particles,
        registry,
        diagnostics,
    )
}

/// Serial driver; parallel callers run [`simulate_particle`] per index and
/// pass the results, in index order, to [`assemble`].
pub fn simulate_ensemble<S: Dynamics + ?Sized>(src: &S, cfg: &SimConfig) -> Result<ParticleEnsemble> {
    let raws = (0..cfg.n_particles).map(|i| simulate_particle(src, cfg, i)).collect::<Result<Vec<_>>>()?;
    assemble(src, cfg, raws)
}
