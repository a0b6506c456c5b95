//! Thread-parallel drivers. Work items are independent and results are
//! gathered in index order, so the output does not depend on the pool size.

use mimic_core::ensemble::{ParticleEnsemble, SimConfig};
use mimic_core::projector::{assemble_projection, estimate_slice, ConditioningScheme, ProjectedCharacteristics};
use mimic_core::scenario::Dynamics;
use mimic_core::simulate::{assemble, simulate_particle};
use mimic_core::Result;
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

/// A pool with `threads` workers, or one per available core.
pub fn pool(threads: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be positive"));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(CliError::runtime)
}

pub fn simulate<S: Dynamics + ?Sized>(pool: &rayon::ThreadPool, src: &S, cfg: &SimConfig) -> Result<ParticleEnsemble> {
    let raws = pool
        .install(|| (0..cfg.n_particles).into_par_iter().map(|i| simulate_particle(src, cfg, i)).collect::<Result<Vec<_>>>())?;
    assemble(src, cfg, raws)
}

pub fn project(
    pool: &rayon::ThreadPool,
    ens: &ParticleEnsemble,
    scheme: &ConditioningScheme,
) -> Result<ProjectedCharacteristics> {
    let steps = scheme.slice_steps(ens.grid());
    let raw = pool.install(|| steps.par_iter().map(|s| estimate_slice(ens, scheme, *s)).collect::<Result<Vec<_>>>())?;
    assemble_projection(ens, scheme, raw)
}
