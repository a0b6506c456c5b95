use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use mimic_core::ensemble::{ParticleEnsemble, SimConfig};
use mimic_core::family::TestFunctionFamily;
use mimic_core::mimic::MimicSource;
use mimic_core::projector::ProjectedCharacteristics;
use mimic_core::scenario::{Dynamics, Scenario};
use mimic_core::validator::{compare_marginals, equal_windows, martingale_residuals, MarginalReport, MartingaleReport};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{self, Artifact, Manifest, ValidationMeta};
use crate::parallel;

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Simulate,
    Project { ensemble: PathBuf },
    Mimic { projection: Option<PathBuf> },
    Validate { a: PathBuf, b: PathBuf },
    Pipeline,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Project { .. } => "project",
            Command::Mimic { .. } => "mimic",
            Command::Validate { .. } => "validate",
            Command::Pipeline => "pipeline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Options {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub oracle: bool,
}

struct Ctx {
    cfg: RunConfig,
    config_value: serde_json::Value,
    config_sha256: String,
    seed: u64,
    pool: rayon::ThreadPool,
    command: &'static str,
}

impl Ctx {
    fn manifest(&self, inputs: BTreeMap<String, String>, artifact: Artifact) -> Manifest {
        Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command.into(),
            seed: self.seed,
            config: self.config_value.clone(),
            config_sha256: self.config_sha256.clone(),
            inputs,
            artifact,
        }
    }

    fn config_inputs(&self) -> BTreeMap<String, String> {
        BTreeMap::from([("config".to_string(), self.config_sha256.clone())])
    }

    fn sim_config(&self) -> CliResult<SimConfig> {
        Ok(SimConfig::new(self.cfg.sim.n_particles, self.cfg.grid()?, self.seed)?)
    }

    fn oracle(&self, flag: bool) -> bool {
        flag || self.cfg.use_oracle
    }
}

fn out_dir(opts: &Options, cfg: &RunConfig) -> CliResult<PathBuf> {
    let dir = opts
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| CliError::usage("no output directory: pass --out or set output_dir"))?;
    create_dir(&dir)?;
    Ok(dir)
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("cannot create {}: {e}", dir.display())))
}

/// Run one command. `Ok` means success; validation failures come back as
/// [`CliError::ValidationFailed`] after all reports are written.
pub fn run(cmd: &Command, opts: &Options) -> CliResult<()> {
    let (cfg, bytes) = RunConfig::load(&opts.config)?;
    let config_value = serde_json::from_slice(&bytes).map_err(CliError::usage)?;
    let ctx = Ctx {
        seed: opts.seed.unwrap_or(cfg.sim.seed),
        config_sha256: io::sha256_bytes(&bytes),
        config_value,
        pool: parallel::pool(opts.threads)?,
        command: cmd.name(),
        cfg,
    };
    let out = out_dir(opts, &ctx.cfg)?;
    match cmd {
        Command::Simulate => {
            let scenario = ctx.cfg.scenario.build()?;
            let ens = simulate_source(&ctx, &scenario)?;
            save_ensemble(&ctx, &out, &ens, ctx.config_inputs())
        }
        Command::Project { ensemble } => {
            let ens = io::read_ensemble(ensemble)?;
            let proj = parallel::project(&ctx.pool, &ens, &ctx.cfg.conditioning.scheme())?;
            let mut inputs = ctx.config_inputs();
            io::hash_inputs("ensemble", ensemble, &[io::MANIFEST, io::ENSEMBLE, io::JUMPS, io::KERNELS], &mut inputs)?;
            save_projection(&ctx, &out, &proj, inputs)
        }
        Command::Mimic { projection } => {
            let scenario = ctx.cfg.scenario.build()?;
            let mut inputs = ctx.config_inputs();
            let src = if ctx.oracle(opts.oracle) {
                MimicSource::oracle(&scenario)?
            } else {
                let dir = projection.as_ref().ok_or_else(|| CliError::usage("mimic needs a projection directory or --oracle"))?;
                let proj = io::read_projection(dir)?;
                io::hash_inputs("projection", dir, &[io::MANIFEST, io::PROJECTION, io::MIXTURE, io::KERNELS], &mut inputs)?;
                estimated_source(&ctx, &scenario, proj)?
            };
            let ens = parallel::simulate(&ctx.pool, &src, &ctx.sim_config()?)?;
            save_ensemble(&ctx, &out, &ens, inputs)
        }
        Command::Validate { a, b } => {
            let ea = io::read_ensemble(a)?;
            let eb = io::read_ensemble(b)?;
            let mut inputs = ctx.config_inputs();
            for (role, dir) in [("a", a), ("b", b)] {
                io::hash_inputs(role, dir, &[io::MANIFEST, io::ENSEMBLE, io::JUMPS, io::KERNELS], &mut inputs)?;
            }
            validate(&ctx, &out, &ea, &eb, inputs)
        }
        Command::Pipeline => pipeline(&ctx, &out, opts.oracle),
    }
}

fn simulate_source(ctx: &Ctx, scenario: &Scenario) -> CliResult<ParticleEnsemble> {
    Ok(parallel::simulate(&ctx.pool, scenario, &ctx.sim_config()?)?)
}

fn estimated_source(ctx: &Ctx, scenario: &Scenario, proj: ProjectedCharacteristics) -> CliResult<MimicSource> {
    if proj.grid() != &ctx.cfg.grid()? {
        return Err(CliError::usage("projection grid differs from the configured grid"));
    }
    let phi = scenario.updating();
    if proj.state_dim() != phi.state_dim()
        || proj.noise_dim() != phi.increment_dim()
        || proj.truncation() != scenario.truncation()
    {
        return Err(CliError::usage("projection does not match the configured scenario"));
    }
    Ok(MimicSource::estimated(scenario, Arc::new(proj))?)
}

fn save_ensemble(ctx: &Ctx, dir: &Path, ens: &ParticleEnsemble, inputs: BTreeMap<String, String>) -> CliResult<()> {
    io::write_ensemble(dir, ens)?;
    ctx.manifest(inputs, Artifact::Ensemble(io::ensemble_meta(ens))).write(dir)
}

fn save_projection(ctx: &Ctx, dir: &Path, p: &ProjectedCharacteristics, inputs: BTreeMap<String, String>) -> CliResult<()> {
    io::write_projection(dir, p)?;
    ctx.manifest(inputs, Artifact::Projection(io::projection_meta(p))).write(dir)
}

fn pipeline(ctx: &Ctx, out: &Path, oracle_flag: bool) -> CliResult<()> {
    let scenario = ctx.cfg.scenario.build()?;
    let (src_dir, proj_dir, mimic_dir, val_dir) =
        (out.join("source"), out.join("projection"), out.join("mimic"), out.join("validation"));
    for d in [&src_dir, &mimic_dir, &val_dir] {
        create_dir(d)?;
    }
    let source = simulate_source(ctx, &scenario)?;
    save_ensemble(ctx, &src_dir, &source, ctx.config_inputs())?;
    let ensemble_files = [io::MANIFEST, io::ENSEMBLE, io::JUMPS, io::KERNELS];

    let mut mimic_inputs = ctx.config_inputs();
    let src = if ctx.oracle(oracle_flag) {
        MimicSource::oracle(&scenario)?
    } else {
        create_dir(&proj_dir)?;
        let proj = parallel::project(&ctx.pool, &source, &ctx.cfg.conditioning.scheme())?;
        let mut inputs = ctx.config_inputs();
        io::hash_inputs("ensemble", &src_dir, &ensemble_files, &mut inputs)?;
        save_projection(ctx, &proj_dir, &proj, inputs)?;
        io::hash_inputs("projection", &proj_dir, &[io::MANIFEST, io::PROJECTION, io::MIXTURE, io::KERNELS], &mut mimic_inputs)?;
        estimated_source(ctx, &scenario, proj)?
    };
    let mimic = parallel::simulate(&ctx.pool, &src, &ctx.sim_config()?)?;
    save_ensemble(ctx, &mimic_dir, &mimic, mimic_inputs)?;

    let mut inputs = ctx.config_inputs();
    io::hash_inputs("a", &src_dir, &ensemble_files, &mut inputs)?;
    io::hash_inputs("b", &mimic_dir, &ensemble_files, &mut inputs)?;
    validate(ctx, &val_dir, &source, &mimic, inputs)
}

fn residuals(ctx: &Ctx, ens: &ParticleEnsemble) -> CliResult<Option<MartingaleReport>> {
    if !ens.stores_characteristics() {
        return Ok(None);
    }
    let family = TestFunctionFamily::standard(ens.noise_dim(), ens.truncation());
    let windows = equal_windows(ens.grid(), ctx.cfg.validation.windows);
    Ok(Some(martingale_residuals(ens, &family, &windows)?))
}

fn validate(
    ctx: &Ctx,
    dir: &Path,
    a: &ParticleEnsemble,
    b: &ParticleEnsemble,
    inputs: BTreeMap<String, String>,
) -> CliResult<()> {
    if a.state_dim() != b.state_dim() {
        return Err(CliError::usage(format!("state dimensions differ: {} vs {}", a.state_dim(), b.state_dim())));
    }
    let v = &ctx.cfg.validation;
    let marginals = compare_marginals(a, b, &v.times, &v.tolerances())?;
    let (ra, rb) = (residuals(ctx, a)?, residuals(ctx, b)?);
    let mut named: Vec<(&str, &MartingaleReport)> = Vec::new();
    if let Some(r) = &ra {
        named.push(("a", r));
    }
    if let Some(r) = &rb {
        named.push(("b", r));
    }

    let (summary, passed) = summarize(ctx, a, b, &marginals, &named);
    io::write_marginal_report(dir.join(io::MARGINAL_REPORT), &marginals)?;
    io::write_martingale_report(dir.join(io::MARTINGALE_REPORT), &named)?;
    io::write_text(dir.join(io::SUMMARY), &summary)?;
    let meta = ValidationMeta {
        passed,
        marginal_rows: marginals.rows.len(),
        martingale_rows: named.iter().map(|(_, r)| r.rows.len()).sum(),
    };
    ctx.manifest(inputs, Artifact::Validation(meta)).write(dir)?;
    if passed {
        Ok(())
    } else {
        Err(CliError::ValidationFailed)
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn summarize(
    ctx: &Ctx,
    a: &ParticleEnsemble,
    b: &ParticleEnsemble,
    marginals: &MarginalReport,
    residuals: &[(&str, &MartingaleReport)],
) -> (String, bool) {
    let v = &ctx.cfg.validation;
    let mut s = String::new();
    let mut passed = marginals.passed();
    for (name, e) in [("a", a), ("b", b)] {
        let diag = e.diagnostics();
        let _ = writeln!(
            s,
            "ensemble {name}: {} ({}), N = {}, rate warnings = {}, fallback steps = {}",
            e.label(),
            e.kind().name(),
            e.len(),
            diag.rate_warnings,
            diag.fallback_steps
        );
        if diag.flagged() {
            let _ = writeln!(s, "WARN ensemble {name}: {:.3}% of steps used a fallback bin", 100.0 * diag.fallback_fraction());
        }
    }
    for r in &marginals.rows {
        let _ = write!(
            s,
            "{} marginal t={} coord={} ks={:.5} tol={:.5} w1={:.5}",
            verdict(r.pass),
            r.t,
            r.coord,
            r.ks,
            r.ks_tol,
            r.w1
        );
        if let Some(tv) = r.tv {
            let _ = write!(s, " tv={tv:.5}");
        }
        s.push('\n');
    }
    for (name, r) in residuals {
        let z = r.max_abs_z();
        let ok = z <= v.max_abs_z;
        let tag = if v.gate_martingale {
            passed &= ok;
            verdict(ok)
        } else {
            "INFO"
        };
        let _ = writeln!(s, "{tag} martingale {name}: max |z| = {z:.3} (limit {})", v.max_abs_z);
    }
    let _ = writeln!(s, "RESULT {}", verdict(passed));
    (s, passed)
}
