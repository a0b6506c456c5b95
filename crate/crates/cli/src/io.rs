//! CSV and manifest formats for ensembles, projections and reports.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! a file back reproduces every value bit for bit.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use mimic_core::ensemble::{CharTrack, Diagnostics, ParticleEnsemble, ParticleTrack, SimConfig};
use mimic_core::kernel::KernelRegistry;
use mimic_core::path::Jump;
use mimic_core::projector::{
    Axis, BinEstimate, ConditioningScheme, MixtureKernel, MixtureMember, ProjectedCharacteristics, SliceTable,
};
use mimic_core::scenario::SourceKind;
use mimic_core::updating::{UpdatingFunction, UpdatingKind};
use mimic_core::validator::{MarginalReport, MartingaleReport};
use mimic_core::{Atom, CadlagPath, LevyKernel, TimeGrid, Truncation};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";
pub const ENSEMBLE: &str = "ensemble.csv";
pub const JUMPS: &str = "jumps.csv";
pub const KERNELS: &str = "kernels.csv";
pub const PROJECTION: &str = "projection.csv";
pub const MIXTURE: &str = "mixture.csv";
pub const MARGINAL_REPORT: &str = "marginal_report.csv";
pub const MARTINGALE_REPORT: &str = "martingale_report.csv";
pub const SUMMARY: &str = "summary.txt";

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::runtime(format!("{}: {e}", path.display()))
}

fn bad_input(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::usage(format!("{}: {msg}", path.display()))
}

fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| CliError::usage(format!("cannot open {}: {e}", path.display())))
}

fn fmt(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let mut f = open(path)?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| io_err(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

// ---------------------------------------------------------------- manifest

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub steps: u64,
    pub rate_warnings: u64,
    pub fallback_steps: u64,
}

impl From<&Diagnostics> for DiagnosticsRecord {
    fn from(d: &Diagnostics) -> Self {
        Self { steps: d.steps, rate_warnings: d.rate_warnings, fallback_steps: d.fallback_steps }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMeta {
    pub label: String,
    pub source_kind: String,
    pub n_particles: usize,
    pub dt: f64,
    pub n_steps: usize,
    pub horizon: f64,
    pub seed: u64,
    pub phi: String,
    pub noise_dim: usize,
    pub state_dim: usize,
    pub z0: Vec<f64>,
    pub truncation: String,
    pub stores_characteristics: bool,
    pub diagnostics: DiagnosticsRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionMeta {
    pub dt: f64,
    pub n_steps: usize,
    pub state_dim: usize,
    pub noise_dim: usize,
    pub truncation: String,
    pub stride: usize,
    pub n_bins: usize,
    pub min_bin_count: usize,
    pub degenerate_threshold: f64,
    pub slices: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationMeta {
    pub passed: bool,
    pub marginal_rows: usize,
    pub martingale_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Artifact {
    Ensemble(EnsembleMeta),
    Projection(ProjectionMeta),
    Validation(ValidationMeta),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub config_sha256: String,
    /// Input files by role, with their SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub artifact: Artifact,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(self).map_err(|e| io_err(&path, e))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))
    }

    pub fn read(dir: &Path) -> CliResult<Self> {
        let path = dir.join(MANIFEST);
        let f = open(&path)?;
        serde_json::from_reader(BufReader::new(f)).map_err(|e| bad_input(&path, e))
    }
}

/// SHA-256 of every listed file that exists in `dir`, keyed `role/name`.
pub fn hash_inputs(role: &str, dir: &Path, names: &[&str], out: &mut BTreeMap<String, String>) -> CliResult<()> {
    for name in names {
        let p = dir.join(name);
        if p.exists() {
            out.insert(format!("{role}/{name}"), sha256_file(&p)?);
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- csv helpers

struct CsvOut {
    path: PathBuf,
    w: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    fn create(path: PathBuf) -> CliResult<Self> {
        let f = File::create(&path).map_err(|e| io_err(&path, e))?;
        Ok(Self { w: csv::Writer::from_writer(BufWriter::new(f)), path })
    }

    fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields).map_err(|e| io_err(&self.path, e))
    }

    fn finish(mut self) -> CliResult<()> {
        self.w.flush().map_err(|e| io_err(&self.path, e))
    }
}

struct CsvIn {
    path: PathBuf,
    r: csv::Reader<BufReader<File>>,
    header: Vec<String>,
}

impl CsvIn {
    fn open(path: PathBuf) -> CliResult<Self> {
        let f = open(&path)?;
        let mut r = csv::Reader::from_reader(BufReader::new(f));
        let header = r.headers().map_err(|e| bad_input(&path, e))?.iter().map(String::from).collect();
        Ok(Self { path, r, header })
    }

    fn count_prefix(&self, prefix: &str) -> usize {
        self.header.iter().filter(|h| h.starts_with(prefix)).count()
    }

    fn column(&self, name: &str) -> CliResult<usize> {
        self.header.iter().position(|h| h == name).ok_or_else(|| bad_input(&self.path, format!("missing column `{name}`")))
    }

    fn records(&mut self) -> impl Iterator<Item = CliResult<csv::StringRecord>> + '_ {
        let path = self.path.clone();
        self.r.records().map(move |r| r.map_err(|e| bad_input(&path, e)))
    }
}

fn parse<T: std::str::FromStr>(path: &Path, s: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e| bad_input(path, format!("cannot parse `{s}`: {e}")))
}

fn field<'a>(path: &Path, rec: &'a csv::StringRecord, i: usize) -> CliResult<&'a str> {
    rec.get(i).ok_or_else(|| bad_input(path, "short row"))
}

fn floats(path: &Path, rec: &csv::StringRecord, start: usize, n: usize) -> CliResult<Vec<f64>> {
    (start..start + n).map(|i| parse(path, field(path, rec, i)?)).collect()
}

fn c_headers(prefix: &str, d: usize) -> impl Iterator<Item = String> + '_ {
    (0..d).flat_map(move |r| (0..d).map(move |c| format!("{prefix}_{r}_{c}")))
}

// ---------------------------------------------------------------- kernels

/// One row per atom; a zero kernel is a single row with empty atom fields.
pub fn write_kernels(path: PathBuf, dim: usize, kernels: &KernelRegistry) -> CliResult<()> {
    let mut out = CsvOut::create(path.clone())?;
    let mut header = vec!["kernel_id".to_string(), "atom".into(), "rate".into()];
    header.extend((0..dim).map(|k| format!("xi_{k}")));
    out.row(&header)?;
    for (id, k) in kernels.kernels().iter().enumerate() {
        if k.has_density() {
            return Err(CliError::runtime("kernels with a density part cannot be exported"));
        }
        if k.atoms().is_empty() {
            let mut row = vec![id.to_string(), String::new(), String::new()];
            row.extend(std::iter::repeat_n(String::new(), dim));
            out.row(&row)?;
        }
        for (a, atom) in k.atoms().iter().enumerate() {
            let mut row = vec![id.to_string(), a.to_string(), fmt(atom.rate)];
            row.extend(atom.xi.iter().map(|v| fmt(*v)));
            out.row(&row)?;
        }
    }
    out.finish()
}

pub fn read_kernels(path: PathBuf, dim: usize) -> CliResult<KernelRegistry> {
    let mut input = CsvIn::open(path.clone())?;
    if input.count_prefix("xi_") != dim {
        return Err(bad_input(&path, "kernel dimension differs from the manifest"));
    }
    let mut groups: Vec<Vec<Atom>> = Vec::new();
    for rec in input.records() {
        let rec = rec?;
        let id: usize = parse(&path, field(&path, &rec, 0)?)?;
        if id == groups.len() {
            groups.push(Vec::new());
        } else if id + 1 != groups.len() {
            return Err(bad_input(&path, "kernel ids must be consecutive"));
        }
        if field(&path, &rec, 1)?.is_empty() {
            continue;
        }
        let rate = parse(&path, field(&path, &rec, 2)?)?;
        groups[id].push(Atom::new(floats(&path, &rec, 3, dim)?, rate));
    }
    let mut reg = KernelRegistry::new();
    for (id, atoms) in groups.into_iter().enumerate() {
        let k = if atoms.is_empty() {
            LevyKernel::zero(dim)
        } else {
            LevyKernel::atomic(dim, atoms).map_err(|e| bad_input(&path, e))?
        };
        if reg.intern(&k) as usize != id {
            return Err(bad_input(&path, "duplicate kernel"));
        }
    }
    Ok(reg)
}

// ---------------------------------------------------------------- ensembles

pub fn ensemble_meta(ens: &ParticleEnsemble) -> EnsembleMeta {
    let g = ens.grid();
    EnsembleMeta {
        label: ens.label().to_string(),
        source_kind: ens.kind().name().to_string(),
        n_particles: ens.len(),
        dt: g.dt(),
        n_steps: g.n_steps(),
        horizon: g.horizon(),
        seed: ens.config().seed,
        phi: ens.phi().kind().name().to_string(),
        noise_dim: ens.noise_dim(),
        state_dim: ens.state_dim(),
        z0: ens.z0().to_vec(),
        truncation: ens.truncation().tag(),
        stores_characteristics: ens.stores_characteristics(),
        diagnostics: ens.diagnostics().into(),
    }
}

/// Write `ensemble.csv`, `jumps.csv` and `kernels.csv`.
pub fn write_ensemble(dir: &Path, ens: &ParticleEnsemble) -> CliResult<()> {
    let (d, m) = (ens.noise_dim(), ens.state_dim());
    let grid = ens.grid();
    let kind = ens.kind().name();

    let mut out = CsvOut::create(dir.join(ENSEMBLE))?;
    let mut header = vec!["particle_id".to_string(), "t".into()];
    header.extend((0..m).map(|k| format!("z_{k}")));
    header.extend((0..d).map(|k| format!("y_{k}")));
    header.extend((0..d).map(|k| format!("b_{k}")));
    header.extend(c_headers("c", d));
    header.push("kernel_id".into());
    header.push("source_kind".into());
    out.row(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for (pid, p) in ens.particles().iter().enumerate() {
        for i in 0..grid.len() {
            row.clear();
            row.push(pid.to_string());
            row.push(fmt(grid.time(i)));
            row.extend(p.z.at(i).iter().map(|v| fmt(*v)));
            row.extend(p.y.at(i).iter().map(|v| fmt(*v)));
            match &p.chars {
                Some(ch) => {
                    row.extend(ch.b_at(i, d).iter().map(|v| fmt(*v)));
                    row.extend(ch.c_at(i, d).iter().map(|v| fmt(*v)));
                    row.push(ch.kernel_ids[i].to_string());
                }
                None => row.extend(std::iter::repeat_n(String::new(), d + d * d + 1)),
            }
            row.push(kind.to_string());
            out.row(&row)?;
        }
    }
    out.finish()?;

    let mut out = CsvOut::create(dir.join(JUMPS))?;
    let mut header = vec!["particle_id".to_string(), "step".into()];
    header.extend((0..d).map(|k| format!("delta_{k}")));
    out.row(&header)?;
    for (pid, p) in ens.particles().iter().enumerate() {
        for j in p.y.jumps() {
            let mut row = vec![pid.to_string(), j.index.to_string()];
            row.extend(j.delta.iter().map(|v| fmt(*v)));
            out.row(&row)?;
        }
    }
    out.finish()?;

    write_kernels(dir.join(KERNELS), d, ens.kernels())
}

/// Load an ensemble directory written by [`write_ensemble`] plus its manifest.
pub fn read_ensemble(dir: &Path) -> CliResult<ParticleEnsemble> {
    let manifest = Manifest::read(dir)?;
    let Artifact::Ensemble(meta) = manifest.artifact else {
        return Err(CliError::usage(format!("{} does not hold an ensemble", dir.display())));
    };
    let mpath = dir.join(MANIFEST);
    let bad = |e: mimic_core::Error| bad_input(&mpath, e);
    let grid = TimeGrid::new(meta.dt, meta.n_steps).map_err(bad)?;
    let kind = SourceKind::from_name(&meta.source_kind).map_err(bad)?;
    let phi = UpdatingFunction::builtin(UpdatingKind::from_name(&meta.phi).map_err(bad)?, meta.noise_dim).map_err(bad)?;
    if phi.state_dim() != meta.state_dim || meta.z0.len() != meta.state_dim {
        return Err(bad_input(&mpath, "state dimension is inconsistent"));
    }
    let truncation = Truncation::from_tag(&meta.truncation).map_err(bad)?;
    let mut config = SimConfig::new(meta.n_particles, grid, meta.seed).map_err(bad)?;
    config.store_characteristics = meta.stores_characteristics;
    let (d, m, n) = (meta.noise_dim, meta.state_dim, grid.len());

    let kernels = read_kernels(dir.join(KERNELS), d)?;

    let jpath = dir.join(JUMPS);
    let mut jumps: Vec<Vec<Jump>> = vec![Vec::new(); meta.n_particles];
    let mut input = CsvIn::open(jpath.clone())?;
    if input.count_prefix("delta_") != d {
        return Err(bad_input(&jpath, "jump dimension differs from the manifest"));
    }
    for rec in input.records() {
        let rec = rec?;
        let pid: usize = parse(&jpath, field(&jpath, &rec, 0)?)?;
        let index = parse(&jpath, field(&jpath, &rec, 1)?)?;
        let delta = floats(&jpath, &rec, 2, d)?;
        jumps.get_mut(pid).ok_or_else(|| bad_input(&jpath, "particle id out of range"))?.push(Jump { index, delta });
    }

    let epath = dir.join(ENSEMBLE);
    let mut input = CsvIn::open(epath.clone())?;
    let z_col = input.column("z_0")?;
    let y_col = input.column("y_0")?;
    let b_col = input.column("b_0")?;
    let k_col = input.column("kernel_id")?;
    if input.count_prefix("z_") != m || input.count_prefix("y_") != d {
        return Err(bad_input(&epath, "columns differ from the manifest dimensions"));
    }
    let c_col = b_col + d;
    let mut particles = Vec::with_capacity(meta.n_particles);
    let mut rows = input.records();
    let mut jumps = jumps.into_iter();
    for pid in 0..meta.n_particles {
        let mut z = Vec::with_capacity(n * m);
        let mut y = Vec::with_capacity(n * d);
        let mut ch = CharTrack { b: Vec::new(), c: Vec::new(), kernel_ids: Vec::new() };
        for i in 0..n {
            let rec = rows.next().ok_or_else(|| bad_input(&epath, "fewer rows than particles × grid times"))??;
            let p: usize = parse(&epath, field(&epath, &rec, 0)?)?;
            let t: f64 = parse(&epath, field(&epath, &rec, 1)?)?;
            if p != pid || t != grid.time(i) {
                return Err(bad_input(&epath, format!("unexpected row for particle {p} at t = {t}")));
            }
            z.extend(floats(&epath, &rec, z_col, m)?);
            y.extend(floats(&epath, &rec, y_col, d)?);
            if config.store_characteristics {
                ch.b.extend(floats(&epath, &rec, b_col, d)?);
                ch.c.extend(floats(&epath, &rec, c_col, d * d)?);
                ch.kernel_ids.push(parse(&epath, field(&epath, &rec, k_col)?)?);
            }
        }
        let bad = |e: mimic_core::Error| bad_input(&epath, e);
        particles.push(ParticleTrack {
            z: CadlagPath::new(grid, m, z, Vec::new()).map_err(bad)?,
            y: CadlagPath::new(grid, d, y, jumps.next().unwrap_or_default()).map_err(bad)?,
            latent: Vec::new(),
            chars: config.store_characteristics.then_some(ch),
        });
    }
    if rows.next().is_some() {
        return Err(bad_input(&epath, "more rows than particles × grid times"));
    }
    let diagnostics = Diagnostics {
        steps: meta.diagnostics.steps,
        rate_warnings: meta.diagnostics.rate_warnings,
        fallback_steps: meta.diagnostics.fallback_steps,
    };
    ParticleEnsemble::from_parts(meta.label, kind, config, phi, meta.z0, truncation, particles, kernels, diagnostics)
        .map_err(|e| bad_input(dir, e))
}

// ---------------------------------------------------------------- projections

pub fn projection_meta(p: &ProjectedCharacteristics) -> ProjectionMeta {
    let s = p.scheme();
    ProjectionMeta {
        dt: p.grid().dt(),
        n_steps: p.grid().n_steps(),
        state_dim: p.state_dim(),
        noise_dim: p.noise_dim(),
        truncation: p.truncation().tag(),
        stride: s.stride,
        n_bins: s.n_bins,
        min_bin_count: s.min_bin_count,
        degenerate_threshold: s.degenerate_threshold,
        slices: p.slices().len(),
    }
}

/// Write `projection.csv` (one row per cell), `mixture.csv` and `kernels.csv`.
pub fn write_projection(dir: &Path, p: &ProjectedCharacteristics) -> CliResult<()> {
    let (d, m) = (p.noise_dim(), p.state_dim());
    let grid = p.grid();

    let mut out = CsvOut::create(dir.join(PROJECTION))?;
    let mut header = vec!["t".to_string(), "step".into(), "cell_id".into(), "bin_id".into()];
    header.extend((0..m).map(|k| format!("bin_lo_{k}")));
    header.extend((0..m).map(|k| format!("bin_hi_{k}")));
    header.extend((0..d).map(|k| format!("b_hat_{k}")));
    header.extend(c_headers("c_hat", d));
    header.extend(["mixture_size".into(), "total_rate".into(), "cell_count".into(), "bin_count".into()]);
    header.extend((0..m).map(|k| format!("centroid_{k}")));
    header.push("clip_perturbation".into());
    out.row(&header)?;
    for s in p.slices() {
        for (ci, cell) in s.cells.iter().enumerate() {
            let bin = &s.bins[cell.bin];
            let mut row = vec![fmt(grid.time(s.step)), s.step.to_string(), ci.to_string(), cell.bin.to_string()];
            row.extend(cell.lo.iter().chain(&cell.hi).chain(&bin.b).chain(&bin.c).map(|v| fmt(*v)));
            row.push(bin.mixture.members().len().to_string());
            row.push(fmt(bin.mixture.total_rate()));
            row.push(cell.count.to_string());
            row.push(bin.count.to_string());
            row.extend(bin.centroid.iter().map(|v| fmt(*v)));
            row.push(fmt(bin.clip_perturbation));
            out.row(&row)?;
        }
    }
    out.finish()?;

    let mut out = CsvOut::create(dir.join(MIXTURE))?;
    out.row(["t", "step", "bin_id", "member_kernel_id", "weight"])?;
    for s in p.slices() {
        for (bi, bin) in s.bins.iter().enumerate() {
            for mm in bin.mixture.members() {
                out.row([fmt(grid.time(s.step)), s.step.to_string(), bi.to_string(), mm.id.to_string(), fmt(mm.weight)])?;
            }
        }
    }
    out.finish()?;

    write_kernels(dir.join(KERNELS), d, p.kernels())
}

struct BinRow {
    count: usize,
    centroid: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    clip: f64,
}

struct CellRow {
    lo: Vec<f64>,
    hi: Vec<f64>,
    count: usize,
    bin: usize,
}

pub fn read_projection(dir: &Path) -> CliResult<ProjectedCharacteristics> {
    let manifest = Manifest::read(dir)?;
    let Artifact::Projection(meta) = manifest.artifact else {
        return Err(CliError::usage(format!("{} does not hold a projection", dir.display())));
    };
    let mpath = dir.join(MANIFEST);
    let bad = |e: mimic_core::Error| bad_input(&mpath, e);
    let grid = TimeGrid::new(meta.dt, meta.n_steps).map_err(bad)?;
    let truncation = Truncation::from_tag(&meta.truncation).map_err(bad)?;
    let scheme = ConditioningScheme {
        stride: meta.stride,
        n_bins: meta.n_bins,
        min_bin_count: meta.min_bin_count,
        degenerate_threshold: meta.degenerate_threshold,
    };
    scheme.validate().map_err(bad)?;
    let (d, m) = (meta.noise_dim, meta.state_dim);
    let kernels = read_kernels(dir.join(KERNELS), d)?;

    let ppath = dir.join(PROJECTION);
    let mut input = CsvIn::open(ppath.clone())?;
    if input.count_prefix("bin_lo_") != m || input.count_prefix("b_hat_") != d {
        return Err(bad_input(&ppath, "columns differ from the manifest dimensions"));
    }
    let lo_col = input.column("bin_lo_0")?;
    let b_col = input.column("b_hat_0")?;
    let cc_col = input.column("cell_count")?;
    let clip_col = input.column("clip_perturbation")?;
    // step -> (cells in order, bins by id)
    let mut slices: BTreeMap<usize, (Vec<CellRow>, BTreeMap<usize, BinRow>)> = BTreeMap::new();
    for rec in input.records() {
        let rec = rec?;
        let step: usize = parse(&ppath, field(&ppath, &rec, 1)?)?;
        let cell_id: usize = parse(&ppath, field(&ppath, &rec, 2)?)?;
        let bin: usize = parse(&ppath, field(&ppath, &rec, 3)?)?;
        let entry = slices.entry(step).or_default();
        if cell_id != entry.0.len() {
            return Err(bad_input(&ppath, "cell ids must be consecutive within a slice"));
        }
        let count = parse(&ppath, field(&ppath, &rec, cc_col)?)?;
        entry.0.push(CellRow { lo: floats(&ppath, &rec, lo_col, m)?, hi: floats(&ppath, &rec, lo_col + m, m)?, count, bin });
        let row = BinRow {
            count: parse(&ppath, field(&ppath, &rec, cc_col + 1)?)?,
            centroid: floats(&ppath, &rec, cc_col + 2, m)?,
            b: floats(&ppath, &rec, b_col, d)?,
            c: floats(&ppath, &rec, b_col + d, d * d)?,
            clip: parse(&ppath, field(&ppath, &rec, clip_col)?)?,
        };
        entry.1.entry(bin).or_insert(row);
    }

    let xpath = dir.join(MIXTURE);
    let mut members: BTreeMap<(usize, usize), Vec<MixtureMember>> = BTreeMap::new();
    let mut input = CsvIn::open(xpath.clone())?;
    for rec in input.records() {
        let rec = rec?;
        let step = parse(&xpath, field(&xpath, &rec, 1)?)?;
        let bin = parse(&xpath, field(&xpath, &rec, 2)?)?;
        let id: u32 = parse(&xpath, field(&xpath, &rec, 3)?)?;
        let weight = parse(&xpath, field(&xpath, &rec, 4)?)?;
        let kernel = kernels.get(id).ok_or_else(|| bad_input(&xpath, "unknown member kernel"))?.clone();
        members.entry((step, bin)).or_default().push(MixtureMember { id, kernel, weight });
    }

    let mut tables = Vec::with_capacity(slices.len());
    for (step, (cells, bins)) in slices {
        if bins.keys().copied().ne(0..bins.len()) {
            return Err(bad_input(&ppath, "bin ids must be consecutive within a slice"));
        }
        let mut estimates = Vec::with_capacity(bins.len());
        for (bi, row) in bins {
            let mm = members.remove(&(step, bi)).ok_or_else(|| bad_input(&xpath, "bin without mixture members"))?;
            estimates.push(BinEstimate {
                count: row.count,
                centroid: row.centroid,
                b: row.b,
                c: row.c,
                clip_perturbation: row.clip,
                mixture: MixtureKernel::new(d, mm).map_err(|e| bad_input(&xpath, e))?,
            });
        }
        let axes = (0..m)
            .map(|k| Axis::from_cell_bounds(cells.iter().map(|c| c.lo[k]).collect(), cells.iter().map(|c| c.hi[k]).collect()))
            .collect::<mimic_core::Result<Vec<_>>>()
            .map_err(|e| bad_input(&ppath, e))?;
        let occupied: Vec<(usize, usize, usize)> =
            cells.iter().enumerate().filter(|(_, c)| c.count > 0).map(|(k, c)| (k, c.count, c.bin)).collect();
        let table = SliceTable::new(step, axes, &occupied, estimates).map_err(|e| bad_input(&ppath, e))?;
        if table.cells.len() != cells.len() || table.cells.iter().zip(&cells).any(|(a, b)| a.bin != b.bin) {
            return Err(bad_input(&ppath, "cell table is inconsistent with its bins"));
        }
        tables.push(table);
    }
    if !members.is_empty() {
        return Err(bad_input(&xpath, "mixture rows refer to unknown bins"));
    }
    ProjectedCharacteristics::from_parts(grid, m, d, truncation, scheme, tables, kernels).map_err(|e| bad_input(dir, e))
}

// ---------------------------------------------------------------- reports

pub fn write_marginal_report(path: PathBuf, report: &MarginalReport) -> CliResult<()> {
    let mut out = CsvOut::create(path)?;
    out.row(["t", "coord", "n_a", "n_b", "ks", "ks_tol", "w1", "tv", "pass"])?;
    for r in &report.rows {
        out.row([
            fmt(r.t),
            r.coord.to_string(),
            r.n_a.to_string(),
            r.n_b.to_string(),
            fmt(r.ks),
            fmt(r.ks_tol),
            fmt(r.w1),
            opt(r.tv),
            if r.pass { "PASS".into() } else { "FAIL".into() },
        ])?;
    }
    out.finish()
}

pub fn write_martingale_report(path: PathBuf, reports: &[(&str, &MartingaleReport)]) -> CliResult<()> {
    let mut out = CsvOut::create(path)?;
    out.row(["ensemble", "process", "component", "start", "end", "mean", "se", "z"])?;
    for (name, report) in reports {
        for r in &report.rows {
            out.row([
                name.to_string(),
                r.process.name().to_string(),
                r.component.clone(),
                fmt(r.start),
                fmt(r.end),
                fmt(r.mean),
                fmt(r.se),
                fmt(r.z),
            ])?;
        }
    }
    out.finish()
}

pub fn write_text(path: PathBuf, text: &str) -> CliResult<()> {
    let f = File::create(&path).map_err(|e| io_err(&path, e))?;
    let mut w = BufWriter::new(f);
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| io_err(&path, e))
}
