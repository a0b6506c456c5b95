//! JSON run configuration.

use std::path::{Path, PathBuf};

use mimic_core::kernel::Atom;
use mimic_core::projector::ConditioningScheme;
use mimic_core::scenario::Scenario;
use mimic_core::updating::UpdatingKind;
use mimic_core::validator::Tolerances;
use mimic_core::{TimeGrid, Truncation};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub xi: Vec<f64>,
    pub rate: f64,
}

fn half() -> f64 {
    0.5
}
fn one() -> f64 {
    1.0
}
fn four() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSpec {
    RandomDriftSign,
    MixedPoisson {
        #[serde(default = "half")]
        p: f64,
        #[serde(default = "one")]
        lambda1: f64,
        #[serde(default = "four")]
        lambda2: f64,
    },
    SupDependentVol,
    IteratedIntegral {
        #[serde(default = "one")]
        lambda: f64,
        #[serde(default = "half")]
        mu: f64,
    },
    Constant {
        b: Vec<f64>,
        c: Vec<f64>,
        #[serde(default)]
        atoms: Vec<AtomSpec>,
        #[serde(default = "default_phi")]
        phi: String,
        z0: Vec<f64>,
        #[serde(default)]
        truncation: Option<String>,
    },
}

fn default_phi() -> String {
    "process_itself".into()
}

impl ScenarioSpec {
    pub fn build(&self) -> CliResult<Scenario> {
        let bad = |e: mimic_core::Error| CliError::usage(format!("invalid scenario: {e}"));
        match self {
            ScenarioSpec::RandomDriftSign => Ok(Scenario::random_drift_sign()),
            ScenarioSpec::MixedPoisson { p, lambda1, lambda2 } => Scenario::mixed_poisson(*p, *lambda1, *lambda2).map_err(bad),
            ScenarioSpec::SupDependentVol => Ok(Scenario::sup_dependent_vol()),
            ScenarioSpec::IteratedIntegral { lambda, mu } => Scenario::iterated_integral(*lambda, *mu).map_err(bad),
            ScenarioSpec::Constant { b, c, atoms, phi, z0, truncation } => {
                let phi = UpdatingKind::from_name(phi).map_err(bad)?;
                let truncation = match truncation {
                    Some(tag) => Truncation::from_tag(tag).map_err(bad)?,
                    None => Truncation::default(),
                };
                let atoms = atoms.iter().map(|a| Atom::new(a.xi.clone(), a.rate)).collect();
                Scenario::constant(b.clone(), c.clone(), atoms, phi, z0.clone(), truncation).map_err(bad)
            }
        }
    }
}

fn default_particles() -> usize {
    10_000
}
fn default_dt() -> f64 {
    1.0 / 256.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(default = "default_particles")]
    pub n_particles: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self { n_particles: default_particles(), dt: default_dt(), horizon: 1.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditioningSpec {
    pub stride: usize,
    pub n_bins: usize,
    pub min_bin_count: usize,
    pub degenerate_threshold: f64,
}

impl Default for ConditioningSpec {
    fn default() -> Self {
        let s = ConditioningScheme::default();
        Self { stride: s.stride, n_bins: s.n_bins, min_bin_count: s.min_bin_count, degenerate_threshold: s.degenerate_threshold }
    }
}

impl ConditioningSpec {
    pub fn scheme(&self) -> ConditioningScheme {
        ConditioningScheme {
            stride: self.stride,
            n_bins: self.n_bins,
            min_bin_count: self.min_bin_count,
            degenerate_threshold: self.degenerate_threshold,
        }
    }
}

fn default_times() -> Vec<f64> {
    vec![0.5, 1.0]
}
fn default_windows() -> usize {
    20
}
fn default_max_z() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSpec {
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    /// KS tolerance; absent means critical value at α = 0.01 plus 0.005.
    #[serde(default)]
    pub ks_tolerance: Option<f64>,
    #[serde(default)]
    pub tv_tolerance: Option<f64>,
    #[serde(default)]
    pub w1_tolerance: Option<f64>,
    #[serde(default = "default_windows")]
    pub windows: usize,
    #[serde(default = "default_max_z")]
    pub max_abs_z: f64,
    /// Make martingale z-scores part of the pass/fail decision.
    #[serde(default)]
    pub gate_martingale: bool,
}

impl Default for ValidationSpec {
    fn default() -> Self {
        Self {
            times: default_times(),
            ks_tolerance: None,
            tv_tolerance: None,
            w1_tolerance: None,
            windows: default_windows(),
            max_abs_z: default_max_z(),
            gate_martingale: false,
        }
    }
}

impl ValidationSpec {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances { ks: self.ks_tolerance, tv: self.tv_tolerance, w1: self.w1_tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub sim: SimSpec,
    #[serde(default)]
    pub conditioning: ConditioningSpec,
    #[serde(default)]
    pub validation: ValidationSpec,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub use_oracle: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig =
            serde_json::from_slice(&bytes).map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?;
        cfg.check()?;
        Ok((cfg, bytes))
    }

    pub fn check(&self) -> CliResult<()> {
        if self.sim.n_particles == 0 {
            return Err(CliError::usage("n_particles must be positive"));
        }
        self.grid()?;
        self.conditioning.scheme().validate().map_err(CliError::usage)?;
        let positive = |v: Option<f64>| v.is_none_or(|x| x > 0.0);
        if !positive(self.validation.ks_tolerance)
            || !positive(self.validation.tv_tolerance)
            || !positive(self.validation.w1_tolerance)
            || !(self.validation.max_abs_z > 0.0)
        {
            return Err(CliError::usage("tolerances must be positive"));
        }
        if self.validation.windows == 0 {
            return Err(CliError::usage("window count must be positive"));
        }
        self.scenario.build()?;
        Ok(())
    }

    pub fn grid(&self) -> CliResult<TimeGrid> {
        TimeGrid::with_horizon(self.sim.dt, self.sim.horizon).map_err(|e| CliError::usage(format!("invalid grid: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let cfg: RunConfig = serde_json::from_str(r#"{"scenario": {"name": "mixed_poisson"}}"#).unwrap();
        assert_eq!(cfg.scenario, ScenarioSpec::MixedPoisson { p: 0.5, lambda1: 1.0, lambda2: 4.0 });
        assert_eq!(cfg.sim.dt, 1.0 / 256.0);
        cfg.check().unwrap();
    }

    #[test]
    fn rejects_unknown_scenario() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"scenario": {"name": "heston"}}"#).is_err());
    }

    #[test]
    fn rejects_invalid_parameters() {
        let cfg: RunConfig = serde_json::from_str(r#"{"scenario": {"name": "mixed_poisson", "p": 2.0}}"#).unwrap();
        assert!(matches!(cfg.check(), Err(CliError::Usage(_))));
    }
}
