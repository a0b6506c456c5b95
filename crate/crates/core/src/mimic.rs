//! Mimicking processes driven by oracle or estimated projected characteristics.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::ensemble::{ParticleEnsemble, SimConfig};
use crate::error::{arg, Result};
use crate::oracle::Oracle;
use crate::projector::ProjectedCharacteristics;
use crate::scenario::{CharacteristicRule, Dynamics, Scenario, SourceKind, StepChars};
use crate::simulate::simulate_ensemble;
use crate::truncation::Truncation;
use crate::updating::UpdatingFunction;

#[derive(Debug, Clone)]
pub enum MimicRule {
    Oracle(Oracle),
    Estimated(Arc<ProjectedCharacteristics>),
}

/// Markovian coefficients `(t, z) ↦ (b̂, ĉ, κ̂)` together with the updating
/// function and initial state of the source they were derived from.
#[derive(Debug, Clone)]
pub struct MimicSource {
    rule: MimicRule,
    phi: UpdatingFunction,
    z0: Vec<f64>,
    truncation: Truncation,
    label: String,
}

impl MimicSource {
    pub fn oracle(scenario: &Scenario) -> Result<Self> {
        Ok(Self {
            rule: MimicRule::Oracle(scenario.oracle()?),
            phi: scenario.updating(),
            z0: scenario.z0().to_vec(),
            truncation: scenario.truncation(),
            label: String::from(scenario.name()),
        })
    }

    pub fn estimated(scenario: &Scenario, projection: Arc<ProjectedCharacteristics>) -> Result<Self> {
        let phi = scenario.updating();
        if projection.state_dim() != phi.state_dim() || projection.noise_dim() != phi.increment_dim() {
            return arg("projection dimensions do not match the scenario");
        }
        if projection.truncation() != scenario.truncation() {
            return arg("projection was estimated under a different truncation function");
        }
        Ok(Self {
            rule: MimicRule::Estimated(projection),
            phi,
            z0: scenario.z0().to_vec(),
            truncation: scenario.truncation(),
            label: String::from(scenario.name()),
        })
    }

    pub fn rule(&self) -> &MimicRule {
        &self.rule
    }
}

impl CharacteristicRule for MimicSource {
    fn noise_dim(&self) -> usize {
        self.phi.increment_dim()
    }

    fn evaluate(&self, step: usize, t: f64, z: &[f64], latent: &[f64], out: &mut StepChars) -> Result<()> {
        match &self.rule {
            MimicRule::Oracle(o) => o.evaluate(step, t, z, latent, out),
            MimicRule::Estimated(p) => p.evaluate(step, t, z, latent, out),
        }
    }
}

impl Dynamics for MimicSource {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn kind(&self) -> SourceKind {
        match self.rule {
            MimicRule::Oracle(_) => SourceKind::Oracle,
            MimicRule::Estimated(_) => SourceKind::Estimated,
        }
    }

    fn phi(&self) -> UpdatingFunction {
        self.phi
    }

    fn initial_state(&self) -> &[f64] {
        &self.z0
    }

    fn truncation(&self) -> Truncation {
        self.truncation
    }

    fn sample_latent(&self, _rng: &mut dyn rand::RngCore) -> Vec<f64> {
        Vec::new()
    }
}

pub fn simulate_mimic(src: &MimicSource, cfg: &SimConfig) -> Result<ParticleEnsemble> {
    simulate_ensemble(src, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StructureReport {
    pub jumps: usize,
    pub violations: usize,
    pub max_error: f64,
}

impl StructureReport {
    pub fn violation_fraction(&self) -> f64 {
        if self.jumps == 0 {
            0.0
        } else {
            self.violations as f64 / self.jumps as f64
        }
    }
}

pub const STRUCTURE_TOL: f64 = 1e-10;

/// Check `ΔY₂ = Y₁(pre-jump)·ΔY₁` on every recorded jump. Jumps within a step
/// happen before the continuous move, in the recorded order.
pub fn check_structure_preservation(ens: &ParticleEnsemble) -> Result<StructureReport> {
    if ens.noise_dim() != 2 {
        return arg("structure check needs a two-dimensional increment process");
    }
    let mut report = StructureReport::default();
    for p in ens.particles() {
        let mut step = 0;
        let mut level = 0.0;
        for j in p.y.jumps() {
            if j.index != step {
                step = j.index;
                level = p.y.at(step - 1)[0];
            }
            let err = libm::fabs(j.delta[1] - level * j.delta[0]);
            report.jumps += 1;
            if !(err <= STRUCTURE_TOL) {
                report.violations += 1;
            }
            report.max_error = report.max_error.max(err);
            level += j.delta[0];
        }
    }
    Ok(report)
}
