//! Built-in source processes and the characteristic-rule interface shared by
//! source and mimicking simulations.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{arg, Error, Result};
use crate::kernel::{Atom, LevyKernel};
use crate::linalg;
use crate::oracle::Oracle;
use crate::rng::Domain;
use crate::truncation::Truncation;
use crate::updating::{UpdatingFunction, UpdatingKind};

/// Characteristics `(b, c, κ)` realized at one grid step. `b` is the drift
/// relative to the run's truncation function.
#[derive(Debug, Clone, PartialEq)]
pub struct StepChars {
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub kernel: LevyKernel,
    /// Set by table lookups that had to fall back to a nearest bin.
    pub fallback: bool,
}

impl StepChars {
    pub fn new(d: usize) -> Self {
        Self { b: alloc::vec![0.0; d], c: alloc::vec![0.0; d * d], kernel: LevyKernel::zero(d), fallback: false }
    }
}

/// Maps `(step, t, Z_t, latent)` to the characteristics used over the step.
pub trait CharacteristicRule: Send + Sync {
    fn noise_dim(&self) -> usize;
    fn evaluate(&self, step: usize, t: f64, z: &[f64], latent: &[f64], out: &mut StepChars) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Source,
    Oracle,
    Estimated,
}

impl SourceKind {
    pub fn name(&self) -> &'static str {
        match self {
            SourceKind::Source => "source",
            SourceKind::Oracle => "oracle",
            SourceKind::Estimated => "estimated",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "source" => Ok(SourceKind::Source),
            "oracle" => Ok(SourceKind::Oracle),
            "estimated" => Ok(SourceKind::Estimated),
            _ => Err(Error::Argument(alloc::format!("unknown source kind `{s}`"))),
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            SourceKind::Source => Domain::Source,
            _ => Domain::Mimic,
        }
    }
}

/// Everything the particle simulator needs besides the step rule.
pub trait Dynamics: CharacteristicRule {
    fn label(&self) -> String;
    fn kind(&self) -> SourceKind;
    fn phi(&self) -> UpdatingFunction;
    fn initial_state(&self) -> &[f64];
    fn truncation(&self) -> Truncation;
    fn sample_latent(&self, rng: &mut dyn rand::RngCore) -> Vec<f64>;
}

/// Declared bounds on the realized characteristics: `|b_k| ≤ b`,
/// `|c_kl| ≤ c`, `κ(R^d) ≤ rate`. `None` means no bound is declared.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CharBounds {
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub rate: Option<f64>,
}

impl CharBounds {
    pub fn holds(&self, b: &[f64], c: &[f64], rate: f64) -> bool {
        let within = |bound: Option<f64>, v: &[f64]| bound.is_none_or(|m| v.iter().all(|x| libm::fabs(*x) <= m));
        within(self.b, b) && within(self.c, c) && self.rate.is_none_or(|m| rate <= m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioKind {
    /// `b = β` with a hidden sign `β = ±1`, `c = 1`, no jumps.
    RandomDriftSign,
    /// Unit jumps at a hidden intensity `Λ ∈ {λ₁, λ₂}` with `P(Λ = λ₁) = p`.
    MixedPoisson { p: f64, lambda1: f64, lambda2: f64 },
    /// `c = 1 + 1{M ≥ 1}` with `M` the running maximum.
    SupDependentVol,
    /// `X` = drift `μ` plus unit jumps at rate `λ`; second coordinate `∫X₋dX`.
    IteratedIntegral { lambda: f64, mu: f64 },
    /// Deterministic constant characteristics.
    Constant { b: Vec<f64>, c: Vec<f64>, atoms: Vec<Atom> },
}

#[derive(Debug, Clone)]
pub struct Scenario {
    kind: ScenarioKind,
    d: usize,
    phi: UpdatingFunction,
    z0: Vec<f64>,
    truncation: Truncation,
    bounds: CharBounds,
    // kernels that do not depend on the state, built once
    kernels: Vec<LevyKernel>,
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Argument(alloc::format!("{name} must be positive and finite")));
    }
    Ok(())
}

impl Scenario {
    pub fn random_drift_sign() -> Self {
        Self {
            kind: ScenarioKind::RandomDriftSign,
            d: 1,
            phi: UpdatingFunction::builtin(UpdatingKind::ProcessItself, 1).expect("scalar"),
            z0: alloc::vec![0.0],
            truncation: Truncation::default(),
            bounds: CharBounds { b: Some(1.0), c: Some(1.0), rate: Some(0.0) },
            kernels: alloc::vec![LevyKernel::zero(1)],
        }
    }

    pub fn mixed_poisson(p: f64, lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return arg("mixing probability must lie in [0, 1]");
        }
        check_rate("lambda1", lambda1)?;
        check_rate("lambda2", lambda2)?;
        Ok(Self {
            kind: ScenarioKind::MixedPoisson { p, lambda1, lambda2 },
            d: 1,
            phi: UpdatingFunction::builtin(UpdatingKind::ProcessItself, 1)?,
            z0: alloc::vec![0.0],
            truncation: Truncation::default(),
            bounds: CharBounds { b: Some(0.0), c: Some(0.0), rate: Some(lambda1.max(lambda2)) },
            kernels: alloc::vec![LevyKernel::atom(alloc::vec![1.0], lambda1)?, LevyKernel::atom(alloc::vec![1.0], lambda2)?],
        })
    }

    pub fn sup_dependent_vol() -> Self {
        Self {
            kind: ScenarioKind::SupDependentVol,
            d: 1,
            phi: UpdatingFunction::builtin(UpdatingKind::SupremumToDate, 1).expect("scalar"),
            z0: alloc::vec![0.0, 0.0],
            truncation: Truncation::default(),
            bounds: CharBounds { b: Some(0.0), c: Some(2.0), rate: Some(0.0) },
            kernels: alloc::vec![LevyKernel::zero(1)],
        }
    }

    pub fn iterated_integral(lambda: f64, mu: f64) -> Result<Self> {
        check_rate("lambda", lambda)?;
        if !mu.is_finite() {
            return arg("drift must be finite");
        }
        Ok(Self {
            kind: ScenarioKind::IteratedIntegral { lambda, mu },
            d: 2,
            phi: UpdatingFunction::builtin(UpdatingKind::ProcessItself, 2)?,
            z0: alloc::vec![0.0, 0.0],
            truncation: Truncation::default(),
            // the drift of the second coordinate grows with X and is not bounded
            bounds: CharBounds { b: None, c: Some(0.0), rate: Some(lambda) },
            kernels: Vec::new(),
        })
    }

    /// Constant characteristics `(b, c, κ)` w.r.t. `truncation`, driving the
    /// updating function `phi` from `z0`.
    pub fn constant(
        b: Vec<f64>,
        c: Vec<f64>,
        atoms: Vec<Atom>,
        phi: UpdatingKind,
        z0: Vec<f64>,
        truncation: Truncation,
    ) -> Result<Self> {
        let d = b.len();
        if d == 0 {
            return arg("drift must have at least one component");
        }
        if c.len() != d * d {
            return arg("diffusion matrix must be d×d");
        }
        linalg::check_psd(&c, d).map_err(|e| Error::Argument(alloc::format!("{e}")))?;
        let phi = UpdatingFunction::builtin(phi, d)?;
        if !phi.state_space().contains(&z0) {
            return arg("initial state does not belong to the state space");
        }
        let kernel = if atoms.is_empty() { LevyKernel::zero(d) } else { LevyKernel::atomic(d, atoms.clone())? };
        let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(libm::fabs(*x)));
        let bounds = CharBounds { b: Some(max_abs(&b)), c: Some(max_abs(&c)), rate: Some(kernel.total_rate()) };
        Ok(Self { kind: ScenarioKind::Constant { b, c, atoms }, d, phi, z0, truncation, bounds, kernels: alloc::vec![kernel] })
    }

    pub fn kind(&self) -> &ScenarioKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ScenarioKind::RandomDriftSign => "random_drift_sign",
            ScenarioKind::MixedPoisson { .. } => "mixed_poisson",
            ScenarioKind::SupDependentVol => "sup_dependent_vol",
            ScenarioKind::IteratedIntegral { .. } => "iterated_integral",
            ScenarioKind::Constant { .. } => "constant",
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn updating(&self) -> UpdatingFunction {
        self.phi
    }

    pub fn z0(&self) -> &[f64] {
        &self.z0
    }

    pub fn bounds(&self) -> CharBounds {
        self.bounds
    }

    pub fn oracle(&self) -> Result<Oracle> {
        Oracle::for_scenario(self)
    }
}

impl CharacteristicRule for Scenario {
    fn noise_dim(&self) -> usize {
        self.d
    }

    fn evaluate(&self, _step: usize, _t: f64, z: &[f64], latent: &[f64], out: &mut StepChars) -> Result<()> {
        out.fallback = false;
        match &self.kind {
            ScenarioKind::RandomDriftSign => {
                out.b[0] = latent[0];
                out.c[0] = 1.0;
                out.kernel = self.kernels[0].clone();
            }
            ScenarioKind::MixedPoisson { lambda1, .. } => {
                out.b[0] = 0.0;
                out.c[0] = 0.0;
                out.kernel = self.kernels[if latent[0] == *lambda1 { 0 } else { 1 }].clone();
            }
            ScenarioKind::SupDependentVol => {
                out.b[0] = 0.0;
                out.c[0] = if z[1] >= 1.0 { 2.0 } else { 1.0 };
                out.kernel = self.kernels[0].clone();
            }
            ScenarioKind::IteratedIntegral { lambda, mu } => {
                out.b[0] = *mu;
                out.b[1] = z[0] * mu;
                out.c.iter_mut().for_each(|v| *v = 0.0);
                out.kernel = LevyKernel::atom(alloc::vec![1.0, z[0]], *lambda)?;
            }
            ScenarioKind::Constant { b, c, .. } => {
                out.b.copy_from_slice(b);
                out.c.copy_from_slice(c);
                out.kernel = self.kernels[0].clone();
            }
        }
        Ok(())
    }
}

impl Dynamics for Scenario {
    fn label(&self) -> String {
        String::from(self.name())
    }

    fn kind(&self) -> SourceKind {
        SourceKind::Source
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

    /// Drift sign: one uniform draw, `β = +1` below ½. Mixed Poisson: one
    /// uniform draw, `Λ = λ₁` below `p`. Other scenarios draw nothing.
    fn sample_latent(&self, rng: &mut dyn rand::RngCore) -> Vec<f64> {
        match &self.kind {
            ScenarioKind::RandomDriftSign => {
                let u: f64 = rng.random();
                alloc::vec![if u < 0.5 { 1.0 } else { -1.0 }]
            }
            ScenarioKind::MixedPoisson { p, lambda1, lambda2 } => {
                let u: f64 = rng.random();
                alloc::vec![if u < *p { *lambda1 } else { *lambda2 }]
            }
            _ => Vec::new(),
        }
    }
}
