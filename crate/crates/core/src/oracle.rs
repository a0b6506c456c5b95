//! Closed-form projected characteristics of the built-in scenarios.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernel::LevyKernel;
use crate::scenario::{CharacteristicRule, Scenario, ScenarioKind, StepChars};

/// Exact `(b̂, ĉ, κ̂)(t, z)` for a scenario, evaluated without bins.
#[derive(Debug, Clone)]
pub enum Oracle {
    DriftSign,
    MixedPoisson { p: f64, lambda1: f64, lambda2: f64 },
    SupVol,
    IteratedIntegral { lambda: f64, mu: f64 },
    Constant { b: Vec<f64>, c: Vec<f64>, kernel: LevyKernel },
}

/// `E[Λ | N_t = n]` for `Λ ∈ {λ₁, λ₂}` with prior `P(Λ = λ₁) = p`.
pub fn mixed_poisson_intensity(p: f64, lambda1: f64, lambda2: f64, t: f64, n: f64) -> f64 {
    let log_w = |q: f64, l: f64| {
        if q <= 0.0 {
            f64::NEG_INFINITY
        } else {
            libm::log(q) + n * libm::log(l) - l * t
        }
    };
    let a = log_w(p, lambda1);
    let b = log_w(1.0 - p, lambda2);
    let m = a.max(b);
    let wa = libm::exp(a - m);
    let wb = libm::exp(b - m);
    (wa * lambda1 + wb * lambda2) / (wa + wb)
}

fn poisson_pmf(mean: f64, n: u32) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    libm::exp(n as f64 * libm::log(mean) - mean - libm::lgamma(n as f64 + 1.0))
}

/// `P(N_t = n)` for the mixed Poisson count.
pub fn mixed_poisson_pmf(p: f64, lambda1: f64, lambda2: f64, t: f64, n: u32) -> f64 {
    p * poisson_pmf(lambda1 * t, n) + (1.0 - p) * poisson_pmf(lambda2 * t, n)
}

impl Oracle {
    pub fn for_scenario(s: &Scenario) -> Result<Self> {
        Ok(match s.kind() {
            ScenarioKind::RandomDriftSign => Oracle::DriftSign,
            ScenarioKind::MixedPoisson { p, lambda1, lambda2 } => {
                Oracle::MixedPoisson { p: *p, lambda1: *lambda1, lambda2: *lambda2 }
            }
            ScenarioKind::SupDependentVol => Oracle::SupVol,
            ScenarioKind::IteratedIntegral { lambda, mu } => Oracle::IteratedIntegral { lambda: *lambda, mu: *mu },
            ScenarioKind::Constant { b, c, atoms } => Oracle::Constant {
                b: b.clone(),
                c: c.clone(),
                kernel: if atoms.is_empty() { LevyKernel::zero(b.len()) } else { LevyKernel::atomic(b.len(), atoms.clone())? },
            },
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Oracle::IteratedIntegral { .. } => 2,
            Oracle::Constant { b, .. } => b.len(),
            _ => 1,
        }
    }

    pub fn evaluate_at(&self, t: f64, z: &[f64]) -> Result<StepChars> {
        let mut out = StepChars::new(self.dim());
        self.evaluate(0, t, z, &[], &mut out)?;
        Ok(out)
    }
}

impl CharacteristicRule for Oracle {
    fn noise_dim(&self) -> usize {
        self.dim()
    }

    fn evaluate(&self, _step: usize, t: f64, z: &[f64], _latent: &[f64], out: &mut StepChars) -> Result<()> {
        out.fallback = false;
        match self {
            Oracle::DriftSign => {
                out.b[0] = libm::tanh(z[0]);
                out.c[0] = 1.0;
                out.kernel = LevyKernel::zero(1);
            }
            Oracle::MixedPoisson { p, lambda1, lambda2 } => {
                let n = libm::round(z[0]);
                if n < 0.0 {
                    return Err(Error::Lookup("negative jump count".into()));
                }
                out.b[0] = 0.0;
                out.c[0] = 0.0;
                let rate = mixed_poisson_intensity(*p, *lambda1, *lambda2, t, n);
                out.kernel = LevyKernel::atom(alloc::vec![1.0], rate)?;
            }
            Oracle::SupVol => {
                out.b[0] = 0.0;
                out.c[0] = if z[1] >= 1.0 { 2.0 } else { 1.0 };
                out.kernel = LevyKernel::zero(1);
            }
            Oracle::IteratedIntegral { lambda, mu } => {
                out.b[0] = *mu;
                out.b[1] = z[0] * mu;
                out.c.iter_mut().for_each(|v| *v = 0.0);
                out.kernel = LevyKernel::atom(alloc::vec![1.0, z[0]], *lambda)?;
            }
            Oracle::Constant { b, c, kernel } => {
                out.b.copy_from_slice(b);
                out.c.copy_from_slice(c);
                out.kernel = kernel.clone();
            }
        }
        Ok(())
    }
}
