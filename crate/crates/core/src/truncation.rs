//! Hard-cutoff truncation functions and the drift conversions between them.
//!
//! Only the drift depends on the truncation: for kernels `κ` and truncations
//! `h`, `h'` the drifts satisfy `b(h') = b(h) − ∫(h − h') dκ`, and when the
//! kernel has a finite first moment the canonical (truncation-free) drift is
//! `b = b(h) + ∫(ξ − h(ξ)) dκ`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{arg, Error, Result};
use crate::kernel::{norm, LevyKernel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// `h(ξ) = ξ·1{|ξ| ≤ r}`.
    Hard { threshold: f64 },
    /// `h(ξ) = ξ`: canonical characteristics of a special semimartingale.
    Canonical,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Hard { threshold: 0.5 }
    }
}

impl Truncation {
    pub fn hard(threshold: f64) -> Result<Self> {
        if !(threshold > 0.0) || !threshold.is_finite() {
            return arg("truncation threshold must be positive and finite");
        }
        Ok(Truncation::Hard { threshold })
    }

    pub fn canonical() -> Self {
        Truncation::Canonical
    }

    pub fn threshold(&self) -> Option<f64> {
        match self {
            Truncation::Hard { threshold } => Some(*threshold),
            Truncation::Canonical => None,
        }
    }

    /// True when `h(ξ) = ξ` at this jump.
    pub fn keeps(&self, xi: &[f64]) -> bool {
        match self {
            Truncation::Hard { threshold } => norm(xi) <= *threshold,
            Truncation::Canonical => true,
        }
    }

    pub fn apply(&self, xi: &[f64], out: &mut [f64]) {
        if self.keeps(xi) {
            out.copy_from_slice(xi);
        } else {
            out.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn tag(&self) -> String {
        match self {
            Truncation::Hard { threshold } => format!("hard:{threshold}"),
            Truncation::Canonical => String::from("canonical"),
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        if tag == "canonical" {
            return Ok(Truncation::Canonical);
        }
        match tag.strip_prefix("hard:").map(str::parse::<f64>) {
            Some(Ok(r)) => Self::hard(r),
            _ => Err(Error::Argument(format!("unknown truncation tag `{tag}`"))),
        }
    }

    /// `∫ h(ξ) κ(dξ)`: the part of the jumps compensated inside the drift.
    pub fn compensated_mean(&self, kernel: &LevyKernel) -> Result<Vec<f64>> {
        let mut out = alloc::vec![0.0; kernel.dim()];
        if kernel.is_zero() {
            return Ok(out);
        }
        kernel.vector_integral(|xi, o| self.apply(xi, o), &mut out)?;
        Ok(out)
    }
}

fn check_dims(b: &[f64], kernel: &LevyKernel) -> Result<()> {
    if b.len() != kernel.dim() {
        return arg("drift and kernel dimensions differ");
    }
    Ok(())
}

/// Drift under `to` from the drift `b_from` under `from`:
/// `b_to = b_from − ∫(h_from − h_to) dκ`.
pub fn convert_truncation(b_from: &[f64], kernel: &LevyKernel, from: &Truncation, to: &Truncation) -> Result<Vec<f64>> {
    check_dims(b_from, kernel)?;
    if from == to || kernel.is_zero() {
        return Ok(b_from.to_vec());
    }
    let d = kernel.dim();
    let mut diff = alloc::vec![0.0; d];
    let mut h1 = alloc::vec![0.0; d];
    let mut h2 = alloc::vec![0.0; d];
    kernel.vector_integral(
        |xi, o| {
            from.apply(xi, &mut h1);
            to.apply(xi, &mut h2);
            for k in 0..o.len() {
                o[k] = h1[k] - h2[k];
            }
        },
        &mut diff,
    )?;
    Ok(b_from.iter().zip(&diff).map(|(b, x)| b - x).collect())
}

/// Canonical drift `b = b_h + ∫(ξ − h(ξ)) dκ` of a special semimartingale.
pub fn drift_truncated_to_canonical(b_h: &[f64], kernel: &LevyKernel, h: &Truncation) -> Result<Vec<f64>> {
    check_dims(b_h, kernel)?;
    if kernel.is_zero() {
        return Ok(b_h.to_vec());
    }
    let d = kernel.dim();
    let mut big = alloc::vec![0.0; d];
    kernel
        .vector_integral(
            |xi, o| {
                if h.keeps(xi) {
                    o.iter_mut().for_each(|v| *v = 0.0);
                } else {
                    o.copy_from_slice(xi);
                }
            },
            &mut big,
        )
        .map_err(|_| Error::Integrability("kernel first moment outside the truncation region is not computable".into()))?;
    Ok(b_h.iter().zip(&big).map(|(b, x)| b + x).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{Atom, RateDensity};
    use alloc::sync::Arc;
    use alloc::vec;

    fn h(r: f64) -> Truncation {
        Truncation::hard(r).unwrap()
    }

    #[test]
    fn zero_kernel_and_identity_leave_drift() {
        let zero = LevyKernel::zero(1);
        assert_eq!(convert_truncation(&[1.5], &zero, &h(1.0), &h(2.0)).unwrap(), vec![1.5]);
        let k = LevyKernel::atom(vec![2.0], 3.0).unwrap();
        assert_eq!(convert_truncation(&[1.5], &k, &h(1.0), &h(1.0)).unwrap(), vec![1.5]);
        assert_eq!(drift_truncated_to_canonical(&[1.5], &zero, &h(1.0)).unwrap(), vec![1.5]);
    }

    #[test]
    fn one_atom_conversion() {
        // ∫(h2 − h) dκ = 3·(2 − 0)
        let k = LevyKernel::atom(vec![2.0], 3.0).unwrap();
        assert_eq!(convert_truncation(&[0.25], &k, &h(1.0), &h(2.5)).unwrap(), vec![6.25]);
        assert_eq!(drift_truncated_to_canonical(&[0.25], &k, &h(1.0)).unwrap(), vec![6.25]);
    }

    #[test]
    fn jumps_inside_truncation_do_not_move_canonical_drift() {
        let k = LevyKernel::atom(vec![0.5], 7.0).unwrap();
        assert_eq!(drift_truncated_to_canonical(&[-1.0], &k, &h(1.0)).unwrap(), vec![-1.0]);
    }

    #[test]
    fn threshold_truncation_values() {
        let t = h(1.0);
        let mut out = [9.0, 9.0];
        t.apply(&[0.6, 0.6], &mut out);
        assert_eq!(out, [0.6, 0.6]);
        t.apply(&[0.8, 0.8], &mut out);
        assert_eq!(out, [0.0, 0.0]);
        assert!(Truncation::hard(0.0).is_err());
    }

    #[test]
    fn tags_roundtrip() {
        for t in [h(0.5), h(2.25), Truncation::canonical()] {
            assert_eq!(Truncation::from_tag(&t.tag()).unwrap(), t);
        }
        assert!(Truncation::from_tag("soft:1").is_err());
    }

    #[test]
    fn unbounded_density_is_not_integrable() {
        let f: RateDensity = Arc::new(|_x: &[f64]| 1.0);
        let k = LevyKernel::density_unbounded(1, f, 1.0).unwrap();
        assert!(matches!(convert_truncation(&[0.0], &k, &h(1.0), &h(2.0)), Err(Error::Integrability(_))));
        assert!(matches!(drift_truncated_to_canonical(&[0.0], &k, &h(1.0)), Err(Error::Integrability(_))));
    }

    #[test]
    fn compensated_mean_counts_small_jumps_only() {
        let k = LevyKernel::atomic(1, vec![Atom::new(vec![0.3], 2.0), Atom::new(vec![-1.5], 1.0)]).unwrap();
        let m = h(0.5).compensated_mean(&k).unwrap();
        assert!((m[0] - 0.6).abs() < 1e-15);
        let m = Truncation::canonical().compensated_mean(&k).unwrap();
        assert!((m[0] - (0.6 - 1.5)).abs() < 1e-15);
    }
}
