//! Small dense symmetric-matrix helpers (row-major `d×d` slices).

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Tolerance on asymmetry of a realized diffusion matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted as roundoff of a PSD matrix.
pub const PSD_TOL: f64 = 1e-10;

pub fn is_symmetric(c: &[f64], d: usize, tol: f64) -> bool {
    (0..d).all(|i| (0..i).all(|j| libm::fabs(c[i * d + j] - c[j * d + i]) <= tol))
}

/// Eigenvalues and row-major eigenvectors (columns) of a symmetric matrix by
/// cyclic Jacobi rotations.
pub fn symmetric_eigen(c: &[f64], d: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = c.to_vec();
    for i in 0..d {
        for j in 0..i {
            let m = 0.5 * (a[i * d + j] + a[j * d + i]);
            a[i * d + j] = m;
            a[j * d + i] = m;
        }
    }
    let mut v = alloc::vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    for _sweep in 0..64 {
        let off: f64 = (0..d)
            .flat_map(|i| (0..d).filter(move |j| *j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * d + j] * a[i * d + j])
            .sum();
        let scale: f64 = (0..d).map(|i| a[i * d + i] * a[i * d + i]).sum::<f64>() + off;
        if off <= 1e-30 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
                let t = libm::copysign(1.0, theta) / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0));
                let cs = 1.0 / libm::sqrt(t * t + 1.0);
                let sn = t * cs;
                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = cs * akp - sn * akq;
                    a[k * d + q] = sn * akp + cs * akq;
                }
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = cs * apk - sn * aqk;
                    a[q * d + k] = sn * apk + cs * aqk;
                }
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = cs * vkp - sn * vkq;
                    v[k * d + q] = sn * vkp + cs * vkq;
                }
            }
        }
    }
    ((0..d).map(|i| a[i * d + i]).collect(), v)
}

/// Projection onto the PSD cone: symmetrize, zero the negative eigenvalues.
/// Returns the clipped matrix and the Frobenius size of the correction.
pub fn clip_psd(c: &[f64], d: usize) -> (Vec<f64>, f64) {
    let mut sym = c.to_vec();
    for i in 0..d {
        for j in 0..i {
            let m = 0.5 * (c[i * d + j] + c[j * d + i]);
            sym[i * d + j] = m;
            sym[j * d + i] = m;
        }
    }
    if d == 1 {
        let v = sym[0].max(0.0);
        return (alloc::vec![v], libm::fabs(v - c[0]));
    }
    let (vals, vecs) = symmetric_eigen(&sym, d);
    if vals.iter().all(|l| *l >= 0.0) {
        let diff = frobenius_diff(&sym, c);
        return (sym, diff);
    }
    let mut out = alloc::vec![0.0; d * d];
    for (k, l) in vals.iter().enumerate() {
        let l = l.max(0.0);
        if l == 0.0 {
            continue;
        }
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] += l * vecs[i * d + k] * vecs[j * d + k];
            }
        }
    }
    let diff = frobenius_diff(&out, c);
    (out, diff)
}

fn frobenius_diff(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Check that `c` is a valid diffusion matrix up to roundoff.
pub fn check_psd(c: &[f64], d: usize) -> Result<()> {
    if c.len() != d * d {
        return Err(Error::Argument("diffusion matrix has the wrong size".into()));
    }
    if !is_symmetric(c, d, SYMMETRY_TOL) {
        return Err(Error::Scenario("diffusion matrix is not symmetric".into()));
    }
    let min = if d == 1 { c[0] } else { symmetric_eigen(c, d).0.into_iter().fold(f64::INFINITY, f64::min) };
    if min < -PSD_TOL {
        return Err(Error::Scenario("diffusion matrix has a negative eigenvalue".into()));
    }
    Ok(())
}

/// Lower-triangular `L` with `L Lᵀ = c` for a positive semi-definite `c`.
/// Zero pivots (up to roundoff) produce zero columns.
pub fn psd_factor(c: &[f64], d: usize, out: &mut [f64]) -> Result<()> {
    out.iter_mut().for_each(|v| *v = 0.0);
    if d == 1 {
        if c[0] < -PSD_TOL {
            return Err(Error::Scenario("negative variance".into()));
        }
        out[0] = libm::sqrt(c[0].max(0.0));
        return Ok(());
    }
    let scale = (0..d).map(|i| libm::fabs(c[i * d + i])).fold(0.0, f64::max).max(1.0);
    let tol = PSD_TOL * scale;
    for j in 0..d {
        let mut s = c[j * d + j];
        for k in 0..j {
            s -= out[j * d + k] * out[j * d + k];
        }
        if s > tol {
            let ljj = libm::sqrt(s);
            out[j * d + j] = ljj;
            for i in j + 1..d {
                let mut t = c[i * d + j];
                for k in 0..j {
                    t -= out[i * d + k] * out[j * d + k];
                }
                out[i * d + j] = t / ljj;
            }
        } else if s >= -tol {
            for i in j + 1..d {
                let mut t = c[i * d + j];
                for k in 0..j {
                    t -= out[i * d + k] * out[j * d + k];
                }
                if libm::fabs(t) > libm::sqrt(tol) {
                    return Err(Error::Scenario("diffusion matrix is not positive semi-definite".into()));
                }
            }
        } else {
            return Err(Error::Scenario("diffusion matrix is not positive semi-definite".into()));
        }
    }
    Ok(())
}
