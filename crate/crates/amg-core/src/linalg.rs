//! Symmetric eigendecomposition (cyclic Jacobi) and the PSD matrix square
//! root built on it. Dependency-free and adequate for the covariance sizes
//! this crate works with (up to a few hundred dimensions).

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use alloc::vec;
use alloc::vec::Vec;

const MAX_SWEEPS: usize = 100;
const OFF_DIAG_TOL: f64 = 1e-12; // relative to the Frobenius norm

/// Eigendecomposition of a symmetric matrix.
///
/// Returns `(eigenvalues, V)` with eigenvalues sorted descending and the
/// columns of `V` holding the matching eigenvectors, so `M = V diag(l) V^T`.
/// Eigenvector signs follow a fixed convention (largest-magnitude component
/// positive) to keep downstream results deterministic.
pub fn jacobi_eigh(m: &Tensor) -> Result<(Vec<f64>, Tensor)> {
    let n = square_dim(m)?;
    let mut a = m.data().to_vec();
    let mut v = identity(n);
    let frob = libm::sqrt(a.iter().map(|x| x * x).sum::<f64>());
    let tol = OFF_DIAG_TOL * frob.max(f64::MIN_POSITIVE);

    for _sweep in 0..MAX_SWEEPS {
        if off_diag_norm(&a, n) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(theta * theta + 1.0))
                } else {
                    -1.0 / (-theta + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[p * n + i] = a[i * n + p];
                    a[i * n + q] = s * aip + c * aiq;
                    a[q * n + i] = a[i * n + q];
                }
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * viq;
                    v[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }

    // Sort eigenpairs by descending eigenvalue; stable on ties.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (li, lj) = (a[i * n + i], a[j * n + j]);
        lj.partial_cmp(&li).unwrap_or(core::cmp::Ordering::Equal)
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        // Sign convention: largest-magnitude component positive.
        let mut big = 0usize;
        for i in 1..n {
            if v[i * n + src].abs() > v[big * n + src].abs() {
                big = i;
            }
        }
        let sign = if v[big * n + src] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vecs[i * n + col] = sign * v[i * n + src];
        }
    }
    Ok((eigenvalues, Tensor::matrix(n, n, vecs)?))
}

/// Square root of a symmetric positive semi-definite matrix.
///
/// Symmetry is required within 1e-8 and eigenvalues within -1e-10 (small
/// negatives are clamped to zero); anything beyond is an error.
pub fn matrix_sqrt_psd(m: &Tensor) -> Result<Tensor> {
    let n = square_dim(m)?;
    let mut max_asym = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            max_asym = max_asym.max((m.data()[i * n + j] - m.data()[j * n + i]).abs());
        }
    }
    if max_asym > 1e-8 {
        return Err(Error::NotSymmetric {
            max_asymmetry: max_asym,
        });
    }
    let (eigenvalues, v) = jacobi_eigh(m)?;
    let mut roots = Vec::with_capacity(n);
    for &l in &eigenvalues {
        if l < -1e-10 {
            return Err(Error::NotPositiveSemiDefinite { eigenvalue: l });
        }
        roots.push(libm::sqrt(l.max(0.0)));
    }
    // S = V diag(sqrt(l)) V^T
    let vd = v.data();
    let mut scaled = vec![0.0; n * n]; // V diag
    for i in 0..n {
        for j in 0..n {
            scaled[i * n + j] = vd[i * n + j] * roots[j];
        }
    }
    let mut s = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for p in 0..n {
                acc += scaled[i * n + p] * vd[j * n + p];
            }
            s[i * n + j] = acc;
            s[j * n + i] = acc;
        }
    }
    Tensor::matrix(n, n, s)
}

fn square_dim(m: &Tensor) -> Result<usize> {
    match m.shape() {
        [r, c] if r == c => Ok(*r),
        s => Err(Error::InvalidArgument(alloc::format!(
            "expected square matrix, got shape {s:?}"
        ))),
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    v
}

fn off_diag_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    libm::sqrt(s)
}
