//! Dense tensors of 64-bit reals, rank 0..=2.
//!
//! Tensors are immutable values: arithmetic returns new tensors, shapes are
//! checked, and every public operation either yields all-finite data or an
//! error. The raw kernels at the bottom are shared with the autodiff tape so
//! that the plain and taped execution paths produce bit-identical values.

use crate::error::{Error, Result};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    requires_grad: bool,
}

impl Tensor {
    /// Builds a tensor, validating the element count and finiteness.
    pub fn from_vec(shape: Vec<usize>, data: Vec<f64>) -> Result<Tensor> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::InvalidArgument(format!(
                "tensor: shape {shape:?} expects {n} elements, got {}",
                data.len()
            )));
        }
        let t = Tensor {
            shape,
            data,
            requires_grad: false,
        };
        t.check_finite("from_vec")?;
        Ok(t)
    }

    pub fn vector(data: Vec<f64>) -> Result<Tensor> {
        let n = data.len();
        Tensor::from_vec(vec![n], data)
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Tensor> {
        Tensor::from_vec(vec![rows, cols], data)
    }

    pub fn scalar(v: f64) -> Result<Tensor> {
        Tensor::from_vec(vec![1], vec![v])
    }

    pub fn zeros(shape: &[usize]) -> Tensor {
        let n: usize = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; n],
            requires_grad: false,
        }
    }

    pub fn with_grad(mut self, requires_grad: bool) -> Tensor {
        self.requires_grad = requires_grad;
        self
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> Result<f64> {
        if self.is_scalar() {
            Ok(self.data[0])
        } else {
            Err(Error::NotScalar {
                shape: self.shape.clone(),
            })
        }
    }

    pub(crate) fn check_finite(&self, op: &'static str) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite { op })
        }
    }

    fn same_shape(&self, other: &Tensor, op: &'static str) -> Result<()> {
        if self.shape == other.shape {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                op,
                left: self.shape.clone(),
                right: other.shape.clone(),
            })
        }
    }

    fn zip(&self, other: &Tensor, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        self.same_shape(other, op)?;
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        let t = Tensor {
            shape: self.shape.clone(),
            data,
            requires_grad: false,
        };
        t.check_finite(op)?;
        Ok(t)
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.zip(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.zip(other, "sub", |a, b| a - b)
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        self.zip(other, "mul", |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Result<Tensor> {
        let data = self.data.iter().map(|&a| a * c).collect();
        let t = Tensor {
            shape: self.shape.clone(),
            data,
            requires_grad: false,
        };
        t.check_finite("scale")?;
        Ok(t)
    }

    pub fn dot(&self, other: &Tensor) -> Result<f64> {
        self.same_shape(other, "dot")?;
        let s = dot(&self.data, &other.data);
        if s.is_finite() {
            Ok(s)
        } else {
            Err(Error::NonFinite { op: "dot" })
        }
    }

    /// Euclidean norm over all elements.
    pub fn norm(&self) -> f64 {
        libm::sqrt(dot(&self.data, &self.data))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Matrix product; accepts `[m,k]x[k,n]`, `[m,k]x[k]`, and `[k]x[k,n]`.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        let mismatch = || Error::ShapeMismatch {
            op: "matmul",
            left: self.shape.clone(),
            right: other.shape.clone(),
        };
        let out = match (self.shape.as_slice(), other.shape.as_slice()) {
            ([m, k], [k2, n]) if k == k2 => {
                Tensor::matrix(*m, *n, matmul_mm(&self.data, *m, *k, &other.data, *n))?
            }
            ([m, k], [k2]) if k == k2 => {
                Tensor::vector(matmul_mv(&self.data, *m, *k, &other.data))?
            }
            ([k], [k2, n]) if k == k2 => {
                Tensor::vector(matmul_vm(&self.data, *k, &other.data, *n))?
            }
            _ => return Err(mismatch()),
        };
        out.check_finite("matmul")?;
        Ok(out)
    }
}

// ── raw kernels ─────────────────────────────────────────────────────────
// Loop orders keep the innermost stride contiguous; these are hot in both
// training and sampling.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// `C[m,n] = A[m,k] * B[k,n]`
pub(crate) fn matmul_mm(a: &[f64], m: usize, k: usize, b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for j in 0..n {
                crow[j] += aip * brow[j];
            }
        }
    }
    c
}

/// `y[m] = A[m,k] * x[k]`
pub(crate) fn matmul_mv(a: &[f64], m: usize, k: usize, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; m];
    for i in 0..m {
        y[i] = dot(&a[i * k..(i + 1) * k], x);
    }
    y
}

/// `y[n] = x[k] * B[k,n]`
pub(crate) fn matmul_vm(x: &[f64], k: usize, b: &[f64], n: usize) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for p in 0..k {
        let xp = x[p];
        if xp == 0.0 {
            continue;
        }
        let brow = &b[p * n..(p + 1) * n];
        for j in 0..n {
            y[j] += xp * brow[j];
        }
    }
    y
}

/// `C[m,n] = A[m,k] * B[n,k]^T` (rows of both operands are contiguous).
pub(crate) fn matmul_mm_nt(a: &[f64], m: usize, k: usize, b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            c[i * n + j] = dot(arow, &b[j * k..(j + 1) * k]);
        }
    }
    c
}

/// `C[k,n] = A[m,k]^T * B[m,n]`
pub(crate) fn matmul_mm_tn(a: &[f64], m: usize, k: usize, b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; k * n];
    for i in 0..m {
        let brow = &b[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let crow = &mut c[p * n..(p + 1) * n];
            for j in 0..n {
                crow[j] += aip * brow[j];
            }
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_checks_count() {
        assert!(Tensor::from_vec(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(Tensor::from_vec(vec![2, 3], vec![0.0; 6]).is_ok());
    }

    #[test]
    fn from_vec_rejects_nan() {
        assert!(Tensor::vector(vec![1.0, f64::NAN]).is_err());
        assert!(Tensor::vector(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn add_checks_shapes() {
        let a = Tensor::vector(vec![1.0, 2.0]).unwrap();
        let b = Tensor::vector(vec![3.0, 4.0]).unwrap();
        assert_eq!(a.add(&b).unwrap().data(), &[4.0, 6.0]);
        let c = Tensor::vector(vec![1.0]).unwrap();
        assert!(a.add(&c).is_err());
    }

    #[test]
    fn matmul_identity() {
        let eye = Tensor::matrix(3, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let v = Tensor::vector(vec![2.0, -1.0, 0.5]).unwrap();
        assert_eq!(eye.matmul(&v).unwrap().data(), v.data());
    }

    #[test]
    fn matmul_shapes() {
        let a = Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = Tensor::matrix(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.shape(), &[2, 2]);
        assert_eq!(c.data(), &[58.0, 64.0, 139.0, 154.0]);
        let v = Tensor::vector(vec![1.0, 1.0]).unwrap();
        assert!(a.matmul(&v).is_err());
        let row = Tensor::vector(vec![1.0, 0.0]).unwrap();
        assert_eq!(row.matmul(&a).unwrap().data(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn norm_345() {
        let v = Tensor::vector(vec![3.0, 4.0]).unwrap();
        assert_eq!(v.norm(), 5.0);
    }

    #[test]
    fn transposed_kernels_agree_with_explicit() {
        // A[2,3], B[4,3]: A*B^T via kernel vs naive
        let a = [1.0, 2.0, 3.0, -1.0, 0.5, 2.0];
        let b = [0.3, 1.0, -2.0, 0.0, 4.0, 1.0, 2.5, -0.5, 1.5, 1.0, 1.0, 1.0];
        let c = matmul_mm_nt(&a, 2, 3, &b, 4);
        for i in 0..2 {
            for j in 0..4 {
                let mut s = 0.0;
                for p in 0..3 {
                    s += a[i * 3 + p] * b[j * 3 + p];
                }
                assert!((c[i * 4 + j] - s).abs() < 1e-15);
            }
        }
        // A[3,2]^T * B[3,4]
        let a2 = [1.0, 2.0, 3.0, -1.0, 0.5, 2.0];
        let b2 = [0.3, 1.0, -2.0, 0.0, 4.0, 1.0, 2.5, -0.5, 1.5, 1.0, 1.0, 1.0];
        let c2 = matmul_mm_tn(&a2, 3, 2, &b2, 4);
        for i in 0..2 {
            for j in 0..4 {
                let mut s = 0.0;
                for p in 0..3 {
                    s += a2[p * 2 + i] * b2[p * 4 + j];
                }
                assert!((c2[i * 4 + j] - s).abs() < 1e-15);
            }
        }
    }
}
