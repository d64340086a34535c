//! Reverse-mode automatic differentiation over [`Tensor`] values.
//!
//! A [`Tape`] is an append-only arena of primitive operations: parents always
//! precede children, so backward is a single reverse sweep. Tapes are built
//! fresh for each training step or sampling step and consumed by
//! [`Tape::backward`], which returns the gradient map and drops the recording.
//!
//! Supported primitives: add, subtract, elementwise multiply, scalar
//! multiply/divide (by constants or by scalar nodes), matrix multiply, row
//! broadcast add, row gather, sum, mean, tanh, square root, log1p, L2 norm,
//! dot product, concat, and slice. Values produced by taped ops are checked
//! finite, mirroring the plain tensor API.

use crate::error::{Error, Result};
use crate::tensor::{self, Tensor};
use alloc::vec;
use alloc::vec::Vec;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    MulScalar(NodeId, NodeId),
    DivScalar(NodeId, NodeId),
    Matmul(NodeId, NodeId),
    AddRow(NodeId, NodeId),
    GatherRows(NodeId, Vec<usize>),
    Sum(NodeId),
    Mean(NodeId),
    Tanh(NodeId),
    Sqrt(NodeId),
    Log1p(NodeId),
    Norm(NodeId),
    Dot(NodeId, NodeId),
    Concat(Vec<NodeId>),
    Slice(NodeId, usize, usize),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Recording of a differentiable computation.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Per-leaf gradients produced by [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of the root with respect to the node, if one was reached.
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }

    /// Removes and returns the gradient, leaving `None` behind.
    pub fn take(&mut self, id: NodeId) -> Option<Tensor> {
        self.grads.get_mut(id.0).and_then(|g| g.take())
    }
}

impl Tape {
    pub fn new() -> Tape {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Value held at a node.
    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Records a differentiable leaf.
    pub fn var(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Leaf, true)
    }

    /// Records a non-differentiable leaf.
    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Leaf, false)
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> NodeId {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn rg(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    fn record(&mut self, value: Tensor, op: Op, parents_rg: bool, name: &'static str) -> Result<NodeId> {
        value.check_finite(name)?;
        Ok(self.push(value, op, parents_rg))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).add(self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        self.record(v, Op::Add(a, b), rg, "add")
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).sub(self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        self.record(v, Op::Sub(a, b), rg, "sub")
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).mul(self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        self.record(v, Op::Mul(a, b), rg, "mul")
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> Result<NodeId> {
        let v = self.value(a).scale(c)?;
        let rg = self.rg(a);
        self.record(v, Op::Scale(a, c), rg, "scale")
    }

    /// Elementwise multiply by a single-element node.
    pub fn mul_scalar(&mut self, a: NodeId, s: NodeId) -> Result<NodeId> {
        let sv = self.value(s).item()?;
        let v = self.value(a).scale(sv)?;
        let rg = self.rg(a) || self.rg(s);
        self.record(v, Op::MulScalar(a, s), rg, "mul_scalar")
    }

    /// Elementwise divide by a single-element node; zero divisor is an error.
    pub fn div_scalar(&mut self, a: NodeId, s: NodeId) -> Result<NodeId> {
        let sv = self.value(s).item()?;
        if sv == 0.0 {
            return Err(Error::DivisionByZero { op: "div_scalar" });
        }
        let v = self.value(a).scale(1.0 / sv)?;
        let rg = self.rg(a) || self.rg(s);
        self.record(v, Op::DivScalar(a, s), rg, "div_scalar")
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).matmul(self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        self.record(v, Op::Matmul(a, b), rg, "matmul")
    }

    /// Adds a row vector `[n]` to every row of a matrix `[m,n]`.
    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> Result<NodeId> {
        let (av, rv) = (self.value(a), self.value(row));
        let (m, n) = match (av.shape(), rv.shape()) {
            ([m, n], [n2]) if n == n2 => (*m, *n),
            _ => {
                return Err(Error::ShapeMismatch {
                    op: "add_row",
                    left: av.shape().to_vec(),
                    right: rv.shape().to_vec(),
                })
            }
        };
        let mut data = av.data().to_vec();
        for i in 0..m {
            for j in 0..n {
                data[i * n + j] += rv.data()[j];
            }
        }
        let v = Tensor::matrix(m, n, data)?;
        let rg = self.rg(a) || self.rg(row);
        self.record(v, Op::AddRow(a, row), rg, "add_row")
    }

    /// Selects rows of a matrix by index, producing `[idx.len(), cols]`.
    pub fn gather_rows(&mut self, m: NodeId, idx: &[usize]) -> Result<NodeId> {
        let mv = self.value(m);
        let (rows, cols) = match mv.shape() {
            [r, c] => (*r, *c),
            s => {
                return Err(Error::ShapeMismatch {
                    op: "gather_rows",
                    left: s.to_vec(),
                    right: vec![],
                })
            }
        };
        if let Some(&bad) = idx.iter().find(|&&i| i >= rows) {
            return Err(Error::InvalidArgument(alloc::format!(
                "gather_rows: row {bad} out of range 0..{rows}"
            )));
        }
        let mut data = Vec::with_capacity(idx.len() * cols);
        for &i in idx {
            data.extend_from_slice(&mv.data()[i * cols..(i + 1) * cols]);
        }
        let v = Tensor::matrix(idx.len(), cols, data)?;
        let rg = self.rg(m);
        self.record(v, Op::GatherRows(m, idx.to_vec()), rg, "gather_rows")
    }

    pub fn sum(&mut self, a: NodeId) -> Result<NodeId> {
        let v = Tensor::scalar(self.value(a).sum())?;
        let rg = self.rg(a);
        self.record(v, Op::Sum(a), rg, "sum")
    }

    pub fn mean(&mut self, a: NodeId) -> Result<NodeId> {
        let n = self.value(a).numel();
        if n == 0 {
            return Err(Error::InvalidArgument("mean: empty tensor".into()));
        }
        let v = Tensor::scalar(self.value(a).sum() / n as f64)?;
        let rg = self.rg(a);
        self.record(v, Op::Mean(a), rg, "mean")
    }

    pub fn tanh(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.map(a, libm::tanh)?;
        let rg = self.rg(a);
        self.record(v, Op::Tanh(a), rg, "tanh")
    }

    pub fn sqrt(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.map(a, libm::sqrt)?;
        let rg = self.rg(a);
        self.record(v, Op::Sqrt(a), rg, "sqrt")
    }

    pub fn log1p(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.map(a, libm::log1p)?;
        let rg = self.rg(a);
        self.record(v, Op::Log1p(a), rg, "log1p")
    }

    fn map(&self, a: NodeId, f: impl Fn(f64) -> f64) -> Result<Tensor> {
        let av = self.value(a);
        Tensor::from_vec(av.shape().to_vec(), av.data().iter().map(|&x| f(x)).collect())
    }

    /// Euclidean norm as a scalar node.
    pub fn norm(&mut self, a: NodeId) -> Result<NodeId> {
        let v = Tensor::scalar(self.value(a).norm())?;
        let rg = self.rg(a);
        self.record(v, Op::Norm(a), rg, "norm")
    }

    pub fn dot(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = Tensor::scalar(self.value(a).dot(self.value(b))?)?;
        let rg = self.rg(a) || self.rg(b);
        self.record(v, Op::Dot(a, b), rg, "dot")
    }

    /// Concatenates vector nodes into one vector.
    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::InvalidArgument("concat: no operands".into()));
        }
        let mut data = Vec::new();
        let mut rg = false;
        for &p in parts {
            let pv = self.value(p);
            if pv.shape().len() != 1 {
                return Err(Error::ShapeMismatch {
                    op: "concat",
                    left: pv.shape().to_vec(),
                    right: vec![],
                });
            }
            data.extend_from_slice(pv.data());
            rg |= self.rg(p);
        }
        let v = Tensor::vector(data)?;
        self.record(v, Op::Concat(parts.to_vec()), rg, "concat")
    }

    /// Contiguous sub-vector `[start, start+len)` of a vector node.
    pub fn slice(&mut self, a: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let av = self.value(a);
        if av.shape().len() != 1 || start + len > av.numel() {
            return Err(Error::InvalidArgument(alloc::format!(
                "slice: [{start}, {start}+{len}) out of bounds for shape {:?}",
                av.shape()
            )));
        }
        let v = Tensor::vector(av.data()[start..start + len].to_vec())?;
        let rg = self.rg(a);
        self.record(v, Op::Slice(a, start, len), rg, "slice")
    }

    /// Reverse sweep from a scalar root. Consumes the tape; gradients are
    /// returned for every reachable node that requires them.
    pub fn backward(self, root: NodeId) -> Result<Gradients> {
        let root_val = &self.nodes[root.0].value;
        if !root_val.is_scalar() {
            return Err(Error::NotScalar {
                shape: root_val.shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[root.0] = Some(vec![1.0]);

        for i in (0..self.nodes.len()).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            // Leaves keep their accumulated gradient.
            if matches!(self.nodes[i].op, Op::Leaf) {
                grads[i] = Some(g);
                continue;
            }
            self.propagate(i, &g, &mut grads)?;
        }

        let mut out = Vec::with_capacity(self.nodes.len());
        for (i, g) in grads.into_iter().enumerate() {
            match g {
                Some(data) => {
                    let t = Tensor::from_vec(self.nodes[i].value.shape().to_vec(), data)
                        .map_err(|_| Error::NonFinite { op: "backward" })?;
                    out.push(Some(t));
                }
                None => out.push(None),
            }
        }
        Ok(Gradients { grads: out })
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) -> Result<()> {
        let node = &self.nodes[i];
        let val = |id: NodeId| self.nodes[id.0].value.data();
        let shape = |id: NodeId| self.nodes[id.0].value.shape();
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                self.acc(grads, *a, g.iter().copied());
                self.acc(grads, *b, g.iter().copied());
            }
            Op::Sub(a, b) => {
                self.acc(grads, *a, g.iter().copied());
                self.acc(grads, *b, g.iter().map(|x| -x));
            }
            Op::Mul(a, b) => {
                let (av, bv) = (val(*a), val(*b));
                self.acc(grads, *a, g.iter().zip(bv).map(|(x, y)| x * y));
                self.acc(grads, *b, g.iter().zip(av).map(|(x, y)| x * y));
            }
            Op::Scale(a, c) => {
                self.acc(grads, *a, g.iter().map(|x| x * c));
            }
            Op::MulScalar(a, s) => {
                let sv = val(*s)[0];
                self.acc(grads, *a, g.iter().map(|x| x * sv));
                let ds = tensor::dot(g, val(*a));
                self.acc(grads, *s, core::iter::once(ds));
            }
            Op::DivScalar(a, s) => {
                let sv = val(*s)[0];
                self.acc(grads, *a, g.iter().map(|x| x / sv));
                let ds = -tensor::dot(g, val(*a)) / (sv * sv);
                self.acc(grads, *s, core::iter::once(ds));
            }
            Op::Matmul(a, b) => self.backward_matmul(*a, *b, g, grads),
            Op::AddRow(a, row) => {
                self.acc(grads, *a, g.iter().copied());
                let n = shape(*row)[0];
                let m = g.len() / n;
                let mut dr = vec![0.0; n];
                for r in 0..m {
                    for j in 0..n {
                        dr[j] += g[r * n + j];
                    }
                }
                self.acc(grads, *row, dr.into_iter());
            }
            Op::GatherRows(m, idx) => {
                let cols = shape(*m)[1];
                let mut dm = vec![0.0; val(*m).len()];
                for (r, &src) in idx.iter().enumerate() {
                    for j in 0..cols {
                        dm[src * cols + j] += g[r * cols + j];
                    }
                }
                self.acc(grads, *m, dm.into_iter());
            }
            Op::Sum(a) => {
                let g0 = g[0];
                let n = val(*a).len();
                self.acc(grads, *a, core::iter::repeat(g0).take(n));
            }
            Op::Mean(a) => {
                let n = val(*a).len();
                let g0 = g[0] / n as f64;
                self.acc(grads, *a, core::iter::repeat(g0).take(n));
            }
            Op::Tanh(a) => {
                let y = node.value.data();
                self.acc(grads, *a, g.iter().zip(y).map(|(x, t)| x * (1.0 - t * t)));
            }
            Op::Sqrt(a) => {
                let y = node.value.data();
                self.acc(grads, *a, g.iter().zip(y).map(|(x, s)| x / (2.0 * s)));
            }
            Op::Log1p(a) => {
                let av = val(*a);
                self.acc(grads, *a, g.iter().zip(av).map(|(x, v)| x / (1.0 + v)));
            }
            Op::Norm(a) => {
                let y = node.value.data()[0];
                if y == 0.0 {
                    return Err(Error::ZeroVector { op: "norm backward" });
                }
                let g0 = g[0];
                self.acc(grads, *a, val(*a).iter().map(|x| g0 * x / y));
            }
            Op::Dot(a, b) => {
                let g0 = g[0];
                self.acc(grads, *a, val(*b).iter().map(|x| g0 * x));
                self.acc(grads, *b, val(*a).iter().map(|x| g0 * x));
            }
            Op::Concat(parts) => {
                let mut off = 0;
                for &p in parts {
                    let n = val(p).len();
                    self.acc(grads, p, g[off..off + n].iter().copied());
                    off += n;
                }
            }
            Op::Slice(a, start, len) => {
                let n = val(*a).len();
                let mut da = vec![0.0; n];
                da[*start..*start + *len].copy_from_slice(g);
                self.acc(grads, *a, da.into_iter());
            }
        }
        Ok(())
    }

    fn backward_matmul(&self, a: NodeId, b: NodeId, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let av = self.nodes[a.0].value.data();
        let bv = self.nodes[b.0].value.data();
        let ashape = self.nodes[a.0].value.shape();
        let bshape = self.nodes[b.0].value.shape();
        match (ashape, bshape) {
            ([m, k], [_, n]) if bshape.len() == 2 && ashape.len() == 2 => {
                if self.rg(a) {
                    let da = tensor::matmul_mm_nt(g, *m, *n, bv, *k);
                    self.acc(grads, a, da.into_iter());
                }
                if self.rg(b) {
                    let db = tensor::matmul_mm_tn(av, *m, *k, g, *n);
                    self.acc(grads, b, db.into_iter());
                }
            }
            ([m, k], [_]) => {
                if self.rg(a) {
                    let mut da = vec![0.0; m * k];
                    for i in 0..*m {
                        for p in 0..*k {
                            da[i * k + p] = g[i] * bv[p];
                        }
                    }
                    self.acc(grads, a, da.into_iter());
                }
                if self.rg(b) {
                    let db = tensor::matmul_vm(g, *m, av, *k);
                    self.acc(grads, b, db.into_iter());
                }
            }
            ([k], [_, n]) => {
                if self.rg(a) {
                    let da = tensor::matmul_mv(bv, *k, *n, g);
                    self.acc(grads, a, da.into_iter());
                }
                if self.rg(b) {
                    let mut db = vec![0.0; k * n];
                    for p in 0..*k {
                        for j in 0..*n {
                            db[p * n + j] = av[p] * g[j];
                        }
                    }
                    self.acc(grads, b, db.into_iter());
                }
            }
            _ => unreachable!("matmul forward validated shapes"),
        }
    }

    fn acc(&self, grads: &mut [Option<Vec<f64>>], id: NodeId, contrib: impl Iterator<Item = f64>) {
        if !self.rg(id) {
            return;
        }
        match &mut grads[id.0] {
            Some(existing) => {
                for (e, c) in existing.iter_mut().zip(contrib) {
                    *e += c;
                }
            }
            slot => {
                let n = self.nodes[id.0].value.numel();
                let mut buf = Vec::with_capacity(n);
                buf.extend(contrib);
                debug_assert_eq!(buf.len(), n);
                *slot = Some(buf);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vecn(v: &[f64]) -> Tensor {
        Tensor::vector(v.to_vec()).unwrap()
    }

    #[test]
    fn square_gradient() {
        // f(x) = x . x at x = 3 -> df/dx = 6
        let mut t = Tape::new();
        let x = t.var(vecn(&[3.0]));
        let y = t.mul(x, x).unwrap();
        let s = t.sum(y).unwrap();
        let g = t.backward(s).unwrap();
        assert_eq!(g.get(x).unwrap().data(), &[6.0]);
    }

    #[test]
    fn cosine_of_self_is_stationary() {
        // cos-similarity(x, x) is scale invariant, so its gradient at any
        // point is ~0.
        let mut t = Tape::new();
        let x = t.var(vecn(&[0.4, -1.3, 2.2]));
        let d = t.dot(x, x).unwrap();
        let na = t.norm(x).unwrap();
        let nn = t.mul(na, na).unwrap();
        let cos = t.div_scalar(d, nn).unwrap();
        let g = t.backward(cos).unwrap();
        for &v in g.get(x).unwrap().data() {
            assert!(v.abs() < 1e-12, "gradient {v}");
        }
    }

    #[test]
    fn matmul_identity_value() {
        let mut t = Tape::new();
        let eye = t.constant(
            Tensor::matrix(3, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap(),
        );
        let v = t.var(vecn(&[1.0, 2.0, 3.0]));
        let y = t.matmul(eye, v).unwrap();
        assert_eq!(t.value(y).data(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn backward_requires_scalar_root() {
        let mut t = Tape::new();
        let x = t.var(vecn(&[1.0, 2.0]));
        let y = t.scale(x, 2.0).unwrap();
        assert!(matches!(t.backward(y), Err(Error::NotScalar { .. })));
    }

    #[test]
    fn div_by_zero_scalar_errors() {
        let mut t = Tape::new();
        let x = t.var(vecn(&[1.0]));
        let z = t.constant(Tensor::scalar(0.0).unwrap());
        assert!(matches!(
            t.div_scalar(x, z),
            Err(Error::DivisionByZero { .. })
        ));
    }

    #[test]
    fn shape_mismatch_errors() {
        let mut t = Tape::new();
        let a = t.var(vecn(&[1.0, 2.0]));
        let b = t.var(vecn(&[1.0, 2.0, 3.0]));
        assert!(matches!(t.add(a, b), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn slice_and_concat_route_gradients() {
        let mut t = Tape::new();
        let x = t.var(vecn(&[1.0, 2.0, 3.0, 4.0]));
        let lo = t.slice(x, 0, 2).unwrap();
        let hi = t.slice(x, 2, 2).unwrap();
        let hi3 = t.scale(hi, 3.0).unwrap();
        let cat = t.concat(&[lo, hi3]).unwrap();
        let s = t.sum(cat).unwrap();
        let g = t.backward(s).unwrap();
        assert_eq!(g.get(x).unwrap().data(), &[1.0, 1.0, 3.0, 3.0]);
    }

    #[test]
    fn gather_rows_scatters_gradient() {
        let mut t = Tape::new();
        let m = t.var(Tensor::matrix(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap());
        let rows = t.gather_rows(m, &[1, 1, 0]).unwrap();
        let s = t.sum(rows).unwrap();
        let g = t.backward(s).unwrap();
        assert_eq!(g.get(m).unwrap().data(), &[1.0, 1.0, 2.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn fan_out_accumulates() {
        // f(x) = sum(x*x) + sum(x) -> grad = 2x + 1
        let mut t = Tape::new();
        let x = t.var(vecn(&[1.0, -2.0]));
        let sq = t.mul(x, x).unwrap();
        let s1 = t.sum(sq).unwrap();
        let s2 = t.sum(x).unwrap();
        let y = t.add(s1, s2).unwrap();
        let g = t.backward(y).unwrap();
        assert_eq!(g.get(x).unwrap().data(), &[3.0, -3.0]);
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut t = Tape::new();
        let x = t.var(vecn(&[2.0]));
        let c = t.constant(vecn(&[5.0]));
        let y = t.mul(x, c).unwrap();
        let s = t.sum(y).unwrap();
        let g = t.backward(s).unwrap();
        assert_eq!(g.get(x).unwrap().data(), &[5.0]);
        assert!(g.get(c).is_none());
    }

    #[test]
    fn sqrt_of_negative_is_error() {
        let mut t = Tape::new();
        let x = t.var(vecn(&[-1.0]));
        assert!(matches!(t.sqrt(x), Err(Error::NonFinite { .. })));
    }
}
