//! Softmax and whole-tensor reductions.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::graph::{acc_buf, wants_grad, Graph, Node, NodeId, Op};
use super::tensor::Tensor;

impl<T: Scalar> Graph<T> {
    /// Numerically stable softmax along `axis` (max is subtracted first).
    pub fn softmax(&mut self, x: &Tensor<T>, axis: usize) -> Result<Tensor<T>> {
        if axis >= x.rank() {
            return Err(Error::Shape {
                op: "softmax",
                detail: alloc::format!("axis {axis} out of range for {:?}", x.shape),
            });
        }
        let xi = self.ensure(x);
        let mid = x.shape[axis];
        let outer: usize = x.shape[..axis].iter().product();
        let inner: usize = x.shape[axis + 1..].iter().product();
        let xd = x.data();
        let mut out = vec![T::zero(); xd.len()];
        for o in 0..outer {
            for i in 0..inner {
                let base = o * mid * inner + i;
                let mut maxv = xd[base];
                for m in 1..mid {
                    let v = xd[base + m * inner];
                    if v > maxv {
                        maxv = v;
                    }
                }
                let mut sum = T::zero();
                for m in 0..mid {
                    let e = (xd[base + m * inner] - maxv).exp();
                    out[base + m * inner] = e;
                    sum = sum + e;
                }
                let inv = T::one() / sum;
                for m in 0..mid {
                    out[base + m * inner] = out[base + m * inner] * inv;
                }
            }
        }
        let rg = self.nodes[xi].requires_grad;
        Ok(self.push(Op::Softmax { x: xi, axis }, x.shape.clone(), out, rg))
    }

    /// Sum of all elements, as a rank-0 scalar.
    pub fn sum_all(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let xi = self.ensure(x);
        let mut s = T::zero();
        for &v in x.data() {
            s = s + v;
        }
        let rg = self.nodes[xi].requires_grad;
        Ok(self.push(Op::SumAll { x: xi }, vec![], vec![s], rg))
    }

    /// Mean of all elements, as a rank-0 scalar.
    pub fn mean_all(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let xi = self.ensure(x);
        let mut s = T::zero();
        for &v in x.data() {
            s = s + v;
        }
        let n = T::from_usize(x.numel().max(1));
        let rg = self.nodes[xi].requires_grad;
        Ok(self.push(Op::MeanAll { x: xi }, vec![], vec![s / n], rg))
    }
}

pub(crate) fn backward<T: Scalar>(
    nodes: &[Node<T>],
    grads: &mut [Option<Vec<T>>],
    id: NodeId,
    up: &[T],
) -> Result<()> {
    match &nodes[id].op {
        Op::Softmax { x, axis } => {
            let (x, axis) = (*x, *axis);
            if wants_grad(nodes, x) {
                let shape = nodes[x].shape.clone();
                let mid = shape[axis];
                let outer: usize = shape[..axis].iter().product();
                let inner: usize = shape[axis + 1..].iter().product();
                let s = nodes[id].data.clone();
                let buf = acc_buf(grads, x, s.len());
                for o in 0..outer {
                    for i in 0..inner {
                        let base = o * mid * inner + i;
                        let mut dot = T::zero();
                        for m in 0..mid {
                            let idx = base + m * inner;
                            dot = dot + up[idx] * s[idx];
                        }
                        for m in 0..mid {
                            let idx = base + m * inner;
                            buf[idx] = buf[idx] + s[idx] * (up[idx] - dot);
                        }
                    }
                }
            }
        }
        Op::SumAll { x } => {
            let x = *x;
            if wants_grad(nodes, x) {
                let n = nodes[x].data.len();
                let u = up[0];
                let buf = acc_buf(grads, x, n);
                for g in buf.iter_mut() {
                    *g = *g + u;
                }
            }
        }
        Op::MeanAll { x } => {
            let x = *x;
            if wants_grad(nodes, x) {
                let n = nodes[x].data.len();
                let u = up[0] / T::from_usize(n.max(1));
                let buf = acc_buf(grads, x, n);
                for g in buf.iter_mut() {
                    *g = *g + u;
                }
            }
        }
        _ => unreachable!("ops_softmax::backward dispatched with foreign op"),
    }
    Ok(())
}
