//! Elementwise and broadcast arithmetic, activations, differentiable
//! binarization.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::graph::{acc_buf, wants_grad, Graph, Node, NodeId, Op};
use super::tensor::Tensor;

/// Broadcast result shape under the usual trailing-alignment rules.
pub(crate) fn broadcast_shape(
    op: &'static str,
    a: &[usize],
    b: &[usize],
) -> Result<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0usize; rank];
    for i in 0..rank {
        let da = if i < rank - a.len() { 1 } else { a[i - (rank - a.len())] };
        let db = if i < rank - b.len() { 1 } else { b[i - (rank - b.len())] };
        out[i] = if da == db || db == 1 {
            da
        } else if da == 1 {
            db
        } else {
            return Err(Error::Shape {
                op,
                detail: alloc::format!("cannot broadcast {a:?} with {b:?}"),
            });
        };
    }
    Ok(out)
}

/// Element strides of `shape` viewed inside `out_shape` (0 on broadcast axes).
fn bcast_strides(shape: &[usize], out_shape: &[usize]) -> Vec<usize> {
    let rank = out_shape.len();
    let offset = rank - shape.len();
    let mut real = vec![1usize; shape.len()];
    for d in (0..shape.len().saturating_sub(1)).rev() {
        real[d] = real[d + 1] * shape[d + 1];
    }
    let mut out = vec![0usize; rank];
    for d in 0..rank {
        if d >= offset && shape[d - offset] != 1 {
            out[d] = real[d - offset];
        }
    }
    out
}

/// Walk all output coordinates in row-major order, yielding the flat offsets
/// into the output and both (possibly broadcast) inputs.
fn bcast_walk(
    out_shape: &[usize],
    a_str: &[usize],
    b_str: &[usize],
    mut f: impl FnMut(usize, usize, usize),
) {
    let numel: usize = out_shape.iter().product();
    let rank = out_shape.len();
    if rank == 0 {
        f(0, 0, 0);
        return;
    }
    let mut coords = vec![0usize; rank];
    let mut ai = 0usize;
    let mut bi = 0usize;
    for oi in 0..numel {
        f(oi, ai, bi);
        for d in (0..rank).rev() {
            coords[d] += 1;
            ai += a_str[d];
            bi += b_str[d];
            if coords[d] < out_shape[d] {
                break;
            }
            ai -= a_str[d] * out_shape[d];
            bi -= b_str[d] * out_shape[d];
            coords[d] = 0;
        }
    }
}

impl<T: Scalar> Graph<T> {
    fn binary(
        &mut self,
        op_name: &'static str,
        a: &Tensor<T>,
        b: &Tensor<T>,
        f: impl Fn(T, T) -> T,
        make: impl Fn(NodeId, NodeId) -> Op<T>,
    ) -> Result<Tensor<T>> {
        let ai = self.ensure(a);
        let bi = self.ensure(b);
        let out_shape = broadcast_shape(op_name, &a.shape, &b.shape)?;
        let numel: usize = out_shape.iter().product();
        let mut out = vec![T::zero(); numel];
        let (ad, bd) = (a.data(), b.data());
        if a.shape == b.shape {
            for ((o, &x), &y) in out.iter_mut().zip(ad.iter()).zip(bd.iter()) {
                *o = f(x, y);
            }
        } else {
            let astr = bcast_strides(&a.shape, &out_shape);
            let bstr = bcast_strides(&b.shape, &out_shape);
            bcast_walk(&out_shape, &astr, &bstr, |oi, aj, bj| {
                out[oi] = f(ad[aj], bd[bj]);
            });
        }
        let rg = self.nodes[ai].requires_grad || self.nodes[bi].requires_grad;
        Ok(self.push(make(ai, bi), out_shape, out, rg))
    }

    pub fn add(&mut self, a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
        self.binary("add", a, b, |x, y| x + y, |ai, bi| Op::Add { a: ai, b: bi })
    }

    pub fn sub(&mut self, a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
        self.binary("sub", a, b, |x, y| x - y, |ai, bi| Op::Sub { a: ai, b: bi })
    }

    /// Broadcasting elementwise product (gating, residual scaling).
    pub fn mul(&mut self, a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
        self.binary("mul", a, b, |x, y| x * y, |ai, bi| Op::Mul { a: ai, b: bi })
    }

    pub fn scale(&mut self, a: &Tensor<T>, factor: T) -> Result<Tensor<T>> {
        let ai = self.ensure(a);
        let out: Vec<T> = a.data().iter().map(|&x| x * factor).collect();
        let rg = self.nodes[ai].requires_grad;
        Ok(self.push(Op::Scale { a: ai, factor }, a.shape.clone(), out, rg))
    }

    /// Exact Gaussian-CDF GELU: x * Phi(x).
    pub fn gelu(&mut self, a: &Tensor<T>) -> Result<Tensor<T>> {
        let ai = self.ensure(a);
        let out: Vec<T> = a.data().iter().map(|&x| x * gauss_cdf(x)).collect();
        let rg = self.nodes[ai].requires_grad;
        Ok(self.push(Op::Gelu { a: ai }, a.shape.clone(), out, rg))
    }

    pub fn sigmoid(&mut self, a: &Tensor<T>) -> Result<Tensor<T>> {
        let ai = self.ensure(a);
        let out: Vec<T> = a.data().iter().map(|&x| sigmoid_stable(x)).collect();
        let rg = self.nodes[ai].requires_grad;
        Ok(self.push(Op::Sigmoid { a: ai }, a.shape.clone(), out, rg))
    }

    pub fn relu(&mut self, a: &Tensor<T>) -> Result<Tensor<T>> {
        let ai = self.ensure(a);
        let out: Vec<T> = a
            .data()
            .iter()
            .map(|&x| if x > T::zero() { x } else { T::zero() })
            .collect();
        let rg = self.nodes[ai].requires_grad;
        Ok(self.push(Op::Relu { a: ai }, a.shape.clone(), out, rg))
    }

    /// Approximate binarization `1 / (1 + exp(-k (P - T)))` with the exponent
    /// clamped to ±500 so extreme inputs saturate instead of overflowing.
    pub fn diff_binarize(&mut self, p: &Tensor<T>, t: &Tensor<T>, k: T) -> Result<Tensor<T>> {
        if p.shape != t.shape {
            return Err(Error::Shape {
                op: "diff_binarize",
                detail: alloc::format!("P {:?} vs T {:?}", p.shape, t.shape),
            });
        }
        let pi = self.ensure(p);
        let ti = self.ensure(t);
        let cap = T::from_f64(500.0);
        let out: Vec<T> = p
            .data()
            .iter()
            .zip(t.data().iter())
            .map(|(&pv, &tv)| {
                let z = clamp(k * (pv - tv), -cap, cap);
                sigmoid_stable(z)
            })
            .collect();
        let rg = self.nodes[pi].requires_grad || self.nodes[ti].requires_grad;
        Ok(self.push(Op::DiffBinarize { p: pi, t: ti, k }, p.shape.clone(), out, rg))
    }
}

#[inline]
pub(crate) fn clamp<T: Scalar>(x: T, lo: T, hi: T) -> T {
    if x < lo {
        lo
    } else if x > hi {
        hi
    } else {
        x
    }
}

#[inline]
pub(crate) fn gauss_cdf<T: Scalar>(x: T) -> T {
    let half = T::from_f64(0.5);
    let inv_sqrt2 = T::from_f64(core::f64::consts::FRAC_1_SQRT_2);
    half * (T::one() + (x * inv_sqrt2).erf())
}

#[inline]
pub(crate) fn gauss_pdf<T: Scalar>(x: T) -> T {
    let inv_sqrt_2pi = T::from_f64(0.398_942_280_401_432_7);
    (-(x * x) * T::from_f64(0.5)).exp() * inv_sqrt_2pi
}

#[inline]
pub(crate) fn sigmoid_stable<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Accumulate `up ⊙ factor(other)` into the (possibly broadcast) input grad.
fn acc_binary_side<T: Scalar>(
    grads: &mut [Option<Vec<T>>],
    target: NodeId,
    target_shape: &[usize],
    other_shape_for_walk: &[usize],
    out_shape: &[usize],
    up: &[T],
    mut contrib: impl FnMut(usize, usize) -> T,
) {
    let numel: usize = target_shape.iter().product();
    let buf = acc_buf(grads, target, numel);
    let tstr = bcast_strides(target_shape, out_shape);
    let ostr = bcast_strides(other_shape_for_walk, out_shape);
    bcast_walk(out_shape, &tstr, &ostr, |oi, tj, oj| {
        buf[tj] = buf[tj] + up[oi] * contrib(oi, oj);
    });
}

pub(crate) fn backward<T: Scalar>(
    nodes: &[Node<T>],
    grads: &mut [Option<Vec<T>>],
    id: NodeId,
    up: &[T],
) -> Result<()> {
    let out_shape = nodes[id].shape.clone();
    match &nodes[id].op {
        Op::Add { a, b } => {
            for &(side, other) in &[(*a, *b), (*b, *a)] {
                if wants_grad(nodes, side) {
                    let oshape = nodes[other].shape.clone();
                    acc_binary_side(
                        grads,
                        side,
                        &nodes[side].shape.clone(),
                        &oshape,
                        &out_shape,
                        up,
                        |_, _| T::one(),
                    );
                }
            }
        }
        Op::Sub { a, b } => {
            if wants_grad(nodes, *a) {
                let oshape = nodes[*b].shape.clone();
                acc_binary_side(grads, *a, &nodes[*a].shape.clone(), &oshape, &out_shape, up, |_, _| T::one());
            }
            if wants_grad(nodes, *b) {
                let oshape = nodes[*a].shape.clone();
                acc_binary_side(grads, *b, &nodes[*b].shape.clone(), &oshape, &out_shape, up, |_, _| {
                    -T::one()
                });
            }
        }
        Op::Mul { a, b } => {
            let (a, b) = (*a, *b);
            if wants_grad(nodes, a) {
                let bd = nodes[b].data.clone();
                acc_binary_side(
                    grads,
                    a,
                    &nodes[a].shape.clone(),
                    &nodes[b].shape.clone(),
                    &out_shape,
                    up,
                    |_, oj| bd[oj],
                );
            }
            if wants_grad(nodes, b) {
                let ad = nodes[a].data.clone();
                acc_binary_side(
                    grads,
                    b,
                    &nodes[b].shape.clone(),
                    &nodes[a].shape.clone(),
                    &out_shape,
                    up,
                    |_, oj| ad[oj],
                );
            }
        }
        Op::Scale { a, factor } => {
            if wants_grad(nodes, *a) {
                let f = *factor;
                let buf = acc_buf(grads, *a, up.len());
                for (g, &u) in buf.iter_mut().zip(up.iter()) {
                    *g = *g + u * f;
                }
            }
        }
        Op::Gelu { a } => {
            if wants_grad(nodes, *a) {
                let x = nodes[*a].data.clone();
                let buf = acc_buf(grads, *a, up.len());
                for i in 0..up.len() {
                    let d = gauss_cdf(x[i]) + x[i] * gauss_pdf(x[i]);
                    buf[i] = buf[i] + up[i] * d;
                }
            }
        }
        Op::Sigmoid { a } => {
            if wants_grad(nodes, *a) {
                let s = nodes[id].data.clone();
                let buf = acc_buf(grads, *a, up.len());
                for i in 0..up.len() {
                    buf[i] = buf[i] + up[i] * s[i] * (T::one() - s[i]);
                }
            }
        }
        Op::Relu { a } => {
            if wants_grad(nodes, *a) {
                let x = nodes[*a].data.clone();
                let buf = acc_buf(grads, *a, up.len());
                for i in 0..up.len() {
                    if x[i] > T::zero() {
                        buf[i] = buf[i] + up[i];
                    }
                }
            }
        }
        Op::DiffBinarize { p, t, k } => {
            let (p, t, k) = (*p, *t, *k);
            let b = nodes[id].data.clone();
            if wants_grad(nodes, p) {
                let buf = acc_buf(grads, p, up.len());
                for i in 0..up.len() {
                    buf[i] = buf[i] + up[i] * k * b[i] * (T::one() - b[i]);
                }
            }
            if wants_grad(nodes, t) {
                let buf = acc_buf(grads, t, up.len());
                for i in 0..up.len() {
                    buf[i] = buf[i] - up[i] * k * b[i] * (T::one() - b[i]);
                }
            }
        }
        _ => unreachable!("ops_basic::backward dispatched with foreign op"),
    }
    Ok(())
}
