//! Affine maps over the last axis and batched matrix products.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::graph::{acc_buf, wants_grad, Graph, Node, NodeId, Op};
use super::kernels::{gemm_nn, gemm_nt, gemm_tn};
use super::tensor::Tensor;

impl<T: Scalar> Graph<T> {
    /// `y[..., o] = sum_i x[..., i] * w[o, i] + b[o]`, weight rows are output
    /// features.
    pub fn linear(
        &mut self,
        x: &Tensor<T>,
        w: &Tensor<T>,
        b: Option<&Tensor<T>>,
    ) -> Result<Tensor<T>> {
        if x.rank() == 0 || w.rank() != 2 {
            return Err(Error::Shape {
                op: "linear",
                detail: alloc::format!("x {:?}, w {:?}", x.shape, w.shape),
            });
        }
        let din = *x.shape.last().expect("rank checked");
        let (dout, wdin) = (w.shape[0], w.shape[1]);
        if din != wdin {
            return Err(Error::Dim {
                op: "linear",
                axis: x.rank() - 1,
                expected: wdin,
                got: din,
            });
        }
        if let Some(b) = b {
            if b.shape != [dout] {
                return Err(Error::Dim {
                    op: "linear",
                    axis: 0,
                    expected: dout,
                    got: b.numel(),
                });
            }
        }
        let xi = self.ensure(x);
        let wi = self.ensure(w);
        let bi = b.map(|t| self.ensure(t));

        let m = x.numel() / din;
        let mut out = vec![T::zero(); m * dout];
        gemm_nt(&mut out, x.data(), w.data(), m, din, dout);
        if let Some(b) = b {
            let bd = b.data();
            for row in out.chunks_exact_mut(dout) {
                for (o, &bv) in row.iter_mut().zip(bd.iter()) {
                    *o = *o + bv;
                }
            }
        }
        let mut out_shape = x.shape.clone();
        *out_shape.last_mut().expect("rank checked") = dout;
        let rg = self.nodes[xi].requires_grad
            || self.nodes[wi].requires_grad
            || bi.map(|i| self.nodes[i].requires_grad).unwrap_or(false);
        Ok(self.push(Op::Linear { x: xi, w: wi, b: bi }, out_shape, out, rg))
    }

    /// Batched matrix product: both operands rank >= 2 with identical leading
    /// dims; contracts the last axis of `a` with the second-to-last of `b`.
    pub fn matmul(&mut self, a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
        if a.rank() < 2 || b.rank() != a.rank() || a.shape[..a.rank() - 2] != b.shape[..b.rank() - 2]
        {
            return Err(Error::Shape {
                op: "matmul",
                detail: alloc::format!("a {:?}, b {:?}", a.shape, b.shape),
            });
        }
        let r = a.rank();
        let (m, k) = (a.shape[r - 2], a.shape[r - 1]);
        let (bk, n) = (b.shape[r - 2], b.shape[r - 1]);
        if k != bk {
            return Err(Error::Dim {
                op: "matmul",
                axis: r - 2,
                expected: k,
                got: bk,
            });
        }
        let batch: usize = a.shape[..r - 2].iter().product();
        let ai = self.ensure(a);
        let bi = self.ensure(b);
        let mut out = vec![T::zero(); batch * m * n];
        for bidx in 0..batch {
            gemm_nn(
                &mut out[bidx * m * n..(bidx + 1) * m * n],
                &a.data()[bidx * m * k..(bidx + 1) * m * k],
                &b.data()[bidx * k * n..(bidx + 1) * k * n],
                m,
                k,
                n,
            );
        }
        let mut out_shape = a.shape[..r - 2].to_vec();
        out_shape.push(m);
        out_shape.push(n);
        let rg = self.nodes[ai].requires_grad || self.nodes[bi].requires_grad;
        Ok(self.push(Op::MatMul { a: ai, b: bi }, out_shape, out, rg))
    }
}

pub(crate) fn backward<T: Scalar>(
    nodes: &[Node<T>],
    grads: &mut [Option<Vec<T>>],
    id: NodeId,
    up: &[T],
) -> Result<()> {
    match &nodes[id].op {
        Op::Linear { x, w, b } => {
            let (x, w, b) = (*x, *w, *b);
            let din = *nodes[x].shape.last().expect("linear input rank >= 1");
            let dout = nodes[w].shape[0];
            let m = nodes[x].data.len() / din;
            if wants_grad(nodes, x) {
                let wd = nodes[w].data.clone();
                let buf = acc_buf(grads, x, m * din);
                gemm_nn(buf, up, &wd, m, dout, din);
            }
            if wants_grad(nodes, w) {
                let xd = nodes[x].data.clone();
                let buf = acc_buf(grads, w, dout * din);
                gemm_tn(buf, up, &xd, m, dout, din);
            }
            if let Some(b) = b {
                if wants_grad(nodes, b) {
                    let buf = acc_buf(grads, b, dout);
                    for row in up.chunks_exact(dout) {
                        for (g, &u) in buf.iter_mut().zip(row.iter()) {
                            *g = *g + u;
                        }
                    }
                }
            }
        }
        Op::MatMul { a, b } => {
            let (a, b) = (*a, *b);
            let r = nodes[a].shape.len();
            let (m, k) = (nodes[a].shape[r - 2], nodes[a].shape[r - 1]);
            let n = nodes[b].shape[r - 1];
            let batch: usize = nodes[a].shape[..r - 2].iter().product();
            if wants_grad(nodes, a) {
                let bd = nodes[b].data.clone();
                let buf = acc_buf(grads, a, batch * m * k);
                for i in 0..batch {
                    // dA = dC * B^T
                    gemm_nt(
                        &mut buf[i * m * k..(i + 1) * m * k],
                        &up[i * m * n..(i + 1) * m * n],
                        &bd[i * k * n..(i + 1) * k * n],
                        m,
                        n,
                        k,
                    );
                }
            }
            if wants_grad(nodes, b) {
                let ad = nodes[a].data.clone();
                let buf = acc_buf(grads, b, batch * k * n);
                for i in 0..batch {
                    // dB = A^T * dC
                    gemm_tn(
                        &mut buf[i * k * n..(i + 1) * k * n],
                        &ad[i * m * k..(i + 1) * m * k],
                        &up[i * m * n..(i + 1) * m * n],
                        m,
                        k,
                        n,
                    );
                }
            }
        }
        _ => unreachable!("ops_linear::backward dispatched with foreign op"),
    }
    Ok(())
}
