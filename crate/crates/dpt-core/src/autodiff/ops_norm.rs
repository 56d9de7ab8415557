//! Layer and batch normalization.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::graph::{acc_buf, wants_grad, Graph, Node, NodeId, Op};
use super::tensor::Tensor;
use super::Mode;

/// Running-statistics wiring for batch norm. `mean_param`/`var_param` are the
/// parameter-store buffer ids the trainer should write updates back to.
pub(crate) struct BnRunning<'a, T> {
    pub mean: &'a Tensor<T>,
    pub var: &'a Tensor<T>,
    pub momentum: T,
    pub mean_param: Option<usize>,
    pub var_param: Option<usize>,
}

impl<T: Scalar> Graph<T> {
    /// Normalize over `axis` (zero mean, unit variance per remaining index),
    /// then apply per-`axis`-element scale and shift.
    pub fn layer_norm(
        &mut self,
        x: &Tensor<T>,
        scale: &Tensor<T>,
        shift: &Tensor<T>,
        axis: usize,
        eps: T,
    ) -> Result<Tensor<T>> {
        if eps <= T::zero() {
            return Err(Error::Config(alloc::format!("layer_norm: eps must be > 0")));
        }
        if axis >= x.rank() {
            return Err(Error::Shape {
                op: "layer_norm",
                detail: alloc::format!("axis {axis} out of range for {:?}", x.shape),
            });
        }
        let mid = x.shape[axis];
        if scale.numel() != mid || shift.numel() != mid {
            return Err(Error::Dim {
                op: "layer_norm",
                axis,
                expected: mid,
                got: scale.numel(),
            });
        }
        let xi = self.ensure(x);
        let si = self.ensure(scale);
        let hi = self.ensure(shift);
        let outer: usize = x.shape[..axis].iter().product();
        let inner: usize = x.shape[axis + 1..].iter().product();
        let xd = x.data();
        let sd = scale.data();
        let hd = shift.data();
        let mut out = vec![T::zero(); xd.len()];
        let inv_mid = T::one() / T::from_usize(mid);
        for o in 0..outer {
            for i in 0..inner {
                let base = o * mid * inner + i;
                let mut mean = T::zero();
                for m in 0..mid {
                    mean = mean + xd[base + m * inner];
                }
                mean = mean * inv_mid;
                let mut var = T::zero();
                for m in 0..mid {
                    let d = xd[base + m * inner] - mean;
                    var = var + d * d;
                }
                var = var * inv_mid;
                let rstd = T::one() / (var + eps).sqrt();
                for m in 0..mid {
                    let xhat = (xd[base + m * inner] - mean) * rstd;
                    out[base + m * inner] = sd[m] * xhat + hd[m];
                }
            }
        }
        let rg = self.nodes[xi].requires_grad
            || self.nodes[si].requires_grad
            || self.nodes[hi].requires_grad;
        Ok(self.push(
            Op::LayerNorm { x: xi, scale: si, shift: hi, axis, eps },
            x.shape.clone(),
            out,
            rg,
        ))
    }

    /// Batch norm over NCHW (statistics over N,H,W per channel). Train mode
    /// normalizes with batch statistics and reports running updates via
    /// [`Graph::take_stat_updates`]; eval mode consumes the running values.
    pub(crate) fn batch_norm(
        &mut self,
        x: &Tensor<T>,
        scale: &Tensor<T>,
        shift: &Tensor<T>,
        eps: T,
        mode: Mode,
        running: BnRunning<'_, T>,
    ) -> Result<Tensor<T>> {
        if eps <= T::zero() {
            return Err(Error::Config(alloc::format!("batch_norm: eps must be > 0")));
        }
        if x.rank() != 4 {
            return Err(Error::Shape {
                op: "batch_norm",
                detail: alloc::format!("want NCHW, got {:?}", x.shape),
            });
        }
        let (n, c, h, w) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
        for (name, t) in [("scale", scale), ("shift", shift), ("running_mean", running.mean), ("running_var", running.var)] {
            if t.numel() != c {
                return Err(Error::Shape {
                    op: "batch_norm",
                    detail: alloc::format!("{name} has {} elements, want {c}", t.numel()),
                });
            }
        }
        let xi = self.ensure(x);
        let si = self.ensure(scale);
        let hi = self.ensure(shift);
        let xd = x.data();
        let sd = scale.data();
        let hd = shift.data();
        let plane = h * w;
        let m = n * plane;
        let inv_m = T::one() / T::from_usize(m);

        let (mean, var) = match mode {
            Mode::Train => {
                let mut mean = vec![T::zero(); c];
                let mut var = vec![T::zero(); c];
                for ch in 0..c {
                    let mut s = T::zero();
                    for img in 0..n {
                        let p = &xd[(img * c + ch) * plane..(img * c + ch + 1) * plane];
                        for &v in p {
                            s = s + v;
                        }
                    }
                    let mu = s * inv_m;
                    let mut sq = T::zero();
                    for img in 0..n {
                        let p = &xd[(img * c + ch) * plane..(img * c + ch + 1) * plane];
                        for &v in p {
                            let d = v - mu;
                            sq = sq + d * d;
                        }
                    }
                    mean[ch] = mu;
                    var[ch] = sq * inv_m;
                }
                // Report momentum-blended running statistics for the trainer.
                let mom = running.momentum;
                let keep = T::one() - mom;
                if let Some(pid) = running.mean_param {
                    let new: Vec<T> = running
                        .mean
                        .data()
                        .iter()
                        .zip(mean.iter())
                        .map(|(&r, &b)| keep * r + mom * b)
                        .collect();
                    self.stat_updates.push((pid, new));
                }
                if let Some(pid) = running.var_param {
                    let new: Vec<T> = running
                        .var
                        .data()
                        .iter()
                        .zip(var.iter())
                        .map(|(&r, &b)| keep * r + mom * b)
                        .collect();
                    self.stat_updates.push((pid, new));
                }
                (mean, var)
            }
            Mode::Eval => (running.mean.data().to_vec(), running.var.data().to_vec()),
        };

        let mut out = vec![T::zero(); xd.len()];
        for img in 0..n {
            for ch in 0..c {
                let rstd = T::one() / (var[ch] + eps).sqrt();
                let (mu, g, b) = (mean[ch], sd[ch], hd[ch]);
                let src = &xd[(img * c + ch) * plane..(img * c + ch + 1) * plane];
                let dst = &mut out[(img * c + ch) * plane..(img * c + ch + 1) * plane];
                for (o, &v) in dst.iter_mut().zip(src.iter()) {
                    *o = g * (v - mu) * rstd + b;
                }
            }
        }
        let rg = self.nodes[xi].requires_grad
            || self.nodes[si].requires_grad
            || self.nodes[hi].requires_grad;
        Ok(self.push(
            Op::BatchNorm {
                x: xi,
                scale: si,
                shift: hi,
                eps,
                mean: Arc::new(mean),
                var: Arc::new(var),
                train: mode == Mode::Train,
            },
            x.shape.clone(),
            out,
            rg,
        ))
    }
}

pub(crate) fn backward<T: Scalar>(
    nodes: &[Node<T>],
    grads: &mut [Option<Vec<T>>],
    id: NodeId,
    up: &[T],
) -> Result<()> {
    match &nodes[id].op {
        Op::LayerNorm { x, scale, shift, axis, eps } => {
            let (x, scale, shift, axis, eps) = (*x, *scale, *shift, *axis, *eps);
            ln_backward(nodes, grads, up, x, scale, shift, axis, eps);
        }
        Op::BatchNorm { x, scale, shift, eps, mean, var, train } => {
            let (x, scale, shift, eps, train) = (*x, *scale, *shift, *eps, *train);
            let (mean, var) = (mean.clone(), var.clone());
            bn_backward(nodes, grads, up, x, scale, shift, eps, &mean, &var, train);
        }
        _ => unreachable!("ops_norm::backward dispatched with foreign op"),
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn ln_backward<T: Scalar>(
    nodes: &[Node<T>],
    grads: &mut [Option<Vec<T>>],
    up: &[T],
    x: NodeId,
    scale: NodeId,
    shift: NodeId,
    axis: usize,
    eps: T,
) {
    let shape = nodes[x].shape.clone();
    let mid = shape[axis];
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let xd = nodes[x].data.clone();
    let sd = nodes[scale].data.clone();
    let inv_mid = T::one() / T::from_usize(mid);
    let want_x = wants_grad(nodes, x);
    let want_s = wants_grad(nodes, scale);
    let want_h = wants_grad(nodes, shift);

    let mut dscale = vec![T::zero(); mid];
    let mut dshift = vec![T::zero(); mid];
    let mut dx = if want_x { vec![T::zero(); xd.len()] } else { Vec::new() };

    for o in 0..outer {
        for i in 0..inner {
            let base = o * mid * inner + i;
            let mut mean = T::zero();
            for m in 0..mid {
                mean = mean + xd[base + m * inner];
            }
            mean = mean * inv_mid;
            let mut var = T::zero();
            for m in 0..mid {
                let d = xd[base + m * inner] - mean;
                var = var + d * d;
            }
            var = var * inv_mid;
            let rstd = T::one() / (var + eps).sqrt();

            // g = dy * gamma; dx = rstd * (g - mean(g) - xhat * mean(g*xhat))
            let mut g_mean = T::zero();
            let mut gx_mean = T::zero();
            for m in 0..mid {
                let idx = base + m * inner;
                let xhat = (xd[idx] - mean) * rstd;
                let g = up[idx] * sd[m];
                g_mean = g_mean + g;
                gx_mean = gx_mean + g * xhat;
                if want_s {
                    dscale[m] = dscale[m] + up[idx] * xhat;
                }
                if want_h {
                    dshift[m] = dshift[m] + up[idx];
                }
            }
            g_mean = g_mean * inv_mid;
            gx_mean = gx_mean * inv_mid;
            if want_x {
                for m in 0..mid {
                    let idx = base + m * inner;
                    let xhat = (xd[idx] - mean) * rstd;
                    let g = up[idx] * sd[m];
                    dx[idx] = rstd * (g - g_mean - xhat * gx_mean);
                }
            }
        }
    }
    if want_x {
        let buf = acc_buf(grads, x, xd.len());
        for (gb, v) in buf.iter_mut().zip(dx.iter()) {
            *gb = *gb + *v;
        }
    }
    if want_s {
        let buf = acc_buf(grads, scale, mid);
        for (gb, v) in buf.iter_mut().zip(dscale.iter()) {
            *gb = *gb + *v;
        }
    }
    if want_h {
        let buf = acc_buf(grads, shift, mid);
        for (gb, v) in buf.iter_mut().zip(dshift.iter()) {
            *gb = *gb + *v;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn bn_backward<T: Scalar>(
    nodes: &[Node<T>],
    grads: &mut [Option<Vec<T>>],
    up: &[T],
    x: NodeId,
    scale: NodeId,
    shift: NodeId,
    eps: T,
    mean: &[T],
    var: &[T],
    train: bool,
) {
    let shape = nodes[x].shape.clone();
    let (n, c, h, w) = (shape[0], shape[1], shape[2], shape[3]);
    let plane = h * w;
    let m = n * plane;
    let inv_m = T::one() / T::from_usize(m);
    let xd = nodes[x].data.clone();
    let sd = nodes[scale].data.clone();
    let want_x = wants_grad(nodes, x);
    let want_s = wants_grad(nodes, scale);
    let want_h = wants_grad(nodes, shift);

    let mut dscale = vec![T::zero(); c];
    let mut dshift = vec![T::zero(); c];
    let mut dx = if want_x { vec![T::zero(); xd.len()] } else { Vec::new() };

    for ch in 0..c {
        let rstd = T::one() / (var[ch] + eps).sqrt();
        let mu = mean[ch];
        let mut dg = T::zero();
        let mut db = T::zero();
        for img in 0..n {
            let off = (img * c + ch) * plane;
            for i in 0..plane {
                let xhat = (xd[off + i] - mu) * rstd;
                dg = dg + up[off + i] * xhat;
                db = db + up[off + i];
            }
        }
        dscale[ch] = dg;
        dshift[ch] = db;
        if want_x {
            let g = sd[ch];
            if train {
                for img in 0..n {
                    let off = (img * c + ch) * plane;
                    for i in 0..plane {
                        let xhat = (xd[off + i] - mu) * rstd;
                        dx[off + i] =
                            g * rstd * (up[off + i] - db * inv_m - xhat * dg * inv_m);
                    }
                }
            } else {
                for img in 0..n {
                    let off = (img * c + ch) * plane;
                    for i in 0..plane {
                        dx[off + i] = g * rstd * up[off + i];
                    }
                }
            }
        }
    }
    if want_x {
        let buf = acc_buf(grads, x, xd.len());
        for (gb, v) in buf.iter_mut().zip(dx.iter()) {
            *gb = *gb + *v;
        }
    }
    if want_s {
        let buf = acc_buf(grads, scale, c);
        for (gb, v) in buf.iter_mut().zip(dscale.iter()) {
            *gb = *gb + *v;
        }
    }
    if want_h {
        let buf = acc_buf(grads, shift, c);
        for (gb, v) in buf.iter_mut().zip(dshift.iter()) {
            *gb = *gb + *v;
        }
    }
}
