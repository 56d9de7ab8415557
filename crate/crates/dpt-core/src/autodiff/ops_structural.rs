//! Shape-moving operations: concatenation, slicing, reshape, transpose,
//! pooling, upsampling, and local-window (de)tokenization.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::graph::{acc_buf, wants_grad, Graph, Node, NodeId, Op};
use super::tensor::Tensor;

#[inline]
fn ceil_div(a: usize, b: usize) -> usize {
    (a + b - 1) / b
}

impl<T: Scalar> Graph<T> {
    pub fn concat(&mut self, inputs: &[&Tensor<T>], axis: usize) -> Result<Tensor<T>> {
        if inputs.is_empty() {
            return Err(Error::Usage(alloc::format!("concat of zero tensors")));
        }
        let rank = inputs[0].rank();
        if axis >= rank {
            return Err(Error::Shape {
                op: "concat",
                detail: alloc::format!("axis {axis} out of range for rank {rank}"),
            });
        }
        for t in inputs {
            if t.rank() != rank {
                return Err(Error::Shape {
                    op: "concat",
                    detail: alloc::format!("rank mismatch: {:?} vs {:?}", inputs[0].shape, t.shape),
                });
            }
            for d in 0..rank {
                if d != axis && t.shape[d] != inputs[0].shape[d] {
                    return Err(Error::Dim {
                        op: "concat",
                        axis: d,
                        expected: inputs[0].shape[d],
                        got: t.shape[d],
                    });
                }
            }
        }
        let ids: Vec<NodeId> = inputs.iter().map(|t| self.ensure(t)).collect();
        let outer: usize = inputs[0].shape[..axis].iter().product();
        let inner: usize = inputs[0].shape[axis + 1..].iter().product();
        let total_axis: usize = inputs.iter().map(|t| t.shape[axis]).sum();
        let mut out_shape = inputs[0].shape.clone();
        out_shape[axis] = total_axis;
        let mut out = vec![T::zero(); outer * total_axis * inner];
        for o in 0..outer {
            let mut dst = o * total_axis * inner;
            for t in inputs {
                let blk = t.shape[axis] * inner;
                let src = &t.data()[o * blk..(o + 1) * blk];
                out[dst..dst + blk].copy_from_slice(src);
                dst += blk;
            }
        }
        let rg = ids.iter().any(|&i| self.nodes[i].requires_grad);
        Ok(self.push(Op::Concat { inputs: ids, axis }, out_shape, out, rg))
    }

    /// Contiguous slice along one axis.
    pub fn narrow(&mut self, x: &Tensor<T>, axis: usize, start: usize, len: usize) -> Result<Tensor<T>> {
        if axis >= x.rank() || start + len > x.shape[axis] {
            return Err(Error::Shape {
                op: "narrow",
                detail: alloc::format!(
                    "range {start}..{} out of bounds on axis {axis} of {:?}",
                    start + len,
                    x.shape
                ),
            });
        }
        let xi = self.ensure(x);
        let outer: usize = x.shape[..axis].iter().product();
        let inner: usize = x.shape[axis + 1..].iter().product();
        let mid = x.shape[axis];
        let mut out = vec![T::zero(); outer * len * inner];
        for o in 0..outer {
            let src = &x.data()[(o * mid + start) * inner..(o * mid + start + len) * inner];
            out[o * len * inner..(o + 1) * len * inner].copy_from_slice(src);
        }
        let mut out_shape = x.shape.clone();
        out_shape[axis] = len;
        let rg = self.nodes[xi].requires_grad;
        Ok(self.push(Op::Narrow { x: xi, axis, start }, out_shape, out, rg))
    }

    /// Split into parts of the given sizes along `axis` (inverse of concat).
    pub fn split(&mut self, x: &Tensor<T>, axis: usize, parts: &[usize]) -> Result<Vec<Tensor<T>>> {
        let total: usize = parts.iter().sum();
        if axis >= x.rank() || total != x.shape[axis] {
            return Err(Error::Shape {
                op: "split",
                detail: alloc::format!("parts {parts:?} do not cover axis {axis} of {:?}", x.shape),
            });
        }
        let mut out = Vec::with_capacity(parts.len());
        let mut start = 0;
        for &len in parts {
            out.push(self.narrow(x, axis, start, len)?);
            start += len;
        }
        Ok(out)
    }

    /// Zero-copy view with a new shape.
    pub fn reshape(&mut self, x: &Tensor<T>, shape: &[usize]) -> Result<Tensor<T>> {
        if shape.iter().product::<usize>() != x.numel() {
            return Err(Error::Shape {
                op: "reshape",
                detail: alloc::format!("cannot view {:?} as {:?}", x.shape, shape),
            });
        }
        let xi = self.ensure(x);
        let rg = self.nodes[xi].requires_grad;
        let data = self.nodes[xi].data.clone();
        let id = self.nodes.len();
        self.nodes.push(Node {
            op: Op::Reshape { x: xi },
            shape: shape.to_vec(),
            data: data.clone(),
            requires_grad: rg,
            param: None,
        });
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
            node: Some((self.id, id)),
            requires_grad: rg,
        })
    }

    /// Materialized axis permutation.
    pub fn transpose(&mut self, x: &Tensor<T>, perm: &[usize]) -> Result<Tensor<T>> {
        let rank = x.rank();
        let mut seen = vec![false; rank];
        if perm.len() != rank || perm.iter().any(|&p| p >= rank || core::mem::replace(&mut seen[p], true)) {
            return Err(Error::Shape {
                op: "transpose",
                detail: alloc::format!("invalid permutation {perm:?} for rank {rank}"),
            });
        }
        let xi = self.ensure(x);
        let (out_shape, out) = super::kernels::transpose_copy(x.data(), &x.shape, perm);
        let rg = self.nodes[xi].requires_grad;
        Ok(self.push(Op::Transpose { x: xi, perm: perm.to_vec() }, out_shape, out, rg))
    }

    /// NCHW -> NC11 spatial mean.
    pub fn global_avg_pool(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        if x.rank() != 4 {
            return Err(Error::Shape {
                op: "global_avg_pool",
                detail: alloc::format!("want NCHW, got {:?}", x.shape),
            });
        }
        let (n, c, h, w) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
        let xi = self.ensure(x);
        let plane = h * w;
        let inv = T::one() / T::from_usize(plane);
        let mut out = vec![T::zero(); n * c];
        for (i, o) in out.iter_mut().enumerate() {
            let src = &x.data()[i * plane..(i + 1) * plane];
            let mut s = T::zero();
            for &v in src {
                s = s + v;
            }
            *o = s * inv;
        }
        let rg = self.nodes[xi].requires_grad;
        Ok(self.push(Op::GlobalAvgPool { x: xi }, vec![n, c, 1, 1], out, rg))
    }

    /// Non-overlapping k×k mean pooling; spatial dims must divide by k.
    pub fn avg_pool2d(&mut self, x: &Tensor<T>, k: usize) -> Result<Tensor<T>> {
        if x.rank() != 4 {
            return Err(Error::Shape {
                op: "avg_pool2d",
                detail: alloc::format!("want NCHW, got {:?}", x.shape),
            });
        }
        let (n, c, h, w) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
        if k == 0 || h % k != 0 || w % k != 0 {
            return Err(Error::Config(alloc::format!(
                "avg_pool2d: {h}x{w} not divisible by k={k}"
            )));
        }
        let xi = self.ensure(x);
        let (oh, ow) = (h / k, w / k);
        let inv = T::one() / T::from_usize(k * k);
        let mut out = vec![T::zero(); n * c * oh * ow];
        for p in 0..n * c {
            let src = &x.data()[p * h * w..(p + 1) * h * w];
            let dst = &mut out[p * oh * ow..(p + 1) * oh * ow];
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut s = T::zero();
                    for dy in 0..k {
                        let row = (oy * k + dy) * w + ox * k;
                        for dx in 0..k {
                            s = s + src[row + dx];
                        }
                    }
                    dst[oy * ow + ox] = s * inv;
                }
            }
        }
        let rg = self.nodes[xi].requires_grad;
        Ok(self.push(Op::AvgPool2d { x: xi, k }, vec![n, c, oh, ow], out, rg))
    }

    /// Nearest-neighbor upsampling by an integer factor.
    pub fn upsample_nearest(&mut self, x: &Tensor<T>, s: usize) -> Result<Tensor<T>> {
        if x.rank() != 4 || s == 0 {
            return Err(Error::Shape {
                op: "upsample_nearest",
                detail: alloc::format!("want NCHW and s >= 1, got {:?}, s={s}", x.shape),
            });
        }
        let (n, c, h, w) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
        let xi = self.ensure(x);
        let (oh, ow) = (h * s, w * s);
        let mut out = vec![T::zero(); n * c * oh * ow];
        for p in 0..n * c {
            let src = &x.data()[p * h * w..(p + 1) * h * w];
            let dst = &mut out[p * oh * ow..(p + 1) * oh * ow];
            for oy in 0..oh {
                let sy = oy / s;
                for ox in 0..ow {
                    dst[oy * ow + ox] = src[sy * w + ox / s];
                }
            }
        }
        let rg = self.nodes[xi].requires_grad;
        Ok(self.push(Op::UpNearest { x: xi, s }, vec![n, c, oh, ow], out, rg))
    }

    /// Bilinear upsampling by an integer factor, align_corners = false
    /// (sample coordinates map pixel centers to pixel centers).
    pub fn upsample_bilinear(&mut self, x: &Tensor<T>, s: usize) -> Result<Tensor<T>> {
        if x.rank() != 4 || s == 0 {
            return Err(Error::Shape {
                op: "upsample_bilinear",
                detail: alloc::format!("want NCHW and s >= 1, got {:?}, s={s}", x.shape),
            });
        }
        let (n, c, h, w) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
        let xi = self.ensure(x);
        let (oh, ow) = (h * s, w * s);
        let ytab = bilinear_taps::<T>(h, oh);
        let xtab = bilinear_taps::<T>(w, ow);
        let mut out = vec![T::zero(); n * c * oh * ow];
        for p in 0..n * c {
            let src = &x.data()[p * h * w..(p + 1) * h * w];
            let dst = &mut out[p * oh * ow..(p + 1) * oh * ow];
            for oy in 0..oh {
                let (y0, y1, fy) = ytab[oy];
                for ox in 0..ow {
                    let (x0, x1, fx) = xtab[ox];
                    let one = T::one();
                    let v = (one - fy) * ((one - fx) * src[y0 * w + x0] + fx * src[y0 * w + x1])
                        + fy * ((one - fx) * src[y1 * w + x0] + fx * src[y1 * w + x1]);
                    dst[oy * ow + ox] = v;
                }
            }
        }
        let rg = self.nodes[xi].requires_grad;
        Ok(self.push(Op::UpBilinear { x: xi, s }, vec![n, c, oh, ow], out, rg))
    }

    /// NCHW -> (N·windows, w², C) tokens. Maps not divisible by `w` are
    /// zero-padded right/bottom; [`window_valid_mask`] marks real tokens.
    pub fn window_partition(&mut self, x: &Tensor<T>, w: usize) -> Result<Tensor<T>> {
        if w == 0 {
            return Err(Error::Config(alloc::format!("window_partition: w must be >= 1")));
        }
        if x.rank() != 4 {
            return Err(Error::Shape {
                op: "window_partition",
                detail: alloc::format!("want NCHW, got {:?}", x.shape),
            });
        }
        let (n, c, h, wd) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
        let xi = self.ensure(x);
        let (nwh, nww) = (ceil_div(h, w), ceil_div(wd, w));
        let tokens = w * w;
        let bwin = n * nwh * nww;
        let mut out = vec![T::zero(); bwin * tokens * c];
        let xd = x.data();
        for img in 0..n {
            for wy in 0..nwh {
                for wx in 0..nww {
                    let b = (img * nwh + wy) * nww + wx;
                    for ty in 0..w {
                        let y = wy * w + ty;
                        for tx in 0..w {
                            let xcoord = wx * w + tx;
                            if y >= h || xcoord >= wd {
                                continue; // stays zero (padding)
                            }
                            let t = ty * w + tx;
                            let dst = (b * tokens + t) * c;
                            for ch in 0..c {
                                out[dst + ch] = xd[((img * c + ch) * h + y) * wd + xcoord];
                            }
                        }
                    }
                }
            }
        }
        let rg = self.nodes[xi].requires_grad;
        Ok(self.push(Op::WindowPartition { x: xi, w }, vec![bwin, tokens, c], out, rg))
    }

    /// Inverse of [`Graph::window_partition`]: tokens back to NCHW, dropping
    /// any padding.
    pub fn window_merge(
        &mut self,
        x: &Tensor<T>,
        w: usize,
        n: usize,
        h: usize,
        wd: usize,
    ) -> Result<Tensor<T>> {
        if x.rank() != 3 {
            return Err(Error::Shape {
                op: "window_merge",
                detail: alloc::format!("want (windows, tokens, C), got {:?}", x.shape),
            });
        }
        let (nwh, nww) = (ceil_div(h, w), ceil_div(wd, w));
        let tokens = w * w;
        let c = x.shape[2];
        if x.shape[0] != n * nwh * nww || x.shape[1] != tokens {
            return Err(Error::Shape {
                op: "window_merge",
                detail: alloc::format!(
                    "{:?} does not merge into {n}x{c}x{h}x{wd} with w={w}",
                    x.shape
                ),
            });
        }
        let xi = self.ensure(x);
        let mut out = vec![T::zero(); n * c * h * wd];
        let xd = x.data();
        for img in 0..n {
            for wy in 0..nwh {
                for wx in 0..nww {
                    let b = (img * nwh + wy) * nww + wx;
                    for ty in 0..w {
                        let y = wy * w + ty;
                        if y >= h {
                            continue;
                        }
                        for tx in 0..w {
                            let xcoord = wx * w + tx;
                            if xcoord >= wd {
                                continue;
                            }
                            let t = ty * w + tx;
                            let src = (b * tokens + t) * c;
                            for ch in 0..c {
                                out[((img * c + ch) * h + y) * wd + xcoord] = xd[src + ch];
                            }
                        }
                    }
                }
            }
        }
        let rg = self.nodes[xi].requires_grad;
        Ok(self.push(Op::WindowMerge { x: xi, w }, vec![n, c, h, wd], out, rg))
    }
}

/// Per-token validity after window padding: shape (windows_per_image · n, w²),
/// 1 for real pixels, 0 for padding.
pub fn window_valid_mask<T: Scalar>(n: usize, h: usize, wd: usize, w: usize) -> Tensor<T> {
    let (nwh, nww) = (ceil_div(h, w), ceil_div(wd, w));
    let tokens = w * w;
    let mut data = vec![T::zero(); n * nwh * nww * tokens];
    for img in 0..n {
        for wy in 0..nwh {
            for wx in 0..nww {
                let b = (img * nwh + wy) * nww + wx;
                for ty in 0..w {
                    for tx in 0..w {
                        if wy * w + ty < h && wx * w + tx < wd {
                            data[b * tokens + ty * w + tx] = T::one();
                        }
                    }
                }
            }
        }
    }
    Tensor::from_vec(&[n * nwh * nww, tokens], data)
}

fn bilinear_taps<T: Scalar>(src: usize, dst: usize) -> Vec<(usize, usize, T)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|o| {
            let pos = (o as f64 + 0.5) * scale - 0.5;
            let floor = libm::floor(pos);
            let frac = pos - floor;
            let i0 = floor as isize;
            let lo = i0.clamp(0, src as isize - 1) as usize;
            let hi = (i0 + 1).clamp(0, src as isize - 1) as usize;
            (lo, hi, T::from_f64(frac))
        })
        .collect()
}

pub(crate) fn backward<T: Scalar>(
    nodes: &[Node<T>],
    grads: &mut [Option<Vec<T>>],
    id: NodeId,
    up: &[T],
) -> Result<()> {
    let out_shape = nodes[id].shape.clone();
    match &nodes[id].op {
        Op::Concat { inputs, axis } => {
            let (inputs, axis) = (inputs.clone(), *axis);
            let outer: usize = out_shape[..axis].iter().product();
            let total_axis = out_shape[axis];
            let inner: usize = out_shape[axis + 1..].iter().product();
            let mut offset = 0usize;
            for &inp in &inputs {
                let mid = nodes[inp].shape[axis];
                let blk = mid * inner;
                if wants_grad(nodes, inp) {
                    let numel = nodes[inp].data.len();
                    let buf = acc_buf(grads, inp, numel);
                    for o in 0..outer {
                        let src = &up[(o * total_axis + offset) * inner
                            ..(o * total_axis + offset + mid) * inner];
                        let dst = &mut buf[o * blk..(o + 1) * blk];
                        for (g, &u) in dst.iter_mut().zip(src.iter()) {
                            *g = *g + u;
                        }
                    }
                }
                offset += mid;
            }
        }
        Op::Narrow { x, axis, start } => {
            let (x, axis, start) = (*x, *axis, *start);
            if wants_grad(nodes, x) {
                let in_shape = nodes[x].shape.clone();
                let outer: usize = in_shape[..axis].iter().product();
                let inner: usize = in_shape[axis + 1..].iter().product();
                let mid = in_shape[axis];
                let len = out_shape[axis];
                let buf = acc_buf(grads, x, nodes[x].data.len());
                for o in 0..outer {
                    let dst = &mut buf[(o * mid + start) * inner..(o * mid + start + len) * inner];
                    let src = &up[o * len * inner..(o + 1) * len * inner];
                    for (g, &u) in dst.iter_mut().zip(src.iter()) {
                        *g = *g + u;
                    }
                }
            }
        }
        Op::Reshape { x } => {
            let x = *x;
            if wants_grad(nodes, x) {
                let buf = acc_buf(grads, x, nodes[x].data.len());
                for (g, &u) in buf.iter_mut().zip(up.iter()) {
                    *g = *g + u;
                }
            }
        }
        Op::Transpose { x, perm } => {
            let (x, perm) = (*x, perm.clone());
            if wants_grad(nodes, x) {
                // Inverse permutation sends the upstream back.
                let mut inv = vec![0usize; perm.len()];
                for (i, &p) in perm.iter().enumerate() {
                    inv[p] = i;
                }
                let (_, back) = super::kernels::transpose_copy(up, &out_shape, &inv);
                let buf = acc_buf(grads, x, nodes[x].data.len());
                for (g, &u) in buf.iter_mut().zip(back.iter()) {
                    *g = *g + u;
                }
            }
        }
        Op::GlobalAvgPool { x } => {
            let x = *x;
            if wants_grad(nodes, x) {
                let in_shape = nodes[x].shape.clone();
                let plane = in_shape[2] * in_shape[3];
                let inv = T::one() / T::from_usize(plane);
                let buf = acc_buf(grads, x, nodes[x].data.len());
                for (p, &u) in up.iter().enumerate() {
                    let spread = u * inv;
                    let dst = &mut buf[p * plane..(p + 1) * plane];
                    for g in dst.iter_mut() {
                        *g = *g + spread;
                    }
                }
            }
        }
        Op::AvgPool2d { x, k } => {
            let (x, k) = (*x, *k);
            if wants_grad(nodes, x) {
                let in_shape = nodes[x].shape.clone();
                let (h, w) = (in_shape[2], in_shape[3]);
                let (oh, ow) = (h / k, w / k);
                let inv = T::one() / T::from_usize(k * k);
                let buf = acc_buf(grads, x, nodes[x].data.len());
                for p in 0..in_shape[0] * in_shape[1] {
                    let src = &up[p * oh * ow..(p + 1) * oh * ow];
                    let dst = &mut buf[p * h * w..(p + 1) * h * w];
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let spread = src[oy * ow + ox] * inv;
                            for dy in 0..k {
                                let row = (oy * k + dy) * w + ox * k;
                                for dx in 0..k {
                                    dst[row + dx] = dst[row + dx] + spread;
                                }
                            }
                        }
                    }
                }
            }
        }
        Op::UpNearest { x, s } => {
            let (x, s) = (*x, *s);
            if wants_grad(nodes, x) {
                let in_shape = nodes[x].shape.clone();
                let (h, w) = (in_shape[2], in_shape[3]);
                let (oh, ow) = (h * s, w * s);
                let buf = acc_buf(grads, x, nodes[x].data.len());
                for p in 0..in_shape[0] * in_shape[1] {
                    let src = &up[p * oh * ow..(p + 1) * oh * ow];
                    let dst = &mut buf[p * h * w..(p + 1) * h * w];
                    for oy in 0..oh {
                        let sy = oy / s;
                        for ox in 0..ow {
                            let di = sy * w + ox / s;
                            dst[di] = dst[di] + src[oy * ow + ox];
                        }
                    }
                }
            }
        }
        Op::UpBilinear { x, s } => {
            let (x, s) = (*x, *s);
            if wants_grad(nodes, x) {
                let in_shape = nodes[x].shape.clone();
                let (h, w) = (in_shape[2], in_shape[3]);
                let (oh, ow) = (h * s, w * s);
                let ytab = bilinear_taps::<T>(h, oh);
                let xtab = bilinear_taps::<T>(w, ow);
                let buf = acc_buf(grads, x, nodes[x].data.len());
                let one = T::one();
                for p in 0..in_shape[0] * in_shape[1] {
                    let src = &up[p * oh * ow..(p + 1) * oh * ow];
                    let dst = &mut buf[p * h * w..(p + 1) * h * w];
                    for oy in 0..oh {
                        let (y0, y1, fy) = ytab[oy];
                        for ox in 0..ow {
                            let (x0, x1, fx) = xtab[ox];
                            let u = src[oy * ow + ox];
                            dst[y0 * w + x0] = dst[y0 * w + x0] + u * (one - fy) * (one - fx);
                            dst[y0 * w + x1] = dst[y0 * w + x1] + u * (one - fy) * fx;
                            dst[y1 * w + x0] = dst[y1 * w + x0] + u * fy * (one - fx);
                            dst[y1 * w + x1] = dst[y1 * w + x1] + u * fy * fx;
                        }
                    }
                }
            }
        }
        Op::WindowPartition { x, w } => {
            let (x, w) = (*x, *w);
            if wants_grad(nodes, x) {
                let in_shape = nodes[x].shape.clone();
                let (n, c, h, wd) = (in_shape[0], in_shape[1], in_shape[2], in_shape[3]);
                let (nwh, nww) = (ceil_div(h, w), ceil_div(wd, w));
                let tokens = w * w;
                let buf = acc_buf(grads, x, nodes[x].data.len());
                for img in 0..n {
                    for wy in 0..nwh {
                        for wx in 0..nww {
                            let b = (img * nwh + wy) * nww + wx;
                            for ty in 0..w {
                                let y = wy * w + ty;
                                if y >= h {
                                    continue;
                                }
                                for tx in 0..w {
                                    let xc = wx * w + tx;
                                    if xc >= wd {
                                        continue;
                                    }
                                    let src = (b * tokens + ty * w + tx) * c;
                                    for ch in 0..c {
                                        let di = ((img * c + ch) * h + y) * wd + xc;
                                        buf[di] = buf[di] + up[src + ch];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Op::WindowMerge { x, w } => {
            let (x, w) = (*x, *w);
            if wants_grad(nodes, x) {
                let (n, c, h, wd) = (out_shape[0], out_shape[1], out_shape[2], out_shape[3]);
                let (nwh, nww) = (ceil_div(h, w), ceil_div(wd, w));
                let tokens = w * w;
                let buf = acc_buf(grads, x, nodes[x].data.len());
                for img in 0..n {
                    for wy in 0..nwh {
                        for wx in 0..nww {
                            let b = (img * nwh + wy) * nww + wx;
                            for ty in 0..w {
                                let y = wy * w + ty;
                                if y >= h {
                                    continue;
                                }
                                for tx in 0..w {
                                    let xc = wx * w + tx;
                                    if xc >= wd {
                                        continue;
                                    }
                                    let di = (b * tokens + ty * w + tx) * c;
                                    for ch in 0..c {
                                        buf[di + ch] =
                                            buf[di + ch] + up[((img * c + ch) * h + y) * wd + xc];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        _ => unreachable!("ops_structural::backward dispatched with foreign op"),
    }
    Ok(())
}
