//! 2D convolution and stride-matched transpose convolution.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::graph::{acc_buf, wants_grad, ConvSpec, Graph, Node, NodeId, Op};
use super::kernels::{col2im_acc, conv_out_extent, depthwise_forward, gemm_nn, gemm_nt, gemm_tn, im2col};
use super::tensor::Tensor;

impl<T: Scalar> Graph<T> {
    /// Grouped 2D convolution over NCHW with zero padding.
    pub fn conv2d(
        &mut self,
        x: &Tensor<T>,
        w: &Tensor<T>,
        b: Option<&Tensor<T>>,
        stride: usize,
        pad: usize,
        groups: usize,
    ) -> Result<Tensor<T>> {
        if x.rank() != 4 || w.rank() != 4 {
            return Err(Error::Shape {
                op: "conv2d",
                detail: alloc::format!("x {:?}, w {:?} (want rank 4)", x.shape, w.shape),
            });
        }
        let (n, cin, h, wd) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
        let (cout, cg, kh, kw) = (w.shape[0], w.shape[1], w.shape[2], w.shape[3]);
        if groups == 0 || cin % groups != 0 || cout % groups != 0 {
            return Err(Error::Config(alloc::format!(
                "conv2d: groups {groups} must divide Cin {cin} and Cout {cout}"
            )));
        }
        if cg != cin / groups {
            return Err(Error::Dim {
                op: "conv2d",
                axis: 1,
                expected: cin / groups,
                got: cg,
            });
        }
        if let Some(b) = b {
            if b.numel() != cout {
                return Err(Error::Dim {
                    op: "conv2d",
                    axis: 0,
                    expected: cout,
                    got: b.numel(),
                });
            }
        }
        let oh = conv_out_extent(h, kh, stride, pad).ok_or(Error::Dim {
            op: "conv2d",
            axis: 2,
            expected: kh,
            got: h,
        })?;
        let ow = conv_out_extent(wd, kw, stride, pad).ok_or(Error::Dim {
            op: "conv2d",
            axis: 3,
            expected: kw,
            got: wd,
        })?;

        let xi = self.ensure(x);
        let wi = self.ensure(w);
        let bi = b.map(|t| self.ensure(t));

        let mut out = vec![T::zero(); n * cout * oh * ow];
        let depthwise = groups == cin && cout == cin;
        let coutg = cout / groups;
        let xd = x.data();
        let wdat = w.data();
        let mut cols = if depthwise {
            Vec::new()
        } else {
            vec![T::zero(); cg * kh * kw * oh * ow]
        };
        for img in 0..n {
            let x_img = &xd[img * cin * h * wd..(img + 1) * cin * h * wd];
            let y_img = &mut out[img * cout * oh * ow..(img + 1) * cout * oh * ow];
            if depthwise {
                depthwise_forward(x_img, wdat, cin, h, wd, kh, kw, stride, pad, oh, ow, y_img);
            } else {
                for g in 0..groups {
                    im2col(
                        &x_img[g * cg * h * wd..(g + 1) * cg * h * wd],
                        cg, h, wd, kh, kw, stride, pad, oh, ow, &mut cols,
                    );
                    gemm_nn(
                        &mut y_img[g * coutg * oh * ow..(g + 1) * coutg * oh * ow],
                        &wdat[g * coutg * cg * kh * kw..(g + 1) * coutg * cg * kh * kw],
                        &cols,
                        coutg,
                        cg * kh * kw,
                        oh * ow,
                    );
                }
            }
            if let Some(b) = b {
                for (c, &bv) in b.data().iter().enumerate() {
                    let plane = &mut y_img[c * oh * ow..(c + 1) * oh * ow];
                    for v in plane.iter_mut() {
                        *v = *v + bv;
                    }
                }
            }
        }
        let rg = self.nodes[xi].requires_grad
            || self.nodes[wi].requires_grad
            || bi.map(|i| self.nodes[i].requires_grad).unwrap_or(false);
        Ok(self.push(
            Op::Conv2d {
                x: xi,
                w: wi,
                b: bi,
                spec: ConvSpec { stride, pad, groups },
            },
            vec![n, cout, oh, ow],
            out,
            rg,
        ))
    }

    /// Transpose convolution with kernel == stride (non-overlapping learned
    /// upsampling); weight layout is (Cin, Cout, k, k).
    pub fn conv_transpose2d(
        &mut self,
        x: &Tensor<T>,
        w: &Tensor<T>,
        b: Option<&Tensor<T>>,
        stride: usize,
    ) -> Result<Tensor<T>> {
        if x.rank() != 4 || w.rank() != 4 {
            return Err(Error::Shape {
                op: "conv_transpose2d",
                detail: alloc::format!("x {:?}, w {:?} (want rank 4)", x.shape, w.shape),
            });
        }
        let (n, cin, h, wd) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
        let (wcin, cout, kh, kw) = (w.shape[0], w.shape[1], w.shape[2], w.shape[3]);
        if wcin != cin {
            return Err(Error::Dim {
                op: "conv_transpose2d",
                axis: 0,
                expected: cin,
                got: wcin,
            });
        }
        if kh != stride || kw != stride {
            return Err(Error::Config(alloc::format!(
                "conv_transpose2d: kernel {kh}x{kw} must equal stride {stride}"
            )));
        }
        let (oh, ow) = (h * stride, wd * stride);
        let xi = self.ensure(x);
        let wi = self.ensure(w);
        let bi = b.map(|t| self.ensure(t));
        let mut out = vec![T::zero(); n * cout * oh * ow];
        let xd = x.data();
        let wdat = w.data();
        for img in 0..n {
            let x_img = &xd[img * cin * h * wd..(img + 1) * cin * h * wd];
            let y_img = &mut out[img * cout * oh * ow..(img + 1) * cout * oh * ow];
            for ci in 0..cin {
                let plane = &x_img[ci * h * wd..(ci + 1) * h * wd];
                for co in 0..cout {
                    let kern = &wdat[(ci * cout + co) * kh * kw..(ci * cout + co + 1) * kh * kw];
                    let dst = &mut y_img[co * oh * ow..(co + 1) * oh * ow];
                    for iy in 0..h {
                        for ix in 0..wd {
                            let xv = plane[iy * wd + ix];
                            if xv == T::zero() {
                                continue;
                            }
                            for u in 0..kh {
                                let row = (iy * stride + u) * ow + ix * stride;
                                for v in 0..kw {
                                    dst[row + v] = dst[row + v] + kern[u * kw + v] * xv;
                                }
                            }
                        }
                    }
                }
            }
            if let Some(b) = b {
                for (c, &bv) in b.data().iter().enumerate() {
                    let plane = &mut y_img[c * oh * ow..(c + 1) * oh * ow];
                    for vv in plane.iter_mut() {
                        *vv = *vv + bv;
                    }
                }
            }
        }
        let rg = self.nodes[xi].requires_grad
            || self.nodes[wi].requires_grad
            || bi.map(|i| self.nodes[i].requires_grad).unwrap_or(false);
        Ok(self.push(
            Op::ConvT2d { x: xi, w: wi, b: bi, stride },
            vec![n, cout, oh, ow],
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
        Op::Conv2d { x, w, b, spec } => {
            let (x, w, b, spec) = (*x, *w, *b, *spec);
            conv2d_backward(nodes, grads, id, up, x, w, b, spec);
        }
        Op::ConvT2d { x, w, b, stride } => {
            let (x, w, b, stride) = (*x, *w, *b, *stride);
            convt_backward(nodes, grads, id, up, x, w, b, stride);
        }
        _ => unreachable!("ops_conv::backward dispatched with foreign op"),
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn conv2d_backward<T: Scalar>(
    nodes: &[Node<T>],
    grads: &mut [Option<Vec<T>>],
    id: NodeId,
    up: &[T],
    x: NodeId,
    w: NodeId,
    b: Option<NodeId>,
    spec: ConvSpec,
) {
    let ConvSpec { stride, pad, groups } = spec;
    let (n, cin, h, wd) = {
        let s = &nodes[x].shape;
        (s[0], s[1], s[2], s[3])
    };
    let (cout, cg, kh, kw) = {
        let s = &nodes[w].shape;
        (s[0], s[1], s[2], s[3])
    };
    let (oh, ow) = (nodes[id].shape[2], nodes[id].shape[3]);
    let coutg = cout / groups;
    let xd = nodes[x].data.clone();
    let wdat = nodes[w].data.clone();
    let want_x = wants_grad(nodes, x);
    let want_w = wants_grad(nodes, w);

    if let Some(b) = b {
        if wants_grad(nodes, b) {
            let buf = acc_buf(grads, b, cout);
            for img in 0..n {
                for c in 0..cout {
                    let plane = &up[(img * cout + c) * oh * ow..(img * cout + c + 1) * oh * ow];
                    let mut s = T::zero();
                    for &v in plane {
                        s = s + v;
                    }
                    buf[c] = buf[c] + s;
                }
            }
        }
    }
    if !want_x && !want_w {
        return;
    }

    let mut cols = vec![T::zero(); cg * kh * kw * oh * ow];
    let mut dcols = vec![T::zero(); cg * kh * kw * oh * ow];
    // Gradients for x and w are accumulated image by image in index order.
    let mut dx = if want_x { vec![T::zero(); n * cin * h * wd] } else { Vec::new() };
    let mut dw = if want_w { vec![T::zero(); cout * cg * kh * kw] } else { Vec::new() };
    for img in 0..n {
        let x_img = &xd[img * cin * h * wd..(img + 1) * cin * h * wd];
        let up_img = &up[img * cout * oh * ow..(img + 1) * cout * oh * ow];
        for g in 0..groups {
            let up_g = &up_img[g * coutg * oh * ow..(g + 1) * coutg * oh * ow];
            let w_g = &wdat[g * coutg * cg * kh * kw..(g + 1) * coutg * cg * kh * kw];
            if want_w {
                im2col(
                    &x_img[g * cg * h * wd..(g + 1) * cg * h * wd],
                    cg, h, wd, kh, kw, stride, pad, oh, ow, &mut cols,
                );
                // dW_g += dY_g * cols^T
                gemm_nt(
                    &mut dw[g * coutg * cg * kh * kw..(g + 1) * coutg * cg * kh * kw],
                    up_g,
                    &cols,
                    coutg,
                    oh * ow,
                    cg * kh * kw,
                );
            }
            if want_x {
                for v in dcols.iter_mut() {
                    *v = T::zero();
                }
                // dcols = W_g^T * dY_g
                gemm_tn(&mut dcols, w_g, up_g, coutg, cg * kh * kw, oh * ow);
                col2im_acc(
                    &dcols,
                    cg, h, wd, kh, kw, stride, pad, oh, ow,
                    &mut dx[img * cin * h * wd + g * cg * h * wd
                        ..img * cin * h * wd + (g + 1) * cg * h * wd],
                );
            }
        }
    }
    if want_x {
        let buf = acc_buf(grads, x, dx.len());
        for (g, v) in buf.iter_mut().zip(dx.iter()) {
            *g = *g + *v;
        }
    }
    if want_w {
        let buf = acc_buf(grads, w, dw.len());
        for (g, v) in buf.iter_mut().zip(dw.iter()) {
            *g = *g + *v;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn convt_backward<T: Scalar>(
    nodes: &[Node<T>],
    grads: &mut [Option<Vec<T>>],
    id: NodeId,
    up: &[T],
    x: NodeId,
    w: NodeId,
    b: Option<NodeId>,
    stride: usize,
) {
    let (n, cin, h, wd) = {
        let s = &nodes[x].shape;
        (s[0], s[1], s[2], s[3])
    };
    let (cout, kh, kw) = {
        let s = &nodes[w].shape;
        (s[1], s[2], s[3])
    };
    let (oh, ow) = (nodes[id].shape[2], nodes[id].shape[3]);
    let xd = nodes[x].data.clone();
    let wdat = nodes[w].data.clone();

    if let Some(b) = b {
        if wants_grad(nodes, b) {
            let buf = acc_buf(grads, b, cout);
            for img in 0..n {
                for c in 0..cout {
                    let plane = &up[(img * cout + c) * oh * ow..(img * cout + c + 1) * oh * ow];
                    let mut s = T::zero();
                    for &v in plane {
                        s = s + v;
                    }
                    buf[c] = buf[c] + s;
                }
            }
        }
    }

    let want_x = wants_grad(nodes, x);
    let want_w = wants_grad(nodes, w);
    if !want_x && !want_w {
        return;
    }
    let mut dx = if want_x { vec![T::zero(); n * cin * h * wd] } else { Vec::new() };
    let mut dw = if want_w { vec![T::zero(); cin * cout * kh * kw] } else { Vec::new() };
    for img in 0..n {
        let x_img = &xd[img * cin * h * wd..(img + 1) * cin * h * wd];
        let up_img = &up[img * cout * oh * ow..(img + 1) * cout * oh * ow];
        for ci in 0..cin {
            for co in 0..cout {
                let kern = &wdat[(ci * cout + co) * kh * kw..(ci * cout + co + 1) * kh * kw];
                let up_plane = &up_img[co * oh * ow..(co + 1) * oh * ow];
                for iy in 0..h {
                    for ix in 0..wd {
                        let mut acc = T::zero();
                        for u in 0..kh {
                            let row = (iy * stride + u) * ow + ix * stride;
                            for v in 0..kw {
                                acc = acc + kern[u * kw + v] * up_plane[row + v];
                            }
                        }
                        if want_x {
                            let di = img * cin * h * wd + ci * h * wd + iy * wd + ix;
                            dx[di] = dx[di] + acc;
                        }
                        if want_w {
                            let xv = x_img[ci * h * wd + iy * wd + ix];
                            if xv != T::zero() {
                                let base = (ci * cout + co) * kh * kw;
                                for u in 0..kh {
                                    let row = (iy * stride + u) * ow + ix * stride;
                                    for v in 0..kw {
                                        dw[base + u * kw + v] =
                                            dw[base + u * kw + v] + xv * up_plane[row + v];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    if want_x {
        let buf = acc_buf(grads, x, dx.len());
        for (g, v) in buf.iter_mut().zip(dx.iter()) {
            *g = *g + *v;
        }
    }
    if want_w {
        let buf = acc_buf(grads, w, dw.len());
        for (g, v) in buf.iter_mut().zip(dw.iter()) {
            *g = *g + *v;
        }
    }
}
