//! Raw CPU kernels: GEMM variants and im2col/col2im plumbing.
//!
//! All kernels accumulate each output element along a fixed loop order, which
//! is what keeps the engine bitwise deterministic.

use alloc::vec;
use alloc::vec::Vec;

use crate::scalar::Scalar;

/// C[m,n] += A[m,k] * B[k,n], all row-major.
pub fn gemm_nn<T: Scalar>(c: &mut [T], a: &[T], b: &[T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let c_row = &mut c[i * n..(i + 1) * n];
        for (kk, &aik) in a_row.iter().enumerate() {
            if aik == T::zero() {
                continue;
            }
            let b_row = &b[kk * n..(kk + 1) * n];
            for (cv, &bv) in c_row.iter_mut().zip(b_row.iter()) {
                *cv = *cv + aik * bv;
            }
        }
    }
}

/// C[m,n] += A[m,k] * B[n,k]^T (dot of rows), all row-major.
pub fn gemm_nt<T: Scalar>(c: &mut [T], a: &[T], b: &[T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(c.len(), m * n);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let c_row = &mut c[i * n..(i + 1) * n];
        for j in 0..n {
            let b_row = &b[j * k..(j + 1) * k];
            let mut acc = T::zero();
            for (&av, &bv) in a_row.iter().zip(b_row.iter()) {
                acc = acc + av * bv;
            }
            c_row[j] = c_row[j] + acc;
        }
    }
}

/// C[n,k] += sum_m A[m,n] * B[m,k] (A^T * B), all row-major.
pub fn gemm_tn<T: Scalar>(c: &mut [T], a: &[T], b: &[T], m: usize, n: usize, k: usize) {
    debug_assert_eq!(a.len(), m * n);
    debug_assert_eq!(b.len(), m * k);
    debug_assert_eq!(c.len(), n * k);
    for mm in 0..m {
        let a_row = &a[mm * n..(mm + 1) * n];
        let b_row = &b[mm * k..(mm + 1) * k];
        for (j, &av) in a_row.iter().enumerate() {
            if av == T::zero() {
                continue;
            }
            let c_row = &mut c[j * k..(j + 1) * k];
            for (cv, &bv) in c_row.iter_mut().zip(b_row.iter()) {
                *cv = *cv + av * bv;
            }
        }
    }
}

/// Output spatial extent of a convolution axis; `None` when not integral.
pub fn conv_out_extent(input: usize, kernel: usize, stride: usize, pad: usize) -> Option<usize> {
    let padded = input + 2 * pad;
    if padded < kernel {
        return None;
    }
    let span = padded - kernel;
    if span % stride != 0 {
        return None;
    }
    Some(span / stride + 1)
}

/// Unfold one image's group-slice into columns: rows are (c,u,v) kernel taps,
/// columns are output positions. `x` points at (cg, h, w) for this group.
#[allow(clippy::too_many_arguments)]
pub fn im2col<T: Scalar>(
    x: &[T],
    cg: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
    cols: &mut [T],
) {
    debug_assert_eq!(cols.len(), cg * kh * kw * oh * ow);
    let ohw = oh * ow;
    for c in 0..cg {
        let plane = &x[c * h * w..(c + 1) * h * w];
        for u in 0..kh {
            for v in 0..kw {
                let row = ((c * kh + u) * kw + v) * ohw;
                for oy in 0..oh {
                    let iy = (oy * stride + u) as isize - pad as isize;
                    let dst = &mut cols[row + oy * ow..row + (oy + 1) * ow];
                    if iy < 0 || iy >= h as isize {
                        for d in dst.iter_mut() {
                            *d = T::zero();
                        }
                        continue;
                    }
                    let src_row = &plane[iy as usize * w..(iy as usize + 1) * w];
                    for ox in 0..ow {
                        let ix = (ox * stride + v) as isize - pad as isize;
                        dst[ox] = if ix < 0 || ix >= w as isize {
                            T::zero()
                        } else {
                            src_row[ix as usize]
                        };
                    }
                }
            }
        }
    }
}

/// Fold columns back onto an image slice, accumulating overlapping taps.
#[allow(clippy::too_many_arguments)]
pub fn col2im_acc<T: Scalar>(
    cols: &[T],
    cg: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
    x_grad: &mut [T],
) {
    let ohw = oh * ow;
    for c in 0..cg {
        let plane = &mut x_grad[c * h * w..(c + 1) * h * w];
        for u in 0..kh {
            for v in 0..kw {
                let row = ((c * kh + u) * kw + v) * ohw;
                for oy in 0..oh {
                    let iy = (oy * stride + u) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let src = &cols[row + oy * ow..row + (oy + 1) * ow];
                    let dst = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                    for ox in 0..ow {
                        let ix = (ox * stride + v) as isize - pad as isize;
                        if ix >= 0 && ix < w as isize {
                            dst[ix as usize] = dst[ix as usize] + src[ox];
                        }
                    }
                }
            }
        }
    }
}

/// Depth-wise convolution forward for one image (groups == channels).
#[allow(clippy::too_many_arguments)]
pub fn depthwise_forward<T: Scalar>(
    x: &[T],
    w: &[T],
    c: usize,
    h: usize,
    wd: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
    out: &mut [T],
) {
    for ch in 0..c {
        let plane = &x[ch * h * wd..(ch + 1) * h * wd];
        let kern = &w[ch * kh * kw..(ch + 1) * kh * kw];
        let dst = &mut out[ch * oh * ow..(ch + 1) * oh * ow];
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = T::zero();
                for u in 0..kh {
                    let iy = (oy * stride + u) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for v in 0..kw {
                        let ix = (ox * stride + v) as isize - pad as isize;
                        if ix < 0 || ix >= wd as isize {
                            continue;
                        }
                        acc = acc + kern[u * kw + v] * plane[iy as usize * wd + ix as usize];
                    }
                }
                dst[oy * ow + ox] = acc;
            }
        }
    }
}

/// Transpose with an arbitrary permutation, materializing the result.
pub fn transpose_copy<T: Scalar>(src: &[T], shape: &[usize], perm: &[usize]) -> (Vec<usize>, Vec<T>) {
    let rank = shape.len();
    debug_assert_eq!(perm.len(), rank);
    let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
    let numel = src.len();
    let mut in_strides = vec![1usize; rank];
    for d in (0..rank.saturating_sub(1)).rev() {
        in_strides[d] = in_strides[d + 1] * shape[d + 1];
    }
    // Stride of each output axis in the input buffer.
    let gather: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
    let mut out = Vec::with_capacity(numel);
    let mut coords = vec![0usize; rank];
    let mut offset = 0usize;
    for _ in 0..numel {
        out.push(src[offset]);
        // Odometer increment over output coordinates.
        for d in (0..rank).rev() {
            coords[d] += 1;
            offset += gather[d];
            if coords[d] < out_shape[d] {
                break;
            }
            offset -= gather[d] * out_shape[d];
            coords[d] = 0;
        }
    }
    (out_shape, out)
}
