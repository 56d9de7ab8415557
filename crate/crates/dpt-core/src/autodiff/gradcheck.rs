//! Central finite-difference verification of analytic gradients.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::Result;
use crate::scalar::Scalar;

use super::graph::Graph;
use super::tensor::Tensor;

/// Outcome of one gradient check.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub name: String,
    pub max_rel_err: f64,
    pub coords_checked: usize,
}

/// Relative error with the spec denominator `max(|a|, |b|, 1e-8)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    let denom = a.abs().max(b.abs()).max(1e-8);
    (a - b).abs() / denom
}

/// Central finite difference of a scalar-valued function at one coordinate.
pub fn numeric_grad<T: Scalar>(
    f: &mut dyn FnMut(&[Tensor<T>]) -> Result<T>,
    inputs: &[Tensor<T>],
    which: usize,
    coord: usize,
    eps: f64,
) -> Result<f64> {
    let mut probe = |delta: f64| -> Result<f64> {
        let mut shifted: Vec<Tensor<T>> = inputs.to_vec();
        let mut data = shifted[which].data().to_vec();
        data[coord] = data[coord] + T::from_f64(delta);
        shifted[which] = Tensor {
            shape: shifted[which].shape().to_vec(),
            data: Arc::new(data),
            node: None,
            requires_grad: false,
        };
        Ok(f(&shifted)?.as_f64())
    };
    let plus = probe(eps)?;
    let minus = probe(-eps)?;
    Ok((plus - minus) / (2.0 * eps))
}

/// Compare the analytic gradient of `build` (a graph-building closure
/// returning a scalar loss) against central differences at every coordinate
/// of every input, returning the maximum relative error.
///
/// `build` must be deterministic; it is re-run twice per checked coordinate.
pub fn grad_check<T: Scalar>(
    build: impl Fn(&mut Graph<T>, &[Tensor<T>]) -> Result<Tensor<T>>,
    inputs: &[Tensor<T>],
    eps: f64,
) -> Result<f64> {
    grad_check_sampled(build, inputs, eps, usize::MAX, 0)
}

/// Like [`grad_check`] but probing at most `max_coords_per_input` coordinates
/// per input (deterministically strided), for large parameter tensors.
pub fn grad_check_sampled<T: Scalar>(
    build: impl Fn(&mut Graph<T>, &[Tensor<T>]) -> Result<Tensor<T>>,
    inputs: &[Tensor<T>],
    eps: f64,
    max_coords_per_input: usize,
    stride_seed: usize,
) -> Result<f64> {
    // Analytic pass.
    let mut g = Graph::new();
    let leaves: Vec<Tensor<T>> = inputs.iter().map(|t| g.leaf(t, true)).collect();
    let loss = build(&mut g, &leaves)?;
    g.backward(&loss)?;
    let analytic: Vec<Vec<T>> = leaves
        .iter()
        .map(|l| g.grad(l).map(|s| s.to_vec()).unwrap_or_default())
        .collect();

    let mut eval = |xs: &[Tensor<T>]| -> Result<T> {
        let mut g = Graph::new();
        let leaves: Vec<Tensor<T>> = xs.iter().map(|t| g.leaf(t, false)).collect();
        Ok(build(&mut g, &leaves)?.item())
    };

    let mut worst = 0.0f64;
    for (wi, input) in inputs.iter().enumerate() {
        let n = input.numel();
        if n == 0 {
            continue;
        }
        let coords: Vec<usize> = if n <= max_coords_per_input {
            (0..n).collect()
        } else {
            // Deterministic spread across the tensor.
            (0..max_coords_per_input)
                .map(|i| (i * n / max_coords_per_input + stride_seed) % n)
                .collect()
        };
        for &c in &coords {
            let num = numeric_grad(&mut eval, inputs, wi, c, eps)?;
            let ana = analytic[wi].get(c).map(|v| v.as_f64()).unwrap_or(0.0);
            let e = rel_err(ana, num);
            if e > worst {
                worst = e;
            }
        }
    }
    Ok(worst)
}
