//! Reverse-mode automatic differentiation on dense row-major tensors.
//!
//! A [`Graph`] is a per-forward-pass tape: every operation appends a node
//! holding its output and the information its backward rule needs. Backward
//! walks the tape in exact reverse creation order (creation order is
//! topological by construction) and accumulates gradients in a fixed order,
//! so identical graphs produce bitwise-identical gradients.

mod gradcheck;
mod graph;
mod kernels;
mod ops_basic;
mod ops_conv;
mod ops_linear;
mod ops_loss;
mod ops_norm;
mod ops_softmax;
mod ops_structural;
mod tensor;

pub use gradcheck::{grad_check, numeric_grad, GradCheckReport};
pub use graph::{Graph, NodeId};
pub use ops_loss::OhemStats;
pub use tensor::Tensor;

/// Normalization statistics mode: training uses batch statistics and reports
/// running updates, evaluation consumes stored running statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}
