//! The tape: node records, forward bookkeeping, and the backward walk.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::tensor::Tensor;
use super::{ops_basic, ops_conv, ops_linear, ops_loss, ops_norm, ops_softmax, ops_structural};

pub type NodeId = usize;

static NEXT_GRAPH_ID: AtomicU64 = AtomicU64::new(1);

/// Convolution geometry shared by forward and backward.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvSpec {
    pub stride: usize,
    pub pad: usize,
    pub groups: usize,
}

/// Operation record. Inputs are node ids (always lower than the record's own
/// id); anything else a backward rule needs is saved inline.
#[derive(Debug)]
pub(crate) enum Op<T> {
    Leaf,
    Add { a: NodeId, b: NodeId },
    Sub { a: NodeId, b: NodeId },
    Mul { a: NodeId, b: NodeId },
    Scale { a: NodeId, factor: T },
    Gelu { a: NodeId },
    Sigmoid { a: NodeId },
    Relu { a: NodeId },
    DiffBinarize { p: NodeId, t: NodeId, k: T },
    Linear { x: NodeId, w: NodeId, b: Option<NodeId> },
    MatMul { a: NodeId, b: NodeId },
    Conv2d { x: NodeId, w: NodeId, b: Option<NodeId>, spec: ConvSpec },
    ConvT2d { x: NodeId, w: NodeId, b: Option<NodeId>, stride: usize },
    LayerNorm { x: NodeId, scale: NodeId, shift: NodeId, axis: usize, eps: T },
    BatchNorm {
        x: NodeId,
        scale: NodeId,
        shift: NodeId,
        eps: T,
        mean: Arc<Vec<T>>,
        var: Arc<Vec<T>>,
        train: bool,
    },
    Softmax { x: NodeId, axis: usize },
    Concat { inputs: Vec<NodeId>, axis: usize },
    Narrow { x: NodeId, axis: usize, start: usize },
    Reshape { x: NodeId },
    Transpose { x: NodeId, perm: Vec<usize> },
    GlobalAvgPool { x: NodeId },
    AvgPool2d { x: NodeId, k: usize },
    UpNearest { x: NodeId, s: usize },
    UpBilinear { x: NodeId, s: usize },
    WindowPartition { x: NodeId, w: usize },
    WindowMerge { x: NodeId, w: usize },
    SumAll { x: NodeId },
    MeanAll { x: NodeId },
    OhemBce {
        pred: NodeId,
        gt: Arc<Vec<T>>,
        selected: Arc<Vec<u32>>,
        denom: T,
    },
    ThresholdL1 {
        pred: NodeId,
        gt: Arc<Vec<T>>,
        mask: Arc<Vec<T>>,
        denom: T,
    },
}

#[derive(Debug)]
pub(crate) struct Node<T> {
    pub op: Op<T>,
    pub shape: Vec<usize>,
    pub data: Arc<Vec<T>>,
    pub requires_grad: bool,
    /// Parameter-store index for gradient extraction after backward.
    pub param: Option<usize>,
}

/// A single forward pass's computation graph. Not shareable across threads;
/// build one per forward, run [`Graph::backward`], read gradients, drop.
#[derive(Debug)]
pub struct Graph<T> {
    pub(crate) id: u64,
    pub(crate) nodes: Vec<Node<T>>,
    pub(crate) grads: Vec<Option<Vec<T>>>,
    /// (buffer param id, new value) pairs reported by train-mode batch norm.
    pub(crate) stat_updates: Vec<(usize, Vec<T>)>,
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Graph {
            id: NEXT_GRAPH_ID.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
            grads: Vec::new(),
            stat_updates: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub(crate) fn push(
        &mut self,
        op: Op<T>,
        shape: Vec<usize>,
        data: Vec<T>,
        requires_grad: bool,
    ) -> Tensor<T> {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        let id = self.nodes.len();
        let data = Arc::new(data);
        self.nodes.push(Node {
            op,
            shape: shape.clone(),
            data: data.clone(),
            requires_grad,
            param: None,
        });
        Tensor {
            shape,
            data,
            node: Some((self.id, id)),
            requires_grad,
        }
    }

    /// Attach a detached tensor as a leaf. Gradients are tracked when
    /// `requires_grad` and readable afterwards via [`Graph::grad`].
    pub fn leaf(&mut self, t: &Tensor<T>, requires_grad: bool) -> Tensor<T> {
        let id = self.nodes.len();
        self.nodes.push(Node {
            op: Op::Leaf,
            shape: t.shape.clone(),
            data: t.data.clone(),
            requires_grad,
            param: None,
        });
        Tensor {
            shape: t.shape.clone(),
            data: t.data.clone(),
            node: Some((self.id, id)),
            requires_grad,
        }
    }

    /// Leaf carrying a parameter-store index so its gradient can be collected
    /// by [`Graph::take_param_grads`].
    pub fn leaf_param(&mut self, param_id: usize, t: &Tensor<T>, requires_grad: bool) -> Tensor<T> {
        let out = self.leaf(t, requires_grad);
        self.nodes.last_mut().expect("just pushed").param = Some(param_id);
        out
    }

    /// Attach as a constant (no gradient).
    pub fn constant(&mut self, t: &Tensor<T>) -> Tensor<T> {
        self.leaf(t, false)
    }

    /// Node id of `t` on this graph, attaching detached tensors as constants.
    pub(crate) fn ensure(&mut self, t: &Tensor<T>) -> NodeId {
        match t.node {
            Some((gid, idx)) if gid == self.id => idx,
            _ => {
                let attached = self.constant(t);
                attached.node.expect("attached").1
            }
        }
    }

    pub(crate) fn node_data(&self, id: NodeId) -> &[T] {
        &self.nodes[id].data
    }

    pub(crate) fn node_shape(&self, id: NodeId) -> &[usize] {
        &self.nodes[id].shape
    }

    /// Accumulated running-statistics updates reported by train-mode batch
    /// norm during this forward pass. The trainer applies them to the store.
    pub fn take_stat_updates(&mut self) -> Vec<(usize, Vec<T>)> {
        core::mem::take(&mut self.stat_updates)
    }

    /// Gradient of an attached tensor, if backward has reached it.
    pub fn grad(&self, t: &Tensor<T>) -> Option<&[T]> {
        match t.node {
            Some((gid, idx)) if gid == self.id => {
                self.grads.get(idx).and_then(|g| g.as_deref())
            }
            _ => None,
        }
    }

    /// Move parameter-leaf gradients out, indexed by parameter id.
    pub fn take_param_grads(&mut self, n_params: usize) -> Vec<Option<Vec<T>>> {
        let mut out = vec![None; n_params];
        for (i, node) in self.nodes.iter().enumerate() {
            if let Some(pid) = node.param {
                if let Some(slot) = self.grads.get_mut(i) {
                    if let Some(g) = slot.take() {
                        out[pid] = Some(g);
                    }
                }
            }
        }
        out
    }

    /// Clear all accumulated gradients.
    pub fn zero_grad(&mut self) {
        for g in &mut self.grads {
            *g = None;
        }
    }

    /// Reverse-mode sweep from a scalar loss. Repeated calls accumulate into
    /// leaf gradients; use [`Graph::zero_grad`] to reset.
    pub fn backward(&mut self, loss: &Tensor<T>) -> Result<()> {
        let loss_id = match loss.node {
            Some((gid, idx)) if gid == self.id => idx,
            _ => {
                return Err(Error::Usage(alloc::format!(
                    "backward: loss tensor is not attached to this graph"
                )))
            }
        };
        if loss.numel() != 1 {
            return Err(Error::Usage(alloc::format!(
                "backward requires a scalar loss, got shape {:?}",
                loss.shape
            )));
        }
        if self.grads.len() < self.nodes.len() {
            self.grads.resize(self.nodes.len(), None);
        }
        // Seed d(loss)/d(loss) = 1, accumulating if a previous sweep left one.
        match &mut self.grads[loss_id] {
            Some(g) => g[0] = g[0] + T::one(),
            slot => *slot = Some(vec![T::one()]),
        }

        for i in (0..=loss_id).rev() {
            if self.grads[i].is_none() || !self.nodes[i].requires_grad {
                continue;
            }
            let up = self.grads[i].take().expect("checked above");
            self.backprop(i, &up)?;
            // Leaves keep their gradient; interior buffers are dropped.
            if matches!(self.nodes[i].op, Op::Leaf) {
                self.grads[i] = Some(up);
            }
        }
        Ok(())
    }

    fn backprop(&mut self, id: NodeId, up: &[T]) -> Result<()> {
        let Graph { nodes, grads, .. } = self;
        match &nodes[id].op {
            Op::Leaf => Ok(()),
            Op::Add { .. }
            | Op::Sub { .. }
            | Op::Mul { .. }
            | Op::Scale { .. }
            | Op::Gelu { .. }
            | Op::Sigmoid { .. }
            | Op::Relu { .. }
            | Op::DiffBinarize { .. } => ops_basic::backward(nodes, grads, id, up),
            Op::Linear { .. } | Op::MatMul { .. } => ops_linear::backward(nodes, grads, id, up),
            Op::Conv2d { .. } | Op::ConvT2d { .. } => ops_conv::backward(nodes, grads, id, up),
            Op::LayerNorm { .. } | Op::BatchNorm { .. } => {
                ops_norm::backward(nodes, grads, id, up)
            }
            Op::Softmax { .. } | Op::SumAll { .. } | Op::MeanAll { .. } => {
                ops_softmax::backward(nodes, grads, id, up)
            }
            Op::Concat { .. }
            | Op::Narrow { .. }
            | Op::Reshape { .. }
            | Op::Transpose { .. }
            | Op::GlobalAvgPool { .. }
            | Op::AvgPool2d { .. }
            | Op::UpNearest { .. }
            | Op::UpBilinear { .. }
            | Op::WindowPartition { .. }
            | Op::WindowMerge { .. } => ops_structural::backward(nodes, grads, id, up),
            Op::OhemBce { .. } | Op::ThresholdL1 { .. } => {
                ops_loss::backward(nodes, grads, id, up)
            }
        }
    }
}

/// Get-or-zero-init the gradient buffer for a node, for accumulation.
pub(crate) fn acc_buf<'a, T: Scalar>(
    grads: &'a mut [Option<Vec<T>>],
    id: NodeId,
    numel: usize,
) -> &'a mut [T] {
    let slot = &mut grads[id];
    if slot.is_none() {
        *slot = Some(vec![T::zero(); numel]);
    }
    slot.as_mut().expect("just initialized")
}

/// Whether a node wants a gradient at all.
pub(crate) fn wants_grad<T>(nodes: &[Node<T>], id: NodeId) -> bool {
    nodes[id].requires_grad
}
