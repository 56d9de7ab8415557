//! Loss primitives recorded as single tape ops: hard-negative-mined binary
//! cross-entropy and masked mean absolute error.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::graph::{acc_buf, wants_grad, Graph, Node, NodeId, Op};
use super::ops_basic::clamp;
use super::tensor::Tensor;

const BCE_EPS: f64 = 1e-7;
/// Negatives kept when a batch has no positive pixels.
const NO_POSITIVE_FALLBACK: usize = 100;

/// Selection statistics from the last OHEM evaluation (for tests and logs).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OhemStats {
    pub positives: usize,
    pub selected_negatives: usize,
    pub total_negatives: usize,
}

impl<T: Scalar> Graph<T> {
    /// Mean binary cross-entropy over all positives plus the
    /// `ratio * positives` hardest negatives (largest per-pixel BCE).
    /// Pixels with `mask = 0` never participate. With no positives, the
    /// 100 hardest negatives are used. Predictions are clamped to
    /// `[1e-7, 1 - 1e-7]`.
    pub fn ohem_bce(
        &mut self,
        pred: &Tensor<T>,
        gt: &Tensor<T>,
        mask: &Tensor<T>,
        ratio: usize,
    ) -> Result<Tensor<T>> {
        let (t, _) = self.ohem_bce_with_stats(pred, gt, mask, ratio)?;
        Ok(t)
    }

    pub fn ohem_bce_with_stats(
        &mut self,
        pred: &Tensor<T>,
        gt: &Tensor<T>,
        mask: &Tensor<T>,
        ratio: usize,
    ) -> Result<(Tensor<T>, OhemStats)> {
        if pred.shape != gt.shape || pred.shape != mask.shape {
            return Err(Error::Shape {
                op: "ohem_bce",
                detail: alloc::format!(
                    "pred {:?}, gt {:?}, mask {:?}",
                    pred.shape, gt.shape, mask.shape
                ),
            });
        }
        let pi = self.ensure(pred);
        let pd = pred.data();
        let gd = gt.data();
        let md = mask.data();
        let half = T::from_f64(0.5);

        let mut positives: Vec<u32> = Vec::new();
        let mut negatives: Vec<(T, u32)> = Vec::new();
        for i in 0..pd.len() {
            if md[i] <= half {
                continue;
            }
            if gd[i] > half {
                positives.push(i as u32);
            } else {
                negatives.push((bce_at(pd[i], gd[i]), i as u32));
            }
        }
        let total_negatives = negatives.len();
        let keep_neg = if positives.is_empty() {
            NO_POSITIVE_FALLBACK.min(total_negatives)
        } else {
            (ratio * positives.len()).min(total_negatives)
        };
        // Hardest first; ties broken by pixel index for determinism.
        negatives.sort_unstable_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .expect("BCE values are finite")
                .then(a.1.cmp(&b.1))
        });
        negatives.truncate(keep_neg);

        let stats = OhemStats {
            positives: positives.len(),
            selected_negatives: keep_neg,
            total_negatives,
        };
        let mut selected = positives;
        selected.extend(negatives.iter().map(|&(_, i)| i));
        let denom_count = selected.len();
        let mut sum = T::zero();
        for &i in &selected {
            sum = sum + bce_at(pd[i as usize], gd[i as usize]);
        }
        let denom = T::from_usize(denom_count.max(1));
        let loss = sum / denom;

        let rg = self.nodes[pi].requires_grad;
        let t = self.push(
            Op::OhemBce {
                pred: pi,
                gt: Arc::new(gd.to_vec()),
                selected: Arc::new(selected),
                denom,
            },
            alloc::vec![],
            alloc::vec![loss],
            rg,
        );
        Ok((t, stats))
    }

    /// Mean L1 distance between `pred` and `gt` over pixels where `mask` is
    /// set; zero when the masked region is empty.
    pub fn threshold_l1(
        &mut self,
        pred: &Tensor<T>,
        gt: &Tensor<T>,
        mask: &Tensor<T>,
    ) -> Result<Tensor<T>> {
        if pred.shape != gt.shape || pred.shape != mask.shape {
            return Err(Error::Shape {
                op: "threshold_l1",
                detail: alloc::format!(
                    "pred {:?}, gt {:?}, mask {:?}",
                    pred.shape, gt.shape, mask.shape
                ),
            });
        }
        let pi = self.ensure(pred);
        let pd = pred.data();
        let gd = gt.data();
        let md = mask.data();
        let half = T::from_f64(0.5);
        let mut count = 0usize;
        let mut sum = T::zero();
        for i in 0..pd.len() {
            if md[i] > half {
                count += 1;
                sum = sum + (pd[i] - gd[i]).abs();
            }
        }
        let denom = T::from_usize(count.max(1));
        let loss = sum / denom;
        let rg = self.nodes[pi].requires_grad;
        Ok(self.push(
            Op::ThresholdL1 {
                pred: pi,
                gt: Arc::new(gd.to_vec()),
                mask: Arc::new(md.to_vec()),
                denom,
            },
            alloc::vec![],
            alloc::vec![loss],
            rg,
        ))
    }
}

#[inline]
fn bce_at<T: Scalar>(p: T, y: T) -> T {
    let eps = T::from_f64(BCE_EPS);
    let p = clamp(p, eps, T::one() - eps);
    -(y * p.ln() + (T::one() - y) * (T::one() - p).ln())
}

pub(crate) fn backward<T: Scalar>(
    nodes: &[Node<T>],
    grads: &mut [Option<Vec<T>>],
    id: NodeId,
    up: &[T],
) -> Result<()> {
    match &nodes[id].op {
        Op::OhemBce { pred, gt, selected, denom } => {
            let (pred, denom) = (*pred, *denom);
            let (gt, selected) = (gt.clone(), selected.clone());
            if wants_grad(nodes, pred) {
                let pd = nodes[pred].data.clone();
                let buf = acc_buf(grads, pred, pd.len());
                let eps = T::from_f64(BCE_EPS);
                let hi = T::one() - eps;
                let u = up[0] / denom;
                for &i in selected.iter() {
                    let i = i as usize;
                    let p = pd[i];
                    // The clamp is flat outside (eps, 1-eps): no gradient.
                    if p <= eps || p >= hi {
                        continue;
                    }
                    let y = gt[i];
                    let d = -(y / p) + (T::one() - y) / (T::one() - p);
                    buf[i] = buf[i] + u * d;
                }
            }
        }
        Op::ThresholdL1 { pred, gt, mask, denom } => {
            let (pred, denom) = (*pred, *denom);
            let (gt, mask) = (gt.clone(), mask.clone());
            if wants_grad(nodes, pred) {
                let pd = nodes[pred].data.clone();
                let buf = acc_buf(grads, pred, pd.len());
                let half = T::from_f64(0.5);
                let u = up[0] / denom;
                for i in 0..pd.len() {
                    if mask[i] <= half {
                        continue;
                    }
                    let d = pd[i] - gt[i];
                    if d > T::zero() {
                        buf[i] = buf[i] + u;
                    } else if d < T::zero() {
                        buf[i] = buf[i] - u;
                    }
                }
            }
        }
        _ => unreachable!("ops_loss::backward dispatched with foreign op"),
    }
    Ok(())
}
