//! Tape-based reverse-mode differentiation over the network's operation set.
//!
//! Operations execute eagerly as they are recorded, so the node list is a
//! topological order by construction. [`Graph::backward`] walks it in reverse.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::ops::{self, BatchStats, BnCache, Mode, RunningStats};
use crate::tensor::Tensor;

static NEXT_GRAPH: AtomicU64 = AtomicU64::new(0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId {
    graph: u64,
    index: usize,
}

#[derive(Debug)]
enum Op {
    Input,
    Param(usize),
    SpatialConv {
        x: usize,
        w: usize,
        b: usize,
    },
    Conv2d {
        x: usize,
        k: usize,
        b: usize,
    },
    BatchNorm {
        x: usize,
        gamma: usize,
        beta: usize,
        cache: BnCache,
    },
    Elu {
        x: usize,
        alpha: f64,
    },
    MaxPool {
        x: usize,
        argmax: Vec<usize>,
    },
    Dropout {
        x: usize,
        mask: Vec<f64>,
    },
    Reshape {
        x: usize,
    },
    Affine {
        x: usize,
        w: usize,
        b: usize,
    },
    /// Mean softmax cross-entropy over the batch rows.
    SoftmaxXent {
        logits: usize,
        labels: Vec<usize>,
        probs: Tensor,
    },
    ElasticNet {
        w: usize,
        l1: f64,
        l2: f64,
    },
    Add {
        a: usize,
        b: usize,
    },
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor,
}

/// A recorded forward computation.
#[derive(Debug)]
pub struct Graph {
    id: u64,
    nodes: Vec<Node>,
}

/// Result of [`Graph::backward`].
#[derive(Debug)]
pub struct Gradients {
    nodes: Vec<Option<Tensor>>,
    params: BTreeMap<usize, Tensor>,
}

impl Gradients {
    /// Gradient for an external parameter slot; `None` if no path reaches it.
    pub fn param(&self, slot: usize) -> Option<&Tensor> {
        self.params.get(&slot)
    }

    pub fn node(&self, id: NodeId) -> Option<&Tensor> {
        self.nodes.get(id.index).and_then(Option::as_ref)
    }

    pub fn into_params(self) -> BTreeMap<usize, Tensor> {
        self.params
    }
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

impl Graph {
    pub fn new() -> Self {
        Graph {
            id: NEXT_GRAPH.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn idx(&self, id: NodeId) -> Result<usize> {
        if id.graph != self.id || id.index >= self.nodes.len() {
            return Err(Error::GraphState(format!(
                "node {} was not recorded in this graph",
                id.index
            )));
        }
        Ok(id.index)
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        debug_assert!(value.is_finite(), "non-finite forward value from {op:?}");
        self.nodes.push(Node { op, value });
        NodeId {
            graph: self.id,
            index: self.nodes.len() - 1,
        }
    }

    fn val(&self, i: usize) -> &Tensor {
        &self.nodes[i].value
    }

    pub fn value(&self, id: NodeId) -> Result<&Tensor> {
        Ok(self.val(self.idx(id)?))
    }

    pub fn input(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Input, value)
    }

    /// Records a trainable parameter; `slot` identifies it in [`Gradients::param`].
    pub fn param(&mut self, slot: usize, value: Tensor) -> NodeId {
        self.push(Op::Param(slot), value)
    }

    pub fn spatial_conv(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let (x, w, b) = (self.idx(x)?, self.idx(w)?, self.idx(b)?);
        let y = ops::spatial_conv_batch(self.val(x), self.val(w), self.val(b))?;
        Ok(self.push(Op::SpatialConv { x, w, b }, y))
    }

    pub fn conv2d_same(&mut self, x: NodeId, k: NodeId, b: NodeId) -> Result<NodeId> {
        let (x, k, b) = (self.idx(x)?, self.idx(k)?, self.idx(b)?);
        let y = ops::conv2d_same_batch(self.val(x), self.val(k), self.val(b))?;
        Ok(self.push(Op::Conv2d { x, k, b }, y))
    }

    /// Returns the output node and, in train mode, the batch statistics.
    pub fn batchnorm(
        &mut self,
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
        running: &RunningStats,
        mode: Mode,
        eps: f64,
    ) -> Result<(NodeId, Option<BatchStats>)> {
        let (x, gamma, beta) = (self.idx(x)?, self.idx(gamma)?, self.idx(beta)?);
        let (y, cache, stats) = ops::batchnorm_batch(self.val(x), self.val(gamma), self.val(beta), running, mode, eps)?;
        Ok((self.push(Op::BatchNorm { x, gamma, beta, cache }, y), stats))
    }

    pub fn elu(&mut self, x: NodeId, alpha: f64) -> Result<NodeId> {
        let x = self.idx(x)?;
        let y = ops::elu(self.val(x), alpha);
        Ok(self.push(Op::Elu { x, alpha }, y))
    }

    pub fn maxpool(&mut self, x: NodeId, pool: (usize, usize)) -> Result<NodeId> {
        let x = self.idx(x)?;
        let (y, argmax) = ops::maxpool2d_batch(self.val(x), pool)?;
        Ok(self.push(Op::MaxPool { x, argmax }, y))
    }

    /// Applies a precomputed dropout mask (see [`ops::dropout_mask`]).
    pub fn dropout(&mut self, x: NodeId, mask: Vec<f64>) -> Result<NodeId> {
        let x = self.idx(x)?;
        if mask.len() != self.val(x).len() {
            return Err(Error::Dimension(format!(
                "dropout mask has {} entries for {} elements",
                mask.len(),
                self.val(x).len()
            )));
        }
        let y = ops::apply_mask(self.val(x), &mask);
        Ok(self.push(Op::Dropout { x, mask }, y))
    }

    /// Re-indexing that preserves element order (axis swap around a unit axis, flatten).
    pub fn reshape(&mut self, x: NodeId, shape: &[usize]) -> Result<NodeId> {
        let x = self.idx(x)?;
        let y = self.val(x).clone().reshape(shape)?;
        Ok(self.push(Op::Reshape { x }, y))
    }

    pub fn affine(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let (x, w, b) = (self.idx(x)?, self.idx(w)?, self.idx(b)?);
        let y = ops::affine_batch(self.val(x), self.val(w), self.val(b))?;
        Ok(self.push(Op::Affine { x, w, b }, y))
    }

    /// Mean categorical cross-entropy of `[B, N]` logits against `labels`.
    pub fn softmax_cross_entropy(&mut self, logits: NodeId, labels: &[usize]) -> Result<NodeId> {
        let li = self.idx(logits)?;
        let z = self.val(li);
        if z.ndim() != 2 || z.shape()[0] != labels.len() {
            return Err(Error::Dimension(format!(
                "logits {:?} do not match {} labels",
                z.shape(),
                labels.len()
            )));
        }
        let n = z.shape()[1];
        let mut loss = 0.0;
        for (row, &l) in z.data().chunks_exact(n).zip(labels) {
            if l >= n {
                return Err(Error::Index { index: l, len: n });
            }
            loss -= ops::log_softmax(row)[l];
        }
        loss /= labels.len() as f64;
        let probs = ops::softmax_rows(z);
        Ok(self.push(
            Op::SoftmaxXent {
                logits: li,
                labels: labels.to_vec(),
                probs,
            },
            Tensor::scalar(loss),
        ))
    }

    /// `l1 * sum|w| + l2 * sum w^2`.
    pub fn elastic_net(&mut self, w: NodeId, l1: f64, l2: f64) -> Result<NodeId> {
        let w = self.idx(w)?;
        let v = crate::optim::elastic_net_penalty(self.val(w), l1, l2);
        Ok(self.push(Op::ElasticNet { w, l1, l2 }, Tensor::scalar(v)))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (a, b) = (self.idx(a)?, self.idx(b)?);
        if self.val(a).shape() != self.val(b).shape() {
            return Err(Error::Dimension(format!(
                "add between {:?} and {:?}",
                self.val(a).shape(),
                self.val(b).shape()
            )));
        }
        let mut y = self.val(a).clone();
        y.axpy(1.0, self.val(b))?;
        Ok(self.push(Op::Add { a, b }, y))
    }

    /// Hash of every branch the recorded ops took at a non-differentiable
    /// point: ELU input signs, max-pool winners and L1 weight signs. Two
    /// graphs with equal signatures lie on the same smooth piece of the loss.
    pub fn branch_signature(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for node in &self.nodes {
            match &node.op {
                Op::Elu { x, .. } => self.val(*x).data().iter().for_each(|v| (*v > 0.0).hash(&mut h)),
                Op::MaxPool { argmax, .. } => argmax.hash(&mut h),
                Op::ElasticNet { w, .. } => self
                    .val(*w)
                    .data()
                    .iter()
                    .for_each(|v| v.signum().to_bits().hash(&mut h)),
                _ => {}
            }
        }
        h.finish()
    }

    /// Reverse sweep from a scalar node.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        let root = self.idx(loss)?;
        if self.val(root).len() != 1 {
            return Err(Error::GraphState(format!(
                "backward needs a scalar loss, node has shape {:?}",
                self.val(root).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root] = Some(Tensor::full(self.val(root).shape(), 1.0));

        fn acc(grads: &mut [Option<Tensor>], i: usize, g: Tensor) -> Result<()> {
            match &mut grads[i] {
                Some(existing) => existing.axpy(1.0, &g),
                slot @ None => {
                    *slot = Some(g);
                    Ok(())
                }
            }
        }

        let mut params: BTreeMap<usize, Tensor> = BTreeMap::new();
        for i in (0..=root).rev() {
            let Some(g) = grads[i].take() else { continue };
            match &self.nodes[i].op {
                Op::Input => {}
                Op::Param(slot) => match params.get_mut(slot) {
                    Some(p) => p.axpy(1.0, &g)?,
                    None => {
                        params.insert(*slot, g.clone());
                    }
                },
                Op::SpatialConv { x, w, b } => {
                    let r = ops::spatial_conv_batch_backward(&g, self.val(*x), self.val(*w))?;
                    acc(&mut grads, *x, r.input)?;
                    acc(&mut grads, *w, r.weight)?;
                    acc(&mut grads, *b, r.bias)?;
                }
                Op::Conv2d { x, k, b } => {
                    let r = ops::conv2d_same_batch_backward(&g, self.val(*x), self.val(*k))?;
                    acc(&mut grads, *x, r.input)?;
                    acc(&mut grads, *k, r.weight)?;
                    acc(&mut grads, *b, r.bias)?;
                }
                Op::BatchNorm { x, gamma, beta, cache } => {
                    let (dx, dg, db) = ops::batchnorm_batch_backward(&g, self.val(*gamma), cache)?;
                    acc(&mut grads, *x, dx)?;
                    acc(&mut grads, *gamma, dg)?;
                    acc(&mut grads, *beta, db)?;
                }
                Op::Elu { x, alpha } => {
                    let dx = ops::elu_backward(&g, self.val(*x), self.val(i), *alpha);
                    acc(&mut grads, *x, dx)?;
                }
                Op::MaxPool { x, argmax } => {
                    let dx = ops::maxpool2d_batch_backward(&g, self.val(*x).shape(), argmax)?;
                    acc(&mut grads, *x, dx)?;
                }
                Op::Dropout { x, mask } => {
                    acc(&mut grads, *x, ops::apply_mask(&g, mask))?;
                }
                Op::Reshape { x } => {
                    let dx = g.clone().reshape(self.val(*x).shape())?;
                    acc(&mut grads, *x, dx)?;
                }
                Op::Affine { x, w, b } => {
                    let (dx, dw, db) = ops::affine_batch_backward(&g, self.val(*x), self.val(*w))?;
                    acc(&mut grads, *x, dx)?;
                    acc(&mut grads, *w, dw)?;
                    acc(&mut grads, *b, db)?;
                }
                Op::SoftmaxXent { logits, labels, probs } => {
                    let scale = g.data()[0] / labels.len() as f64;
                    let n = probs.shape()[1];
                    let mut dz = probs.clone();
                    for (row, &l) in dz.data_mut().chunks_exact_mut(n).zip(labels) {
                        row[l] -= 1.0;
                        row.iter_mut().for_each(|v| *v *= scale);
                    }
                    acc(&mut grads, *logits, dz)?;
                }
                Op::ElasticNet { w, l1, l2 } => {
                    let s = g.data()[0];
                    let mut dw = self.val(*w).clone();
                    dw.data_mut()
                        .iter_mut()
                        .for_each(|v| *v = s * crate::optim::elastic_net_subgradient(*v, *l1, *l2));
                    acc(&mut grads, *w, dw)?;
                }
                Op::Add { a, b } => {
                    acc(&mut grads, *a, g.clone())?;
                    acc(&mut grads, *b, g.clone())?;
                }
            }
            grads[i] = Some(g);
        }
        Ok(Gradients { nodes: grads, params })
    }
}
