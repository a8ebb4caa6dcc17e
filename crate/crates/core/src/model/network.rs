//! Layer stack assembly, initialization and execution.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::ops::{self, BatchStats, Mode, RunningStats, BN_EPSILON, BN_MOMENTUM};
use crate::rng::{self, Stream};
use crate::tensor::Tensor;

use super::spec::ModelSpec;

/// Trainable parameter slots of a built network.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub spatial_w: usize,
    pub spatial_b: usize,
    pub bn: Option<[(usize, usize); 3]>,
    pub conv2_w: usize,
    pub conv2_b: usize,
    pub conv3_w: usize,
    pub conv3_b: usize,
    pub dense: Option<(usize, usize)>,
    pub out_w: usize,
    pub out_b: usize,
}

/// One trainable tensor: its name, owning layer and shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamDecl {
    pub name: String,
    pub layer: &'static str,
    pub shape: Vec<usize>,
}

fn declare(spec: &ModelSpec) -> (Layout, Vec<ParamDecl>) {
    let mut decls = Vec::new();
    let mut add = |name: &str, layer: &'static str, shape: Vec<usize>| {
        decls.push(ParamDecl {
            name: name.to_string(),
            layer,
            shape,
        });
        decls.len() - 1
    };
    let (f1, f2, f3) = (spec.layer1_filters, spec.layer2_filters, spec.layer3_filters);
    let (k2, k3) = (spec.kernels.layer2, spec.kernels.layer3);
    let bn = spec.ablation.batchnorm();

    let spatial_w = add("l1.spatial.weight", "layer1.spatial", vec![f1, spec.channels]);
    let spatial_b = add("l1.spatial.bias", "layer1.spatial", vec![f1]);
    let bn1 = bn.then(|| {
        (
            add("l1.bn.gamma", "layer1.batchnorm", vec![f1]),
            add("l1.bn.beta", "layer1.batchnorm", vec![f1]),
        )
    });
    let conv2_w = add("l2.conv.weight", "layer2.conv", vec![f2, 1, k2.0, k2.1]);
    let conv2_b = add("l2.conv.bias", "layer2.conv", vec![f2]);
    let bn2 = bn.then(|| {
        (
            add("l2.bn.gamma", "layer2.batchnorm", vec![f2]),
            add("l2.bn.beta", "layer2.batchnorm", vec![f2]),
        )
    });
    let conv3_w = add("l3.conv.weight", "layer3.conv", vec![f3, f2, k3.0, k3.1]);
    let conv3_b = add("l3.conv.bias", "layer3.conv", vec![f3]);
    let bn3 = bn.then(|| {
        (
            add("l3.bn.gamma", "layer3.batchnorm", vec![f3]),
            add("l3.bn.beta", "layer3.batchnorm", vec![f3]),
        )
    });
    let d = spec.flat_features();
    let (dense, head_in) = if spec.ablation.dense() {
        let u = spec.dense_units;
        let w = add("dense.weight", "dense", vec![u, d]);
        let b = add("dense.bias", "dense", vec![u]);
        (Some((w, b)), u)
    } else {
        (None, d)
    };
    let out_w = add("out.weight", "softmax", vec![spec.classes, head_in]);
    let out_b = add("out.bias", "softmax", vec![spec.classes]);
    let bn = match (bn1, bn2, bn3) {
        (Some(a), Some(b), Some(c)) => Some([a, b, c]),
        _ => None,
    };
    let layout = Layout {
        spatial_w,
        spatial_b,
        bn,
        conv2_w,
        conv2_b,
        conv3_w,
        conv3_b,
        dense,
        out_w,
        out_b,
    };
    (layout, decls)
}

/// Trainable parameter count, itemized by layer in stack order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamCount {
    pub layers: Vec<(&'static str, usize)>,
    pub total: usize,
}

impl ParamCount {
    pub fn layer(&self, name: &str) -> Option<usize> {
        self.layers.iter().find(|(n, _)| *n == name).map(|(_, c)| *c)
    }
}

/// Counts trainable parameters of `spec`; running batch-norm statistics are excluded.
pub fn count_parameters(spec: &ModelSpec) -> Result<ParamCount> {
    spec.validate()?;
    let (_, decls) = declare(spec);
    let mut layers: Vec<(&'static str, usize)> = Vec::new();
    for d in &decls {
        let n: usize = d.shape.iter().product();
        match layers.last_mut() {
            Some((name, c)) if *name == d.layer => *c += n,
            _ => layers.push((d.layer, n)),
        }
    }
    let total = layers.iter().map(|(_, c)| c).sum();
    Ok(ParamCount { layers, total })
}

/// Where dropout masks come from during a train-mode forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutSource {
    /// Dropout layers pass values through unchanged.
    Disabled,
    /// Mask for layer `l` at optimizer step `step` is drawn from the stream
    /// labeled `"dropout"` with indices `[l, step]` under `seed`.
    Seeded { seed: u64, step: u64 },
}

/// One row of the shape trace: stage label and per-trial output shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub stage: String,
    pub shape: Vec<usize>,
}

/// Nodes and side outputs of one recorded forward pass.
#[derive(Debug)]
pub struct Forward {
    pub logits: NodeId,
    /// Slot -> node for every trainable parameter.
    pub params: Vec<NodeId>,
    /// Batch statistics of each batch-norm layer (train mode only).
    pub batch_stats: Vec<BatchStats>,
    pub trace: Vec<TraceEntry>,
}

/// A built network: spec, parameters and running batch-norm statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EegNet {
    spec: ModelSpec,
    layout: Layout,
    decls: Vec<ParamDecl>,
    params: Vec<Tensor>,
    running: Vec<RunningStats>,
}

impl EegNet {
    /// Builds the layer stack with Glorot-uniform weights, zero biases,
    /// unit gamma and zero beta.
    pub fn build(spec: &ModelSpec, init_rng: &mut Stream) -> Result<Self> {
        spec.validate()?;
        let (layout, decls) = declare(spec);
        let params = decls.iter().map(|d| init_param(d, init_rng)).collect::<Vec<_>>();
        let running = if spec.ablation.batchnorm() {
            vec![
                RunningStats::new(spec.layer1_filters),
                RunningStats::new(spec.layer2_filters),
                RunningStats::new(spec.layer3_filters),
            ]
        } else {
            Vec::new()
        };
        Ok(EegNet {
            spec: spec.clone(),
            layout,
            decls,
            params,
            running,
        })
    }

    /// Builds with the init stream derived from `seed`.
    pub fn with_seed(spec: &ModelSpec, seed: u64) -> Result<Self> {
        Self::build(spec, &mut rng::stream(seed, "init", &[]))
    }

    pub(crate) fn from_parts(spec: ModelSpec, params: Vec<Tensor>, running: Vec<RunningStats>) -> Result<Self> {
        spec.validate()?;
        let (layout, decls) = declare(&spec);
        if params.len() != decls.len() {
            return Err(Error::Format(format!(
                "expected {} parameter tensors, found {}",
                decls.len(),
                params.len()
            )));
        }
        for (p, d) in params.iter().zip(&decls) {
            if p.shape() != d.shape.as_slice() {
                return Err(Error::Format(format!(
                    "parameter `{}` has shape {:?}, expected {:?}",
                    d.name,
                    p.shape(),
                    d.shape
                )));
            }
        }
        let expect_bn = if spec.ablation.batchnorm() { 3 } else { 0 };
        if running.len() != expect_bn {
            return Err(Error::Format(format!(
                "expected {expect_bn} running-statistics blocks, found {}",
                running.len()
            )));
        }
        Ok(EegNet {
            spec,
            layout,
            decls,
            params,
            running,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn decls(&self) -> &[ParamDecl] {
        &self.decls
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn param_names(&self) -> Vec<String> {
        self.decls.iter().map(|d| d.name.clone()).collect()
    }

    pub fn running_stats(&self) -> &[RunningStats] {
        &self.running
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Folds train-mode batch statistics into the running statistics.
    pub fn update_running(&mut self, stats: &[BatchStats]) {
        for (r, s) in self.running.iter_mut().zip(stats) {
            r.update(s, BN_MOMENTUM);
        }
    }

    /// Records the forward pass of a `[B, C, T]` batch into `g`.
    pub fn forward_graph(&self, g: &mut Graph, batch: Tensor, mode: Mode, dropout: DropoutSource) -> Result<Forward> {
        let s = &self.spec;
        if batch.ndim() != 3 || batch.shape()[1] != s.channels || batch.shape()[2] != s.samples {
            return Err(Error::Dimension(format!(
                "batch {:?} does not match (batch, {}, {})",
                batch.shape(),
                s.channels,
                s.samples
            )));
        }
        let b = batch.shape()[0];
        let params: Vec<NodeId> = self
            .params
            .iter()
            .enumerate()
            .map(|(i, p)| g.param(i, p.clone()))
            .collect();
        let mut trace = Vec::new();
        let mut record = |g: &Graph, stage: &str, id: NodeId| -> Result<()> {
            trace.push(TraceEntry {
                stage: stage.to_string(),
                shape: g.value(id)?.shape()[1..].to_vec(),
            });
            Ok(())
        };
        let mut batch_stats = Vec::new();
        let l = &self.layout;
        let alpha = s.elu_alpha;

        let bn = |g: &mut Graph, x: NodeId, layer: usize, stats: &mut Vec<BatchStats>| -> Result<NodeId> {
            match l.bn {
                Some(slots) => {
                    let (gamma, beta) = slots[layer];
                    let (y, st) =
                        g.batchnorm(x, params[gamma], params[beta], &self.running[layer], mode, BN_EPSILON)?;
                    stats.extend(st);
                    Ok(y)
                }
                None => Ok(x),
            }
        };
        let drop = |g: &mut Graph, x: NodeId, layer: u64| -> Result<NodeId> {
            if !s.ablation.dropout() || mode == Mode::Infer || s.dropout == 0.0 {
                return Ok(x);
            }
            match dropout {
                DropoutSource::Disabled => Ok(x),
                DropoutSource::Seeded { seed, step } => {
                    let n = g.value(x)?.len();
                    let mask = ops::dropout_mask(n, s.dropout, &mut rng::stream(seed, "dropout", &[layer, step]))?;
                    g.dropout(x, mask)
                }
            }
        };

        let x = g.input(batch);
        // layer 1
        let h = g.spatial_conv(x, params[l.spatial_w], params[l.spatial_b])?;
        record(g, "layer1.spatial_conv", h)?;
        let h = bn(g, h, 0, &mut batch_stats)?;
        let h = g.elu(h, alpha)?;
        let h = g.reshape(h, &[b, 1, s.layer1_filters, s.samples])?;
        record(g, "layer1.transpose", h)?;
        let h = drop(g, h, 1)?;
        // layer 2
        let h = g.conv2d_same(h, params[l.conv2_w], params[l.conv2_b])?;
        record(g, "layer2.conv", h)?;
        let h = bn(g, h, 1, &mut batch_stats)?;
        let h = g.elu(h, alpha)?;
        let h = g.maxpool(h, s.pool)?;
        record(g, "layer2.maxpool", h)?;
        let h = drop(g, h, 2)?;
        // layer 3
        let h = g.conv2d_same(h, params[l.conv3_w], params[l.conv3_b])?;
        record(g, "layer3.conv", h)?;
        let h = bn(g, h, 2, &mut batch_stats)?;
        let h = g.elu(h, alpha)?;
        let h = g.maxpool(h, s.pool)?;
        record(g, "layer3.maxpool", h)?;
        let h = drop(g, h, 3)?;
        // classifier
        let mut h = g.reshape(h, &[b, s.flat_features()])?;
        record(g, "flatten", h)?;
        if let Some((w, bias)) = l.dense {
            h = g.affine(h, params[w], params[bias])?;
            h = g.elu(h, alpha)?;
            record(g, "dense", h)?;
        }
        let logits = g.affine(h, params[l.out_w], params[l.out_b])?;
        record(g, "softmax", logits)?;

        Ok(Forward {
            logits,
            params,
            batch_stats,
            trace,
        })
    }

    /// Class probabilities `[B, N]` for a `[B, C, T]` batch.
    pub fn forward_batch(&self, batch: &Tensor, mode: Mode, dropout: DropoutSource) -> Result<Tensor> {
        let mut g = Graph::new();
        let fwd = self.forward_graph(&mut g, batch.clone(), mode, dropout)?;
        Ok(ops::softmax_rows(g.value(fwd.logits)?))
    }

    /// Inference-mode probabilities.
    pub fn predict(&self, batch: &Tensor) -> Result<Tensor> {
        self.forward_batch(batch, Mode::Infer, DropoutSource::Disabled)
    }

    /// Per-trial output shape of every stage for a forward pass in inference mode.
    pub fn shape_trace(&self) -> Result<Vec<TraceEntry>> {
        let mut g = Graph::new();
        let x = Tensor::zeros(&[1, self.spec.channels, self.spec.samples]);
        Ok(self
            .forward_graph(&mut g, x, Mode::Infer, DropoutSource::Disabled)?
            .trace)
    }
}

fn init_param(d: &ParamDecl, rng: &mut Stream) -> Tensor {
    let n: usize = d.shape.iter().product();
    if d.name.ends_with(".gamma") {
        return Tensor::full(&d.shape, 1.0);
    }
    if d.name.ends_with(".bias") || d.name.ends_with(".beta") {
        return Tensor::zeros(&d.shape);
    }
    let (fan_in, fan_out) = match d.shape.as_slice() {
        // spatial filter: one input map, receptive field C x 1
        [f, c] if d.name.starts_with("l1.") => (*c, f * c),
        [out, inp] => (*inp, *out),
        [out, inp, kh, kw] => (inp * kh * kw, out * kh * kw),
        _ => (n, n),
    };
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Tensor::from_fn(&d.shape, |_| rng.gen_range(-limit..limit))
}
