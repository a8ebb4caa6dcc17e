//! Minibatch Adam training with per-epoch validation and best-snapshot retention.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{DropoutSource, EegNet};
use crate::ops::{self, Mode};
use crate::pipeline::EpochSet;
use crate::rng;
use crate::stats::Metric;
use crate::tensor::Tensor;

use super::adam::{AdamConfig, AdamState};
use super::penalty::elastic_net_penalty;

/// Trials per inference batch during evaluation.
/// Trials per inference batch when scoring a whole set.
pub const EVAL_BATCH: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Elastic-net coefficients on the layer-1 spatial weights.
    pub l1: f64,
    pub l2: f64,
    pub adam: AdamConfig,
    pub metric: Metric,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 500,
            batch_size: 64,
            seed: 0,
            l1: 1e-4,
            l2: 1e-4,
            adam: AdamConfig::default(),
            metric: Metric::Auc,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Parameter("epochs must be at least 1".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::Parameter("batch size must be at least 2".into()));
        }
        if self.l1 < 0.0 || self.l2 < 0.0 {
            return Err(Error::Parameter("penalty coefficients must be nonnegative".into()));
        }
        if !(self.adam.lr >= 0.0) {
            return Err(Error::Parameter(format!(
                "learning rate {} must be nonnegative",
                self.adam.lr
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Mean over minibatches of cross-entropy plus elastic-net penalty.
    pub train_loss: f64,
    /// Plain cross-entropy on the validation set in inference mode.
    pub val_loss: f64,
    pub val_metric: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// Index into `epochs` of the lowest validation loss (earliest on ties).
    pub best_index: usize,
    pub best: EegNet,
    pub last: EegNet,
}

impl TrainReport {
    pub fn best_record(&self) -> &EpochRecord {
        &self.epochs[self.best_index]
    }

    pub fn final_record(&self) -> &EpochRecord {
        self.epochs.last().expect("at least one epoch")
    }

    /// One line per epoch: `epoch,train_loss,val_loss,val_metric`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss,val_metric\n");
        for r in &self.epochs {
            s.push_str(&format!(
                "{},{},{},{}\n",
                r.epoch,
                format_float(r.train_loss),
                format_float(r.val_loss),
                format_float(r.val_metric)
            ));
        }
        s
    }
}

/// Scientific notation with 17 significant digits; parses back to the same value.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn check_set(model: &EegNet, set: &EpochSet, what: &str) -> Result<()> {
    let s = model.spec();
    if set.is_empty() {
        return Err(Error::Data(format!("{what} set is empty")));
    }
    if set.channels != s.channels || set.samples != s.samples {
        return Err(Error::Data(format!(
            "{what} trials are {} x {}, model expects {} x {}",
            set.channels, set.samples, s.channels, s.samples
        )));
    }
    if let Some(&l) = set.labels.iter().find(|&&l| l >= s.classes) {
        return Err(Error::Data(format!("{what} label {l} outside [0, {})", s.classes)));
    }
    if set.data.len() != set.len() * set.trial_len() {
        return Err(Error::Data(format!("{what} payload length is inconsistent")));
    }
    Ok(())
}

/// Inference-mode class probabilities `[B, N]` for every trial of `set`.
pub fn predict_set(model: &EegNet, set: &EpochSet) -> Result<Tensor> {
    let n = model.spec().classes;
    let mut out = Vec::with_capacity(set.len() * n);
    let idx: Vec<usize> = (0..set.len()).collect();
    for chunk in idx.chunks(EVAL_BATCH) {
        out.extend_from_slice(model.predict(&set.batch(chunk))?.data());
    }
    Tensor::new(vec![set.len(), n], out)
}

/// Mean cross-entropy of `probs` rows against `labels`.
pub fn mean_cross_entropy(probs: &Tensor, labels: &[usize]) -> Result<f64> {
    let n = probs.shape()[1];
    let total: f64 = probs
        .data()
        .chunks_exact(n)
        .zip(labels)
        .map(|(row, &l)| ops::cross_entropy(row, l))
        .sum::<Result<f64>>()?;
    Ok(total / labels.len() as f64)
}

/// `(cross-entropy, metric)` of `model` on `set`.
pub fn evaluate(model: &EegNet, set: &EpochSet, metric: Metric) -> Result<(f64, f64)> {
    check_set(model, set, "evaluation")?;
    let probs = predict_set(model, set)?;
    Ok((
        mean_cross_entropy(&probs, &set.labels)?,
        metric.evaluate(&probs, &set.labels)?,
    ))
}

/// Trains `model` in place; it ends holding the final-epoch parameters.
pub fn train(model: &mut EegNet, train_set: &EpochSet, val_set: &EpochSet, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    check_set(model, train_set, "training")?;
    check_set(model, val_set, "validation")?;
    if train_set.len() < 2 {
        return Err(Error::Data("training needs at least 2 trials".into()));
    }
    let names = model.param_names();
    let spatial = model.layout().spatial_w;
    let mut adam = AdamState::new(cfg.adam, model.params());
    let dropout_seed = rng::derive_seed(cfg.seed, "dropout", &[]);
    let mut step = 0u64;
    let mut records = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, EegNet)> = None;

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        order.shuffle(&mut rng::stream(cfg.seed, "shuffle", &[epoch as u64]));
        let (mut loss_sum, mut batches) = (0.0, 0usize);
        for chunk in order.chunks(cfg.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let labels: Vec<usize> = chunk.iter().map(|&i| train_set.labels[i]).collect();
            let mut g = Graph::new();
            let fwd = model.forward_graph(
                &mut g,
                train_set.batch(chunk),
                Mode::Train,
                DropoutSource::Seeded {
                    seed: dropout_seed,
                    step,
                },
            )?;
            let mut loss = g.softmax_cross_entropy(fwd.logits, &labels)?;
            if cfg.l1 > 0.0 || cfg.l2 > 0.0 {
                let pen = g.elastic_net(fwd.params[spatial], cfg.l1, cfg.l2)?;
                loss = g.add(loss, pen)?;
            }
            loss_sum += g.value(loss)?.data()[0];
            batches += 1;
            let grads = g.backward(loss)?;
            let grads: Vec<Tensor> = model
                .params()
                .iter()
                .enumerate()
                .map(|(i, p)| grads.param(i).cloned().unwrap_or_else(|| Tensor::zeros(p.shape())))
                .collect();
            adam.step(model.params_mut(), &grads, &names)?;
            model.update_running(&fwd.batch_stats);
            step += 1;
        }
        let (val_loss, val_metric) = evaluate(model, val_set, cfg.metric)?;
        let train_loss = if batches > 0 {
            loss_sum / batches as f64
        } else {
            f64::NAN
        };
        records.push(EpochRecord {
            epoch: epoch + 1,
            train_loss,
            val_loss,
            val_metric,
        });
        let improved = match &best {
            Some((i, _)) => val_loss < records[*i].val_loss,
            None => true,
        };
        if improved {
            best = Some((epoch, model.clone()));
        }
    }
    let (best_index, best) = best.expect("at least one epoch");
    Ok(TrainReport {
        epochs: records,
        best_index,
        best,
        last: model.clone(),
    })
}

/// Penalty contribution for the current layer-1 spatial weights of `model`.
pub fn spatial_penalty(model: &EegNet, l1: f64, l2: f64) -> f64 {
    elastic_net_penalty(&model.params()[model.layout().spatial_w], l1, l2)
}
