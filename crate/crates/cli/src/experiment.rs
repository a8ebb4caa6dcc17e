//! Training one model variant across every fold of a plan.

use std::path::Path;

use anyhow::Result;
use eegnet_core::model::{save_model, EegNet, ModelSpec};
use eegnet_core::optim::{evaluate, train, EpochRecord};
use eegnet_core::pipeline::{Fold, FoldPlan};
use eegnet_core::rng::derive_seed;
use eegnet_core::stats::{summarize, MetricSummary};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::data::{fold_sets, Dataset, FoldSets};
use crate::error::CliError;

/// Outcome of one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    /// 1-based epoch of the lowest validation loss.
    pub best_epoch: usize,
    pub val_loss_best: f64,
    pub val_metric_best: f64,
    pub val_loss_final: f64,
    /// Test metric of the lowest-validation-loss snapshot.
    pub test_metric_best: f64,
    /// Test metric after the last epoch.
    pub test_metric_final: f64,
    pub epochs: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRun {
    pub label: String,
    pub spec: ModelSpec,
    /// SHA-256 of the model spec; equal architectures share it.
    pub architecture: String,
    pub param_count: usize,
    pub folds: Vec<FoldResult>,
}

impl ModelRun {
    pub fn test_best(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.test_metric_best).collect()
    }

    pub fn summaries(&self) -> Result<RunSummary> {
        let col = |f: fn(&FoldResult) -> f64| -> Result<MetricSummary> {
            let v: Vec<f64> = self.folds.iter().map(f).collect();
            if v.len() < 2 {
                // a single fold has no spread; report it with zero stderr
                return Ok(MetricSummary {
                    mean: v.first().copied().unwrap_or(f64::NAN),
                    values: v,
                    stderr: 0.0,
                });
            }
            Ok(summarize(&v)?)
        };
        Ok(RunSummary {
            val_best: col(|f| f.val_metric_best)?,
            test_best: col(|f| f.test_metric_best)?,
            test_final: col(|f| f.test_metric_final)?,
        })
    }
}

pub struct RunSummary {
    pub val_best: MetricSummary,
    pub test_best: MetricSummary,
    pub test_final: MetricSummary,
}

/// Per-fold seeds shared by every model variant so comparisons are paired.
pub fn fold_seeds(master: u64, k: usize) -> (u64, u64) {
    (
        derive_seed(master, "init", &[k as u64]),
        derive_seed(master, "train", &[k as u64]),
    )
}

/// Trains `spec` on prepared sets and scores both snapshots on the test set.
pub fn train_and_score(
    cfg: &ExperimentConfig,
    spec: &ModelSpec,
    sets: &FoldSets,
    init_seed: u64,
    train_seed: u64,
) -> Result<(FoldResult, EegNet)> {
    let mut model = EegNet::with_seed(spec, init_seed)?;
    let tcfg = cfg.train.to_train_config(train_seed, cfg.metric);
    let report = train(&mut model, &sets.train, &sets.validation, &tcfg)?;
    let best = *report.best_record();
    let last = *report.final_record();
    let (_, test_best) = evaluate(&report.best, &sets.test, cfg.metric)?;
    let (_, test_final) = evaluate(&report.last, &sets.test, cfg.metric)?;
    Ok((
        FoldResult {
            fold: 0,
            n_train: sets.train.len(),
            n_validation: sets.validation.len(),
            n_test: sets.test.len(),
            best_epoch: best.epoch,
            val_loss_best: best.val_loss,
            val_metric_best: best.val_metric,
            val_loss_final: last.val_loss,
            test_metric_best: test_best,
            test_metric_final: test_final,
            epochs: report.epochs,
        },
        report.best,
    ))
}

/// Runs one model variant over all folds. Folds execute on the current rayon
/// pool; results come back in fold order.
pub fn run_model(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    plan: &FoldPlan,
    spec: &ModelSpec,
    label: &str,
    save_dir: Option<&Path>,
) -> Result<ModelRun> {
    spec.validate()?;
    let param_count = EegNet::with_seed(spec, 0)?.param_count();
    let run_fold = |(k, fold): (usize, &Fold)| -> Result<FoldResult> {
        let inner = || -> Result<FoldResult> {
            let sets = fold_sets(cfg, ds, fold, k)?;
            let (init, tr) = fold_seeds(cfg.seed, k);
            let (mut res, best) = train_and_score(cfg, spec, &sets, init, tr)?;
            res.fold = k;
            if let Some(dir) = save_dir {
                save_model(&best, dir.join(format!("{}_fold{k:02}.eegm", file_stem(label))))?;
            }
            Ok(res)
        };
        inner().map_err(|e| match e.downcast::<eegnet_core::Error>() {
            Ok(source) => CliError::Fold { fold: k, source }.into(),
            Err(e) => e.context(format!("fold {k}")),
        })
    };
    let folds = plan
        .folds
        .par_iter()
        .enumerate()
        .map(run_fold)
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelRun {
        label: label.to_string(),
        spec: spec.clone(),
        architecture: architecture_fingerprint(spec),
        param_count,
        folds,
    })
}

pub fn architecture_fingerprint(spec: &ModelSpec) -> String {
    hex::encode(Sha256::digest(spec.to_toml().as_bytes()))
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}
