//! CSV tables and the run bundle.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use eegnet_core::optim::format_float;
use eegnet_core::pipeline::FoldPlan;
use eegnet_core::stats::RankTable;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::experiment::ModelRun;

pub const BUNDLE_FILE: &str = "bundle.json";

/// Audit record of one command invocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bundle {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub fingerprint: String,
    pub paradigm: String,
    pub config: ExperimentConfig,
    pub plan: FoldPlan,
    pub runs: Vec<ModelRun>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curve: Vec<CurveEntry>,
    pub defaults: Defaults,
}

/// Settings fixed by the implementation rather than by the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Defaults {
    pub weight_init: String,
    pub batchnorm_epsilon: f64,
    pub batchnorm_momentum: f64,
    pub penalized_weights: String,
    pub model_selection: String,
    pub eval_batch: usize,
    pub seed_derivation: String,
    pub float_format: String,
}

impl Default for Defaults {
    fn default() -> Self {
        Defaults {
            weight_init: "glorot-uniform weights, zero biases, unit BN scale".into(),
            batchnorm_epsilon: eegnet_core::ops::BN_EPSILON,
            batchnorm_momentum: eegnet_core::ops::BN_MOMENTUM,
            penalized_weights: "layer-1 spatial weights".into(),
            model_selection: "first epoch with the lowest validation loss".into(),
            eval_batch: eegnet_core::optim::EVAL_BATCH,
            seed_derivation: "sha256(master, label, indices) -> chacha8".into(),
            float_format: "17 significant digits".into(),
        }
    }
}

impl Bundle {
    pub fn new(command: &str, cfg: &ExperimentConfig, paradigm: &str, plan: FoldPlan, runs: Vec<ModelRun>) -> Self {
        Bundle {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            fingerprint: cfg.fingerprint(),
            paradigm: paradigm.into(),
            config: cfg.clone(),
            plan,
            runs,
            curve: Vec::new(),
            defaults: Defaults::default(),
        }
    }

    /// Accepts either a bundle file or a directory holding one.
    pub fn load(path: &Path) -> Result<Self> {
        let file = if path.is_dir() {
            path.join(BUNDLE_FILE)
        } else {
            path.to_path_buf()
        };
        let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", file.display()))
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(BUNDLE_FILE);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub fn f(x: f64) -> String {
    format_float(x)
}

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

pub fn write_summary(dir: &Path, fp: &str, metric: &str, runs: &[ModelRun]) -> Result<()> {
    let mut w = writer(dir, "summary.csv")?;
    w.write_record([
        "fingerprint",
        "label",
        "metric",
        "folds",
        "params",
        "val_best_mean",
        "val_best_stderr",
        "test_best_mean",
        "test_best_stderr",
        "test_final_mean",
        "test_final_stderr",
    ])?;
    for r in runs {
        let s = r.summaries()?;
        w.write_record([
            fp.to_string(),
            r.label.clone(),
            metric.to_string(),
            r.folds.len().to_string(),
            r.param_count.to_string(),
            f(s.val_best.mean),
            f(s.val_best.stderr),
            f(s.test_best.mean),
            f(s.test_best.stderr),
            f(s.test_final.mean),
            f(s.test_final.stderr),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn join_units(units: &[eegnet_core::pipeline::Unit]) -> String {
    units.iter().map(|u| u.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn write_folds(dir: &Path, fp: &str, plan: &FoldPlan, runs: &[ModelRun]) -> Result<()> {
    let mut w = writer(dir, "folds.csv")?;
    w.write_record([
        "fingerprint",
        "label",
        "fold",
        "train_units",
        "validation_units",
        "test_units",
        "n_train",
        "n_validation",
        "n_test",
        "best_epoch",
        "val_loss_best",
        "val_metric_best",
        "val_loss_final",
        "test_metric_best",
        "test_metric_final",
    ])?;
    for r in runs {
        for res in &r.folds {
            let fold = &plan.folds[res.fold];
            w.write_record([
                fp.to_string(),
                r.label.clone(),
                res.fold.to_string(),
                join_units(&fold.train),
                join_units(&fold.validation),
                join_units(&fold.test),
                res.n_train.to_string(),
                res.n_validation.to_string(),
                res.n_test.to_string(),
                res.best_epoch.to_string(),
                f(res.val_loss_best),
                f(res.val_metric_best),
                f(res.val_loss_final),
                f(res.test_metric_best),
                f(res.test_metric_final),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-epoch loss series of every run and fold.
pub fn write_loss_curves(dir: &Path, fp: &str, runs: &[ModelRun]) -> Result<()> {
    let mut w = writer(dir, "curves.csv")?;
    w.write_record([
        "fingerprint",
        "label",
        "fold",
        "epoch",
        "train_loss",
        "val_loss",
        "val_metric",
    ])?;
    for r in runs {
        for res in &r.folds {
            for e in &res.epochs {
                w.write_record([
                    fp.to_string(),
                    r.label.clone(),
                    res.fold.to_string(),
                    e.epoch.to_string(),
                    f(e.train_loss),
                    f(e.val_loss),
                    f(e.val_metric),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_ranks(dir: &Path, fp: &str, dataset: &str, runs: &[ModelRun], table: &RankTable) -> Result<()> {
    let mut w = writer(dir, "ranks.csv")?;
    w.write_record([
        "fingerprint",
        "label",
        "dataset",
        "test_mean",
        "rank",
        "mean_rank",
        "rank_stderr",
    ])?;
    for (i, r) in runs.iter().enumerate() {
        let s = r.summaries()?;
        w.write_record([
            fp.to_string(),
            r.label.clone(),
            dataset.to_string(),
            f(s.test_best.mean),
            f(table.ranks[i][0]),
            f(table.mean[i]),
            table.stderr[i].map(f).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Test metrics of every repetition at one training-set size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveEntry {
    pub k: usize,
    pub values: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
}

pub fn write_learning_curve(dir: &Path, fp: &str, label: &str, rows: &[CurveEntry]) -> Result<()> {
    let mut w = writer(dir, "curves.csv")?;
    w.write_record(["fingerprint", "label", "k", "mean", "stderr", "reps"])?;
    for r in rows {
        w.write_record([
            fp.to_string(),
            label.to_string(),
            r.k.to_string(),
            f(r.mean),
            f(r.stderr),
            r.values.len().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatRow {
    pub model: String,
    pub reference: String,
    pub dataset: String,
    pub metric: String,
    pub model_mean: f64,
    pub model_stderr: f64,
    pub reference_mean: f64,
    pub reference_stderr: f64,
    pub n: usize,
    pub w_plus: f64,
    pub p: f64,
    pub p_adjusted: f64,
    pub rejected: bool,
}

pub fn write_stats(dir: &Path, fp: &str, rows: &[StatRow]) -> Result<()> {
    let mut w = writer(dir, "stats.csv")?;
    w.write_record([
        "fingerprint",
        "model",
        "reference",
        "dataset",
        "metric",
        "model_mean",
        "model_stderr",
        "reference_mean",
        "reference_stderr",
        "n",
        "w_plus",
        "p",
        "p_adjusted",
        "rejected",
    ])?;
    for r in rows {
        w.write_record([
            fp.to_string(),
            r.model.clone(),
            r.reference.clone(),
            r.dataset.clone(),
            r.metric.clone(),
            f(r.model_mean),
            f(r.model_stderr),
            f(r.reference_mean),
            f(r.reference_stderr),
            r.n.to_string(),
            f(r.w_plus),
            f(r.p),
            f(r.p_adjusted),
            r.rejected.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
