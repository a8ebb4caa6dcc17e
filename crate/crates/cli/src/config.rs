//! Experiment configuration file.

use std::path::{Path, PathBuf};

use eegnet_core::model::{Ablation, KernelConfig, ModelSpec};
use eegnet_core::optim::{AdamConfig, TrainConfig};
use eegnet_core::pipeline::{Manifest, SMR_SUBJECTS};
use eegnet_core::stats::{FdrMethod, Metric};
use eegnet_core::synth::{SynthParadigm, SyntheticSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_metric")]
    pub metric: Metric,
    /// Excluded from the fingerprint.
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    pub data: DataConfig,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    pub folds: FoldConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub curve: CurveConfig,
    #[serde(default)]
    pub compare: CompareConfig,
}

fn default_metric() -> Metric {
    Metric::Auc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Dataset manifest; relative paths resolve against the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
    /// Trial count for synthetic data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Split every synthetic subject's trials in half into train and test sessions.
    #[serde(default)]
    pub split_sessions: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    /// Downsample over-represented classes within every role set of every fold.
    pub balance: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig { balance: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "scheme", rename_all = "lowercase")]
pub enum FoldConfig {
    Random {
        train: usize,
        validation: usize,
        test: usize,
        folds: usize,
        #[serde(default)]
        fixed_test: Vec<u32>,
    },
    /// Leave-one-subject-out over nine subjects with train/test sessions.
    Smr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub kernels: KernelConfig,
    pub ablation: Ablation,
    pub layer1_filters: usize,
    pub layer2_filters: usize,
    pub layer3_filters: usize,
    pub pool: (usize, usize),
    pub dropout: f64,
    pub elu_alpha: f64,
    pub dense_units: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let s = ModelSpec::new(1, 16, 2);
        ModelConfig {
            kernels: s.kernels,
            ablation: s.ablation,
            layer1_filters: s.layer1_filters,
            layer2_filters: s.layer2_filters,
            layer3_filters: s.layer3_filters,
            pool: s.pool,
            dropout: s.dropout,
            elu_alpha: s.elu_alpha,
            dense_units: s.dense_units,
        }
    }
}

impl ModelConfig {
    pub fn spec(&self, channels: usize, samples: usize, classes: usize) -> ModelSpec {
        ModelSpec {
            kernels: self.kernels,
            ablation: self.ablation,
            layer1_filters: self.layer1_filters,
            layer2_filters: self.layer2_filters,
            layer3_filters: self.layer3_filters,
            pool: self.pool,
            dropout: self.dropout,
            elu_alpha: self.elu_alpha,
            dense_units: self.dense_units,
            ..ModelSpec::new(channels, samples, classes)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub l1: f64,
    pub l2: f64,
    pub adam: AdamConfig,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            epochs: t.epochs,
            batch_size: t.batch_size,
            l1: t.l1,
            l2: t.l2,
            adam: t.adam,
        }
    }
}

impl TrainSection {
    pub fn to_train_config(&self, seed: u64, metric: Metric) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
            l1: self.l1,
            l2: self.l2,
            adam: self.adam,
            metric,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurveConfig {
    /// Explicit training-set sizes; empty means `step, 2*step, ...` up to the full size.
    pub sizes: Vec<usize>,
    pub step: usize,
    pub reps: usize,
    /// Which fold of the plan supplies the training pool and the validation/test sets.
    pub fold: usize,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig {
            sizes: Vec::new(),
            step: 500,
            reps: eegnet_core::stats::DEFAULT_REPS,
            fold: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FdrVariant {
    Independent,
    Dependent,
}

impl From<FdrVariant> for FdrMethod {
    fn from(v: FdrVariant) -> Self {
        match v {
            FdrVariant::Independent => FdrMethod::Independent,
            FdrVariant::Dependent => FdrMethod::Dependent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    pub q: f64,
    pub fdr: FdrVariant,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            q: 0.05,
            fdr: FdrVariant::Independent,
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates; `base` resolves relative data paths.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config(vec![e.to_string().trim().to_string()]))?;
        if let Some(m) = &cfg.data.manifest {
            if m.is_relative() {
                cfg.data.manifest = Some(base.join(m));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Config(vec![format!("{}: {e}", path.display())]))?;
        let base = path.parent().unwrap_or(Path::new("."));
        ExperimentConfig::from_toml(&text, base)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Subject ids and class count implied by the data source, if it can be read.
    fn data_shape(&self) -> Result<(Vec<u32>, usize, bool), String> {
        match (&self.data.manifest, &self.data.synthetic) {
            (Some(path), None) => {
                let m = Manifest::load(path).map_err(|e| e.to_string())?;
                let split = m.subjects.iter().all(|s| s.train.is_some() && s.test.is_some());
                Ok((m.subject_ids(), m.paradigm.classes, split))
            }
            (None, Some(s)) => Ok(((1..=s.subjects as u32).collect(), s.classes, self.data.split_sessions)),
            _ => Err("exactly one of `manifest` and `synthetic` must be given".into()),
        }
    }

    /// Checks every field and reports all problems at once with field paths.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut errs: Vec<String> = Vec::new();
        let mut bad = |path: &str, msg: String| errs.push(format!("{path}: {msg}"));
        if self.schema_version != SCHEMA_VERSION {
            bad(
                "schema_version",
                format!(
                    "unsupported version {} (expected {SCHEMA_VERSION})",
                    self.schema_version
                ),
            );
        }
        if let Some(s) = &self.data.synthetic {
            if let Err(e) = s.validate() {
                bad("data.synthetic", e.to_string());
            }
            match self.data.trials {
                None => bad("data.trials", "required with synthetic data".into()),
                Some(n) if n == 0 || n % s.classes.max(1) != 0 => bad(
                    "data.trials",
                    format!("{n} is not a positive multiple of the class count"),
                ),
                Some(_) => {}
            }
        } else if self.data.trials.is_some() || self.data.split_sessions {
            bad(
                "data",
                "`trials` and `split_sessions` only apply to synthetic data".into(),
            );
        }
        let shape = self.data_shape();
        let (subjects, classes, split) = match &shape {
            Ok(s) => (Some(&s.0), Some(s.1), s.2),
            Err(e) => {
                bad("data", e.clone());
                (None, None, false)
            }
        };
        if let Some(n) = classes {
            if self.metric == Metric::Auc && n != 2 {
                bad("metric", format!("auc needs exactly 2 classes, the data has {n}"));
            }
        }
        match &self.folds {
            FoldConfig::Random {
                train,
                validation,
                test,
                folds,
                fixed_test,
            } => {
                if *folds == 0 {
                    bad("folds.folds", "must be at least 1".into());
                }
                if *train == 0 || *validation == 0 || *test == 0 {
                    bad("folds", "train, validation and test counts must be positive".into());
                }
                if let Some(ids) = subjects {
                    if train + validation + test != ids.len() {
                        bad(
                            "folds",
                            format!("{train}/{validation}/{test} does not cover {} subjects", ids.len()),
                        );
                    }
                    if let Some(s) = fixed_test.iter().find(|s| !ids.contains(s)) {
                        bad("folds.fixed_test", format!("subject {s} is not in the data"));
                    }
                }
                if !fixed_test.is_empty() && fixed_test.len() != *test {
                    bad(
                        "folds.fixed_test",
                        format!("{} subjects listed but test count is {test}", fixed_test.len()),
                    );
                }
            }
            FoldConfig::Smr => {
                if let Some(ids) = subjects {
                    if ids.len() != SMR_SUBJECTS {
                        bad(
                            "folds.scheme",
                            format!("smr needs {SMR_SUBJECTS} subjects, got {}", ids.len()),
                        );
                    }
                }
                if shape.is_ok() && !split {
                    bad(
                        "folds.scheme",
                        "smr needs separate train and test sessions for every subject".into(),
                    );
                }
            }
        }
        let spec = self.model.spec(16, 16, classes.unwrap_or(2));
        if let Some(s) = &self.data.synthetic {
            if let Err(e) = self.model.spec(s.channels, s.samples, s.classes).validate() {
                bad("model", e.to_string());
            }
        } else if let Err(e) = spec.validate() {
            bad("model", e.to_string());
        }
        let t = self.train.to_train_config(0, self.metric);
        if let Err(e) = t.validate() {
            bad("train", e.to_string());
        }
        if self.model.ablation.batchnorm() && self.train.batch_size < 2 {
            bad(
                "train.batch_size",
                "batch norm needs at least 2 trials per batch".into(),
            );
        }
        if self.curve.step == 0 {
            bad("curve.step", "must be positive".into());
        }
        if self.curve.reps < 2 {
            bad("curve.reps", "need at least 2 repetitions for a standard error".into());
        }
        if !(self.compare.q > 0.0 && self.compare.q < 1.0) {
            bad("compare.q", format!("{} outside (0, 1)", self.compare.q));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(errs))
        }
    }

    /// SHA-256 over the canonical JSON form of the resolved configuration
    /// (output directory excluded).
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn paradigm_name(&self) -> String {
        match (&self.data.manifest, &self.data.synthetic) {
            (_, Some(s)) => match s.paradigm {
                SynthParadigm::Erp => "synthetic-erp".into(),
                SynthParadigm::Oscillatory => "synthetic-oscillatory".into(),
            },
            (Some(p), None) => Manifest::load(p)
                .map(|m| m.paradigm.name)
                .unwrap_or_else(|_| "unknown".into()),
            (None, None) => "unknown".into(),
        }
    }
}
