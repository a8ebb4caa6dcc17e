use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed second-layer kernels (height x width); each covers 64 taps.
pub const LAYER2_KERNELS: [(usize, usize); 4] = [(16, 4), (8, 8), (4, 16), (2, 32)];
/// Allowed third-layer kernels; each covers 32 taps.
pub const LAYER3_KERNELS: [(usize, usize); 3] = [(8, 4), (4, 8), (2, 16)];

/// Kernel extents of the two 2-D convolution layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KernelConfig {
    pub layer2: (usize, usize),
    pub layer3: (usize, usize),
}

impl KernelConfig {
    pub fn new(layer2: (usize, usize), layer3: (usize, usize)) -> Result<Self> {
        let cfg = KernelConfig { layer2, layer3 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !LAYER2_KERNELS.contains(&self.layer2) {
            return Err(Error::Spec(format!(
                "layer-2 kernel {:?} is not one of {LAYER2_KERNELS:?}",
                self.layer2
            )));
        }
        if !LAYER3_KERNELS.contains(&self.layer3) {
            return Err(Error::Spec(format!(
                "layer-3 kernel {:?} is not one of {LAYER3_KERNELS:?}",
                self.layer3
            )));
        }
        Ok(())
    }

    /// Label of the form `(l2h,l2w)x(l3h,l3w)`.
    pub fn label(&self) -> String {
        format!(
            "({},{})×({},{})",
            self.layer2.0, self.layer2.1, self.layer3.0, self.layer3.1
        )
    }
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            layer2: (2, 32),
            layer3: (8, 4),
        }
    }
}

impl fmt::Display for KernelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// All twelve kernel configurations, layer-2 outer and layer-3 inner.
pub fn enumerate_configs() -> Vec<KernelConfig> {
    LAYER2_KERNELS
        .iter()
        .flat_map(|&layer2| {
            LAYER3_KERNELS
                .iter()
                .map(move |&layer3| KernelConfig { layer2, layer3 })
        })
        .collect()
}

/// Which regularization components the network carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ablation {
    /// No batch norm, no dropout, 100-unit dense layer before the softmax.
    Model1,
    /// No batch norm, no dropout, no dense layer.
    Model2,
    /// Batch norm only.
    Model3,
    /// Dropout only.
    Model4,
    /// Batch norm and dropout, no dense layer: the canonical network.
    Model5,
}

impl Ablation {
    pub const ALL: [Ablation; 5] = [
        Ablation::Model1,
        Ablation::Model2,
        Ablation::Model3,
        Ablation::Model4,
        Ablation::Model5,
    ];

    pub fn batchnorm(self) -> bool {
        matches!(self, Ablation::Model3 | Ablation::Model5)
    }

    pub fn dropout(self) -> bool {
        matches!(self, Ablation::Model4 | Ablation::Model5)
    }

    pub fn dense(self) -> bool {
        self == Ablation::Model1
    }

    pub fn tag(self) -> &'static str {
        match self {
            Ablation::Model1 => "model1",
            Ablation::Model2 => "model2",
            Ablation::Model3 => "model3",
            Ablation::Model4 => "model4",
            Ablation::Model5 => "model5",
        }
    }
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ablation::ALL
            .into_iter()
            .find(|a| a.tag() == s)
            .ok_or_else(|| Error::Spec(format!("unknown ablation tag `{s}`")))
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Full parameterization of one network variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub channels: usize,
    pub samples: usize,
    pub classes: usize,
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

impl ModelSpec {
    /// Canonical network for `channels x samples` trials and `classes` outputs.
    pub fn new(channels: usize, samples: usize, classes: usize) -> Self {
        ModelSpec {
            channels,
            samples,
            classes,
            kernels: KernelConfig::default(),
            ablation: Ablation::Model5,
            layer1_filters: 16,
            layer2_filters: 4,
            layer3_filters: 4,
            pool: (2, 4),
            dropout: 0.25,
            elu_alpha: 1.0,
            dense_units: 100,
        }
    }

    pub fn with_kernels(mut self, kernels: KernelConfig) -> Self {
        self.kernels = kernels;
        self
    }

    pub fn with_ablation(mut self, ablation: Ablation) -> Self {
        self.ablation = ablation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.kernels.validate()?;
        let (ph, pw) = self.pool;
        if self.channels == 0 || self.samples == 0 {
            return Err(Error::Spec("channels and samples must be positive".into()));
        }
        if self.classes < 2 {
            return Err(Error::Spec(format!("need at least 2 classes, got {}", self.classes)));
        }
        if ph == 0 || pw == 0 {
            return Err(Error::Spec("pool extents must be positive".into()));
        }
        if !self.samples.is_multiple_of(pw * pw) {
            return Err(Error::Spec(format!(
                "samples per trial ({}) must be divisible by {} for two pooling stages",
                self.samples,
                pw * pw
            )));
        }
        if !self.layer1_filters.is_multiple_of(ph * ph) {
            return Err(Error::Spec(format!(
                "layer-1 filter count ({}) must be divisible by {}",
                self.layer1_filters,
                ph * ph
            )));
        }
        if self.layer2_filters == 0 || self.layer3_filters == 0 {
            return Err(Error::Spec("convolution filter counts must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Spec(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.elu_alpha <= 0.0 {
            return Err(Error::Spec("ELU alpha must be positive".into()));
        }
        if self.ablation.dense() && self.dense_units == 0 {
            return Err(Error::Spec("dense layer needs at least one unit".into()));
        }
        Ok(())
    }

    /// Length of the flattened feature vector fed to the classifier.
    pub fn flat_features(&self) -> usize {
        let (ph, pw) = self.pool;
        self.layer3_filters * (self.layer1_filters / (ph * ph)) * (self.samples / (pw * pw))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model spec serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ModelSpec = toml::from_str(text).map_err(|e| Error::Spec(format!("model spec text: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }
}
