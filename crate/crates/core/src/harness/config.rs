//! Experiment configuration: JSON-loadable, with defaults matching the
//! documented reproduction protocol (eta in 2^[-8..-1], lambda in
//! 10^[-8..-1], 3-fold cross-validation, 5 repeats, 80/20 stratified split).

use serde::{Deserialize, Serialize};

use crate::dataio::{NormScheme, StreamOrder};
use crate::error::{Error, Result};
use crate::learner::EtaSchedule;
use crate::loss::LossKind;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSpec {
    Synthetic { synthetic: SyntheticSpec },
    File(FileSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileSpec {
    pub path: String,
    #[serde(default)]
    pub name: Option<String>,
    /// Numeric label values binarized to the positive class; absent means
    /// "strictly positive labels are positive".
    #[serde(default)]
    pub positive_labels: Option<Vec<f64>>,
    #[serde(default)]
    pub normalization: NormScheme,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_per_class: usize,
    pub dim: usize,
    pub separation: f64,
    /// Seed of the generated data itself; defaults to the master seed.
    #[serde(default)]
    pub data_seed: Option<u64>,
    #[serde(default)]
    pub normalization: NormScheme,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerSpec {
    #[default]
    Aogd,
    OgdLast,
    BufferOgd {
        buffer_size: usize,
    },
}

impl LearnerSpec {
    pub fn name(&self) -> String {
        match self {
            LearnerSpec::Aogd => "aogd".into(),
            LearnerSpec::OgdLast => "ogd_last".into(),
            LearnerSpec::BufferOgd { buffer_size } => format!("buffer_ogd({buffer_size})"),
        }
    }
}

/// Correction step rule: `{"fixed": g}` or `{"adaptive": c}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Fixed { fixed: f64 },
    Adaptive { adaptive: f64 },
}

impl Default for GammaSpec {
    fn default() -> Self {
        GammaSpec::Adaptive { adaptive: 1.0 }
    }
}

impl GammaSpec {
    pub fn to_rule(self) -> crate::learner::GammaRule {
        match self {
            GammaSpec::Fixed { fixed } => crate::learner::GammaRule::Fixed(fixed),
            GammaSpec::Adaptive { adaptive } => crate::learner::GammaRule::Adaptive(adaptive),
        }
    }

    pub fn label(&self) -> String {
        match self {
            GammaSpec::Fixed { fixed } => format!("fixed:{fixed}"),
            GammaSpec::Adaptive { adaptive } => format!("adaptive:{adaptive}"),
        }
    }
}

/// Kernel width search space: absolute widths, or multipliers of the
/// inverse median squared pairwise distance of the train split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaSpec {
    Fixed { fixed: Vec<f64> },
    MedianScaled { median_scaled: Vec<f64> },
}

impl Default for SigmaSpec {
    fn default() -> Self {
        SigmaSpec::MedianScaled {
            median_scaled: vec![0.01, 0.1, 1.0, 10.0],
        }
    }
}

/// Stream order in the CLI syntax: `shuffled`, `asis`, `sorted`, `blocks:<n>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OrderKind {
    #[default]
    Shuffled,
    AsIs,
    Sorted,
    Blocks(usize),
}

impl OrderKind {
    /// Binds the order to a derived seed (ignored by seedless orders).
    pub fn to_stream_order(self, seed: u64) -> StreamOrder {
        match self {
            OrderKind::Shuffled => StreamOrder::Shuffled(seed),
            OrderKind::AsIs => StreamOrder::AsIs,
            OrderKind::Sorted => StreamOrder::SortedByLabel,
            OrderKind::Blocks(n) => StreamOrder::BlockAlternating {
                block_size: n,
                seed,
            },
        }
    }
}

impl std::fmt::Display for OrderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OrderKind::Shuffled => write!(f, "shuffled"),
            OrderKind::AsIs => write!(f, "asis"),
            OrderKind::Sorted => write!(f, "sorted"),
            OrderKind::Blocks(n) => write!(f, "blocks:{n}"),
        }
    }
}

impl std::str::FromStr for OrderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shuffled" => Ok(OrderKind::Shuffled),
            "asis" => Ok(OrderKind::AsIs),
            "sorted" => Ok(OrderKind::Sorted),
            other => {
                if let Some(n) = other.strip_prefix("blocks:") {
                    let n: usize = n.parse().map_err(|_| {
                        Error::InvalidConfig(format!("invalid block size in order '{other}'"))
                    })?;
                    if n == 0 {
                        return Err(Error::InvalidConfig("block size must be >= 1".into()));
                    }
                    Ok(OrderKind::Blocks(n))
                } else {
                    Err(Error::InvalidConfig(format!(
                        "unknown order '{other}'; expected shuffled|asis|sorted|blocks:<n>"
                    )))
                }
            }
        }
    }
}

impl Serialize for OrderKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for OrderKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MappingSpec {
    #[default]
    Rff,
    /// Identity feature map; baselines only.
    Linear,
}

fn default_eta_grid() -> Vec<f64> {
    (-8..=-1).map(|e| 2f64.powi(e)).collect()
}

fn default_lambda_grid() -> Vec<f64> {
    (-8..=-1).map(|e| 10f64.powi(e)).collect()
}

fn default_p() -> f64 {
    0.1
}

fn default_folds() -> usize {
    3
}

fn default_repeats() -> usize {
    5
}

fn default_train_fraction() -> f64 {
    0.8
}

fn default_seed() -> u64 {
    42
}

fn default_epochs() -> usize {
    1
}

/// One experiment: dataset, learner, search grids, protocol knobs, seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub learner: LearnerSpec,
    #[serde(default)]
    pub loss: LossKind,
    #[serde(default = "default_eta_grid")]
    pub eta_grid: Vec<f64>,
    #[serde(default = "default_lambda_grid")]
    pub lambda_grid: Vec<f64>,
    #[serde(default)]
    pub gamma: GammaSpec,
    #[serde(default = "default_p")]
    pub p: f64,
    /// Random-feature count; when absent, the smallest even integer
    /// >= sqrt(T) * ln(T) for the training-split size T.
    #[serde(default)]
    pub d_features: Option<usize>,
    #[serde(default)]
    pub sigma: SigmaSpec,
    #[serde(default)]
    pub order: OrderKind,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub mapping: MappingSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Wall-clock columns are emitted as 0 unless enabled, keeping all
    /// outputs byte-reproducible by default.
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub eta_schedule: EtaSchedule,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn sigma_values(&self) -> &[f64] {
        match &self.sigma {
            SigmaSpec::Fixed { fixed } => fixed,
            SigmaSpec::MedianScaled { median_scaled } => median_scaled,
        }
    }

    pub fn grid_size(&self) -> usize {
        self.eta_grid.len() * self.lambda_grid.len() * self.sigma_values().len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.eta_grid.is_empty() || self.lambda_grid.is_empty() || self.sigma_values().is_empty()
        {
            return Err(Error::InvalidConfig("search grids must be nonempty".into()));
        }
        if self.eta_grid.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::InvalidConfig("eta grid values must be > 0".into()));
        }
        if self.lambda_grid.iter().any(|&l| !(l >= 0.0)) {
            return Err(Error::InvalidConfig(
                "lambda grid values must be >= 0".into(),
            ));
        }
        if self.sigma_values().iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidConfig("sigma values must be > 0".into()));
        }
        if self.repeats < 1 {
            return Err(Error::InvalidConfig("repeats must be >= 1".into()));
        }
        if self.grid_size() > 1 && self.folds < 2 {
            return Err(Error::InvalidConfig(
                "folds must be >= 2 when the grid has more than one point".into(),
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig(
                "train_fraction must be in (0, 1)".into(),
            ));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::InvalidConfig("p must be in (0, 1]".into()));
        }
        if self.epochs < 1 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if let Some(d) = self.d_features {
            if d < 2 || !d.is_multiple_of(2) {
                return Err(Error::InvalidConfig(
                    "d_features must be even and >= 2".into(),
                ));
            }
        }
        if self.mapping == MappingSpec::Linear && self.learner == LearnerSpec::Aogd {
            return Err(Error::InvalidConfig(
                "the linear mapping is only available for the baselines".into(),
            ));
        }
        if self.loss == LossKind::HingeAuc
            && self.learner == LearnerSpec::Aogd
            && matches!(self.gamma, GammaSpec::Adaptive { .. })
        {
            return Err(Error::InvalidConfig(
                "adaptive gamma needs a smooth loss; use {\"fixed\": g} with the hinge".into(),
            ));
        }
        Ok(())
    }

    /// Smallest even feature count >= sqrt(T) * ln(T), the documented default.
    pub fn resolve_d_features(&self, train_len: usize) -> usize {
        match self.d_features {
            Some(d) => d,
            None => {
                let t = train_len.max(2) as f64;
                let v = t.sqrt() * t.ln();
                let mut d = v.ceil() as usize;
                if d % 2 == 1 {
                    d += 1;
                }
                d.max(2)
            }
        }
    }
}
