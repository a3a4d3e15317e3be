//! The four classifier families behind one class-1 probability contract.

mod forest;
mod gbt;
mod logistic;
mod scale;
mod svm;
mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use forest::{ForestHyper, RandomForest};
pub use gbt::{GbtHyper, GradientBoostedTrees};
pub(crate) use gbt::MaskedPlan;
pub use logistic::{logistic_objective, LogisticHyper, LogisticModel};
pub use scale::Standardizer;
pub use svm::{fit_svm, SmoSolution, SvmHyper, SvmModel};
pub use tree::{FeatureSource, MaskedRow, Node, Tree};

/// Version tag written into saved model documents.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Logistic,
    RandomForest,
    GradientBoostedTrees,
    SvmRbf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::GradientBoostedTrees,
        ModelKind::RandomForest,
        ModelKind::SvmRbf,
        ModelKind::Logistic,
    ];
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Logistic => "Logistic",
            ModelKind::RandomForest => "RandomForest",
            ModelKind::GradientBoostedTrees => "GradientBoostedTrees",
            ModelKind::SvmRbf => "SvmRbf",
        })
    }
}

/// Hyperparameters for every model kind; the kind to train is chosen separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparameters {
    pub logistic: LogisticHyper,
    pub forest: ForestHyper,
    pub gbt: GbtHyper,
    pub svm: SvmHyper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ModelParams {
    Logistic(LogisticModel),
    RandomForest(RandomForest),
    GradientBoostedTrees(GradientBoostedTrees),
    SvmRbf(SvmModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub hyperparameters: serde_json::Value,
    /// Objective value per iteration/round (empty for forests).
    pub loss_trace: Vec<f64>,
    pub converged: bool,
}

/// An immutable trained binary classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub feature_count: usize,
    pub meta: TrainingMeta,
    pub model: ModelParams,
}

pub(crate) fn validate_training(x: &Matrix, y: &[u8]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::Validation(format!(
            "{} rows but {} labels",
            x.rows(),
            y.len()
        )));
    }
    if x.rows() == 0 {
        return Err(Error::Validation("no training rows".into()));
    }
    if !x.is_finite() {
        return Err(Error::Validation("training matrix has non-finite values".into()));
    }
    if y.iter().any(|&v| v > 1) {
        return Err(Error::Validation("labels must be 0 or 1".into()));
    }
    Ok(())
}

/// Trains `kind` with the matching section of `hyper`.
pub fn train(kind: ModelKind, hyper: &Hyperparameters, x: &Matrix, y: &[u8]) -> Result<TrainedModel> {
    match kind {
        ModelKind::Logistic => logistic::train_logistic(x, y, &hyper.logistic),
        ModelKind::RandomForest => forest::train_random_forest(x, y, &hyper.forest),
        ModelKind::GradientBoostedTrees => gbt::train_gbt(x, y, &hyper.gbt),
        ModelKind::SvmRbf => svm::train_svm_rbf(x, y, &hyper.svm),
    }
}

pub use forest::train_random_forest;
pub use gbt::train_gbt;
pub use logistic::train_logistic;
pub use svm::train_svm_rbf;

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self.model {
            ModelParams::Logistic(_) => ModelKind::Logistic,
            ModelParams::RandomForest(_) => ModelKind::RandomForest,
            ModelParams::GradientBoostedTrees(_) => ModelKind::GradientBoostedTrees,
            ModelParams::SvmRbf(_) => ModelKind::SvmRbf,
        }
    }

    /// Class-1 probability for one row presented through [`FeatureSource`].
    #[inline]
    pub fn proba_one<F: FeatureSource + ?Sized>(&self, row: &F) -> f64 {
        match &self.model {
            ModelParams::Logistic(m) => m.proba(row),
            ModelParams::RandomForest(m) => m.proba(row),
            ModelParams::GradientBoostedTrees(m) => m.proba(row),
            ModelParams::SvmRbf(m) => m.proba(row),
        }
    }

    /// Class-1 probabilities for every row of `x`.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.feature_count && x.rows() > 0 {
            return Err(Error::Shape {
                expected: self.feature_count,
                actual: x.cols(),
            });
        }
        Ok(x.iter_rows().map(|r| self.proba_one(r)).collect())
    }

    pub fn check_width(&self, width: usize) -> Result<()> {
        if width != self.feature_count {
            return Err(Error::Shape {
                expected: self.feature_count,
                actual: width,
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: TrainedModel = serde_json::from_str(text)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "unsupported model format version {}",
                m.format_version
            )));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
#[inline]
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean binary log-loss of margins `z` against labels.
pub(crate) fn mean_log_loss(z: &[f64], y: &[u8]) -> f64 {
    z.iter()
        .zip(y)
        .map(|(&z, &y)| softplus(z) - f64::from(y) * z)
        .sum::<f64>()
        / z.len() as f64
}
