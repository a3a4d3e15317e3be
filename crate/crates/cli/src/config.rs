use std::path::{Path, PathBuf};

use finshap_core::dataset::SyntheticConfig;
use finshap_core::game::{Baseline, KernelBudget, Partition, DEFAULT_BACKGROUND_SIZE, DEFAULT_KERNEL_RIDGE};
use finshap_core::models::{Hyperparameters, ModelKind};
use finshap_core::pipeline::{ClassScope, Estimator};
use finshap_core::seed::derive_seed;
use finshap_core::FeatureSchema;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything one run needs. Written back verbatim as `config.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed; every stochastic stage derives its own seed from it.
    pub seed: u64,
    pub out: PathBuf,
    pub data: DataConfig,
    pub split: SplitConfig,
    pub model: ModelConfig,
    pub explain: ExplainConfig,
    pub ranking: RankingConfig,
    pub validate: ValidateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 7,
            out: PathBuf::from("finshap-out"),
            data: DataConfig::default(),
            split: SplitConfig::default(),
            model: ModelConfig::default(),
            explain: ExplainConfig::default(),
            ranking: RankingConfig::default(),
            validate: ValidateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Synthetic,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    /// Panel CSV and its JSON schema, for `source = "csv"`.
    pub panel_csv: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    /// Ratio definitions; the bundled set is used when absent.
    pub ratio_spec: Option<PathBuf>,
    pub roi_feature: String,
    pub synthetic: SyntheticConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            source: DataSource::Synthetic,
            panel_csv: None,
            schema: None,
            ratio_spec: None,
            roi_feature: "ROI".into(),
            synthetic: SyntheticConfig::default(),
        }
    }
}

/// Rows with feature year `<= train_last_year` train; `test_year` rows test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_last_year: i32,
    pub test_year: i32,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_last_year: 2020,
            test_year: 2021,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Load this model instead of training one.
    pub path: Option<PathBuf>,
    pub hyper: Hyperparameters,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: ModelKind::GradientBoostedTrees,
            path: None,
            hyper: Hyperparameters::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Permutation,
    Kernel,
    Partition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainConfig {
    pub method: Method,
    pub n_permutations: usize,
    /// Kernel coalition budget; `2M + 2048` when absent.
    pub kernel_coalitions: Option<usize>,
    pub kernel_ridge: f64,
    pub background_size: usize,
    /// Fixed baseline probability; the background mean when absent.
    pub baseline: Option<f64>,
    /// Also write document-part (partition) attributions.
    pub partition_summary: bool,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            method: Method::Kernel,
            n_permutations: 1000,
            kernel_coalitions: None,
            kernel_ridge: DEFAULT_KERNEL_RIDGE,
            background_size: DEFAULT_BACKGROUND_SIZE,
            baseline: None,
            partition_summary: true,
        }
    }
}

impl ExplainConfig {
    pub fn baseline(&self) -> Baseline {
        self.baseline.map_or(Baseline::MeanBackground, Baseline::Constant)
    }

    pub fn estimator(&self, schema: &FeatureSchema) -> Estimator {
        match self.method {
            Method::Exact => Estimator::Exact,
            Method::Permutation => Estimator::Permutation {
                n_permutations: self.n_permutations,
            },
            Method::Kernel => Estimator::Kernel {
                budget: self
                    .kernel_coalitions
                    .map_or(KernelBudget::default_for(schema.len()), KernelBudget::Coalitions),
                ridge: self.kernel_ridge,
            },
            Method::Partition => Estimator::Partition(Partition::from_schema(schema)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankingConfig {
    /// Top-k list length behind the frequency ranking.
    pub k: usize,
    /// Top-k list length behind the per-group histogram.
    pub group_k: usize,
    pub n_top: usize,
    pub n_worst: usize,
    /// Position bins for the positional distribution; one per feature when absent.
    pub n_bins: Option<usize>,
    /// Rank attribution magnitudes instead of signed values.
    pub absolute: bool,
    pub scope: ClassScope,
}

impl Default for RankingConfig {
    fn default() -> Self {
        RankingConfig {
            k: 50,
            group_k: 10,
            n_top: 50,
            n_worst: 50,
            n_bins: None,
            absolute: false,
            scope: ClassScope::Both,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    pub top_n: usize,
    pub bottom_m: usize,
    /// Retrained model kind; the explained model's kind when absent.
    pub model_kind: Option<ModelKind>,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            top_n: 100,
            bottom_m: 100,
            model_kind: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Model seeds follow the root seed so one number reproduces a run.
    /// Kept below 2^63 because TOML integers are signed.
    pub fn resolve_seeds(&mut self) {
        self.model.hyper.forest.seed = derive_seed(self.seed, "forest", 0) >> 1;
        self.model.hyper.gbt.seed = derive_seed(self.seed, "gbt", 0) >> 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let mut c = RunConfig::default();
        c.resolve_seeds();
        let text = c.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::from_toml("sead = 3"), Err(CliError::Config(_))));
        let c = RunConfig::from_toml("seed = 3\n[ranking]\nk = 10\n").unwrap();
        assert_eq!((c.seed, c.ranking.k, c.ranking.group_k), (3, 10, 10));
    }
}
