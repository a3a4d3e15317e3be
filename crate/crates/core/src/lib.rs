//! Shapley-value attribution for tabular binary classifiers, together with the
//! profitability-direction pipeline built on top of it: panel ingestion and
//! labeling, four classifier families, evaluation metrics, coalition-game
//! estimators and the ranking/validation procedures that consume them.

pub mod dataset;
pub mod error;
pub mod game;
pub mod matrix;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod seed;

pub use dataset::{
    FeatureGroup, FeatureSchema, LabeledDataset, PanelDataset, RatioSpec, SyntheticConfig,
    SyntheticTruth,
};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use game::{Coalition, CoalitionGame, Partition, ShapleyMethod, ShapleyResult};
pub use metrics::EvalReport;
pub use models::{ModelKind, TrainedModel};
pub use pipeline::{AttributionMatrix, ClassScope, Direction, RankingReport, SubsetValidationReport};
