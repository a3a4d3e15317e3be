//! Dataset-wide explanation, Top-k frequency rankings, group and positional
//! histograms, and feature-subset validation.

mod explain;
mod histogram;
mod ranking;
mod validation;

pub use explain::{explain_dataset, AttributionMatrix, Estimator};
pub use histogram::{
    group_frequency_histogram, positional_distribution, write_group_histogram_csv, GroupFrequency, PositionBin,
    PositionalDistribution,
};
pub use ranking::{per_class_ranking, rank_by_topk_frequency, rank_by_topk_frequency_with, ClassScope, Direction, RankingReport};
pub use validation::{subset_positions, subset_validation, SubsetResult, SubsetValidationReport};
