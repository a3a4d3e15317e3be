//! Panel ingestion, ROI-direction labeling, year split, ratio features and
//! the synthetic panel generator.

mod labels;
mod panel;
mod ratios;
mod schema;
mod synthetic;

pub use labels::{build_labels, build_labels_with_features, split_by_year, LabelDiagnostics, LabeledDataset, YearSplit};
pub use panel::{load_panel, PanelDataset, PanelRow};
pub use ratios::{compute_ratios, RatioDef, RatioSpec, RatioTerm, DELTA_ZERO};
pub use schema::{FeatureGroup, FeatureSchema, FeatureSpec};
pub use synthetic::{synthesize_panel, SyntheticConfig, SyntheticTruth, ROI_FEATURE};
