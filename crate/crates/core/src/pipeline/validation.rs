use serde::{Deserialize, Serialize};

use super::{ClassScope, RankingReport};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::metrics::EvalReport;
use crate::models::{train, Hyperparameters, ModelKind};

/// One retrain on a feature subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetResult {
    pub n_features: usize,
    /// Ascending schema positions.
    pub positions: Vec<usize>,
    pub names: Vec<String>,
    pub eval: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetValidationReport {
    pub model_kind: ModelKind,
    pub hyperparameters: Hyperparameters,
    pub scope: ClassScope,
    pub keep_top_n: usize,
    pub drop_bottom_m: usize,
    pub all_features: SubsetResult,
    pub top_n: SubsetResult,
    pub without_bottom_m: SubsetResult,
}

/// The three position sets used by [`subset_validation`]: all features, the
/// top `keep_top_n` ranks, and all but the bottom `drop_bottom_m` ranks.
pub fn subset_positions(
    ranking: &RankingReport,
    keep_top_n: usize,
    drop_bottom_m: usize,
) -> Result<[Vec<usize>; 3]> {
    let m = ranking.n_features();
    if keep_top_n == 0 || keep_top_n > m {
        return Err(Error::Config(format!("keep_top_n must be in 1..={m}, got {keep_top_n}")));
    }
    if drop_bottom_m >= m {
        return Err(Error::Config(format!(
            "dropping {drop_bottom_m} of {m} features leaves an empty subset"
        )));
    }
    let all: Vec<usize> = (0..m).collect();
    let mut top = ranking.top(keep_top_n).to_vec();
    top.sort_unstable();
    let mut rest = ranking.order[..m - drop_bottom_m].to_vec();
    rest.sort_unstable();
    Ok([all, top, rest])
}

fn run_subset(
    train_set: &LabeledDataset,
    test_set: &LabeledDataset,
    positions: Vec<usize>,
    kind: ModelKind,
    hyper: &Hyperparameters,
) -> Result<SubsetResult> {
    let tr = train_set.select_features(&positions)?;
    let te = test_set.select_features(&positions)?;
    let model = train(kind, hyper, &tr.x, &tr.y)?;
    let eval = EvalReport::from_probabilities(&te.y, &model.predict_proba(&te.x)?)?;
    Ok(SubsetResult {
        n_features: positions.len(),
        names: tr.schema.names().map(str::to_owned).collect(),
        positions,
        eval,
    })
}

/// Retrains `kind` on the three subsets with unchanged hyperparameters
/// (including seeds) and scores each on `test`.
pub fn subset_validation(
    train_set: &LabeledDataset,
    test_set: &LabeledDataset,
    ranking: &RankingReport,
    keep_top_n: usize,
    drop_bottom_m: usize,
    kind: ModelKind,
    hyper: &Hyperparameters,
) -> Result<SubsetValidationReport> {
    let m = train_set.n_features();
    if ranking.n_features() != m || test_set.n_features() != m {
        return Err(Error::Shape {
            expected: m,
            actual: ranking.n_features(),
        });
    }
    let [all, top, rest] = subset_positions(ranking, keep_top_n, drop_bottom_m)?;
    Ok(SubsetValidationReport {
        model_kind: kind,
        hyperparameters: hyper.clone(),
        scope: ranking.scope,
        keep_top_n,
        drop_bottom_m,
        all_features: run_subset(train_set, test_set, all, kind, hyper)?,
        top_n: run_subset(train_set, test_set, top, kind, hyper)?,
        without_bottom_m: run_subset(train_set, test_set, rest, kind, hyper)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::Direction;

    fn ranking(order: Vec<usize>) -> RankingReport {
        let m = order.len();
        RankingReport {
            k: 1,
            scope: ClassScope::Class1,
            direction: Direction::Highest,
            absolute: false,
            n_instances: 1,
            feature_names: (0..m).map(|j| format!("f{j}")).collect(),
            counts: vec![0; m],
            order,
        }
    }

    #[test]
    fn paper_sizes() {
        let r = ranking((0..301).rev().collect());
        let [all, top, rest] = subset_positions(&r, 100, 100).unwrap();
        assert_eq!((all.len(), top.len(), rest.len()), (301, 100, 201));
        assert_eq!(top, (201..301).collect::<Vec<_>>());
        assert_eq!(rest, (100..301).collect::<Vec<_>>());
    }

    #[test]
    fn empty_subsets_are_config_errors() {
        let r = ranking(vec![2, 0, 1]);
        assert!(matches!(subset_positions(&r, 0, 0), Err(Error::Config(_))));
        assert!(matches!(subset_positions(&r, 4, 0), Err(Error::Config(_))));
        assert!(matches!(subset_positions(&r, 1, 3), Err(Error::Config(_))));
        assert_eq!(subset_positions(&r, 3, 0).unwrap()[1], vec![0, 1, 2]);
    }
}
