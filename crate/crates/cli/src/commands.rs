use std::fs;
use std::path::Path;

use finshap_core::dataset::{
    build_labels, build_labels_with_features, compute_ratios, load_panel, split_by_year, synthesize_panel,
    RatioSpec, YearSplit,
};
use finshap_core::game::{sample_background, Partition};
use finshap_core::models::{train, ModelKind, TrainedModel};
use finshap_core::pipeline::{
    explain_dataset, group_frequency_histogram, positional_distribution, rank_by_topk_frequency_with,
    subset_validation, write_group_histogram_csv, AttributionMatrix, ClassScope, Direction, Estimator,
    RankingReport, SubsetValidationReport,
};
use finshap_core::seed::derive_seed;
use finshap_core::{EvalReport, PanelDataset, SyntheticTruth};
use serde::{Deserialize, Serialize};

use crate::config::{DataSource, Method, RunConfig};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub const CONFIG_FILE: &str = "config.toml";
pub const RANKINGS_FILE: &str = "rankings.json";

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(finshap_core::Error::from)?;
    text.push('\n');
    write_file(dir, name, text.as_bytes())
}

/// Creates the output directory and echoes the config into it.
fn prepare_out(config: &RunConfig) -> Result<&Path> {
    let out = config.out.as_path();
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_file(out, CONFIG_FILE, config.to_toml()?.as_bytes())?;
    Ok(out)
}

fn load_data(config: &RunConfig) -> Result<(PanelDataset, Option<SyntheticTruth>)> {
    match config.data.source {
        DataSource::Synthetic => {
            let (panel, truth) = synthesize_panel(&config.data.synthetic, derive_seed(config.seed, "synthetic", 0))?;
            Ok((panel, Some(truth)))
        }
        DataSource::Csv => {
            let (Some(csv), Some(schema)) = (&config.data.panel_csv, &config.data.schema) else {
                return Err(CliError::Config(
                    "data.source = \"csv\" needs data.panel_csv and data.schema".into(),
                ));
            };
            Ok((load_panel(csv, schema)?, None))
        }
    }
}

fn raw_split(config: &RunConfig, panel: &PanelDataset) -> Result<YearSplit> {
    let (labeled, _) = build_labels(panel, &config.data.roi_feature)?;
    Ok(split_by_year(&labeled, config.split.train_last_year, config.split.test_year)?)
}

fn ratio_split(config: &RunConfig, panel: &PanelDataset) -> Result<YearSplit> {
    let spec = match &config.data.ratio_spec {
        Some(p) => RatioSpec::load(p)?,
        None => RatioSpec::bundled(),
    };
    let ratios = compute_ratios(panel, &spec)?;
    let (labeled, _) = build_labels_with_features(panel, &config.data.roi_feature, &ratios)?;
    Ok(split_by_year(&labeled, config.split.train_last_year, config.split.test_year)?)
}

/// Writes `panel.csv`, `schema.json` and `truth.json`.
pub fn cmd_synthesize(config: &RunConfig) -> Result<SyntheticTruth> {
    if config.data.source != DataSource::Synthetic {
        return Err(CliError::Config("synthesize needs data.source = \"synthetic\"".into()));
    }
    config.data.synthetic.validate()?;
    let out = prepare_out(config)?;
    let (panel, truth) = load_data(config)?;
    let truth = truth.expect("synthetic source yields a truth");
    let mut csv = Vec::new();
    panel.write_csv(&mut csv)?;
    write_file(out, "panel.csv", &csv)?;
    let mut schema = panel.schema().to_json()?;
    schema.push('\n');
    write_file(out, "schema.json", schema.as_bytes())?;
    write_json(out, "truth.json", &truth)?;
    Ok(truth)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub model: ModelKind,
    /// `raw` or `ratios`.
    pub features: String,
    pub n_features: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: f64,
    pub roc_auc: Option<f64>,
}

/// Trains every model kind on raw features and on ratios; writes
/// `table1.json` and `table1.csv`.
pub fn cmd_train_eval(config: &RunConfig) -> Result<Vec<GridRow>> {
    let out = prepare_out(config)?;
    let (panel, _) = load_data(config)?;
    let variants = [("raw", raw_split(config, &panel)?), ("ratios", ratio_split(config, &panel)?)];
    let mut rows = Vec::new();
    for kind in ModelKind::ALL {
        for (name, split) in &variants {
            let model = train(kind, &config.model.hyper, &split.train.x, &split.train.y)?;
            let eval = EvalReport::from_probabilities(&split.test.y, &model.predict_proba(&split.test.x)?)?;
            rows.push(GridRow {
                model: kind,
                features: (*name).to_string(),
                n_features: split.train.n_features(),
                n_train: split.train.len(),
                n_test: split.test.len(),
                accuracy: eval.accuracy,
                roc_auc: eval.roc_auc,
            });
        }
    }
    write_json(out, "table1.json", &rows)?;
    let mut csv = String::from("model,features,n_features,accuracy,roc_auc\n");
    for r in &rows {
        let auc = r.roc_auc.map(|v| v.to_string()).unwrap_or_default();
        csv.push_str(&format!("{},{},{},{},{}\n", r.model, r.features, r.n_features, r.accuracy, auc));
    }
    write_file(out, "table1.csv", csv.as_bytes())?;
    Ok(rows)
}

/// The rankings written by `explain` and consumed by `validate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rankings {
    /// Highest-direction ranking under the configured scope.
    pub combined: RankingReport,
    /// Lowest-direction ranking under the configured scope.
    pub combined_worst: RankingReport,
    pub class0: RankingReport,
    pub class1: RankingReport,
}

#[derive(Debug, Clone)]
pub struct ExplainOutcome {
    pub eval: EvalReport,
    pub attributions: AttributionMatrix,
    pub partition: Option<AttributionMatrix>,
    pub rankings: Option<Rankings>,
}

fn obtain_model(config: &RunConfig, split: &YearSplit, out: &Path) -> Result<TrainedModel> {
    let model = match &config.model.path {
        Some(p) => TrainedModel::load(p)?,
        None => train(config.model.kind, &config.model.hyper, &split.train.x, &split.train.y)?,
    };
    model.check_width(split.test.n_features())?;
    let mut json = model.to_json()?;
    json.push('\n');
    write_file(out, "model.json", json.as_bytes())?;
    Ok(model)
}

/// Explains the test year; writes the model, attributions, rankings, the
/// per-group histogram and the positional distribution.
pub fn cmd_explain(config: &RunConfig) -> Result<ExplainOutcome> {
    let out = prepare_out(config)?;
    let (panel, _) = load_data(config)?;
    let split = raw_split(config, &panel)?;
    let model = obtain_model(config, &split, out)?;
    let eval = EvalReport::from_probabilities(&split.test.y, &model.predict_proba(&split.test.x)?)?;
    write_json(out, "eval.json", &eval)?;

    let schema = &split.test.schema;
    let background = sample_background(&split.train.x, config.explain.background_size, config.seed)?;
    let baseline = config.explain.baseline();
    let attributions = explain_dataset(
        &model,
        &split.test,
        &background,
        &config.explain.estimator(schema),
        baseline,
        config.seed,
    )?;
    write_json(out, "attributions.json", &attributions)?;

    let partition = if config.explain.partition_summary && config.explain.method != Method::Partition {
        let p = explain_dataset(
            &model,
            &split.test,
            &background,
            &Estimator::Partition(Partition::from_schema(schema)),
            baseline,
            config.seed,
        )?;
        write_json(out, "partition_attributions.json", &p)?;
        Some(p)
    } else {
        None
    };

    let rankings = if config.explain.method == Method::Partition {
        None
    } else {
        let r = &config.ranking;
        let rank = |scope, direction| rank_by_topk_frequency_with(&attributions, r.k, scope, direction, r.absolute);
        let rankings = Rankings {
            combined: rank(r.scope, Direction::Highest)?,
            combined_worst: rank(r.scope, Direction::Lowest)?,
            class0: rank(ClassScope::Class0, Direction::Highest)?,
            class1: rank(ClassScope::Class1, Direction::Highest)?,
        };
        write_json(out, RANKINGS_FILE, &rankings)?;

        let groups = group_frequency_histogram(&attributions, schema, r.group_k, r.scope)?;
        let mut csv = Vec::new();
        write_group_histogram_csv(&groups, &mut csv)?;
        write_file(out, "group_histogram.csv", &csv)?;

        let n_bins = r.n_bins.unwrap_or(schema.len());
        let positions = positional_distribution(&attributions, schema, r.n_top, r.n_worst, n_bins, r.scope)?;
        let mut csv = Vec::new();
        positions.write_csv(&mut csv)?;
        write_file(out, "positional_distribution.csv", &csv)?;
        Some(rankings)
    };

    Ok(ExplainOutcome {
        eval,
        attributions,
        partition,
        rankings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationOutput {
    pub combined: SubsetValidationReport,
    pub class0: SubsetValidationReport,
    pub class1: SubsetValidationReport,
}

fn load_rankings(path: &Path) -> Result<Rankings> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let r: Rankings = serde_json::from_str(&text).map_err(finshap_core::Error::from)?;
    for report in [&r.combined, &r.combined_worst, &r.class0, &r.class1] {
        RankingReport::from_json(&serde_json::to_string(report).map_err(finshap_core::Error::from)?)?;
    }
    Ok(r)
}

/// Retrains on all / top-n / all-but-bottom-m features for the combined and
/// per-class rankings; writes `validation.json`. Reuses `rankings.json` from
/// the output directory when present.
pub fn cmd_validate(config: &RunConfig) -> Result<ValidationOutput> {
    let out = prepare_out(config)?;
    let rankings_path = out.join(RANKINGS_FILE);
    let rankings = if rankings_path.exists() {
        load_rankings(&rankings_path)?
    } else {
        cmd_explain(config)?
            .rankings
            .ok_or_else(|| CliError::Config("validate needs a feature-level method, not partition".into()))?
    };
    let (panel, _) = load_data(config)?;
    let split = raw_split(config, &panel)?;
    let names: Vec<String> = split.train.schema.names().map(str::to_owned).collect();
    if rankings.combined.feature_names != names {
        return Err(CliError::Config(format!(
            "{} does not match the configured data's features",
            rankings_path.display()
        )));
    }
    let kind = config.validate.model_kind.unwrap_or(config.model.kind);
    let run = |ranking: &RankingReport| {
        subset_validation(
            &split.train,
            &split.test,
            ranking,
            config.validate.top_n,
            config.validate.bottom_m,
            kind,
            &config.model.hyper,
        )
    };
    let output = ValidationOutput {
        combined: run(&rankings.combined)?,
        class0: run(&rankings.class0)?,
        class1: run(&rankings.class1)?,
    };
    write_json(out, "validation.json", &output)?;
    Ok(output)
}
