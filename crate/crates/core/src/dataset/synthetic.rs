use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::panel::{PanelDataset, PanelRow};
use crate::dataset::schema::{FeatureGroup, FeatureSchema};
use crate::error::{Error, Result};
use crate::metrics::roc_auc;
use crate::seed::stage_rng;

/// Name of the profitability column in generated panels.
pub const ROI_FEATURE: &str = "ROI";

const FP_ITEMS: &[&str] = &[
    "Revenue",
    "EBITDA",
    "EBIT",
    "NetIncome",
    "TotalAssets",
    "ShareholdersEquity",
    "NetFinancialPosition",
    "CashFlow",
    "AddedValue",
    "Employees",
];
const BS_ITEMS: &[&str] = &[
    "FixedAssets",
    "IntangibleAssets",
    "TangibleAssets",
    "FinancialFixedAssets",
    "CurrentAssets",
    "Inventories",
    "TradeReceivables",
    "CashAndEquivalents",
    "TotalLiabilities",
    "CurrentLiabilities",
    "LongTermDebt",
    "TradePayables",
    "RetainedEarnings",
    "ShareCapital",
];
const IS_ITEMS: &[&str] = &[
    "ProductionValue",
    "Sales",
    "CostOfMaterials",
    "ServiceCosts",
    "PersonnelCosts",
    "DepreciationAmortization",
    "OperatingResult",
    "FinancialIncome",
    "InterestExpense",
    "PreTaxIncome",
    "Taxes",
    "Dividends",
];
const RA_ITEMS: &[&str] = &[ROI_FEATURE, "ROE", "ROA", "ROS"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_companies: usize,
    pub first_year: i32,
    pub last_year: i32,
    /// Feature counts for FinancialProfile, BalanceSheet, IncomeStatement, RatioAnalysis.
    pub group_sizes: [usize; 4],
    pub n_informative: usize,
    pub n_interactions: usize,
    /// Standard deviation of the ROI shock relative to the unit-variance signal.
    pub noise: f64,
    pub within_group_correlation: f64,
    pub persistence: f64,
    /// Probability that a non-informative cell is left empty.
    pub missing_rate: f64,
    /// Restricts the planted features to these groups when set.
    pub informative_groups: Option<Vec<FeatureGroup>>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_companies: 327,
            first_year: 2013,
            last_year: 2022,
            group_sizes: [30, 120, 80, 71],
            n_informative: 20,
            n_interactions: 5,
            noise: 0.5,
            within_group_correlation: 0.3,
            persistence: 0.5,
            missing_rate: 0.03,
            informative_groups: None,
        }
    }
}

impl SyntheticConfig {
    pub fn n_features(&self) -> usize {
        self.group_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.n_features();
        if self.n_companies == 0 {
            return Err(Error::Config("n_companies must be positive".into()));
        }
        if self.last_year <= self.first_year {
            return Err(Error::Config("year span needs at least two years".into()));
        }
        if self.group_sizes[3] == 0 {
            return Err(Error::Config("RatioAnalysis group must hold the ROI column".into()));
        }
        if self.n_informative > f {
            return Err(Error::Config(format!(
                "n_informative = {} exceeds the feature count {f}",
                self.n_informative
            )));
        }
        if !(0.0..1.0).contains(&self.within_group_correlation)
            || !(0.0..1.0).contains(&self.persistence)
            || !(0.0..=1.0).contains(&self.missing_rate)
            || !(self.noise >= 0.0)
        {
            return Err(Error::Config("generator coefficients out of range".into()));
        }
        Ok(())
    }

    /// Feature names: named line items first, numbered entries after.
    pub fn schema(&self) -> Result<FeatureSchema> {
        let named: [(&[&str], &str); 4] = [
            (FP_ITEMS, "FP"),
            (BS_ITEMS, "BS"),
            (IS_ITEMS, "IS"),
            (RA_ITEMS, "RA"),
        ];
        let blocks = FeatureGroup::ALL.iter().zip(named).zip(self.group_sizes).map(
            |((&group, (items, prefix)), size)| {
                let names: Vec<String> = (0..size)
                    .map(|i| match items.get(i) {
                        Some(n) => (*n).to_string(),
                        None => format!("{prefix}_{i:03}"),
                    })
                    .collect();
                (group, names)
            },
        );
        FeatureSchema::from_blocks(blocks)
    }
}

/// Ground truth of a generated panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTruth {
    pub roi_feature: String,
    pub informative_features: Vec<usize>,
    pub informative_names: Vec<String>,
    /// Linear weights, zero exactly off the informative set.
    pub weights: Vec<f64>,
    pub interaction_pairs: Vec<(usize, usize)>,
    pub interaction_coefs: Vec<f64>,
    /// Divisor that brings the raw signal to unit variance.
    pub signal_scale: f64,
    /// ROC-AUC of the noiseless signal against the realised labels.
    pub bayes_auc: Option<f64>,
}

impl SyntheticTruth {
    pub fn signal(&self, x: &[f64]) -> f64 {
        let linear: f64 = self
            .informative_features
            .iter()
            .map(|&i| self.weights[i] * x[i])
            .sum();
        let inter: f64 = self
            .interaction_pairs
            .iter()
            .zip(&self.interaction_coefs)
            .map(|(&(i, j), c)| c * x[i] * x[j])
            .sum();
        (linear + inter) / self.signal_scale
    }
}

/// Generates a company-year panel with a planted ROI-change signal.
///
/// Each company carries one AR(1) factor per group plus AR(1) idiosyncratic
/// terms, giving correlated-within-group, persistent features. ROI follows
/// `ROI(t+1) = ROI(t) + signal(x_t) + noise·ε`, where the signal is a sparse
/// linear term plus pairwise products over the informative features.
pub fn synthesize_panel(config: &SyntheticConfig, seed: u64) -> Result<(PanelDataset, SyntheticTruth)> {
    config.validate()?;
    let schema = config.schema()?;
    let f = schema.len();
    let roi_pos = schema.require(ROI_FEATURE)?;
    let mut rng = stage_rng(seed, "synthesize", 0);

    let candidates: Vec<usize> = (0..f)
        .filter(|&p| p != roi_pos)
        .filter(|&p| match &config.informative_groups {
            Some(groups) => groups.contains(&schema.group(p)),
            None => true,
        })
        .collect();
    if config.n_informative > candidates.len() {
        return Err(Error::Config(format!(
            "n_informative = {} exceeds the {} eligible features",
            config.n_informative,
            candidates.len()
        )));
    }
    let mut informative: Vec<usize> = sample(&mut rng, candidates.len(), config.n_informative)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    informative.sort_unstable();

    let mut weights = vec![0.0; f];
    for &i in &informative {
        let magnitude: f64 = rng.random_range(0.5..1.5);
        weights[i] = if rng.random_bool(0.5) { magnitude } else { -magnitude };
    }

    let k = informative.len();
    let n_pairs = config.n_interactions.min(k * k.saturating_sub(1) / 2);
    let mut interaction_pairs = Vec::with_capacity(n_pairs);
    let mut interaction_coefs = Vec::with_capacity(n_pairs);
    while interaction_pairs.len() < n_pairs {
        let a = informative[rng.random_range(0..k)];
        let b = informative[rng.random_range(0..k)];
        let pair = (a.min(b), a.max(b));
        if a == b || interaction_pairs.contains(&pair) {
            continue;
        }
        let magnitude: f64 = rng.random_range(0.5..1.0);
        interaction_pairs.push(pair);
        interaction_coefs.push(if rng.random_bool(0.5) { magnitude } else { -magnitude });
    }

    let n_years = (config.last_year - config.first_year + 1) as usize;
    let groups: Vec<usize> = (0..f).map(|p| schema.group(p).index()).collect();
    let rho = config.within_group_correlation;
    let (load_g, load_e) = (rho.sqrt(), (1.0 - rho).sqrt());
    let a = config.persistence;
    let innov = (1.0 - a * a).sqrt();

    // values[company][year][feature]
    let mut values = vec![vec![vec![0.0f64; f]; n_years]; config.n_companies];
    for company in values.iter_mut() {
        let mut factor: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let mut idio: Vec<f64> = (0..f).map(|_| rng.sample(StandardNormal)).collect();
        for (t, row) in company.iter_mut().enumerate() {
            if t > 0 {
                for g in factor.iter_mut() {
                    *g = a * *g + innov * rng.sample::<f64, _>(StandardNormal);
                }
                for e in idio.iter_mut() {
                    *e = a * *e + innov * rng.sample::<f64, _>(StandardNormal);
                }
            }
            for p in 0..f {
                row[p] = load_g * factor[groups[p]] + load_e * idio[p];
            }
        }
    }

    let mut truth = SyntheticTruth {
        roi_feature: ROI_FEATURE.to_string(),
        informative_names: informative.iter().map(|&p| schema.name(p).to_string()).collect(),
        informative_features: informative,
        weights,
        interaction_pairs,
        interaction_coefs,
        signal_scale: 1.0,
        bayes_auc: None,
    };

    let raw: Vec<f64> = values
        .iter()
        .flat_map(|c| c[..n_years - 1].iter().map(|x| truth.signal(x)))
        .collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let var = raw.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / raw.len() as f64;
    if var > 0.0 {
        truth.signal_scale = var.sqrt();
    }

    let mut signals = Vec::with_capacity(raw.len());
    let mut labels = Vec::with_capacity(raw.len());
    for company in values.iter_mut() {
        let mut roi: f64 = rng.sample(StandardNormal);
        company[0][roi_pos] = roi;
        for t in 0..n_years - 1 {
            let s = truth.signal(&company[t]);
            let shock: f64 = rng.sample(StandardNormal);
            let next = roi + s + config.noise * shock;
            signals.push(s);
            labels.push(u8::from(next > roi));
            roi = next;
            company[t + 1][roi_pos] = roi;
        }
    }
    truth.bayes_auc = roc_auc(&labels, &signals).ok();

    let informative_mask: Vec<bool> = (0..f).map(|p| truth.weights[p] != 0.0 || p == roi_pos).collect();
    let mut rows = Vec::with_capacity(config.n_companies * n_years);
    for (c, company) in values.into_iter().enumerate() {
        let company_id = format!("C{c:04}");
        for (t, mut vals) in company.into_iter().enumerate() {
            let mut missing = vec![false; f];
            if config.missing_rate > 0.0 {
                for p in 0..f {
                    if !informative_mask[p] && rng.random_bool(config.missing_rate) {
                        missing[p] = true;
                        vals[p] = 0.0;
                    }
                }
            }
            rows.push(PanelRow {
                company_id: company_id.clone(),
                year: config.first_year + t as i32,
                values: vals,
                missing,
            });
        }
    }
    Ok((PanelDataset::new(schema, rows)?, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::build_labels;

    fn tiny() -> SyntheticConfig {
        SyntheticConfig {
            n_companies: 12,
            first_year: 2013,
            last_year: 2016,
            group_sizes: [3, 4, 3, 2],
            n_informative: 3,
            ..SyntheticConfig::default()
        }
    }

    #[test]
    fn default_dimensions() {
        let c = SyntheticConfig::default();
        assert_eq!(c.n_features(), 301);
        let s = c.schema().unwrap();
        assert_eq!(s.group_blocks().len(), 4);
        assert_eq!(s.group(s.require(ROI_FEATURE).unwrap()), FeatureGroup::RatioAnalysis);
    }

    #[test]
    fn deterministic_in_seed() {
        let (a, ta) = synthesize_panel(&tiny(), 7).unwrap();
        let (b, tb) = synthesize_panel(&tiny(), 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let (c, _) = synthesize_panel(&tiny(), 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn weights_vanish_off_informative_set() {
        let (_, t) = synthesize_panel(&tiny(), 1).unwrap();
        for (p, w) in t.weights.iter().enumerate() {
            assert_eq!(*w != 0.0, t.informative_features.contains(&p));
        }
    }

    #[test]
    fn too_many_informative_is_config_error() {
        let cfg = SyntheticConfig { n_informative: 13, ..tiny() };
        assert!(matches!(synthesize_panel(&cfg, 0), Err(Error::Config(_))));
        let cfg = SyntheticConfig { n_companies: 0, ..tiny() };
        assert!(matches!(synthesize_panel(&cfg, 0), Err(Error::Config(_))));
    }

    #[test]
    fn noiseless_single_feature_determines_direction() {
        let cfg = SyntheticConfig {
            n_informative: 1,
            noise: 0.0,
            ..tiny()
        };
        let (panel, truth) = synthesize_panel(&cfg, 3).unwrap();
        let p = truth.informative_features[0];
        let w = truth.weights[p];
        let (ds, _) = build_labels(&panel, ROI_FEATURE).unwrap();
        for (row, &y) in ds.x.iter_rows().zip(&ds.y) {
            assert_eq!(y, u8::from(w * row[p] > 0.0));
        }
    }

    #[test]
    fn planted_features_respect_group_restriction() {
        let cfg = SyntheticConfig {
            informative_groups: Some(vec![FeatureGroup::BalanceSheet]),
            ..tiny()
        };
        let (panel, truth) = synthesize_panel(&cfg, 5).unwrap();
        assert!(truth
            .informative_features
            .iter()
            .all(|&p| panel.schema().group(p) == FeatureGroup::BalanceSheet));
    }
}
