use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::panel::{PanelDataset, PanelRow};
use crate::dataset::schema::{FeatureGroup, FeatureSchema};
use crate::error::{Error, Result};

/// Denominators with magnitude below this emit 0 and a missing flag.
pub const DELTA_ZERO: f64 = 1e-12;

const DEFAULT_RATIOS: &str = include_str!("../../data/ratios.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTerm {
    pub feature: String,
    pub coef: f64,
}

/// `(numerator + Σ numerator_terms) / (denominator + Σ denominator_terms)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioDef {
    pub name: String,
    pub numerator: String,
    pub denominator: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub numerator_terms: Vec<RatioTerm>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub denominator_terms: Vec<RatioTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RatioSpec {
    pub ratios: Vec<RatioDef>,
}

impl RatioSpec {
    /// The bundled liquidity/leverage/turnover/profitability set, written
    /// against the line-item names of the synthetic schema.
    pub fn bundled() -> Self {
        serde_json::from_str(DEFAULT_RATIOS).expect("bundled ratio spec parses")
    }

    pub fn bundled_json() -> &'static str {
        DEFAULT_RATIOS
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }
}

struct Side {
    base: usize,
    terms: Vec<(usize, f64)>,
}

impl Side {
    fn resolve(schema: &FeatureSchema, base: &str, terms: &[RatioTerm]) -> Result<Self> {
        Ok(Side {
            base: schema.require(base)?,
            terms: terms
                .iter()
                .map(|t| Ok((schema.require(&t.feature)?, t.coef)))
                .collect::<Result<_>>()?,
        })
    }

    fn eval(&self, values: &[f64]) -> f64 {
        self.terms
            .iter()
            .fold(values[self.base], |acc, &(p, c)| acc + c * values[p])
    }
}

/// Maps each panel row to the ratio features of `spec`. The output schema holds
/// only the ratios, all in the `RatioAnalysis` group.
pub fn compute_ratios(panel: &PanelDataset, spec: &RatioSpec) -> Result<PanelDataset> {
    let schema = panel.schema();
    let sides = spec
        .ratios
        .iter()
        .map(|r| {
            Ok((
                Side::resolve(schema, &r.numerator, &r.numerator_terms)?,
                Side::resolve(schema, &r.denominator, &r.denominator_terms)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let out_schema = FeatureSchema::from_blocks([(
        FeatureGroup::RatioAnalysis,
        spec.ratios.iter().map(|r| r.name.clone()).collect::<Vec<_>>(),
    )])?;

    let rows = panel
        .rows()
        .iter()
        .map(|row| {
            let (values, missing) = sides
                .iter()
                .map(|(num, den)| {
                    let d = den.eval(&row.values);
                    if d.abs() < DELTA_ZERO {
                        (0.0, true)
                    } else {
                        (num.eval(&row.values) / d, false)
                    }
                })
                .unzip();
            PanelRow {
                company_id: row.company_id.clone(),
                year: row.year,
                values,
                missing,
            }
        })
        .collect();
    PanelDataset::new(out_schema, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn panel(rows: &[[f64; 5]]) -> PanelDataset {
        let schema = FeatureSchema::from_blocks([(
            FeatureGroup::BalanceSheet,
            vec!["a", "b", "c", "d", "e"],
        )])
        .unwrap();
        let rows = rows
            .iter()
            .enumerate()
            .map(|(i, v)| PanelRow {
                company_id: format!("C{i}"),
                year: 2015,
                values: v.to_vec(),
                missing: vec![false; 5],
            })
            .collect();
        PanelDataset::new(schema, rows).unwrap()
    }

    fn ratio(name: &str, num: &str, den: &str) -> RatioDef {
        RatioDef {
            name: name.into(),
            numerator: num.into(),
            denominator: den.into(),
            numerator_terms: vec![],
            denominator_terms: vec![],
        }
    }

    #[test]
    fn plain_ratio_and_zero_guard() {
        let spec = RatioSpec {
            ratios: vec![ratio("r1", "a", "b"), ratio("r2", "a", "c")],
        };
        let out = compute_ratios(&panel(&[[10.0, 4.0, 0.0, 1.0, 1.0]]), &spec).unwrap();
        assert_eq!(out.schema().len(), 2);
        assert_eq!(out.rows()[0].values, vec![2.5, 0.0]);
        assert_eq!(out.rows()[0].missing, vec![false, true]);
        assert!(out.schema().features().iter().all(|f| f.group == FeatureGroup::RatioAnalysis));
    }

    #[test]
    fn additive_terms() {
        let mut r = ratio("q", "a", "b");
        r.numerator_terms.push(RatioTerm { feature: "c".into(), coef: -1.0 });
        r.denominator_terms.push(RatioTerm { feature: "d".into(), coef: 2.0 });
        let out = compute_ratios(&panel(&[[10.0, 1.0, 4.0, 1.0, 0.0]]), &RatioSpec { ratios: vec![r] }).unwrap();
        assert_eq!(out.rows()[0].values, vec![2.0]);
    }

    #[test]
    fn unknown_feature_rejected() {
        let spec = RatioSpec { ratios: vec![ratio("r", "a", "zzz")] };
        assert!(matches!(compute_ratios(&panel(&[[1.0; 5]]), &spec), Err(Error::Schema(_))));
    }

    #[test]
    fn bundled_spec_parses() {
        let spec = RatioSpec::bundled();
        assert!(spec.ratios.len() >= 15);
    }
}
