use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::dataset::panel::PanelDataset;
use crate::dataset::schema::FeatureSchema;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Company-year feature rows labeled with the next-year ROI direction
/// (1 = increased, 0 = otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub x: Matrix,
    pub y: Vec<u8>,
    pub years: Vec<i32>,
    pub company_ids: Vec<String>,
    pub schema: FeatureSchema,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelDiagnostics {
    pub labeled: usize,
    /// Consecutive-year pairs skipped because either ROI cell was missing.
    pub dropped_missing: usize,
    /// Pairs with `ROI(t+1) == ROI(t)`, labeled 0.
    pub ties: usize,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    /// Restricts the dataset to the given feature positions (ascending).
    pub fn select_features(&self, positions: &[usize]) -> Result<LabeledDataset> {
        let schema = self.schema.select(positions)?;
        Ok(LabeledDataset {
            x: self.x.select_columns(positions),
            y: self.y.clone(),
            years: self.years.clone(),
            company_ids: self.company_ids.clone(),
            schema,
        })
    }

    pub fn select_rows(&self, idx: &[usize]) -> LabeledDataset {
        LabeledDataset {
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            years: idx.iter().map(|&i| self.years[i]).collect(),
            company_ids: idx.iter().map(|&i| self.company_ids[i].clone()).collect(),
            schema: self.schema.clone(),
        }
    }

    pub fn year_histogram(&self) -> Vec<(i32, usize)> {
        let mut h = BTreeMap::new();
        for &y in &self.years {
            *h.entry(y).or_insert(0usize) += 1;
        }
        h.into_iter().collect()
    }

    pub fn positive_rate(&self) -> f64 {
        if self.y.is_empty() {
            return 0.0;
        }
        self.y.iter().map(|&v| f64::from(v)).sum::<f64>() / self.y.len() as f64
    }
}

/// Labels each consecutive company-year pair `(t, t+1)` with
/// `1[ROI(t+1) > ROI(t)]`, keeping the features observed at `t`.
pub fn build_labels(panel: &PanelDataset, roi_feature: &str) -> Result<(LabeledDataset, LabelDiagnostics)> {
    build_labels_with_features(panel, roi_feature, panel)
}

/// Same as [`build_labels`] but takes the feature rows from `features`, a
/// panel over the same company-years (e.g. derived ratios).
pub fn build_labels_with_features(
    roi_source: &PanelDataset,
    roi_feature: &str,
    features: &PanelDataset,
) -> Result<(LabeledDataset, LabelDiagnostics)> {
    let roi_pos = roi_source.schema().require(roi_feature)?;
    if roi_source.is_empty() {
        return Err(Error::EmptyDataset("panel has no rows".into()));
    }

    let feature_index: HashMap<(&str, i32), usize> = features
        .rows()
        .iter()
        .enumerate()
        .map(|(i, r)| ((r.company_id.as_str(), r.year), i))
        .collect();

    // companies in order of first appearance, each with its rows sorted by year
    let mut order: Vec<&str> = Vec::new();
    let mut by_company: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, r) in roi_source.rows().iter().enumerate() {
        by_company
            .entry(r.company_id.as_str())
            .or_insert_with(|| {
                order.push(r.company_id.as_str());
                Vec::new()
            })
            .push(i);
    }

    let width = features.schema().len();
    let mut data = Vec::new();
    let mut y = Vec::new();
    let mut years = Vec::new();
    let mut company_ids = Vec::new();
    let mut diag = LabelDiagnostics::default();
    let rows = roi_source.rows();

    for company in order {
        let idx = by_company.get_mut(company).expect("company indexed");
        idx.sort_by_key(|&i| rows[i].year);
        for w in idx.windows(2) {
            let (now, next) = (&rows[w[0]], &rows[w[1]]);
            if next.year != now.year + 1 {
                continue;
            }
            if now.missing[roi_pos] || next.missing[roi_pos] {
                diag.dropped_missing += 1;
                continue;
            }
            let feat_row = feature_index.get(&(company, now.year)).ok_or_else(|| {
                Error::Validation(format!(
                    "feature panel has no row for ({company}, {})",
                    now.year
                ))
            })?;
            let (r0, r1) = (now.values[roi_pos], next.values[roi_pos]);
            if r1 == r0 {
                diag.ties += 1;
            }
            y.push(u8::from(r1 > r0));
            data.extend_from_slice(&features.rows()[*feat_row].values);
            years.push(now.year);
            company_ids.push(company.to_string());
        }
    }

    if y.is_empty() {
        return Err(Error::EmptyDataset(
            "no consecutive-year pairs with both ROI values present".into(),
        ));
    }
    diag.labeled = y.len();
    let x = Matrix::from_vec(y.len(), width, data)?;
    Ok((
        LabeledDataset {
            x,
            y,
            years,
            company_ids,
            schema: features.schema().clone(),
        },
        diag,
    ))
}

#[derive(Debug, Clone)]
pub struct YearSplit {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    /// Rows whose year falls in neither partition.
    pub discarded: usize,
}

/// Train on `year <= train_last_year`, test on `year == test_year`.
pub fn split_by_year(ds: &LabeledDataset, train_last_year: i32, test_year: i32) -> Result<YearSplit> {
    if test_year <= train_last_year {
        return Err(Error::Config(format!(
            "test year {test_year} must come after the last training year {train_last_year}"
        )));
    }
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (i, &year) in ds.years.iter().enumerate() {
        if year <= train_last_year {
            train_idx.push(i);
        } else if year == test_year {
            test_idx.push(i);
        }
    }
    let empty = if train_idx.is_empty() {
        Some("training partition is empty")
    } else if test_idx.is_empty() {
        Some("test partition is empty")
    } else {
        None
    };
    if let Some(message) = empty {
        return Err(Error::Split {
            message: message.into(),
            histogram: ds.year_histogram(),
        });
    }
    let discarded = ds.len() - train_idx.len() - test_idx.len();
    Ok(YearSplit {
        train: ds.select_rows(&train_idx),
        test: ds.select_rows(&test_idx),
        discarded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FeatureGroup, PanelRow};

    fn panel(rows: &[(&str, i32, f64, bool)]) -> PanelDataset {
        let schema = FeatureSchema::from_blocks([
            (FeatureGroup::BalanceSheet, vec!["Assets"]),
            (FeatureGroup::RatioAnalysis, vec!["ROI"]),
        ])
        .unwrap();
        let rows = rows
            .iter()
            .map(|&(c, year, roi, miss)| PanelRow {
                company_id: c.into(),
                year,
                values: vec![year as f64, if miss { 0.0 } else { roi }],
                missing: vec![false, miss],
            })
            .collect();
        PanelDataset::new(schema, rows).unwrap()
    }

    #[test]
    fn increase_is_one() {
        let (ds, d) = build_labels(&panel(&[("A", 2015, 5.0, false), ("A", 2016, 6.0, false)]), "ROI").unwrap();
        assert_eq!(ds.y, vec![1]);
        assert_eq!(ds.years, vec![2015]);
        assert_eq!(ds.x.row(0), &[2015.0, 5.0]);
        assert_eq!(d.ties, 0);
    }

    #[test]
    fn tie_is_zero_and_counted() {
        let (ds, d) = build_labels(&panel(&[("A", 2015, 5.0, false), ("A", 2016, 5.0, false)]), "ROI").unwrap();
        assert_eq!(ds.y, vec![0]);
        assert_eq!(d.ties, 1);
    }

    #[test]
    fn missing_next_roi_drops_pair() {
        let p = panel(&[
            ("A", 2015, 5.0, false),
            ("A", 2016, 0.0, true),
            ("B", 2015, 1.0, false),
            ("B", 2016, 0.5, false),
        ]);
        let (ds, d) = build_labels(&p, "ROI").unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.company_ids, vec!["B"]);
        assert_eq!(d.dropped_missing, 1);
    }

    #[test]
    fn only_missing_pairs_is_empty_error() {
        let p = panel(&[("A", 2015, 5.0, false), ("A", 2016, 0.0, true)]);
        assert!(matches!(build_labels(&p, "ROI"), Err(Error::EmptyDataset(_))));
    }

    #[test]
    fn unknown_roi_feature_is_schema_error() {
        let p = panel(&[("A", 2015, 5.0, false), ("A", 2016, 6.0, false)]);
        assert!(matches!(build_labels(&p, "ROE"), Err(Error::Schema(_))));
    }

    #[test]
    fn gap_years_are_not_paired() {
        let p = panel(&[("A", 2015, 5.0, false), ("A", 2017, 6.0, false), ("A", 2018, 7.0, false)]);
        let (ds, _) = build_labels(&p, "ROI").unwrap();
        assert_eq!(ds.years, vec![2017]);
    }

    #[test]
    fn split_matches_year_predicates() {
        let rows: Vec<_> = (2013..=2022).map(|y| ("A", y, y as f64, false)).collect();
        let (ds, _) = build_labels(&panel(&rows), "ROI").unwrap();
        let s = split_by_year(&ds, 2020, 2021).unwrap();
        assert_eq!(s.train.years, (2013..=2020).collect::<Vec<_>>());
        assert_eq!(s.test.years, vec![2021]);
        assert_eq!(s.discarded, 0);
    }

    #[test]
    fn split_errors() {
        let (ds, _) = build_labels(&panel(&[("A", 2021, 1.0, false), ("A", 2022, 2.0, false)]), "ROI").unwrap();
        match split_by_year(&ds, 2020, 2021) {
            Err(Error::Split { histogram, .. }) => assert_eq!(histogram, vec![(2021, 1)]),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(split_by_year(&ds, 2020, 2019), Err(Error::Config(_))));
    }
}
