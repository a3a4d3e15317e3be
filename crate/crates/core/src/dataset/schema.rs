use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four parts of a financial-statement document, in reading order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureGroup {
    FinancialProfile,
    BalanceSheet,
    IncomeStatement,
    RatioAnalysis,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 4] = [
        FeatureGroup::FinancialProfile,
        FeatureGroup::BalanceSheet,
        FeatureGroup::IncomeStatement,
        FeatureGroup::RatioAnalysis,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FeatureGroup::FinancialProfile => "FinancialProfile",
            FeatureGroup::BalanceSheet => "BalanceSheet",
            FeatureGroup::IncomeStatement => "IncomeStatement",
            FeatureGroup::RatioAnalysis => "RatioAnalysis",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub group: FeatureGroup,
    pub position: usize,
}

/// Ordered feature catalog. Positions run `0..len` without gaps, names are
/// unique and each group occupies one contiguous block of positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct FeatureSchema {
    features: Vec<FeatureSpec>,
}

impl<'de> Deserialize<'de> for FeatureSchema {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let features = Vec::<FeatureSpec>::deserialize(d)?;
        FeatureSchema::new(features).map_err(serde::de::Error::custom)
    }
}

impl FeatureSchema {
    /// Validates and orders the catalog by position.
    pub fn new(mut features: Vec<FeatureSpec>) -> Result<Self> {
        features.sort_by_key(|f| f.position);
        for (expected, f) in features.iter().enumerate() {
            if f.position != expected {
                return Err(Error::Schema(format!(
                    "feature positions must be 0..{} without gaps or duplicates; found position {} for `{}` where {} was expected",
                    features.len(),
                    f.position,
                    f.name,
                    expected
                )));
            }
        }
        let mut seen = HashMap::with_capacity(features.len());
        for f in &features {
            if seen.insert(f.name.as_str(), f.position).is_some() {
                return Err(Error::Schema(format!("duplicate feature name `{}`", f.name)));
            }
        }
        let mut closed: Vec<FeatureGroup> = Vec::new();
        for w in features.windows(2) {
            if w[0].group != w[1].group {
                closed.push(w[0].group);
                if closed.contains(&w[1].group) {
                    return Err(Error::Schema(format!(
                        "group {} is not contiguous (resumes at position {})",
                        w[1].group, w[1].position
                    )));
                }
            }
        }
        Ok(FeatureSchema { features })
    }

    /// Builds a schema from consecutive `(group, names)` blocks.
    pub fn from_blocks<I, S>(blocks: I) -> Result<Self>
    where
        I: IntoIterator<Item = (FeatureGroup, Vec<S>)>,
        S: Into<String>,
    {
        let mut features = Vec::new();
        for (group, names) in blocks {
            for name in names {
                let position = features.len();
                features.push(FeatureSpec {
                    name: name.into(),
                    group,
                    position,
                });
            }
        }
        FeatureSchema::new(features)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn names(&self) -> impl Iterator<Item = &str> + '_ {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn name(&self, position: usize) -> &str {
        &self.features[position].name
    }

    pub fn group(&self, position: usize) -> FeatureGroup {
        self.features[position].group
    }

    pub fn position_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.position_of(name)
            .ok_or_else(|| Error::Schema(format!("feature `{name}` is not in the schema")))
    }

    /// Groups present in the schema with their position ranges, in order.
    pub fn group_blocks(&self) -> Vec<(FeatureGroup, Range<usize>)> {
        let mut blocks: Vec<(FeatureGroup, Range<usize>)> = Vec::new();
        for f in &self.features {
            match blocks.last_mut() {
                Some((g, r)) if *g == f.group => r.end = f.position + 1,
                _ => blocks.push((f.group, f.position..f.position + 1)),
            }
        }
        blocks
    }

    /// Sub-schema keeping the given positions (ascending), renumbered from 0.
    pub fn select(&self, positions: &[usize]) -> Result<Self> {
        let mut sorted = positions.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != positions.len() || sorted != positions {
            return Err(Error::Validation(
                "feature selection must be strictly ascending".into(),
            ));
        }
        let features = positions
            .iter()
            .enumerate()
            .map(|(new, &old)| {
                let f = self.features.get(old).ok_or_else(|| {
                    Error::Validation(format!("position {old} out of range for {} features", self.len()))
                })?;
                Ok(FeatureSpec {
                    name: f.name.clone(),
                    group: f.group,
                    position: new,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        FeatureSchema::new(features)
    }
}
