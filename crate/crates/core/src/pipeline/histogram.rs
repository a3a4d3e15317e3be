use std::io::Write;

use serde::{Deserialize, Serialize};

use super::ranking::topk_counts;
use super::{AttributionMatrix, ClassScope, Direction};
use crate::dataset::{FeatureGroup, FeatureSchema};
use crate::error::{Error, Result};

/// Top-k hits of one schema group, normalized by group size and instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFrequency {
    pub group: FeatureGroup,
    pub size: usize,
    pub hits: u64,
    pub frequency: f64,
}

fn check_schema(attr: &AttributionMatrix, schema: &FeatureSchema) -> Result<()> {
    if schema.len() != attr.n_players() {
        return Err(Error::Shape {
            expected: attr.n_players(),
            actual: schema.len(),
        });
    }
    Ok(())
}

/// Probability that a feature of each group lands in an instance's Top-k:
/// `hits / (group size × n_instances)`. Groups absent from the schema are omitted.
pub fn group_frequency_histogram(
    attr: &AttributionMatrix,
    schema: &FeatureSchema,
    k: usize,
    scope: ClassScope,
) -> Result<Vec<GroupFrequency>> {
    check_schema(attr, schema)?;
    let k = k.min(attr.n_players());
    let counts = topk_counts(attr, k, scope, Direction::Highest, false);
    let mut out = Vec::new();
    for group in FeatureGroup::ALL {
        let members: Vec<usize> = schema
            .features()
            .iter()
            .filter(|f| f.group == group)
            .map(|f| f.position)
            .collect();
        if members.is_empty() {
            continue;
        }
        let hits: u64 = members.iter().map(|&p| counts[p]).sum();
        let denom = (members.len() * attr.n_instances()) as f64;
        out.push(GroupFrequency {
            group,
            size: members.len(),
            hits,
            frequency: if denom > 0.0 { hits as f64 / denom } else { 0.0 },
        });
    }
    Ok(out)
}

pub fn write_group_histogram_csv<W: Write>(rows: &[GroupFrequency], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["group", "size", "hits", "frequency"]).map_err(Error::csv)?;
    for r in rows {
        w.write_record([
            r.group.to_string(),
            r.size.to_string(),
            r.hits.to_string(),
            format!("{}", r.frequency),
        ])
        .map_err(Error::csv)?;
    }
    w.flush().map_err(|e| Error::Validation(format!("csv write failed: {e}")))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionBin {
    /// Feature positions `start..end`.
    pub start: usize,
    pub end: usize,
    /// Group of the first position in the bin.
    pub group: FeatureGroup,
    pub top: u64,
    pub worst: u64,
}

/// Top-n and Worst-n appearance counts binned along feature position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionalDistribution {
    pub n_top: usize,
    pub n_worst: usize,
    pub n_instances: usize,
    pub bins: Vec<PositionBin>,
}

impl PositionalDistribution {
    pub fn total_top(&self) -> u64 {
        self.bins.iter().map(|b| b.top).sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin", "start", "end", "group", "top", "worst"])
            .map_err(Error::csv)?;
        for (i, b) in self.bins.iter().enumerate() {
            w.write_record([
                i.to_string(),
                b.start.to_string(),
                b.end.to_string(),
                b.group.to_string(),
                b.top.to_string(),
                b.worst.to_string(),
            ])
            .map_err(Error::csv)?;
        }
        w.flush().map_err(|e| Error::Validation(format!("csv write failed: {e}")))?;
        Ok(())
    }
}

/// Position `p` falls in bin `p * n_bins / M`.
pub fn positional_distribution(
    attr: &AttributionMatrix,
    schema: &FeatureSchema,
    n_top: usize,
    n_worst: usize,
    n_bins: usize,
    scope: ClassScope,
) -> Result<PositionalDistribution> {
    check_schema(attr, schema)?;
    let m = attr.n_players();
    if n_top > m || n_worst > m {
        return Err(Error::Config(format!(
            "top {n_top} / worst {n_worst} exceed the {m} features"
        )));
    }
    if n_bins == 0 || n_bins > m {
        return Err(Error::Config(format!("bin count must be in 1..={m}, got {n_bins}")));
    }
    let top = topk_counts(attr, n_top, scope, Direction::Highest, false);
    let worst = topk_counts(attr, n_worst, scope, Direction::Lowest, false);
    let mut bins: Vec<PositionBin> = (0..n_bins)
        .map(|b| {
            let start = (b * m).div_ceil(n_bins);
            let end = ((b + 1) * m).div_ceil(n_bins);
            PositionBin {
                start,
                end,
                group: schema.group(start),
                top: 0,
                worst: 0,
            }
        })
        .collect();
    for p in 0..m {
        let b = p * n_bins / m;
        bins[b].top += top[p];
        bins[b].worst += worst[p];
    }
    Ok(PositionalDistribution {
        n_top,
        n_worst,
        n_instances: attr.n_instances(),
        bins,
    })
}
