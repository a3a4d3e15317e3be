use serde::{Deserialize, Serialize};

use super::AttributionMatrix;
use crate::error::{Error, Result};

/// Which class's attributions drive a ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassScope {
    Class0,
    Class1,
    /// Per feature, the larger of the two class attributions. For binary
    /// complementary attributions this is `|φ|`.
    Both,
}

impl ClassScope {
    pub fn from_class(class_id: u8) -> Result<Self> {
        match class_id {
            0 => Ok(ClassScope::Class0),
            1 => Ok(ClassScope::Class1),
            other => Err(Error::Config(format!("class {other} is not 0 or 1"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Largest values first.
    Highest,
    /// Smallest values first.
    Lowest,
}

/// Per-feature counts of appearances in per-instance Top-k lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingReport {
    pub k: usize,
    pub scope: ClassScope,
    pub direction: Direction,
    /// Whether attribution magnitudes were ranked instead of signed values.
    pub absolute: bool,
    pub n_instances: usize,
    pub feature_names: Vec<String>,
    /// Indexed by feature position.
    pub counts: Vec<u64>,
    /// Positions by count descending, ties by position ascending.
    pub order: Vec<usize>,
}

impl RankingReport {
    pub fn n_features(&self) -> usize {
        self.counts.len()
    }

    /// The first `n` positions of the rank order.
    pub fn top(&self, n: usize) -> &[usize] {
        &self.order[..n.min(self.order.len())]
    }

    /// The last `n` positions of the rank order.
    pub fn bottom(&self, n: usize) -> &[usize] {
        &self.order[self.order.len() - n.min(self.order.len())..]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: RankingReport = serde_json::from_str(text)?;
        let m = r.counts.len();
        let mut seen = vec![false; m];
        let permutation = r.order.len() == m
            && r.order.iter().all(|&p| p < m && !std::mem::replace(&mut seen[p], true));
        if !permutation || r.feature_names.len() != m {
            return Err(Error::Validation("ranking order is not a permutation of the features".into()));
        }
        Ok(r)
    }
}

fn score(attr: &AttributionMatrix, i: usize, j: usize, scope: ClassScope, absolute: bool) -> f64 {
    let v = match scope {
        ClassScope::Class0 => attr.value(i, j, 0),
        ClassScope::Class1 => attr.value(i, j, 1),
        ClassScope::Both => attr.value(i, j, 0).max(attr.value(i, j, 1)),
    };
    if absolute {
        v.abs()
    } else {
        v
    }
}

/// Positions of the `k` extreme features of instance `i`, ties by position.
pub(crate) fn instance_top(
    attr: &AttributionMatrix,
    i: usize,
    k: usize,
    scope: ClassScope,
    direction: Direction,
    absolute: bool,
) -> Vec<usize> {
    let scores: Vec<f64> = (0..attr.n_players())
        .map(|j| score(attr, i, j, scope, absolute))
        .collect();
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        let by_value = match direction {
            Direction::Highest => scores[b].total_cmp(&scores[a]),
            Direction::Lowest => scores[a].total_cmp(&scores[b]),
        };
        by_value.then(a.cmp(&b))
    });
    idx.truncate(k);
    idx
}

pub(crate) fn topk_counts(
    attr: &AttributionMatrix,
    k: usize,
    scope: ClassScope,
    direction: Direction,
    absolute: bool,
) -> Vec<u64> {
    let mut counts = vec![0u64; attr.n_players()];
    for i in 0..attr.n_instances() {
        for j in instance_top(attr, i, k, scope, direction, absolute) {
            counts[j] += 1;
        }
    }
    counts
}

/// Signed-value Top-k frequency ranking.
pub fn rank_by_topk_frequency(
    attr: &AttributionMatrix,
    k: usize,
    scope: ClassScope,
    direction: Direction,
) -> Result<RankingReport> {
    rank_by_topk_frequency_with(attr, k, scope, direction, false)
}

/// Top-k frequency ranking, optionally on attribution magnitudes.
pub fn rank_by_topk_frequency_with(
    attr: &AttributionMatrix,
    k: usize,
    scope: ClassScope,
    direction: Direction,
    absolute: bool,
) -> Result<RankingReport> {
    if k > attr.n_players() {
        return Err(Error::Config(format!(
            "k = {k} exceeds the {} features",
            attr.n_players()
        )));
    }
    let counts = topk_counts(attr, k, scope, direction, absolute);
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    Ok(RankingReport {
        k,
        scope,
        direction,
        absolute,
        n_instances: attr.n_instances(),
        feature_names: attr.player_names.clone(),
        counts,
        order,
    })
}

/// Highest-direction ranking for a single class.
pub fn per_class_ranking(attr: &AttributionMatrix, k: usize, class_id: u8) -> Result<RankingReport> {
    rank_by_topk_frequency(attr, k, ClassScope::from_class(class_id)?, Direction::Highest)
}
