use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{midpoint, FeatureSource, Node, Tree};
use super::{validate_training, ModelParams, TrainedModel, TrainingMeta, MODEL_FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::{stage_rng, StageRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestHyper {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features tried per split; `None` means `ceil(sqrt(F))`.
    pub mtry: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestHyper {
    fn default() -> Self {
        ForestHyper {
            n_trees: 300,
            max_depth: None,
            min_leaf: 1,
            mtry: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

/// Bagged CART classifiers; leaves hold the class-1 frequency of their samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<Tree>,
}

impl RandomForest {
    #[inline]
    pub fn proba<F: FeatureSource + ?Sized>(&self, row: &F) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }
}

struct Grower<'a> {
    x: &'a Matrix,
    y: &'a [u8],
    max_depth: usize,
    min_leaf: usize,
    mtry: usize,
    features: Vec<usize>,
    pairs: Vec<(f64, u8)>,
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn gini_sum(n: f64, pos: f64) -> f64 {
    // n · gini = n · (1 - p² - q²) = 2·pos·(n-pos)/n
    if n == 0.0 {
        0.0
    } else {
        2.0 * pos * (n - pos) / n
    }
}

impl Grower<'_> {
    fn grow(&mut self, rng: &mut StageRng, rows: &mut [usize], depth: usize, tree: &mut Tree) -> u32 {
        let n = rows.len();
        let pos = rows.iter().filter(|&&i| self.y[i] == 1).count();
        let leaf = Node::Leaf {
            value: pos as f64 / n as f64,
        };
        if pos == 0 || pos == n || depth >= self.max_depth || n < 2 * self.min_leaf {
            return tree.push(leaf);
        }
        let Some(split) = self.best_split(rng, rows, pos) else {
            return tree.push(leaf);
        };
        let at = partition(rows, |&i| self.x.get(i, split.feature) <= split.threshold);
        let id = tree.push(Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: 0,
            right: 0,
        });
        let (l, r) = rows.split_at_mut(at);
        let left = self.grow(rng, l, depth + 1, tree);
        let right = self.grow(rng, r, depth + 1, tree);
        if let Node::Split { left: a, right: b, .. } = &mut tree.nodes[id as usize] {
            *a = left;
            *b = right;
        }
        id
    }

    /// Best Gini split over `mtry` random features; keeps drawing further
    /// features while none of the drawn ones admits a valid split.
    fn best_split(&mut self, rng: &mut StageRng, rows: &[usize], pos: usize) -> Option<Split> {
        self.features.shuffle(rng);
        let n = rows.len() as f64;
        let total_pos = pos as f64;
        let mut best: Option<Split> = None;
        for k in 0..self.features.len() {
            if k >= self.mtry && best.is_some() {
                break;
            }
            let feature = self.features[k];
            self.pairs.clear();
            self.pairs.extend(rows.iter().map(|&i| (self.x.get(i, feature), self.y[i])));
            self.pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0.0;
            for s in 0..self.pairs.len() - 1 {
                left_pos += f64::from(self.pairs[s].1);
                let nl = s + 1;
                if self.pairs[s].0 == self.pairs[s + 1].0 {
                    continue;
                }
                if nl < self.min_leaf || rows.len() - nl < self.min_leaf {
                    continue;
                }
                let nl = nl as f64;
                let impurity = gini_sum(nl, left_pos) + gini_sum(n - nl, total_pos - left_pos);
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    best = Some(Split {
                        feature,
                        threshold: midpoint(self.pairs[s].0, self.pairs[s + 1].0),
                        impurity,
                    });
                }
            }
        }
        best
    }
}

fn partition<T, P: Fn(&T) -> bool>(v: &mut [T], pred: P) -> usize {
    let mut at = 0;
    for i in 0..v.len() {
        if pred(&v[i]) {
            v.swap(at, i);
            at += 1;
        }
    }
    at
}

pub fn train_random_forest(x: &Matrix, y: &[u8], hyper: &ForestHyper) -> Result<TrainedModel> {
    validate_training(x, y)?;
    let f = x.cols();
    let mtry = hyper.mtry.unwrap_or_else(|| (f as f64).sqrt().ceil() as usize);
    if mtry == 0 || mtry > f {
        return Err(Error::Config(format!("mtry = {mtry} must lie in 1..={f}")));
    }
    if hyper.n_trees == 0 || hyper.min_leaf == 0 {
        return Err(Error::Config("n_trees and min_leaf must be positive".into()));
    }
    let n = x.rows();
    let trees: Vec<Tree> = (0..hyper.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = stage_rng(hyper.seed, "forest-tree", t as u64);
            let mut rows: Vec<usize> = if hyper.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut grower = Grower {
                x,
                y,
                max_depth: hyper.max_depth.unwrap_or(usize::MAX),
                min_leaf: hyper.min_leaf,
                mtry,
                features: (0..f).collect(),
                pairs: Vec::with_capacity(n),
            };
            let mut tree = Tree::default();
            grower.grow(&mut rng, &mut rows, 0, &mut tree);
            tree
        })
        .collect();

    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        feature_count: f,
        meta: TrainingMeta {
            seed: hyper.seed,
            hyperparameters: serde_json::to_value(hyper)?,
            loss_trace: Vec::new(),
            converged: true,
        },
        model: ModelParams::RandomForest(RandomForest { trees }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{accuracy, threshold};

    fn data() -> (Matrix, Vec<u8>) {
        let mut rng = stage_rng(1, "forest-test", 0);
        let rows: Vec<[f64; 3]> = (0..60)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let y = rows.iter().map(|r| u8::from(r[0] + 0.3 * r[1] > 0.6)).collect();
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn single_unpruned_tree_memorises() {
        let (x, y) = data();
        let hyper = ForestHyper {
            n_trees: 1,
            bootstrap: false,
            ..Default::default()
        };
        let m = train_random_forest(&x, &y, &hyper).unwrap();
        assert_eq!(accuracy(&y, &threshold(&m.predict_proba(&x).unwrap())).unwrap(), 1.0);
    }

    #[test]
    fn constant_labels_predict_one() {
        let (x, _) = data();
        let y = vec![1; x.rows()];
        let m = train_random_forest(&x, &y, &ForestHyper { n_trees: 5, ..Default::default() }).unwrap();
        assert!(m.predict_proba(&x).unwrap().iter().all(|&p| p == 1.0));
    }

    #[test]
    fn same_seed_same_forest() {
        let (x, y) = data();
        let h = ForestHyper { n_trees: 8, seed: 42, ..Default::default() };
        assert_eq!(train_random_forest(&x, &y, &h).unwrap(), train_random_forest(&x, &y, &h).unwrap());
    }

    #[test]
    fn mtry_above_width_is_config_error() {
        let (x, y) = data();
        let h = ForestHyper { mtry: Some(4), ..Default::default() };
        assert!(matches!(train_random_forest(&x, &y, &h), Err(Error::Config(_))));
    }

    #[test]
    fn probabilities_are_mean_leaf_frequencies() {
        let (x, y) = data();
        let m = train_random_forest(&x, &y, &ForestHyper { n_trees: 7, max_depth: Some(3), ..Default::default() }).unwrap();
        let ModelParams::RandomForest(rf) = &m.model else { unreachable!() };
        for r in x.iter_rows().take(10) {
            let manual = rf.trees.iter().map(|t| t.predict(r)).sum::<f64>() / 7.0;
            let p = m.proba_one(r);
            assert_eq!(p, manual);
            assert!((0.0..=1.0).contains(&p));
        }
        assert!(rf.trees.iter().flat_map(|t| t.leaves()).all(|v| (0.0..=1.0).contains(&v)));
        assert!(rf.trees.iter().all(|t| t.depth() <= 3));
    }
}
