//! Second-order gradient boosting on the logistic loss with histogram splits.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{midpoint, FeatureSource, MaskedRow, Node, Tree};
use super::{mean_log_loss, sigmoid, validate_training, ModelParams, TrainedModel, TrainingMeta, MODEL_FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::stage_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtHyper {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Minimum hessian mass per child.
    pub min_child_weight: f64,
    /// Upper bound on histogram bins per feature.
    pub max_bins: usize,
    /// Row fraction sampled per round.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbtHyper {
    fn default() -> Self {
        GbtHyper {
            n_rounds: 200,
            learning_rate: 0.1,
            max_depth: 4,
            lambda: 1.0,
            min_child_weight: 1.0,
            max_bins: 256,
            subsample: 1.0,
            seed: 0,
        }
    }
}

/// Additive log-odds model: `sigmoid(base_margin + Σ tree(x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostedTrees {
    pub base_margin: f64,
    pub trees: Vec<Tree>,
}

impl GradientBoostedTrees {
    #[inline]
    pub fn margin<F: FeatureSource + ?Sized>(&self, row: &F) -> f64 {
        self.trees.iter().fold(self.base_margin, |acc, t| acc + t.predict(row))
    }

    #[inline]
    pub fn proba<F: FeatureSource + ?Sized>(&self, row: &F) -> f64 {
        sigmoid(self.margin(row))
    }

    pub(crate) fn masked_plan(&self, instance: &[f64], background: &Matrix) -> MaskedPlan<'_> {
        let width = instance.len();
        let at_instance: Vec<f64> = self.trees.iter().map(|t| t.predict(instance)).collect();
        let instance_margin = at_instance.iter().fold(self.base_margin, |acc, v| acc + v);
        let mut features = Vec::new();
        let rows = background
            .iter_rows()
            .map(|b| {
                let mut margin = self.base_margin;
                let mut varying = Vec::new();
                let mut per_feature: Vec<Vec<u32>> = vec![Vec::new(); width];
                for (t, tree) in self.trees.iter().enumerate() {
                    let vb = tree.predict(b);
                    margin += vb;
                    tree.divergent_features(instance, b, &mut features);
                    if !features.is_empty() {
                        for &j in &features {
                            per_feature[j].push(varying.len() as u32);
                        }
                        varying.push(Varying {
                            tree: t,
                            features: features.clone(),
                            at_background: vb,
                            at_instance: at_instance[t],
                        });
                    }
                }
                let mut offsets = Vec::with_capacity(width + 1);
                offsets.push(0u32);
                let mut index = Vec::new();
                for list in per_feature {
                    index.extend(list);
                    offsets.push(index.len() as u32);
                }
                RowPlan {
                    background: b.to_vec(),
                    background_margin: margin,
                    varying,
                    offsets,
                    index,
                }
            })
            .collect();
        MaskedPlan {
            model: self,
            instance: instance.to_vec(),
            instance_margin,
            rows,
        }
    }
}

/// Precomputed tree outcomes of one instance against each background row.
///
/// A tree's output on a masked composite can differ from its output on the
/// background row (or the instance) only if the coalition touches a feature
/// at a split where the two rows part ways. Each coalition therefore starts
/// from the nearer of the two precomputed margins and revisits just the trees
/// indexed under the features it changes.
pub(crate) struct MaskedPlan<'a> {
    model: &'a GradientBoostedTrees,
    instance: Vec<f64>,
    instance_margin: f64,
    rows: Vec<RowPlan>,
}

struct RowPlan {
    background: Vec<f64>,
    background_margin: f64,
    varying: Vec<Varying>,
    /// CSR index: feature `j` -> positions in `varying` at `index[offsets[j]..offsets[j + 1]]`.
    offsets: Vec<u32>,
    index: Vec<u32>,
}

struct Varying {
    tree: usize,
    features: Vec<usize>,
    at_background: f64,
    at_instance: f64,
}

impl MaskedPlan<'_> {
    /// Mean class-1 probability over background rows with `instance` values
    /// on `keep`.
    pub(crate) fn mean_proba(&self, keep: &[bool]) -> f64 {
        let kept = keep.iter().filter(|&&k| k).count();
        // walk whichever side of the coalition is smaller
        let from_instance = 2 * kept > keep.len();
        let changed: Vec<usize> = (0..keep.len()).filter(|&j| keep[j] != from_instance).collect();
        let mut marked: Vec<bool> = Vec::new();
        let mut total = 0.0;
        for plan in &self.rows {
            marked.clear();
            marked.resize(plan.varying.len(), false);
            for &j in &changed {
                for &v in &plan.index[plan.offsets[j] as usize..plan.offsets[j + 1] as usize] {
                    marked[v as usize] = true;
                }
            }
            let mut margin = if from_instance {
                self.instance_margin
            } else {
                plan.background_margin
            };
            for (var, _) in plan.varying.iter().zip(&marked).filter(|(_, &m)| m) {
                let n_kept = var.features.iter().filter(|&&j| keep[j]).count();
                let value = if n_kept == 0 {
                    var.at_background
                } else if n_kept == var.features.len() {
                    var.at_instance
                } else {
                    self.model.trees[var.tree].predict(&MaskedRow {
                        instance: &self.instance,
                        background: &plan.background,
                        keep,
                    })
                };
                margin += value - if from_instance { var.at_instance } else { var.at_background };
            }
            total += sigmoid(margin);
        }
        total / self.rows.len() as f64
    }
}

/// Per-feature cut points; bin `b` holds values in `(cuts[b-1], cuts[b]]`.
struct Binned {
    cuts: Vec<Vec<f64>>,
    /// Column-major bin indices.
    bins: Vec<Vec<u16>>,
}

impl Binned {
    fn new(x: &Matrix, max_bins: usize) -> Self {
        let mut cuts = Vec::with_capacity(x.cols());
        let mut bins = Vec::with_capacity(x.cols());
        for j in 0..x.cols() {
            let mut col = x.column(j);
            col.sort_by(f64::total_cmp);
            let mut uniq = col.clone();
            uniq.dedup();
            let c: Vec<f64> = if uniq.len() <= max_bins {
                uniq.windows(2).map(|w| midpoint(w[0], w[1])).collect()
            } else {
                let mut c = Vec::with_capacity(max_bins);
                let n = col.len();
                for q in 1..max_bins {
                    let k = q * n / max_bins;
                    if k == 0 || k >= n || col[k - 1] == col[k] {
                        continue;
                    }
                    let t = midpoint(col[k - 1], col[k]);
                    if c.last().is_none_or(|&last| t > last) {
                        c.push(t);
                    }
                }
                c
            };
            let b = (0..x.rows())
                .map(|i| c.partition_point(|&cut| cut < x.get(i, j)) as u16)
                .collect();
            cuts.push(c);
            bins.push(b);
        }
        Binned { cuts, bins }
    }
}

struct Builder<'a> {
    data: &'a Binned,
    grad: &'a [f64],
    hess: &'a [f64],
    hyper: &'a GbtHyper,
    hist: Vec<(f64, f64)>,
}

impl Builder<'_> {
    fn leaf_weight(&self, g: f64, h: f64) -> f64 {
        -g / (h + self.hyper.lambda)
    }

    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.hyper.lambda)
    }

    fn grow(&mut self, rows: &mut [usize], depth: usize, tree: &mut Tree) -> u32 {
        let g: f64 = rows.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = rows.iter().map(|&i| self.hess[i]).sum();
        let leaf = Node::Leaf {
            value: self.hyper.learning_rate * self.leaf_weight(g, h),
        };
        if depth >= self.hyper.max_depth || rows.len() < 2 {
            return tree.push(leaf);
        }
        let parent = self.score(g, h);
        let mut best: Option<(f64, usize, usize)> = None;
        for (j, cuts) in self.data.cuts.iter().enumerate() {
            if cuts.is_empty() {
                continue;
            }
            let nb = cuts.len() + 1;
            self.hist.clear();
            self.hist.resize(nb, (0.0, 0.0));
            let col = &self.data.bins[j];
            for &i in rows.iter() {
                let e = &mut self.hist[col[i] as usize];
                e.0 += self.grad[i];
                e.1 += self.hess[i];
            }
            let (mut gl, mut hl) = (0.0, 0.0);
            for b in 0..nb - 1 {
                gl += self.hist[b].0;
                hl += self.hist[b].1;
                let (gr, hr) = (g - gl, h - hl);
                if hl < self.hyper.min_child_weight || hr < self.hyper.min_child_weight {
                    continue;
                }
                let gain = 0.5 * (self.score(gl, hl) + self.score(gr, hr) - parent);
                if gain > 0.0 && best.is_none_or(|(bg, _, _)| gain > bg) {
                    best = Some((gain, j, b));
                }
            }
        }
        let Some((_, feature, bin)) = best else {
            return tree.push(leaf);
        };
        let col = &self.data.bins[feature];
        let mut at = 0;
        for k in 0..rows.len() {
            if (col[rows[k]] as usize) <= bin {
                rows.swap(at, k);
                at += 1;
            }
        }
        let id = tree.push(Node::Split {
            feature,
            threshold: self.data.cuts[feature][bin],
            left: 0,
            right: 0,
        });
        let (l, r) = rows.split_at_mut(at);
        let left = self.grow(l, depth + 1, tree);
        let right = self.grow(r, depth + 1, tree);
        if let Node::Split { left: a, right: b, .. } = &mut tree.nodes[id as usize] {
            *a = left;
            *b = right;
        }
        id
    }
}

fn scale_leaves(tree: &mut Tree, factor: f64) {
    for n in tree.nodes.iter_mut() {
        if let Node::Leaf { value } = n {
            *value *= factor;
        }
    }
}

/// Prior log-odds `log(p / (1 - p))` of the mean label, clamped away from 0 and 1.
pub(crate) fn prior_margin(y: &[u8]) -> f64 {
    let p = y.iter().map(|&v| f64::from(v)).sum::<f64>() / y.len() as f64;
    let p = p.clamp(1e-15, 1.0 - 1e-15);
    (p / (1.0 - p)).ln()
}

/// Each round fits a depth-limited tree to the logistic gradients/hessians,
/// with leaf weight `-G/(H+λ)` and gain
/// `½[G_L²/(H_L+λ) + G_R²/(H_R+λ) - G²/(H+λ)]`. If a round would raise the
/// training loss its leaves are halved until it does not.
pub fn train_gbt(x: &Matrix, y: &[u8], hyper: &GbtHyper) -> Result<TrainedModel> {
    validate_training(x, y)?;
    if !(hyper.learning_rate > 0.0) {
        return Err(Error::Config("learning_rate must be positive".into()));
    }
    if !(hyper.lambda >= 0.0) || hyper.max_bins < 2 || hyper.max_bins > u16::MAX as usize {
        return Err(Error::Config("lambda must be >= 0 and max_bins in 2..=65535".into()));
    }
    if !(hyper.subsample > 0.0 && hyper.subsample <= 1.0) {
        return Err(Error::Config("subsample must lie in (0, 1]".into()));
    }
    let n = x.rows();
    let data = Binned::new(x, hyper.max_bins);
    let base_margin = prior_margin(y);
    let mut margin = vec![base_margin; n];
    let mut loss = mean_log_loss(&margin, y);
    let mut trace = vec![loss];
    let mut trees = Vec::with_capacity(hyper.n_rounds);
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut rng = stage_rng(hyper.seed, "gbt-subsample", 0);
    let mut candidate = vec![0.0; n];

    for _ in 0..hyper.n_rounds {
        for i in 0..n {
            let p = sigmoid(margin[i]);
            grad[i] = p - f64::from(y[i]);
            hess[i] = (p * (1.0 - p)).max(1e-16);
        }
        let mut rows: Vec<usize> = if hyper.subsample < 1.0 {
            (0..n).filter(|_| rng.random_bool(hyper.subsample)).collect()
        } else {
            (0..n).collect()
        };
        if rows.is_empty() {
            rows.push(rng.random_range(0..n));
        }
        let mut builder = Builder {
            data: &data,
            grad: &grad,
            hess: &hess,
            hyper,
            hist: Vec::new(),
        };
        let mut tree = Tree::default();
        builder.grow(&mut rows, 0, &mut tree);

        let update: Vec<f64> = x.iter_rows().map(|r| tree.predict(r)).collect();
        let mut factor = 1.0;
        let mut new_loss = f64::INFINITY;
        for _ in 0..60 {
            for i in 0..n {
                candidate[i] = margin[i] + factor * update[i];
            }
            new_loss = mean_log_loss(&candidate, y);
            if new_loss <= loss {
                break;
            }
            factor *= 0.5;
        }
        if new_loss > loss {
            factor = 0.0;
            new_loss = loss;
            candidate.copy_from_slice(&margin);
        }
        if factor != 1.0 {
            scale_leaves(&mut tree, factor);
        }
        std::mem::swap(&mut margin, &mut candidate);
        loss = new_loss;
        trace.push(loss);
        trees.push(tree);
    }

    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        feature_count: x.cols(),
        meta: TrainingMeta {
            seed: hyper.seed,
            hyperparameters: serde_json::to_value(hyper)?,
            loss_trace: trace,
            converged: true,
        },
        model: ModelParams::GradientBoostedTrees(GradientBoostedTrees { base_margin, trees }),
    })
}
