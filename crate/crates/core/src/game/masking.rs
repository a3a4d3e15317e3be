use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{CharacteristicFunction, Coalition, CoalitionGame};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::models::{MaskedPlan, MaskedRow, ModelParams, TrainedModel};
use crate::seed::stage_rng;

/// Background rows drawn from the training set when none are configured.
pub const DEFAULT_BACKGROUND_SIZE: usize = 100;

/// Anything that yields a class-1 probability for a masked composite row.
pub trait ProbabilityModel: Send + Sync {
    fn n_features(&self) -> usize;
    fn proba_masked(&self, row: &MaskedRow<'_>) -> f64;

    /// Scorer for one instance against a fixed background. Models may
    /// override this to precompute per-instance work.
    fn masked_scorer<'a>(&'a self, instance: &[f64], background: &Matrix) -> Box<dyn MaskedScorer + 'a> {
        Box::new(RowByRow {
            model: self,
            instance: instance.to_vec(),
            background: background.clone(),
        })
    }
}

/// Mean class-1 probability over the background rows, with the instance's
/// values on the features where `keep` is set.
pub trait MaskedScorer: Send + Sync {
    fn mean_proba(&self, keep: &[bool]) -> f64;
}

struct RowByRow<'a, M: ?Sized> {
    model: &'a M,
    instance: Vec<f64>,
    background: Matrix,
}

impl<M: ProbabilityModel + ?Sized> MaskedScorer for RowByRow<'_, M> {
    fn mean_proba(&self, keep: &[bool]) -> f64 {
        self.background
            .iter_rows()
            .map(|b| {
                self.model.proba_masked(&MaskedRow {
                    instance: &self.instance,
                    background: b,
                    keep,
                })
            })
            .sum::<f64>()
            / self.background.rows() as f64
    }
}

impl MaskedScorer for MaskedPlan<'_> {
    fn mean_proba(&self, keep: &[bool]) -> f64 {
        MaskedPlan::mean_proba(self, keep)
    }
}

impl ProbabilityModel for TrainedModel {
    fn n_features(&self) -> usize {
        self.feature_count
    }

    #[inline]
    fn proba_masked(&self, row: &MaskedRow<'_>) -> f64 {
        self.proba_one(row)
    }

    fn masked_scorer<'a>(&'a self, instance: &[f64], background: &Matrix) -> Box<dyn MaskedScorer + 'a> {
        match &self.model {
            ModelParams::GradientBoostedTrees(m) => Box::new(m.masked_plan(instance, background)),
            _ => Box::new(RowByRow {
                model: self,
                instance: instance.to_vec(),
                background: background.clone(),
            }),
        }
    }
}

/// Reference point subtracted from the expected prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum Baseline {
    /// Mean prediction over the background rows; makes `v(∅) = 0`.
    #[default]
    MeanBackground,
    /// A fixed probability, e.g. 0.5 for an uninformed classifier.
    Constant(f64),
}

/// `E_b[p₁(x_S ⊕ b_{N∖S})]` over a frozen background, cached per coalition.
/// Shared by the class-0 and class-1 games of one instance.
pub struct MaskedExpectation<'a> {
    scorer: Box<dyn MaskedScorer + 'a>,
    players: usize,
    background_mean: f64,
    instance_proba: f64,
    cache: Mutex<HashMap<Coalition, f64>>,
}

impl<'a> MaskedExpectation<'a> {
    pub fn new(model: &'a dyn ProbabilityModel, instance: &[f64], background: &Matrix) -> Result<Self> {
        let width = model.n_features();
        if instance.len() != width {
            return Err(Error::Shape {
                expected: width,
                actual: instance.len(),
            });
        }
        if background.cols() != width {
            return Err(Error::Shape {
                expected: width,
                actual: background.cols(),
            });
        }
        if background.rows() == 0 {
            return Err(Error::Config("background set must contain at least one row".into()));
        }
        let scorer = model.masked_scorer(instance, background);
        let background_mean = scorer.mean_proba(&vec![false; width]);
        let keep_all = vec![true; width];
        let instance_proba = model.proba_masked(&MaskedRow {
            instance,
            background: instance,
            keep: &keep_all,
        });
        Ok(MaskedExpectation {
            scorer,
            players: width,
            background_mean,
            instance_proba,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn background_mean(&self) -> f64 {
        self.background_mean
    }

    pub fn instance_proba(&self) -> f64 {
        self.instance_proba
    }

    /// Mean class-1 probability with the instance's values on `s`.
    pub fn mean_proba(&self, s: &Coalition) -> f64 {
        if s.is_empty() {
            return self.background_mean;
        }
        if s.len() == self.players() {
            return self.instance_proba;
        }
        if let Some(&v) = self.cache.lock().expect("cache lock").get(s) {
            return v;
        }
        let mut keep = vec![false; self.players()];
        s.fill_mask(&mut keep);
        let v = self.scorer.mean_proba(&keep);
        self.cache.lock().expect("cache lock").insert(s.clone(), v);
        v
    }

    /// Value function for `target_class`. For binary models `p₀ = 1 - p₁`, so
    /// under the mean-background baseline the class-0 game is the exact
    /// negation of the class-1 game.
    pub fn game(self: &Arc<Self>, target_class: u8, baseline: Baseline) -> Result<CoalitionGame<'a>> {
        if target_class > 1 {
            return Err(Error::Config(format!("target class {target_class} is not 0 or 1")));
        }
        Ok(CoalitionGame::new(MaskingGame {
            expectation: Arc::clone(self),
            target_class,
            baseline,
        }))
    }
}

struct MaskingGame<'a> {
    expectation: Arc<MaskedExpectation<'a>>,
    target_class: u8,
    baseline: Baseline,
}

impl CharacteristicFunction for MaskingGame<'_> {
    fn players(&self) -> usize {
        self.expectation.players()
    }

    fn value(&self, s: &Coalition) -> f64 {
        let m1 = self.expectation.mean_proba(s);
        match (self.baseline, self.target_class) {
            (Baseline::MeanBackground, 1) => m1 - self.expectation.background_mean,
            (Baseline::MeanBackground, _) => self.expectation.background_mean - m1,
            (Baseline::Constant(c), 1) => m1 - c,
            (Baseline::Constant(c), _) => (1.0 - m1) - c,
        }
    }
}

/// `v(S) = mean_b p_c(x_S ⊕ b) - mean_b p_c(b)` over the given background rows.
pub fn masking_game<'a>(
    model: &'a dyn ProbabilityModel,
    instance: &[f64],
    background: &Matrix,
    target_class: u8,
) -> Result<CoalitionGame<'a>> {
    Arc::new(MaskedExpectation::new(model, instance, background)?).game(target_class, Baseline::MeanBackground)
}

/// Up to `size` distinct rows of `x`, drawn uniformly without replacement.
pub fn sample_background(x: &Matrix, size: usize, seed: u64) -> Result<Matrix> {
    if size == 0 {
        return Err(Error::Config("background size must be positive".into()));
    }
    if x.rows() == 0 {
        return Err(Error::EmptyDataset("cannot sample a background from zero rows".into()));
    }
    let take = size.min(x.rows());
    let mut rng = stage_rng(seed, "background", 0);
    let idx: Vec<usize> = sample(&mut rng, x.rows(), take).into_vec();
    Ok(x.select_rows(&idx))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Linear(Vec<f64>);

    impl ProbabilityModel for Linear {
        fn n_features(&self) -> usize {
            self.0.len()
        }
        fn proba_masked(&self, row: &MaskedRow<'_>) -> f64 {
            use crate::models::FeatureSource;
            self.0.iter().enumerate().map(|(j, w)| w * row.value(j)).sum()
        }
    }

    struct Constant;

    impl ProbabilityModel for Constant {
        fn n_features(&self) -> usize {
            3
        }
        fn proba_masked(&self, _: &MaskedRow<'_>) -> f64 {
            0.7
        }
    }

    #[test]
    fn constant_model_game_is_zero() {
        let bg = Matrix::from_rows(&[[1.0, 2.0, 3.0], [0.0, 0.0, 1.0]]).unwrap();
        let g = masking_game(&Constant, &[5.0, 5.0, 5.0], &bg, 1).unwrap();
        for bits in 0..8 {
            assert_eq!(g.value(&Coalition::from_bits(3, bits)), 0.0);
        }
    }

    #[test]
    fn linear_model_single_background() {
        let w = vec![0.1, -0.2, 0.05];
        let model = Linear(w.clone());
        let x = [1.0, 2.0, 3.0];
        let b = [0.5, -1.0, 1.0];
        let bg = Matrix::from_rows(&[b]).unwrap();
        let g = masking_game(&model, &x, &bg, 1).unwrap();
        for bits in 0..8u64 {
            let s = Coalition::from_bits(3, bits);
            let want: f64 = s.members().map(|i| w[i] * (x[i] - b[i])).sum();
            assert!((g.value(&s) - want).abs() < 1e-15);
        }
        let full = g.value(&Coalition::full(3));
        let p_inst: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
        let p_bg: f64 = w.iter().zip(&b).map(|(a, b)| a * b).sum();
        assert_eq!(full, p_inst - p_bg);
    }

    #[test]
    fn class_zero_is_negated_class_one() {
        let model = Linear(vec![0.1, 0.2, 0.3]);
        let bg = Matrix::from_rows(&[[0.1, 0.5, 0.2], [0.9, 0.3, 0.4]]).unwrap();
        let e = Arc::new(MaskedExpectation::new(&model, &[0.3, 0.3, 0.9], &bg).unwrap());
        let g1 = e.game(1, Baseline::MeanBackground).unwrap();
        let g0 = e.game(0, Baseline::MeanBackground).unwrap();
        for bits in 0..8 {
            let s = Coalition::from_bits(3, bits);
            assert_eq!(g0.value(&s), -g1.value(&s));
        }
        assert!(e.game(2, Baseline::MeanBackground).is_err());
    }

    #[test]
    fn shape_and_background_errors() {
        let bg = Matrix::from_rows(&[[0.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(masking_game(&Constant, &[1.0, 2.0], &bg, 1), Err(Error::Shape { .. })));
        assert!(matches!(masking_game(&Constant, &[1.0; 3], &Matrix::empty(3), 1), Err(Error::Config(_))));
    }

    #[test]
    fn tree_plan_matches_row_by_row() {
        use crate::models::{train, Hyperparameters, ModelKind};
        use rand::Rng;
        let mut rng = crate::seed::rng_from_seed(3);
        let rows: Vec<Vec<f64>> = (0..80).map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let y: Vec<u8> = rows.iter().map(|r| u8::from(r[0] + r[1] * r[2] > 0.1)).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let mut hyper = Hyperparameters::default();
        hyper.gbt.n_rounds = 30;
        let model = train(ModelKind::GradientBoostedTrees, &hyper, &x, &y).unwrap();
        let bg = x.select_rows(&(0..20).collect::<Vec<_>>());
        let plan = model.masked_scorer(x.row(40), &bg);
        let plain = RowByRow {
            model: &model,
            instance: x.row(40).to_vec(),
            background: bg.clone(),
        };
        for bits in 0..64 {
            let mut keep = vec![false; 6];
            Coalition::from_bits(6, bits).fill_mask(&mut keep);
            assert!((plan.mean_proba(&keep) - plain.mean_proba(&keep)).abs() < 1e-12);
        }
    }

    #[test]
    fn background_sampling_is_seeded_and_distinct() {
        let x = Matrix::from_rows(&(0..50).map(|i| [i as f64]).collect::<Vec<_>>()).unwrap();
        let a = sample_background(&x, 20, 4).unwrap();
        assert_eq!(a, sample_background(&x, 20, 4).unwrap());
        let mut v = a.column(0);
        v.sort_by(f64::total_cmp);
        v.dedup();
        assert_eq!(v.len(), 20);
        assert_eq!(sample_background(&x, 500, 4).unwrap().rows(), 50);
    }
}
