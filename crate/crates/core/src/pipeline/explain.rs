use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::game::{
    exact_shapley, kernel_shap, partition_shapley, sampled_shapley, Baseline, CoalitionGame, KernelBudget,
    MaskedExpectation, Partition, ProbabilityModel, ShapleyMethod, ShapleyResult, DEFAULT_KERNEL_RIDGE,
};
use crate::matrix::Matrix;
use crate::seed::derive_seed;

/// Estimator run on every per-instance, per-class game.
#[derive(Debug, Clone)]
pub enum Estimator {
    Exact,
    Permutation { n_permutations: usize },
    Kernel { budget: KernelBudget, ridge: f64 },
    Partition(Partition),
}

impl Estimator {
    /// Kernel estimator with the default `2M + 2048` coalition budget.
    pub fn kernel_default(players: usize) -> Self {
        Estimator::Kernel {
            budget: KernelBudget::default_for(players),
            ridge: DEFAULT_KERNEL_RIDGE,
        }
    }

    pub fn method(&self) -> ShapleyMethod {
        match self {
            Estimator::Exact => ShapleyMethod::Exact,
            Estimator::Permutation { .. } => ShapleyMethod::Permutation,
            Estimator::Kernel { .. } => ShapleyMethod::Kernel,
            Estimator::Partition(_) => ShapleyMethod::Partition,
        }
    }

    fn budget(&self) -> Option<u64> {
        match self {
            Estimator::Permutation { n_permutations } => Some(*n_permutations as u64),
            Estimator::Kernel {
                budget: KernelBudget::Coalitions(n),
                ..
            } => Some(*n as u64),
            _ => None,
        }
    }

    fn run(&self, game: &CoalitionGame<'_>, seed: u64) -> Result<ShapleyResult> {
        match self {
            Estimator::Exact => exact_shapley(game),
            Estimator::Permutation { n_permutations } => sampled_shapley(game, *n_permutations, seed),
            Estimator::Kernel { budget, ridge } => kernel_shap(game, *budget, seed, *ridge),
            Estimator::Partition(p) => partition_shapley(game, p),
        }
    }
}

/// Attributions for every test instance, feature (or group) and class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionMatrix {
    pub method: ShapleyMethod,
    /// Permutations or coalitions per game; `None` for enumerating methods.
    pub budget: Option<u64>,
    pub seed: u64,
    pub background_size: usize,
    pub instance_ids: Vec<String>,
    /// Feature names, or group names for partition attributions.
    pub player_names: Vec<String>,
    /// Game evaluations per instance and class.
    pub evaluations: Vec<[u64; 2]>,
    /// Flattened `[instance][player][class]`.
    values: Vec<f64>,
}

impl AttributionMatrix {
    /// Builds a matrix from per-class value rows (`class0[i]`, `class1[i]`).
    pub fn from_classes(
        instance_ids: Vec<String>,
        player_names: Vec<String>,
        class0: &Matrix,
        class1: &Matrix,
    ) -> Result<Self> {
        let n = instance_ids.len();
        let m = player_names.len();
        for c in [class0, class1] {
            if c.rows() != n || c.cols() != m {
                return Err(Error::Shape {
                    expected: n * m,
                    actual: c.rows() * c.cols(),
                });
            }
        }
        if !class0.is_finite() || !class1.is_finite() {
            return Err(Error::Numerical("attributions must be finite".into()));
        }
        let mut values = Vec::with_capacity(n * m * 2);
        for i in 0..n {
            for j in 0..m {
                values.push(class0.get(i, j));
                values.push(class1.get(i, j));
            }
        }
        Ok(AttributionMatrix {
            method: ShapleyMethod::Exact,
            budget: None,
            seed: 0,
            background_size: 0,
            instance_ids,
            player_names,
            evaluations: vec![[0, 0]; n],
            values,
        })
    }

    /// Binary-complementary matrix: class 0 is the negation of `class1`.
    pub fn from_class1(instance_ids: Vec<String>, player_names: Vec<String>, class1: &Matrix) -> Result<Self> {
        let neg = Matrix::from_vec(
            class1.rows(),
            class1.cols(),
            class1.as_slice().iter().map(|v| -v).collect(),
        )?;
        Self::from_classes(instance_ids, player_names, &neg, class1)
    }

    pub fn n_instances(&self) -> usize {
        self.instance_ids.len()
    }

    pub fn n_players(&self) -> usize {
        self.player_names.len()
    }

    #[inline]
    pub fn value(&self, instance: usize, player: usize, class: usize) -> f64 {
        self.values[(instance * self.n_players() + player) * 2 + class]
    }

    /// Attributions of one instance toward `class`.
    pub fn class_row(&self, instance: usize, class: usize) -> Vec<f64> {
        (0..self.n_players()).map(|j| self.value(instance, j, class)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: AttributionMatrix = serde_json::from_str(text)?;
        if m.values.len() != m.n_instances() * m.n_players() * 2 || m.evaluations.len() != m.n_instances() {
            return Err(Error::Shape {
                expected: m.n_instances() * m.n_players() * 2,
                actual: m.values.len(),
            });
        }
        Ok(m)
    }

    /// Long-format CSV: `instance_id,class,player,value`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["instance_id", "class", "player", "value"]).map_err(Error::csv)?;
        for (i, id) in self.instance_ids.iter().enumerate() {
            for class in 0..2 {
                for (j, name) in self.player_names.iter().enumerate() {
                    let v = format!("{}", self.value(i, j, class));
                    w.write_record([id.as_str(), if class == 0 { "0" } else { "1" }, name, &v])
                        .map_err(Error::csv)?;
                }
            }
        }
        w.flush().map_err(|e| Error::Validation(format!("csv write failed: {e}")))?;
        Ok(())
    }
}

/// Explains every row of `test` with a masking game per class.
///
/// Instance `i` uses the sub-seed `derive_seed(seed, "explain", i)` for both
/// classes, so results do not depend on how instances are scheduled.
pub fn explain_dataset(
    model: &dyn ProbabilityModel,
    test: &LabeledDataset,
    background: &Matrix,
    estimator: &Estimator,
    baseline: Baseline,
    seed: u64,
) -> Result<AttributionMatrix> {
    let m = test.n_features();
    if model.n_features() != m {
        return Err(Error::Shape {
            expected: model.n_features(),
            actual: m,
        });
    }
    if let Estimator::Partition(p) = estimator {
        if p.players() != m {
            return Err(Error::Partition(format!(
                "partition covers {} features but the data has {m}",
                p.players()
            )));
        }
    }
    let player_names: Vec<String> = match estimator {
        Estimator::Partition(p) => p.names().to_vec(),
        _ => test.schema.names().map(str::to_owned).collect(),
    };

    let per_instance: Vec<Result<([ShapleyResult; 2], usize)>> = (0..test.len())
        .into_par_iter()
        .map(|i| {
            let expectation = Arc::new(MaskedExpectation::new(model, test.x.row(i), background)?);
            let sub_seed = derive_seed(seed, "explain", i as u64);
            let c1 = estimator.run(&expectation.game(1, baseline)?, sub_seed)?;
            let c0 = estimator.run(&expectation.game(0, baseline)?, sub_seed)?;
            Ok(([c0, c1], i))
        })
        .collect();

    let p = player_names.len();
    let mut values = Vec::with_capacity(test.len() * p * 2);
    let mut evaluations = Vec::with_capacity(test.len());
    for r in per_instance {
        let ([c0, c1], i) = r?;
        for j in 0..p {
            let (a, b) = (c0.phi[j], c1.phi[j]);
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite attribution for instance {} feature {j}",
                    test.company_ids[i]
                )));
            }
            values.push(a);
            values.push(b);
        }
        evaluations.push([c0.evaluations_used, c1.evaluations_used]);
    }
    let instance_ids = test
        .company_ids
        .iter()
        .zip(&test.years)
        .map(|(c, y)| format!("{c}:{y}"))
        .collect();
    Ok(AttributionMatrix {
        method: estimator.method(),
        budget: estimator.budget(),
        seed,
        background_size: background.rows(),
        instance_ids,
        player_names,
        evaluations,
        values,
    })
}
