//! Cooperative games over feature-players and Shapley-value estimators.

mod coalition;
mod exact;
mod kernel;
mod masking;
mod partition;
mod sampling;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

pub use coalition::Coalition;
pub use exact::{exact_shapley, exact_shapley_with_cap, shapley_weight, DEFAULT_EXACT_CAP};
pub use kernel::{kernel_shap, KernelBudget, DEFAULT_KERNEL_RIDGE};
pub use masking::{
    masking_game, sample_background, Baseline, MaskedExpectation, MaskedScorer, ProbabilityModel, DEFAULT_BACKGROUND_SIZE,
};
pub use partition::{partition_shapley, Partition};
pub use sampling::sampled_shapley;

/// A characteristic function `v: 2^N -> R`.
pub trait CharacteristicFunction: Send + Sync {
    fn players(&self) -> usize;
    fn value(&self, coalition: &Coalition) -> f64;
}

struct FnGame<F> {
    players: usize,
    f: F,
}

impl<F: Fn(&Coalition) -> f64 + Send + Sync> CharacteristicFunction for FnGame<F> {
    fn players(&self) -> usize {
        self.players
    }

    fn value(&self, coalition: &Coalition) -> f64 {
        (self.f)(coalition)
    }
}

/// A game with per-instance value caching and an evaluation counter.
///
/// The counter records how many distinct coalitions were handed to the
/// underlying characteristic function; cache hits are free.
pub struct CoalitionGame<'a> {
    inner: Box<dyn CharacteristicFunction + 'a>,
    cache: Mutex<HashMap<Coalition, f64>>,
    evaluations: AtomicU64,
}

impl<'a> CoalitionGame<'a> {
    pub fn new<C: CharacteristicFunction + 'a>(f: C) -> Self {
        CoalitionGame {
            inner: Box::new(f),
            cache: Mutex::new(HashMap::new()),
            evaluations: AtomicU64::new(0),
        }
    }

    pub fn from_fn<F>(players: usize, f: F) -> Self
    where
        F: Fn(&Coalition) -> f64 + Send + Sync + 'a,
    {
        CoalitionGame::new(FnGame { players, f })
    }

    /// Game whose value on the coalition with bitmask `s` is `table[s]`.
    pub fn from_table(players: usize, table: Vec<f64>) -> Self {
        assert!(players < 64 && table.len() == 1usize << players, "table size must be 2^players");
        CoalitionGame::from_fn(players, move |c| table[c.to_bits() as usize])
    }

    pub fn players(&self) -> usize {
        self.inner.players()
    }

    pub fn value(&self, coalition: &Coalition) -> f64 {
        if let Some(&v) = self.cache.lock().expect("cache lock").get(coalition) {
            return v;
        }
        let v = self.inner.value(coalition);
        let mut cache = self.cache.lock().expect("cache lock");
        if cache.insert(coalition.clone(), v).is_none() {
            self.evaluations.fetch_add(1, Ordering::Relaxed);
        }
        v
    }

    /// Distinct coalitions evaluated so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn grand_coalition(&self) -> Coalition {
        Coalition::full(self.players())
    }

    pub fn empty_coalition(&self) -> Coalition {
        Coalition::empty(self.players())
    }
}

impl std::fmt::Debug for CoalitionGame<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoalitionGame")
            .field("players", &self.players())
            .field("evaluations", &self.evaluations())
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShapleyMethod {
    Exact,
    Permutation,
    Kernel,
    Partition,
}

/// Shapley values of one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyResult {
    pub method: ShapleyMethod,
    /// One value per player, or per group for partition results.
    pub phi: Vec<f64>,
    /// Standard error per coordinate, for sampling estimators.
    pub stderr: Option<Vec<f64>>,
    pub evaluations_used: u64,
    pub seed: Option<u64>,
}

impl ShapleyResult {
    pub fn total(&self) -> f64 {
        self.phi.iter().sum()
    }

    pub fn to_json(&self) -> crate::Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_counts_distinct_coalitions() {
        let g = CoalitionGame::from_fn(3, |c| c.len() as f64);
        let s = Coalition::from_members(3, [0, 2]);
        assert_eq!(g.value(&s), 2.0);
        assert_eq!(g.value(&s), 2.0);
        assert_eq!(g.value(&g.grand_coalition()), 3.0);
        assert_eq!(g.evaluations(), 2);
    }

    #[test]
    fn result_json_fields() {
        let r = ShapleyResult {
            method: ShapleyMethod::Kernel,
            phi: vec![0.5, -0.25],
            stderr: None,
            evaluations_used: 4,
            seed: Some(9),
        };
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["method"], "Kernel");
        assert_eq!(v["phi"][1], -0.25);
        assert_eq!(v["evaluations_used"], 4);
        assert_eq!(v["seed"], 9);
    }
}
