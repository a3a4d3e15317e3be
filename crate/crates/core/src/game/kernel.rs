//! Shapley values as the solution of a Shapley-kernel weighted least-squares
//! fit over coalitions, with the efficiency constraint eliminated.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Coalition, CoalitionGame, ShapleyMethod, ShapleyResult};
use crate::error::{Error, Result};
use crate::seed::stage_rng;

pub const DEFAULT_KERNEL_RIDGE: f64 = 1e-10;

/// Largest player count for which full enumeration is allowed.
const MAX_ENUMERATED_PLAYERS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelBudget {
    /// Every coalition except the empty and grand ones.
    All,
    /// Total coalition evaluations, including the empty and grand coalitions.
    Coalitions(usize),
}

impl KernelBudget {
    /// `2M + 2048`.
    pub fn default_for(players: usize) -> Self {
        KernelBudget::Coalitions(2 * players + 2048)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut b = 1.0f64;
    for i in 0..k {
        b = b * (n - i) as f64 / (i + 1) as f64;
    }
    b
}

/// Weighted design: coalitions with their kernel weights.
struct Design {
    coalitions: Vec<Coalition>,
    weights: Vec<f64>,
}

impl Design {
    fn enumerate_all(m: usize) -> Self {
        let mut coalitions = Vec::with_capacity((1usize << m) - 2);
        let mut weights = Vec::with_capacity((1usize << m) - 2);
        for bits in 1..(1u64 << m) - 1 {
            let s = bits.count_ones() as usize;
            coalitions.push(Coalition::from_bits(m, bits));
            weights.push((m - 1) as f64 / (binomial(m, s) * s as f64 * (m - s) as f64));
        }
        Design { coalitions, weights }
    }

    /// Enumerates whole size classes from the extremes inwards while the
    /// budget covers them, then fills the rest with paired random draws.
    fn sample(m: usize, budget: usize, seed: u64) -> Self {
        // sizes 1..=ceil((m-1)/2); sizes below m/2 are paired with m - s
        let n_sizes = (m - 1).div_ceil(2);
        let n_paired = (m - 1) / 2;
        let mut size_weight: Vec<f64> = (1..=n_sizes)
            .map(|s| {
                let w = (m - 1) as f64 / (s * (m - s)) as f64;
                if s <= n_paired {
                    2.0 * w
                } else {
                    w
                }
            })
            .collect();
        let total: f64 = size_weight.iter().sum();
        size_weight.iter_mut().for_each(|w| *w /= total);

        let mut coalitions = Vec::new();
        let mut weights = Vec::new();
        let mut left = budget;
        let mut remaining = size_weight.clone();
        let mut n_full = 0;
        for s in 1..=n_sizes {
            let paired = s <= n_paired;
            let count = binomial(m, s) * if paired { 2.0 } else { 1.0 };
            if left as f64 * remaining[s - 1] / count < 1.0 - 1e-8 {
                break;
            }
            n_full += 1;
            left -= count as usize;
            let mut w = size_weight[s - 1] / binomial(m, s);
            if paired {
                w /= 2.0;
            }
            for members in combinations(m, s) {
                let c = Coalition::from_members(m, members);
                if paired {
                    coalitions.push(c.complement());
                    weights.push(w);
                }
                coalitions.push(c);
                weights.push(w);
            }
            if remaining[s - 1] < 1.0 {
                let scale = 1.0 - remaining[s - 1];
                remaining.iter_mut().for_each(|r| *r /= scale);
            }
        }

        if n_full < n_sizes && left > 0 {
            let tail = &size_weight[n_full..];
            let tail_mass: f64 = tail.iter().sum();
            let cdf: Vec<f64> = tail
                .iter()
                .scan(0.0, |acc, w| {
                    *acc += w / tail_mass;
                    Some(*acc)
                })
                .collect();
            let mut rng = stage_rng(seed, "kernel-coalitions", 0);
            let mut index: HashMap<Coalition, usize> = HashMap::new();
            let start = coalitions.len();
            let mut sampled_weight: Vec<f64> = Vec::new();
            let max_draws = left.saturating_mul(8).max(64);
            let mut draws = 0;
            while left > 0 && draws < max_draws {
                draws += 1;
                let u: f64 = rng.random();
                let k = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
                let s = n_full + k + 1;
                let c = Coalition::from_members(m, sample(&mut rng, m, s));
                let paired = s <= n_paired;
                let mut add = |c: Coalition, left: &mut usize| match index.get(&c) {
                    Some(&i) => sampled_weight[i] += 1.0,
                    None => {
                        if *left == 0 {
                            return;
                        }
                        index.insert(c.clone(), sampled_weight.len());
                        sampled_weight.push(1.0);
                        coalitions.push(c);
                        *left -= 1;
                    }
                };
                if paired {
                    let comp = c.complement();
                    add(c, &mut left);
                    add(comp, &mut left);
                } else {
                    add(c, &mut left);
                }
            }
            let sum: f64 = sampled_weight.iter().sum();
            weights.extend(sampled_weight.iter().map(|w| w * tail_mass / sum));
            debug_assert_eq!(coalitions.len() - start, weights.len() - start);
        }
        Design { coalitions, weights }
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut current: Option<Vec<usize>> = Some((0..k).collect());
    std::iter::from_fn(move || {
        let out = current.clone()?;
        let mut next = out.clone();
        let mut i = k;
        current = loop {
            if i == 0 {
                break None;
            }
            i -= 1;
            if next[i] < n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                break Some(next);
            }
        };
        Some(out)
    })
}

pub fn kernel_shap(
    game: &CoalitionGame<'_>,
    budget: KernelBudget,
    seed: u64,
    regularization: f64,
) -> Result<ShapleyResult> {
    let m = game.players();
    let before = game.evaluations();
    let empty = game.value(&Coalition::empty(m));
    let grand = game.value(&Coalition::full(m));
    let delta = grand - empty;
    let finish = |phi: Vec<f64>| ShapleyResult {
        method: ShapleyMethod::Kernel,
        phi,
        stderr: None,
        evaluations_used: game.evaluations() - before,
        seed: Some(seed),
    };
    match m {
        0 => return Ok(finish(Vec::new())),
        1 => return Ok(finish(vec![delta])),
        _ => {}
    }

    let full_count = if m < 63 { (1u64 << m) - 2 } else { u64::MAX };
    let design = match budget {
        KernelBudget::All => {
            if m > MAX_ENUMERATED_PLAYERS {
                return Err(Error::Capacity {
                    players: m,
                    cap: MAX_ENUMERATED_PLAYERS,
                });
            }
            Design::enumerate_all(m)
        }
        KernelBudget::Coalitions(n) => {
            if n < 2 * m {
                return Err(Error::Config(format!(
                    "kernel budget {n} is below 2M = {}",
                    2 * m
                )));
            }
            let samples = n - 2;
            if (samples as u64) >= full_count && m <= MAX_ENUMERATED_PLAYERS {
                Design::enumerate_all(m)
            } else {
                Design::sample(m, samples, seed)
            }
        }
    };

    let last = m - 1;
    let rows = design.coalitions.len();
    let mut x = DMatrix::<f64>::zeros(rows, last);
    let mut target = DVector::<f64>::zeros(rows);
    for (r, (c, &w)) in design.coalitions.iter().zip(&design.weights).enumerate() {
        let v = game.value(c);
        let z_last = if c.contains(last) { 1.0 } else { 0.0 };
        let sw = w.sqrt();
        for j in 0..last {
            let z = if c.contains(j) { 1.0 } else { 0.0 };
            x[(r, j)] = sw * (z - z_last);
        }
        target[r] = sw * (v - empty - z_last * delta);
    }
    let mut normal = x.tr_mul(&x);
    for j in 0..last {
        normal[(j, j)] += regularization;
    }
    let rhs = x.tr_mul(&target);
    let solution = match normal.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => normal.clone().lu().solve(&rhs).ok_or_else(|| {
            Error::Numerical(format!(
                "kernel regression system is singular ({} coalitions, {} players, ridge {regularization:e})",
                rows, m
            ))
        })?,
    };
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "kernel regression produced non-finite values ({rows} coalitions, {m} players)"
        )));
    }
    let mut phi: Vec<f64> = solution.iter().copied().collect();
    let rest: f64 = phi.iter().sum();
    phi.push(delta - rest);
    Ok(finish(phi))
}
