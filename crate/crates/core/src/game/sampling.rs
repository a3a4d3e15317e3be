use rand::seq::SliceRandom;

use super::{Coalition, CoalitionGame, ShapleyMethod, ShapleyResult};
use crate::error::{Error, Result};
use crate::seed::stage_rng;

/// Monte Carlo over uniformly random join orders. Permutation `p` draws its
/// order from a stream derived from `(seed, p)`.
pub fn sampled_shapley(game: &CoalitionGame<'_>, n_permutations: usize, seed: u64) -> Result<ShapleyResult> {
    if n_permutations == 0 {
        return Err(Error::Config("n_permutations must be at least 1".into()));
    }
    let m = game.players();
    let before = game.evaluations();
    let mut mean = vec![0.0; m];
    let mut m2 = vec![0.0; m];
    let mut order: Vec<usize> = (0..m).collect();
    let empty_value = game.value(&Coalition::empty(m));

    for p in 0..n_permutations {
        let mut rng = stage_rng(seed, "permutation", p as u64);
        order.sort_unstable();
        order.shuffle(&mut rng);
        let mut s = Coalition::empty(m);
        let mut prev = empty_value;
        let count = (p + 1) as f64;
        for &i in &order {
            s.insert(i);
            let cur = game.value(&s);
            let x = cur - prev;
            prev = cur;
            // Welford update
            let delta = x - mean[i];
            mean[i] += delta / count;
            m2[i] += delta * (x - mean[i]);
        }
    }

    let stderr = (n_permutations > 1).then(|| {
        let n = n_permutations as f64;
        m2.iter().map(|v| (v / (n - 1.0) / n).sqrt()).collect()
    });
    Ok(ShapleyResult {
        method: ShapleyMethod::Permutation,
        phi: mean,
        stderr,
        evaluations_used: game.evaluations() - before,
        seed: Some(seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::exact_shapley;

    #[test]
    fn additive_game_single_permutation_is_exact() {
        let w = [0.5, -1.0, 2.0, 4.0];
        let g = CoalitionGame::from_fn(4, move |c| c.members().map(|i| w[i]).sum());
        let r = sampled_shapley(&g, 1, 3).unwrap();
        assert_eq!(r.phi, w.to_vec());
        assert!(r.stderr.is_none());
        assert!(r.evaluations_used <= 5);
    }

    #[test]
    fn glove_converges() {
        let g = CoalitionGame::from_fn(3, |c| {
            f64::from(u8::from(c.contains(0) && (c.contains(1) || c.contains(2))))
        });
        let exact = exact_shapley(&g).unwrap();
        let r = sampled_shapley(&g, 50_000, 11).unwrap();
        let se = r.stderr.as_ref().unwrap();
        for i in 0..3 {
            assert!((r.phi[i] - exact.phi[i]).abs() <= 3.0 * se[i], "{i}: {} vs {}", r.phi[i], exact.phi[i]);
        }
    }

    #[test]
    fn deterministic_and_rejects_zero() {
        let g = CoalitionGame::from_fn(5, |c| (c.len() as f64).powi(2));
        assert_eq!(sampled_shapley(&g, 20, 1).unwrap().phi, sampled_shapley(&g, 20, 1).unwrap().phi);
        assert!(sampled_shapley(&g, 0, 1).is_err());
    }
}
