use super::{Coalition, CoalitionGame, ShapleyMethod, ShapleyResult};
use crate::error::{Error, Result};

/// Largest player count enumerated exhaustively by default.
pub const DEFAULT_EXACT_CAP: usize = 20;

/// `s!(m-s-1)!/m!`, the weight of a coalition of size `s` avoiding player `i`.
pub fn shapley_weight(m: usize, s: usize) -> f64 {
    // 1 / (m · C(m-1, s))
    let mut binom = 1.0f64;
    for k in 0..s {
        binom = binom * (m - 1 - k) as f64 / (k + 1) as f64;
    }
    1.0 / (m as f64 * binom)
}

pub fn exact_shapley(game: &CoalitionGame<'_>) -> Result<ShapleyResult> {
    exact_shapley_with_cap(game, DEFAULT_EXACT_CAP)
}

/// Marginal contributions over all `2^M` coalitions, each evaluated once.
///
/// Marginals are summed per coalition size, divided by the exact binomial
/// count and averaged over sizes, so additive games with representable sums
/// come back exactly.
pub fn exact_shapley_with_cap(game: &CoalitionGame<'_>, cap: usize) -> Result<ShapleyResult> {
    let m = game.players();
    if m > cap || m >= 64 {
        return Err(Error::Capacity { players: m, cap });
    }
    let before = game.evaluations();
    let size = 1usize << m;
    let values: Vec<f64> = (0..size as u64)
        .map(|bits| game.value(&Coalition::from_bits(m, bits)))
        .collect();
    // by_size[i * m + k]: summed marginals of player i over coalitions of size k
    let mut by_size = vec![0.0; m * m];
    for (s, &vs) in values.iter().enumerate() {
        let k = s.count_ones() as usize;
        for i in 0..m {
            let bit = 1usize << i;
            if s & bit == 0 {
                by_size[i * m + k] += values[s | bit] - vs;
            }
        }
    }
    let mut binom = vec![1u64; m.max(1)];
    for k in 1..m {
        binom[k] = binom[k - 1] * (m - k) as u64 / k as u64;
    }
    let phi = (0..m)
        .map(|i| {
            let total: f64 = (0..m).map(|k| by_size[i * m + k] / binom[k] as f64).sum();
            total / m as f64
        })
        .collect();
    Ok(ShapleyResult {
        method: ShapleyMethod::Exact,
        phi,
        stderr: None,
        evaluations_used: game.evaluations() - before,
        seed: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn glove() -> CoalitionGame<'static> {
        CoalitionGame::from_fn(3, |c| {
            f64::from(u8::from(c.contains(0) && (c.contains(1) || c.contains(2))))
        })
    }

    #[test]
    fn additive_game() {
        let w = [1.0, 2.0, 3.0];
        let g = CoalitionGame::from_fn(3, move |c| c.members().map(|i| w[i]).sum());
        let r = exact_shapley(&g).unwrap();
        assert_eq!(r.phi, vec![1.0, 2.0, 3.0]);
        assert_eq!(r.evaluations_used, 8);
    }

    #[test]
    fn unanimity_game() {
        let g = CoalitionGame::from_fn(3, |c| f64::from(u8::from(c.contains(1) && c.contains(2))));
        let r = exact_shapley(&g).unwrap();
        assert_eq!(r.phi, vec![0.0, 0.5, 0.5]);
    }

    #[test]
    fn glove_game() {
        let r = exact_shapley(&glove()).unwrap();
        let want = [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0];
        for (a, b) in r.phi.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_match_factorials() {
        // 4 players: s!(3-s)!/4!
        let fact = [1.0, 1.0, 2.0, 6.0, 24.0];
        for s in 0..4 {
            let want = fact[s] * fact[3 - s] / fact[4];
            assert!((shapley_weight(4, s) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn over_cap_is_capacity_error() {
        let g = CoalitionGame::from_fn(21, |_| 0.0);
        assert!(matches!(exact_shapley(&g), Err(Error::Capacity { players: 21, cap: 20 })));
    }
}
