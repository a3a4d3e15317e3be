//! Estimators against an independent brute-force oracle: the average marginal
//! contribution over all M! join orders.

use finshap_core::game::{
    exact_shapley, kernel_shap, partition_shapley, sampled_shapley, Coalition, CoalitionGame, KernelBudget,
    Partition,
};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m - 1);
            out.push(q);
        }
    }
    out
}

fn brute_force(m: usize, v: &dyn Fn(u64) -> f64) -> Vec<f64> {
    let perms = permutations(m);
    let mut phi = vec![0.0; m];
    for p in &perms {
        let mut s = 0u64;
        for &i in p {
            let before = v(s);
            s |= 1 << i;
            phi[i] += v(s) - before;
        }
    }
    phi.iter().map(|x| x / perms.len() as f64).collect()
}

fn random_table(m: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..1u64 << m).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[test]
fn exact_matches_brute_force_on_random_games() {
    for m in 1..=6 {
        for seed in 0..5 {
            let t = random_table(m, seed * 31 + m as u64);
            let oracle = brute_force(m, &|s| t[s as usize]);
            let r = exact_shapley(&CoalitionGame::from_table(m, t.clone())).unwrap();
            for (a, b) in r.phi.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-12, "m={m}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn exact_sixteen_players_is_fast() {
    let w: Vec<f64> = (0..16).map(|i| i as f64 * 0.25 - 1.0).collect();
    let start = std::time::Instant::now();
    let g = CoalitionGame::from_fn(16, |c: &Coalition| {
        let lin: f64 = c.members().map(|i| w[i]).sum();
        lin + (c.len() as f64).sqrt()
    });
    let r = exact_shapley(&g).unwrap();
    assert!(start.elapsed().as_secs_f64() < 5.0);
    assert_eq!(r.evaluations_used, 1 << 16);
    // the √|S| part is symmetric, so each player gets √16 / 16
    let sym = 16f64.sqrt() / 16.0;
    for (i, p) in r.phi.iter().enumerate() {
        assert!((p - (w[i] + sym)).abs() < 1e-10, "{i}: {p}");
    }
}

#[test]
fn kernel_full_enumeration_matches_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..20 {
        let m = rng.random_range(2..=8);
        let t = random_table(m, 1000 + case);
        let exact = exact_shapley(&CoalitionGame::from_table(m, t.clone())).unwrap();
        let k = kernel_shap(&CoalitionGame::from_table(m, t), KernelBudget::All, 0, 0.0).unwrap();
        for (a, b) in k.phi.iter().zip(&exact.phi) {
            assert!((a - b).abs() < 1e-8, "m={m}: {a} vs {b}");
        }
    }
}

#[test]
fn sampling_is_unbiased_on_small_game() {
    let t = random_table(5, 77);
    let exact = exact_shapley(&CoalitionGame::from_table(5, t.clone())).unwrap();
    let r = sampled_shapley(&CoalitionGame::from_table(5, t), 20_000, 9).unwrap();
    let se = r.stderr.as_ref().unwrap();
    for i in 0..5 {
        assert!((r.phi[i] - exact.phi[i]).abs() < 4.0 * se[i] + 1e-12);
    }
}

#[test]
fn partition_singletons_match_exact() {
    let t = random_table(7, 5);
    let a = partition_shapley(&CoalitionGame::from_table(7, t.clone()), &Partition::singletons(7)).unwrap();
    let b = exact_shapley(&CoalitionGame::from_table(7, t)).unwrap();
    for (x, y) in a.phi.iter().zip(&b.phi) {
        assert!((x - y).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn efficiency_and_symmetry(m in 2usize..8, seed in any::<u64>()) {
        // symmetric in players 0 and 1: v depends on them only through the count
        let t = random_table(m, seed);
        let v = move |s: u64| {
            let canon = if (s & 1) != ((s >> 1) & 1) { (s | 1) & !2 } else { s };
            t[canon as usize]
        };
        let table: Vec<f64> = (0..1u64 << m).map(v).collect();
        let r = exact_shapley(&CoalitionGame::from_table(m, table.clone())).unwrap();
        let total: f64 = r.phi.iter().sum();
        prop_assert!((total - (table[(1 << m) - 1] - table[0])).abs() < 1e-9);
        prop_assert!((r.phi[0] - r.phi[1]).abs() < 1e-12);
    }

    #[test]
    fn linearity(m in 1usize..7, s1 in any::<u64>(), s2 in any::<u64>(), a in -3.0f64..3.0) {
        let t1 = random_table(m, s1);
        let t2 = random_table(m, s2);
        let mix: Vec<f64> = t1.iter().zip(&t2).map(|(x, y)| a * x + y).collect();
        let p1 = exact_shapley(&CoalitionGame::from_table(m, t1)).unwrap().phi;
        let p2 = exact_shapley(&CoalitionGame::from_table(m, t2)).unwrap().phi;
        let pm = exact_shapley(&CoalitionGame::from_table(m, mix)).unwrap().phi;
        for i in 0..m {
            prop_assert!((pm[i] - (a * p1[i] + p2[i])).abs() < 1e-12);
        }
    }
}
