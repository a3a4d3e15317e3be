use finshap_core::models::{
    fit_svm, logistic_objective, train, GbtHyper, Hyperparameters, ModelKind, Standardizer, SvmHyper,
};
use finshap_core::Matrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn dataset(n: usize, f: usize, seed: u64, separable: bool) -> (Matrix, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..f).map(|_| rng.sample(StandardNormal)).collect();
    let mut data = Vec::with_capacity(n * f);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..f).map(|_| rng.sample(StandardNormal)).collect();
        let mut z: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
        if !separable {
            z += rng.sample::<f64, _>(StandardNormal) * 1.5;
        }
        y.push(u8::from(z > 0.0));
        data.extend(row);
    }
    (Matrix::from_vec(n, f, data).unwrap(), y)
}

#[test]
fn logistic_gradient_matches_finite_differences() {
    for seed in 0..5 {
        let (x, y) = dataset(60, 4, seed, false);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let params: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, grad) = logistic_objective(&params, &x, &y, 0.3);
        for k in 0..params.len() {
            let h = 1e-6;
            let mut up = params.clone();
            up[k] += h;
            let mut down = params.clone();
            down[k] -= h;
            let fd = (logistic_objective(&up, &x, &y, 0.3).0 - logistic_objective(&down, &x, &y, 0.3).0) / (2.0 * h);
            let rel = (fd - grad[k]).abs() / grad[k].abs().max(1e-8);
            assert!(rel < 1e-5, "seed {seed} coord {k}: fd {fd} analytic {}", grad[k]);
        }
    }
}

#[test]
fn gbt_training_loss_never_increases() {
    for seed in 0..20 {
        let (x, y) = dataset(120, 5, 500 + seed, seed % 2 == 0);
        let hyper = Hyperparameters {
            gbt: GbtHyper {
                n_rounds: 40,
                learning_rate: 0.3,
                subsample: if seed % 3 == 0 { 0.7 } else { 1.0 },
                seed,
                ..Default::default()
            },
            ..Default::default()
        };
        let m = train(ModelKind::GradientBoostedTrees, &hyper, &x, &y).unwrap();
        let trace = &m.meta.loss_trace;
        assert!(trace.len() > 1);
        for w in trace.windows(2) {
            assert!(w[1] <= w[0], "seed {seed}: {} -> {}", w[0], w[1]);
        }
    }
}

fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    (-gamma * a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>()).exp()
}

#[test]
fn svm_solution_satisfies_kkt() {
    for seed in 0..10 {
        let separable = seed % 2 == 0;
        let (x, y) = dataset(80, 3, 900 + seed, separable);
        let c = 2.0;
        let tol = 1e-3;
        let gamma = 0.5;
        let (_, sol) = fit_svm(&x, &y, &SvmHyper { c, gamma: Some(gamma), tol, ..Default::default() }).unwrap();
        assert!(sol.converged);
        let xs = Standardizer::fit(&x).transform(&x);
        let ys: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
        let balance: f64 = sol.alpha.iter().zip(&ys).map(|(a, l)| a * l).sum();
        assert!(balance.abs() < 1e-9, "seed {seed}: Σαy = {balance}");
        for i in 0..x.rows() {
            let a = sol.alpha[i];
            assert!((0.0..=c).contains(&a));
            let f: f64 = (0..x.rows())
                .map(|j| sol.alpha[j] * ys[j] * rbf(gamma, xs.row(i), xs.row(j)))
                .sum::<f64>()
                + sol.bias;
            let margin = ys[i] * f;
            let ok = if a <= 0.0 {
                margin >= 1.0 - tol
            } else if a >= c {
                margin <= 1.0 + tol
            } else {
                (margin - 1.0).abs() <= tol
            };
            assert!(ok, "seed {seed} row {i}: alpha {a} margin {margin}");
        }
    }
}

#[test]
fn trainers_are_bit_deterministic() {
    let (x, y) = dataset(90, 4, 3, false);
    let mut hyper = Hyperparameters::default();
    hyper.forest.n_trees = 25;
    hyper.gbt.n_rounds = 25;
    hyper.gbt.subsample = 0.8;
    for kind in ModelKind::ALL {
        let a = train(kind, &hyper, &x, &y).unwrap();
        let b = train(kind, &hyper, &x, &y).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap(), "{kind}");
        let pa = a.predict_proba(&x).unwrap();
        let pb = b.predict_proba(&x).unwrap();
        assert!(pa.iter().zip(&pb).all(|(u, v)| u.to_bits() == v.to_bits()));
    }
}
