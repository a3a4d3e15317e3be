use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use finshap_bench::{random_table, synthetic_split};
use finshap_core::game::{
    exact_shapley, kernel_shap, sample_background, sampled_shapley, Baseline, Coalition, CoalitionGame, KernelBudget, MaskedExpectation,
    DEFAULT_KERNEL_RIDGE,
};
use finshap_core::models::{train, Hyperparameters, ModelKind};

fn estimators(c: &mut Criterion) {
    let t12 = random_table(12, 1);
    c.bench_function("exact m=12", |b| {
        b.iter(|| exact_shapley(&CoalitionGame::from_table(12, black_box(t12.clone()))).unwrap())
    });
    c.bench_function("permutation m=12 x1000", |b| {
        b.iter(|| sampled_shapley(&CoalitionGame::from_table(12, t12.clone()), 1000, 7).unwrap())
    });
    c.bench_function("kernel m=12 all", |b| {
        b.iter(|| kernel_shap(&CoalitionGame::from_table(12, t12.clone()), KernelBudget::All, 0, DEFAULT_KERNEL_RIDGE).unwrap())
    });
    let m = 301;
    c.bench_function("kernel m=301 default budget, additive game", |b| {
        b.iter(|| {
            let g = CoalitionGame::from_fn(m, |s: &Coalition| s.members().map(|i| (i as f64).sin()).sum());
            kernel_shap(&g, KernelBudget::default_for(m), 3, DEFAULT_KERNEL_RIDGE).unwrap()
        })
    });
}

fn masking(c: &mut Criterion) {
    let (train_set, test) = synthetic_split(120, 2);
    let mut hyper = Hyperparameters::default();
    hyper.gbt.n_rounds = 100;
    let model = train(ModelKind::GradientBoostedTrees, &hyper, &train_set.x, &train_set.y).unwrap();
    let bg = sample_background(&train_set.x, 100, 1).unwrap();
    let m = test.n_features();
    let half = Coalition::from_members(m, (0..m).step_by(2));
    let single = Coalition::from_members(m, [5]);
    let mut group = c.benchmark_group("gbt masked expectation, B=100");
    group.sample_size(20);
    group.bench_function("singleton", |b| {
        b.iter(|| MaskedExpectation::new(&model, test.x.row(0), &bg).unwrap().mean_proba(black_box(&single)))
    });
    group.bench_function("half coalition", |b| {
        b.iter(|| MaskedExpectation::new(&model, test.x.row(0), &bg).unwrap().mean_proba(black_box(&half)))
    });
    group.bench_function("kernel explanation, one instance", |b| {
        b.iter(|| {
            let e = Arc::new(MaskedExpectation::new(&model, test.x.row(0), &bg).unwrap());
            let g = e.game(1, Baseline::MeanBackground).unwrap();
            kernel_shap(&g, KernelBudget::default_for(m), 3, DEFAULT_KERNEL_RIDGE).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, estimators, masking);
criterion_main!(benches);
