//! Fixtures shared by the criterion benches.

use finshap_core::dataset::{build_labels, split_by_year, synthesize_panel, SyntheticConfig};
use finshap_core::seed::mix64;
use finshap_core::LabeledDataset;

/// Value table of a random `m`-player game, entries in `[-1, 1)`.
pub fn random_table(m: usize, seed: u64) -> Vec<f64> {
    (0..1u64 << m)
        .map(|i| (mix64(seed ^ mix64(i)) >> 11) as f64 / (1u64 << 52) as f64 - 1.0)
        .collect()
}

/// Train/test split of a default-shaped synthetic panel with `n_companies`.
pub fn synthetic_split(n_companies: usize, seed: u64) -> (LabeledDataset, LabeledDataset) {
    let cfg = SyntheticConfig {
        n_companies,
        ..Default::default()
    };
    let (panel, _) = synthesize_panel(&cfg, seed).expect("valid synthetic config");
    let (ds, _) = build_labels(&panel, "ROI").expect("labels");
    let split = split_by_year(&ds, 2020, 2021).expect("split");
    (split.train, split.test)
}

#[cfg(test)]
mod tests {
    #[test]
    fn table_values_in_range() {
        let t = super::random_table(6, 3);
        assert_eq!(t.len(), 64);
        assert!(t.iter().all(|v| (-1.0..1.0).contains(v)));
    }
}
