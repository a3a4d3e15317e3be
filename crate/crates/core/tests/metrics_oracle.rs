use finshap_core::metrics::{accuracy, roc_auc, EvalReport};
use proptest::prelude::*;

/// Pair counting: P(score_pos > score_neg) + ½ P(tie).
fn brute_auc(y: &[u8], s: &[f64]) -> f64 {
    let (mut num, mut pairs) = (0u64, 0u64);
    for i in 0..y.len() {
        for j in 0..y.len() {
            if y[i] == 1 && y[j] == 0 {
                pairs += 1;
                num += if s[i] > s[j] {
                    2
                } else if s[i] == s[j] {
                    1
                } else {
                    0
                };
            }
        }
    }
    num as f64 / (2 * pairs) as f64
}

fn labeled_scores() -> impl Strategy<Value = (Vec<u8>, Vec<f64>)> {
    (2usize..200).prop_flat_map(|n| {
        // few distinct score levels force ties
        (
            prop::collection::vec(0u8..2, n),
            prop::collection::vec((0u32..12).prop_map(|v| f64::from(v) / 11.0), n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn auc_equals_pair_counting((mut y, s) in labeled_scores()) {
        y[0] = 0;
        y[1] = 1;
        prop_assert_eq!(roc_auc(&y, &s).unwrap(), brute_auc(&y, &s));
    }

    #[test]
    fn auc_is_invariant_under_monotone_maps((mut y, s) in labeled_scores()) {
        y[0] = 0;
        y[1] = 1;
        let mapped: Vec<f64> = s.iter().map(|v| (3.0 * v).exp() - 7.0).collect();
        prop_assert_eq!(roc_auc(&y, &s).unwrap(), roc_auc(&y, &mapped).unwrap());
    }
}

#[test]
fn single_class_auc_is_undefined_but_report_survives() {
    assert!(roc_auc(&[1, 1, 1], &[0.1, 0.5, 0.9]).is_err());
    let r = EvalReport::from_probabilities(&[1, 1], &[0.7, 0.2]).unwrap();
    assert_eq!(r.roc_auc, None);
    assert_eq!(r.accuracy, 0.5);
    assert_eq!(accuracy(&[0, 1, 1, 0], &[0, 1, 0, 0]).unwrap(), 0.75);
}
