mod common;

use ecoselect::lattice::{fast_lattice_aggregate, LogWeightedMean};
use ecoselect::{cv_loss_all_sets, make_folds, CvSettings};
use proptest::prelude::*;

fn table(max_p: usize) -> impl Strategy<Value = Vec<i64>> {
    (0..=max_p).prop_flat_map(|p| prop::collection::vec(-1_000_000i64..1_000_000, 1usize << p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integer_sums_match_enumeration(values in table(8)) {
        let fast = fast_lattice_aggregate(&values, |a, b| a + b).unwrap();
        prop_assert_eq!(fast, common::naive_subset_sums(&values));
    }

    #[test]
    fn weighted_means_match_enumeration(
        pairs in (0usize..=8).prop_flat_map(|p| prop::collection::vec((-40.0f64..40.0, -5.0f64..5.0), 1usize << p))
    ) {
        let (lw, means): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let cells: Vec<LogWeightedMean> = lw.iter().zip(&means).map(|(&l, &m)| LogWeightedMean::new(l, m)).collect();
        let fast = fast_lattice_aggregate(&cells, LogWeightedMean::merge).unwrap();
        for (f, (l, m)) in fast.iter().zip(common::naive_weighted_means(&lw, &means)) {
            prop_assert!((f.log_weight - l).abs() <= 1e-12 * l.abs().max(1.0), "{} vs {}", f.log_weight, l);
            prop_assert!((f.mean - m).abs() <= 1e-12 * m.abs().max(1.0), "{} vs {}", f.mean, m);
        }
    }
}

#[test]
fn pipeline_matches_direct_enumeration() {
    for seed in 0..12u64 {
        let p = 1 + (seed % 3) as usize;
        let n = 24 + 3 * seed as usize;
        let d = common::random_dataset(n, p, seed);
        let plan = make_folds(n, 4 + (seed % 3) as usize, seed).unwrap();
        let table = cv_loss_all_sets(&d, &plan, &CvSettings::default()).unwrap();
        let naive = common::naive_cv_loss(&d, &plan, 0.5);
        for (b, (fast, slow)) in table.mean.iter().zip(&naive).enumerate() {
            assert!((fast - slow).abs() <= 1e-10, "seed {seed} set {b}: {fast} vs {slow}");
        }
    }
}

#[test]
fn nondefault_prior_odds_match() {
    let d = common::random_dataset(30, 3, 99);
    let plan = make_folds(30, 5, 4).unwrap();
    let mut settings = CvSettings::default();
    settings.prior.model_prior_p = 0.2;
    let table = cv_loss_all_sets(&d, &plan, &settings).unwrap();
    let naive = common::naive_cv_loss(&d, &plan, 0.2);
    for (fast, slow) in table.mean.iter().zip(&naive) {
        assert!((fast - slow).abs() <= 1e-10);
    }
}
