//! Randomized invariants of the probability model, classifiers, gradients,
//! angle and evidence engine.

mod common;

use proptest::prelude::*;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cases(64))]

    #[test]
    fn no_signaling_round_trip(seed in any::<u64>()) {
        common::ns_round_trip(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn bell_violation_excludes_lhv(seed in any::<u64>()) {
        common::classifier_consistency(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn angle_is_a_metric(seed in any::<u64>()) {
        common::angle_metric_axioms(seed).map_err(TestCaseError::fail)?;
    }
}

proptest! {
    #![proptest_config(cases(25))]

    #[test]
    fn qm_membership_matches_grid(seed in any::<u64>()) {
        common::membership_matches_grid(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn factor_gradient_matches_differences(seed in any::<u64>()) {
        common::qm_gradient_matches_fd(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn weight_gradient_matches_differences(seed in any::<u64>()) {
        common::lhv_gradient_matches_fd(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn posterior_equals_prior_without_data(seed in any::<u64>()) {
        common::posterior_is_prior_without_data(seed).map_err(TestCaseError::fail)?;
    }
}
