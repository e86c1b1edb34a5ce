//! Property suites for the likelihood, statistics, samplers and simulator.

mod common;

use common::suites;
use proptest::prelude::*;

fn check(result: suites::Check) {
    match result {
        Ok(msg) => println!("{msg}"),
        Err(msg) => panic!("{msg}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn score_matches_finite_differences(seed in 0u64..1_000_000) {
        let r = suites::score_vs_finite_differences(seed);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn mle_zeroes_the_score(seed in 0u64..1_000_000) {
        let r = suites::mle_zeroes_score(seed);
        prop_assert!(r.is_ok(), "{:?}", r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 4, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn statistics_match_grid_quadrature(seed in 0u64..1_000_000) {
        let r = suites::statistics_vs_grid_quadrature(seed);
        prop_assert!(r.is_ok(), "{:?}", r);
    }
}

#[test]
fn exposure_sampler_matches_closed_form_density() {
    check(suites::exposure_sampler_ks());
}

#[test]
fn recovery_sampler_keeps_augmentations_compatible() {
    check(suites::darci_compatibility(1000));
}

#[test]
fn gillespie_holding_times_are_unit_exponential() {
    check(suites::gillespie_holding_times());
}

#[test]
fn link_counts_match_their_compensators() {
    check(suites::poisson_link_counts());
}

#[test]
fn tiny_instance_matches_marginal_likelihood() {
    check(suites::tiny_instance_marginal());
}
