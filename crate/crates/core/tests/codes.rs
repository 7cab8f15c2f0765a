use approx::assert_abs_diff_eq;
use authcap::channel::{bsc, ChannelPair, DiscreteChannel};
use authcap::codes::{
    check_lai_strategy, concentration_frequencies, gamma, key_expansion_transform, lai_toy_code,
    message_error, simmons_noiseless_code, transform_error_mismatches, verify_gstar_gdagger,
    CodeParams, TransformSpec,
};
use proptest::prelude::*;

#[test]
fn simmons_code_shape() {
    let code = simmons_noiseless_code(2, 4, 1.0, 5).unwrap();
    assert_eq!(code.params.keys, 16);
    assert_eq!(code.params.messages, 4);
    assert!(code.has_deterministic_decoder());
    assert!(code.violations().is_empty());
    assert_eq!(
        message_error(&code, &DiscreteChannel::identity(2)).unwrap(),
        0.0
    );
}

#[test]
fn simmons_code_is_reproducible() {
    assert_eq!(
        simmons_noiseless_code(2, 4, 1.0, 9).unwrap(),
        simmons_noiseless_code(2, 4, 1.0, 9).unwrap()
    );
}

#[test]
fn lai_code_hides_the_key_from_a_blind_tap() {
    let pair = ChannelPair::bsc_pair(0.0, 0.5).unwrap();
    let code = lai_toy_code(4, 0.5, 0.25, &pair.tap, 0).unwrap();
    let check = check_lai_strategy(&code, &pair, 1e-9).unwrap();
    assert!(check.structural);
    assert_eq!(check.shared_words, 0);
    assert_abs_diff_eq!(check.leakage, 0.0, epsilon = 1e-12);
    assert!(check.passed);
}

#[test]
fn lai_code_leaks_through_a_clear_tap() {
    let pair = ChannelPair::bsc_pair(0.0, 0.0).unwrap();
    let code = lai_toy_code(4, 0.5, 0.25, &pair.tap, 0).unwrap();
    let check = check_lai_strategy(&code, &pair, 1e-3).unwrap();
    assert!(check.leakage > 1e-3);
    assert!(!check.passed);
}

#[test]
fn transform_rates_are_exact() {
    let base = simmons_noiseless_code(2, 4, 1.0, 1).unwrap();
    let spec = TransformSpec::random(&base.params, 0.25, 1).unwrap();
    let t = key_expansion_transform(&base, &spec).unwrap();
    assert_abs_diff_eq!(t.code.params.r(), base.params.r() - 0.25, epsilon = 1e-12);
    assert_abs_diff_eq!(
        t.code.params.kappa(),
        base.params.kappa() + 0.5,
        epsilon = 1e-12
    );
    assert!(t.code.violations().is_empty());
}

#[test]
fn transform_keeps_every_message_error_cell() {
    let z = DiscreteChannel::new(vec![vec![1.0, 0.0], vec![0.2, 0.8]]).unwrap();
    for seed in 0..4 {
        let base = lai_toy_code(4, 0.5, 0.5, &bsc(0.5).unwrap(), seed).unwrap();
        let spec = TransformSpec::random(&base.params, 0.25, seed).unwrap();
        let t = key_expansion_transform(&base, &spec).unwrap();
        assert!(transform_error_mismatches(&base, &t.code, &spec, &z)
            .unwrap()
            .is_empty());
    }
}

#[test]
fn transform_refuses_beta_above_the_message_rate() {
    let base = simmons_noiseless_code(2, 4, 1.0, 1).unwrap();
    assert!(TransformSpec::random(&base.params, 0.75, 1).is_err());
}

#[test]
fn gamma_reference_value() {
    // 4 ln 2 / (2 ln 2 - 1), evaluated in Python.
    assert_abs_diff_eq!(gamma(0.5), 7.177398899124181, epsilon = 1e-12);
}

#[test]
fn image_counts_are_ordered() {
    let params = CodeParams::from_rates(4, 1.0, 1.0, 0.0).unwrap();
    let spec = TransformSpec::random(&params, 0.5, 3).unwrap();
    let g = verify_gstar_gdagger(&spec).unwrap();
    assert!(g.max_single_count <= spec.mappings.len());
    assert!(g.max_pair_count <= g.max_single_count);
}

#[test]
fn concentration_is_reproducible() {
    let params = CodeParams::from_rates(4, 1.0, 1.0, 0.0).unwrap();
    let a = concentration_frequencies(&params, 0.5, 200, 11).unwrap();
    let b = concentration_frequencies(&params, 0.5, 200, 11).unwrap();
    assert_eq!(a, b);
    assert!(concentration_frequencies(&params, 0.5, 0, 11).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn transformed_codes_stay_valid(seed in 0u64..1000, beta_quarters in 1usize..3) {
        let beta = beta_quarters as f64 * 0.25;
        let base = simmons_noiseless_code(2, 4, 1.0, seed).unwrap();
        let spec = TransformSpec::random(&base.params, beta, seed).unwrap();
        prop_assert_eq!(spec.mappings.len(), 1usize << (2.0 * 4.0 * beta) as usize);
        let t = key_expansion_transform(&base, &spec).unwrap();
        prop_assert!(t.code.violations().is_empty());
        prop_assert!(t.tolerances.delta_tilde >= t.tolerances.beta_min);
        for g in &spec.mappings {
            let mut sorted = g.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), g.len());
        }
    }
}
