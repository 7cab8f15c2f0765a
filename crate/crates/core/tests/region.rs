use approx::assert_abs_diff_eq;
use authcap::channel::{bsc, ChannelPair, DiscreteChannel, Pmf};
use authcap::info::channel_capacity;
use authcap::region::{
    boundary_sweep, bsc_region_constraints, evaluate_constraints, fm_equivalence_check,
    is_achievable, max_alpha, satisfies_lai_region, satisfies_region, simmons_shift,
    AuxiliaryChain, RateTriple, SearchParams, SweepAxis, WitnessKind,
};
use proptest::prelude::*;

fn quick() -> SearchParams {
    SearchParams {
        restarts: 4,
        steps: 150,
        ..SearchParams::default()
    }
}

// Frozen from scipy: 1 - h(0.1) and h(0.2) - h(0.1).
#[test]
fn bsc_constraints_match_reference_values() {
    let c = bsc_region_constraints(0.1, 0.2).unwrap();
    assert_abs_diff_eq!(c.sum_bound, 0.5310044064107189, epsilon = 1e-12);
    assert_abs_diff_eq!(c.secrecy_margin, 0.25293250129808115, epsilon = 1e-12);
    let reversed = bsc_region_constraints(0.2, 0.1).unwrap();
    assert_eq!(reversed.secrecy_margin, 0.0);
}

// Z channel with p(1|1) = 1/2 has capacity log2(5/4) at P(X = 1) = 2/5.
#[test]
fn z_channel_capacity() {
    let z = DiscreteChannel::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
    let c = channel_capacity(&z, 1e-10).unwrap();
    assert_abs_diff_eq!(c.bits, 0.32192809488736235, epsilon = 1e-8);
    assert_abs_diff_eq!(c.input.probs()[1], 0.4, epsilon = 1e-4);
}

#[test]
fn membership_witness_satisfies_the_region() {
    let pair = ChannelPair::bsc_pair(0.05, 0.3).unwrap();
    let inside = RateTriple::new(0.3, 0.2, 0.3);
    let a = is_achievable(&inside, &pair, &quick()).unwrap();
    assert!(a.achievable);
    let w = a.witness.unwrap();
    assert!(satisfies_region(
        &inside,
        &evaluate_constraints(&w.chain, &pair).unwrap()
    ));

    let outside = RateTriple::new(0.3, 0.8, 0.8);
    let b = is_achievable(&outside, &pair, &quick()).unwrap();
    assert!(!b.achievable);
    assert!(b.refuted_by.is_some() || b.budget_exhausted);
}

#[test]
fn rejects_non_positive_message_rate() {
    let pair = ChannelPair::bsc_pair(0.05, 0.3).unwrap();
    assert!(is_achievable(&RateTriple::new(0.0, 0.1, 0.1), &pair, &quick()).is_err());
}

#[test]
fn shift_moves_along_the_expected_direction() {
    let p = simmons_shift(&RateTriple::new(0.5, 0.1, 0.2), 0.2).unwrap();
    assert_abs_diff_eq!(p.r, 0.3, epsilon = 1e-15);
    assert_abs_diff_eq!(p.alpha, 0.3, epsilon = 1e-15);
    assert_abs_diff_eq!(p.kappa, 0.6, epsilon = 1e-15);
    assert!(simmons_shift(&RateTriple::new(0.5, 0.1, 0.2), 0.5).is_err());
}

#[test]
fn bsc_sweep_caps_alpha_at_half_the_key() {
    let pair = ChannelPair::bsc_pair(0.3, 0.3).unwrap();
    let rows = boundary_sweep(&pair, SweepAxis::Kappa(0.1), 0.05, &quick()).unwrap();
    assert!(!rows.is_empty());
    for row in &rows {
        assert_eq!(row.witness_kind, WitnessKind::ClosedForm);
        assert!(row.point.alpha <= 0.05 + 1e-9);
        assert!(row.revalidate(&pair, 1e-9).unwrap());
    }
}

#[test]
fn generic_sweep_is_monotone_and_revalidates() {
    let erasure = DiscreteChannel::new(vec![vec![0.7, 0.3, 0.0], vec![0.0, 0.3, 0.7]]).unwrap();
    let pair = ChannelPair::new(bsc(0.05).unwrap(), erasure).unwrap();
    let rows = boundary_sweep(&pair, SweepAxis::Kappa(0.3), 0.1, &quick()).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].point.alpha <= w[0].point.alpha + 1e-9);
    }
    for row in &rows {
        assert!(row.revalidate(&pair, 1e-6).unwrap());
    }
}

#[test]
fn fm_check_agrees_on_a_degraded_pair() {
    let pair = ChannelPair::bsc_pair(0.1, 0.2).unwrap();
    let chain = AuxiliaryChain::new(
        Pmf::uniform(1),
        DiscreteChannel::new(vec![vec![0.5, 0.5]]).unwrap(),
        DiscreteChannel::identity(2),
    )
    .unwrap();
    let report = fm_equivalence_check(&pair, &chain, 2000, 3).unwrap();
    assert!(report.passed(), "{:?}", report.disagreements.first());
    assert!(report.inside > 0);
}

proptest! {
    #[test]
    fn max_alpha_is_on_the_boundary(
        lt in 0.0f64..0.5, lq in 0.0f64..0.5, r in 0.001f64..1.0, kappa in 0.0f64..1.0,
    ) {
        let c = bsc_region_constraints(lt, lq).unwrap();
        if let Some(a) = max_alpha(r, kappa, &c) {
            prop_assert!(satisfies_region(&RateTriple::new(r, a, kappa), &c));
            prop_assert!(!satisfies_region(&RateTriple::new(r, a + 1e-6, kappa), &c));
        } else {
            prop_assert!(!satisfies_region(&RateTriple::new(r, 0.0, kappa), &c));
        }
    }

    #[test]
    fn shift_preserves_the_sum_and_region(
        lt in 0.0f64..0.2, lq in 0.25f64..0.5, r in 0.05f64..0.4, kappa in 0.0f64..0.6, t in 0.0f64..1.0,
    ) {
        let c = bsc_region_constraints(lt, lq).unwrap();
        prop_assume!(r < c.sum_bound);
        let alpha = max_alpha(r, kappa, &c).unwrap();
        let p = RateTriple::new(r, alpha, kappa);
        let shifted = simmons_shift(&p, t * r * 0.99).unwrap();
        prop_assert!((shifted.r + shifted.alpha - (p.r + p.alpha)).abs() < 1e-12);
        prop_assert!(satisfies_region(&shifted, &c));
    }

    #[test]
    fn key_transmission_points_lie_in_the_full_region(
        lt in 0.0f64..0.5, lq in 0.0f64..0.5, r in 0.001f64..1.0, alpha in 0.0f64..1.0, kappa in 0.0f64..2.0,
    ) {
        let c = bsc_region_constraints(lt, lq).unwrap();
        let p = RateTriple::new(r, alpha, kappa);
        if satisfies_lai_region(&p, &c) {
            prop_assert!(satisfies_region(&p, &c));
        }
    }
}
