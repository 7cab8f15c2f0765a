use approx::assert_abs_diff_eq;
use authcap::adversary::{
    exhaustive_deterministic_failure, impostor_attack, key_guess_check, mi_key_bounds, omega_exact,
    randomized_attack, substitution_attack, typical_auth_rate, Attack, AttackKind, AttackStrategy,
    RateConfig,
};
use authcap::channel::{bsc, ChannelPair, DiscreteChannel};
use authcap::codes::{lai_toy_code, simmons_noiseless_code, CodeParams, TabularCode};
use proptest::prelude::*;

/// Two channel uses carrying the message bit and the key bit in the clear.
/// Bob accepts a word only if its second bit is his key.
fn key_in_the_clear() -> TabularCode {
    let params = CodeParams::new(2, 2, 2, 0.0).unwrap();
    let encoder = (0..4)
        .map(|w| (0..4).map(|x| if x == w { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut decoder = Vec::new();
    for y in 0..4 {
        for k in 0..2 {
            let mut row = vec![0.0; 3];
            row[if y % 2 == k { y / 2 } else { 2 }] = 1.0;
            decoder.push(row);
        }
    }
    TabularCode::new(params, 2, 2, encoder, decoder, None).unwrap()
}

fn tapped(lambda: f64) -> ChannelPair {
    ChannelPair::new(DiscreteChannel::identity(2), bsc(lambda).unwrap()).unwrap()
}

fn uniform_attack(z_words: usize, y_words: usize) -> AttackStrategy {
    AttackStrategy::new(
        AttackKind::Custom,
        vec![vec![1.0 / y_words as f64; y_words]; z_words],
    )
    .unwrap()
}

// Worked by hand: flipping the observed message bit forges exactly when
// both tapped bits are right, with probability 0.9^2.
#[test]
fn flip_attack_on_clear_key() {
    let code = key_in_the_clear();
    let pair = tapped(0.1);
    let flip = AttackStrategy::deterministic(&[2, 3, 0, 1], 4).unwrap();
    let r = omega_exact(&code, &pair, &flip, 0.5).unwrap();
    assert_abs_diff_eq!(r.failure_prob, 0.81, epsilon = 1e-12);
    assert_eq!(r.omega_at(0, 0, 0), Some(1.0));
    assert_eq!(r.omega_at(1, 0, 0), Some(0.0));
    assert_abs_diff_eq!(
        exhaustive_deterministic_failure(&code, &pair, 0.5).unwrap(),
        0.81,
        epsilon = 1e-12
    );
}

#[test]
fn uniform_guess_on_clear_key() {
    let code = key_in_the_clear();
    let pair = tapped(0.1);
    let psi = uniform_attack(4, 4);
    // omega = 1/4 everywhere; fails iff 2 < 2a.
    assert_eq!(
        omega_exact(&code, &pair, &psi, 0.99).unwrap().failure_prob,
        0.0
    );
    assert_abs_diff_eq!(
        omega_exact(&code, &pair, &psi, 1.01).unwrap().failure_prob,
        1.0,
        epsilon = 1e-12
    );
}

// h(0.1) from scipy, spread over two channel uses.
#[test]
fn clear_key_bounds() {
    let b = mi_key_bounds(&key_in_the_clear(), &tapped(0.1)).unwrap();
    assert_abs_diff_eq!(b.info_y, 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(b.equivocation_z, 0.4689955935892812 / 2.0, epsilon = 1e-12);
}

#[test]
fn rate_bracket_includes_randomized_attacks() {
    let code = simmons_noiseless_code(2, 4, 1.0, 2).unwrap();
    let pair = tapped(0.0);
    let attacks = [
        Attack::Impostor,
        Attack::Substitution,
        Attack::BestDeterministic,
        Attack::Randomized,
    ];
    let b = typical_auth_rate(&code, &pair, 0.1, &attacks, &RateConfig::default()).unwrap();
    assert!(b.consistent);
    assert_eq!(b.per_attack.len(), 4);
    let lowest = b
        .per_attack
        .iter()
        .map(|p| p.alpha)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(b.alpha_lb, lowest);
}

#[test]
fn randomized_attack_is_a_valid_strategy() {
    let code = simmons_noiseless_code(2, 2, 1.0, 0).unwrap();
    let pair = tapped(0.0);
    let psi = randomized_attack(&code, &pair, 0.75).unwrap();
    for row in &psi.rows {
        assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        assert!(row.iter().all(|&p| p >= 0.0));
    }
}

fn lai_code(seed: u64, tap: f64) -> (TabularCode, ChannelPair) {
    let pair = ChannelPair::bsc_pair(0.0, tap).unwrap();
    (lai_toy_code(4, 0.5, 0.25, &pair.tap, seed).unwrap(), pair)
}

fn random_attack(z_words: usize, y_words: usize, weights: &[f64]) -> AttackStrategy {
    let rows = (0..z_words)
        .map(|z| {
            let row: Vec<f64> = (0..y_words)
                .map(|y| weights[(z * y_words + y) % weights.len()] + 1e-3)
                .collect();
            let total: f64 = row.iter().sum();
            row.into_iter().map(|w| w / total).collect()
        })
        .collect();
    AttackStrategy::new(AttackKind::Custom, rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn omega_is_linear_in_the_attack(
        seed in 0u64..50, t in 0.0f64..1.0, w1 in prop::collection::vec(0.0f64..1.0, 7), w2 in prop::collection::vec(0.0f64..1.0, 5),
    ) {
        let (code, pair) = lai_code(seed, 0.2);
        let (zw, yw) = (16, 16);
        let p1 = random_attack(zw, yw, &w1);
        let p2 = random_attack(zw, yw, &w2);
        let mixed = p1.mix(&p2, t).unwrap();
        let o1 = omega_exact(&code, &pair, &p1, 0.5).unwrap().cells.unwrap();
        let o2 = omega_exact(&code, &pair, &p2, 0.5).unwrap().cells.unwrap();
        let om = omega_exact(&code, &pair, &mixed, 0.5).unwrap().cells.unwrap();
        for ((a, b), m) in o1.iter().zip(&o2).zip(&om) {
            prop_assert!((m.omega - (t * a.omega + (1.0 - t) * b.omega)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&m.omega));
        }
    }

    #[test]
    fn omega_never_exceeds_the_induced_key_guess(seed in 0u64..50, tap in 0.0f64..0.5, w in prop::collection::vec(0.0f64..1.0, 11)) {
        let (code, pair) = lai_code(seed, tap);
        let attacks = vec![
            impostor_attack(&code, &pair).unwrap(),
            substitution_attack(&code, &pair).unwrap(),
            random_attack(16, 16, &w),
        ];
        let r = key_guess_check(&code, &pair, &attacks).unwrap();
        prop_assert!(r.structural);
        prop_assert!(r.passed, "{} violations, max excess {}", r.violations, r.max_excess);
    }

    #[test]
    fn blind_tap_makes_substitution_no_better_than_impersonation(seed in 0u64..50, a in 0.05f64..1.5) {
        let (code, pair) = lai_code(seed, 0.5);
        let imp = omega_exact(&code, &pair, &impostor_attack(&code, &pair).unwrap(), a).unwrap();
        let sub = omega_exact(&code, &pair, &substitution_attack(&code, &pair).unwrap(), a).unwrap();
        prop_assert!((imp.summary.max - sub.summary.max).abs() < 1e-12);
        prop_assert!((imp.failure_prob - sub.failure_prob).abs() < 1e-12);
    }

    #[test]
    fn bracket_is_consistent(seed in 0u64..20, eps in 0.01f64..0.5) {
        let code = simmons_noiseless_code(2, 2, 1.0, seed).unwrap();
        let pair = tapped(0.0);
        let attacks = [Attack::Impostor, Attack::Substitution, Attack::BestDeterministic, Attack::Randomized];
        let b = typical_auth_rate(&code, &pair, eps, &attacks, &RateConfig::default()).unwrap();
        prop_assert!(b.consistent);
        prop_assert!(b.alpha_lb >= 0.0);
    }
}
