use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use super::{AttackStrategy, Scenario};
use crate::channel::ChannelPair;
use crate::codes::TabularCode;
use crate::error::{Error, Result};
use crate::info::{entropy_of, Bits};
use crate::rng::substream;

const RNG_MODULE: &str = "adversary_sim.tails";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyGuessReport {
    /// No received word is accepted under two keys.
    pub structural: bool,
    pub deterministic_decoder: bool,
    pub attacks: usize,
    pub cells_checked: usize,
    /// Cells with `ω > ψ̃(k | z)`.
    pub violations: usize,
    /// Largest `ω − ψ̃(k | z)`, or 0.
    pub max_excess: f64,
    /// Largest `|Σ ψ̃(· | z) − 1|` over `K ∪ {!}`.
    pub max_normalization_error: f64,
    pub passed: bool,
}

/// Compares `ω(z, m, k)` against `ψ̃(k | z)` on every cell with `p(z) > 0`.
///
/// `ψ̃(k | z)` is the `ψ`-mass of words accepted under `k`, and `ψ̃(! | z)`
/// the mass of words accepted under no key. The bound only holds for codes
/// whose accepted words have a single owner; `passed` is computed
/// regardless, so non-structural codes may legitimately fail it.
pub fn key_guess_check(
    code: &TabularCode,
    pair: &ChannelPair,
    attacks: &[AttackStrategy],
) -> Result<KeyGuessReport> {
    let s = Scenario::new(code, pair)?;
    let keys = s.law.keys;
    let yw = s.law.y_words;
    let owners: Vec<usize> = (0..yw)
        .map(|y| {
            (0..keys)
                .filter(|&k| s.acceptance[y * keys + k] > 0.0)
                .count()
        })
        .collect();
    let structural = owners.iter().all(|&c| c <= 1);
    let z_mass = s.law.z_marginal();
    let cells = s.cells();
    let (mut checked, mut violations) = (0, 0);
    let (mut max_excess, mut max_norm): (f64, f64) = (0.0, 0.0);
    for psi in attacks {
        let omega = s.omega(psi)?;
        for z in (0..s.law.z_words).filter(|&z| z_mass[z] > 0.0) {
            let row = &psi.rows[z];
            let tilde: Vec<f64> = (0..keys)
                .map(|k| {
                    (0..yw)
                        .filter(|&y| row[y] > 0.0 && s.acceptance[y * keys + k] > 0.0)
                        .map(|y| row[y])
                        .sum()
                })
                .collect();
            let bang = (0..yw)
                .filter(|&y| owners[y] == 0)
                .fold(0.0, |acc, y| acc + row[y]);
            max_norm = max_norm.max((tilde.iter().sum::<f64>() + bang - 1.0).abs());
            for cell in 0..cells {
                let excess = omega[z * cells + cell] - tilde[cell % keys];
                checked += 1;
                if excess > 0.0 {
                    violations += 1;
                    max_excess = max_excess.max(excess);
                }
            }
        }
    }
    Ok(KeyGuessReport {
        structural,
        deterministic_decoder: code.has_deterministic_decoder(),
        attacks: attacks.len(),
        cells_checked: checked,
        violations,
        max_excess,
        max_normalization_error: max_norm,
        passed: violations == 0 && max_norm <= 1e-12,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoTailCase {
    pub label: String,
    pub n: usize,
    pub c: Bits,
    pub mutual_information: Bits,
    /// `I(A; B) ≤ c`.
    pub hypothesis_holds: bool,
    /// Exact `Pr(p(A|B) > p(A) 2^{nc})`.
    pub exact_tail: f64,
    pub observed_frequency: f64,
    /// `1/n + 1/(nc)`.
    pub bound: f64,
    /// Within the bound, or the hypothesis fails and the case is informational.
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinomialCase {
    pub q: f64,
    pub k: u64,
    pub alpha: f64,
    /// `"more"` for `α > 1`, `"less"` for `α < 1`.
    pub direction: String,
    pub exact_tail: f64,
    pub observed_frequency: f64,
    /// `e^{−c(α) q k}` with `c(α) = α ln α − α + 1`.
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub trials: usize,
    pub info_tails: Vec<InfoTailCase>,
    pub binomial: Vec<BinomialCase>,
    pub passed: bool,
}

const BINOMIAL_CASES: [(f64, u64, f64); 5] = [
    (0.5, 100, 2.0),
    (0.1, 200, 1.5),
    (0.3, 100, 0.5),
    (0.05, 400, 2.0),
    (0.2, 50, 0.4),
];

/// Monte Carlo and exact checks of the mutual-information tail bound and of
/// the binomial concentration bound.
pub fn tail_bound_checks(rng_seed: u64, trials: usize) -> Result<TailReport> {
    if trials < 1000 {
        return Err(Error::InvalidParameter(format!(
            "need at least 1000 trials, got {trials}"
        )));
    }
    let mut info_tails = Vec::new();
    let mut unit = 0u64;
    let mut next_rng = || {
        unit += 1;
        substream(rng_seed, RNG_MODULE, unit - 1)
    };

    {
        let mut rng = next_rng();
        let a = random_simplex(&mut rng, 4);
        let b = random_simplex(&mut rng, 3);
        let joint: Vec<f64> = a
            .iter()
            .flat_map(|&pa| b.iter().map(move |&pb| pa * pb))
            .collect();
        info_tails.push(info_tail_case(
            "independent",
            &joint,
            4,
            3,
            4,
            0.5,
            &mut rng,
            trials,
        ));
    }
    for (i, n) in [2usize, 4, 8, 16].into_iter().enumerate() {
        let mut rng = next_rng();
        let joint = random_simplex(&mut rng, 16);
        let c = joint_information(&joint, 4, 4).max(0.05);
        info_tails.push(info_tail_case(
            &format!("random-{i}"),
            &joint,
            4,
            4,
            n,
            c,
            &mut rng,
            trials,
        ));
    }
    {
        // A = B uniform on 2^{n c'} symbols with c' = 1 > c
        let (n, size) = (4usize, 16usize);
        let mut joint = vec![0.0; size * size];
        for a in 0..size {
            joint[a * size + a] = 1.0 / size as f64;
        }
        let mut rng = next_rng();
        info_tails.push(info_tail_case(
            "identical",
            &joint,
            size,
            size,
            n,
            0.5,
            &mut rng,
            trials,
        ));
    }

    let binomial = BINOMIAL_CASES
        .iter()
        .map(|&(q, k, alpha)| {
            let mut rng = next_rng();
            ck_case(q, k, alpha, &mut rng, trials)
        })
        .collect::<Vec<_>>();
    let passed = info_tails.iter().all(|c| c.passed) && binomial.iter().all(|c| c.passed);
    Ok(TailReport {
        trials,
        info_tails,
        binomial,
        passed,
    })
}

fn random_simplex(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

fn marginals(joint: &[f64], na: usize, nb: usize) -> (Vec<f64>, Vec<f64>) {
    let mut pa = vec![0.0; na];
    let mut pb = vec![0.0; nb];
    for a in 0..na {
        for b in 0..nb {
            pa[a] += joint[a * nb + b];
            pb[b] += joint[a * nb + b];
        }
    }
    (pa, pb)
}

fn joint_information(joint: &[f64], na: usize, nb: usize) -> Bits {
    let (pa, pb) = marginals(joint, na, nb);
    (entropy_of(&pa) + entropy_of(&pb) - entropy_of(joint)).max(0.0)
}

#[allow(clippy::too_many_arguments)]
fn info_tail_case(
    label: &str,
    joint: &[f64],
    na: usize,
    nb: usize,
    n: usize,
    c: Bits,
    rng: &mut impl Rng,
    trials: usize,
) -> InfoTailCase {
    let (pa, pb) = marginals(joint, na, nb);
    let scale = (n as f64 * c).exp2();
    let in_tail: Vec<bool> = (0..na * nb)
        .map(|i| {
            let (a, b) = (i / nb, i % nb);
            joint[i] > 0.0 && joint[i] / pb[b] > pa[a] * scale
        })
        .collect();
    let exact_tail = (0..na * nb)
        .filter(|&i| in_tail[i])
        .fold(0.0, |acc, i| acc + joint[i]);
    let mut cumulative = Vec::with_capacity(joint.len());
    let mut acc = 0.0;
    for &p in joint {
        acc += p;
        cumulative.push(acc);
    }
    let hits = (0..trials)
        .filter(|_| {
            let u = rng.gen::<f64>() * acc;
            let i = cumulative.partition_point(|&c| c <= u).min(joint.len() - 1);
            in_tail[i]
        })
        .count();
    let mi = joint_information(joint, na, nb);
    let bound = 1.0 / n as f64 + 1.0 / (n as f64 * c);
    let observed_frequency = hits as f64 / trials as f64;
    let hypothesis_holds = mi <= c + 1e-12;
    InfoTailCase {
        label: label.to_string(),
        n,
        c,
        mutual_information: mi,
        hypothesis_holds,
        exact_tail,
        observed_frequency,
        bound,
        passed: !hypothesis_holds || (exact_tail <= bound && observed_frequency <= bound),
    }
}

fn ck_case(q: f64, k: u64, alpha: f64, rng: &mut impl Rng, trials: usize) -> BinomialCase {
    let threshold = alpha * q * k as f64;
    let more = alpha > 1.0;
    let binomial = Binomial::new(q, k).expect("valid binomial parameters");
    let exact_tail = if more {
        1.0 - binomial.cdf(threshold.floor() as u64)
    } else if threshold.ceil() >= 1.0 {
        binomial.cdf(threshold.ceil() as u64 - 1)
    } else {
        0.0
    };
    let hits = (0..trials)
        .filter(|_| {
            let count = (0..k).filter(|_| rng.gen_bool(q)).count() as f64;
            if more {
                count > threshold
            } else {
                count < threshold
            }
        })
        .count();
    let c = alpha * alpha.ln() - alpha + 1.0;
    let bound = (-c * q * k as f64).exp();
    let observed_frequency = hits as f64 / trials as f64;
    BinomialCase {
        q,
        k,
        alpha,
        direction: if more { "more" } else { "less" }.to_string(),
        exact_tail,
        observed_frequency,
        bound,
        passed: exact_tail <= bound && observed_frequency <= bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{
        best_deterministic_attack, impostor_attack, substitution_attack, AttackKind,
    };
    use crate::channel::{bsc, DiscreteChannel};
    use crate::codes::{lai_toy_code, simmons_noiseless_code};
    use approx::assert_abs_diff_eq;

    fn attacks(code: &TabularCode, pair: &ChannelPair) -> Vec<AttackStrategy> {
        let mut out = vec![
            impostor_attack(code, pair).unwrap(),
            substitution_attack(code, pair).unwrap(),
            best_deterministic_attack(code, pair, 0.5).unwrap(),
        ];
        let mixed = out[0].mix(&out[2], 0.3).unwrap();
        out.push(mixed);
        out
    }

    #[test]
    fn holds_on_lai_codes() {
        for (tap, seed) in [
            (bsc(0.5).unwrap(), 0),
            (bsc(0.1).unwrap(), 1),
            (DiscreteChannel::identity(2), 2),
        ] {
            let code = lai_toy_code(4, 0.5, 0.25, &tap, seed).unwrap();
            let pair = ChannelPair::new(bsc(0.0).unwrap(), tap).unwrap();
            let r = key_guess_check(&code, &pair, &attacks(&code, &pair)).unwrap();
            assert!(r.structural);
            assert!(r.passed, "{r:?}");
            assert_eq!(r.cells_checked, 4 * 16 * 8);
        }
    }

    #[test]
    fn simmons_code_can_break_it() {
        let code = simmons_noiseless_code(2, 4, 1.0, 0).unwrap();
        let pair = ChannelPair::bsc_pair(0.0, 0.0).unwrap();
        let r = key_guess_check(&code, &pair, &attacks(&code, &pair)).unwrap();
        assert!(!r.structural);
        // shared words make the masses over keys add to more than one
        assert!(r.max_normalization_error > 0.0);
    }

    #[test]
    fn uniform_attack_normalizes() {
        let tap = bsc(0.3).unwrap();
        let code = lai_toy_code(3, 1.0 / 3.0, 1.0 / 3.0, &tap, 5).unwrap();
        let pair = ChannelPair::new(bsc(0.0).unwrap(), tap).unwrap();
        let uniform = AttackStrategy::new(AttackKind::Custom, vec![vec![0.125; 8]; 8]).unwrap();
        let r = key_guess_check(&code, &pair, &[uniform]).unwrap();
        assert!(r.passed);
        assert_abs_diff_eq!(r.max_normalization_error, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn tail_checks_pass_and_are_reproducible() {
        let a = tail_bound_checks(1, 2000).unwrap();
        assert!(a.passed, "{a:?}");
        assert_eq!(a, tail_bound_checks(1, 2000).unwrap());
        let independent = &a.info_tails[0];
        assert_eq!(independent.exact_tail, 0.0);
        assert_eq!(independent.observed_frequency, 0.0);
        let impossible = &a.binomial[0];
        assert_eq!(
            (impossible.exact_tail, impossible.observed_frequency),
            (0.0, 0.0)
        );
    }

    #[test]
    fn identical_variables_violate_the_hypothesis() {
        let r = tail_bound_checks(3, 1000).unwrap();
        let case = r
            .info_tails
            .iter()
            .find(|c| c.label == "identical")
            .unwrap();
        assert!(!case.hypothesis_holds);
        assert_abs_diff_eq!(case.mutual_information, 4.0, epsilon = 1e-12);
        // p(a|b) = 1 > p(a) 2^{nc} = 1/4 everywhere, bound 3/4
        assert_eq!(case.exact_tail, 1.0);
        assert_eq!(case.observed_frequency, 1.0);
        assert!(case.exact_tail > case.bound);
    }

    #[test]
    fn binomial_tails_against_independent_values() {
        // scipy.stats.binom: 1 - cdf(30, 200, 0.1) and cdf(14, 100, 0.3)
        let r = tail_bound_checks(0, 1000).unwrap();
        assert_abs_diff_eq!(
            r.binomial[1].exact_tail,
            0.00950831194697323,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            r.binomial[2].exact_tail,
            0.000157340968100142,
            epsilon = 1e-12
        );
    }

    #[test]
    fn too_few_trials_rejected() {
        assert!(tail_bound_checks(0, 999).is_err());
    }
}
