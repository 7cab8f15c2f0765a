use std::fmt;
use std::str::FromStr;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    best_deterministic, fails, impostor, per_z_argmax, substitution, AttackKind, AttackStrategy,
    Scenario,
};
use crate::channel::{check_cap, pow_u128, ChannelPair};
use crate::codes::TabularCode;
use crate::error::{Error, Result};
use crate::info::Bits;

/// An attack for [`typical_auth_rate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Attack {
    Impostor,
    Substitution,
    /// Rebuilt at every threshold.
    BestDeterministic,
    /// Rebuilt at every threshold from per-observation linear programs; see
    /// [`deterministic_gap`].
    Randomized,
    Fixed(AttackStrategy),
}

impl Attack {
    pub fn name(&self) -> &'static str {
        match self {
            Attack::Impostor => "impostor",
            Attack::Substitution => "substitution",
            Attack::BestDeterministic => "bestdet",
            Attack::Randomized => "randomized",
            Attack::Fixed(_) => "fixed",
        }
    }
}

impl fmt::Display for Attack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Attack {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "impostor" => Ok(Attack::Impostor),
            "substitution" => Ok(Attack::Substitution),
            "bestdet" => Ok(Attack::BestDeterministic),
            "randomized" => Ok(Attack::Randomized),
            other => Err(Error::InvalidParameter(format!(
                "unknown attack '{other}' (expected impostor, substitution, bestdet or randomized)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    /// Largest grid threshold tried, in bits per use.
    pub max_alpha: Bits,
    /// Added to the key bounds; `None` means `2 / n`.
    pub slack: Option<Bits>,
}

impl Default for RateConfig {
    fn default() -> Self {
        RateConfig {
            max_alpha: 4.0,
            slack: None,
        }
    }
}

/// `n⁻¹ I(Y; K)` and `n⁻¹ H(K | Z)` under no attack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyBounds {
    pub info_y: Bits,
    pub equivocation_z: Bits,
}

impl KeyBounds {
    pub fn min(&self) -> Bits {
        self.info_y.min(self.equivocation_z)
    }
}

pub fn mi_key_bounds(code: &TabularCode, pair: &ChannelPair) -> Result<KeyBounds> {
    let s = Scenario::new(code, pair)?;
    Ok(key_bounds(&s))
}

fn key_bounds(s: &Scenario) -> KeyBounds {
    let n = s.n() as f64;
    KeyBounds {
        info_y: s.law.key_information_y() / n,
        equivocation_z: s.law.key_equivocation() / n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackRate {
    pub attack: String,
    /// Largest grid threshold at which this attack alone stays within `ε`.
    pub alpha: Bits,
}

/// Both ends of the authentication-rate estimate.
///
/// `alpha_lb` is the grid point just below the first threshold `a` at which
/// some supplied attack fails with probability above `ε`. It bounds the true rate from
/// above only for the supplied family, so it is an estimate, not a
/// guarantee. `alpha_ub` is the key-information bound plus slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthRateBracket {
    pub epsilon: f64,
    pub grid_step: Bits,
    pub alpha_lb: Bits,
    pub alpha_ub: Bits,
    pub slack: Bits,
    pub bounds: KeyBounds,
    /// No attack ever fails up to the largest grid value.
    pub unbounded: bool,
    /// `alpha_lb ≤ alpha_ub + 1e-9`, or `unbounded`.
    pub consistent: bool,
    pub per_attack: Vec<AttackRate>,
}

/// Brackets the typical authentication rate of `code` at tolerance
/// `epsilon` on the dyadic grid `j / (8n)`.
pub fn typical_auth_rate(
    code: &TabularCode,
    pair: &ChannelPair,
    epsilon: f64,
    attacks: &[Attack],
    config: &RateConfig,
) -> Result<AuthRateBracket> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidProbability {
            value: epsilon,
            reason: "epsilon must lie in (0, 1)",
        });
    }
    if attacks.is_empty() {
        return Err(Error::InvalidParameter("attack set is empty".into()));
    }
    if !(config.max_alpha > 0.0) {
        return Err(Error::InvalidParameter(
            "largest grid threshold must be positive".into(),
        ));
    }
    let s = Scenario::new(code, pair)?;
    let n = s.n();
    let step = 1.0 / (8 * n) as f64;
    let top = (config.max_alpha / step + 1e-9).floor() as usize;

    enum Prepared {
        Omega(Vec<f64>),
        Deterministic,
        Randomized,
    }
    let prepared: Vec<Prepared> = attacks
        .iter()
        .map(|a| {
            Ok(match a {
                Attack::Impostor => Prepared::Omega(s.omega(&impostor(&s))?),
                Attack::Substitution => Prepared::Omega(s.omega(&substitution(&s))?),
                Attack::Fixed(psi) => Prepared::Omega(s.omega(psi)?),
                Attack::BestDeterministic => Prepared::Deterministic,
                Attack::Randomized => Prepared::Randomized,
            })
        })
        .collect::<Result<_>>()?;
    let passes = |p: &Prepared, j: usize| -> Result<bool> {
        let a = j as f64 * step;
        let f = match p {
            Prepared::Omega(w) => s.failure_prob(w, a),
            Prepared::Deterministic => s.failure_prob(&s.omega(&best_deterministic(&s, a)?)?, a),
            Prepared::Randomized => s.failure_prob(&s.omega(&randomized(&s, a)?)?, a),
        };
        Ok(f <= epsilon)
    };
    // Largest j below the first failing grid point, searching no further
    // than `limit`. Fixed attacks and the best deterministic attack fail
    // monotonically in j, so bisection is exact for them; the randomized
    // attack is a heuristic and gets an ascending scan.
    let largest = |p: &Prepared, limit: usize| -> Result<usize> {
        if let Prepared::Randomized = p {
            for j in 1..=limit {
                if !passes(p, j)? {
                    return Ok(j - 1);
                }
            }
            return Ok(limit);
        }
        if passes(p, limit)? {
            return Ok(limit);
        }
        let (mut lo, mut hi) = (0, limit);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if passes(p, mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    };

    let mut per_attack = Vec::with_capacity(attacks.len());
    for (a, p) in attacks.iter().zip(&prepared) {
        per_attack.push(AttackRate {
            attack: a.name().to_string(),
            alpha: largest(p, top)? as f64 * step,
        });
    }
    let j = per_attack
        .iter()
        .map(|r| (r.alpha / step).round() as usize)
        .min()
        .expect("attack set is not empty");
    let unbounded = j == top;
    let bounds = key_bounds(&s);
    let slack = config.slack.unwrap_or(2.0 / n as f64);
    let alpha_lb = j as f64 * step;
    let alpha_ub = bounds.min() + slack;
    Ok(AuthRateBracket {
        epsilon,
        grid_step: step,
        alpha_lb,
        alpha_ub,
        slack,
        bounds,
        unbounded,
        consistent: unbounded || alpha_lb <= alpha_ub + 1e-9,
        per_attack,
    })
}

/// Expected substitution success `E[ω]` of the best deterministic attack,
/// which is also the best over all attacks since `E[ω]` is linear in `ψ`.
pub fn best_substitution_success(
    code: &TabularCode,
    pair: &ChannelPair,
) -> Result<(f64, AttackStrategy)> {
    let s = Scenario::new(code, pair)?;
    let best = per_z_argmax(&s, |w| w);
    let value = best.iter().map(|b| b.1).sum::<f64>();
    let choice: Vec<usize> = best.iter().map(|b| b.0).collect();
    Ok((
        value.min(1.0),
        AttackStrategy::deterministic(&choice, s.law.y_words)?,
    ))
}

/// Largest failure probability over every deterministic attack, by listing
/// all `|Y|^{|Z|}` of them. Refuses above `2^16` attacks.
pub fn exhaustive_deterministic_failure(
    code: &TabularCode,
    pair: &ChannelPair,
    a: Bits,
) -> Result<f64> {
    let s = Scenario::new(code, pair)?;
    let (zw, yw) = (s.law.z_words, s.law.y_words);
    check_cap("deterministic attacks", pow_u128(yw, zw), 1 << 16)?;
    let total = yw.pow(zw as u32);
    let mut best: f64 = 0.0;
    let mut choice = vec![0usize; zw];
    for index in 0..total {
        let mut rest = index;
        for c in choice.iter_mut() {
            *c = rest % yw;
            rest /= yw;
        }
        let psi = AttackStrategy::deterministic(&choice, yw)?;
        best = best.max(s.failure_prob(&s.omega(&psi)?, a));
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapInstance {
    pub z: usize,
    pub deterministic: f64,
    pub mixed: f64,
}

/// Comparison of the best deterministic attack against randomized ones at a
/// single threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterministicGap {
    pub threshold_a: Bits,
    pub best_deterministic: f64,
    pub impostor: f64,
    pub substitution: f64,
    /// Failure probability of a randomized attack assembled from per-`z`
    /// linear programs, evaluated exactly.
    pub mixed_certified: f64,
    /// Observations where the randomized attack does strictly better.
    pub instances: Vec<GapInstance>,
    /// The best deterministic attack is at least as good as impostor and
    /// substitution.
    pub deterministic_dominates: bool,
    /// Some randomized attack beats every deterministic one.
    pub non_tight: bool,
}

/// Scores the attack behind [`Attack::Randomized`] exactly against the best
/// deterministic attack, so a reported gap is a certificate.
pub fn deterministic_gap(
    code: &TabularCode,
    pair: &ChannelPair,
    a: Bits,
) -> Result<DeterministicGap> {
    let s = Scenario::new(code, pair)?;
    let n = s.n();
    let det = per_z_argmax(&s, |w| if fails(w, n, a) { 1.0 } else { 0.0 });
    let best_deterministic: f64 = s.failure_prob(
        &s.omega(&AttackStrategy::deterministic(
            &det.iter().map(|d| d.0).collect::<Vec<_>>(),
            s.law.y_words,
        )?)?,
        a,
    );
    let impostor_f = s.failure_prob(&s.omega(&impostor(&s))?, a);
    let substitution_f = s.failure_prob(&s.omega(&substitution(&s))?, a);

    let mixed = randomized(&s, a)?;
    let omega = s.omega(&mixed)?;
    let mixed_certified = s.failure_prob(&omega, a);
    let cells = s.cells();
    let instances = (0..s.law.z_words)
        .filter_map(|z| {
            let mixed_z = (0..cells)
                .filter(|&c| fails(omega[z * cells + c], n, a))
                .fold(0.0, |acc, c| acc + s.weight(z, c));
            (mixed_z > det[z].1 + 1e-12).then_some(GapInstance {
                z,
                deterministic: det[z].1,
                mixed: mixed_z,
            })
        })
        .collect();
    Ok(DeterministicGap {
        threshold_a: a,
        best_deterministic,
        impostor: impostor_f,
        substitution: substitution_f,
        mixed_certified,
        instances,
        deterministic_dominates: best_deterministic + 1e-12 >= impostor_f.max(substitution_f),
        non_tight: mixed_certified > best_deterministic + 1e-12,
    })
}

/// For each observation, greedily collects cells (heaviest first) that one
/// `ψ(· | z)` can push above `2^{−na}` simultaneously, deciding each step by
/// linear feasibility. Observations with nothing feasible fall back to the
/// best deterministic choice.
pub fn randomized_attack(
    code: &TabularCode,
    pair: &ChannelPair,
    a: Bits,
) -> Result<AttackStrategy> {
    randomized(&Scenario::new(code, pair)?, a)
}

pub(crate) fn randomized(s: &Scenario, a: Bits) -> Result<AttackStrategy> {
    let n = s.n();
    let threshold = (-(n as f64) * a).exp2();
    let det = per_z_argmax(s, |w| if fails(w, n, a) { 1.0 } else { 0.0 });
    let yw = s.law.y_words;
    let rows = (0..s.law.z_words)
        .into_par_iter()
        .map(|z| {
            let mut cells: Vec<(usize, f64)> = (0..s.cells())
                .map(|c| (c, s.weight(z, c)))
                .filter(|&(_, w)| w > 0.0)
                .collect();
            cells.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
            let mut chosen: Vec<usize> = Vec::new();
            let mut row = vec![0.0; yw];
            row[det[z].0] = 1.0;
            for &(c, _) in &cells {
                chosen.push(c);
                match lp_attack(s, &chosen, threshold, yw) {
                    Some(r) => row = r,
                    None => {
                        chosen.pop();
                    }
                }
            }
            row
        })
        .collect();
    AttackStrategy::new(AttackKind::Custom, rows)
}

/// A `ψ(· | z)` giving every listed cell `ω` strictly above `threshold`, if
/// one exists. The margin is maximized so rounding cannot undo strictness.
fn lp_attack(s: &Scenario, cells: &[usize], threshold: f64, yw: usize) -> Option<Vec<f64>> {
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let psi: Vec<_> = (0..yw).map(|_| problem.add_var(0.0, (0.0, 1.0))).collect();
    let margin = problem.add_var(1.0, (f64::NEG_INFINITY, 1.0));
    let ones: Vec<_> = psi.iter().map(|&v| (v, 1.0)).collect();
    problem.add_constraint(&ones, ComparisonOp::Eq, 1.0);
    for &c in cells {
        let mut terms: Vec<_> = (0..yw)
            .map(|y| (psi[y], s.substitution_mass(y, c)))
            .filter(|t| t.1 != 0.0)
            .collect();
        terms.push((margin, -1.0));
        problem.add_constraint(&terms, ComparisonOp::Ge, threshold);
    }
    let solution = problem.solve().ok()?;
    if solution[margin] <= 1e-9 {
        return None;
    }
    let mut row: Vec<f64> = psi.iter().map(|&v| solution[v].max(0.0)).collect();
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|v| *v /= total);
    let ok = cells.iter().all(|&c| {
        let w: f64 = (0..yw).map(|y| row[y] * s.substitution_mass(y, c)).sum();
        w > threshold
    });
    ok.then_some(row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::impostor_attack;
    use crate::channel::{bsc, DiscreteChannel};
    use crate::codes::{lai_toy_code, simmons_noiseless_code, CodeParams};
    use approx::assert_abs_diff_eq;

    fn noiseless() -> ChannelPair {
        ChannelPair::bsc_pair(0.0, 0.0).unwrap()
    }

    #[test]
    fn attack_names_parse() {
        assert_eq!(
            "bestdet".parse::<Attack>().unwrap(),
            Attack::BestDeterministic
        );
        assert!("magic".parse::<Attack>().is_err());
        assert_eq!("randomized".parse::<Attack>().unwrap(), Attack::Randomized);
    }

    #[test]
    fn randomized_attack_never_loses_to_the_deterministic_one() {
        let code = simmons_noiseless_code(2, 4, 1.0, 0).unwrap();
        let det = typical_auth_rate(
            &code,
            &noiseless(),
            0.1,
            &[Attack::BestDeterministic],
            &RateConfig::default(),
        )
        .unwrap();
        let both = typical_auth_rate(
            &code,
            &noiseless(),
            0.1,
            &[Attack::BestDeterministic, Attack::Randomized],
            &RateConfig::default(),
        )
        .unwrap();
        assert!(both.alpha_lb <= det.alpha_lb);
        assert!(both.consistent);
    }

    #[test]
    fn single_message_is_unbounded() {
        let params = CodeParams::new(2, 1, 2, 0.0).unwrap();
        let encoder = vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]];
        let decoder = vec![vec![1.0, 0.0]; 8];
        let code = TabularCode::new(params, 2, 2, encoder, decoder, None).unwrap();
        let attacks = [
            Attack::Impostor,
            Attack::Substitution,
            Attack::BestDeterministic,
        ];
        let b =
            typical_auth_rate(&code, &noiseless(), 0.1, &attacks, &RateConfig::default()).unwrap();
        assert!(b.unbounded);
        assert_eq!(b.alpha_lb, 4.0);
        assert!(b.consistent);
    }

    #[test]
    fn unused_key_gives_zero_information() {
        let code = crate::codes::fixtures::keyless_identity();
        let k = mi_key_bounds(&code, &ChannelPair::bsc_pair(0.1, 0.1).unwrap()).unwrap();
        assert_eq!(k.info_y, 0.0);
        assert_abs_diff_eq!(k.equivocation_z, 1.0);
    }

    #[test]
    fn lai_code_reveals_key_to_bob_only() {
        let tap = bsc(0.5).unwrap();
        let code = lai_toy_code(4, 0.5, 0.25, &tap, 0).unwrap();
        let pair = ChannelPair::new(bsc(0.0).unwrap(), tap).unwrap();
        let k = mi_key_bounds(&code, &pair).unwrap();
        assert_abs_diff_eq!(k.info_y, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(k.equivocation_z, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn bracket_is_consistent_on_simmons() {
        let code = simmons_noiseless_code(2, 4, 1.0, 1).unwrap();
        let attacks = [
            Attack::Impostor,
            Attack::Substitution,
            Attack::BestDeterministic,
        ];
        let b =
            typical_auth_rate(&code, &noiseless(), 0.1, &attacks, &RateConfig::default()).unwrap();
        assert!(b.consistent);
        assert!(!b.unbounded);
        assert_eq!(b.grid_step, 1.0 / 32.0);
        assert!(b.alpha_lb <= b.alpha_ub);
    }

    #[test]
    fn errors_for_bad_inputs() {
        let code = simmons_noiseless_code(2, 2, 1.0, 1).unwrap();
        assert!(typical_auth_rate(
            &code,
            &noiseless(),
            0.0,
            &[Attack::Impostor],
            &RateConfig::default()
        )
        .is_err());
        assert!(typical_auth_rate(&code, &noiseless(), 0.1, &[], &RateConfig::default()).is_err());
    }

    #[test]
    fn per_z_argmax_matches_exhaustive_search() {
        for seed in 0..6 {
            let code = simmons_noiseless_code(2, 2, 1.0, seed).unwrap();
            for a in [0.1, 0.25, 0.5, 1.0] {
                let s = Scenario::new(&code, &noiseless()).unwrap();
                let det = s.failure_prob(&s.omega(&best_deterministic(&s, a).unwrap()).unwrap(), a);
                let oracle = exhaustive_deterministic_failure(&code, &noiseless(), a).unwrap();
                assert_abs_diff_eq!(det, oracle, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn exhaustive_search_refuses_large_instances() {
        let code = simmons_noiseless_code(2, 4, 1.0, 0).unwrap();
        assert!(matches!(
            exhaustive_deterministic_failure(&code, &noiseless(), 0.5),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn randomizing_beats_deterministic_at_high_thresholds() {
        let code = simmons_noiseless_code(2, 4, 1.0, 0).unwrap();
        let gap = deterministic_gap(&code, &noiseless(), 0.9).unwrap();
        assert!(gap.non_tight);
        assert!(!gap.deterministic_dominates);
        assert!(gap.mixed_certified > gap.best_deterministic);
        let psi = impostor_attack(&code, &noiseless()).unwrap();
        let r = crate::adversary::omega_exact(&code, &noiseless(), &psi, 0.9).unwrap();
        assert_abs_diff_eq!(r.failure_prob, gap.impostor, epsilon = 1e-15);
    }

    #[test]
    fn best_substitution_is_an_upper_bound_on_fixed_attacks() {
        let code = simmons_noiseless_code(2, 4, 1.0, 4).unwrap();
        let pair = ChannelPair::new(bsc(0.0).unwrap(), DiscreteChannel::identity(2)).unwrap();
        let (best, psi) = best_substitution_success(&code, &pair).unwrap();
        assert!(psi.is_deterministic());
        for other in [
            impostor_attack(&code, &pair).unwrap(),
            crate::adversary::substitution_attack(&code, &pair).unwrap(),
        ] {
            let r = crate::adversary::omega_exact(&code, &pair, &other, 1.0).unwrap();
            assert!(r.summary.mean <= best + 1e-12);
        }
    }
}
