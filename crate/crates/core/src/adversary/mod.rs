//! The adversary: attack strategies `ψ(y | z)` and the false-acceptance
//! functional
//!
//! ```text
//! ω(z, m, k) = Σ_y ψ(y | z) φ(M − {m} | y, k)
//! ```
//!
//! evaluated exactly on small codes.

mod bounds;
mod rate;

pub use bounds::{
    key_guess_check, tail_bound_checks, BinomialCase, InfoTailCase, KeyGuessReport, TailReport,
};
pub use rate::{
    best_substitution_success, deterministic_gap, exhaustive_deterministic_failure, mi_key_bounds,
    randomized_attack, typical_auth_rate, Attack, AuthRateBracket, DeterministicGap, KeyBounds,
    RateConfig,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelPair, EnumerationCaps};
use crate::codes::{CodeLaw, TabularCode};
use crate::error::{Error, Result};
use crate::info::Bits;

/// Cell tables longer than this are left out of serialized reports.
pub const CELL_ELISION_THRESHOLD: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    Impostor,
    Substitution,
    DeterministicTable,
    Custom,
}

/// `ψ(y | z)`, rows indexed by `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackStrategy {
    pub kind: AttackKind,
    pub rows: Vec<Vec<f64>>,
}

impl AttackStrategy {
    pub fn new(kind: AttackKind, rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || width == 0 {
            return Err(Error::DimensionMismatch("attack table is empty".into()));
        }
        for (z, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::DimensionMismatch(format!(
                    "attack row {z} has {} entries, expected {width}",
                    row.len()
                )));
            }
            if row.iter().any(|p| !(*p >= 0.0)) {
                return Err(Error::InvalidProbability {
                    value: row
                        .iter()
                        .copied()
                        .find(|p| !(*p >= 0.0))
                        .unwrap_or(f64::NAN),
                    reason: "attack probabilities must be non-negative",
                });
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::NotStochastic(format!(
                    "attack row {z} sums to {total}"
                )));
            }
        }
        Ok(AttackStrategy { kind, rows })
    }

    /// The attack sending `choice[z]` on observing `z`.
    pub fn deterministic(choice: &[usize], y_words: usize) -> Result<Self> {
        let rows = choice
            .iter()
            .map(|&y| {
                if y >= y_words {
                    return Err(Error::DimensionMismatch(format!(
                        "word {y} is outside 0..{y_words}"
                    )));
                }
                let mut row = vec![0.0; y_words];
                row[y] = 1.0;
                Ok(row)
            })
            .collect::<Result<_>>()?;
        Self::new(AttackKind::DeterministicTable, rows)
    }

    /// `t ψ₁ + (1 − t) ψ₂`.
    pub fn mix(&self, other: &AttackStrategy, t: f64) -> Result<Self> {
        if self.rows.len() != other.rows.len() || self.y_words() != other.y_words() {
            return Err(Error::DimensionMismatch(
                "attacks have different shapes".into(),
            ));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidProbability {
                value: t,
                reason: "mixing weight must lie in [0, 1]",
            });
        }
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| t * x + (1.0 - t) * y)
                    .collect()
            })
            .collect();
        Self::new(AttackKind::Custom, rows)
    }

    pub fn z_words(&self) -> usize {
        self.rows.len()
    }

    pub fn y_words(&self) -> usize {
        self.rows[0].len()
    }

    pub fn is_deterministic(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.iter().all(|&p| p == 0.0 || p == 1.0))
    }
}

/// A code together with the law it induces, the shared input of every
/// adversary computation.
pub(crate) struct Scenario<'a> {
    pub code: &'a TabularCode,
    pub law: CodeLaw,
    /// `φ(M | y, k)`, indexed `y * |K| + k`.
    pub acceptance: Vec<f64>,
}

impl<'a> Scenario<'a> {
    pub fn new(code: &'a TabularCode, pair: &ChannelPair) -> Result<Self> {
        code.validate()?;
        let law = CodeLaw::new(code, pair)?;
        let keys = code.params.keys;
        let cells = law.z_words as u128 * (code.params.messages * keys) as u128;
        EnumerationCaps::from_env().check_table("omega cells", cells)?;
        let acceptance = (0..code.output_words() * keys)
            .map(|i| code.acceptance(i / keys, i % keys))
            .collect();
        Ok(Scenario {
            code,
            law,
            acceptance,
        })
    }

    pub fn n(&self) -> usize {
        self.code.params.n
    }

    pub fn cells(&self) -> usize {
        self.law.messages * self.law.keys
    }

    /// `p(z, m, k)` with the cell index `m * |K| + k`.
    pub fn weight(&self, z: usize, cell: usize) -> f64 {
        self.law.z_given_mk[cell][z] / self.cells() as f64
    }

    /// `φ(M − {m} | y, k)`.
    pub fn substitution_mass(&self, y: usize, cell: usize) -> f64 {
        let keys = self.law.keys;
        let (m, k) = (cell / keys, cell % keys);
        let acc = self.acceptance[y * keys + k];
        (acc - self.code.decoder_row(y, k)[m]).max(0.0)
    }

    pub fn check_attack(&self, psi: &AttackStrategy) -> Result<()> {
        if psi.z_words() != self.law.z_words || psi.y_words() != self.law.y_words {
            return Err(Error::DimensionMismatch(format!(
                "attack maps {} observations to {} words; code needs {} to {}",
                psi.z_words(),
                psi.y_words(),
                self.law.z_words,
                self.law.y_words
            )));
        }
        Ok(())
    }

    /// `ω` for every `(z, m, k)`, indexed `z * |M||K| + m * |K| + k`.
    pub fn omega(&self, psi: &AttackStrategy) -> Result<Vec<f64>> {
        self.check_attack(psi)?;
        let cells = self.cells();
        let per_z: Vec<Vec<f64>> = (0..self.law.z_words)
            .into_par_iter()
            .map(|z| {
                let support: Vec<(usize, f64)> = psi.rows[z]
                    .iter()
                    .copied()
                    .enumerate()
                    .filter(|&(_, p)| p > 0.0)
                    .collect();
                (0..cells)
                    .map(|cell| {
                        support
                            .iter()
                            .map(|&(y, p)| p * self.substitution_mass(y, cell))
                            .sum::<f64>()
                            .min(1.0)
                    })
                    .collect()
            })
            .collect();
        Ok(per_z.into_iter().flatten().collect())
    }

    pub fn failure_prob(&self, omega: &[f64], a: Bits) -> f64 {
        let cells = self.cells();
        let n = self.n();
        omega
            .iter()
            .enumerate()
            .filter(|&(_, &w)| fails(w, n, a))
            .map(|(i, _)| self.weight(i / cells, i % cells))
            .fold(0.0, |acc, w| acc + w)
            .min(1.0)
    }
}

/// `−n⁻¹ log₂ ω < a`.
pub fn fails(omega: f64, n: usize, a: Bits) -> bool {
    omega > 0.0 && -omega.log2() / (n as f64) < a
}

/// Weighted order statistics of `ω` over cells with positive probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaSummary {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaCell {
    pub z: usize,
    pub m: usize,
    pub k: usize,
    pub omega: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaReport {
    pub attack: AttackKind,
    pub n: usize,
    pub threshold_a: Bits,
    /// `Pr(−n⁻¹ log₂ ω(Z, M, K) < a)`.
    pub failure_prob: f64,
    pub summary: OmegaSummary,
    /// Cells with `p(z, m, k) > 0`; `None` when there are more than
    /// [`CELL_ELISION_THRESHOLD`].
    pub cells: Option<Vec<OmegaCell>>,
}

impl OmegaReport {
    /// `ω` at `(z, m, k)` when cells are present.
    pub fn omega_at(&self, z: usize, m: usize, k: usize) -> Option<f64> {
        self.cells
            .as_ref()?
            .iter()
            .find(|c| (c.z, c.m, c.k) == (z, m, k))
            .map(|c| c.omega)
    }
}

/// Exact `ω` for every cell and the failure probability at threshold `a`.
pub fn omega_exact(
    code: &TabularCode,
    pair: &ChannelPair,
    psi: &AttackStrategy,
    threshold_a: Bits,
) -> Result<OmegaReport> {
    let s = Scenario::new(code, pair)?;
    report(&s, psi, threshold_a)
}

pub(crate) fn report(s: &Scenario, psi: &AttackStrategy, threshold_a: Bits) -> Result<OmegaReport> {
    let omega = s.omega(psi)?;
    let cells = s.cells();
    let keys = s.law.keys;
    let mut positive: Vec<OmegaCell> = omega
        .iter()
        .enumerate()
        .filter_map(|(i, &w)| {
            let (z, cell) = (i / cells, i % cells);
            let weight = s.weight(z, cell);
            (weight > 0.0).then_some(OmegaCell {
                z,
                m: cell / keys,
                k: cell % keys,
                omega: w,
                weight,
            })
        })
        .collect();
    let summary = summarize(&positive);
    let failure_prob = s.failure_prob(&omega, threshold_a);
    if positive.len() > CELL_ELISION_THRESHOLD {
        positive = Vec::new();
    }
    let cells_out = (!positive.is_empty()).then_some(positive);
    Ok(OmegaReport {
        attack: psi.kind,
        n: s.n(),
        threshold_a,
        failure_prob,
        summary,
        cells: cells_out,
    })
}

fn summarize(cells: &[OmegaCell]) -> OmegaSummary {
    let mut sorted: Vec<(f64, f64)> = cells.iter().map(|c| (c.omega, c.weight)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = sorted.iter().map(|c| c.1).sum();
    let quantile = |q: f64| {
        let mut acc = 0.0;
        for &(w, p) in &sorted {
            acc += p;
            if acc >= q * total - 1e-15 {
                return w;
            }
        }
        sorted.last().map_or(0.0, |c| c.0)
    };
    OmegaSummary {
        min: sorted.first().map_or(0.0, |c| c.0),
        q25: quantile(0.25),
        median: quantile(0.5),
        q75: quantile(0.75),
        max: sorted.last().map_or(0.0, |c| c.0),
        mean: if total > 0.0 {
            sorted.iter().map(|(w, p)| w * p).sum::<f64>() / total
        } else {
            0.0
        },
    }
}

/// `ψ(y | z) = p_Y(y)` for every `z`.
pub fn impostor_attack(code: &TabularCode, pair: &ChannelPair) -> Result<AttackStrategy> {
    let s = Scenario::new(code, pair)?;
    Ok(impostor(&s))
}

pub(crate) fn impostor(s: &Scenario) -> AttackStrategy {
    let py = s.law.y_marginal();
    AttackStrategy {
        kind: AttackKind::Impostor,
        rows: vec![py; s.law.z_words],
    }
}

/// `ψ(y | z) = Σ_k p(y | k) p(k | z)`. Observations with `p(z) = 0` get
/// `p_Y`.
pub fn substitution_attack(code: &TabularCode, pair: &ChannelPair) -> Result<AttackStrategy> {
    let s = Scenario::new(code, pair)?;
    Ok(substitution(&s))
}

pub(crate) fn substitution(s: &Scenario) -> AttackStrategy {
    let y_given_k = s.law.y_given_k();
    let py = s.law.y_marginal();
    let rows = s
        .law
        .key_given_z()
        .into_par_iter()
        .map(|post| match post {
            Some(pk) => {
                let mut row = vec![0.0; s.law.y_words];
                for (k, &w) in pk.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    for (o, p) in row.iter_mut().zip(&y_given_k[k]) {
                        *o += w * p;
                    }
                }
                row
            }
            None => py.clone(),
        })
        .collect();
    AttackStrategy {
        kind: AttackKind::Substitution,
        rows,
    }
}

/// For each `z`, the single word maximizing the conditional probability of
/// a failure at threshold `a`; ties go to the lowest word.
pub fn best_deterministic_attack(
    code: &TabularCode,
    pair: &ChannelPair,
    a: Bits,
) -> Result<AttackStrategy> {
    let s = Scenario::new(code, pair)?;
    best_deterministic(&s, a)
}

pub(crate) fn best_deterministic(s: &Scenario, a: Bits) -> Result<AttackStrategy> {
    let choice = per_z_argmax(s, |omega| if fails(omega, s.n(), a) { 1.0 } else { 0.0 });
    AttackStrategy::deterministic(
        &choice.iter().map(|c| c.0).collect::<Vec<_>>(),
        s.law.y_words,
    )
}

/// Per observation, the word maximizing `Σ_{m,k} p(z, m, k) score(φ(M − {m} | y, k))`
/// and the attained value.
pub(crate) fn per_z_argmax(s: &Scenario, score: impl Fn(f64) -> f64 + Sync) -> Vec<(usize, f64)> {
    let cells = s.cells();
    (0..s.law.z_words)
        .into_par_iter()
        .map(|z| {
            let weights: Vec<(usize, f64)> = (0..cells)
                .map(|c| (c, s.weight(z, c)))
                .filter(|&(_, w)| w > 0.0)
                .collect();
            let mut best = (0, f64::NEG_INFINITY);
            for y in 0..s.law.y_words {
                let v: f64 = weights
                    .iter()
                    .map(|&(c, w)| w * score(s.substitution_mass(y, c)))
                    .sum();
                if v > best.1 {
                    best = (y, v);
                }
            }
            (best.0, best.1.max(0.0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bsc, DiscreteChannel};
    use crate::codes::{lai_toy_code, simmons_noiseless_code, CodeParams};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn noiseless() -> ChannelPair {
        ChannelPair::bsc_pair(0.0, 0.0).unwrap()
    }

    #[test]
    fn single_message_means_zero_omega() {
        let params = CodeParams::new(1, 1, 2, 0.0).unwrap();
        let code = TabularCode::new(
            params,
            2,
            2,
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![1.0, 0.0]; 4],
            None,
        )
        .unwrap();
        let psi = impostor_attack(&code, &noiseless()).unwrap();
        let r = omega_exact(&code, &noiseless(), &psi, 1.0).unwrap();
        assert_eq!(r.summary.max, 0.0);
        assert_eq!(r.failure_prob, 0.0);
    }

    #[test]
    fn reject_only_decoder_means_zero_omega() {
        let code = crate::codes::fixtures::always_reject();
        let pair = ChannelPair::bsc_pair(0.1, 0.2).unwrap();
        for psi in [
            impostor_attack(&code, &pair).unwrap(),
            substitution_attack(&code, &pair).unwrap(),
        ] {
            assert_eq!(
                omega_exact(&code, &pair, &psi, 1.0).unwrap().summary.max,
                0.0
            );
        }
    }

    #[test]
    fn impostor_rows_are_constant_and_uniform_on_codewords() {
        let code = simmons_noiseless_code(2, 2, 0.0, 0).unwrap();
        let psi = impostor_attack(&code, &noiseless()).unwrap();
        assert!(psi.rows.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(psi.rows[0], vec![0.25; 4]);
    }

    #[test]
    fn substitution_equals_impostor_without_leakage() {
        let tap = bsc(0.5).unwrap();
        let code = lai_toy_code(4, 0.5, 0.25, &tap, 0).unwrap();
        let pair = ChannelPair::new(bsc(0.0).unwrap(), tap).unwrap();
        let a = impostor_attack(&code, &pair).unwrap();
        let b = substitution_attack(&code, &pair).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            let tv: f64 = ra.iter().zip(rb).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0;
            assert!(tv < 1e-9);
        }
    }

    #[test]
    fn full_leakage_lets_substitution_hit_the_key() {
        let tap = DiscreteChannel::identity(2);
        let code = lai_toy_code(4, 0.5, 0.25, &tap, 0).unwrap();
        let pair = ChannelPair::new(bsc(0.0).unwrap(), tap).unwrap();
        let psi = substitution_attack(&code, &pair).unwrap();
        let r = omega_exact(&code, &pair, &psi, 1.0).unwrap();
        // the observed key is right; the other message is picked half the time
        assert_abs_diff_eq!(r.summary.mean, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn impostor_beats_collision_floor_on_simmons() {
        let code = simmons_noiseless_code(2, 4, 1.0, 3).unwrap();
        let psi = impostor_attack(&code, &noiseless()).unwrap();
        let r = omega_exact(&code, &noiseless(), &psi, 1.0).unwrap();
        assert!(r.summary.mean >= 1.0 / 16.0);
    }

    #[test]
    fn universally_accepted_word_is_chosen() {
        // word 3 decodes to message 1 under both keys
        let params = CodeParams::new(1, 2, 2, 0.0).unwrap();
        let mut decoder = vec![vec![0.0, 0.0, 1.0]; 8];
        decoder[3 * 2] = vec![0.0, 1.0, 0.0];
        decoder[3 * 2 + 1] = vec![0.0, 1.0, 0.0];
        decoder[0] = vec![1.0, 0.0, 0.0];
        decoder[2 + 1] = vec![1.0, 0.0, 0.0];
        let encoder = vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ];
        let code = TabularCode::new(params, 4, 4, encoder, decoder, None).unwrap();
        let pair =
            ChannelPair::new(DiscreteChannel::identity(4), DiscreteChannel::identity(4)).unwrap();
        let psi = best_deterministic_attack(&code, &pair, 0.5).unwrap();
        let r = omega_exact(&code, &pair, &psi, 0.5).unwrap();
        assert!(psi.rows[0][3] == 1.0 && psi.rows[1][3] == 1.0);
        // word 3 substitutes message 0 under both keys; message 1 under key 0 falls to word 0
        assert_abs_diff_eq!(r.failure_prob, 0.75, epsilon = 1e-15);
    }

    #[test]
    fn bad_attacks_rejected() {
        assert!(AttackStrategy::new(AttackKind::Custom, vec![vec![0.5, 0.6]]).is_err());
        assert!(AttackStrategy::new(AttackKind::Custom, vec![vec![1.0, 0.0], vec![1.0]]).is_err());
        assert!(AttackStrategy::deterministic(&[0, 5], 4).is_err());
        let code = simmons_noiseless_code(2, 2, 0.0, 0).unwrap();
        let psi = AttackStrategy::deterministic(&[0, 1], 2).unwrap();
        assert!(omega_exact(&code, &noiseless(), &psi, 1.0).is_err());
    }

    #[test]
    fn failure_predicate_is_strict() {
        assert!(!fails(0.25, 4, 0.5));
        assert!(fails(0.25, 4, 0.5 + 1e-9));
        assert!(!fails(0.0, 4, 10.0));
        assert!(fails(1.0, 4, 1e-12));
        assert!(!fails(1.0, 4, 0.0));
    }

    proptest! {
        #[test]
        fn omega_is_bounded_and_linear(seed in 0u64..50, t in 0.0f64..=1.0, lq in 0.0f64..0.5) {
            let code = simmons_noiseless_code(2, 3, 2.0 / 3.0, seed).unwrap();
            let pair = ChannelPair::bsc_pair(0.0, lq).unwrap();
            let s = Scenario::new(&code, &pair).unwrap();
            let a = impostor(&s);
            let b = substitution(&s);
            let mixed = a.mix(&b, t).unwrap();
            let (wa, wb, wm) = (s.omega(&a).unwrap(), s.omega(&b).unwrap(), s.omega(&mixed).unwrap());
            for i in 0..wm.len() {
                prop_assert!((0.0..=1.0).contains(&wm[i]));
                prop_assert!((wm[i] - (t * wa[i] + (1.0 - t) * wb[i])).abs() < 1e-12);
            }
        }
    }
}
