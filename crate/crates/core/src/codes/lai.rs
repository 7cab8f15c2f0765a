use rand::seq::SliceRandom;
use serde::Serialize;

use super::{CodeLaw, CodeOrigin, CodeParams, TabularCode};
use crate::channel::{tuple, ChannelPair, DiscreteChannel, EnumerationCaps};
use crate::error::{Error, Result};
use crate::info::Bits;
use crate::rng::substream;

const RNG_MODULE: &str = "auth_codes.lai";

/// A binary code in which every received word decodes under exactly one key.
///
/// Before a seeded coordinate permutation, a word is `(m, k ⊕ fold(s), s)`:
/// `nr` message bits, `nκ` masked key bits and `n − nr − nκ` bits of fresh
/// uniform randomness `s`. `fold` XORs `s` in `nκ`-bit chunks. The decoder
/// recovers the key from the word and accepts only under it. The main
/// channel is assumed noiseless; `tap` only has to take binary input.
pub fn lai_toy_code(
    n: usize,
    kappa: Bits,
    r: Bits,
    tap: &DiscreteChannel,
    rng_seed: u64,
) -> Result<TabularCode> {
    if tap.input_size() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "tap channel must take binary input, got {}",
            tap.input_size()
        )));
    }
    let message_bits = whole_bits(n, r, "n r")?;
    let key_bits = whole_bits(n, kappa, "n kappa")?;
    if message_bits + key_bits > n {
        return Err(Error::InvalidParameter(format!(
            "rate overflow: n(r + kappa) = {} exceeds n = {n}",
            message_bits + key_bits
        )));
    }
    let free_bits = n - message_bits - key_bits;
    let caps = EnumerationCaps::from_env();
    let (messages, keys, words) = (1usize << message_bits, 1usize << key_bits, 1usize << n);
    caps.check_table("lai encoder", (messages * keys) as u128 * words as u128)?;
    caps.check_table(
        "lai decoder",
        (words * keys) as u128 * (messages as u128 + 1),
    )?;
    let params = CodeParams::new(n, messages, keys, 0.0)?;

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut substream(rng_seed, RNG_MODULE, 0));
    let layout = Layout {
        n,
        message_bits,
        key_bits,
        free_bits,
        perm,
    };

    let weight = 1.0 / (1usize << free_bits) as f64;
    let mut encoder = Vec::with_capacity(messages * keys);
    for m in 0..messages {
        for k in 0..keys {
            let mut row = vec![0.0; words];
            for s in 0..1usize << free_bits {
                row[layout.word(m, k ^ layout.fold(s), s)] += weight;
            }
            encoder.push(row);
        }
    }
    let mut decoder = Vec::with_capacity(words * keys);
    for y in 0..words {
        let (m, t, s) = layout.split(y);
        let owner = t ^ layout.fold(s);
        for k in 0..keys {
            let mut row = vec![0.0; messages + 1];
            row[if k == owner { m } else { messages }] = 1.0;
            decoder.push(row);
        }
    }
    TabularCode::new(
        params,
        2,
        2,
        encoder,
        decoder,
        Some(CodeOrigin {
            construction: "lai-toy".into(),
            seed: Some(rng_seed),
        }),
    )
}

fn whole_bits(n: usize, rate: Bits, what: &str) -> Result<usize> {
    let v = n as f64 * rate;
    if !(v >= -1e-9) || (v - v.round()).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "{what} = {v} must be a non-negative integer"
        )));
    }
    Ok(v.round() as usize)
}

struct Layout {
    n: usize,
    message_bits: usize,
    key_bits: usize,
    free_bits: usize,
    /// Field position `i` is sent on coordinate `perm[i]`.
    perm: Vec<usize>,
}

impl Layout {
    fn fold(&self, s: usize) -> usize {
        if self.key_bits == 0 {
            return 0;
        }
        let mask = (1 << self.key_bits) - 1;
        let mut acc = 0;
        let mut rest = s;
        let mut remaining = self.free_bits;
        while remaining > 0 {
            acc ^= rest & mask;
            rest >>= self.key_bits;
            remaining = remaining.saturating_sub(self.key_bits);
        }
        acc
    }

    fn fields(&self) -> [(usize, usize); 3] {
        [
            (0, self.message_bits),
            (self.message_bits, self.key_bits),
            (self.message_bits + self.key_bits, self.free_bits),
        ]
    }

    fn word(&self, m: usize, t: usize, s: usize) -> usize {
        let mut symbols = vec![0; self.n];
        for ((start, len), value) in self.fields().into_iter().zip([m, t, s]) {
            for j in 0..len {
                symbols[self.perm[start + j]] = (value >> (len - 1 - j)) & 1;
            }
        }
        tuple::encode(&symbols, 2)
    }

    fn split(&self, y: usize) -> (usize, usize, usize) {
        let symbols = tuple::decode(y, 2, self.n);
        let mut out = [0usize; 3];
        for (slot, (start, len)) in out.iter_mut().zip(self.fields()) {
            for j in 0..len {
                *slot = (*slot << 1) | symbols[self.perm[start + j]];
            }
        }
        (out[0], out[1], out[2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaiCheck {
    /// No received word is accepted under two keys.
    pub structural: bool,
    /// Words accepted under more than one key.
    pub shared_words: usize,
    /// `I(Z; K)` in bits, exact.
    pub leakage: Bits,
    pub passed: bool,
}

/// Checks the single-accepting-key property on the decoder table and
/// computes the key leakage to the adversary exactly.
pub fn check_lai_strategy(
    code: &TabularCode,
    pair: &ChannelPair,
    epsilon: Bits,
) -> Result<LaiCheck> {
    let keys = code.params.keys;
    let shared_words = (0..code.output_words())
        .filter(|&y| (0..keys).filter(|&k| code.acceptance(y, k) > 0.0).count() > 1)
        .count();
    let leakage = CodeLaw::new(code, pair)?.key_leakage();
    let structural = shared_words == 0;
    Ok(LaiCheck {
        structural,
        shared_words,
        leakage,
        passed: structural && leakage <= epsilon + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::bsc;
    use crate::codes::{fixtures, message_error, simmons_noiseless_code};
    use approx::assert_abs_diff_eq;

    #[test]
    fn independent_tap_leaks_nothing() {
        let tap = bsc(0.5).unwrap();
        let code = lai_toy_code(4, 0.5, 0.25, &tap, 1).unwrap();
        let pair = ChannelPair::new(bsc(0.0).unwrap(), tap).unwrap();
        let check = check_lai_strategy(&code, &pair, 0.0).unwrap();
        assert!(check.passed);
        assert_eq!(check.leakage, 0.0);
        assert_eq!(message_error(&code, &pair.main).unwrap(), 0.0);
    }

    #[test]
    fn identity_tap_leaks_the_key() {
        let tap = DiscreteChannel::identity(2);
        let code = lai_toy_code(4, 0.5, 0.25, &tap, 2).unwrap();
        let pair = ChannelPair::new(bsc(0.0).unwrap(), tap).unwrap();
        let check = check_lai_strategy(&code, &pair, 0.1).unwrap();
        assert!(check.structural);
        assert!(!check.passed);
        assert_abs_diff_eq!(check.leakage, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn noisy_tap_leakage_is_between_extremes() {
        let tap = bsc(0.2).unwrap();
        let code = lai_toy_code(4, 0.5, 0.25, &tap, 3).unwrap();
        let pair = ChannelPair::new(bsc(0.0).unwrap(), tap).unwrap();
        let check = check_lai_strategy(&code, &pair, 2.0).unwrap();
        assert!(check.structural && check.passed);
        assert!(check.leakage > 0.0 && check.leakage < 2.0);
    }

    #[test]
    fn every_word_has_one_owner() {
        for seed in 0..4 {
            let code = lai_toy_code(5, 0.4, 0.2, &bsc(0.1).unwrap(), seed).unwrap();
            for y in 0..code.output_words() {
                let owners = (0..code.params.keys)
                    .filter(|&k| code.acceptance(y, k) > 0.0)
                    .count();
                assert_eq!(owners, 1);
            }
        }
    }

    #[test]
    fn overflow_and_fractional_rates_rejected() {
        let tap = bsc(0.2).unwrap();
        assert!(lai_toy_code(4, 0.75, 0.5, &tap, 0).is_err());
        assert!(lai_toy_code(4, 0.3, 0.25, &tap, 0).is_err());
        assert!(lai_toy_code(4, 0.5, 0.25, &DiscreteChannel::identity(3), 0).is_err());
    }

    #[test]
    fn simmons_subsets_overlap_across_keys() {
        let code = simmons_noiseless_code(2, 4, 1.0, 0).unwrap();
        let pair = ChannelPair::bsc_pair(0.0, 0.0).unwrap();
        let check = check_lai_strategy(&code, &pair, 10.0).unwrap();
        assert!(!check.structural);
        assert!(check.shared_words > 0);
    }

    #[test]
    fn reject_only_decoder_is_vacuously_structural() {
        let code = fixtures::always_reject();
        let pair = ChannelPair::bsc_pair(0.0, 0.3).unwrap();
        let check = check_lai_strategy(&code, &pair, 0.0).unwrap();
        assert!(check.structural);
        assert_eq!(check.leakage, 0.0);
    }
}
