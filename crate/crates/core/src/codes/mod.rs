//! Small authentication codes stored as explicit tables.
//!
//! A code over blocklength `n` has an encoder `f(x | m, k)` and a decoder
//! `φ(a | y, k)` with `a ∈ M ∪ {!}`. Messages and keys are uniform. Words are
//! indexed big-endian as in [`crate::channel::tuple`].

mod lai;
mod simmons;
mod transform;

pub use lai::{check_lai_strategy, lai_toy_code, LaiCheck};
pub use simmons::simmons_noiseless_code;
pub use transform::{
    concentration_frequencies, gamma, key_expansion_transform, transform_error_mismatches,
    verify_gstar_gdagger, ConcentrationReport, GReport, ToleranceExpressions, TransformSpec,
    TransformedCode,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{pow_u128, product_extension, ChannelPair, DiscreteChannel, EnumerationCaps};
use crate::error::{Error, Result};
use crate::info::Bits;

/// Row sums of code tables must be within this of 1.
pub const ROW_TOL: f64 = 1e-9;

/// Sizes of a code. Rates are derived: `r = log₂|M| / n`, `κ = log₂|K| / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    pub n: usize,
    pub messages: usize,
    pub keys: usize,
    /// Target message-error and failure tolerance.
    pub delta: f64,
}

impl CodeParams {
    pub fn new(n: usize, messages: usize, keys: usize, delta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "blocklength must be positive".into(),
            ));
        }
        if messages == 0 || keys == 0 {
            return Err(Error::InvalidParameter(
                "message and key sets must be non-empty".into(),
            ));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::InvalidProbability {
                value: delta,
                reason: "delta must lie in [0, 1]",
            });
        }
        Ok(CodeParams {
            n,
            messages,
            keys,
            delta,
        })
    }

    /// From rates, requiring `2^{nr}` and `2^{nκ}` to be integers.
    pub fn from_rates(n: usize, r: Bits, kappa: Bits, delta: f64) -> Result<Self> {
        let messages = integer_power(n, r, "2^(n r)")?;
        let keys = integer_power(n, kappa, "2^(n kappa)")?;
        Self::new(n, messages, keys, delta)
    }

    pub fn r(&self) -> Bits {
        (self.messages as f64).log2() / self.n as f64
    }

    pub fn kappa(&self) -> Bits {
        (self.keys as f64).log2() / self.n as f64
    }
}

pub(crate) fn integer_power(n: usize, rate: Bits, what: &str) -> Result<usize> {
    if !(rate >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "{what}: rate must be non-negative, got {rate}"
        )));
    }
    let v = (n as f64 * rate).exp2();
    let rounded = v.round();
    if (v - rounded).abs() > 1e-9 * rounded.max(1.0) || rounded > usize::MAX as f64 / 2.0 {
        return Err(Error::InvalidParameter(format!(
            "{what} = {v} is not an integer"
        )));
    }
    Ok(rounded as usize)
}

/// Where a code came from, for replay.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeOrigin {
    pub construction: String,
    pub seed: Option<u64>,
}

/// Encoder rows are indexed by `m * |K| + k` and have `|X|^n` entries.
/// Decoder rows are indexed by `y * |K| + k` and have `|M| + 1` entries, the
/// last being the reject symbol `!`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularCode {
    pub params: CodeParams,
    pub input_alphabet: usize,
    pub output_alphabet: usize,
    pub encoder: Vec<Vec<f64>>,
    pub decoder: Vec<Vec<f64>>,
    pub origin: Option<CodeOrigin>,
}

impl TabularCode {
    pub fn new(
        params: CodeParams,
        input_alphabet: usize,
        output_alphabet: usize,
        encoder: Vec<Vec<f64>>,
        decoder: Vec<Vec<f64>>,
        origin: Option<CodeOrigin>,
    ) -> Result<Self> {
        let code = TabularCode {
            params,
            input_alphabet,
            output_alphabet,
            encoder,
            decoder,
            origin,
        };
        code.validate()?;
        Ok(code)
    }

    pub fn input_words(&self) -> usize {
        self.input_alphabet.pow(self.params.n as u32)
    }

    pub fn output_words(&self) -> usize {
        self.output_alphabet.pow(self.params.n as u32)
    }

    /// Column of the reject symbol in decoder rows.
    pub fn reject(&self) -> usize {
        self.params.messages
    }

    pub fn encoder_row(&self, m: usize, k: usize) -> &[f64] {
        &self.encoder[m * self.params.keys + k]
    }

    pub fn decoder_row(&self, y: usize, k: usize) -> &[f64] {
        &self.decoder[y * self.params.keys + k]
    }

    /// Total acceptance mass `φ(M | y, k)`.
    pub fn acceptance(&self, y: usize, k: usize) -> f64 {
        let row = self.decoder_row(y, k);
        row[..self.reject()].iter().sum()
    }

    /// Every decoder row puts all its mass on one symbol.
    pub fn has_deterministic_decoder(&self) -> bool {
        self.decoder
            .iter()
            .all(|row| row.iter().all(|&p| p == 0.0 || p == 1.0))
    }

    /// Invariant violations, each naming the broken invariant.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let p = &self.params;
        if p.n == 0 || p.messages == 0 || p.keys == 0 {
            out.push("params: n, |M| and |K| must be positive".to_string());
            return out;
        }
        if self.input_alphabet == 0 || self.output_alphabet == 0 {
            out.push("dimensions: alphabets must be non-empty".to_string());
            return out;
        }
        let caps = EnumerationCaps::from_env();
        for (what, words) in [
            ("input", self.input_alphabet),
            ("output", self.output_alphabet),
        ] {
            if let Err(e) = caps.check_table(&format!("{what} words"), pow_u128(words, p.n)) {
                out.push(format!("dimensions: {e}"));
                return out;
            }
        }
        let (xw, yw) = (self.input_words(), self.output_words());
        if self.encoder.len() != p.messages * p.keys {
            out.push(format!(
                "dimensions: encoder has {} rows, expected |M||K| = {}",
                self.encoder.len(),
                p.messages * p.keys
            ));
        }
        if self.decoder.len() != yw * p.keys {
            out.push(format!(
                "dimensions: decoder has {} rows, expected |Y|^n |K| = {}",
                self.decoder.len(),
                yw * p.keys
            ));
        }
        for (i, row) in self.encoder.iter().enumerate() {
            let (m, k) = (i / p.keys, i % p.keys);
            check_row(&mut out, row, xw, &format!("encoder row (m={m}, k={k})"));
        }
        for (i, row) in self.decoder.iter().enumerate() {
            let (y, k) = (i / p.keys, i % p.keys);
            check_row(
                &mut out,
                row,
                p.messages + 1,
                &format!("decoder row (y={y}, k={k})"),
            );
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some(v) if v.starts_with("dimensions") || v.starts_with("params") => {
                Err(Error::DimensionMismatch(v))
            }
            Some(v) => Err(Error::NotStochastic(v)),
        }
    }
}

fn check_row(out: &mut Vec<String>, row: &[f64], len: usize, what: &str) {
    if row.len() != len {
        out.push(format!(
            "dimensions: {what} has {} entries, expected {len}",
            row.len()
        ));
        return;
    }
    if let Some(v) = row.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        out.push(format!("row-stochastic: {what} has entry {v}"));
        return;
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > ROW_TOL {
        out.push(format!("row-stochastic: {what} sums to {total}"));
    }
}

fn check_channel(code: &TabularCode, ch: &DiscreteChannel, input: bool, what: &str) -> Result<()> {
    if ch.input_size() != code.input_alphabet {
        return Err(Error::DimensionMismatch(format!(
            "{what} takes {} input symbols, code sends {}",
            ch.input_size(),
            code.input_alphabet
        )));
    }
    if input && ch.output_size() != code.output_alphabet {
        return Err(Error::DimensionMismatch(format!(
            "{what} produces {} output symbols, code decodes {}",
            ch.output_size(),
            code.output_alphabet
        )));
    }
    Ok(())
}

/// `ε(m, k)` for every cell, indexed `m * |K| + k`.
pub fn message_error_cells(code: &TabularCode, main: &DiscreteChannel) -> Result<Vec<f64>> {
    check_channel(code, main, true, "main channel")?;
    let big = product_extension(main, code.params.n)?;
    let keys = code.params.keys;
    Ok((0..code.params.messages * keys)
        .into_par_iter()
        .map(|cell| {
            let (m, k) = (cell / keys, cell % keys);
            let mut correct = 0.0;
            for (x, &f) in code.encoder_row(m, k).iter().enumerate() {
                if f == 0.0 {
                    continue;
                }
                let mut inner = 0.0;
                for (y, &p) in big.row(x).iter().enumerate() {
                    if p != 0.0 {
                        inner += p * code.decoder_row(y, k)[m];
                    }
                }
                correct += f * inner;
            }
            1.0 - correct
        })
        .collect())
}

/// Average message error under uniform messages and keys.
pub fn message_error(code: &TabularCode, main: &DiscreteChannel) -> Result<f64> {
    let cells = message_error_cells(code, main)?;
    Ok(cells.iter().sum::<f64>() / cells.len() as f64)
}

/// Law of `(M, K, Y, Z)` induced by a code without interference, stored as
/// the conditionals `p(y | m, k)` and `p(z | m, k)`.
#[derive(Debug, Clone)]
pub struct CodeLaw {
    pub messages: usize,
    pub keys: usize,
    pub y_words: usize,
    pub z_words: usize,
    /// Rows `m * |K| + k`.
    pub y_given_mk: Vec<Vec<f64>>,
    pub z_given_mk: Vec<Vec<f64>>,
}

impl CodeLaw {
    pub fn new(code: &TabularCode, pair: &ChannelPair) -> Result<Self> {
        check_channel(code, &pair.main, true, "main channel")?;
        check_channel(code, &pair.tap, false, "tap channel")?;
        let n = code.params.n;
        let caps = EnumerationCaps::from_env();
        let cells = code.params.messages * code.params.keys;
        let main = product_extension(&pair.main, n)?;
        let tap = product_extension(&pair.tap, n)?;
        caps.check_table("p(y|m,k)", cells as u128 * main.output_size() as u128)?;
        caps.check_table("p(z|m,k)", cells as u128 * tap.output_size() as u128)?;
        let push = |ch: &DiscreteChannel| -> Vec<Vec<f64>> {
            (0..cells)
                .into_par_iter()
                .map(|cell| {
                    let mut out = vec![0.0; ch.output_size()];
                    for (x, &f) in code.encoder[cell].iter().enumerate() {
                        if f == 0.0 {
                            continue;
                        }
                        for (o, p) in out.iter_mut().zip(ch.row(x)) {
                            *o += f * p;
                        }
                    }
                    out
                })
                .collect()
        };
        Ok(CodeLaw {
            messages: code.params.messages,
            keys: code.params.keys,
            y_words: main.output_size(),
            z_words: tap.output_size(),
            y_given_mk: push(&main),
            z_given_mk: push(&tap),
        })
    }

    fn cell_weight(&self) -> f64 {
        1.0 / (self.messages * self.keys) as f64
    }

    /// `p(k, w)` where `w` is `y` or `z`, rows indexed by `k`.
    fn key_joint(&self, rows: &[Vec<f64>], words: usize) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; words]; self.keys];
        let c = self.cell_weight();
        for (cell, row) in rows.iter().enumerate() {
            let k = cell % self.keys;
            for (o, p) in out[k].iter_mut().zip(row) {
                *o += c * p;
            }
        }
        out
    }

    /// `p(k, y)`.
    pub fn key_y(&self) -> Vec<Vec<f64>> {
        self.key_joint(&self.y_given_mk, self.y_words)
    }

    /// `p(k, z)`.
    pub fn key_z(&self) -> Vec<Vec<f64>> {
        self.key_joint(&self.z_given_mk, self.z_words)
    }

    /// `p_Y`.
    pub fn y_marginal(&self) -> Vec<f64> {
        column_sums(&self.key_y())
    }

    /// `p_Z`.
    pub fn z_marginal(&self) -> Vec<f64> {
        column_sums(&self.key_z())
    }

    /// `p(k | z)` as rows indexed by `z`; `None` where `p(z) = 0`.
    pub fn key_given_z(&self) -> Vec<Option<Vec<f64>>> {
        let kz = self.key_z();
        (0..self.z_words)
            .map(|z| {
                let total: f64 = kz.iter().map(|row| row[z]).sum();
                (total > 0.0).then(|| kz.iter().map(|row| row[z] / total).collect())
            })
            .collect()
    }

    /// `p(y | k)`, rows indexed by `k`.
    pub fn y_given_k(&self) -> Vec<Vec<f64>> {
        let mut ky = self.key_y();
        let pk = 1.0 / self.keys as f64;
        for row in &mut ky {
            row.iter_mut().for_each(|v| *v /= pk);
        }
        ky
    }

    /// `I(Y; K)` in bits.
    pub fn key_information_y(&self) -> Bits {
        mutual_information_table(&self.key_y())
    }

    /// `I(Z; K)` in bits.
    pub fn key_leakage(&self) -> Bits {
        mutual_information_table(&self.key_z())
    }

    /// `H(K | Z)` in bits.
    pub fn key_equivocation(&self) -> Bits {
        ((self.keys as f64).log2() - self.key_leakage()).max(0.0)
    }
}

fn column_sums(rows: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; rows.first().map_or(0, Vec::len)];
    for row in rows {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    out
}

/// Mutual information of a joint table `p(a, b)`.
pub(crate) fn mutual_information_table(joint: &[Vec<f64>]) -> Bits {
    use crate::info::entropy_of;
    let pa: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let pb = column_sums(joint);
    let hab: f64 = joint.iter().map(|r| entropy_of(r)).sum();
    (entropy_of(&pa) + entropy_of(&pb) - hab).max(0.0)
}
