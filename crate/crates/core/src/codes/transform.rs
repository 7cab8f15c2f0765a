use std::f64::consts::{E, LN_2};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{integer_power, message_error_cells, CodeOrigin, CodeParams, TabularCode};
use crate::channel::{DiscreteChannel, EnumerationCaps};
use crate::error::{Error, Result};
use crate::info::Bits;
use crate::rng::substream;

const RNG_MODULE: &str = "auth_codes.transform";

/// `γ = (4r + 2) ln 2 / (2 ln 2 − 1)`.
pub fn gamma(r: Bits) -> f64 {
    (4.0 * r + 2.0) * LN_2 / (2.0 * LN_2 - 1.0)
}

/// Injections `g_{k₂}: M̃ → M`, one per extra key `k₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub n: usize,
    pub beta: Bits,
    /// Computed from the original message rate.
    pub gamma: f64,
    /// `|M|` of the original code.
    pub messages: usize,
    /// `|M̃| = 2^{n(r − β)}`.
    pub reduced_messages: usize,
    /// `mappings[k₂][m̃] = g_{k₂}(m̃)`; there are `2^{2nβ}` of them.
    pub mappings: Vec<Vec<usize>>,
    pub rng_seed: Option<u64>,
}

impl TransformSpec {
    /// Draws each `g_{k₂}` uniformly among injections by shuffling `M` and
    /// keeping the first `|M̃|` entries.
    pub fn random(params: &CodeParams, beta: Bits, rng_seed: u64) -> Result<Self> {
        Self::random_trial(params, beta, rng_seed, 0)
    }

    fn random_trial(params: &CodeParams, beta: Bits, rng_seed: u64, trial: u64) -> Result<Self> {
        let (reduced, extra_keys) = sizes(params, beta)?;
        EnumerationCaps::from_env().check_table(
            "transform mappings",
            extra_keys as u128 * params.messages as u128,
        )?;
        let mut rng = substream(rng_seed, RNG_MODULE, trial);
        let mut base: Vec<usize> = (0..params.messages).collect();
        let mappings = (0..extra_keys)
            .map(|_| {
                base.shuffle(&mut rng);
                base[..reduced].to_vec()
            })
            .collect();
        Ok(TransformSpec {
            n: params.n,
            beta,
            gamma: gamma(params.r()),
            messages: params.messages,
            reduced_messages: reduced,
            mappings,
            rng_seed: Some(rng_seed),
        })
    }

    /// Uses the given mappings after checking sizes and injectivity.
    pub fn from_mappings(
        params: &CodeParams,
        beta: Bits,
        mappings: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let (reduced, extra_keys) = sizes(params, beta)?;
        let spec = TransformSpec {
            n: params.n,
            beta,
            gamma: gamma(params.r()),
            messages: params.messages,
            reduced_messages: reduced,
            mappings,
            rng_seed: None,
        };
        if spec.mappings.len() != extra_keys {
            return Err(Error::InvalidParameter(format!(
                "expected 2^(2 n beta) = {extra_keys} mappings, got {}",
                spec.mappings.len()
            )));
        }
        spec.check_injective()?;
        Ok(spec)
    }

    pub fn extra_keys(&self) -> usize {
        self.mappings.len()
    }

    pub fn check_injective(&self) -> Result<()> {
        for (k2, g) in self.mappings.iter().enumerate() {
            if g.len() != self.reduced_messages {
                return Err(Error::InvalidParameter(format!(
                    "mapping {k2} has {} entries, expected {}",
                    g.len(),
                    self.reduced_messages
                )));
            }
            let mut seen = vec![false; self.messages];
            for &m in g {
                if m >= self.messages || std::mem::replace(&mut seen[m], true) {
                    return Err(Error::InvalidParameter(format!(
                        "mapping {k2} is not an injection into M"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn sizes(params: &CodeParams, beta: Bits) -> Result<(usize, usize)> {
    let r = params.r();
    if !(beta >= 0.0) || beta > r + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "beta must lie in [0, r] = [0, {r}], got {beta}"
        )));
    }
    let extra_keys = integer_power(params.n, 2.0 * beta, "2^(2 n beta)")?;
    let shrink = integer_power(params.n, beta, "2^(n beta)")?;
    if params.messages % shrink != 0 {
        return Err(Error::InvalidParameter(format!(
            "2^(n beta) = {shrink} does not divide |M| = {}",
            params.messages
        )));
    }
    Ok((params.messages / shrink, extra_keys))
}

/// Both tolerance expressions attached to the transformed code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceExpressions {
    /// `max(2 log₂(γn)/n, 2δ + √δ + (γn)⁻¹)`, also the authentication-rate loss.
    pub delta_tilde: f64,
    /// `√δ + 2^{−n(r+1)−1} + 2δ + (γn)⁻¹`.
    pub proof_tolerance: f64,
    /// Smallest `β` for which the rate guarantee is stated, `2 log₂(γn)/n`.
    pub beta_min: Bits,
}

impl ToleranceExpressions {
    pub fn new(n: usize, r: Bits, delta: f64) -> Self {
        let g = gamma(r);
        let gn = g * n as f64;
        let beta_min = 2.0 * gn.log2() / n as f64;
        ToleranceExpressions {
            delta_tilde: beta_min.max(2.0 * delta + delta.sqrt() + 1.0 / gn),
            proof_tolerance: delta.sqrt()
                + (-(n as f64) * (r + 1.0) - 1.0).exp2()
                + 2.0 * delta
                + 1.0 / gn,
            beta_min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformedCode {
    pub code: TabularCode,
    pub warnings: Vec<String>,
    pub tolerances: ToleranceExpressions,
}

/// Builds the code with messages `M̃` and keys `(k₁, k₂)`, flattened as
/// `k₁ |K₂| + k₂`.
///
/// The encoder sends `f(· | g_{k₂}(m̃), k₁)`. The decoder reports `m̃` when
/// the original decodes `g_{k₂}(m̃)` and rejects when the original rejects
/// or decodes a message outside the image of `g_{k₂}`.
pub fn key_expansion_transform(
    code: &TabularCode,
    spec: &TransformSpec,
) -> Result<TransformedCode> {
    let p = code.params;
    if spec.n != p.n || spec.messages != p.messages {
        return Err(Error::DimensionMismatch(format!(
            "transform built for n = {}, |M| = {}; code has n = {}, |M| = {}",
            spec.n, spec.messages, p.n, p.messages
        )));
    }
    spec.check_injective()?;
    let (reduced, extra) = (spec.reduced_messages, spec.extra_keys());
    let keys = p.keys * extra;
    let caps = EnumerationCaps::from_env();
    caps.check_table(
        "transformed encoder",
        (reduced * keys) as u128 * code.input_words() as u128,
    )?;
    caps.check_table(
        "transformed decoder",
        (code.output_words() * keys) as u128 * (reduced as u128 + 1),
    )?;

    let tolerances = ToleranceExpressions::new(p.n, p.r(), p.delta);
    let mut warnings = Vec::new();
    if p.n < 3 {
        warnings.push(format!("blocklength n = {} is below 3", p.n));
    }
    if p.delta >= 5.0 / 24.0 {
        warnings.push(format!("delta = {} is not below 5/24", p.delta));
    }
    if spec.beta < tolerances.beta_min {
        warnings.push(format!(
            "beta = {} is below 2 log2(gamma n)/n = {}",
            spec.beta, tolerances.beta_min
        ));
    }

    let mut encoder = Vec::with_capacity(reduced * keys);
    for mt in 0..reduced {
        for k1 in 0..p.keys {
            for g in &spec.mappings {
                encoder.push(code.encoder_row(g[mt], k1).to_vec());
            }
        }
    }
    let mut decoder = Vec::with_capacity(code.output_words() * keys);
    let mut in_image = vec![false; p.messages];
    for y in 0..code.output_words() {
        for k1 in 0..p.keys {
            let base = code.decoder_row(y, k1);
            for g in &spec.mappings {
                in_image.iter_mut().for_each(|b| *b = false);
                let mut row = Vec::with_capacity(reduced + 1);
                for &m in g {
                    in_image[m] = true;
                    row.push(base[m]);
                }
                let dropped: f64 = (0..p.messages)
                    .filter(|&m| !in_image[m])
                    .map(|m| base[m])
                    .sum();
                row.push(base[p.messages] + dropped);
                decoder.push(row);
            }
        }
    }
    let params = CodeParams::new(p.n, reduced, keys, p.delta)?;
    let construction = match &code.origin {
        Some(o) => format!("{}+key-expansion", o.construction),
        None => "key-expansion".into(),
    };
    let code = TabularCode::new(
        params,
        code.input_alphabet,
        code.output_alphabet,
        encoder,
        decoder,
        Some(CodeOrigin {
            construction,
            seed: spec.rng_seed,
        }),
    )?;
    Ok(TransformedCode {
        code,
        warnings,
        tolerances,
    })
}

/// Cells `(m̃, k₁, k₂)` of `transformed` whose message error is not
/// bit-for-bit that of `(g_{k₂}(m̃), k₁)` in `original`.
pub fn transform_error_mismatches(
    original: &TabularCode,
    transformed: &TabularCode,
    spec: &TransformSpec,
    main: &DiscreteChannel,
) -> Result<Vec<(usize, usize, usize)>> {
    let (keys, extra) = (original.params.keys, spec.extra_keys());
    if transformed.params.messages != spec.reduced_messages
        || transformed.params.keys != keys * extra
    {
        return Err(Error::DimensionMismatch(
            "transformed code does not match the transform".into(),
        ));
    }
    let before = message_error_cells(original, main)?;
    let after = message_error_cells(transformed, main)?;
    let mut out = Vec::new();
    for mt in 0..spec.reduced_messages {
        for k1 in 0..keys {
            for (k2, g) in spec.mappings.iter().enumerate() {
                let tilde = after[mt * keys * extra + k1 * extra + k2];
                if tilde.to_bits() != before[g[mt] * keys + k1].to_bits() {
                    out.push((mt, k1, k2));
                }
            }
        }
    }
    Ok(out)
}

/// Exact image statistics of one set of mappings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GReport {
    /// Largest number of `k₂` whose image contains a given pair `{m, m'}`.
    pub max_pair_count: usize,
    /// Largest number of `k₂` whose image contains a given `m`.
    pub max_single_count: usize,
    /// `nγ`.
    pub pair_threshold: f64,
    /// `2^{1+nβ}`.
    pub single_threshold: f64,
    pub in_gstar: bool,
    pub in_gdagger: bool,
    /// `e⁻¹ 2^{−2(n(r+1)−1)}`, bounding the chance of leaving the pair set.
    pub gstar_bound: f64,
    /// `2^{nr} e^{−(2 ln 2 − 1) 2^{nβ}}`, bounding the chance of leaving the
    /// single set.
    pub gdagger_bound: f64,
}

fn r_of(spec: &TransformSpec) -> Bits {
    (spec.messages as f64).log2() / spec.n as f64
}

pub fn verify_gstar_gdagger(spec: &TransformSpec) -> Result<GReport> {
    let m = spec.messages;
    EnumerationCaps::from_env().check_table("pair counts", (m as u128) * (m as u128))?;
    let mut pairs = vec![0usize; m * m];
    let mut singles = vec![0usize; m];
    for g in &spec.mappings {
        for (i, &a) in g.iter().enumerate() {
            singles[a] += 1;
            for &b in &g[i + 1..] {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                pairs[lo * m + hi] += 1;
            }
        }
    }
    let n = spec.n as f64;
    let r = r_of(spec);
    let max_pair_count = pairs.iter().copied().max().unwrap_or(0);
    let max_single_count = singles.iter().copied().max().unwrap_or(0);
    let pair_threshold = n * spec.gamma;
    let single_threshold = (1.0 + n * spec.beta).exp2();
    Ok(GReport {
        max_pair_count,
        max_single_count,
        pair_threshold,
        single_threshold,
        in_gstar: max_pair_count as f64 <= pair_threshold,
        in_gdagger: max_single_count as f64 <= single_threshold,
        gstar_bound: (-2.0 * (n * (r + 1.0) - 1.0)).exp2() / E,
        gdagger_bound: (n * r).exp2() * (-(2.0 * LN_2 - 1.0) * (n * spec.beta).exp2()).exp(),
    })
}

/// Violation frequencies of the two image conditions over independent
/// mapping draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub trials: usize,
    pub gstar_violations: usize,
    pub gdagger_violations: usize,
    pub gstar_frequency: f64,
    pub gdagger_frequency: f64,
    pub gstar_bound: f64,
    pub gdagger_bound: f64,
    pub passed: bool,
}

/// Draws `trials` independent mapping sets and counts how often each
/// condition fails. Trial `t` uses substream `t` of `rng_seed`.
pub fn concentration_frequencies(
    params: &CodeParams,
    beta: Bits,
    trials: usize,
    rng_seed: u64,
) -> Result<ConcentrationReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let reports: Vec<GReport> = (0..trials as u64)
        .into_par_iter()
        .map(|t| verify_gstar_gdagger(&TransformSpec::random_trial(params, beta, rng_seed, t)?))
        .collect::<Result<_>>()?;
    let gstar_violations = reports.iter().filter(|r| !r.in_gstar).count();
    let gdagger_violations = reports.iter().filter(|r| !r.in_gdagger).count();
    let gstar_frequency = gstar_violations as f64 / trials as f64;
    let gdagger_frequency = gdagger_violations as f64 / trials as f64;
    let (gstar_bound, gdagger_bound) = (reports[0].gstar_bound, reports[0].gdagger_bound);
    Ok(ConcentrationReport {
        trials,
        gstar_violations,
        gdagger_violations,
        gstar_frequency,
        gdagger_frequency,
        gstar_bound,
        gdagger_bound,
        passed: gstar_frequency <= gstar_bound && gdagger_frequency <= gdagger_bound,
    })
}
