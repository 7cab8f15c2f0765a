use rand::seq::index::sample;

use super::{integer_power, CodeOrigin, CodeParams, TabularCode};
use crate::channel::{pow_u128, EnumerationCaps};
use crate::error::{Error, Result};
use crate::info::Bits;
use crate::rng::substream;

const RNG_MODULE: &str = "auth_codes.simmons";

/// Simmons' scheme for a noiseless channel over an alphabet of size `q`.
///
/// Each of the `2^{nκ}` keys gets an independent uniformly random subset of
/// `q^n / 2^{nκ/2}` words, sorted ascending. Message `m` under key `k` is
/// sent as the `m`-th word of the subset; the decoder accepts exactly the
/// subset and returns the word's position.
pub fn simmons_noiseless_code(
    q: usize,
    n: usize,
    kappa: Bits,
    rng_seed: u64,
) -> Result<TabularCode> {
    if q < 2 {
        return Err(Error::InvalidParameter(format!(
            "alphabet must have at least 2 symbols, got {q}"
        )));
    }
    let keys = integer_power(n, kappa, "2^(n kappa)")?;
    let root = integer_power(n, kappa / 2.0, "2^(n kappa / 2)")?;
    let caps = EnumerationCaps::from_env();
    caps.check_table("simmons words", pow_u128(q, n))?;
    let words = q.pow(n as u32);
    if words % root != 0 {
        return Err(Error::InvalidParameter(format!(
            "2^(n kappa / 2) = {root} does not divide |X|^n = {words}"
        )));
    }
    let messages = words / root;
    caps.check_table(
        "simmons encoder",
        messages as u128 * keys as u128 * words as u128,
    )?;
    caps.check_table(
        "simmons decoder",
        words as u128 * keys as u128 * (messages as u128 + 1),
    )?;
    let params = CodeParams::new(n, messages, keys, 0.0)?;

    let subsets: Vec<Vec<usize>> = (0..keys)
        .map(|k| {
            let mut rng = substream(rng_seed, RNG_MODULE, k as u64);
            let mut s = sample(&mut rng, words, messages).into_vec();
            s.sort_unstable();
            s
        })
        .collect();

    let mut encoder = vec![Vec::new(); messages * keys];
    for m in 0..messages {
        for (k, subset) in subsets.iter().enumerate() {
            let mut row = vec![0.0; words];
            row[subset[m]] = 1.0;
            encoder[m * keys + k] = row;
        }
    }
    let mut decoder = vec![Vec::new(); words * keys];
    for y in 0..words {
        for (k, subset) in subsets.iter().enumerate() {
            let mut row = vec![0.0; messages + 1];
            match subset.binary_search(&y) {
                Ok(m) => row[m] = 1.0,
                Err(_) => row[messages] = 1.0,
            }
            decoder[y * keys + k] = row;
        }
    }
    TabularCode::new(
        params,
        q,
        q,
        encoder,
        decoder,
        Some(CodeOrigin {
            construction: "simmons".into(),
            seed: Some(rng_seed),
        }),
    )
}
