//! Finite-alphabet probability primitives.
//!
//! Alphabets are the index sets `0..size`. An `n`-tuple over an alphabet of
//! size `q` is stored as the integer whose base-`q` digits are the tuple,
//! symbol 0 being the most significant digit. Every enumeration in the crate
//! follows that order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for stochasticity checks on freshly constructed objects.
pub const CONSTRUCTION_TOL: f64 = 1e-9;
/// Tolerance after chained products and marginalizations.
pub const CHAINED_TOL: f64 = 1e-8;

/// Environment variable that overrides both enumeration caps.
pub const MAX_TABLE_ENV: &str = "AUTHCAP_MAX_TABLE";

/// Limits on exhaustively enumerated tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationCaps {
    /// Entries of a memoryless channel extension, `|X|^n * |Y|^n`.
    pub product_entries: u64,
    /// Entries of any code, law or attack table.
    pub table_entries: u64,
}

impl Default for EnumerationCaps {
    fn default() -> Self {
        EnumerationCaps {
            product_entries: 1 << 20,
            table_entries: 1 << 24,
        }
    }
}

impl EnumerationCaps {
    /// Defaults, with both limits replaced by `AUTHCAP_MAX_TABLE` when set.
    pub fn from_env() -> Self {
        match std::env::var(MAX_TABLE_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<u64>().ok())
        {
            Some(limit) => EnumerationCaps {
                product_entries: limit,
                table_entries: limit,
            },
            None => Self::default(),
        }
    }

    pub fn check_table(&self, what: &str, needed: u128) -> Result<()> {
        check_cap(what, needed, self.table_entries)
    }
}

pub(crate) fn check_cap(what: &str, needed: u128, limit: u64) -> Result<()> {
    if needed > limit as u128 {
        return Err(Error::CapExceeded {
            what: what.to_string(),
            needed,
            limit,
        });
    }
    Ok(())
}

/// `base^exp` as a `u128`, saturating instead of overflowing.
pub(crate) fn pow_u128(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}

/// Big-endian base-`q` tuple codec.
pub mod tuple {
    /// Packs `symbols` (each `< q`) into one index.
    pub fn encode(symbols: &[usize], q: usize) -> usize {
        symbols.iter().fold(0, |acc, &s| acc * q + s)
    }

    /// Unpacks `index` into `n` symbols.
    pub fn decode(mut index: usize, q: usize, n: usize) -> Vec<usize> {
        let mut out = vec![0; n];
        for slot in out.iter_mut().rev() {
            *slot = index % q;
            index /= q;
        }
        out
    }

    /// Symbol at position `pos` (0 = most significant) of an `n`-tuple.
    pub fn digit(index: usize, q: usize, n: usize, pos: usize) -> usize {
        (index / q.pow((n - 1 - pos) as u32)) % q
    }
}

fn check_entries(values: &[f64], what: &str) -> Result<()> {
    for &v in values {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::NotStochastic(format!("{what} has entry {v}")));
        }
    }
    Ok(())
}

/// A probability mass function on `0..len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(probs, CONSTRUCTION_TOL)
    }

    pub fn with_tolerance(probs: Vec<f64>, tol: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::NotStochastic("empty distribution".into()));
        }
        check_entries(&probs, "distribution")?;
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::NotStochastic(format!(
                "distribution sums to {total}"
            )));
        }
        Ok(Pmf { probs })
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0, "uniform distribution needs a non-empty alphabet");
        Pmf {
            probs: vec![1.0 / len as f64; len],
        }
    }

    pub fn point_mass(len: usize, at: usize) -> Self {
        assert!(at < len);
        let mut probs = vec![0.0; len];
        probs[at] = 1.0;
        Pmf { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Total variation distance to `other`.
    pub fn total_variation(&self, other: &Pmf) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Pmf::new(v)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(p: Pmf) -> Self {
        p.probs
    }
}

/// A row-stochastic matrix `rows[x][y] = p(y|x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DiscreteChannel {
    input_size: usize,
    output_size: usize,
    entries: Vec<f64>,
}

impl DiscreteChannel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_tolerance(rows, CONSTRUCTION_TOL)
    }

    pub fn with_tolerance(rows: Vec<Vec<f64>>, tol: f64) -> Result<Self> {
        let input_size = rows.len();
        if input_size == 0 {
            return Err(Error::DimensionMismatch(
                "channel has no input symbols".into(),
            ));
        }
        let output_size = rows[0].len();
        if output_size == 0 {
            return Err(Error::DimensionMismatch(
                "channel has no output symbols".into(),
            ));
        }
        let mut entries = Vec::with_capacity(input_size * output_size);
        for (x, row) in rows.into_iter().enumerate() {
            if row.len() != output_size {
                return Err(Error::DimensionMismatch(format!(
                    "row {x} has {} entries, expected {output_size}",
                    row.len()
                )));
            }
            entries.extend(row);
        }
        Self::from_flat(input_size, output_size, entries, tol)
    }

    /// Builds a channel from a row-major table.
    pub fn from_flat(
        input_size: usize,
        output_size: usize,
        entries: Vec<f64>,
        tol: f64,
    ) -> Result<Self> {
        if entries.len() != input_size * output_size {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {input_size}x{output_size} channel",
                entries.len()
            )));
        }
        check_entries(&entries, "channel")?;
        for (x, row) in entries.chunks(output_size).enumerate() {
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > tol {
                return Err(Error::NotStochastic(format!(
                    "channel row {x} sums to {total}"
                )));
            }
        }
        Ok(DiscreteChannel {
            input_size,
            output_size,
            entries,
        })
    }

    pub fn identity(size: usize) -> Self {
        let mut entries = vec![0.0; size * size];
        for i in 0..size {
            entries[i * size + i] = 1.0;
        }
        DiscreteChannel {
            input_size: size,
            output_size: size,
            entries,
        }
    }

    /// The channel whose every row is `output`.
    pub fn constant(input_size: usize, output: &Pmf) -> Self {
        let entries = (0..input_size)
            .flat_map(|_| output.probs().iter().copied())
            .collect();
        DiscreteChannel {
            input_size,
            output_size: output.len(),
            entries,
        }
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.entries[x * self.output_size + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.entries[x * self.output_size..(x + 1) * self.output_size]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks(self.output_size)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(|r| r.to_vec()).collect()
    }

    /// Output law when the input is distributed as `input`.
    pub fn apply(&self, input: &Pmf) -> Result<Pmf> {
        if input.len() != self.input_size {
            return Err(Error::DimensionMismatch(format!(
                "input law over {} symbols, channel expects {}",
                input.len(),
                self.input_size
            )));
        }
        let mut out = vec![0.0; self.output_size];
        for (p, row) in input.probs().iter().zip(self.rows()) {
            for (o, w) in out.iter_mut().zip(row) {
                *o += p * w;
            }
        }
        Pmf::with_tolerance(out, CHAINED_TOL)
    }

    /// The cascade `self` followed by `next`.
    pub fn compose(&self, next: &DiscreteChannel) -> Result<DiscreteChannel> {
        if self.output_size != next.input_size {
            return Err(Error::DimensionMismatch(format!(
                "cannot feed {} outputs into a channel with {} inputs",
                self.output_size, next.input_size
            )));
        }
        let mut entries = vec![0.0; self.input_size * next.output_size];
        for x in 0..self.input_size {
            let out = &mut entries[x * next.output_size..(x + 1) * next.output_size];
            for (u, &w) in self.row(x).iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for (o, v) in out.iter_mut().zip(next.row(u)) {
                    *o += w * v;
                }
            }
        }
        Self::from_flat(self.input_size, next.output_size, entries, CHAINED_TOL)
    }

    /// The crossover probability if this is a binary symmetric channel.
    pub fn as_bsc(&self) -> Option<f64> {
        if self.input_size != 2 || self.output_size != 2 {
            return None;
        }
        let lambda = self.prob(0, 1);
        let symmetric = (self.prob(1, 0) - lambda).abs() <= 1e-12;
        (symmetric && lambda <= 0.5).then_some(lambda)
    }
}

impl TryFrom<Vec<Vec<f64>>> for DiscreteChannel {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        DiscreteChannel::new(rows)
    }
}

impl From<DiscreteChannel> for Vec<Vec<f64>> {
    fn from(ch: DiscreteChannel) -> Self {
        ch.to_rows()
    }
}

/// Binary symmetric channel with crossover probability `lambda`.
pub fn bsc(lambda: f64) -> Result<DiscreteChannel> {
    if !(0.0..=0.5).contains(&lambda) {
        return Err(Error::InvalidProbability {
            value: lambda,
            reason: "crossover probability must lie in [0, 1/2]",
        });
    }
    DiscreteChannel::new(vec![vec![1.0 - lambda, lambda], vec![lambda, 1.0 - lambda]])
}

/// Memoryless extension of `ch` to blocklength `n`, capped by the
/// environment-derived [`EnumerationCaps`].
pub fn product_extension(ch: &DiscreteChannel, n: usize) -> Result<DiscreteChannel> {
    product_extension_capped(ch, n, EnumerationCaps::from_env().product_entries)
}

pub fn product_extension_capped(
    ch: &DiscreteChannel,
    n: usize,
    limit: u64,
) -> Result<DiscreteChannel> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "blocklength must be positive".into(),
        ));
    }
    let needed = pow_u128(ch.input_size, n).saturating_mul(pow_u128(ch.output_size, n));
    check_cap(&format!("{n}-fold channel extension"), needed, limit)?;
    let (qx, qy) = (ch.input_size, ch.output_size);
    let mut current = ch.entries.clone();
    let (mut nx, mut ny) = (qx, qy);
    for _ in 1..n {
        let mut next = vec![0.0; nx * qx * ny * qy];
        let width = ny * qy;
        for xs in 0..nx {
            for x in 0..qx {
                let row = &mut next[(xs * qx + x) * width..(xs * qx + x + 1) * width];
                for ys in 0..ny {
                    let head = current[xs * ny + ys];
                    for y in 0..qy {
                        row[ys * qy + y] = head * ch.prob(x, y);
                    }
                }
            }
        }
        current = next;
        nx *= qx;
        ny *= qy;
    }
    DiscreteChannel::from_flat(nx, ny, current, CHAINED_TOL)
}

/// A pair of channels sharing Alice's input alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelPair {
    /// Alice to Bob.
    pub main: DiscreteChannel,
    /// Alice to the adversary.
    pub tap: DiscreteChannel,
}

impl ChannelPair {
    pub fn new(main: DiscreteChannel, tap: DiscreteChannel) -> Result<Self> {
        if main.input_size != tap.input_size {
            return Err(Error::DimensionMismatch(format!(
                "main channel has {} inputs but tap has {}",
                main.input_size, tap.input_size
            )));
        }
        Ok(ChannelPair { main, tap })
    }

    pub fn bsc_pair(lambda_main: f64, lambda_tap: f64) -> Result<Self> {
        Self::new(bsc(lambda_main)?, bsc(lambda_tap)?)
    }

    pub fn input_size(&self) -> usize {
        self.main.input_size
    }

    /// Crossover probabilities when both channels are binary symmetric.
    pub fn as_bsc_pair(&self) -> Option<(f64, f64)> {
        Some((self.main.as_bsc()?, self.tap.as_bsc()?))
    }
}

/// A named finite alphabet inside a [`JointLaw`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub size: usize,
}

impl Variable {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Variable {
            name: name.into(),
            size,
        }
    }
}

/// Joint law of several finite random variables, stored row-major with the
/// first variable most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLaw {
    vars: Vec<Variable>,
    table: Vec<f64>,
}

impl JointLaw {
    pub fn new(vars: Vec<Variable>, table: Vec<f64>) -> Result<Self> {
        let expected = vars
            .iter()
            .try_fold(1usize, |acc, v| acc.checked_mul(v.size));
        if expected != Some(table.len()) || vars.iter().any(|v| v.size == 0) {
            return Err(Error::DimensionMismatch(format!(
                "{} table entries for variables {:?}",
                table.len(),
                vars.iter().map(|v| (&v.name, v.size)).collect::<Vec<_>>()
            )));
        }
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::OverlappingVariables(v.name.clone()));
            }
        }
        check_entries(&table, "joint law")?;
        let total: f64 = table.iter().sum();
        if (total - 1.0).abs() > CHAINED_TOL {
            return Err(Error::NotStochastic(format!("joint law has mass {total}")));
        }
        Ok(JointLaw { vars, table })
    }

    /// Single-variable law.
    pub fn from_pmf(name: &str, pmf: &Pmf) -> Self {
        JointLaw {
            vars: vec![Variable::new(name, pmf.len())],
            table: pmf.probs().to_vec(),
        }
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Probability of one tuple given in variable order.
    pub fn prob(&self, symbols: &[usize]) -> f64 {
        let idx = symbols
            .iter()
            .zip(&self.vars)
            .fold(0, |acc, (&s, v)| acc * v.size + s);
        self.table[idx]
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.vars.len()];
        for i in (0..self.vars.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.vars[i + 1].size;
        }
        strides
    }

    /// Marginal law of `names`, in the order given.
    pub fn marginal(&self, names: &[&str]) -> Result<JointLaw> {
        let positions = names
            .iter()
            .map(|n| self.index_of(n))
            .collect::<Result<Vec<_>>>()?;
        for (i, p) in positions.iter().enumerate() {
            if positions[..i].contains(p) {
                return Err(Error::OverlappingVariables(names[i].to_string()));
            }
        }
        let strides = self.strides();
        let vars: Vec<Variable> = positions.iter().map(|&p| self.vars[p].clone()).collect();
        let size: usize = vars.iter().map(|v| v.size).product();
        let mut table = vec![0.0; size];
        for (flat, &mass) in self.table.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let mut out = 0;
            for &p in &positions {
                out = out * self.vars[p].size + (flat / strides[p]) % self.vars[p].size;
            }
            table[out] += mass;
        }
        Ok(JointLaw { vars, table })
    }

    /// Appends a variable `name` drawn through `ch` from the existing
    /// variable `parent`.
    pub fn extend(&self, parent: &str, ch: &DiscreteChannel, name: &str) -> Result<JointLaw> {
        let p = self.index_of(parent)?;
        if self.vars.iter().any(|v| v.name == name) {
            return Err(Error::OverlappingVariables(name.to_string()));
        }
        if ch.input_size() != self.vars[p].size {
            return Err(Error::DimensionMismatch(format!(
                "variable `{parent}` has {} symbols, channel expects {}",
                self.vars[p].size,
                ch.input_size()
            )));
        }
        let strides = self.strides();
        let q = ch.output_size();
        let mut table = Vec::with_capacity(self.table.len() * q);
        for (flat, &mass) in self.table.iter().enumerate() {
            let s = (flat / strides[p]) % self.vars[p].size;
            table.extend(ch.row(s).iter().map(|w| mass * w));
        }
        let mut vars = self.vars.clone();
        vars.push(Variable::new(name, q));
        Ok(JointLaw { vars, table })
    }
}

/// Joint law of `(X, Y)` with `X ~ input` and `Y | X ~ ch`.
pub fn push_joint(input: &Pmf, ch: &DiscreteChannel) -> Result<JointLaw> {
    if input.len() != ch.input_size() {
        return Err(Error::DimensionMismatch(format!(
            "input law over {} symbols, channel expects {}",
            input.len(),
            ch.input_size()
        )));
    }
    JointLaw::from_pmf("X", input).extend("X", ch, "Y")
}
