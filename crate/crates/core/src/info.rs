//! Entropy and mutual information on finite joint laws, and channel capacity.
//!
//! All logarithms are base 2 and `0 log 0 = 0`. Mutual informations are
//! assembled from entropies so that [`entropy_of`] is the only place that
//! handles zero masses.

use crate::channel::{DiscreteChannel, JointLaw, Pmf};
use crate::error::{Error, Result};

/// An amount of information in bits. Rates are bits per channel use.
pub type Bits = f64;

/// Negative mutual informations down to this value are rounding noise.
pub const NEGATIVE_FLOOR: f64 = -1e-9;

/// `-Σ p log₂ p` over the entries of `probs`, which need not be normalized.
pub fn entropy_of(probs: &[f64]) -> Bits {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

pub fn entropy(p: &Pmf) -> Bits {
    entropy_of(p.probs())
}

/// Binary entropy function `h(p)`.
pub fn binary_entropy(p: f64) -> Bits {
    entropy_of(&[p, 1.0 - p])
}

/// Joint entropy of the listed variables; the empty list has entropy 0.
pub fn joint_entropy(joint: &JointLaw, vars: &[&str]) -> Result<Bits> {
    if vars.is_empty() {
        return Ok(0.0);
    }
    Ok(entropy_of(joint.marginal(vars)?.table()))
}

/// `H(target | given)`.
pub fn conditional_entropy(joint: &JointLaw, target: &[&str], given: &[&str]) -> Result<Bits> {
    check_disjoint(target, given)?;
    let both: Vec<&str> = target.iter().chain(given).copied().collect();
    let h = joint_entropy(joint, &both)? - joint_entropy(joint, given)?;
    Ok(h.max(0.0))
}

fn check_disjoint(a: &[&str], b: &[&str]) -> Result<()> {
    match a.iter().find(|v| b.contains(v)) {
        Some(v) => Err(Error::OverlappingVariables(v.to_string())),
        None => Ok(()),
    }
}

/// Clamps rounding noise to zero and rejects genuinely negative values.
pub(crate) fn clamp_information(value: f64, what: &str) -> Result<Bits> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= NEGATIVE_FLOOR {
        Ok(0.0)
    } else {
        Err(Error::Consistency(format!("{what} evaluated to {value}")))
    }
}

/// `I(a ; b | given)`.
///
/// ```
/// use authcap::channel::{bsc, push_joint, Pmf};
/// use authcap::info::mutual_information;
///
/// let joint = push_joint(&Pmf::uniform(2), &bsc(0.0).unwrap()).unwrap();
/// let i = mutual_information(&joint, &["X"], &["Y"], &[]).unwrap();
/// assert!((i - 1.0).abs() < 1e-12);
/// ```
pub fn mutual_information(
    joint: &JointLaw,
    a: &[&str],
    b: &[&str],
    given: &[&str],
) -> Result<Bits> {
    check_disjoint(a, b)?;
    check_disjoint(a, given)?;
    check_disjoint(b, given)?;
    let ab: Vec<&str> = a.iter().chain(b).copied().collect();
    let value = conditional_entropy(joint, a, given)? + conditional_entropy(joint, b, given)?
        - conditional_entropy(joint, &ab, given)?;
    clamp_information(value, "mutual information")
}

/// Result of [`channel_capacity`].
#[derive(Debug, Clone, PartialEq)]
pub struct Capacity {
    /// `I(X;Y)` at the returned input law; a lower bound on capacity.
    pub bits: Bits,
    pub input: Pmf,
    /// `max_x D(W(.|x) || q)`, an upper bound on capacity.
    pub upper: Bits,
    pub iterations: usize,
}

pub const CAPACITY_MAX_ITERATIONS: usize = 100_000;

/// Capacity of `ch` by Blahut–Arimoto iteration from the uniform input.
///
/// Stops once the certified bracket `[I(p), max_x D(W_x || pW)]` is no wider
/// than `tol`.
pub fn channel_capacity(ch: &DiscreteChannel, tol: Bits) -> Result<Capacity> {
    channel_capacity_with_limit(ch, tol, CAPACITY_MAX_ITERATIONS)
}

pub fn channel_capacity_with_limit(
    ch: &DiscreteChannel,
    tol: Bits,
    max_iterations: usize,
) -> Result<Capacity> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "capacity tolerance must be positive, got {tol}"
        )));
    }
    let nx = ch.input_size();
    let ny = ch.output_size();
    let mut p = vec![1.0 / nx as f64; nx];
    let mut q = vec![0.0; ny];
    let mut d = vec![0.0; nx];
    let mut lower = 0.0;
    let mut upper = f64::INFINITY;
    for iteration in 1..=max_iterations {
        q.iter_mut().for_each(|v| *v = 0.0);
        for (px, row) in p.iter().zip(ch.rows()) {
            for (qy, w) in q.iter_mut().zip(row) {
                *qy += px * w;
            }
        }
        for (dx, row) in d.iter_mut().zip(ch.rows()) {
            *dx = row
                .iter()
                .zip(&q)
                .filter(|(&w, _)| w > 0.0)
                .map(|(&w, &qy)| w * (w / qy).log2())
                .sum();
        }
        lower = p.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>().max(0.0);
        upper = d
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
            .max(lower);
        if upper - lower <= tol {
            return Ok(Capacity {
                bits: lower,
                input: Pmf::with_tolerance(p, 1e-8)?,
                upper,
                iterations: iteration,
            });
        }
        let mut total = 0.0;
        for (px, dx) in p.iter_mut().zip(&d) {
            *px *= dx.exp2();
            total += *px;
        }
        p.iter_mut().for_each(|v| *v /= total);
    }
    Err(Error::NoConvergence {
        iterations: max_iterations,
        lower,
        upper,
    })
}
