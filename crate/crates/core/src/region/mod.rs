//! The typical-authentication capacity region.
//!
//! For a chain `W → U → X → (Y, Z)` the region contains every `(r, α, κ)`
//! with `r > 0` and
//!
//! ```text
//! r + α      ≤ I(Y; U, W)
//! 2α − κ     ≤ I(Y; U | W) − I(Z; U | W)
//! α − κ      ≤ 0
//! ```
//!
//! The full region is the union over chains with `|W| ≤ |X| + 2` and
//! `|U| ≤ (|X| + 1)(|X| + 2)`. The key-transmission sub-region replaces the
//! second line with `α ≤ I(Y; U | W) − I(Z; U | W)`.

mod fm;
mod search;
mod sweep;

pub use fm::{
    eliminated_system, fm_equivalence_check, pre_elimination_feasible, FmDisagreement, FmReport,
    LinearSystem,
};
pub use search::{
    best_constraints, is_achievable, Achievability, BestConstraints, SearchParams, Witness,
    WitnessKind,
};
pub use sweep::{boundary_sweep, SweepAxis, SweepRow};

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelPair, DiscreteChannel, JointLaw, Pmf};
use crate::error::{Error, Result};
use crate::info::{binary_entropy, clamp_information, entropy_of, mutual_information, Bits};

/// Slack granted to every region inequality.
pub const REGION_SLACK: f64 = 1e-9;
/// Smallest message rate treated as positive.
pub const MIN_RATE: f64 = 1e-12;

/// `(r, α, κ)` in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateTriple {
    pub r: Bits,
    pub alpha: Bits,
    pub kappa: Bits,
}

impl RateTriple {
    pub const fn new(r: Bits, alpha: Bits, kappa: Bits) -> Self {
        RateTriple { r, alpha, kappa }
    }

    /// Convex combination `t * self + (1 - t) * other`.
    pub fn mix(&self, other: &RateTriple, t: f64) -> RateTriple {
        RateTriple {
            r: t * self.r + (1.0 - t) * other.r,
            alpha: t * self.alpha + (1.0 - t) * other.alpha,
            kappa: t * self.kappa + (1.0 - t) * other.kappa,
        }
    }
}

/// The two chain-dependent right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionConstraints {
    /// `I(Y; U, W)`.
    pub sum_bound: Bits,
    /// `I(Y; U | W) − I(Z; U | W)`; may be negative.
    pub secrecy_margin: Bits,
}

/// Upper limits on the auxiliary alphabets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardinalityCaps {
    pub max_w: usize,
    pub max_u: usize,
}

impl CardinalityCaps {
    /// `|W| ≤ |X| + 2` and `|U| ≤ (|X| + 1)(|X| + 2)`.
    pub fn for_input(input_size: usize) -> Self {
        CardinalityCaps {
            max_w: input_size + 2,
            max_u: (input_size + 1) * (input_size + 2),
        }
    }

    /// Tightens the defaults. Raising either limit is refused, since chains
    /// beyond the bounds are outside the characterization.
    pub fn limited(input_size: usize, max_w: Option<usize>, max_u: Option<usize>) -> Result<Self> {
        let full = Self::for_input(input_size);
        let max_w = max_w.unwrap_or(full.max_w);
        let max_u = max_u.unwrap_or(full.max_u);
        if max_w > full.max_w || max_u > full.max_u {
            return Err(Error::InvalidParameter(format!(
                "cardinality caps may only be lowered: requested |W| <= {max_w}, |U| <= {max_u}, bounds are {} and {}",
                full.max_w, full.max_u
            )));
        }
        if max_w == 0 || max_u == 0 {
            return Err(Error::InvalidParameter(
                "cardinality caps must be positive".into(),
            ));
        }
        Ok(CardinalityCaps { max_w, max_u })
    }
}

/// Distributions realizing `W → U → X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryChain {
    pub w_dist: Pmf,
    pub u_given_w: DiscreteChannel,
    pub x_given_u: DiscreteChannel,
}

impl AuxiliaryChain {
    pub fn new(
        w_dist: Pmf,
        u_given_w: DiscreteChannel,
        x_given_u: DiscreteChannel,
    ) -> Result<Self> {
        if w_dist.len() != u_given_w.input_size() {
            return Err(Error::DimensionMismatch(format!(
                "|W| = {} but p(u|w) has {} rows",
                w_dist.len(),
                u_given_w.input_size()
            )));
        }
        if u_given_w.output_size() != x_given_u.input_size() {
            return Err(Error::DimensionMismatch(format!(
                "p(u|w) has {} columns but p(x|u) has {} rows",
                u_given_w.output_size(),
                x_given_u.input_size()
            )));
        }
        Ok(AuxiliaryChain {
            w_dist,
            u_given_w,
            x_given_u,
        })
    }

    /// Constant `W`, `U = X`, `X ~ input`.
    pub fn input_only(input: &Pmf) -> Self {
        AuxiliaryChain {
            w_dist: Pmf::uniform(1),
            u_given_w: DiscreteChannel::constant(1, input),
            x_given_u: DiscreteChannel::identity(input.len()),
        }
    }

    /// `W = U = X`, `X ~ input`. The secrecy margin of this chain is zero.
    pub fn fully_public(input: &Pmf) -> Self {
        AuxiliaryChain {
            w_dist: input.clone(),
            u_given_w: DiscreteChannel::identity(input.len()),
            x_given_u: DiscreteChannel::identity(input.len()),
        }
    }

    pub fn card_w(&self) -> usize {
        self.w_dist.len()
    }

    pub fn card_u(&self) -> usize {
        self.u_given_w.output_size()
    }

    pub fn input_size(&self) -> usize {
        self.x_given_u.output_size()
    }

    pub fn respects(&self, caps: &CardinalityCaps) -> bool {
        self.card_w() <= caps.max_w && self.card_u() <= caps.max_u
    }

    /// Joint law over `(W, U, X, Y, Z)`.
    pub fn joint(&self, pair: &ChannelPair) -> Result<JointLaw> {
        check_compatible(self, pair)?;
        JointLaw::from_pmf("W", &self.w_dist)
            .extend("W", &self.u_given_w, "U")?
            .extend("U", &self.x_given_u, "X")?
            .extend("X", &pair.main, "Y")?
            .extend("X", &pair.tap, "Z")
    }

    /// Law of `X`.
    pub fn input_law(&self) -> Result<Pmf> {
        self.x_given_u.apply(&self.u_given_w.apply(&self.w_dist)?)
    }
}

fn check_compatible(chain: &AuxiliaryChain, pair: &ChannelPair) -> Result<()> {
    if chain.input_size() != pair.input_size() {
        return Err(Error::DimensionMismatch(format!(
            "chain produces {} input symbols, channels take {}",
            chain.input_size(),
            pair.input_size()
        )));
    }
    Ok(())
}

/// Region right-hand sides for `chain`.
///
/// Uses the Markov structure directly: `H(Y | U, W) = H(Y | U)`, so only the
/// per-`U` output laws and their `W`-mixtures are needed.
pub fn evaluate_constraints(
    chain: &AuxiliaryChain,
    pair: &ChannelPair,
) -> Result<RegionConstraints> {
    check_compatible(chain, pair)?;
    let mut scratch = Scratch::default();
    let (sum_bound, margin) = constraints_from_tables(
        chain.w_dist.probs(),
        &flat(&chain.u_given_w),
        &flat(&chain.x_given_u),
        chain.card_w(),
        chain.card_u(),
        pair,
        &mut scratch,
    );
    Ok(RegionConstraints {
        sum_bound: clamp_information(sum_bound, "I(Y;U,W)")?,
        secrecy_margin: margin,
    })
}

/// The same quantities computed from the five-variable joint law.
pub fn evaluate_constraints_joint(
    chain: &AuxiliaryChain,
    pair: &ChannelPair,
) -> Result<RegionConstraints> {
    let joint = chain.joint(pair)?;
    let sum_bound = mutual_information(&joint, &["Y"], &["U", "W"], &[])?;
    let iyu = mutual_information(&joint, &["Y"], &["U"], &["W"])?;
    let izu = mutual_information(&joint, &["Z"], &["U"], &["W"])?;
    Ok(RegionConstraints {
        sum_bound,
        secrecy_margin: iyu - izu,
    })
}

fn flat(ch: &DiscreteChannel) -> Vec<f64> {
    ch.rows().flatten().copied().collect()
}

#[derive(Default)]
pub(crate) struct Scratch {
    py_u: Vec<f64>,
    pz_u: Vec<f64>,
    mix: Vec<f64>,
    pu: Vec<f64>,
}

/// `(I(Y;U,W), I(Y;U|W) − I(Z;U|W))` from flat tables. Tables need not be
/// exactly normalized, which lets finite differences step slightly off the
/// simplex.
pub(crate) fn constraints_from_tables(
    w: &[f64],
    uw: &[f64],
    xu: &[f64],
    card_w: usize,
    card_u: usize,
    pair: &ChannelPair,
    s: &mut Scratch,
) -> (f64, f64) {
    let nx = pair.input_size();
    let ny = pair.main.output_size();
    let nz = pair.tap.output_size();
    s.py_u.clear();
    s.py_u.resize(card_u * ny, 0.0);
    s.pz_u.clear();
    s.pz_u.resize(card_u * nz, 0.0);
    for u in 0..card_u {
        for x in 0..nx {
            let p = xu[u * nx + x];
            if p == 0.0 {
                continue;
            }
            for (o, v) in s.py_u[u * ny..(u + 1) * ny]
                .iter_mut()
                .zip(pair.main.row(x))
            {
                *o += p * v;
            }
            for (o, v) in s.pz_u[u * nz..(u + 1) * nz].iter_mut().zip(pair.tap.row(x)) {
                *o += p * v;
            }
        }
    }
    s.pu.clear();
    s.pu.resize(card_u, 0.0);
    for wi in 0..card_w {
        for u in 0..card_u {
            s.pu[u] += w[wi] * uw[wi * card_u + u];
        }
    }
    let h_y_u: f64 = (0..card_u)
        .map(|u| s.pu[u] * entropy_of(&s.py_u[u * ny..(u + 1) * ny]))
        .sum();
    let h_z_u: f64 = (0..card_u)
        .map(|u| s.pu[u] * entropy_of(&s.pz_u[u * nz..(u + 1) * nz]))
        .sum();

    let mut h_y_w = 0.0;
    let mut h_z_w = 0.0;
    let mut py = vec![0.0; ny];
    for wi in 0..card_w {
        let pw = w[wi];
        if pw == 0.0 {
            continue;
        }
        s.mix.clear();
        s.mix.resize(ny.max(nz), 0.0);
        for u in 0..card_u {
            let c = uw[wi * card_u + u];
            for y in 0..ny {
                s.mix[y] += c * s.py_u[u * ny + y];
            }
        }
        for y in 0..ny {
            py[y] += pw * s.mix[y];
        }
        h_y_w += pw * entropy_of(&s.mix[..ny]);
        s.mix.iter_mut().for_each(|v| *v = 0.0);
        for u in 0..card_u {
            let c = uw[wi * card_u + u];
            for z in 0..nz {
                s.mix[z] += c * s.pz_u[u * nz + z];
            }
        }
        h_z_w += pw * entropy_of(&s.mix[..nz]);
    }
    let sum_bound = entropy_of(&py) - h_y_u;
    let margin = (h_y_w - h_y_u) - (h_z_w - h_z_u);
    (sum_bound, margin)
}

/// Membership of `point` in the region cut out by `c`.
pub fn satisfies_region(point: &RateTriple, c: &RegionConstraints) -> bool {
    point.r + point.alpha <= c.sum_bound + REGION_SLACK
        && 2.0 * point.alpha - point.kappa <= c.secrecy_margin + REGION_SLACK
        && point.alpha <= point.kappa + REGION_SLACK
}

/// Right-hand sides for the key-transmission sub-region. Numerically the same
/// pair as [`evaluate_constraints`]; use [`satisfies_lai_region`] for
/// membership.
pub fn lai_inner_constraints(
    chain: &AuxiliaryChain,
    pair: &ChannelPair,
) -> Result<RegionConstraints> {
    evaluate_constraints(chain, pair)
}

/// `r + α ≤ I(Y;U,W)`, `α ≤ I(Y;U|W) − I(Z;U|W)`, `α ≤ κ`.
pub fn satisfies_lai_region(point: &RateTriple, c: &RegionConstraints) -> bool {
    point.r + point.alpha <= c.sum_bound + REGION_SLACK
        && point.alpha <= c.secrecy_margin + REGION_SLACK
        && point.alpha <= point.kappa + REGION_SLACK
}

/// Trades `β` of message rate for `β` of authentication rate at the price
/// of `2β` extra key.
pub fn simmons_shift(point: &RateTriple, beta: Bits) -> Result<RateTriple> {
    if !(beta >= 0.0) || beta >= point.r {
        return Err(Error::InvalidParameter(format!(
            "shift must satisfy 0 <= beta < r, got beta = {beta}, r = {}",
            point.r
        )));
    }
    Ok(RateTriple {
        r: point.r - beta,
        alpha: point.alpha + beta,
        kappa: point.kappa + 2.0 * beta,
    })
}

/// Closed-form right-hand sides when both channels are binary symmetric.
///
/// The main channel reaches capacity `1 − h(λ_t)`. When it is the less noisy
/// of the two the margin is `h(λ_q) − h(λ_t)`; otherwise it is zero.
pub fn bsc_region_constraints(lambda_t: f64, lambda_q: f64) -> Result<RegionConstraints> {
    for (name, v) in [("lambda_t", lambda_t), ("lambda_q", lambda_q)] {
        if !(0.0..=0.5).contains(&v) {
            return Err(Error::InvalidParameter(format!(
                "{name} = {v} is outside [0, 1/2]"
            )));
        }
    }
    let sum_bound = 1.0 - binary_entropy(lambda_t);
    let secrecy_margin = if lambda_t <= lambda_q {
        binary_entropy(lambda_q) - binary_entropy(lambda_t)
    } else {
        0.0
    };
    Ok(RegionConstraints {
        sum_bound,
        secrecy_margin,
    })
}

/// Largest `α` at `(r, κ)` allowed by `c`, or `None` if even `α = 0` fails.
pub fn max_alpha(r: Bits, kappa: Bits, c: &RegionConstraints) -> Option<Bits> {
    let cap = (c.sum_bound - r)
        .min((c.secrecy_margin + kappa) / 2.0)
        .min(kappa);
    (cap >= -REGION_SLACK).then(|| cap.max(0.0))
}
