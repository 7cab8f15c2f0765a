//! Witness search for region membership.
//!
//! Three stages run in order and the first witness found wins:
//! canonical chains, multi-start projected gradient ascent, and (binary
//! inputs only) a coarse grid over a two-valued `W` with `U = X`.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    constraints_from_tables, evaluate_constraints, satisfies_region, AuxiliaryChain,
    CardinalityCaps, RateTriple, RegionConstraints, Scratch, MIN_RATE, REGION_SLACK,
};
use crate::channel::{ChannelPair, DiscreteChannel, Pmf};
use crate::error::{Error, Result};
use crate::info::{channel_capacity, Bits};
use crate::rng::{random_simplex, substream};

const RNG_MODULE: &str = "ta_region.search";
const FD_STEP: f64 = 1e-7;
const MIN_STEP_SIZE: f64 = 1e-12;
/// Restarts are launched in fixed-size batches; a batch with a success ends
/// the search. The batch size is a constant so results do not depend on the
/// thread count.
const RESTART_BATCH: usize = 8;
const CAPACITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchParams {
    pub restarts: usize,
    pub steps: usize,
    pub step_size: f64,
    /// Grid points per unit interval in stage 3.
    pub grid_resolution: usize,
    pub seed: u64,
    pub max_w: Option<usize>,
    pub max_u: Option<usize>,
    /// Try the canonical chains first.
    pub canonical: bool,
    /// Run the grid stage on binary inputs.
    pub grid: bool,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            restarts: 32,
            steps: 500,
            step_size: 0.05,
            grid_resolution: 16,
            seed: 0,
            max_w: None,
            max_u: None,
            canonical: true,
            grid: true,
        }
    }
}

impl SearchParams {
    pub fn caps(&self, input_size: usize) -> Result<CardinalityCaps> {
        CardinalityCaps::limited(input_size, self.max_w, self.max_u)
    }

    fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "step size must be positive, got {}",
                self.step_size
            )));
        }
        if self.grid_resolution == 0 {
            return Err(Error::InvalidParameter(
                "grid resolution must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    ClosedForm,
    Canonical,
    Hint,
    Gradient,
    Grid,
}

impl WitnessKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            WitnessKind::ClosedForm => "closed-form",
            WitnessKind::Canonical => "canonical",
            WitnessKind::Hint => "hint",
            WitnessKind::Gradient => "gradient",
            WitnessKind::Grid => "grid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Self::ClosedForm,
            Self::Canonical,
            Self::Hint,
            Self::Gradient,
            Self::Grid,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
    }
}

impl fmt::Display for WitnessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub chain: AuxiliaryChain,
    pub constraints: RegionConstraints,
    pub kind: WitnessKind,
}

impl Witness {
    fn from_chain(chain: AuxiliaryChain, pair: &ChannelPair, kind: WitnessKind) -> Result<Self> {
        let constraints = evaluate_constraints(&chain, pair)?;
        Ok(Witness {
            chain,
            constraints,
            kind,
        })
    }
}

/// Outcome of [`is_achievable`].
#[derive(Debug, Clone, PartialEq)]
pub struct Achievability {
    pub achievable: bool,
    pub witness: Option<Witness>,
    /// The search gave up without a proof that the point is outside.
    pub budget_exhausted: bool,
    /// The bound that rules the point out, when one applies.
    pub refuted_by: Option<&'static str>,
}

impl Achievability {
    fn found(w: Witness) -> Self {
        Achievability {
            achievable: true,
            witness: Some(w),
            budget_exhausted: false,
            refuted_by: None,
        }
    }

    fn refuted(by: &'static str) -> Self {
        Achievability {
            achievable: false,
            witness: None,
            budget_exhausted: false,
            refuted_by: Some(by),
        }
    }
}

/// Searches for a chain placing `point` inside the region.
///
/// A `true` answer carries a witness that passes [`satisfies_region`]. A
/// `false` answer either names the bound that excludes the point or sets
/// `budget_exhausted`.
pub fn is_achievable(
    point: &RateTriple,
    pair: &ChannelPair,
    search: &SearchParams,
) -> Result<Achievability> {
    is_achievable_with_hints(point, pair, search, &[])
}

/// As [`is_achievable`], trying `hints` right after the canonical chains.
pub fn is_achievable_with_hints(
    point: &RateTriple,
    pair: &ChannelPair,
    search: &SearchParams,
    hints: &[AuxiliaryChain],
) -> Result<Achievability> {
    if !(point.r >= MIN_RATE) {
        return Err(Error::InvalidParameter(format!(
            "message rate must be positive, got {}",
            point.r
        )));
    }
    if point.alpha < 0.0 || point.kappa < 0.0 {
        return Err(Error::InvalidParameter("rates must be non-negative".into()));
    }
    search.validate()?;
    let caps = search.caps(pair.input_size())?;

    if point.alpha > point.kappa + REGION_SLACK {
        return Ok(Achievability::refuted("alpha <= kappa"));
    }
    let capacity = channel_capacity(&pair.main, CAPACITY_TOL)?;
    if point.r + point.alpha > capacity.upper + REGION_SLACK {
        return Ok(Achievability::refuted("r + alpha <= capacity"));
    }
    if 2.0 * point.alpha - point.kappa > capacity.upper + REGION_SLACK {
        return Ok(Achievability::refuted("2 alpha - kappa <= capacity"));
    }
    if let Some((lt, lq)) = pair.as_bsc_pair() {
        let closed = super::bsc_region_constraints(lt, lq)?;
        if !satisfies_region(point, &closed) {
            return Ok(Achievability::refuted("binary symmetric closed form"));
        }
    }

    let accept = |w: &Witness| satisfies_region(point, &w.constraints);

    if search.canonical {
        for chain in canonical_chains(pair, &capacity.input) {
            if !chain.respects(&caps) {
                continue;
            }
            let w = Witness::from_chain(chain, pair, WitnessKind::Canonical)?;
            if accept(&w) {
                return Ok(Achievability::found(w));
            }
        }
    }
    for chain in hints {
        if !chain.respects(&caps) || chain.input_size() != pair.input_size() {
            continue;
        }
        let w = Witness::from_chain(chain.clone(), pair, WitnessKind::Hint)?;
        if accept(&w) {
            return Ok(Achievability::found(w));
        }
    }

    let layout = Layout {
        w: caps.max_w,
        u: caps.max_u,
        x: pair.input_size(),
    };
    let objective = Objective::Membership(*point);
    let mut start = 0;
    while start < search.restarts {
        let end = (start + RESTART_BATCH).min(search.restarts);
        let runs: Vec<Option<Vec<f64>>> = (start..end)
            .into_par_iter()
            .map(|i| {
                let (theta, value) = ascend(&layout, pair, objective, search, i as u64);
                (value >= 0.0).then_some(theta)
            })
            .collect();
        for theta in runs.into_iter().flatten() {
            let w = Witness::from_chain(layout.chain(&theta)?, pair, WitnessKind::Gradient)?;
            if accept(&w) {
                return Ok(Achievability::found(w));
            }
        }
        start = end;
    }

    if search.grid && pair.input_size() == 2 && caps.max_w >= 2 && caps.max_u >= 2 {
        if let Some(w) = grid_search(pair, search.grid_resolution, |c| satisfies_region(point, c))?
        {
            return Ok(Achievability::found(w));
        }
    }

    Ok(Achievability {
        achievable: false,
        witness: None,
        budget_exhausted: true,
        refuted_by: None,
    })
}

/// Best chains found for each right-hand side separately.
#[derive(Debug, Clone, PartialEq)]
pub struct BestConstraints {
    pub sum_bound: Witness,
    pub margin: Witness,
}

/// Maximizes `I(Y;U,W)` and the secrecy margin over chains, each on its own.
pub fn best_constraints(pair: &ChannelPair, search: &SearchParams) -> Result<BestConstraints> {
    search.validate()?;
    let caps = search.caps(pair.input_size())?;
    let layout = Layout {
        w: caps.max_w,
        u: caps.max_u,
        x: pair.input_size(),
    };
    let mut best = Vec::with_capacity(2);
    for objective in [Objective::SumBound, Objective::Margin] {
        let mut incumbent: Option<Witness> = None;
        let consider = |w: Witness, incumbent: &mut Option<Witness>| {
            if incumbent.as_ref().map_or(true, |b| {
                objective.score(&w.constraints) > objective.score(&b.constraints)
            }) {
                *incumbent = Some(w);
            }
        };
        if search.canonical {
            let capacity = channel_capacity(&pair.main, CAPACITY_TOL)?;
            for chain in canonical_chains(pair, &capacity.input) {
                if chain.respects(&caps) {
                    consider(
                        Witness::from_chain(chain, pair, WitnessKind::Canonical)?,
                        &mut incumbent,
                    );
                }
            }
        }
        let runs: Vec<Vec<f64>> = (0..search.restarts)
            .into_par_iter()
            .map(|i| ascend(&layout, pair, objective, search, i as u64).0)
            .collect();
        for theta in runs {
            consider(
                Witness::from_chain(layout.chain(&theta)?, pair, WitnessKind::Gradient)?,
                &mut incumbent,
            );
        }
        if search.grid && pair.input_size() == 2 && caps.max_w >= 2 && caps.max_u >= 2 {
            let mut top = f64::NEG_INFINITY;
            let mut arg = None;
            let res = search.grid_resolution;
            for cell in grid_cells(res) {
                let chain = grid_chain(cell, res)?;
                let c = evaluate_constraints(&chain, pair)?;
                if objective.score(&c) > top {
                    top = objective.score(&c);
                    arg = Some(chain);
                }
            }
            if let Some(chain) = arg {
                consider(
                    Witness::from_chain(chain, pair, WitnessKind::Grid)?,
                    &mut incumbent,
                );
            }
        }
        best.push(incumbent.ok_or_else(|| Error::InvalidParameter("search ran no stage".into()))?);
    }
    let margin = best.pop().expect("two objectives");
    let sum_bound = best.pop().expect("two objectives");
    Ok(BestConstraints { sum_bound, margin })
}

fn canonical_chains(pair: &ChannelPair, capacity_input: &Pmf) -> Vec<AuxiliaryChain> {
    let uniform = Pmf::uniform(pair.input_size());
    vec![
        AuxiliaryChain::input_only(capacity_input),
        AuxiliaryChain::input_only(&uniform),
        AuxiliaryChain::fully_public(capacity_input),
        AuxiliaryChain::fully_public(&uniform),
    ]
}

#[derive(Debug, Clone, Copy)]
enum Objective {
    Membership(RateTriple),
    SumBound,
    Margin,
}

impl Objective {
    fn value(&self, s: f64, d: f64) -> f64 {
        match self {
            Objective::Membership(p) => {
                (s - p.r - p.alpha + REGION_SLACK).min(0.0)
                    + (d - 2.0 * p.alpha + p.kappa + REGION_SLACK).min(0.0)
            }
            Objective::SumBound => s,
            Objective::Margin => d,
        }
    }

    fn score(&self, c: &RegionConstraints) -> f64 {
        self.value(c.sum_bound, c.secrecy_margin)
    }
}

/// Flat parameter vector `[p(w) | p(u|w) rows | p(x|u) rows]`.
struct Layout {
    w: usize,
    u: usize,
    x: usize,
}

impl Layout {
    fn len(&self) -> usize {
        self.w + self.w * self.u + self.u * self.x
    }

    fn blocks(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let head = std::iter::once((0, self.w));
        let uw = (0..self.w).map(move |i| (self.w + i * self.u, self.u));
        let xu = (0..self.u).map(move |i| (self.w + self.w * self.u + i * self.x, self.x));
        head.chain(uw).chain(xu)
    }

    fn split<'a>(&self, theta: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64]) {
        let (w, rest) = theta.split_at(self.w);
        let (uw, xu) = rest.split_at(self.w * self.u);
        (w, uw, xu)
    }

    fn evaluate(
        &self,
        theta: &[f64],
        pair: &ChannelPair,
        objective: Objective,
        s: &mut Scratch,
    ) -> f64 {
        let (w, uw, xu) = self.split(theta);
        let (sum, margin) = constraints_from_tables(w, uw, xu, self.w, self.u, pair, s);
        objective.value(sum, margin)
    }

    fn chain(&self, theta: &[f64]) -> Result<AuxiliaryChain> {
        let mut t = theta.to_vec();
        for (start, len) in self.blocks() {
            let block = &mut t[start..start + len];
            block.iter_mut().for_each(|v| *v = v.max(0.0));
            let total: f64 = block.iter().sum();
            block.iter_mut().for_each(|v| *v /= total);
        }
        let (w, uw, xu) = self.split(&t);
        AuxiliaryChain::new(
            Pmf::new(w.to_vec())?,
            DiscreteChannel::from_flat(self.w, self.u, uw.to_vec(), 1e-9)?,
            DiscreteChannel::from_flat(self.u, self.x, xu.to_vec(), 1e-9)?,
        )
    }

    fn random(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
        let mut theta = vec![0.0; self.len()];
        for (start, len) in self.blocks() {
            theta[start..start + len].copy_from_slice(&random_simplex(rng, len));
        }
        theta
    }

    fn project(&self, theta: &mut [f64]) {
        for (start, len) in self.blocks() {
            project_simplex(&mut theta[start..start + len]);
        }
    }
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex(v: &mut [f64]) {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumulative += s;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if s - t > 0.0 {
            shift = t;
        }
    }
    v.iter_mut().for_each(|x| *x = (*x - shift).max(0.0));
}

/// One restart of projected gradient ascent with forward differences.
/// Returns the final parameters and objective value.
fn ascend(
    layout: &Layout,
    pair: &ChannelPair,
    objective: Objective,
    search: &SearchParams,
    unit: u64,
) -> (Vec<f64>, f64) {
    let mut rng = substream(search.seed, RNG_MODULE, unit);
    let mut scratch = Scratch::default();
    let mut theta = layout.random(&mut rng);
    let mut value = layout.evaluate(&theta, pair, objective, &mut scratch);
    let mut grad = vec![0.0; theta.len()];
    let mut step = search.step_size;
    let stop_when_feasible = matches!(objective, Objective::Membership(_));
    for _ in 0..search.steps {
        if (stop_when_feasible && value >= 0.0) || step < MIN_STEP_SIZE {
            break;
        }
        for i in 0..theta.len() {
            let saved = theta[i];
            theta[i] = saved + FD_STEP;
            grad[i] = (layout.evaluate(&theta, pair, objective, &mut scratch) - value) / FD_STEP;
            theta[i] = saved;
        }
        let mut candidate: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t + step * g).collect();
        layout.project(&mut candidate);
        let next = layout.evaluate(&candidate, pair, objective, &mut scratch);
        if next > value {
            theta = candidate;
            value = next;
        } else {
            step /= 2.0;
        }
    }
    (theta, value)
}

fn grid_cells(res: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..=res).flat_map(move |a| (0..=res).flat_map(move |b| (0..=res).map(move |c| (a, b, c))))
}

/// Binary `W`, `U = X`, with `p_W(0) = a/res`, `p(x=0|w=0) = b/res`,
/// `p(x=0|w=1) = c/res`.
fn grid_chain((a, b, c): (usize, usize, usize), res: usize) -> Result<AuxiliaryChain> {
    let f = |k: usize| k as f64 / res as f64;
    AuxiliaryChain::new(
        Pmf::new(vec![f(a), 1.0 - f(a)])?,
        DiscreteChannel::new(vec![vec![f(b), 1.0 - f(b)], vec![f(c), 1.0 - f(c)]])?,
        DiscreteChannel::identity(2),
    )
}

fn grid_search(
    pair: &ChannelPair,
    res: usize,
    accept: impl Fn(&RegionConstraints) -> bool,
) -> Result<Option<Witness>> {
    for cell in grid_cells(res) {
        let w = Witness::from_chain(grid_chain(cell, res)?, pair, WitnessKind::Grid)?;
        if accept(&w.constraints) {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

/// Upper bound on `α` at `(r, κ)` that holds for every chain: the key bound
/// and the capacity bounds on both inequalities.
pub(crate) fn alpha_upper_bound(r: Bits, kappa: Bits, capacity_upper: Bits) -> Bits {
    kappa
        .min(capacity_upper - r)
        .min((capacity_upper + kappa) / 2.0)
        .max(0.0)
}
