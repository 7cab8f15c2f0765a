//! Boundary sweeps: the largest `α` along a grid in `r` or `κ`.

use serde::{Deserialize, Serialize};

use super::search::{alpha_upper_bound, is_achievable_with_hints};
use super::{
    bsc_region_constraints, evaluate_constraints, max_alpha, satisfies_region, AuxiliaryChain,
    RateTriple, RegionConstraints, SearchParams, WitnessKind, MIN_RATE,
};
use crate::channel::{ChannelPair, Pmf};
use crate::error::{Error, Result};
use crate::info::channel_capacity;

pub const BISECTION_TOL: f64 = 1e-4;
pub const BISECTION_MAX_ITERATIONS: usize = 20;
const MAX_ROWS: usize = 1_000_000;

/// Which coordinate is held fixed; the other runs over the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Sweep `r` over `step, 2 step, …` up to capacity.
    Kappa(f64),
    /// Sweep `κ` over `0, step, …` up to twice capacity, past which nothing
    /// changes.
    R(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: RateTriple,
    pub witness_kind: WitnessKind,
    pub budget_flag: bool,
    /// `None` only when not even `α = 0` could be certified.
    pub witness: Option<AuxiliaryChain>,
    pub constraints: Option<RegionConstraints>,
}

impl SweepRow {
    /// Re-evaluates the witness and checks the row against it.
    pub fn revalidate(&self, pair: &ChannelPair, tol: f64) -> Result<bool> {
        let Some(chain) = &self.witness else {
            return Ok(self.budget_flag);
        };
        let c = evaluate_constraints(chain, pair)?;
        let p = &self.point;
        Ok(p.r + p.alpha <= c.sum_bound + tol
            && 2.0 * p.alpha - p.kappa <= c.secrecy_margin + tol
            && p.alpha <= p.kappa + tol)
    }
}

/// Largest achievable `α` at each grid value of the free coordinate.
///
/// Binary symmetric pairs use the closed form. Other pairs bisect over
/// [`is_achievable`](super::is_achievable), walking the grid in the direction
/// where the optimum grows so each witness seeds the next row. Rows come
/// back in ascending order of the free coordinate.
pub fn boundary_sweep(
    pair: &ChannelPair,
    fixed: SweepAxis,
    step: f64,
    search: &SearchParams,
) -> Result<Vec<SweepRow>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "grid step must be positive, got {step}"
        )));
    }
    let fixed_value = match fixed {
        SweepAxis::Kappa(v) | SweepAxis::R(v) => v,
    };
    if !(fixed_value >= 0.0) || !fixed_value.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "fixed coordinate must be non-negative, got {fixed_value}"
        )));
    }
    if let SweepAxis::R(r) = fixed {
        if r < MIN_RATE {
            return Err(Error::InvalidParameter(format!(
                "message rate must be positive, got {r}"
            )));
        }
    }

    if let Some((lt, lq)) = pair.as_bsc_pair() {
        return closed_form_sweep(pair, fixed, step, lt, lq);
    }

    let capacity = channel_capacity(&pair.main, 1e-9)?;
    let points = grid(fixed, step, capacity.bits)?;
    let mut order: Vec<usize> = (0..points.len()).collect();
    if matches!(fixed, SweepAxis::Kappa(_)) {
        order.reverse();
    }
    let mut rows: Vec<Option<SweepRow>> = vec![None; points.len()];
    let mut carried: Option<(f64, AuxiliaryChain)> = None;
    for i in order {
        let (r, kappa) = points[i];
        let upper = alpha_upper_bound(r, kappa, capacity.upper);
        let mut budget_flag = false;
        let (mut lo, mut witness) = match &carried {
            Some((alpha, chain)) => {
                let c = evaluate_constraints(chain, pair)?;
                (*alpha, Some((chain.clone(), c, WitnessKind::Hint)))
            }
            None => {
                let out =
                    is_achievable_with_hints(&RateTriple::new(r, 0.0, kappa), pair, search, &[])?;
                budget_flag |= out.budget_exhausted;
                (0.0, out.witness.map(|w| (w.chain, w.constraints, w.kind)))
            }
        };
        if witness.is_some() {
            let mut hi = upper.max(lo);
            let mut iterations = 0;
            while hi - lo > BISECTION_TOL && iterations < BISECTION_MAX_ITERATIONS {
                let mid = if iterations == 0 { hi } else { 0.5 * (lo + hi) };
                let hints: Vec<AuxiliaryChain> = witness.iter().map(|w| w.0.clone()).collect();
                let out = is_achievable_with_hints(
                    &RateTriple::new(r, mid, kappa),
                    pair,
                    search,
                    &hints,
                )?;
                if let Some(w) = out.witness {
                    lo = mid;
                    witness = Some((w.chain, w.constraints, w.kind));
                } else {
                    budget_flag |= out.budget_exhausted;
                    hi = mid;
                }
                iterations += 1;
            }
        }
        let row = match witness {
            Some((chain, c, kind)) => {
                carried = Some((lo, chain.clone()));
                SweepRow {
                    point: RateTriple::new(r, lo, kappa),
                    witness_kind: kind,
                    budget_flag,
                    witness: Some(chain),
                    constraints: Some(c),
                }
            }
            None => SweepRow {
                point: RateTriple::new(r, 0.0, kappa),
                witness_kind: WitnessKind::Gradient,
                budget_flag: true,
                witness: None,
                constraints: None,
            },
        };
        rows[i] = Some(row);
    }
    Ok(rows
        .into_iter()
        .map(|r| r.expect("every grid point visited"))
        .collect())
}

fn grid(fixed: SweepAxis, step: f64, limit: f64) -> Result<Vec<(f64, f64)>> {
    let (start, end) = match fixed {
        SweepAxis::Kappa(_) => (1, limit),
        SweepAxis::R(_) => (0, 2.0 * limit),
    };
    let count = (end / step + 1e-9).floor();
    if count > MAX_ROWS as f64 {
        return Err(Error::InvalidParameter(format!(
            "grid step {step} gives more than {MAX_ROWS} rows"
        )));
    }
    let count = count as usize;
    Ok((start..=count)
        .map(|i| {
            let v = i as f64 * step;
            match fixed {
                SweepAxis::Kappa(k) => (v, k),
                SweepAxis::R(r) => (r, v),
            }
        })
        .filter(|&(r, _)| r >= MIN_RATE && r <= limit)
        .collect())
}

fn closed_form_sweep(
    pair: &ChannelPair,
    fixed: SweepAxis,
    step: f64,
    lt: f64,
    lq: f64,
) -> Result<Vec<SweepRow>> {
    let closed = bsc_region_constraints(lt, lq)?;
    let uniform = Pmf::uniform(2);
    let chain = if lt <= lq {
        AuxiliaryChain::input_only(&uniform)
    } else {
        AuxiliaryChain::fully_public(&uniform)
    };
    let c = evaluate_constraints(&chain, pair)?;
    let mut rows = Vec::new();
    for (r, kappa) in grid(fixed, step, closed.sum_bound)? {
        let Some(alpha) = max_alpha(r, kappa, &closed) else {
            continue;
        };
        let point = RateTriple::new(r, alpha, kappa);
        debug_assert!(satisfies_region(&point, &c));
        rows.push(SweepRow {
            point,
            witness_kind: WitnessKind::ClosedForm,
            budget_flag: false,
            witness: Some(chain.clone()),
            constraints: Some(c),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bsc, DiscreteChannel};
    use approx::assert_abs_diff_eq;

    // (h(0.2) − h(0.1) + 0.3) / 2, mpmath
    const ALPHA_KAPPA_03: f64 = 0.276466250649040563;

    #[test]
    fn less_noisy_pair_near_zero_rate() {
        let pair = ChannelPair::bsc_pair(0.1, 0.2).unwrap();
        let rows =
            boundary_sweep(&pair, SweepAxis::Kappa(0.3), 0.01, &SearchParams::default()).unwrap();
        assert_abs_diff_eq!(rows[0].point.r, 0.01);
        assert_abs_diff_eq!(rows[0].point.alpha, ALPHA_KAPPA_03, epsilon = 1e-12);
        assert!(rows
            .windows(2)
            .all(|w| w[1].point.alpha <= w[0].point.alpha));
        let last = rows.last().unwrap();
        assert!(last.point.r + last.point.alpha <= 0.531004406410719 + 1e-6);
    }

    #[test]
    fn zero_key_means_zero_authentication() {
        let pair = ChannelPair::bsc_pair(0.1, 0.2).unwrap();
        let rows =
            boundary_sweep(&pair, SweepAxis::Kappa(0.0), 0.05, &SearchParams::default()).unwrap();
        assert!(rows.iter().all(|r| r.point.alpha == 0.0));
    }

    #[test]
    fn equal_channels_cap_at_half_key() {
        let pair = ChannelPair::bsc_pair(0.3, 0.3).unwrap();
        let rows =
            boundary_sweep(&pair, SweepAxis::Kappa(0.1), 0.01, &SearchParams::default()).unwrap();
        assert_abs_diff_eq!(rows[0].point.alpha, 0.05, epsilon = 1e-12);
        assert!(rows.iter().all(|r| r.point.alpha <= 0.05 + 1e-12));
    }

    #[test]
    fn fixed_rate_sweep_grows_with_key() {
        let pair = ChannelPair::bsc_pair(0.1, 0.2).unwrap();
        let rows =
            boundary_sweep(&pair, SweepAxis::R(0.1), 0.05, &SearchParams::default()).unwrap();
        assert_eq!(rows[0].point.kappa, 0.0);
        assert!(rows
            .windows(2)
            .all(|w| w[1].point.alpha >= w[0].point.alpha));
        assert_abs_diff_eq!(
            rows.last().unwrap().point.alpha,
            0.531004406410719 - 0.1,
            epsilon = 1e-12
        );
    }

    #[test]
    fn generic_pair_bisection_is_monotone_and_valid() {
        let pair = ChannelPair::new(
            DiscreteChannel::new(vec![vec![0.9, 0.1], vec![0.15, 0.85]]).unwrap(),
            bsc(0.3).unwrap(),
        )
        .unwrap();
        let search = SearchParams {
            restarts: 2,
            steps: 60,
            grid_resolution: 4,
            max_w: Some(2),
            max_u: Some(2),
            ..SearchParams::default()
        };
        let rows = boundary_sweep(&pair, SweepAxis::Kappa(0.2), 0.1, &search).unwrap();
        assert!(!rows.is_empty());
        assert!(rows
            .windows(2)
            .all(|w| w[1].point.alpha <= w[0].point.alpha));
        for row in &rows {
            assert!(row.revalidate(&pair, 1e-6).unwrap());
        }
    }

    #[test]
    fn bad_step_is_rejected() {
        let pair = ChannelPair::bsc_pair(0.1, 0.2).unwrap();
        assert!(
            boundary_sweep(&pair, SweepAxis::Kappa(0.3), 0.0, &SearchParams::default()).is_err()
        );
        assert!(boundary_sweep(
            &pair,
            SweepAxis::Kappa(0.3),
            f64::NAN,
            &SearchParams::default()
        )
        .is_err());
    }
}
