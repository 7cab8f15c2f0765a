//! Fourier–Motzkin cross-check of the region inequalities.
//!
//! Adding the key-expansion shift to the key-transmission sub-region gives a
//! system in `(r, α, κ)` plus auxiliaries `(r', α', κ', β)`:
//!
//! ```text
//! r = r' − β,  α = α' + β,  κ = κ' + 2β,  0 ≤ β ≤ r'
//! r', α', κ' ≥ 0,  r' + α' ≤ S,  α' ≤ D,  α' ≤ κ'
//! ```
//!
//! Eliminating the auxiliaries should leave the three region inequalities.
//! [`fm_equivalence_check`] compares the two on random points, deciding the
//! auxiliary system with a linear program.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::Rng;
use serde::Serialize;

use super::{
    evaluate_constraints, satisfies_region, AuxiliaryChain, RateTriple, RegionConstraints,
    REGION_SLACK,
};
use crate::channel::ChannelPair;
use crate::error::Result;
use crate::rng::substream;

const RNG_MODULE: &str = "ta_region.fm";

/// Variable order of [`LinearSystem`]s built here.
pub const FM_VARIABLES: [&str; 9] = [
    "r", "alpha", "kappa", "S", "D", "r'", "alpha'", "kappa'", "beta",
];

/// Rows `a · v ≤ b` over named variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub variables: Vec<String>,
    pub rows: Vec<(Vec<f64>, f64)>,
}

impl LinearSystem {
    /// The pre-elimination system with `S` and `D` kept symbolic.
    pub fn pre_elimination() -> Self {
        let v = |pairs: &[(usize, f64)]| {
            let mut a = vec![0.0; FM_VARIABLES.len()];
            for &(i, c) in pairs {
                a[i] = c;
            }
            a
        };
        let (r, al, ka, s, d, rp, ap, kp, be) = (0, 1, 2, 3, 4, 5, 6, 7, 8);
        let mut rows = Vec::new();
        let mut eq = |a: Vec<f64>| {
            rows.push((a.clone(), 0.0));
            rows.push((a.iter().map(|x| -x).collect(), 0.0));
        };
        eq(v(&[(r, 1.0), (rp, -1.0), (be, 1.0)]));
        eq(v(&[(al, 1.0), (ap, -1.0), (be, -1.0)]));
        eq(v(&[(ka, 1.0), (kp, -1.0), (be, -2.0)]));
        let le = [
            v(&[(be, 1.0), (rp, -1.0)]),
            v(&[(be, -1.0)]),
            v(&[(rp, -1.0)]),
            v(&[(ap, -1.0)]),
            v(&[(kp, -1.0)]),
            v(&[(rp, 1.0), (ap, 1.0), (s, -1.0)]),
            v(&[(ap, 1.0), (d, -1.0)]),
            v(&[(ap, 1.0), (kp, -1.0)]),
        ];
        rows.extend(le.into_iter().map(|a| (a, 0.0)));
        LinearSystem {
            variables: FM_VARIABLES.iter().map(|s| s.to_string()).collect(),
            rows,
        }
    }

    /// Removes variable `j`, combining every positive row with every
    /// negative one. Duplicate and trivially true rows are dropped.
    pub fn eliminate(&self, j: usize) -> LinearSystem {
        let mut out: Vec<(Vec<f64>, f64)> = Vec::new();
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        for row in &self.rows {
            if row.0[j] > 0.0 {
                pos.push(row);
            } else if row.0[j] < 0.0 {
                neg.push(row);
            } else {
                push_normalized(&mut out, row.0.clone(), row.1);
            }
        }
        for p in &pos {
            for n in &neg {
                let (cp, cn) = (p.0[j], -n.0[j]);
                let a: Vec<f64> = p.0.iter().zip(&n.0).map(|(x, y)| x / cp + y / cn).collect();
                push_normalized(&mut out, a, p.1 / cp + n.1 / cn);
            }
        }
        for row in &mut out {
            row.0[j] = 0.0;
        }
        LinearSystem {
            variables: self.variables.clone(),
            rows: out,
        }
    }

    /// Whether every row holds at `values` up to `slack`.
    pub fn holds(&self, values: &[f64], slack: f64) -> bool {
        self.rows
            .iter()
            .all(|(a, b)| a.iter().zip(values).map(|(x, y)| x * y).sum::<f64>() <= b + slack)
    }

    /// Human-readable rows, skipping zero coefficients.
    pub fn describe(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|(a, b)| {
                let terms: Vec<String> = a
                    .iter()
                    .zip(&self.variables)
                    .filter(|(c, _)| **c != 0.0)
                    .map(|(c, name)| format!("{c:+} {name}"))
                    .collect();
                format!("{} <= {b}", terms.join(" "))
            })
            .collect()
    }
}

fn push_normalized(out: &mut Vec<(Vec<f64>, f64)>, mut a: Vec<f64>, mut b: f64) {
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        if b >= 0.0 {
            return;
        }
        out.push((a, b));
        return;
    }
    a.iter_mut().for_each(|x| *x = round12(*x / scale));
    b = round12(b / scale);
    if !out.iter().any(|(oa, ob)| *oa == a && *ob == b) {
        out.push((a, b));
    }
}

fn round12(x: f64) -> f64 {
    let r = (x * 1e12).round() / 1e12;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// The system left after eliminating `r'`, `α'`, `κ'` and `β`.
pub fn eliminated_system() -> LinearSystem {
    let mut sys = LinearSystem::pre_elimination();
    for j in [5, 6, 7, 8] {
        sys = sys.eliminate(j);
    }
    sys
}

/// Decides the pre-elimination system at a numeric point by linear
/// programming over `(r', α', κ', β)`.
pub fn pre_elimination_feasible(point: &RateTriple, c: &RegionConstraints) -> bool {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let rp = problem.add_var(0.0, (0.0, f64::INFINITY));
    let ap = problem.add_var(0.0, (0.0, f64::INFINITY));
    let kp = problem.add_var(0.0, (0.0, f64::INFINITY));
    let be = problem.add_var(0.0, (0.0, f64::INFINITY));
    problem.add_constraint(&[(rp, 1.0), (be, -1.0)], ComparisonOp::Eq, point.r);
    problem.add_constraint(&[(ap, 1.0), (be, 1.0)], ComparisonOp::Eq, point.alpha);
    problem.add_constraint(&[(kp, 1.0), (be, 2.0)], ComparisonOp::Eq, point.kappa);
    problem.add_constraint(&[(be, 1.0), (rp, -1.0)], ComparisonOp::Le, 0.0);
    problem.add_constraint(
        &[(rp, 1.0), (ap, 1.0)],
        ComparisonOp::Le,
        c.sum_bound + REGION_SLACK,
    );
    problem.add_constraint(
        &[(ap, 1.0)],
        ComparisonOp::Le,
        c.secrecy_margin + REGION_SLACK,
    );
    problem.add_constraint(&[(ap, 1.0), (kp, -1.0)], ComparisonOp::Le, REGION_SLACK);
    problem.solve().is_ok()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FmDisagreement {
    pub point: RateTriple,
    pub eliminated: bool,
    pub pre_elimination: bool,
    pub symbolic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FmReport {
    pub samples: usize,
    pub constraints: RegionConstraints,
    /// Points satisfying the region inequalities.
    pub inside: usize,
    pub disagreements: Vec<FmDisagreement>,
}

impl FmReport {
    pub fn passed(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// Samples `samples` points and compares the region inequalities, the
/// linear program on the pre-elimination system, and the symbolic
/// elimination result.
///
/// Points are drawn uniformly from a box twice the size of the chain's
/// bounds in every coordinate, with `r` kept positive. The auxiliary system
/// forces the margin to be non-negative, so chains with a negative margin
/// report disagreements by construction.
pub fn fm_equivalence_check(
    pair: &ChannelPair,
    chain: &AuxiliaryChain,
    samples: usize,
    rng_seed: u64,
) -> Result<FmReport> {
    let c = evaluate_constraints(chain, pair)?;
    let symbolic = eliminated_system();
    let span = 2.0 * (c.sum_bound.max(c.secrecy_margin.abs()).max(0.1));
    let mut rng = substream(rng_seed, RNG_MODULE, 0);
    let mut inside = 0;
    let mut disagreements = Vec::new();
    for _ in 0..samples {
        let point = RateTriple::new(
            rng.gen_range(1e-6..span),
            rng.gen_range(0.0..span),
            rng.gen_range(0.0..2.0 * span),
        );
        let a = satisfies_region(&point, &c);
        let b = pre_elimination_feasible(&point, &c);
        let values = [
            point.r,
            point.alpha,
            point.kappa,
            c.sum_bound,
            c.secrecy_margin,
            0.0,
            0.0,
            0.0,
            0.0,
        ];
        let s = symbolic.holds(&values, REGION_SLACK);
        inside += usize::from(a);
        if a != b || a != s {
            disagreements.push(FmDisagreement {
                point,
                eliminated: a,
                pre_elimination: b,
                symbolic: s,
            });
        }
    }
    Ok(FmReport {
        samples,
        constraints: c,
        inside,
        disagreements,
    })
}
