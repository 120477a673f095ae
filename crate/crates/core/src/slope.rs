//! Empirical Bahadur slopes of CD tails and checks of the combined-slope
//! bound.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cd::ConfDist;
use crate::combiner::Method;
use crate::error::{ensure, Result};
use crate::rng::{derive_seed, stream_rng};

/// Log tail recorded when a tail evaluates to exactly zero.
pub const SLOPE_LN_CLAMP: f64 = -745.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `-(1/n) ln H(θ₀ - ε)`.
    Left,
    /// `-(1/n) ln(1 - H(θ₀ + ε))`.
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeEstimate {
    pub epsilon: f64,
    pub side: Side,
    pub n_schedule: Vec<u64>,
    /// Replication mean of `-(1/n) ln tail` per `n`.
    pub values: Vec<f64>,
    /// Intercept of the `a + b/n` fit, floored at 0.
    pub extrapolated: f64,
    pub std_error: f64,
    /// True when some tail underflowed to zero and was recorded at
    /// [`SLOPE_LN_CLAMP`].
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopePair {
    pub left: SlopeEstimate,
    pub right: SlopeEstimate,
}

/// Estimate `S(-ε)` and `S(ε)` for CDs produced by `factory(n, rng)`.
///
/// Replication `r` at sample size `n` uses stream `r` of
/// `derive_seed(seed, n)`, so estimates for a given `n` do not depend on
/// the rest of the schedule.
pub fn slope_estimate<F>(
    factory: F,
    theta0: f64,
    epsilon: f64,
    n_schedule: &[u64],
    reps: usize,
    seed: u64,
) -> Result<SlopePair>
where
    F: Fn(u64, &mut ChaCha8Rng) -> Result<ConfDist> + Sync,
{
    ensure!(epsilon >= 0.0 && epsilon.is_finite(), Domain, "epsilon must be nonnegative");
    ensure!(n_schedule.len() >= 2, Input, "need at least two sample sizes");
    ensure!(
        n_schedule.windows(2).all(|w| w[0] < w[1]) && n_schedule[0] > 0,
        Input,
        "sample-size schedule must be positive and increasing"
    );
    ensure!(reps >= 1, Input, "replication count must be positive");
    let jobs: Vec<(usize, usize)> = (0..n_schedule.len())
        .flat_map(|i| (0..reps).map(move |r| (i, r)))
        .collect();
    let draws = jobs
        .par_iter()
        .map(|&(i, r)| {
            let n = n_schedule[i];
            let mut rng = stream_rng(derive_seed(seed, n), r as u64);
            let cd = factory(n, &mut rng)?;
            let left = cd.tails(theta0 - epsilon).ln_lower;
            let right = cd.tails(theta0 + epsilon).ln_upper;
            Ok((left, right))
        })
        .collect::<Result<Vec<_>>>()?;
    let side = |pick: fn(&(f64, f64)) -> f64, side: Side| {
        let mut clamped = false;
        let mut means = Vec::with_capacity(n_schedule.len());
        let mut vars = Vec::with_capacity(n_schedule.len());
        for (i, &n) in n_schedule.iter().enumerate() {
            let v: Vec<f64> = draws[i * reps..(i + 1) * reps]
                .iter()
                .map(|d| {
                    let mut l = pick(d);
                    if l == f64::NEG_INFINITY {
                        clamped = true;
                        l = SLOPE_LN_CLAMP;
                    }
                    -l / n as f64
                })
                .collect();
            let m = v.iter().sum::<f64>() / reps as f64;
            let var = if reps > 1 {
                v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / ((reps - 1) * reps) as f64
            } else {
                0.0
            };
            means.push(m);
            vars.push(var);
        }
        let (a, se) = fit_inverse_n(n_schedule, &means, &vars);
        SlopeEstimate {
            epsilon,
            side,
            n_schedule: n_schedule.to_vec(),
            values: means,
            extrapolated: a.max(0.0),
            std_error: se,
            clamped,
        }
    };
    Ok(SlopePair {
        left: side(|d| d.0, Side::Left),
        right: side(|d| d.1, Side::Right),
    })
}

/// Weighted least-squares fit of `y = a + b/n`; returns `a` and its standard
/// error, inflated by the residual dispersion when the model misfits.
fn fit_inverse_n(ns: &[u64], y: &[f64], var: &[f64]) -> (f64, f64) {
    let floor = var.iter().copied().fold(0.0, f64::max) * 1e-6 + 1e-300;
    let w: Vec<f64> = var.iter().map(|v| 1.0 / v.max(floor)).collect();
    let x: Vec<f64> = ns.iter().map(|n| 1.0 / *n as f64).collect();
    let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..y.len() {
        s0 += w[i];
        s1 += w[i] * x[i];
        s2 += w[i] * x[i] * x[i];
        t0 += w[i] * y[i];
        t1 += w[i] * x[i] * y[i];
    }
    let det = s0 * s2 - s1 * s1;
    let a = (s2 * t0 - s1 * t1) / det;
    let b = (s0 * t1 - s1 * t0) / det;
    let mut se2 = s2 / det;
    if y.len() > 2 {
        let chi2: f64 = (0..y.len())
            .map(|i| w[i] * (y[i] - a - b * x[i]).powi(2))
            .sum();
        se2 *= (chi2 / (y.len() - 2) as f64).max(1.0);
    }
    if var.iter().all(|v| *v == 0.0) {
        se2 = 0.0;
    }
    (a, se2.sqrt())
}

/// One input's slopes and its sample-size share `λ_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComponentSlope {
    pub epsilon: f64,
    pub left: f64,
    pub right: f64,
    pub lambda: f64,
}

impl ComponentSlope {
    pub fn from_estimate(est: &SlopePair, lambda: f64) -> Self {
        ComponentSlope {
            epsilon: est.left.epsilon,
            left: est.left.extrapolated,
            right: est.right.extrapolated,
            lambda,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideCheck {
    pub estimate: f64,
    pub std_error: f64,
    pub bound: f64,
    /// `estimate <= bound + 3 se`.
    pub within_bound: bool,
    /// `|estimate - bound| <= rel_tol * bound`.
    pub attains: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeBoundReport {
    pub left: SideCheck,
    pub right: SideCheck,
    pub rel_tol: f64,
}

/// Compare a combined slope with `Σ λ_j S_j(±ε) / Σ λ_j`.
///
/// The combined slope must be normalized by the total sample size
/// `Σ n_j`, with `n_j ∝ λ_j`.
pub fn slope_bound_report(
    components: &[ComponentSlope],
    combined: &SlopePair,
    rel_tol: f64,
) -> Result<SlopeBoundReport> {
    ensure!(!components.is_empty(), Input, "no component slopes");
    let eps = combined.left.epsilon;
    ensure!(
        combined.right.epsilon == eps && components.iter().all(|c| c.epsilon == eps),
        Input,
        "component and combined slopes use different epsilon"
    );
    ensure!(
        combined.left.n_schedule == combined.right.n_schedule,
        Input,
        "left and right slopes use different schedules"
    );
    ensure!(
        components.iter().all(|c| c.lambda > 0.0 && c.lambda.is_finite()),
        Input,
        "sample-size shares must be positive"
    );
    let total: f64 = components.iter().map(|c| c.lambda).sum();
    let bound = |f: fn(&ComponentSlope) -> f64| {
        components.iter().map(|c| c.lambda * f(c)).sum::<f64>() / total
    };
    let check = |est: &SlopeEstimate, bound: f64| SideCheck {
        estimate: est.extrapolated,
        std_error: est.std_error,
        bound,
        within_bound: est.extrapolated <= bound + 3.0 * est.std_error,
        attains: (est.extrapolated - bound).abs() <= rel_tol * bound,
    };
    Ok(SlopeBoundReport {
        left: check(&combined.left, bound(|c| c.left)),
        right: check(&combined.right, bound(|c| c.right)),
        rel_tol,
    })
}

/// Sides on which a combiner's slope is expected to reach the bound:
/// `(left, right)`, or `None` when no attainment is claimed.
pub fn expected_attainment(method: Method) -> Option<(bool, bool)> {
    match method {
        Method::De => Some((true, true)),
        Method::E1 => Some((false, true)),
        Method::E2 => Some((true, false)),
        _ => None,
    }
}
