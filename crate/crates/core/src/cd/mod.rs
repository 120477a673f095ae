//! Confidence distributions: representation, constructors and the
//! inference outputs read off them.

pub mod validity;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::numkernel::quad::integrate;
use crate::numkernel::special::{
    bisect_tails, chi_squared_ln_pdf, chi_squared_tails, norm_ln_pdf, norm_quantile, norm_tails,
    student_t_ln_pdf, student_t_tails,
};
use crate::numkernel::{DistFamily, GridCdf, Tails, GRID_TAIL_TOL};

pub use validity::{
    check_monotone, kolmogorov_sf, ks_uniform, pit_values, uniformity_report, KsReport,
};

/// Whether `H(θ₀)` is exactly or only asymptotically uniform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    Exact,
    Asymptotic,
}

/// How the CD depends on its statistic; used to decide when a density
/// product stays exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Pivot {
    None,
    /// `H(θ) = F(θ - T)` with `F` free of data and parameter.
    Location,
    /// `H(θ) = F(θ / T)` on `θ > 0`.
    Scale,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub sample_size: Option<u64>,
    pub family: String,
    pub point_estimate: Option<f64>,
    pub scale: Option<f64>,
    pub pivot: Pivot,
}

impl Meta {
    pub fn labelled(family: impl Into<String>) -> Self {
        Meta {
            sample_size: None,
            family: family.into(),
            point_estimate: None,
            scale: None,
            pivot: Pivot::None,
        }
    }
}

/// Interval of the parameter space; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub const REAL_LINE: Support = Support {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };
    pub const POSITIVE: Support = Support {
        lo: 0.0,
        hi: f64::INFINITY,
    };

    pub fn intersect(&self, other: &Support) -> Option<Support> {
        let s = Support {
            lo: self.lo.max(other.lo),
            hi: self.hi.min(other.hi),
        };
        (s.lo < s.hi).then_some(s)
    }

    pub fn contains(&self, y: f64) -> bool {
        y >= self.lo && y <= self.hi
    }
}

/// A user- or combiner-supplied evaluator.
pub trait CdEvaluator: Send + Sync + fmt::Debug {
    fn tails(&self, y: f64) -> Tails;
    /// `ln h(y)` when available in closed form.
    fn ln_density(&self, _y: f64) -> Option<f64> {
        None
    }
    /// A point near the middle of the distribution.
    fn center_hint(&self) -> f64;
    /// A rough spread, used to size root brackets and difference steps.
    fn scale_hint(&self) -> f64;
    fn quantile(&self, _p: f64) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone)]
pub enum Evaluator {
    Normal { center: f64, scale: f64 },
    StudentT { center: f64, scale: f64, df: u32 },
    /// `1 - F_{χ²_df}(ss / y)` on `y > 0`.
    NormalVariance { ss: f64, df: u32 },
    /// `1 - (max / θ)^n` on `θ >= max`.
    UniformMaximum { max: f64, n: u32 },
    Grid(GridCdf),
    Custom(Arc<dyn CdEvaluator>),
}

#[derive(Debug, Clone)]
pub struct ConfDist {
    evaluator: Evaluator,
    exactness: Exactness,
    support: Support,
    meta: Meta,
}

/// `(median, mean, mode)`; mean and mode are `None` when unavailable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointEstimates {
    pub median: f64,
    pub mean: Option<f64>,
    pub mode: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    Lower,
    Upper,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, y: f64) -> bool {
        y >= self.lo && y <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Hypothesis {
    /// `θ <= θ₀`
    LeftRay(f64),
    /// `θ >= θ₀`
    RightRay(f64),
    Singleton(f64),
    /// Disjoint closed intervals in increasing order.
    Union(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportValues {
    pub strong: f64,
    pub weak: f64,
}

impl ConfDist {
    pub fn new(evaluator: Evaluator, exactness: Exactness, support: Support, meta: Meta) -> Self {
        ConfDist {
            evaluator,
            exactness,
            support,
            meta,
        }
    }

    pub fn custom(
        evaluator: Arc<dyn CdEvaluator>,
        exactness: Exactness,
        support: Support,
        meta: Meta,
    ) -> Self {
        Self::new(Evaluator::Custom(evaluator), exactness, support, meta)
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.evaluator
    }

    pub fn exactness(&self) -> Exactness {
        self.exactness
    }

    pub fn is_exact(&self) -> bool {
        self.exactness == Exactness::Exact
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn meta(&self) -> &Meta {
        &self.meta
    }

    pub fn with_meta(mut self, meta: Meta) -> Self {
        self.meta = meta;
        self
    }

    pub fn with_exactness(mut self, exactness: Exactness) -> Self {
        self.exactness = exactness;
        self
    }

    pub fn tails(&self, y: f64) -> Tails {
        if y < self.support.lo {
            return Tails::from_prob(0.0);
        }
        if y > self.support.hi {
            return Tails::from_prob(1.0);
        }
        match &self.evaluator {
            Evaluator::Normal { center, scale } => norm_tails((y - center) / scale),
            Evaluator::StudentT { center, scale, df } => {
                student_t_tails((y - center) / scale, *df as f64)
            }
            Evaluator::NormalVariance { ss, df } => {
                if y <= 0.0 {
                    Tails::from_prob(0.0)
                } else {
                    chi_squared_tails(ss / y, *df as f64).mirrored()
                }
            }
            Evaluator::UniformMaximum { max, n } => {
                if y <= *max {
                    Tails::from_prob(0.0)
                } else {
                    Tails::from_ln_upper(*n as f64 * (max / y).ln())
                }
            }
            Evaluator::Grid(g) => g.tails(y),
            Evaluator::Custom(e) => e.tails(y),
        }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        self.tails(y).cdf()
    }

    /// `ln h(y)`, falling back to a central difference of the CDF for
    /// evaluators without a closed-form density.
    pub fn ln_density(&self, y: f64) -> f64 {
        if !self.support.contains(y) {
            return f64::NEG_INFINITY;
        }
        match &self.evaluator {
            Evaluator::Normal { center, scale } => norm_ln_pdf((y - center) / scale) - scale.ln(),
            Evaluator::StudentT { center, scale, df } => {
                student_t_ln_pdf((y - center) / scale, *df as f64) - scale.ln()
            }
            Evaluator::NormalVariance { ss, df } => {
                if y <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    chi_squared_ln_pdf(ss / y, *df as f64) + ss.ln() - 2.0 * y.ln()
                }
            }
            Evaluator::UniformMaximum { max, n } => {
                if y < *max {
                    f64::NEG_INFINITY
                } else {
                    let n = *n as f64;
                    n.ln() + n * max.ln() - (n + 1.0) * y.ln()
                }
            }
            Evaluator::Grid(g) => g.density(y).ln(),
            Evaluator::Custom(e) => e
                .ln_density(y)
                .unwrap_or_else(|| self.numeric_density(y).ln()),
        }
    }

    pub fn density(&self, y: f64) -> f64 {
        self.ln_density(y).exp()
    }

    fn numeric_density(&self, y: f64) -> f64 {
        let h = 1e-5 * self.scale_hint();
        let a = (y - h).max(self.support.lo);
        let b = (y + h).min(self.support.hi);
        if b <= a {
            return 0.0;
        }
        ((self.cdf(b) - self.cdf(a)) / (b - a)).max(0.0)
    }

    pub fn center_hint(&self) -> f64 {
        match &self.evaluator {
            Evaluator::Normal { center, .. } | Evaluator::StudentT { center, .. } => *center,
            Evaluator::NormalVariance { ss, df } => ss / *df as f64,
            Evaluator::UniformMaximum { max, n } => max * 2f64.powf(1.0 / *n as f64),
            Evaluator::Grid(g) => g.quantile(0.5),
            Evaluator::Custom(e) => e.center_hint(),
        }
    }

    pub fn scale_hint(&self) -> f64 {
        let s = match &self.evaluator {
            Evaluator::Normal { scale, .. } | Evaluator::StudentT { scale, .. } => *scale,
            Evaluator::NormalVariance { ss, df } => ss / *df as f64 * (2.0 / *df as f64).sqrt(),
            Evaluator::UniformMaximum { max, n } => max / *n as f64,
            Evaluator::Grid(g) => 0.5 * (g.quantile(0.75) - g.quantile(0.25)),
            Evaluator::Custom(e) => e.scale_hint(),
        };
        if s.is_finite() && s > 0.0 {
            s
        } else {
            1.0
        }
    }

    /// `H^{-1}(p)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        ensure!(p > 0.0 && p < 1.0, Domain, "probability {p} outside (0, 1)");
        let q = match &self.evaluator {
            Evaluator::Normal { center, scale } => Some(center + scale * norm_quantile(p)),
            Evaluator::StudentT { center, scale, df } => {
                DistFamily::StudentT { df: *df }.quantile(p).ok().map(|t| center + scale * t)
            }
            Evaluator::NormalVariance { ss, df } => DistFamily::ChiSquared { df: *df }
                .quantile(1.0 - p)
                .ok()
                .map(|c| ss / c),
            Evaluator::UniformMaximum { max, n } => {
                Some(max * (-(-p).ln_1p() / *n as f64).exp())
            }
            Evaluator::Grid(g) => Some(g.quantile(p)),
            Evaluator::Custom(e) => e.quantile(p),
        };
        match q {
            Some(q) if q.is_finite() => Ok(q),
            _ => self.bisect_quantile(p),
        }
    }

    fn bisect_quantile(&self, p: f64) -> Result<f64> {
        let c = self.center_hint().clamp(self.support.lo, self.support.hi);
        let s = self.scale_hint();
        let lo = (c - s).max(self.support.lo);
        let hi = (c + s).min(self.support.hi);
        let (lo, hi) = if lo < hi { (lo, hi) } else { (c - s, c + s) };
        bisect_tails(
            |y| self.tails(y),
            p,
            lo,
            hi,
            (self.support.lo, self.support.hi),
            1e-13,
        )
        .ok_or_else(|| Error::Domain(format!("quantile at {p} not bracketed")))
    }

    pub fn median(&self) -> Result<f64> {
        self.quantile(0.5)
    }
}

/// Exact CD for a normal mean with unknown variance:
/// `H(y) = F_{t_{n-1}}((y - x̄) / (s / √n))`.
pub fn cd_normal_mean(xbar: f64, s: f64, n: u64) -> Result<ConfDist> {
    ensure!(n >= 2, Parameter, "sample size must be at least 2, got {n}");
    ensure!(s > 0.0 && s.is_finite(), Parameter, "standard deviation must be positive");
    ensure!(xbar.is_finite(), Parameter, "sample mean must be finite");
    let scale = s / (n as f64).sqrt();
    Ok(ConfDist::new(
        Evaluator::StudentT {
            center: xbar,
            scale,
            df: (n - 1) as u32,
        },
        Exactness::Exact,
        Support::REAL_LINE,
        Meta {
            sample_size: Some(n),
            family: "student_t".into(),
            point_estimate: Some(xbar),
            scale: Some(scale),
            pivot: Pivot::None,
        },
    ))
}

/// Exact CD for a normal mean with known standard deviation `sigma`.
pub fn cd_normal_known_sd(xbar: f64, sigma: f64, n: u64) -> Result<ConfDist> {
    ensure!(n >= 1, Parameter, "sample size must be positive");
    ensure!(sigma > 0.0 && sigma.is_finite(), Parameter, "standard deviation must be positive");
    let scale = sigma / (n as f64).sqrt();
    Ok(ConfDist::new(
        Evaluator::Normal { center: xbar, scale },
        Exactness::Exact,
        Support::REAL_LINE,
        Meta {
            sample_size: Some(n),
            family: "normal".into(),
            point_estimate: Some(xbar),
            scale: Some(scale),
            pivot: Pivot::Location,
        },
    ))
}

/// Exact CD for a normal variance: `H(y) = 1 - F_{χ²_{n-1}}((n-1)s² / y)`.
pub fn cd_normal_variance(s2: f64, n: u64) -> Result<ConfDist> {
    ensure!(n >= 2, Parameter, "sample size must be at least 2, got {n}");
    ensure!(s2 > 0.0 && s2.is_finite(), Parameter, "sample variance must be positive");
    let df = (n - 1) as u32;
    Ok(ConfDist::new(
        Evaluator::NormalVariance {
            ss: (n - 1) as f64 * s2,
            df,
        },
        Exactness::Exact,
        Support::POSITIVE,
        Meta {
            sample_size: Some(n),
            family: "scaled_inverse_chi_squared".into(),
            point_estimate: Some(s2),
            scale: None,
            pivot: Pivot::Scale,
        },
    ))
}

/// Exact CD for the upper end `θ` of `U(0, θ)` from the sample maximum:
/// `H(θ) = 1 - (Y / θ)^n` on `θ >= Y`.
pub fn cd_uniform_maximum(max: f64, n: u32) -> Result<ConfDist> {
    ensure!(n >= 1, Parameter, "sample size must be positive");
    ensure!(max > 0.0 && max.is_finite(), Parameter, "sample maximum must be positive");
    Ok(ConfDist::new(
        Evaluator::UniformMaximum { max, n },
        Exactness::Exact,
        Support {
            lo: max,
            hi: f64::INFINITY,
        },
        Meta {
            sample_size: Some(n as u64),
            family: "uniform_maximum".into(),
            point_estimate: Some(max),
            scale: None,
            pivot: Pivot::Scale,
        },
    ))
}

/// Asymptotic CD `Φ((y - θ̂) / se)`.
pub fn cd_from_point_se(theta_hat: f64, se: f64) -> Result<ConfDist> {
    ensure!(se > 0.0 && se.is_finite(), Parameter, "standard error must be positive, got {se}");
    ensure!(theta_hat.is_finite(), Parameter, "estimate must be finite");
    Ok(ConfDist::new(
        Evaluator::Normal {
            center: theta_hat,
            scale: se,
        },
        Exactness::Asymptotic,
        Support::REAL_LINE,
        Meta {
            sample_size: None,
            family: "normal".into(),
            point_estimate: Some(theta_hat),
            scale: Some(se),
            pivot: Pivot::Location,
        },
    ))
}

/// Largest total decrease of a sampled p-value function that is treated as
/// numerical noise and repaired.
pub const ISOTONIC_TOL: f64 = 1e-9;

/// Wrap a p-value function sampled on `grid` as a grid-backed aCD.
///
/// Small monotonicity violations (total decrease up to [`ISOTONIC_TOL`]) are
/// repaired by isotonic regression; larger ones, values outside `[0, 1]`,
/// and functions that do not reach within [`GRID_TAIL_TOL`] of 0 and 1 are
/// rejected.
pub fn cd_from_pvalue_function(p: impl Fn(f64) -> f64, grid: &[f64]) -> Result<ConfDist> {
    ensure!(grid.len() >= 2, Input, "p-value grid needs at least two points");
    ensure!(
        grid.windows(2).all(|w| w[0] < w[1]) && grid.iter().all(|g| g.is_finite()),
        Input,
        "p-value grid must be finite and strictly increasing"
    );
    let values: Vec<f64> = grid.iter().map(|&y| p(y)).collect();
    ensure!(
        values.iter().all(|v| (0.0..=1.0).contains(v)),
        Shape,
        "p-value function must return probabilities"
    );
    let violation: f64 = values.windows(2).map(|w| (w[0] - w[1]).max(0.0)).sum();
    ensure!(
        violation <= ISOTONIC_TOL,
        Shape,
        "p-value function decreases by {violation:.3e} in total"
    );
    let values = if violation > 0.0 {
        isotonic_increasing(&values)
    } else {
        values
    };
    ensure!(
        values[0] <= GRID_TAIL_TOL && *values.last().unwrap() >= 1.0 - GRID_TAIL_TOL,
        Shape,
        "p-value function must approach 0 and 1 at the grid ends (got {} and {})",
        values[0],
        values.last().unwrap()
    );
    let g = GridCdf::new(grid.to_vec(), values)?;
    let center = g.quantile(0.5);
    Ok(ConfDist::new(
        Evaluator::Grid(g),
        Exactness::Asymptotic,
        Support::REAL_LINE,
        Meta {
            point_estimate: Some(center),
            ..Meta::labelled("pvalue_grid")
        },
    ))
}

/// Pool-adjacent-violators fit of a nondecreasing sequence.
fn isotonic_increasing(v: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(v.len());
    for &x in v {
        blocks.push((x, 1));
        while blocks.len() >= 2 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a <= b {
                break;
            }
            blocks.pop();
            let last = blocks.last_mut().unwrap();
            *last = ((a * na as f64 + b * nb as f64) / (na + nb) as f64, na + nb);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(x, n)| std::iter::repeat_n(x, n))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapMode {
    /// `H(y) = P_B(θ̂_B >= 2θ̂ - y)`
    Reflected,
    /// `H(y) = P_B(θ̂_B <= y)`
    Raw,
}

/// Bootstrap aCD.
///
/// The empirical CDF is taken at its distinct atoms (closed convention) and
/// joined linearly, with one extra node below the first atom at value 0, so
/// the result is continuous.
pub fn cd_from_bootstrap(boot_stats: &[f64], theta_hat: f64, mode: BootstrapMode) -> Result<ConfDist> {
    ensure!(!boot_stats.is_empty(), Input, "bootstrap sample is empty");
    ensure!(
        boot_stats.iter().all(|v| v.is_finite()) && theta_hat.is_finite(),
        Input,
        "bootstrap statistics must be finite"
    );
    let mut z: Vec<f64> = match mode {
        BootstrapMode::Reflected => boot_stats.iter().map(|b| 2.0 * theta_hat - b).collect(),
        BootstrapMode::Raw => boot_stats.to_vec(),
    };
    z.sort_by(|a, b| a.total_cmp(b));
    let b = z.len() as f64;
    let mut x: Vec<f64> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for (i, v) in z.iter().enumerate() {
        if x.last() == Some(v) {
            *counts.last_mut().unwrap() = i + 1;
        } else {
            x.push(*v);
            counts.push(i + 1);
        }
    }
    let first_gap = if x.len() >= 2 {
        x[1] - x[0]
    } else {
        1e-6 * x[0].abs().max(1.0)
    };
    let mut grid = vec![x[0] - first_gap];
    let mut values = vec![0.0];
    let mut upper = vec![1.0];
    let total = z.len();
    for (xi, ci) in x.iter().zip(&counts) {
        grid.push(*xi);
        values.push(*ci as f64 / b);
        upper.push((total - ci) as f64 / b);
    }
    let g = GridCdf::from_parts(grid, values, upper)?;
    Ok(ConfDist::new(
        Evaluator::Grid(g),
        Exactness::Asymptotic,
        Support::REAL_LINE,
        Meta {
            point_estimate: Some(theta_hat),
            ..Meta::labelled(match mode {
                BootstrapMode::Reflected => "bootstrap_reflected",
                BootstrapMode::Raw => "bootstrap_raw",
            })
        },
    ))
}

/// Tail mass beyond the quadrature range above which the mean is reported
/// unavailable.
const MEAN_TAIL_TOL: f64 = 1e-6;

/// Median, mean and mode of a CD.
pub fn point_estimates(cd: &ConfDist) -> Result<PointEstimates> {
    let median = cd.median()?;
    let (mean, mode) = match cd.evaluator() {
        Evaluator::Normal { center, .. } => (Some(*center), Some(*center)),
        Evaluator::StudentT { center, df, .. } => {
            (if *df >= 2 { Some(*center) } else { None }, Some(*center))
        }
        Evaluator::NormalVariance { ss, df } => {
            let df = *df as f64;
            (
                if df > 2.0 { Some(ss / (df - 2.0)) } else { None },
                Some(ss / (df + 2.0)),
            )
        }
        Evaluator::UniformMaximum { max, n } => {
            let n = *n as f64;
            (if n > 1.0 { Some(n * max / (n - 1.0)) } else { None }, Some(*max))
        }
        Evaluator::Grid(g) => {
            let xs = g.grid();
            let vs = g.values();
            let tail = vs[0] * xs[0].abs() + (1.0 - vs[vs.len() - 1]) * xs[xs.len() - 1].abs();
            let mean = (tail <= MEAN_TAIL_TOL).then(|| g.mean());
            let mut best = (0.0, None);
            for i in 0..xs.len() - 1 {
                let slope = (vs[i + 1] - vs[i]) / (xs[i + 1] - xs[i]);
                if slope > best.0 {
                    best = (slope, Some(0.5 * (xs[i] + xs[i + 1])));
                }
            }
            (mean, best.1)
        }
        Evaluator::Custom(_) => (numeric_mean(cd, median), numeric_mode(cd)),
    };
    Ok(PointEstimates { median, mean, mode })
}

fn numeric_mean(cd: &ConfDist, c: f64) -> Option<f64> {
    let eps = 1e-9;
    let lo = cd.quantile(eps).ok()?;
    let hi = cd.quantile(1.0 - eps).ok()?;
    if ((c - lo) * eps).max((hi - c) * eps) > MEAN_TAIL_TOL {
        return None;
    }
    let tol = 1e-10 * cd.scale_hint();
    let right = integrate(&|y| cd.tails(y).sf(), c, hi, tol);
    let left = integrate(&|y| cd.cdf(y), lo, c, tol);
    let m = c + right - left;
    m.is_finite().then_some(m)
}

fn numeric_mode(cd: &ConfDist) -> Option<f64> {
    let lo = cd.quantile(1e-3).ok()?;
    let hi = cd.quantile(1.0 - 1e-3).ok()?;
    let n = 400;
    let step = (hi - lo) / n as f64;
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for i in 0..=n {
        let d = cd.ln_density(lo + i as f64 * step);
        if d > best {
            best = d;
            best_i = i;
        }
    }
    if !best.is_finite() {
        return None;
    }
    // golden-section refinement on the neighbouring cells
    let mut a = lo + (best_i as f64 - 1.0) * step;
    let mut b = lo + (best_i as f64 + 1.0) * step;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if cd.ln_density(c) >= cd.ln_density(d) {
            b = d;
        } else {
            a = c;
        }
    }
    Some(0.5 * (a + b))
}

/// Confidence interval read off a CD.
pub fn confidence_interval(cd: &ConfDist, alpha: f64, kind: IntervalKind) -> Result<Interval> {
    ensure!(alpha > 0.0 && alpha < 1.0, Domain, "alpha {alpha} outside (0, 1)");
    Ok(match kind {
        IntervalKind::Lower => Interval {
            lo: f64::NEG_INFINITY,
            hi: cd.quantile(1.0 - alpha)?,
        },
        IntervalKind::Upper => Interval {
            lo: cd.quantile(alpha)?,
            hi: f64::INFINITY,
        },
        IntervalKind::TwoSided => Interval {
            lo: cd.quantile(alpha / 2.0)?,
            hi: cd.quantile(1.0 - alpha / 2.0)?,
        },
    })
}

/// Strong support `∫_C dH` and weak support `sup_{θ∈C} 2 min(H, 1 - H)`.
pub fn support_values(cd: &ConfDist, hyp: &Hypothesis) -> Result<SupportValues> {
    // weak support of [a, b] from the CDF values at its ends
    let weak = |ha: f64, hb: f64| {
        if ha <= 0.5 && hb >= 0.5 {
            1.0
        } else if hb < 0.5 {
            2.0 * hb
        } else {
            2.0 * (1.0 - ha)
        }
    };
    Ok(match hyp {
        Hypothesis::LeftRay(t) => {
            let h = cd.cdf(*t);
            SupportValues {
                strong: h,
                weak: weak(0.0, h),
            }
        }
        Hypothesis::RightRay(t) => {
            let tl = cd.tails(*t);
            SupportValues {
                strong: tl.sf(),
                weak: weak(tl.cdf(), 1.0),
            }
        }
        Hypothesis::Singleton(t) => {
            let tl = cd.tails(*t);
            SupportValues {
                strong: 0.0,
                weak: 2.0 * tl.cdf().min(tl.sf()),
            }
        }
        Hypothesis::Union(parts) => {
            ensure!(!parts.is_empty(), Input, "hypothesis union is empty");
            ensure!(
                parts.iter().all(|(a, b)| a <= b)
                    && parts.windows(2).all(|w| w[0].1 < w[1].0),
                Input,
                "hypothesis intervals must be ordered and disjoint"
            );
            let mut strong = 0.0;
            let mut best: f64 = 0.0;
            for &(a, b) in parts {
                let (ha, hb) = (cd.cdf(a), cd.cdf(b));
                strong += hb - ha;
                best = best.max(weak(ha, hb));
            }
            SupportValues {
                strong: strong.clamp(0.0, 1.0),
                weak: best,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::special::norm_cdf;
    use proptest::prelude::*;

    #[test]
    fn normal_mean_cd() {
        let cd = cd_normal_mean(0.0, 1.0, 4).unwrap();
        assert_eq!(cd.cdf(0.0), 0.5);
        // t_{3, 0.975} = 3.182446305284263
        let q = cd.quantile(0.975).unwrap();
        assert!((q - 3.182_446_305_284_263 / 2.0).abs() < 1e-9);
        assert!((q - 1.5912).abs() < 1e-4);
        assert!(cd_normal_mean(0.0, 1.0, 1).is_err());
        assert!(cd_normal_mean(0.0, 0.0, 5).is_err());
    }

    #[test]
    fn normal_variance_cd() {
        // upper 0.025 point of chi2_10 is 20.483177350807388; median 9.34181776559197
        let cd = cd_normal_variance(1.0, 11).unwrap();
        assert!((cd.cdf(10.0 / 20.483_177_350_807_388) - 0.025).abs() < 1e-12);
        assert!((cd.cdf(10.0 / 9.341_817_765_591_97) - 0.5).abs() < 1e-12);
        assert_eq!(cd.cdf(-1.0), 0.0);
        assert!(cd_normal_variance(-1.0, 5).is_err());
    }

    #[test]
    fn point_se_cd() {
        let cd = cd_from_point_se(0.600, 0.629).unwrap();
        assert_eq!(cd.cdf(0.600), 0.5);
        let pe = point_estimates(&cd).unwrap();
        assert_eq!((pe.median, pe.mean, pe.mode), (0.6, Some(0.6), Some(0.6)));
        let cd = cd_from_point_se(0.0, 1.0).unwrap();
        assert!((cd.cdf(1.96) - 0.975).abs() < 1e-4);
        assert!(cd_from_point_se(0.0, 0.0).is_err());
    }

    #[test]
    fn pvalue_function_cd() {
        let grid: Vec<f64> = (0..=2000).map(|i| -8.0 + 16.0 * i as f64 / 2000.0).collect();
        let cd = cd_from_pvalue_function(norm_cdf, &grid).unwrap();
        let reference = cd_from_point_se(0.0, 1.0).unwrap();
        for i in 0..=100 {
            let y = -4.0 + 0.08 * i as f64;
            assert!((cd.cdf(y) - reference.cdf(y)).abs() < 1e-5);
        }
        assert!(matches!(
            cd_from_pvalue_function(|_| 0.5, &grid),
            Err(Error::Shape(_))
        ));
        // a single dip of 1e-12 is repaired, a dip of 1e-3 is not
        let grid2 = [-8.0, -1.0, 0.0, 0.4, 0.5, 1.0, 8.0];
        let dip = |d: f64| move |y: f64| if y == 0.4 { norm_cdf(0.5) + d } else { norm_cdf(y) };
        assert!(cd_from_pvalue_function(dip(1e-12), &grid2).is_ok());
        assert!(matches!(cd_from_pvalue_function(dip(1e-3), &grid2), Err(Error::Shape(_))));
    }

    #[test]
    fn isotonic_repair_pools_adjacent() {
        assert_eq!(isotonic_increasing(&[0.0, 0.3, 0.1, 1.0]), vec![0.0, 0.2, 0.2, 1.0]);
    }

    #[test]
    fn bootstrap_cd() {
        let cd = cd_from_bootstrap(&[1.0, 2.0, 3.0], 2.0, BootstrapMode::Reflected).unwrap();
        assert!((cd.cdf(2.0) - 2.0 / 3.0).abs() < 1e-15);
        let sym = [0.5, 1.0, 1.7, 2.3, 3.0, 3.5];
        let r = cd_from_bootstrap(&sym, 2.0, BootstrapMode::Reflected).unwrap();
        let w = cd_from_bootstrap(&sym, 2.0, BootstrapMode::Raw).unwrap();
        for i in 0..50 {
            let y = -1.0 + 0.1 * i as f64;
            assert!((r.cdf(y) - w.cdf(y)).abs() < 1e-15);
        }
        assert!(cd_from_bootstrap(&[], 0.0, BootstrapMode::Raw).is_err());
    }

    #[test]
    fn uniform_scale_median() {
        let cd = cd_uniform_maximum(1.0, 3).unwrap();
        let pe = point_estimates(&cd).unwrap();
        assert!((pe.median - 2f64.powf(1.0 / 3.0)).abs() < 1e-12);
        assert_eq!(pe.mode, Some(1.0));
        assert!((pe.mean.unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn t_interval_is_classical() {
        let (xbar, s, n) = (3.0, 2.0, 10u64);
        let cd = cd_normal_mean(xbar, s, n).unwrap();
        let ci = confidence_interval(&cd, 0.05, IntervalKind::TwoSided).unwrap();
        // t_{9, 0.975} = 2.2621571627409915
        let half = 2.262_157_162_740_991_5 * s / (n as f64).sqrt();
        assert!((ci.lo - (xbar - half)).abs() < 1e-9);
        assert!((ci.hi - (xbar + half)).abs() < 1e-9);
        let lower = confidence_interval(&cd, 0.05, IntervalKind::Lower).unwrap();
        assert_eq!(lower.lo, f64::NEG_INFINITY);
        assert!(confidence_interval(&cd, 1.0, IntervalKind::Upper).is_err());
    }

    #[test]
    fn supports() {
        let cd = cd_from_point_se(0.0, 1.0).unwrap();
        let left = support_values(&cd, &Hypothesis::LeftRay(0.0)).unwrap();
        assert_eq!(left.strong, 0.5);
        assert_eq!(left.weak, 1.0);
        let single = support_values(&cd, &Hypothesis::Singleton(1.96)).unwrap();
        assert!((single.weak - 2.0 * (1.0 - norm_cdf(1.96))).abs() < 1e-15);
        assert!((single.weak - 0.05).abs() < 1e-3);
        let med = support_values(&cd, &Hypothesis::Singleton(0.0)).unwrap();
        assert_eq!(med.weak, 1.0);
        let u = support_values(&cd, &Hypothesis::Union(vec![(-5.0, -1.0), (1.0, 2.0)])).unwrap();
        let want = norm_cdf(-1.0) - norm_cdf(-5.0) + norm_cdf(2.0) - norm_cdf(1.0);
        assert!((u.strong - want).abs() < 1e-14);
        assert!((u.weak - 2.0 * norm_cdf(-1.0)).abs() < 1e-14);
        assert!(support_values(&cd, &Hypothesis::Union(vec![(1.0, 2.0), (0.0, 0.5)])).is_err());
    }

    #[test]
    fn grid_point_estimates() {
        let grid: Vec<f64> = (0..=4000).map(|i| -8.0 + 16.0 * i as f64 / 4000.0).collect();
        let cd = cd_from_pvalue_function(|y| norm_cdf(y - 1.0), &grid).unwrap();
        let pe = point_estimates(&cd).unwrap();
        assert!((pe.median - 1.0).abs() < 1e-4);
        assert!((pe.mean.unwrap() - 1.0).abs() < 1e-4);
        assert!((pe.mode.unwrap() - 1.0).abs() < 1e-2);
    }

    fn constructors() -> Vec<ConfDist> {
        vec![
            cd_normal_mean(1.0, 2.0, 5).unwrap(),
            cd_normal_variance(2.0, 7).unwrap(),
            cd_from_point_se(-1.0, 0.3).unwrap(),
            cd_normal_known_sd(0.5, 1.0, 9).unwrap(),
            cd_uniform_maximum(2.0, 4).unwrap(),
            cd_from_bootstrap(&[0.1, 0.5, 0.7, 1.2, 2.0], 0.8, BootstrapMode::Reflected).unwrap(),
        ]
    }

    #[test]
    fn constructors_are_monotone() {
        for cd in constructors() {
            assert!(check_monotone(&cd, 100, 11), "{:?}", cd.meta());
        }
    }

    proptest! {
        #[test]
        fn quantile_inverts_cdf(i in 0usize..5, p in 1e-4f64..0.9999) {
            let cd = &constructors()[i];
            let y = cd.quantile(p).unwrap();
            prop_assert!((cd.cdf(y) - p).abs() < 1e-9);
        }

        #[test]
        fn two_sided_contains_median(i in 0usize..6, alpha in 0.01f64..0.99) {
            let cd = &constructors()[i];
            let ci = confidence_interval(cd, alpha, IntervalKind::TwoSided).unwrap();
            prop_assert!(ci.contains(cd.median().unwrap()));
        }

        #[test]
        fn left_ray_strong_equals_cdf(i in 0usize..6, t in -5.0f64..5.0) {
            let cd = &constructors()[i];
            let s = support_values(cd, &Hypothesis::LeftRay(t)).unwrap();
            prop_assert_eq!(s.strong, cd.cdf(t));
        }
    }
}
