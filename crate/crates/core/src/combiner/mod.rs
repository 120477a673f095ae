//! Combining confidence distributions from independent studies.
//!
//! The monotone-function recipes map each `H_i(y)` through `F₀^{-1}`, sum
//! (optionally with weights) and map back through the law of the sum. The
//! product recipes multiply densities and renormalize.

pub mod product;
pub mod weights;

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cd::{
    uniformity_report, CdEvaluator, ConfDist, Evaluator, Exactness, KsReport, Meta, Pivot,
    Support,
};
use crate::error::{ensure, Error, Result};
use crate::numkernel::special::gamma_int_tails;
use crate::numkernel::tails::ln_sum_exp;
use crate::numkernel::{
    weighted_convolution_cdf, ConvolutionConfig, DeL, DistFamily, Tails, WeightedSumCdf,
};

pub use product::{combine_product, ProductVariant};
pub use weights::{
    weights_from_intervals, weights_indicator, weights_kernel, KernelKind, WeightProvenance,
    WeightVector, DEFAULT_ALPHA_N,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Nm,
    E1,
    E2,
    De,
    An,
    Prod,
    ProdScale,
}

impl Method {
    /// Reference law used by the monotone recipes.
    pub fn default_f0(&self) -> Option<DistFamily> {
        match self {
            Method::Nm => Some(DistFamily::StdNormal),
            Method::E1 => Some(DistFamily::ExpStandard),
            Method::E2 => Some(DistFamily::ExpMirror),
            Method::De => Some(DistFamily::DoubleExp),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Nm => "nm",
            Method::E1 => "e1",
            Method::E2 => "e2",
            Method::De => "de",
            Method::An => "an",
            Method::Prod => "prod",
            Method::ProdScale => "prod_scale",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "nm" => Method::Nm,
            "e1" => Method::E1,
            "e2" => Method::E2,
            "de" => Method::De,
            "an" => Method::An,
            "prod" => Method::Prod,
            "prod_scale" | "prod-scale" => Method::ProdScale,
            other => return Err(Error::Config(format!("unknown combiner '{other}'"))),
        })
    }
}

/// Per-study precision `n_i / V_i` used by the AN combiner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnSummary {
    pub t: f64,
    pub v: f64,
    pub n: f64,
}

impl AnSummary {
    /// `(θ̂, se)` with `n / V = 1 / se²`.
    pub fn from_point_se(theta_hat: f64, se: f64) -> Self {
        AnSummary {
            t: theta_hat,
            v: se * se,
            n: 1.0,
        }
    }

    pub fn precision(&self) -> f64 {
        self.n / self.v
    }
}

#[derive(Debug, Clone)]
pub struct CombinerSpec {
    pub method: Method,
    /// Overrides the method's default reference law.
    pub f0: Option<DistFamily>,
    pub weights: Option<WeightVector>,
    /// `(n_i, V_i)` per study for AN; taken from the CDs' standard errors
    /// when absent.
    pub an_precisions: Option<Vec<(f64, f64)>>,
    pub convolution: ConvolutionConfig,
}

impl CombinerSpec {
    pub fn new(method: Method) -> Self {
        CombinerSpec {
            method,
            f0: None,
            weights: None,
            an_precisions: None,
            convolution: ConvolutionConfig::default(),
        }
    }

    pub fn with_weights(mut self, weights: WeightVector) -> Self {
        self.weights = Some(weights);
        self
    }

    pub fn with_f0(mut self, f0: DistFamily) -> Self {
        self.f0 = Some(f0);
        self
    }

    pub fn with_convolution(mut self, cfg: ConvolutionConfig) -> Self {
        self.convolution = cfg;
        self
    }
}

/// Combine `cds` as described by `spec`.
pub fn combine(cds: &[ConfDist], spec: &CombinerSpec) -> Result<ConfDist> {
    ensure!(!cds.is_empty(), Input, "no confidence distributions to combine");
    if let Some(w) = &spec.weights {
        ensure!(
            w.len() == cds.len(),
            Input,
            "{} weights for {} studies",
            w.len(),
            cds.len()
        );
    }
    match spec.method {
        Method::An => {
            let summaries = an_summaries(cds, spec.an_precisions.as_deref())?;
            match &spec.weights {
                Some(w) => combine_an_weighted(&summaries, w),
                None => combine_an(&summaries),
            }
        }
        Method::Prod | Method::ProdScale => {
            ensure!(
                spec.weights.is_none(),
                Config,
                "density products do not take weights"
            );
            let variant = if spec.method == Method::Prod {
                ProductVariant::Location
            } else {
                ProductVariant::Scale
            };
            combine_product(cds, variant)
        }
        m => {
            let f0 = spec.f0.or(m.default_f0()).expect("monotone method");
            let weights = spec
                .weights
                .clone()
                .unwrap_or_else(|| WeightVector::ones(cds.len()));
            combine_weighted_with(cds, &weights, f0, &spec.convolution)
        }
    }
}

fn an_summaries(cds: &[ConfDist], precisions: Option<&[(f64, f64)]>) -> Result<Vec<AnSummary>> {
    if let Some(p) = precisions {
        ensure!(
            p.len() == cds.len(),
            Input,
            "{} precisions for {} studies",
            p.len(),
            cds.len()
        );
    }
    cds.iter()
        .enumerate()
        .map(|(i, cd)| {
            let t = match cd.meta().point_estimate {
                Some(t) => t,
                None => cd.median()?,
            };
            match precisions {
                Some(p) => Ok(AnSummary {
                    t,
                    n: p[i].0,
                    v: p[i].1,
                }),
                None => {
                    let se = cd.meta().scale.ok_or_else(|| {
                        Error::Config(format!("study {} has no standard error for AN", i + 1))
                    })?;
                    Ok(AnSummary::from_point_se(t, se))
                }
            }
        })
        .collect()
}

/// `H_c(y) = G_c(Σ F₀^{-1}(H_i(y)))`.
pub fn combine_monotone(cds: &[ConfDist], f0: DistFamily) -> Result<ConfDist> {
    ensure!(!cds.is_empty(), Input, "no confidence distributions to combine");
    combine_weighted_with(
        cds,
        &WeightVector::ones(cds.len()),
        f0,
        &ConvolutionConfig::default(),
    )
}

/// `H_DE(y) = DE_L(Σ DE^{-1}(H_i(y)))`.
pub fn combine_de(cds: &[ConfDist]) -> Result<ConfDist> {
    combine_monotone(cds, DistFamily::DoubleExp)
}

/// `H_{c,ω}(y) = G_{c,ω}(Σ ω_j F₀^{-1}(H_j(y)))`.
pub fn combine_weighted(
    cds: &[ConfDist],
    weights: &WeightVector,
    f0: DistFamily,
) -> Result<ConfDist> {
    combine_weighted_with(cds, weights, f0, &ConvolutionConfig::default())
}

pub fn combine_weighted_with(
    cds: &[ConfDist],
    weights: &WeightVector,
    f0: DistFamily,
    cfg: &ConvolutionConfig,
) -> Result<ConfDist> {
    ensure!(!cds.is_empty(), Input, "no confidence distributions to combine");
    ensure!(
        weights.len() == cds.len(),
        Input,
        "{} weights for {} studies",
        weights.len(),
        cds.len()
    );
    f0.validate()?;
    let support = common_support(cds)?;
    let omegas = weights.omegas();
    let active: Vec<usize> = (0..cds.len()).filter(|&i| omegas[i] > 0.0).collect();
    let exact = weights.is_binary() && active.iter().all(|&i| cds[i].is_exact());
    let exactness = if exact {
        Exactness::Exact
    } else {
        Exactness::Asymptotic
    };
    if active.len() == 1 {
        return Ok(cds[active[0]].clone().with_exactness(exactness));
    }
    let inputs: Vec<ConfDist> = active.iter().map(|&i| cds[i].clone()).collect();
    let w: Vec<f64> = active.iter().map(|&i| omegas[i]).collect();
    let m = inputs.len() as u32;
    let unit = w.iter().all(|w| *w == 1.0);
    let g = match f0 {
        DistFamily::ExpStandard if unit => SumLaw::GammaLog { shape: m },
        DistFamily::ExpMirror if unit => SumLaw::MirroredGammaLog { shape: m },
        DistFamily::DoubleExp if unit => SumLaw::De(DeL::new(m)?),
        _ => SumLaw::Sum(weighted_convolution_cdf(f0, &w, cfg)?),
    };
    let wsum: f64 = w.iter().sum();
    let center = inputs
        .iter()
        .zip(&w)
        .map(|(cd, w)| w * cd.center_hint())
        .sum::<f64>()
        / wsum;
    let scale = inputs
        .iter()
        .map(|cd| cd.scale_hint())
        .fold(f64::INFINITY, f64::min)
        / (m as f64).sqrt();
    let eval = MonotoneCombined {
        inputs,
        weights: w,
        f0,
        g,
        center,
        scale,
    };
    let mut meta = Meta::labelled(format!("combined({})", f0.name()));
    meta.sample_size = cds
        .iter()
        .map(|cd| cd.meta().sample_size)
        .sum::<Option<u64>>();
    Ok(ConfDist::custom(Arc::new(eval), exactness, support, meta))
}

fn common_support(cds: &[ConfDist]) -> Result<Support> {
    cds.iter().try_fold(Support::REAL_LINE, |acc, cd| {
        acc.intersect(&cd.support())
            .ok_or_else(|| Error::Support("input supports do not overlap".into()))
    })
}

/// The law of the (weighted) sum, with log-space fast paths for the
/// unit-weight exponential and double-exponential cases.
#[derive(Debug)]
enum SumLaw {
    Sum(WeightedSumCdf),
    /// `Σ -ln(1 - H_i)` against Gamma(shape).
    GammaLog { shape: u32 },
    /// `Σ ln H_i` against the mirrored Gamma(shape).
    MirroredGammaLog { shape: u32 },
    De(DeL),
}

#[derive(Debug)]
struct MonotoneCombined {
    inputs: Vec<ConfDist>,
    weights: Vec<f64>,
    f0: DistFamily,
    g: SumLaw,
    center: f64,
    scale: f64,
}

/// `ln(-ln(1 - u))` from the tails of `u`.
fn ln_neg_ln_upper(u: &Tails) -> f64 {
    if u.ln_lower < -20.0 {
        // -ln(1 - u) = u + u²/2 + ...
        u.ln_lower + 0.5 * u.ln_lower.exp()
    } else {
        (-u.ln_upper).ln()
    }
}

fn gamma_log_tails(shape: u32, us: impl Iterator<Item = Tails>) -> Tails {
    let ln_s = ln_sum_exp(us.map(|u| ln_neg_ln_upper(&u)));
    gamma_int_tails(shape, ln_s)
}

impl CdEvaluator for MonotoneCombined {
    fn tails(&self, y: f64) -> Tails {
        let us = self.inputs.iter().map(|cd| cd.tails(y).floored());
        match &self.g {
            SumLaw::GammaLog { shape } => gamma_log_tails(*shape, us),
            SumLaw::MirroredGammaLog { shape } => {
                gamma_log_tails(*shape, us.map(|u| u.mirrored())).mirrored()
            }
            SumLaw::De(d) => d.tails(us.map(|u| self.f0.quantile_from_tails(&u)).sum()),
            SumLaw::Sum(g) => g.tails(
                us.zip(&self.weights)
                    .map(|(u, w)| w * self.f0.quantile_from_tails(&u))
                    .sum(),
            ),
        }
    }

    fn center_hint(&self) -> f64 {
        self.center
    }

    fn scale_hint(&self) -> f64 {
        self.scale
    }
}

/// `θ̂_c = Σ(n_i/V_i)T_i / Σ(n_i/V_i)`, `H_AN(θ) = Φ(√(Σ n_i/V_i)(θ - θ̂_c))`.
pub fn combine_an(summaries: &[AnSummary]) -> Result<ConfDist> {
    combine_an_weighted(summaries, &WeightVector::ones(summaries.len()))
}

/// Weighted AN: `Φ((Σ ω_i p_i)(θ - θ̄) / √(Σ ω_i² p_i))` with `p_i = n_i/V_i`
/// and `θ̄` the `ω_i p_i`-weighted mean. Reduces to [`combine_an`] for unit
/// weights.
pub fn combine_an_weighted(summaries: &[AnSummary], weights: &WeightVector) -> Result<ConfDist> {
    ensure!(!summaries.is_empty(), Input, "no study summaries to combine");
    ensure!(
        weights.len() == summaries.len(),
        Input,
        "{} weights for {} studies",
        weights.len(),
        summaries.len()
    );
    for (i, s) in summaries.iter().enumerate() {
        ensure!(
            s.v > 0.0 && s.v.is_finite(),
            Parameter,
            "study {}: variance must be positive, got {}",
            i + 1,
            s.v
        );
        ensure!(s.n >= 1.0, Parameter, "study {}: n must be at least 1", i + 1);
        ensure!(s.t.is_finite(), Parameter, "study {}: estimate must be finite", i + 1);
    }
    let w = weights.omegas();
    let a: f64 = summaries.iter().zip(w).map(|(s, w)| w * s.precision()).sum();
    let b: f64 = summaries
        .iter()
        .zip(w)
        .map(|(s, w)| w * w * s.precision())
        .sum();
    let center = summaries
        .iter()
        .zip(w)
        .map(|(s, w)| w * s.precision() * s.t)
        .sum::<f64>()
        / a;
    let scale = b.sqrt() / a;
    Ok(ConfDist::new(
        Evaluator::Normal { center, scale },
        Exactness::Asymptotic,
        Support::REAL_LINE,
        Meta {
            sample_size: None,
            family: "combined(an)".into(),
            point_estimate: Some(center),
            scale: Some(scale),
            pivot: Pivot::Location,
        },
    ))
}

/// KS check of `H(θ₀)` for a combined CD rebuilt from seeded data.
pub fn validate_combined<F>(generator: F, theta0: f64, reps: usize, seed: u64) -> Result<KsReport>
where
    F: Fn(&mut ChaCha8Rng) -> Result<ConfDist> + Sync,
{
    uniformity_report(generator, theta0, reps, seed)
}
