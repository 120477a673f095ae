//! Applications: the two-sample common-mean simulation, odds-ratio
//! meta-analysis and split-and-combine bootstrap of Oja's scale.

pub mod oja;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::cd::{
    cd_from_bootstrap, cd_from_point_se, cd_normal_mean, confidence_interval, uniformity_report,
    BootstrapMode, ConfDist, IntervalKind,
};
use crate::combiner::{
    combine, combine_an, combine_an_weighted, combine_de, weights_indicator, weights_kernel,
    AnSummary, CombinerSpec, KernelKind, Method, WeightVector,
};
use crate::error::{ensure, Error, Result};
use crate::numkernel::DistFamily;
use crate::rng::{derive_seed, stream_rng};

pub use oja::{oja_scale, triangle_area, triangle_count, PointCloud2D};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudySummary {
    pub study_id: String,
    pub theta_hat: f64,
    pub se: f64,
    pub n: Option<u64>,
}

impl StudySummary {
    pub fn new(study_id: impl Into<String>, theta_hat: f64, se: f64, n: Option<u64>) -> Result<Self> {
        ensure!(se > 0.0 && se.is_finite(), Data, "standard error must be positive, got {se}");
        ensure!(theta_hat.is_finite(), Data, "estimate must be finite");
        Ok(StudySummary {
            study_id: study_id.into(),
            theta_hat,
            se,
            n,
        })
    }

    /// Normal aCD `Φ((θ - θ̂) / se)`.
    pub fn to_cd(&self) -> Result<ConfDist> {
        cd_from_point_se(self.theta_hat, self.se)
    }
}

/// Two-by-two table: treatment successes/failures `a, b`, control
/// successes/failures `c, d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contingency2x2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Contingency2x2 {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        ensure!(
            [a, b, c, d].iter().all(|v| *v >= 0.0 && v.is_finite()),
            Data,
            "cell counts must be nonnegative"
        );
        Ok(Contingency2x2 { a, b, c, d })
    }

    /// Treatment and control rows exchanged.
    pub fn swapped(&self) -> Self {
        Contingency2x2 {
            a: self.c,
            b: self.d,
            c: self.a,
            d: self.b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroCellPolicy {
    /// Replace zero cells by 0.5.
    HalfCorrection,
    Reject,
}

/// Log odds ratio `ln((a/b)/(c/d))` and its standard error
/// `√(1/a + 1/b + 1/c + 1/d)`.
pub fn odds_ratio_summary(
    study_id: &str,
    table: &Contingency2x2,
    zero_cell: ZeroCellPolicy,
) -> Result<StudySummary> {
    let cells = [table.a, table.b, table.c, table.d];
    let cells: Vec<f64> = if cells.contains(&0.0) {
        match zero_cell {
            ZeroCellPolicy::Reject => {
                return Err(Error::Data(format!("study {study_id}: table has a zero cell")))
            }
            ZeroCellPolicy::HalfCorrection => cells
                .iter()
                .map(|v| if *v == 0.0 { 0.5 } else { *v })
                .collect(),
        }
    } else {
        cells.to_vec()
    };
    let theta = (cells[0] / cells[1] / (cells[2] / cells[3])).ln();
    let se = cells.iter().map(|v| 1.0 / v).sum::<f64>().sqrt();
    StudySummary::new(study_id, theta, se, Some(cells.iter().sum::<f64>().round() as u64))
}

/// Graybill–Deal estimate with each mean weighted by its own precision
/// `n_i / s_i²`, and its standard error.
pub fn graybill_deal(
    xbar1: f64,
    s1: f64,
    n1: u64,
    xbar2: f64,
    s2: f64,
    n2: u64,
) -> Result<(f64, f64)> {
    ensure!(s1 > 0.0 && s2 > 0.0, Parameter, "standard deviations must be positive");
    ensure!(n1 >= 2 && n2 >= 2, Parameter, "sample sizes must be at least 2");
    let w1 = n1 as f64 / (s1 * s1);
    let w2 = n2 as f64 / (s2 * s2);
    Ok(((w1 * xbar1 + w2 * xbar2) / (w1 + w2), (w1 + w2).powf(-0.5)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommonMeanConfig {
    pub n: (u64, u64),
    pub sigma: (f64, f64),
    pub mu: f64,
    pub reps: usize,
    pub level: f64,
    pub seed: u64,
}

impl CommonMeanConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.n.0 >= 2 && self.n.1 >= 2, Config, "sample sizes must be at least 2");
        ensure!(
            self.sigma.0 > 0.0 && self.sigma.1 > 0.0,
            Config,
            "standard deviations must be positive"
        );
        ensure!(self.reps >= 1, Config, "replication count must be positive");
        ensure!(
            self.level > 0.0 && self.level < 1.0,
            Config,
            "confidence level must lie in (0, 1)"
        );
        ensure!(self.mu.is_finite(), Config, "mean must be finite");
        Ok(())
    }
}

/// Coverage of one interval method with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coverage {
    pub rate: f64,
    pub mc_se: f64,
    pub mean_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub config: CommonMeanConfig,
    /// Combined exact t-based CDs (DE recipe).
    pub de: Coverage,
    /// Combined normal aCDs (AN recipe; `Φ` quantiles).
    pub an: Coverage,
    /// Graybill–Deal estimate with a `t_{n₁+n₂-2}` critical value.
    pub gd_t: Coverage,
    /// Mean of per-replication `ℓ_DE / ℓ_AN`.
    pub length_ratio: f64,
    pub length_ratio_se: f64,
    pub median_gd: f64,
}

struct RepOutcome {
    de: (bool, f64),
    an: (bool, f64),
    gd_t: (bool, f64),
    gd: f64,
}

fn sample_mean_sd(rng: &mut ChaCha8Rng, mu: f64, sd: f64, n: u64) -> (f64, f64) {
    let d = Normal::new(mu, sd).expect("valid normal");
    let x: Vec<f64> = (0..n).map(|_| d.sample(rng)).collect();
    let m = x.iter().sum::<f64>() / n as f64;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (m, v.sqrt())
}

/// Coverage and length of DE, AN and Graybill–Deal intervals for a common
/// normal mean over seeded replications.
pub fn simulate_common_mean(cfg: &CommonMeanConfig) -> Result<SimReport> {
    cfg.validate()?;
    let alpha = 1.0 - cfg.level;
    let (n1, n2) = cfg.n;
    let t_crit = DistFamily::StudentT {
        df: (n1 + n2 - 2) as u32,
    }
    .quantile(1.0 - alpha / 2.0)?;
    let outcomes = (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(cfg.seed, r as u64);
            let (m1, s1) = sample_mean_sd(&mut rng, cfg.mu, cfg.sigma.0, n1);
            let (m2, s2) = sample_mean_sd(&mut rng, cfg.mu, cfg.sigma.1, n2);
            let de = combine_de(&[cd_normal_mean(m1, s1, n1)?, cd_normal_mean(m2, s2, n2)?])?;
            let de = confidence_interval(&de, alpha, IntervalKind::TwoSided)?;
            let an = combine_an(&[
                AnSummary::from_point_se(m1, s1 / (n1 as f64).sqrt()),
                AnSummary::from_point_se(m2, s2 / (n2 as f64).sqrt()),
            ])?;
            let an = confidence_interval(&an, alpha, IntervalKind::TwoSided)?;
            let (gd, se) = graybill_deal(m1, s1, n1, m2, s2, n2)?;
            Ok(RepOutcome {
                de: (de.contains(cfg.mu), de.length()),
                an: (an.contains(cfg.mu), an.length()),
                gd_t: ((gd - cfg.mu).abs() <= t_crit * se, 2.0 * t_crit * se),
                gd,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let reps = cfg.reps as f64;
    let coverage = |f: fn(&RepOutcome) -> (bool, f64)| {
        let rate = outcomes.iter().filter(|o| f(o).0).count() as f64 / reps;
        Coverage {
            rate,
            mc_se: (rate * (1.0 - rate) / reps).sqrt(),
            mean_length: outcomes.iter().map(|o| f(o).1).sum::<f64>() / reps,
        }
    };
    let ratios: Vec<f64> = outcomes.iter().map(|o| o.de.1 / o.an.1).collect();
    let length_ratio = ratios.iter().sum::<f64>() / reps;
    let length_ratio_se = if cfg.reps > 1 {
        (ratios.iter().map(|r| (r - length_ratio).powi(2)).sum::<f64>()
            / ((reps - 1.0) * reps))
            .sqrt()
    } else {
        0.0
    };
    let mut gds: Vec<f64> = outcomes.iter().map(|o| o.gd).collect();
    Ok(SimReport {
        config: *cfg,
        de: coverage(|o| o.de),
        an: coverage(|o| o.an),
        gd_t: coverage(|o| o.gd_t),
        length_ratio,
        length_ratio_se,
        median_gd: oja::median_in_place(&mut gds),
    })
}

/// A combined normal CD `Φ(slope · (θ - center))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalForm {
    pub label: String,
    pub slope: f64,
    pub center: f64,
    pub weights: Vec<f64>,
}

fn normal_form(label: &str, cd: &ConfDist, weights: &WeightVector) -> NormalForm {
    let meta = cd.meta();
    NormalForm {
        label: label.into(),
        slope: 1.0 / meta.scale.unwrap_or(f64::NAN),
        center: meta.point_estimate.unwrap_or(f64::NAN),
        weights: weights.omegas().to_vec(),
    }
}

/// Combined AN forms of a meta-analysis whose first study is the study of
/// interest: all weights one, normal-kernel weights and indicator weights
/// at `α_n = 0.25` and `0.30`.
pub fn meta_analysis_forms(studies: &[StudySummary]) -> Result<Vec<NormalForm>> {
    ensure!(!studies.is_empty(), Input, "no studies");
    let cds = studies.iter().map(|s| s.to_cd()).collect::<Result<Vec<_>>>()?;
    let summaries: Vec<AnSummary> = studies
        .iter()
        .map(|s| AnSummary::from_point_se(s.theta_hat, s.se))
        .collect();
    let mut out = Vec::new();
    let ones = WeightVector::ones(studies.len());
    out.push(normal_form("equal", &combine_an(&summaries)?, &ones));
    let kernel = weights_kernel(&cds, KernelKind::Normal, None)?;
    out.push(normal_form(
        "normal_kernel",
        &combine_an_weighted(&summaries, &kernel)?,
        &kernel,
    ));
    for (label, a) in [("indicator_0.25", 0.25), ("indicator_0.30", 0.30)] {
        let w = weights_indicator(&cds, a)?;
        out.push(normal_form(label, &combine_an_weighted(&summaries, &w)?, &w));
    }
    Ok(out)
}

/// `n` points `(z₁ + z₂, z₁ - z₂)` with `z₁ ~ Cauchy(0, 1)` and
/// `z₂ ~ Cauchy(1, 1.3)`.
pub fn cauchy_mixture_cloud(n: usize, seed: u64) -> PointCloud2D {
    let mut rng = stream_rng(seed, 0);
    let c1 = Cauchy::new(0.0, 1.0).expect("valid cauchy");
    let c2 = Cauchy::new(1.0, 1.3).expect("valid cauchy");
    let points = (0..n)
        .map(|_| {
            let z1: f64 = c1.sample(&mut rng);
            let z2: f64 = c2.sample(&mut rng);
            (z1 + z2, z1 - z2)
        })
        .collect();
    PointCloud2D { points }
}

#[derive(Debug, Clone)]
pub struct SplitCombineResult {
    pub combined: ConfDist,
    pub subset_cds: Vec<ConfDist>,
    pub subset_sizes: Vec<usize>,
    /// Full-sample statistic of each subset.
    pub subset_estimates: Vec<f64>,
    /// Triangle areas evaluated across all bootstrap resamples.
    pub area_evaluations: u64,
}

/// Bootstrap statistics of `oja_scale` over `b` resamples of `points`;
/// resample `i` draws from stream `i` of `seed`.
pub fn bootstrap_oja(points: &[(f64, f64)], b: usize, seed: u64) -> Result<Vec<f64>> {
    (0..b)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let n = points.len();
            let resample: Vec<(f64, f64)> =
                (0..n).map(|_| points[rng.random_range(0..n)]).collect();
            oja_scale(&resample)
        })
        .collect()
}

/// Split `cloud` into `k` random near-equal parts, bootstrap Oja's scale
/// in each and combine the bootstrap aCDs.
///
/// The permutation uses stream 0 of `seed`; subset `i` bootstraps with
/// `derive_seed(seed, i + 1)`, except that `k = 1` bootstraps the
/// unpermuted cloud with `derive_seed(seed, 1)`.
pub fn split_combine_bootstrap(
    cloud: &PointCloud2D,
    k: usize,
    b: usize,
    spec: &CombinerSpec,
    mode: BootstrapMode,
    seed: u64,
) -> Result<SplitCombineResult> {
    ensure!(k >= 1, Partition, "need at least one subset");
    ensure!(b >= 100, Input, "need at least 100 bootstrap resamples, got {b}");
    let n = cloud.len();
    ensure!(
        3 * k <= n,
        Partition,
        "{n} points cannot be split into {k} subsets of at least 3"
    );
    let subsets: Vec<Vec<(f64, f64)>> = if k == 1 {
        vec![cloud.points.clone()]
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut stream_rng(seed, 0));
        (0..k)
            .map(|i| {
                let lo = i * n / k;
                let hi = (i + 1) * n / k;
                idx[lo..hi].iter().map(|&j| cloud.points[j]).collect()
            })
            .collect()
    };
    let mut subset_cds = Vec::with_capacity(k);
    let mut subset_estimates = Vec::with_capacity(k);
    let mut area_evaluations = 0;
    for (i, pts) in subsets.iter().enumerate() {
        let stats = bootstrap_oja(pts, b, derive_seed(seed, i as u64 + 1))?;
        let est = oja_scale(pts)?;
        area_evaluations += b as u64 * triangle_count(pts.len() as u64);
        subset_cds.push(cd_from_bootstrap(&stats, est, mode)?);
        subset_estimates.push(est);
    }
    let combined = combine(&subset_cds, spec)?;
    Ok(SplitCombineResult {
        combined,
        subset_cds,
        subset_sizes: subsets.iter().map(|s| s.len()).collect(),
        subset_estimates,
        area_evaluations,
    })
}

/// Default split-and-combine recipe.
pub fn default_split_spec() -> CombinerSpec {
    CombinerSpec::new(Method::De)
}

/// KS statistic and p-value of `H(θ₀)` over `reps` seeded replications.
pub fn uniformity_diagnostic<F>(factory: F, theta0: f64, reps: usize, seed: u64) -> Result<(f64, f64)>
where
    F: Fn(&mut ChaCha8Rng) -> Result<ConfDist> + Sync,
{
    let r = uniformity_report(factory, theta0, reps, seed)?;
    Ok((r.statistic, r.p_value))
}
