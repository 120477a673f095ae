//! Command-line surface: CSV ingestion, recipe selection and report files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::cd::{cd_normal_known_sd, confidence_interval, BootstrapMode, ConfDist, IntervalKind};
use crate::combiner::{
    combine, weights_indicator, weights_kernel, CombinerSpec, KernelKind, Method, WeightVector,
    DEFAULT_ALPHA_N,
};
use crate::error::{ensure, Error, Result};
use crate::numkernel::ConvolutionConfig;
use crate::slope::{slope_bound_report, slope_estimate, ComponentSlope};
use crate::studies::{
    odds_ratio_summary, simulate_common_mean, split_combine_bootstrap, CommonMeanConfig,
    Contingency2x2, PointCloud2D, StudySummary, ZeroCellPolicy,
};

/// Environment variable overriding the convolution grid resolution.
pub const GRID_POINTS_ENV: &str = "CDF_GRID_POINTS";

#[derive(Debug, Parser)]
#[command(name = "confdist", version, about = "Combine and evaluate confidence distributions")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Combine per-study CDs read from a studies or 2x2-table CSV.
    Combine(CombineArgs),
    /// Common-mean coverage simulation.
    Simulate(SimulateArgs),
    /// Convert 2x2 tables to log odds ratio summaries.
    Odds(OddsArgs),
    /// Split-and-combine bootstrap of Oja's scale.
    Oja(OjaArgs),
    /// Empirical slopes of a combined normal-mean CD.
    Slope(SlopeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Nm,
    E1,
    E2,
    De,
    An,
    Prod,
    ProdScale,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Nm => Method::Nm,
            MethodArg::E1 => Method::E1,
            MethodArg::E2 => Method::E2,
            MethodArg::De => Method::De,
            MethodArg::An => Method::An,
            MethodArg::Prod => Method::Prod,
            MethodArg::ProdScale => Method::ProdScale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AdaptiveArg {
    None,
    Indicator,
    Kernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Normal,
    Triangle,
    Rectangular,
}

impl From<KernelArg> for KernelKind {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Normal => KernelKind::Normal,
            KernelArg::Triangle => KernelKind::Triangle,
            KernelArg::Rectangular => KernelKind::Rectangular,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ZeroCellArg {
    Half,
    Reject,
}

impl From<ZeroCellArg> for ZeroCellPolicy {
    fn from(z: ZeroCellArg) -> Self {
        match z {
            ZeroCellArg::Half => ZeroCellPolicy::HalfCorrection,
            ZeroCellArg::Reject => ZeroCellPolicy::Reject,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BootstrapArg {
    Raw,
    Reflected,
}

/// Evaluation grid for density output; bounds default to extreme
/// quantiles of the CD.
#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub grid_lo: Option<f64>,
    #[arg(long)]
    pub grid_hi: Option<f64>,
    #[arg(long, default_value_t = 801)]
    pub grid_n: usize,
}

#[derive(Debug, Clone, Args)]
pub struct CombineArgs {
    /// CSV with header `study_id,theta_hat,se[,n]`.
    #[arg(long, conflicts_with = "tables", required_unless_present = "tables")]
    pub studies: Option<PathBuf>,
    /// CSV with header `study_id,a,b,c,d`.
    #[arg(long)]
    pub tables: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ZeroCellArg::Half)]
    pub zero_cell: ZeroCellArg,
    #[arg(long, value_enum, default_value_t = MethodArg::De)]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value_t = AdaptiveArg::None)]
    pub adaptive: AdaptiveArg,
    #[arg(long, default_value_t = DEFAULT_ALPHA_N)]
    pub alpha_n: f64,
    #[arg(long, value_enum, default_value_t = KernelArg::Normal)]
    pub kernel: KernelArg,
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Directory for `quantiles.tsv`, `weights.tsv` and `density.tsv`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n1: u64,
    #[arg(long)]
    pub n2: u64,
    #[arg(long)]
    pub sigma1: f64,
    #[arg(long)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long)]
    pub seed: u64,
    /// Write the JSON report here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OddsArgs {
    #[arg(long)]
    pub tables: PathBuf,
    #[arg(long, value_enum, default_value_t = ZeroCellArg::Half)]
    pub zero_cell: ZeroCellArg,
    /// Write the studies CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OjaArgs {
    /// CSV with header `x,y`.
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 5000)]
    pub b: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::De)]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value_t = BootstrapArg::Raw)]
    pub bootstrap: BootstrapArg,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SlopeArgs {
    /// Per-observation standard deviations of the studies, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub sigmas: Vec<f64>,
    #[arg(long, value_enum, default_value_t = MethodArg::De)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    /// Total sample sizes, split evenly across studies.
    #[arg(long, value_delimiter = ',', default_value = "250,500,1000,2000")]
    pub n_schedule: Vec<u64>,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.1)]
    pub rel_tol: f64,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
struct StudyRow {
    study_id: String,
    theta_hat: f64,
    se: f64,
    #[serde(default)]
    n: Option<u64>,
}

#[derive(Debug, Deserialize)]
struct TableRow {
    study_id: String,
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

#[derive(Debug, Deserialize)]
struct PointRow {
    x: f64,
    y: f64,
}

fn parse_error(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Rows of a headed CSV with the given required columns, each paired with
/// its line number.
fn read_rows<T: DeserializeOwned>(path: &Path, required: &[&str]) -> Result<Vec<(u64, T)>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    ensure_parse(!text.trim().is_empty(), path, 1, "file is empty")?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .clone();
    for col in required {
        ensure_parse(
            headers.iter().any(|h| h == *col),
            path,
            1,
            format!("missing column '{col}'"),
        )?;
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_error(path, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let row: T = rec
            .deserialize(Some(&headers))
            .map_err(|e| parse_error(path, line, e.to_string()))?;
        rows.push((line, row));
    }
    ensure_parse(!rows.is_empty(), path, 1, "no data rows")?;
    Ok(rows)
}

fn ensure_parse(cond: bool, path: &Path, line: u64, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(parse_error(path, line, msg))
    }
}

/// Read `study_id,theta_hat,se[,n]`.
pub fn parse_study_csv(path: &Path) -> Result<Vec<StudySummary>> {
    read_rows::<StudyRow>(path, &["study_id", "theta_hat", "se"])?
        .into_iter()
        .map(|(line, r)| {
            ensure_parse(
                r.se > 0.0 && r.se.is_finite(),
                path,
                line,
                format!("se must be positive, got {}", r.se),
            )?;
            ensure_parse(r.theta_hat.is_finite(), path, line, "theta_hat must be finite")?;
            StudySummary::new(r.study_id, r.theta_hat, r.se, r.n)
        })
        .collect()
}

/// Read `study_id,a,b,c,d`.
pub fn parse_tables_csv(path: &Path) -> Result<Vec<(String, Contingency2x2)>> {
    read_rows::<TableRow>(path, &["study_id", "a", "b", "c", "d"])?
        .into_iter()
        .map(|(line, r)| {
            let t = Contingency2x2::new(r.a, r.b, r.c, r.d)
                .map_err(|e| parse_error(path, line, e.to_string()))?;
            Ok((r.study_id, t))
        })
        .collect()
}

/// Read `x,y`.
pub fn parse_points_csv(path: &Path) -> Result<PointCloud2D> {
    let rows = read_rows::<PointRow>(path, &["x", "y"])?;
    for (line, r) in &rows {
        ensure_parse(
            r.x.is_finite() && r.y.is_finite(),
            path,
            *line,
            "coordinates must be finite",
        )?;
    }
    PointCloud2D::new(rows.into_iter().map(|(_, r)| (r.x, r.y)).collect())
}

/// `x` with 12 significant digits, in fixed notation when the exponent is
/// moderate.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Evaluation grid `(lo, hi, n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        ensure!(lo.is_finite() && hi.is_finite() && lo < hi, Config, "grid needs lo < hi");
        ensure!(n >= 16, Config, "grid needs at least 16 points, got {n}");
        Ok(GridSpec { lo, hi, n })
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64)
            .collect()
    }

    fn resolve(args: &GridArgs, cd: &ConfDist) -> Result<Self> {
        let lo = match args.grid_lo {
            Some(v) => v,
            None => cd.quantile(1e-4)?,
        };
        let hi = match args.grid_hi {
            Some(v) => v,
            None => cd.quantile(1.0 - 1e-4)?,
        };
        GridSpec::new(lo, hi, args.grid_n)
    }
}

/// TSV `theta, cdf, density` with a central-difference density.
pub fn density_grid_tsv(cd: &ConfDist, grid: &GridSpec) -> String {
    let x = grid.points();
    let f: Vec<f64> = x.iter().map(|t| cd.cdf(*t)).collect();
    let n = x.len();
    let mut out = String::from("theta\tcdf\tdensity\n");
    for i in 0..n {
        let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
        let d = (f[b] - f[a]) / (x[b] - x[a]);
        writeln!(out, "{}\t{}\t{}", fmt_sig(x[i]), fmt_sig(f[i]), fmt_sig(d)).unwrap();
    }
    out
}

pub fn emit_density_grid(cd: &ConfDist, grid: &GridSpec, path: &Path) -> Result<()> {
    write_file(path, &density_grid_tsv(cd, grid))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn quantile_table(cd: &ConfDist, alpha: f64) -> Result<String> {
    let ci = confidence_interval(cd, alpha, IntervalKind::TwoSided)?;
    let mut out = String::from("prob\ttheta\n");
    for (p, q) in [(alpha / 2.0, ci.lo), (0.5, cd.median()?), (1.0 - alpha / 2.0, ci.hi)] {
        writeln!(out, "{}\t{}", fmt_sig(p), fmt_sig(q)).unwrap();
    }
    Ok(out)
}

/// Convolution settings, honoring [`GRID_POINTS_ENV`].
pub fn convolution_config() -> Result<ConvolutionConfig> {
    match std::env::var(GRID_POINTS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{GRID_POINTS_ENV}='{v}' is not an integer")))?;
            ensure!(n >= 16, Config, "{GRID_POINTS_ENV} must be at least 16");
            Ok(ConvolutionConfig { grid_points: n })
        }
        Err(_) => Ok(ConvolutionConfig::default()),
    }
}

/// Execute a parsed command; returns the text printed on stdout.
pub fn run(config: &RunConfig) -> Result<String> {
    match &config.command {
        Command::Combine(a) => run_combine(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Odds(a) => run_odds(a),
        Command::Oja(a) => run_oja(a),
        Command::Slope(a) => run_slope(a),
    }
}

fn load_studies(a: &CombineArgs) -> Result<Vec<StudySummary>> {
    match (&a.studies, &a.tables) {
        (Some(p), _) => parse_study_csv(p),
        (None, Some(p)) => parse_tables_csv(p)?
            .iter()
            .map(|(id, t)| odds_ratio_summary(id, t, a.zero_cell.into()))
            .collect(),
        (None, None) => Err(Error::Config("one of --studies or --tables is required".into())),
    }
}

fn run_combine(a: &CombineArgs) -> Result<String> {
    ensure!(a.alpha > 0.0 && a.alpha < 1.0, Config, "alpha must lie in (0, 1)");
    let studies = load_studies(a)?;
    let cds = studies.iter().map(|s| s.to_cd()).collect::<Result<Vec<_>>>()?;
    let weights: Option<WeightVector> = match a.adaptive {
        AdaptiveArg::None => None,
        AdaptiveArg::Indicator => Some(weights_indicator(&cds, a.alpha_n)?),
        AdaptiveArg::Kernel => Some(weights_kernel(&cds, a.kernel.into(), a.bandwidth)?),
    };
    let mut spec = CombinerSpec::new(a.method.into()).with_convolution(convolution_config()?);
    if let Some(w) = &weights {
        spec = spec.with_weights(w.clone());
    }
    let cd = combine(&cds, &spec)?;
    let quantiles = quantile_table(&cd, a.alpha)?;
    let mut out = quantiles.clone();
    let weights_tsv = weights.as_ref().map(|w| {
        let mut s = String::from("study_id\tweight\n");
        for (st, om) in studies.iter().zip(w.omegas()) {
            writeln!(s, "{}\t{}", st.study_id, fmt_sig(*om)).unwrap();
        }
        s
    });
    if let Some(w) = &weights_tsv {
        out.push('\n');
        out.push_str(w);
    }
    if let Some(dir) = &a.out_dir {
        create_dir(dir)?;
        write_file(&dir.join("quantiles.tsv"), &quantiles)?;
        if let Some(w) = &weights_tsv {
            write_file(&dir.join("weights.tsv"), w)?;
        }
        emit_density_grid(&cd, &GridSpec::resolve(&a.grid, &cd)?, &dir.join("density.tsv"))?;
    }
    Ok(out)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable report");
    s.push('\n');
    s
}

fn run_simulate(a: &SimulateArgs) -> Result<String> {
    let cfg = CommonMeanConfig {
        n: (a.n1, a.n2),
        sigma: (a.sigma1, a.sigma2),
        mu: a.mu,
        reps: a.reps,
        level: a.level,
        seed: a.seed,
    };
    let json = to_json(&simulate_common_mean(&cfg)?);
    if let Some(p) = &a.out {
        write_file(p, &json)?;
    }
    Ok(json)
}

fn run_odds(a: &OddsArgs) -> Result<String> {
    let mut out = String::from("study_id,theta_hat,se,n\n");
    for (id, t) in parse_tables_csv(&a.tables)? {
        let s = odds_ratio_summary(&id, &t, a.zero_cell.into())?;
        writeln!(
            out,
            "{},{},{},{}",
            s.study_id,
            fmt_sig(s.theta_hat),
            fmt_sig(s.se),
            s.n.map(|n| n.to_string()).unwrap_or_default()
        )
        .unwrap();
    }
    if let Some(p) = &a.out {
        write_file(p, &out)?;
    }
    Ok(out)
}

fn run_oja(a: &OjaArgs) -> Result<String> {
    ensure!(a.alpha > 0.0 && a.alpha < 1.0, Config, "alpha must lie in (0, 1)");
    let cloud = parse_points_csv(&a.points)?;
    let spec = CombinerSpec::new(a.method.into()).with_convolution(convolution_config()?);
    let mode = match a.bootstrap {
        BootstrapArg::Raw => BootstrapMode::Raw,
        BootstrapArg::Reflected => BootstrapMode::Reflected,
    };
    let r = split_combine_bootstrap(&cloud, a.k, a.b, &spec, mode, a.seed)?;
    let quantiles = quantile_table(&r.combined, a.alpha)?;
    let mut out = quantiles.clone();
    writeln!(out, "\nsubset_sizes\t{:?}", r.subset_sizes).unwrap();
    writeln!(out, "area_evaluations\t{}", r.area_evaluations).unwrap();
    if let Some(dir) = &a.out_dir {
        create_dir(dir)?;
        write_file(&dir.join("quantiles.tsv"), &quantiles)?;
        let grid = GridSpec::resolve(&a.grid, &r.combined)?;
        emit_density_grid(&r.combined, &grid, &dir.join("density.tsv"))?;
    }
    Ok(out)
}

fn run_slope(a: &SlopeArgs) -> Result<String> {
    let method: Method = a.method.into();
    ensure!(
        method.default_f0().is_some(),
        Config,
        "slopes are defined for nm, e1, e2 and de"
    );
    ensure!(!a.sigmas.is_empty(), Config, "need at least one study");
    ensure!(a.sigmas.iter().all(|s| *s > 0.0), Config, "sigmas must be positive");
    let l = a.sigmas.len() as u64;
    let sigmas = a.sigmas.clone();
    let factory = move |n: u64, rng: &mut ChaCha8Rng| -> Result<ConfDist> {
        let nj = (n / l).max(1);
        let z = Normal::new(0.0, 1.0).expect("standard normal");
        let cds = sigmas
            .iter()
            .map(|s| cd_normal_known_sd(s * z.sample(rng) / (nj as f64).sqrt(), *s, nj))
            .collect::<Result<Vec<_>>>()?;
        combine(&cds, &CombinerSpec::new(method))
    };
    let est = slope_estimate(factory, 0.0, a.epsilon, &a.n_schedule, a.reps, a.seed)?;
    let components: Vec<ComponentSlope> = a
        .sigmas
        .iter()
        .map(|s| {
            let v = a.epsilon * a.epsilon / (2.0 * s * s);
            ComponentSlope {
                epsilon: a.epsilon,
                left: v,
                right: v,
                lambda: 1.0,
            }
        })
        .collect();
    let report = slope_bound_report(&components, &est, a.rel_tol)?;
    Ok(to_json(&serde_json::json!({
        "method": method.name(),
        "estimate": est,
        "report": report,
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cd::cd_from_point_se;
    use std::io::Write;

    fn csv(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn study_csv_parsing() {
        let f = csv("study_id,theta_hat,se,n\nkernohan,0.600,0.629,45\nother,-0.2,0.4,\n");
        let s = parse_study_csv(f.path()).unwrap();
        assert_eq!(s[0].study_id, "kernohan");
        assert_eq!((s[0].theta_hat, s[0].se, s[0].n), (0.6, 0.629, Some(45)));
        assert_eq!(s[1].n, None);
        let f = csv("");
        assert!(matches!(parse_study_csv(f.path()), Err(Error::Parse { line: 1, .. })));
        let f = csv("study_id,theta_hat,se\na,0.1,0.2\nb,0.1,-1\n");
        assert!(matches!(parse_study_csv(f.path()), Err(Error::Parse { line: 3, .. })));
        let f = csv("study_id,theta_hat,se\na,zero,0.2\n");
        assert!(matches!(parse_study_csv(f.path()), Err(Error::Parse { line: 2, .. })));
        let f = csv("study_id,se\na,0.2\n");
        assert!(matches!(parse_study_csv(f.path()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn table_and_point_parsing() {
        let f = csv("study_id,a,b,c,d\nk,9,12,7,17\n");
        let t = parse_tables_csv(f.path()).unwrap();
        assert_eq!(t[0].1, Contingency2x2::new(9.0, 12.0, 7.0, 17.0).unwrap());
        let f = csv("x,y\n0,0\n1,0\n0,1\n");
        assert_eq!(parse_points_csv(f.path()).unwrap().len(), 3);
        let f = csv("x,y\n0,0\n1\n");
        assert!(matches!(parse_points_csv(f.path()), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.5), "0.5");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(-1234.5), "-1234.5");
        assert_eq!(fmt_sig(1e-7), "1e-7");
        assert_eq!(fmt_sig(2.0f64.sqrt() * 1e20), "1.41421356237e20");
        assert_eq!(fmt_sig(0.0), "0");
    }

    #[test]
    fn density_grid() {
        let cd = cd_from_point_se(0.0, 1.0).unwrap();
        let g = GridSpec::new(-4.0, 4.0, 801).unwrap();
        let tsv = density_grid_tsv(&cd, &g);
        let rows: Vec<Vec<f64>> = tsv
            .lines()
            .skip(1)
            .map(|l| l.split('\t').map(|v| v.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 801);
        assert!(tsv.starts_with("theta\tcdf\tdensity\n"));
        let h = 0.01;
        let mass: f64 = rows.windows(2).map(|w| 0.5 * h * (w[0][2] + w[1][2])).sum();
        assert!((mass - 1.0).abs() < 1e-3);
        assert!(rows.windows(2).all(|w| w[0][1] <= w[1][1]));
        assert!(GridSpec::new(-4.0, 4.0, 8).is_err());
        assert!(GridSpec::new(1.0, 1.0, 20).is_err());
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let cd = cd_from_point_se(0.0, 1.0).unwrap();
        let g = GridSpec::new(-1.0, 1.0, 16).unwrap();
        let r = emit_density_grid(&cd, &g, Path::new("/nonexistent/dir/grid.tsv"));
        assert!(matches!(r, Err(Error::Io { .. })));
    }

    #[test]
    fn clap_rejects_unknown_method() {
        assert!(RunConfig::try_parse_from(["confdist", "combine", "--studies", "x", "--method", "zz"])
            .is_err());
        assert!(RunConfig::try_parse_from(["confdist", "simulate", "--n1", "3", "--n2", "4",
            "--sigma1", "1", "--sigma2", "1"])
            .is_err(), "seed is mandatory");
    }
}
