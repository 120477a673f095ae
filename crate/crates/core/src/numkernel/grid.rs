//! Piecewise-linear CDFs on a grid, and the distribution of weighted sums
//! `Σ ω_j Y_j` of i.i.d. draws from a reference family.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{ensure, Result};

use super::special::{gamma_int_tails, norm_tails};
use super::tails::Tails;
use super::DistFamily;

/// Largest value allowed at the left end of a grid CDF (and smallest
/// complement at the right end).
pub const GRID_TAIL_TOL: f64 = 1e-6;

/// Per-term quantile levels that bound the convolution grid.
const GRID_SPAN_TAIL: f64 = 1e-10;

/// A monotone CDF given by values at strictly increasing abscissae and
/// linear interpolation between them.
///
/// Both `F` and `1 - F` are stored so that either tail can be read without
/// cancellation. Outside the grid the end values are held.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCdf {
    x: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl GridCdf {
    /// Build from abscissae and CDF values.
    pub fn new(x: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let upper = values.iter().map(|v| 1.0 - v).collect();
        Self::from_parts(x, values, upper)
    }

    /// Build from abscissae, CDF values and separately accumulated
    /// complements.
    pub fn from_parts(x: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        ensure!(x.len() >= 2, Shape, "grid needs at least two points");
        ensure!(
            x.len() == lower.len() && x.len() == upper.len(),
            Shape,
            "grid and value lengths differ"
        );
        ensure!(x.iter().all(|v| v.is_finite()), Shape, "grid abscissae must be finite");
        ensure!(
            x.windows(2).all(|w| w[0] < w[1]),
            Shape,
            "grid abscissae must be strictly increasing"
        );
        ensure!(
            lower.iter().chain(&upper).all(|v| (0.0..=1.0).contains(v)),
            Shape,
            "grid values must lie in [0, 1]"
        );
        ensure!(
            lower.windows(2).all(|w| w[0] <= w[1]) && upper.windows(2).all(|w| w[0] >= w[1]),
            Shape,
            "grid values must be nondecreasing"
        );
        ensure!(
            lower[0] <= GRID_TAIL_TOL && *upper.last().unwrap() <= GRID_TAIL_TOL,
            Shape,
            "grid values must reach within {GRID_TAIL_TOL} of 0 and 1 (got {} and {})",
            lower[0],
            1.0 - upper.last().unwrap()
        );
        Ok(GridCdf { x, lower, upper })
    }

    pub fn grid(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.lower
    }

    pub fn lo(&self) -> f64 {
        self.x[0]
    }

    pub fn hi(&self) -> f64 {
        *self.x.last().unwrap()
    }

    /// Segment index `i` with `x[i] <= t < x[i+1]`, or `None` outside.
    fn segment(&self, t: f64) -> Option<usize> {
        if !(t >= self.x[0] && t < self.hi()) {
            return None;
        }
        Some(self.x.partition_point(|v| *v <= t) - 1)
    }

    pub fn tails(&self, t: f64) -> Tails {
        let (lo, up) = match self.segment(t) {
            None if t.is_nan() => (f64::NAN, f64::NAN),
            None if t < self.x[0] => (self.lower[0], self.upper[0]),
            None => (*self.lower.last().unwrap(), *self.upper.last().unwrap()),
            Some(i) => {
                let w = (t - self.x[i]) / (self.x[i + 1] - self.x[i]);
                (
                    self.lower[i] + w * (self.lower[i + 1] - self.lower[i]),
                    self.upper[i] + w * (self.upper[i + 1] - self.upper[i]),
                )
            }
        };
        Tails {
            ln_lower: lo.ln(),
            ln_upper: up.ln(),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        self.tails(t).cdf()
    }

    /// Slope of the interpolant at `t` (right derivative; 0 outside).
    pub fn density(&self, t: f64) -> f64 {
        match self.segment(t) {
            None => 0.0,
            Some(i) => (self.lower[i + 1] - self.lower[i]) / (self.x[i + 1] - self.x[i]),
        }
    }

    /// Smallest `t` on the interpolant with `F(t) >= p`, held at the grid
    /// ends.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.x.len();
        if p <= 0.5 {
            if p <= self.lower[0] {
                return self.x[0];
            }
            let j = self.lower.partition_point(|v| *v < p);
            if j >= n {
                return self.hi();
            }
            let (a, b) = (self.lower[j - 1], self.lower[j]);
            self.x[j - 1] + (p - a) / (b - a) * (self.x[j] - self.x[j - 1])
        } else {
            let q = 1.0 - p;
            if q <= self.upper[n - 1] {
                return self.hi();
            }
            // upper is nonincreasing: first index with upper <= q
            let j = self.upper.partition_point(|v| *v > q);
            if j == 0 {
                return self.x[0];
            }
            let (a, b) = (self.upper[j - 1], self.upper[j]);
            if a == b {
                return self.x[j];
            }
            self.x[j - 1] + (a - q) / (a - b) * (self.x[j] - self.x[j - 1])
        }
    }

    /// Mean of the piecewise-linear law; each segment carries uniform mass.
    pub fn mean(&self) -> f64 {
        let mut m = 0.0;
        for i in 0..self.x.len() - 1 {
            let mass = self.lower[i + 1] - self.lower[i];
            m += mass * 0.5 * (self.x[i] + self.x[i + 1]);
        }
        m + self.lower[0] * self.x[0] + self.upper.last().unwrap() * self.hi()
    }
}

/// Resolution knobs for grid convolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolutionConfig {
    pub grid_points: usize,
}

impl Default for ConvolutionConfig {
    fn default() -> Self {
        ConvolutionConfig {
            grid_points: 1 << 14,
        }
    }
}

/// The law of `Σ ω_j Y_j`.
#[derive(Debug, Clone)]
pub enum WeightedSumCdf {
    /// Centered normal with the given standard deviation.
    Normal { sd: f64 },
    /// A single family member (including exact sums such as `DE_L`).
    Family(DistFamily),
    /// Gamma with integer shape; `mirrored` gives the law of its negative.
    Gamma { shape: u32, mirrored: bool },
    Grid(GridCdf),
}

impl WeightedSumCdf {
    pub fn tails(&self, s: f64) -> Tails {
        match self {
            WeightedSumCdf::Normal { sd } => norm_tails(s / sd),
            WeightedSumCdf::Family(f) => f.tails(s),
            WeightedSumCdf::Gamma { shape, mirrored } => {
                let x = if *mirrored { -s } else { s };
                let t = if x <= 0.0 {
                    Tails::from_prob(0.0)
                } else {
                    gamma_int_tails(*shape, x.ln())
                };
                if *mirrored {
                    t.mirrored()
                } else {
                    t
                }
            }
            WeightedSumCdf::Grid(g) => g.tails(s),
        }
    }

    pub fn cdf(&self, s: f64) -> f64 {
        self.tails(s).cdf()
    }
}

fn validate_weights(weights: &[f64]) -> Result<()> {
    ensure!(!weights.is_empty(), Weight, "weight vector is empty");
    ensure!(
        weights.iter().all(|w| w.is_finite() && (0.0..=1.0).contains(w)),
        Weight,
        "weights must lie in [0, 1]"
    );
    ensure!(weights[0] == 1.0, Weight, "the first weight must be 1");
    Ok(())
}

/// The CDF of `Σ ω_j Y_j` with `Y_j` i.i.d. from `family`.
///
/// Normal sums are closed form. Zero weights drop their term. When every
/// remaining weight is 1 the exact law is returned for the normal, double
/// exponential, exponential and chi-square families; otherwise the sum is
/// convolved on a grid.
pub fn weighted_convolution_cdf(
    family: DistFamily,
    weights: &[f64],
    cfg: &ConvolutionConfig,
) -> Result<WeightedSumCdf> {
    family.validate()?;
    validate_weights(weights)?;
    let active: Vec<f64> = weights.iter().copied().filter(|w| *w > 0.0).collect();
    let m = active.len() as u32;
    if family == DistFamily::StdNormal {
        let sd = active.iter().map(|w| w * w).sum::<f64>().sqrt();
        return Ok(WeightedSumCdf::Normal { sd });
    }
    if m == 1 {
        return Ok(WeightedSumCdf::Family(family));
    }
    if active.iter().all(|w| *w == 1.0) {
        let exact = match family {
            DistFamily::DoubleExp => Some(WeightedSumCdf::Family(DistFamily::DeConvolved { l: m })),
            DistFamily::DeConvolved { l } => {
                Some(WeightedSumCdf::Family(DistFamily::DeConvolved { l: l * m }))
            }
            DistFamily::ChiSquared { df } => {
                Some(WeightedSumCdf::Family(DistFamily::ChiSquared { df: df * m }))
            }
            DistFamily::ExpStandard => Some(WeightedSumCdf::Gamma {
                shape: m,
                mirrored: false,
            }),
            DistFamily::ExpMirror => Some(WeightedSumCdf::Gamma {
                shape: m,
                mirrored: true,
            }),
            _ => None,
        };
        if let Some(e) = exact {
            return Ok(e);
        }
    }
    Ok(WeightedSumCdf::Grid(grid_convolution_cdf(family, weights, cfg)?))
}

/// Grid convolution of `Σ ω_j Y_j` regardless of closed forms.
///
/// Each term is discretized to cell masses on a common lattice of spacing
/// `h`; the lattice laws are multiplied in the Fourier domain and the
/// resulting masses are accumulated from both ends.
pub fn grid_convolution_cdf(
    family: DistFamily,
    weights: &[f64],
    cfg: &ConvolutionConfig,
) -> Result<GridCdf> {
    family.validate()?;
    validate_weights(weights)?;
    ensure!(cfg.grid_points >= 16, Config, "grid resolution must be at least 16 points");
    let active: Vec<f64> = weights.iter().copied().filter(|w| *w > 0.0).collect();
    let q_lo = family.quantile(GRID_SPAN_TAIL)?;
    let q_hi = family.quantile(1.0 - GRID_SPAN_TAIL)?;
    let span: f64 = active.iter().map(|w| w * (q_hi - q_lo)).sum();
    let cells = cfg.grid_points.saturating_sub(3 * active.len()).max(8);
    let h = span / cells as f64;

    let mut k_offset: i64 = 0;
    let mut terms: Vec<Vec<f64>> = Vec::with_capacity(active.len());
    for &w in &active {
        let k_lo = (w * q_lo / h).floor() as i64;
        let k_hi = (w * q_hi / h).ceil() as i64;
        let cdf_at = |k: i64| family.tails((k as f64 + 0.5) * h / w).cdf();
        let mut masses = Vec::with_capacity((k_hi - k_lo + 1) as usize);
        let mut prev = 0.0;
        for k in k_lo..=k_hi {
            let next = if k == k_hi { 1.0 } else { cdf_at(k) };
            masses.push((next - prev).max(0.0));
            prev = next;
        }
        k_offset += k_lo;
        terms.push(masses);
    }

    let total_len: usize = terms.iter().map(|t| t.len()).sum::<usize>() + 1 - terms.len();
    let size = total_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(size);
    let ifft = planner.plan_fft_inverse(size);
    let mut acc = vec![Complex::new(1.0, 0.0); size];
    for t in &terms {
        let mut buf: Vec<Complex<f64>> = t.iter().map(|m| Complex::new(*m, 0.0)).collect();
        buf.resize(size, Complex::new(0.0, 0.0));
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a *= b;
        }
    }
    ifft.process(&mut acc);
    let mut mass: Vec<f64> = acc[..total_len]
        .iter()
        .map(|c| (c.re / size as f64).max(0.0))
        .collect();
    let total: f64 = mass.iter().sum();
    for m in &mut mass {
        *m /= total;
    }

    // Atom i sits at (k_offset + i) h; the interpolated CDF passes through
    // the cumulative masses at the cell midpoints.
    let n = total_len + 1;
    let x: Vec<f64> = (0..n)
        .map(|i| (k_offset as f64 + i as f64 - 0.5) * h)
        .collect();
    let mut lower = vec![0.0; n];
    for i in 1..n {
        lower[i] = (lower[i - 1] + mass[i - 1]).min(1.0);
    }
    let mut upper = vec![0.0; n];
    for i in (0..n - 1).rev() {
        upper[i] = (upper[i + 1] + mass[i]).min(1.0);
    }
    lower[n - 1] = 1.0;
    upper[0] = 1.0;
    GridCdf::from_parts(x, lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::special::norm_cdf;
    use crate::numkernel::DeL;

    fn sup_diff(a: impl Fn(f64) -> f64, b: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
        (0..=2000)
            .map(|i| lo + (hi - lo) * i as f64 / 2000.0)
            .map(|t| (a(t) - b(t)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn grid_validation() {
        assert!(GridCdf::new(vec![0.0, 1.0], vec![0.0, 1.0]).is_ok());
        assert!(GridCdf::new(vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(GridCdf::new(vec![0.0, 1.0, 2.0], vec![0.0, 0.6, 0.5]).is_err());
        assert!(GridCdf::new(vec![0.0, 1.0], vec![0.1, 1.0]).is_err());
    }

    #[test]
    fn grid_interpolation_and_quantile() {
        let g = GridCdf::new(vec![0.0, 1.0, 3.0], vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(g.cdf(-1.0), 0.0);
        assert!((g.cdf(0.5) - 0.25).abs() < 1e-15);
        assert!((g.cdf(2.0) - 0.75).abs() < 1e-15);
        assert_eq!(g.cdf(5.0), 1.0);
        assert!((g.quantile(0.25) - 0.5).abs() < 1e-15);
        assert!((g.quantile(0.75) - 2.0).abs() < 1e-12);
        assert!((g.density(2.0) - 0.25).abs() < 1e-15);
        assert!((g.mean() - (0.5 * 0.5 + 0.5 * 2.0)).abs() < 1e-15);
    }

    #[test]
    fn normal_closed_form() {
        let w = weighted_convolution_cdf(DistFamily::StdNormal, &[1.0, 1.0], &Default::default())
            .unwrap();
        let want = norm_cdf(1.0 / 2f64.sqrt());
        assert!((w.cdf(1.0) - want).abs() < 1e-15);
        assert!((want - 0.7602).abs() < 1e-4);
    }

    #[test]
    fn grid_matches_de_l() {
        let cfg = ConvolutionConfig::default();
        let g = grid_convolution_cdf(DistFamily::DoubleExp, &[1.0, 1.0], &cfg).unwrap();
        let d2 = DeL::new(2).unwrap();
        assert!(sup_diff(|t| g.cdf(t), |t| d2.cdf(t), -15.0, 15.0) <= 1e-4);
        let g3 = grid_convolution_cdf(DistFamily::DoubleExp, &[1.0, 1.0, 1.0], &cfg).unwrap();
        let d3 = DeL::new(3).unwrap();
        assert!(sup_diff(|t| g3.cdf(t), |t| d3.cdf(t), -15.0, 15.0) <= 1e-4);
    }

    #[test]
    fn grid_normal_matches_closed_form_with_fractional_weight() {
        let cfg = ConvolutionConfig::default();
        let g = grid_convolution_cdf(DistFamily::StdNormal, &[1.0, 0.4], &cfg).unwrap();
        let sd = (1.0f64 + 0.16).sqrt();
        assert!(sup_diff(|t| g.cdf(t), |t| norm_cdf(t / sd), -6.0, 6.0) <= 1e-5);
    }

    #[test]
    fn zero_weights_drop_terms() {
        let w = weighted_convolution_cdf(DistFamily::DoubleExp, &[1.0, 0.0, 0.0], &Default::default())
            .unwrap();
        for &t in &[-3.0, 0.0, 0.4, 2.0] {
            assert_eq!(w.cdf(t), DistFamily::DoubleExp.cdf(t).unwrap());
        }
    }

    #[test]
    fn invalid_weights_rejected() {
        let cfg = ConvolutionConfig::default();
        assert!(weighted_convolution_cdf(DistFamily::DoubleExp, &[1.0, 1.2], &cfg).is_err());
        assert!(weighted_convolution_cdf(DistFamily::DoubleExp, &[1.0, -0.1], &cfg).is_err());
        assert!(weighted_convolution_cdf(DistFamily::DoubleExp, &[0.5, 1.0], &cfg).is_err());
    }

    #[test]
    fn exponential_sums_are_gamma() {
        let cfg = ConvolutionConfig::default();
        let e = weighted_convolution_cdf(DistFamily::ExpStandard, &[1.0, 1.0], &cfg).unwrap();
        let g = grid_convolution_cdf(DistFamily::ExpStandard, &[1.0, 1.0], &cfg).unwrap();
        assert!(sup_diff(|t| e.cdf(t), |t| g.cdf(t), 0.0, 20.0) < 1e-3);
        let m = weighted_convolution_cdf(DistFamily::ExpMirror, &[1.0, 1.0], &cfg).unwrap();
        // P(-Gamma(2) <= -s) = (1 + s) e^{-s}
        assert!((m.cdf(-2.0) - 3.0 * (-2.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn de_l_recursion_matches_grid_convolution() {
        // DE_L against DE_{L-1} convolved with one more DE term
        let cfg = ConvolutionConfig::default();
        for l in 2..=6u32 {
            let dl = DeL::new(l).unwrap();
            let mixed = grid_mixed(l - 1, &cfg);
            assert!(sup_diff(|t| mixed.cdf(t), |t| dl.cdf(t), -20.0, 20.0) <= 1e-4, "L={l}");
        }
    }

    /// Lattice convolution of `DE_{l}` with one standard DE term.
    fn grid_mixed(l: u32, cfg: &ConvolutionConfig) -> GridCdf {
        let a = DeL::new(l).unwrap();
        let span_a = 2.0 * a.quantile(1.0 - GRID_SPAN_TAIL).unwrap();
        let span_b = 2.0 * DistFamily::DoubleExp.quantile(1.0 - GRID_SPAN_TAIL).unwrap();
        let h = (span_a + span_b) / cfg.grid_points as f64;
        let cells = |half: f64, f: &dyn Fn(f64) -> f64| -> (i64, Vec<f64>) {
            let k = (half / h).ceil() as i64;
            let mut prev = 0.0;
            let mut out = Vec::new();
            for i in -k..=k {
                let next = if i == k { 1.0 } else { f((i as f64 + 0.5) * h) };
                out.push(next - prev);
                prev = next;
            }
            (-k, out)
        };
        let (ka, ma) = cells(span_a / 2.0, &|t| a.cdf(t));
        let (kb, mb) = cells(span_b / 2.0, &|t| DistFamily::DoubleExp.tails(t).cdf());
        // direct O(N·M) convolution as an independent oracle to the FFT path
        let mut conv = vec![0.0; ma.len() + mb.len() - 1];
        for (i, x) in ma.iter().enumerate() {
            if *x == 0.0 {
                continue;
            }
            for (j, y) in mb.iter().enumerate() {
                conv[i + j] += x * y;
            }
        }
        let mut x = vec![(ka + kb) as f64 * h - 0.5 * h];
        let mut v = vec![0.0];
        for (i, m) in conv.iter().enumerate() {
            x.push((ka + kb + i as i64) as f64 * h + 0.5 * h);
            v.push((v.last().unwrap() + m).min(1.0));
        }
        *v.last_mut().unwrap() = 1.0;
        GridCdf::new(x, v).unwrap()
    }
}
