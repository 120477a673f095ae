//! Combination weights: fixed, indicator (interval overlap) and kernel.

use serde::{Deserialize, Serialize};

use crate::cd::ConfDist;
use crate::error::{ensure, Result};

/// Default `α_n` for indicator weights.
pub const DEFAULT_ALPHA_N: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Normal,
    Triangle,
    Rectangular,
}

impl KernelKind {
    /// Unit-variance kernel density `K(t)`.
    pub fn density(&self, t: f64) -> f64 {
        let a = t.abs();
        match self {
            KernelKind::Normal => (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            KernelKind::Triangle => {
                let h = 6f64.sqrt();
                if a < h {
                    (1.0 - a / h) / h
                } else {
                    0.0
                }
            }
            KernelKind::Rectangular => {
                let h = 3f64.sqrt();
                if a < h {
                    1.0 / (2.0 * h)
                } else {
                    0.0
                }
            }
        }
    }

    /// `K(t) / K(0)`.
    pub fn ratio(&self, t: f64) -> f64 {
        self.density(t) / self.density(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightProvenance {
    Fixed,
    Indicator { alpha_n: f64 },
    Kernel { kernel: KernelKind, bandwidth: f64 },
}

/// Weights `(1, ω₂, …, ω_L)` with `ω_j ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector {
    omegas: Vec<f64>,
    provenance: WeightProvenance,
}

impl WeightVector {
    pub fn new(omegas: Vec<f64>, provenance: WeightProvenance) -> Result<Self> {
        ensure!(!omegas.is_empty(), Weight, "weight vector is empty");
        ensure!(omegas[0] == 1.0, Weight, "the first weight must be 1, got {}", omegas[0]);
        ensure!(
            omegas.iter().all(|w| w.is_finite() && (0.0..=1.0).contains(w)),
            Weight,
            "weights must lie in [0, 1]"
        );
        Ok(WeightVector { omegas, provenance })
    }

    pub fn fixed(omegas: Vec<f64>) -> Result<Self> {
        Self::new(omegas, WeightProvenance::Fixed)
    }

    pub fn ones(l: usize) -> Self {
        WeightVector {
            omegas: vec![1.0; l.max(1)],
            provenance: WeightProvenance::Fixed,
        }
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn provenance(&self) -> WeightProvenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// True when every weight is 0 or 1.
    pub fn is_binary(&self) -> bool {
        self.omegas.iter().all(|w| *w == 0.0 || *w == 1.0)
    }
}

/// `ω_j = 1(I₁ ∩ I_j ≠ ∅)` with closed intervals
/// `I_i = [H_i^{-1}(α_n/2), H_i^{-1}(1 - α_n/2)]`; touching counts.
pub fn weights_indicator(cds: &[ConfDist], alpha_n: f64) -> Result<WeightVector> {
    ensure!(!cds.is_empty(), Input, "no confidence distributions to weight");
    ensure!(alpha_n > 0.0 && alpha_n < 1.0, Domain, "alpha_n {alpha_n} outside (0, 1)");
    let intervals = cds
        .iter()
        .map(|cd| Ok((cd.quantile(alpha_n / 2.0)?, cd.quantile(1.0 - alpha_n / 2.0)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(weights_from_intervals(&intervals, alpha_n))
}

/// Indicator weights from precomputed intervals.
pub fn weights_from_intervals(intervals: &[(f64, f64)], alpha_n: f64) -> WeightVector {
    let (a1, b1) = intervals[0];
    let mut omegas: Vec<f64> = intervals
        .iter()
        .map(|&(a, b)| if a1.max(a) <= b1.min(b) { 1.0 } else { 0.0 })
        .collect();
    omegas[0] = 1.0;
    WeightVector {
        omegas,
        provenance: WeightProvenance::Indicator { alpha_n },
    }
}

/// `ω_j = K((θ̂₁ - θ̂_j) / b) / K(0)` with `θ̂_i` the medians and, by
/// default, `b = √(IQR of H₁)`.
pub fn weights_kernel(
    cds: &[ConfDist],
    kernel: KernelKind,
    bandwidth: Option<f64>,
) -> Result<WeightVector> {
    ensure!(!cds.is_empty(), Input, "no confidence distributions to weight");
    let b = match bandwidth {
        Some(b) => b,
        None => (cds[0].quantile(0.75)? - cds[0].quantile(0.25)?).sqrt(),
    };
    ensure!(b.is_finite() && b > 0.0, Bandwidth, "bandwidth must be positive, got {b}");
    let medians = cds.iter().map(|cd| cd.median()).collect::<Result<Vec<_>>>()?;
    let mut omegas: Vec<f64> = medians
        .iter()
        .map(|m| kernel.ratio((medians[0] - m) / b))
        .collect();
    omegas[0] = 1.0;
    Ok(WeightVector {
        omegas,
        provenance: WeightProvenance::Kernel {
            kernel,
            bandwidth: b,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cd::cd_from_point_se;
    use crate::numkernel::special::norm_quantile;

    /// Normal CD whose central `1 - α` interval is exactly `[a, b]`.
    fn cd_with_interval(a: f64, b: f64, alpha: f64) -> ConfDist {
        let z = norm_quantile(1.0 - alpha / 2.0);
        cd_from_point_se(0.5 * (a + b), 0.5 * (b - a) / z).unwrap()
    }

    #[test]
    fn indicator_overlap_rules() {
        let a = 0.25;
        let i1 = cd_with_interval(0.0, 1.0, a);
        let overlap = cd_with_interval(0.5, 1.5, a);
        let disjoint = cd_with_interval(2.0, 3.0, a);
        let w = weights_indicator(&[i1.clone(), overlap, disjoint], a).unwrap();
        assert_eq!(w.omegas(), &[1.0, 1.0, 0.0]);
        assert_eq!(w.provenance(), WeightProvenance::Indicator { alpha_n: a });
        // touching intervals count as overlapping
        let w = weights_from_intervals(&[(0.0, 1.0), (1.0, 2.0)], a);
        assert_eq!(w.omegas(), &[1.0, 1.0]);
        assert!(weights_indicator(&[i1], 1.0).is_err());
    }

    #[test]
    fn kernel_weights() {
        let c1 = cd_from_point_se(0.0, 1.0).unwrap();
        let same = cd_from_point_se(0.0, 3.0).unwrap();
        let one_b = cd_from_point_se(2.0, 1.0).unwrap();
        let w = weights_kernel(&[c1.clone(), same, one_b.clone()], KernelKind::Normal, Some(2.0))
            .unwrap();
        assert_eq!(w.omegas()[1], 1.0);
        assert!((w.omegas()[2] - (-0.5f64).exp()).abs() < 1e-15);
        let far = cd_from_point_se(4.0, 1.0).unwrap();
        let w = weights_kernel(&[c1.clone(), far], KernelKind::Rectangular, Some(2.0)).unwrap();
        assert_eq!(w.omegas()[1], 0.0);
        assert!(weights_kernel(&[c1.clone()], KernelKind::Triangle, Some(0.0)).is_err());
        // default bandwidth: sqrt of the IQR of H1
        let w = weights_kernel(&[c1.clone(), one_b], KernelKind::Normal, None).unwrap();
        let iqr = 2.0 * norm_quantile(0.75);
        assert!(matches!(
            w.provenance(),
            WeightProvenance::Kernel { bandwidth, .. } if (bandwidth - iqr.sqrt()).abs() < 1e-12
        ));
    }

    #[test]
    fn kernels_have_unit_mass_and_variance() {
        for k in [KernelKind::Normal, KernelKind::Triangle, KernelKind::Rectangular] {
            let h = 1e-4;
            let (mut m0, mut m2) = (0.0, 0.0);
            for i in -100_000..100_000 {
                let t = (i as f64 + 0.5) * h;
                m0 += k.density(t) * h;
                m2 += t * t * k.density(t) * h;
            }
            assert!((m0 - 1.0).abs() < 1e-3, "{k:?}");
            assert!((m2 - 1.0).abs() < 1e-3, "{k:?}");
        }
    }

    #[test]
    fn weight_vector_validation() {
        assert!(WeightVector::fixed(vec![0.5, 1.0]).is_err());
        assert!(WeightVector::fixed(vec![1.0, 1.5]).is_err());
        assert!(WeightVector::fixed(vec![]).is_err());
        assert!(WeightVector::fixed(vec![1.0, 0.0, 1.0]).unwrap().is_binary());
    }
}
