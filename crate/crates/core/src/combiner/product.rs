//! Combination by multiplying CD densities and renormalizing.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cd::{CdEvaluator, ConfDist, Exactness, Meta, Pivot, Support};
use crate::error::{ensure, Error, Result};
use crate::numkernel::quad::integrate;
use crate::numkernel::Tails;

use super::common_support;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductVariant {
    /// `h*(y) = Π h_i(y)`.
    Location,
    /// `h**(y) / y` with `h**(y) = Π y h_i(y)`, on `y > 0`.
    Scale,
}

/// Half-width of the scanned range in the `u` coordinate.
const U_SPAN: f64 = 100.0;
const U_STEP: f64 = 0.05;
/// Log-density drop below the peak at which the integration range is cut
/// (about `ln 1e-300`).
const TRIM: f64 = 690.8;
const PANELS: usize = 200;

/// `H_P(θ) = ∫_{-∞}^θ h*(y) dy / ∫ h*(y) dy` (or the scale variant).
pub fn combine_product(cds: &[ConfDist], variant: ProductVariant) -> Result<ConfDist> {
    ensure!(!cds.is_empty(), Input, "no confidence distributions to combine");
    if cds.len() == 1 {
        return Ok(cds[0].clone());
    }
    let mut support = common_support(cds)?;
    if variant == ProductVariant::Scale {
        support = support
            .intersect(&Support::POSITIVE)
            .ok_or_else(|| Error::Support("scale product needs positive support".into()))?;
    }
    let (pivot, family) = match variant {
        ProductVariant::Location => (Pivot::Location, "product"),
        ProductVariant::Scale => (Pivot::Scale, "product(scale)"),
    };
    let exact = cds.iter().all(|cd| cd.is_exact() && cd.meta().pivot == pivot);
    let eval = ProductCombined::new(cds.to_vec(), variant, support)?;
    let mut meta = Meta::labelled(family);
    meta.pivot = if exact { pivot } else { Pivot::None };
    Ok(ConfDist::custom(
        Arc::new(eval),
        if exact {
            Exactness::Exact
        } else {
            Exactness::Asymptotic
        },
        support,
        meta,
    ))
}

/// The product density is integrated in `u` with `θ = c + s sinh(u)`, which
/// reaches polynomial tails within a modest range of `u`.
#[derive(Debug)]
struct ProductCombined {
    inputs: Vec<ConfDist>,
    variant: ProductVariant,
    c: f64,
    s: f64,
    /// Log of the peak of the `u`-integrand; everything is scaled by it.
    peak: f64,
    edges: Vec<f64>,
    masses: Vec<f64>,
    /// Mass strictly left of each panel.
    below: Vec<f64>,
    /// Mass strictly right of each panel.
    above: Vec<f64>,
    total: f64,
}

impl ProductCombined {
    fn new(inputs: Vec<ConfDist>, variant: ProductVariant, support: Support) -> Result<Self> {
        let c = inputs
            .iter()
            .map(|cd| cd.center_hint())
            .sum::<f64>()
            / inputs.len() as f64;
        let c = c.clamp(support.lo, support.hi);
        let s = inputs
            .iter()
            .map(|cd| cd.scale_hint())
            .fold(f64::INFINITY, f64::min);
        let mut p = ProductCombined {
            inputs,
            variant,
            c,
            s,
            peak: 0.0,
            edges: vec![],
            masses: vec![],
            below: vec![],
            above: vec![],
            total: 0.0,
        };
        let u_lo = if support.lo.is_finite() {
            ((support.lo - c) / s).asinh().max(-U_SPAN)
        } else {
            -U_SPAN
        };
        let u_hi = if support.hi.is_finite() {
            ((support.hi - c) / s).asinh().min(U_SPAN)
        } else {
            U_SPAN
        };
        let steps = ((u_hi - u_lo) / U_STEP).ceil().max(1.0) as usize;
        let scan: Vec<(f64, f64)> = (0..=steps)
            .map(|i| {
                let u = u_lo + (u_hi - u_lo) * i as f64 / steps as f64;
                (u, p.ln_integrand(u))
            })
            .collect();
        ensure!(
            scan.iter().all(|(_, g)| !g.is_nan()),
            Density,
            "an input density is undefined on the common support"
        );
        let peak = scan.iter().map(|(_, g)| *g).fold(f64::NEG_INFINITY, f64::max);
        ensure!(
            peak.is_finite(),
            Combination,
            "the density product has no mass on the common support"
        );
        let first = scan.iter().position(|(_, g)| *g > peak - TRIM).unwrap();
        let last = scan.iter().rposition(|(_, g)| *g > peak - TRIM).unwrap();
        let a = scan[first.saturating_sub(1)].0;
        let b = scan[(last + 1).min(steps)].0;
        p.peak = peak;
        p.edges = (0..=PANELS)
            .map(|i| a + (b - a) * i as f64 / PANELS as f64)
            .collect();
        let tol = 1e-15 * (b - a);
        p.masses = p
            .edges
            .windows(2)
            .map(|w| integrate(&|u| p.scaled_integrand(u), w[0], w[1], tol))
            .collect();
        p.below = p
            .masses
            .iter()
            .scan(0.0, |acc, m| {
                let prev = *acc;
                *acc += m;
                Some(prev)
            })
            .collect();
        let mut above = vec![0.0; PANELS];
        for i in (0..PANELS - 1).rev() {
            above[i] = above[i + 1] + p.masses[i + 1];
        }
        p.above = above;
        p.total = p.masses.iter().sum();
        ensure!(
            p.total > 0.0 && p.total.is_finite(),
            Combination,
            "the density product has no mass on the common support"
        );
        Ok(p)
    }

    fn theta(&self, u: f64) -> f64 {
        self.c + self.s * u.sinh()
    }

    /// `ln` of the unnormalized product density at `θ`.
    fn ln_product(&self, y: f64) -> f64 {
        let mut acc: f64 = self.inputs.iter().map(|cd| cd.ln_density(y)).sum();
        if self.variant == ProductVariant::Scale {
            if y <= 0.0 {
                return f64::NEG_INFINITY;
            }
            acc += (self.inputs.len() as f64 - 1.0) * y.ln();
        }
        acc
    }

    fn ln_integrand(&self, u: f64) -> f64 {
        self.ln_product(self.theta(u)) + (self.s * u.cosh()).ln()
    }

    fn scaled_integrand(&self, u: f64) -> f64 {
        let g = self.ln_integrand(u) - self.peak;
        if g.is_nan() {
            0.0
        } else {
            g.exp()
        }
    }
}

impl CdEvaluator for ProductCombined {
    fn tails(&self, y: f64) -> Tails {
        let u = ((y - self.c) / self.s).asinh();
        let (a, b) = (self.edges[0], self.edges[PANELS]);
        if u <= a {
            return Tails::from_prob(0.0);
        }
        if u >= b {
            return Tails::from_prob(1.0);
        }
        let k = (((u - a) / (b - a) * PANELS as f64) as usize).min(PANELS - 1);
        let tol = 1e-15 * (b - a);
        let part = integrate(&|v| self.scaled_integrand(v), self.edges[k], u, tol)
            .clamp(0.0, self.masses[k]);
        let lower = self.below[k] + part;
        let upper = self.above[k] + (self.masses[k] - part);
        let ln_z = self.total.ln();
        Tails {
            ln_lower: (lower.ln() - ln_z).min(0.0),
            ln_upper: (upper.ln() - ln_z).min(0.0),
        }
    }

    fn ln_density(&self, y: f64) -> Option<f64> {
        Some(self.ln_product(y) - self.peak - self.total.ln())
    }

    fn center_hint(&self) -> f64 {
        self.c
    }

    fn scale_hint(&self) -> f64 {
        self.s / (self.inputs.len() as f64).sqrt()
    }
}
