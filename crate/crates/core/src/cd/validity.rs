//! Uniformity checks of `H(θ₀)` and monotonicity checks of evaluators.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure, Result};
use crate::rng::stream_rng;

use super::ConfDist;

/// Kolmogorov–Smirnov test of a sample against `U(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsReport {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

impl KsReport {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value > level
    }
}

/// Survival function of the Kolmogorov distribution, `P(K > x)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.0 {
        // P(K <= x) = √(2π)/x Σ exp(-(2k-1)²π²/(8x²))
        let c = std::f64::consts::PI.powi(2) / (8.0 * x * x);
        let s: f64 = (1..=20)
            .map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp())
            .sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * s).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (k * k) as f64 * x * x).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// KS statistic and asymptotic p-value (with the usual finite-sample
/// scaling `√n + 0.12 + 0.11/√n`).
pub fn ks_uniform(samples: &[f64]) -> Result<KsReport> {
    ensure!(!samples.is_empty(), Input, "no samples for the uniformity test");
    ensure!(
        samples.iter().all(|u| u.is_finite()),
        Input,
        "uniformity samples must be finite"
    );
    let mut u = samples.to_vec();
    u.sort_by(|a, b| a.total_cmp(b));
    let n = u.len() as f64;
    let mut d: f64 = 0.0;
    for (i, v) in u.iter().enumerate() {
        let v = v.clamp(0.0, 1.0);
        d = d.max((i as f64 + 1.0) / n - v).max(v - i as f64 / n);
    }
    let sn = n.sqrt();
    Ok(KsReport {
        statistic: d,
        p_value: kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d),
        n: u.len(),
    })
}

/// `H_r(θ₀)` over `reps` seeded replications; replication `r` draws from
/// stream `r` of `seed`. Results are in replication order regardless of
/// scheduling.
pub fn pit_values<F>(factory: F, theta0: f64, reps: usize, seed: u64) -> Result<Vec<f64>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<ConfDist> + Sync,
{
    ensure!(reps > 0, Input, "replication count must be positive");
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            factory(&mut rng).map(|cd| cd.cdf(theta0))
        })
        .collect()
}

/// KS test of `H(θ₀)` against `U(0, 1)` over seeded replications.
pub fn uniformity_report<F>(factory: F, theta0: f64, reps: usize, seed: u64) -> Result<KsReport>
where
    F: Fn(&mut ChaCha8Rng) -> Result<ConfDist> + Sync,
{
    ensure!(reps >= 100, Input, "need at least 100 replications, got {reps}");
    ks_uniform(&pit_values(factory, theta0, reps, seed)?)
}

/// Check `H(a) <= H(b)` on `pairs` random ordered pairs drawn around the
/// distribution's bulk.
pub fn check_monotone(cd: &ConfDist, pairs: usize, seed: u64) -> bool {
    let mut rng = stream_rng(seed, 0);
    let c = cd.center_hint();
    let s = cd.scale_hint();
    (0..pairs).all(|_| {
        let a = c + s * rng.random_range(-8.0..8.0);
        let b = c + s * rng.random_range(-8.0..8.0);
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let (ha, hb) = (cd.cdf(a), cd.cdf(b));
        ha <= hb && (0.0..=1.0).contains(&ha) && (0.0..=1.0).contains(&hb)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cd::{cd_normal_mean, cd_normal_variance};
    use rand_distr::{Distribution, Normal};

    #[test]
    fn kolmogorov_branches_agree() {
        let a = kolmogorov_sf(1.0 - 1e-12);
        let b = kolmogorov_sf(1.0 + 1e-12);
        assert!((a - b).abs() < 1e-9);
        // P(K > 1.358) ≈ 0.05
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 2e-4);
    }

    #[test]
    fn ks_detects_non_uniform() {
        let uniform: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_uniform(&uniform).unwrap().p_value > 0.99);
        let skew: Vec<f64> = uniform.iter().map(|u| u * u).collect();
        assert!(ks_uniform(&skew).unwrap().p_value < 1e-6);
    }

    fn sample(rng: &mut ChaCha8Rng, mu: f64, sd: f64, n: usize) -> (f64, f64) {
        let d = Normal::new(mu, sd).unwrap();
        let x: Vec<f64> = (0..n).map(|_| d.sample(rng)).collect();
        let m = x.iter().sum::<f64>() / n as f64;
        let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        (m, v)
    }

    #[test]
    fn exact_constructors_pass_pit() {
        let mean = uniformity_report(
            |rng| {
                let (m, v) = sample(rng, 1.0, 2.0, 5);
                cd_normal_mean(m, v.sqrt(), 5)
            },
            1.0,
            2000,
            42,
        )
        .unwrap();
        assert!(mean.passes(0.01), "{mean:?}");
        let var = uniformity_report(
            |rng| {
                let (_, v) = sample(rng, 1.0, 2.0, 5);
                cd_normal_variance(v, 5)
            },
            4.0,
            2000,
            43,
        )
        .unwrap();
        assert!(var.passes(0.01), "{var:?}");
    }

    #[test]
    fn biased_factory_fails_and_reps_checked() {
        let biased = uniformity_report(
            |rng| {
                let (m, v) = sample(rng, 0.0, 1.0, 20);
                cd_normal_mean(m + v.sqrt() / 20f64.sqrt(), v.sqrt(), 20)
            },
            0.0,
            2000,
            5,
        )
        .unwrap();
        assert!(biased.p_value < 0.01);
        assert!(uniformity_report(|_| cd_normal_mean(0.0, 1.0, 3), 0.0, 0, 1).is_err());
    }

    #[test]
    fn pit_values_are_reproducible() {
        let f = |rng: &mut ChaCha8Rng| {
            let (m, v) = sample(rng, 0.0, 1.0, 4);
            cd_normal_mean(m, v.sqrt(), 4)
        };
        assert_eq!(
            pit_values(f, 0.0, 300, 9).unwrap(),
            pit_values(f, 0.0, 300, 9).unwrap()
        );
    }
}
