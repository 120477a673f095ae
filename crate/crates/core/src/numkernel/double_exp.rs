//! The standard double-exponential law and its L-fold convolution `DE_L`.

use std::f64::consts::LN_2;

use crate::error::{ensure, Result};

use super::poly::{de_tail_poly, TailPoly};
use super::tails::Tails;

/// Tails of the standard double exponential at `t`.
pub fn de_tails(t: f64) -> Tails {
    if t.is_nan() {
        return Tails::from_prob(f64::NAN);
    }
    if t < 0.0 {
        Tails::from_ln_lower(t - LN_2)
    } else {
        Tails::from_ln_upper(-t - LN_2)
    }
}

/// `DE^{-1}` evaluated from the tails of its argument, so that arguments
/// within `exp(-745)` of 0 or 1 still map to finite values.
pub fn de_quantile_from_tails(u: &Tails) -> f64 {
    if u.lower_is_small() {
        LN_2 + u.ln_lower
    } else {
        -(LN_2 + u.ln_upper)
    }
}

/// `DE_L` with its tail polynomial held for repeated evaluation.
#[derive(Clone, Debug)]
pub struct DeL {
    poly: TailPoly,
}

impl DeL {
    pub fn new(l: u32) -> Result<Self> {
        Ok(DeL {
            poly: de_tail_poly(l)?,
        })
    }

    pub fn from_poly(poly: TailPoly) -> Self {
        DeL { poly }
    }

    pub fn l(&self) -> u32 {
        self.poly.l()
    }

    pub fn poly(&self) -> &TailPoly {
        &self.poly
    }

    pub fn tails(&self, t: f64) -> Tails {
        if t.is_nan() {
            return Tails::from_prob(f64::NAN);
        }
        if t.is_infinite() {
            return Tails::from_prob(if t > 0.0 { 1.0 } else { 0.0 });
        }
        let ln_small = self.poly.ln_tail(t.abs());
        Tails::from_small_side(ln_small, t < 0.0)
    }

    pub fn cdf(&self, t: f64) -> f64 {
        self.tails(t).cdf()
    }

    /// `ln` of the density; for `t >= 0` it is `½(V_L - V_L')e^{-t}`.
    pub fn ln_pdf(&self, t: f64) -> f64 {
        let a = t.abs();
        let d = self.poly.eval(a) - self.poly.eval_derivative(a);
        if d > 0.0 && d.is_finite() {
            d.ln() - LN_2 - a
        } else {
            // Leading-order term for large |t| where Horner overflows.
            let lead = *self.poly.coeffs().last().unwrap_or(&1.0);
            lead.ln() + (self.poly.degree() as f64) * a.ln() - LN_2 - a
        }
    }

    pub fn pdf(&self, t: f64) -> f64 {
        self.ln_pdf(t).exp()
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        ensure!(p > 0.0 && p < 1.0, Domain, "probability {p} outside (0, 1)");
        if p == 0.5 {
            return Ok(0.0);
        }
        let ln_small = if p < 0.5 { p.ln() } else { (-p).ln_1p() };
        Ok(self.quantile_ln_small(ln_small, p < 0.5))
    }

    /// Quantile at the point whose lower (`lower = true`) or upper tail has
    /// log-probability `ln_small <= ln ½`.
    pub fn quantile_ln_small(&self, ln_small: f64, lower: bool) -> f64 {
        if ln_small >= -LN_2 {
            return 0.0;
        }
        // ln_tail is decreasing on [0, ∞); bisect on the log directly.
        let (mut lo, mut hi) = (0.0, (-ln_small - LN_2).max(1.0));
        while self.poly.ln_tail(hi) > ln_small {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 1e-15 * mid.max(1.0) || mid <= lo || mid >= hi {
                break;
            }
            if self.poly.ln_tail(mid) > ln_small {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        if lower {
            -t
        } else {
            t
        }
    }
}

/// `DE_L(t)`.
pub fn de_l_cdf(l: u32, t: f64) -> Result<f64> {
    Ok(DeL::new(l)?.cdf(t))
}

/// `DE_L^{-1}(p)`.
pub fn de_l_quantile(l: u32, p: f64) -> Result<f64> {
    DeL::new(l)?.quantile(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert_eq!(de_l_cdf(1, 0.0).unwrap(), 0.5);
        let want = 1.0 - 0.5 * 2.0 * (-2.0f64).exp();
        assert!((de_l_cdf(2, 2.0).unwrap() - want).abs() < 1e-15);
        assert!((de_l_quantile(1, 0.25).unwrap() + LN_2).abs() < 1e-12);
        assert!((de_l_quantile(1, 0.75).unwrap() - LN_2).abs() < 1e-12);
        assert_eq!(de_l_quantile(5, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn quantile_round_trip() {
        let p = de_l_cdf(2, 1.3).unwrap();
        assert!((de_l_quantile(2, p).unwrap() - 1.3).abs() < 1e-8);
        let d = DeL::new(4).unwrap();
        for &t in &[-40.0, -3.0, -0.2, 0.7, 9.0] {
            let p = d.cdf(t);
            assert!((d.quantile(p).unwrap() - t).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn symmetric_to_machine_precision() {
        let d = DeL::new(5).unwrap();
        for &t in &[0.1, 1.0, 4.0, 20.0] {
            assert!((d.cdf(t) + d.cdf(-t) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(de_l_quantile(2, 0.0).is_err());
        assert!(de_l_quantile(2, 1.0).is_err());
        assert!(de_l_cdf(0, 1.0).is_err());
    }

    #[test]
    fn log_quantile_far_beyond_double_range() {
        let d = DeL::new(3).unwrap();
        let t = d.quantile_ln_small(-2000.0, true);
        assert!((d.tails(t).ln_lower + 2000.0).abs() < 1e-9);
    }

    #[test]
    fn density_integrates_to_cdf_increment() {
        let d = DeL::new(3).unwrap();
        let (a, b) = (-1.0, 2.5);
        let n = 20_000;
        let h = (b - a) / n as f64;
        let integral: f64 = (0..n).map(|i| d.pdf(a + (i as f64 + 0.5) * h) * h).sum();
        assert!((integral - (d.cdf(b) - d.cdf(a))).abs() < 1e-8);
    }
}
