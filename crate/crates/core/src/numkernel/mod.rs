//! Distribution families, the `DE_L` convolution machinery and grid
//! convolution of weighted sums.

pub mod double_exp;
pub mod grid;
pub mod poly;
pub mod quad;
pub mod special;
pub mod tails;

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

pub use double_exp::{de_l_cdf, de_l_quantile, de_quantile_from_tails, de_tails, DeL};
pub use grid::{
    grid_convolution_cdf, weighted_convolution_cdf, ConvolutionConfig, GridCdf, WeightedSumCdf,
    GRID_TAIL_TOL,
};
pub use poly::{de_tail_poly, de_tail_poly_with_limit, TailPoly, DEFAULT_EXACT_LIMIT};
pub use tails::{Tails, LN_TAIL_FLOOR};

use special::{
    bisect_tails, chi_squared_ln_pdf, chi_squared_tails, norm_ln_pdf, norm_quantile,
    norm_quantile_ln, norm_tails, student_t_ln_pdf, student_t_tails,
};

/// Probabilities closer than this to 0 or 1 are clamped before inverting a
/// family without a log-space quantile.
pub const TAIL_TOL: f64 = 1e-15;

/// The reference laws `F₀` used by the combiners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistFamily {
    StdNormal,
    StudentT { df: u32 },
    ChiSquared { df: u32 },
    /// `1 - e^{-t}` on `t >= 0`.
    ExpStandard,
    /// `e^t` on `t <= 0`.
    ExpMirror,
    DoubleExp,
    DeConvolved { l: u32 },
}

impl DistFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DistFamily::StudentT { df } | DistFamily::ChiSquared { df } => {
                ensure!(df > 0, Parameter, "degrees of freedom must be positive")
            }
            DistFamily::DeConvolved { l } => {
                ensure!(l > 0, Parameter, "convolution order must be positive")
            }
            _ => {}
        }
        Ok(())
    }

    /// Closed interval outside which the CDF is 0 or 1.
    pub fn support(&self) -> (f64, f64) {
        match self {
            DistFamily::ChiSquared { .. } | DistFamily::ExpStandard => (0.0, f64::INFINITY),
            DistFamily::ExpMirror => (f64::NEG_INFINITY, 0.0),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn tails(&self, t: f64) -> Tails {
        match *self {
            DistFamily::StdNormal => norm_tails(t),
            DistFamily::StudentT { df } => student_t_tails(t, df as f64),
            DistFamily::ChiSquared { df } => chi_squared_tails(t, df as f64),
            DistFamily::ExpStandard => {
                if t <= 0.0 {
                    Tails::from_prob(0.0)
                } else {
                    Tails::from_ln_upper(-t)
                }
            }
            DistFamily::ExpMirror => {
                if t >= 0.0 {
                    Tails::from_prob(1.0)
                } else {
                    Tails::from_ln_lower(t)
                }
            }
            DistFamily::DoubleExp => de_tails(t),
            DistFamily::DeConvolved { l } => match DeL::new(l) {
                Ok(d) => d.tails(t),
                Err(_) => Tails::from_prob(f64::NAN),
            },
        }
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        self.validate()?;
        Ok(self.tails(t).cdf())
    }

    pub fn ln_pdf(&self, t: f64) -> f64 {
        match *self {
            DistFamily::StdNormal => norm_ln_pdf(t),
            DistFamily::StudentT { df } => student_t_ln_pdf(t, df as f64),
            DistFamily::ChiSquared { df } => chi_squared_ln_pdf(t, df as f64),
            DistFamily::ExpStandard => {
                if t < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    -t
                }
            }
            DistFamily::ExpMirror => {
                if t > 0.0 {
                    f64::NEG_INFINITY
                } else {
                    t
                }
            }
            DistFamily::DoubleExp => -t.abs() - LN_2,
            DistFamily::DeConvolved { l } => match DeL::new(l) {
                Ok(d) => d.ln_pdf(t),
                Err(_) => f64::NAN,
            },
        }
    }

    pub fn pdf(&self, t: f64) -> f64 {
        self.ln_pdf(t).exp()
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        self.validate()?;
        ensure!(p > 0.0 && p < 1.0, Domain, "probability {p} outside (0, 1)");
        Ok(match *self {
            DistFamily::StdNormal => norm_quantile(p),
            DistFamily::ExpStandard => -(-p).ln_1p(),
            DistFamily::ExpMirror => p.ln(),
            DistFamily::DoubleExp => {
                if p < 0.5 {
                    LN_2 + p.ln()
                } else {
                    -(LN_2 + (-p).ln_1p())
                }
            }
            DistFamily::DeConvolved { l } => DeL::new(l)?.quantile(p)?,
            DistFamily::StudentT { .. } | DistFamily::ChiSquared { .. } => self.root_find(p),
        })
    }

    /// `F₀^{-1}(u)` from the tails of `u`. Families with log-space inverses
    /// stay exact deep in the tails; the others clamp `u` to
    /// `[TAIL_TOL, 1 - TAIL_TOL]`.
    pub fn quantile_from_tails(&self, u: &Tails) -> f64 {
        match *self {
            DistFamily::StdNormal => {
                if u.lower_is_small() {
                    norm_quantile_ln(u.ln_lower)
                } else {
                    -norm_quantile_ln(u.ln_upper)
                }
            }
            DistFamily::ExpStandard => -u.ln_upper,
            DistFamily::ExpMirror => u.ln_lower,
            DistFamily::DoubleExp => de_quantile_from_tails(u),
            DistFamily::DeConvolved { l } => match DeL::new(l) {
                Ok(d) => {
                    if u.lower_is_small() {
                        d.quantile_ln_small(u.ln_lower, true)
                    } else {
                        d.quantile_ln_small(u.ln_upper, false)
                    }
                }
                Err(_) => f64::NAN,
            },
            DistFamily::StudentT { .. } | DistFamily::ChiSquared { .. } => {
                let p = u.cdf().clamp(TAIL_TOL, 1.0 - TAIL_TOL);
                self.root_find(p)
            }
        }
    }

    fn root_find(&self, p: f64) -> f64 {
        let (lo, hi) = match self {
            DistFamily::ChiSquared { df } => (0.0, 2.0 * *df as f64 + 10.0),
            _ => (-10.0, 10.0),
        };
        bisect_tails(|t| self.tails(t), p, lo, hi, self.support(), 1e-14).unwrap_or(f64::NAN)
    }

    pub fn name(&self) -> String {
        match self {
            DistFamily::StdNormal => "std_normal".into(),
            DistFamily::StudentT { df } => format!("student_t({df})"),
            DistFamily::ChiSquared { df } => format!("chi_squared({df})"),
            DistFamily::ExpStandard => "exp_standard".into(),
            DistFamily::ExpMirror => "exp_mirror".into(),
            DistFamily::DoubleExp => "double_exp".into(),
            DistFamily::DeConvolved { l } => format!("de_convolved({l})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ALL: [DistFamily; 7] = [
        DistFamily::StdNormal,
        DistFamily::StudentT { df: 3 },
        DistFamily::ChiSquared { df: 4 },
        DistFamily::ExpStandard,
        DistFamily::ExpMirror,
        DistFamily::DoubleExp,
        DistFamily::DeConvolved { l: 3 },
    ];

    #[test]
    fn documented_values() {
        assert_eq!(DistFamily::StdNormal.cdf(0.0).unwrap(), 0.5);
        assert_eq!(DistFamily::DoubleExp.cdf(0.0).unwrap(), 0.5);
        let x: f64 = 2.7726;
        let oracle = 1.0 - (-x / 2.0).exp() * (1.0 + x / 2.0);
        let got = DistFamily::ChiSquared { df: 4 }.cdf(x).unwrap();
        assert!((got - oracle).abs() < 1e-14);
        assert!((got - 0.4034).abs() < 1e-4);
        assert_eq!(DistFamily::StdNormal.quantile(0.5).unwrap(), 0.0);
        assert!((DistFamily::DoubleExp.quantile(0.75).unwrap() - LN_2).abs() < 1e-15);
        assert_eq!(DistFamily::DeConvolved { l: 2 }.quantile(0.5).unwrap(), 0.0);
    }

    #[test]
    fn parameter_and_domain_errors() {
        assert!(DistFamily::StudentT { df: 0 }.cdf(1.0).is_err());
        assert!(DistFamily::ChiSquared { df: 0 }.quantile(0.5).is_err());
        assert!(DistFamily::StdNormal.quantile(0.0).is_err());
        assert!(DistFamily::StdNormal.quantile(1.0).is_err());
    }

    #[test]
    fn limits_at_infinity() {
        for f in ALL {
            assert_eq!(f.tails(f64::NEG_INFINITY).cdf(), 0.0, "{f:?}");
            assert_eq!(f.tails(f64::INFINITY).cdf(), 1.0, "{f:?}");
        }
    }

    #[test]
    fn quantile_from_tails_deep() {
        let u = Tails::from_ln_lower(-900.0);
        let x = DistFamily::StdNormal.quantile_from_tails(&u);
        assert!((norm_tails(x).ln_lower + 900.0).abs() < 1e-8);
        let x = DistFamily::DoubleExp.quantile_from_tails(&u.mirrored());
        assert!((x - (900.0 - LN_2)).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn cdf_is_monotone(i in 0usize..7, a in -30.0f64..30.0, d in 0.0f64..10.0) {
            let f = ALL[i];
            prop_assert!(f.cdf(a).unwrap() <= f.cdf(a + d).unwrap());
        }

        #[test]
        fn quantile_inverts_cdf(i in 0usize..7, p in 1e-6f64..(1.0 - 1e-6)) {
            let f = ALL[i];
            let x = f.quantile(p).unwrap();
            let tol = match f {
                DistFamily::StudentT { .. } | DistFamily::ChiSquared { .. }
                | DistFamily::DeConvolved { .. } => 1e-8,
                _ => 1e-10,
            };
            prop_assert!((f.cdf(x).unwrap() - p).abs() < tol, "{f:?} p={p} x={x}");
        }

        #[test]
        fn cdf_inverts_quantile(i in 0usize..7, t in -5.0f64..5.0) {
            let f = ALL[i];
            let (lo, hi) = f.support();
            prop_assume!(t > lo + 0.05 && t < hi - 0.05);
            let back = f.quantile(f.cdf(t).unwrap()).unwrap();
            prop_assert!((back - t).abs() < 1e-6 * t.abs().max(1.0), "{f:?} t={t} back={back}");
        }
    }
}
