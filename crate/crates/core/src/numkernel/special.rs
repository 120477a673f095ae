//! Scalar special functions: normal, Student t, chi-square and integer-shape
//! gamma tails, with log-space variants for the deep tails.

use std::f64::consts::{LN_2, PI, SQRT_2};

use statrs::function::beta::beta_reg;
use libm::erfc;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use super::tails::{ln_1m_exp, ln_sum_exp, Tails};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

pub fn norm_ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// `ln Φ(x)` without underflow for very negative `x`.
pub fn norm_ln_cdf(x: f64) -> f64 {
    if x > 5.0 {
        (-0.5 * erfc(x / SQRT_2)).ln_1p()
    } else if x > -30.0 {
        (0.5 * erfc(-x / SQRT_2)).ln()
    } else {
        // Mills-ratio asymptotic series; the truncation error is below 1e-14
        // relative for x < -30.
        let z = 1.0 / (x * x);
        let series = 1.0 - z * (1.0 - 3.0 * z * (1.0 - 5.0 * z * (1.0 - 7.0 * z * (1.0 - 9.0 * z))));
        norm_ln_pdf(x) - (-x).ln() + series.ln()
    }
}

pub fn norm_tails(x: f64) -> Tails {
    if x < 0.0 {
        Tails::from_ln_lower(norm_ln_cdf(x))
    } else {
        Tails::from_ln_upper(norm_ln_cdf(-x))
    }
}

/// Standard normal quantile (Acklam's rational approximation with one
/// Halley refinement step).
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p > 0.5 {
        return -norm_quantile_lower(1.0 - p, (-p).ln_1p());
    }
    norm_quantile_lower(p, p.ln())
}

/// Quantile at lower-tail probability `exp(ln_p)`; works below the smallest
/// representable double.
pub fn norm_quantile_ln(ln_p: f64) -> f64 {
    if ln_p >= 0.0 {
        return f64::INFINITY;
    }
    if ln_p > -LN_2 {
        // p > 1/2: invert the upper tail for accuracy
        let ln_q = ln_1m_exp(ln_p);
        return -norm_quantile_ln(ln_q);
    }
    if ln_p > -700.0 {
        return norm_quantile_lower(ln_p.exp(), ln_p);
    }
    // Newton iteration on ln Φ.
    let a = -2.0 * ln_p;
    let mut x = -(a - a.ln() - (2.0 * PI).ln()).sqrt();
    for _ in 0..100 {
        let lc = norm_ln_cdf(x);
        let step = (lc - ln_p) / (norm_ln_pdf(x) - lc).exp();
        x -= step;
        if step.abs() <= 1e-15 * x.abs() {
            break;
        }
    }
    x
}

fn norm_quantile_lower(p: f64, ln_p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let x = if p < 0.02425 {
        let q = (-2.0 * ln_p).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    // Halley refinement against the erfc-based CDF.
    let e = norm_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Student t CDF tails with `df` degrees of freedom.
pub fn student_t_tails(x: f64, df: f64) -> Tails {
    if x.is_nan() {
        return Tails::from_prob(f64::NAN);
    }
    let small_tail = |ax: f64| -> f64 {
        // P(T > ax) for ax >= 0
        let x2 = ax * ax;
        if x2 < df {
            0.5 - 0.5 * beta_reg(0.5, 0.5 * df, x2 / (df + x2))
        } else {
            0.5 * beta_reg(0.5 * df, 0.5, df / (df + x2))
        }
    };
    if x.is_infinite() {
        return if x > 0.0 {
            Tails::from_prob(1.0)
        } else {
            Tails::from_prob(0.0)
        };
    }
    let tail = small_tail(x.abs());
    if x < 0.0 {
        Tails::from_ln_lower(tail.ln())
    } else {
        Tails::from_ln_upper(tail.ln())
    }
}

pub fn student_t_ln_pdf(x: f64, df: f64) -> f64 {
    ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df) - 0.5 * (df * PI).ln()
        - 0.5 * (df + 1.0) * (x * x / df).ln_1p()
}

/// Chi-square CDF tails.
pub fn chi_squared_tails(x: f64, df: f64) -> Tails {
    if x <= 0.0 {
        return Tails::from_prob(0.0);
    }
    if x.is_infinite() {
        return Tails::from_prob(1.0);
    }
    let lower = gamma_lr(0.5 * df, 0.5 * x);
    if lower < 0.5 {
        Tails::from_ln_lower(lower.ln())
    } else {
        Tails::from_ln_upper(gamma_ur(0.5 * df, 0.5 * x).ln())
    }
}

pub fn chi_squared_ln_pdf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let k = 0.5 * df;
    (k - 1.0) * x.ln() - 0.5 * x - k * LN_2 - ln_gamma(k)
}

/// Tails of the Gamma(shape = `k`, scale = 1) law at `x = exp(ln_x)` for a
/// positive integer shape, evaluated without forming `x` where it would
/// underflow.
pub fn gamma_int_tails(k: u32, ln_x: f64) -> Tails {
    assert!(k >= 1, "gamma shape must be positive");
    if ln_x == f64::NEG_INFINITY {
        return Tails::from_prob(0.0);
    }
    let x = ln_x.exp();
    if x.is_infinite() {
        return Tails::from_prob(1.0);
    }
    // Q(k, x) = e^{-x} * sum_{j<k} x^j / j!
    let ln_q = -x + ln_sum_exp((0..k).map(|j| j as f64 * ln_x - ln_gamma(j as f64 + 1.0)));
    let kf = k as f64;
    if x < kf + 1.0 {
        // P(k, x) = x^k e^{-x} / k! * sum_{j>=0} x^j / ((k+1)...(k+j))
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in 1..500 {
            term *= x / (kf + j as f64);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        let ln_p = kf * ln_x - x - ln_gamma(kf + 1.0) + sum.ln();
        if ln_p < ln_q {
            Tails::from_ln_lower(ln_p)
        } else {
            Tails::from_ln_upper(ln_q)
        }
    } else {
        Tails::from_ln_upper(ln_q)
    }
}

/// Find `x` in `[lo, hi]` with `f(x)` crossing `p`, where `f` returns
/// tails and is nondecreasing. The bracket is expanded outward first when
/// it does not contain the target. Stops when the bracket is narrower than
/// `tol * max(1, |x|)`.
pub fn bisect_tails(
    f: impl Fn(f64) -> Tails,
    p: f64,
    mut lo: f64,
    mut hi: f64,
    bounds: (f64, f64),
    tol: f64,
) -> Option<f64> {
    use std::cmp::Ordering::*;
    let mut width = (hi - lo).max(1e-8);
    let mut guard = 0;
    while f(lo).cmp_prob(p) == Greater {
        guard += 1;
        if lo <= bounds.0 || guard > 2100 {
            return None;
        }
        width *= 2.0;
        lo = (hi - width).max(bounds.0);
        if lo == f64::NEG_INFINITY {
            return None;
        }
    }
    let mut width = (hi - lo).max(1e-8);
    guard = 0;
    while f(hi).cmp_prob(p) == Less {
        guard += 1;
        if hi >= bounds.1 || guard > 2100 {
            return None;
        }
        width *= 2.0;
        hi = (lo + width).min(bounds.1);
        if hi == f64::INFINITY {
            return None;
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol * mid.abs().max(1.0) || mid <= lo || mid >= hi {
            return Some(mid);
        }
        match f(mid).cmp_prob(p) {
            Less => lo = mid,
            _ => hi = mid,
        }
    }
    Some(0.5 * (lo + hi))
}
