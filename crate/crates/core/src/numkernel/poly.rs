//! Tail polynomials of the L-fold double-exponential convolution.
//!
//! For `t >= 0`, `P(Y_1 + ... + Y_L > t) = V_L(t) e^{-t} / 2` where the
//! `Y_i` are i.i.d. standard Laplace and `V_L` has degree `L - 1`. The
//! polynomials obey
//!
//! ```text
//! 2 V_k(t) = V_{k-1}(t) + ∫_0^t [V_{k-1}(s) - V'_{k-1}(s)] ds
//!          + ∫_0^∞ [V_{k-1}(s) + V_{k-1}(t+s) - V'_{k-1}(s)] e^{-2s} ds
//! ```
//!
//! with `V_1 = 1`. Every term is a polynomial operation or a moment
//! `∫_0^∞ s^k e^{-2s} ds = k! / 2^{k+1}`, so the recursion runs in exact
//! rational arithmetic.

use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{ensure, Result};

use super::tails::ln_sum_exp;

/// Degrees above this fall back to floating-point coefficients.
pub const DEFAULT_EXACT_LIMIT: u32 = 20;

/// Ring operations the recursion needs.
trait Coeff:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn zero() -> Self;
    fn from_u64(v: u64) -> Self;
}

impl Coeff for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn from_u64(v: u64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
}

impl Coeff for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_u64(v: u64) -> Self {
        v as f64
    }
}

/// Dense polynomial, coefficient of `t^k` at index `k`.
#[derive(Clone, Debug, PartialEq)]
struct Poly<C>(Vec<C>);

impl<C: Coeff> Poly<C> {
    fn coeff(&self, k: usize) -> C {
        self.0.get(k).cloned().unwrap_or_else(C::zero)
    }

    fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        Poly((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    fn derivative(&self) -> Self {
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c.clone() * C::from_u64(k as u64))
                .collect(),
        )
    }

    /// `V - V'`
    fn minus_derivative(&self) -> Self {
        let d = self.derivative();
        Poly((0..self.0.len()).map(|k| self.coeff(k) - d.coeff(k)).collect())
    }

    /// `∫_0^t p(s) ds`
    fn integral(&self) -> Self {
        let mut out = vec![C::zero()];
        out.extend(
            self.0
                .iter()
                .enumerate()
                .map(|(k, c)| c.clone() / C::from_u64(k as u64 + 1)),
        );
        Poly(out)
    }

    fn scale(&self, by: C) -> Self {
        Poly(self.0.iter().map(|c| c.clone() * by.clone()).collect())
    }
}

/// `k! / 2^{k+1}` for `k = 0..n`.
fn laplace_moments<C: Coeff>(n: usize) -> Vec<C> {
    let mut out = Vec::with_capacity(n);
    let mut m = C::from_u64(1) / C::from_u64(2);
    for k in 0..n {
        if k > 0 {
            m = m * C::from_u64(k as u64) / C::from_u64(2);
        }
        out.push(m.clone());
    }
    out
}

/// `∫_0^∞ p(s) e^{-2s} ds`
fn laplace_at_two<C: Coeff>(p: &Poly<C>) -> C {
    let moments = laplace_moments::<C>(p.0.len());
    p.0.iter()
        .zip(moments)
        .fold(C::zero(), |acc, (c, m)| acc + c.clone() * m)
}

/// `t ↦ ∫_0^∞ p(t + s) e^{-2s} ds`, expanding `(t+s)^j` binomially.
fn shifted_laplace<C: Coeff>(p: &Poly<C>) -> Poly<C> {
    let n = p.0.len();
    let moments = laplace_moments::<C>(n);
    let mut out = vec![C::zero(); n];
    for (j, cj) in p.0.iter().enumerate() {
        let mut binom = C::from_u64(1);
        for (i, slot) in out.iter_mut().enumerate().take(j + 1) {
            if i > 0 {
                binom = binom * C::from_u64((j - i + 1) as u64) / C::from_u64(i as u64);
            }
            *slot = slot.clone() + cj.clone() * binom.clone() * moments[j - i].clone();
        }
    }
    Poly(out)
}

fn recursion_step<C: Coeff>(prev: &Poly<C>) -> Poly<C> {
    let drift = prev.minus_derivative();
    let constant = laplace_at_two(&drift);
    let sum = prev
        .add(&drift.integral())
        .add(&Poly(vec![constant]))
        .add(&shifted_laplace(prev));
    sum.scale(C::from_u64(1) / C::from_u64(2))
}

fn run_recursion<C: Coeff>(l: u32) -> Poly<C> {
    let mut v = Poly(vec![C::from_u64(1)]);
    for _ in 2..=l {
        v = recursion_step(&v);
    }
    v
}

/// The polynomial `V_L` with `1 - DE_L(t) = V_L(t) e^{-t} / 2` for `t >= 0`.
#[derive(Clone, Debug)]
pub struct TailPoly {
    l: u32,
    exact: Option<Vec<BigRational>>,
    coeffs: Vec<f64>,
    ln_coeffs: Vec<f64>,
}

impl TailPoly {
    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Exact rational coefficients, present when computed below the exact
    /// limit.
    pub fn exact_coeffs(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    /// False when coefficients were produced in floating point.
    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn eval_derivative(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * t + k as f64 * c)
    }

    /// `ln V_L(t)` for `t >= 0`, summed in log space so large `t` cannot
    /// overflow.
    pub fn ln_eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.ln_coeffs[0];
        }
        let lt = t.ln();
        ln_sum_exp(
            self.ln_coeffs
                .iter()
                .enumerate()
                .map(|(k, lc)| lc + k as f64 * lt),
        )
    }

    /// `ln(1 - DE_L(t)) = ln(V_L(t) e^{-t} / 2)` for `t >= 0`.
    pub fn ln_tail(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        -std::f64::consts::LN_2 + self.ln_eval(t) - t
    }
}

/// Compute `V_L`, exactly for `L <= DEFAULT_EXACT_LIMIT`.
pub fn de_tail_poly(l: u32) -> Result<TailPoly> {
    de_tail_poly_with_limit(l, DEFAULT_EXACT_LIMIT)
}

/// Compute `V_L`, exactly when `L <= exact_limit`, otherwise in floating
/// point.
pub fn de_tail_poly_with_limit(l: u32, exact_limit: u32) -> Result<TailPoly> {
    ensure!(l >= 1, Domain, "convolution order L must be at least 1, got {l}");
    let (exact, coeffs) = if l <= exact_limit {
        let p = run_recursion::<BigRational>(l);
        let floats = p.0.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect();
        (Some(p.0), floats)
    } else {
        (None, run_recursion::<f64>(l).0)
    };
    // All coefficients are positive (V_L is a mixture of Gamma-type tails),
    // which the log-space evaluation relies on.
    let ln_coeffs = coeffs
        .iter()
        .map(|c: &f64| if *c > 0.0 { c.ln() } else { f64::NEG_INFINITY })
        .collect();
    Ok(TailPoly {
        l,
        exact,
        coeffs,
        ln_coeffs,
    })
}

impl TailPoly {
    /// Exact coefficient `k` as `(numerator, denominator)` strings; handy for
    /// reports.
    pub fn exact_coeff_string(&self, k: usize) -> Option<String> {
        self.exact.as_ref().and_then(|v| v.get(k)).map(|c| {
            if c.denom().is_one() {
                c.numer().to_string()
            } else {
                format!("{}/{}", c.numer(), c.denom())
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn first_polynomials_are_exact() {
        let v1 = de_tail_poly(1).unwrap();
        assert_eq!(v1.exact_coeffs().unwrap(), &[rat(1, 1)]);
        let v2 = de_tail_poly(2).unwrap();
        assert_eq!(v2.exact_coeffs().unwrap(), &[rat(1, 1), rat(1, 2)]);
        let v3 = de_tail_poly(3).unwrap();
        assert_eq!(v3.exact_coeffs().unwrap(), &[rat(1, 1), rat(5, 8), rat(1, 8)]);
    }

    #[test]
    fn degree_and_constant_term() {
        for l in 1..=10 {
            let v = de_tail_poly(l).unwrap();
            assert_eq!(v.degree(), (l - 1) as usize);
            assert_eq!(v.exact_coeffs().unwrap()[0], rat(1, 1));
            assert!(v.coeffs().iter().all(|c| *c > 0.0));
        }
    }

    #[test]
    fn float_fallback_agrees_with_exact() {
        for l in [5u32, 12, 20] {
            let exact = de_tail_poly(l).unwrap();
            let float = de_tail_poly_with_limit(l, 0).unwrap();
            assert!(!float.is_exact());
            for (a, b) in exact.coeffs().iter().zip(float.coeffs()) {
                assert!((a - b).abs() <= 1e-12 * a.abs());
            }
        }
    }

    #[test]
    fn zero_order_rejected() {
        assert!(de_tail_poly(0).is_err());
    }

    #[test]
    fn log_evaluation_matches_horner() {
        let v = de_tail_poly(6).unwrap();
        for &t in &[0.0, 0.3, 4.0, 50.0] {
            assert!((v.ln_eval(t) - v.eval(t).ln()).abs() < 1e-13);
        }
    }
}
