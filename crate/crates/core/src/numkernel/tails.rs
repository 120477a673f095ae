/// Log-probability substituted for a tail that is exactly zero.
///
/// It lies far below any tail the log-space evaluators produce for
/// arguments of practical size, so substituting it keeps combiners
/// monotone while avoiding infinities.
pub const LN_TAIL_FLOOR: f64 = -1e300;

/// A probability stored as the pair `(ln F, ln(1 - F))`.
///
/// Keeping both logs lets deep tails on either side survive arithmetic that
/// would round `F` to 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tails {
    pub ln_lower: f64,
    pub ln_upper: f64,
}

impl Tails {
    pub fn from_prob(p: f64) -> Self {
        let p = p.clamp(0.0, 1.0);
        Tails {
            ln_lower: p.ln(),
            ln_upper: (-p).ln_1p(),
        }
    }

    /// Build from the log of the lower tail; the upper tail is derived.
    pub fn from_ln_lower(ln_lower: f64) -> Self {
        let ln_lower = ln_lower.min(0.0);
        Tails {
            ln_lower,
            ln_upper: ln_1m_exp(ln_lower),
        }
    }

    /// Build from the log of the upper tail; the lower tail is derived.
    pub fn from_ln_upper(ln_upper: f64) -> Self {
        let ln_upper = ln_upper.min(0.0);
        Tails {
            ln_lower: ln_1m_exp(ln_upper),
            ln_upper,
        }
    }

    /// Build from whichever side is more accurate: `small_lower` selects
    /// whether `ln_small` is the log of the lower or the upper tail.
    pub fn from_small_side(ln_small: f64, small_lower: bool) -> Self {
        if small_lower {
            Self::from_ln_lower(ln_small)
        } else {
            Self::from_ln_upper(ln_small)
        }
    }

    pub fn cdf(&self) -> f64 {
        if self.ln_lower < -std::f64::consts::LN_2 {
            self.ln_lower.exp()
        } else {
            -self.ln_upper.exp_m1()
        }
    }

    pub fn sf(&self) -> f64 {
        if self.ln_upper < -std::f64::consts::LN_2 {
            self.ln_upper.exp()
        } else {
            -self.ln_lower.exp_m1()
        }
    }

    /// True when the lower tail is the smaller of the two.
    pub fn lower_is_small(&self) -> bool {
        self.ln_lower <= self.ln_upper
    }

    /// Swap the roles of the two tails (the distribution of `-X`).
    pub fn mirrored(&self) -> Self {
        Tails {
            ln_lower: self.ln_upper,
            ln_upper: self.ln_lower,
        }
    }

    /// Floor both logs at [`LN_TAIL_FLOOR`].
    pub fn floored(&self) -> Self {
        Tails {
            ln_lower: self.ln_lower.max(LN_TAIL_FLOOR),
            ln_upper: self.ln_upper.max(LN_TAIL_FLOOR),
        }
    }

    /// Sign of `F - p` compared on the tail that is accurate for `p`.
    pub fn cmp_prob(&self, p: f64) -> std::cmp::Ordering {
        if p <= 0.5 {
            self.ln_lower
                .partial_cmp(&p.ln())
                .unwrap_or(std::cmp::Ordering::Equal)
        } else {
            (-p)
                .ln_1p()
                .partial_cmp(&self.ln_upper)
                .unwrap_or(std::cmp::Ordering::Equal)
        }
    }
}

/// `ln(1 - exp(x))` for `x <= 0`, accurate on both ends.
pub fn ln_1m_exp(x: f64) -> f64 {
    if x >= 0.0 {
        f64::NEG_INFINITY
    } else if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `ln(exp(a) + exp(b))`.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(sum exp(x_i))`.
pub fn ln_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
