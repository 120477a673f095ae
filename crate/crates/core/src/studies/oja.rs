//! Oja's bivariate scale: the median area of all triangles spanned by
//! triples of points.

use serde::Serialize;

use crate::error::{ensure, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointCloud2D {
    pub points: Vec<(f64, f64)>,
}

impl PointCloud2D {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        ensure!(
            points.iter().all(|(x, y)| x.is_finite() && y.is_finite()),
            Data,
            "point coordinates must be finite"
        );
        Ok(PointCloud2D { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `½|det(t₁ t₂ t₃)|` with `t_l = (1, x_l, y_l)`.
pub fn triangle_area(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    0.5 * ((b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1)).abs()
}

/// `C(n, 3)`.
pub fn triangle_count(n: u64) -> u64 {
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

/// Median triangle area; an even count averages the two central values.
pub fn oja_scale(points: &[(f64, f64)]) -> Result<f64> {
    let n = points.len();
    ensure!(n >= 3, Input, "need at least 3 points, got {n}");
    let mut areas = Vec::with_capacity(triangle_count(n as u64) as usize);
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                areas.push(triangle_area(points[i], points[j], points[k]));
            }
        }
    }
    Ok(median_in_place(&mut areas))
}

pub(crate) fn median_in_place(v: &mut [f64]) -> f64 {
    let m = v.len();
    let (_, hi, _) = v.select_nth_unstable_by(m / 2, |a, b| a.total_cmp(b));
    let hi = *hi;
    if m % 2 == 1 {
        hi
    } else {
        let lo = v[..m / 2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}
