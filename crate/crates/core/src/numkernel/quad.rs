//! Gauss–Legendre quadrature with adaptive bisection.

const NODES: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_3,
    0.219_086_362_515_982,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// Ten-point Gauss–Legendre rule on `[a, b]`.
pub fn gl10(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for (x, w) in NODES.iter().zip(WEIGHTS) {
        s += w * (f(c - h * x) + f(c + h * x));
    }
    s * h
}

/// Adaptive integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = gl10(f, a, m);
        let right = gl10(f, m, b);
        if depth == 0 || (left + right - whole).abs() <= tol {
            return left + right;
        }
        rec(f, a, m, left, 0.5 * tol, depth - 1) + rec(f, m, b, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    rec(f, a, b, gl10(f, a, b), tol, 30)
}

/// Integrals of `f` over consecutive panels of `edges`, each refined
/// adaptively.
pub fn panel_integrals(f: &impl Fn(f64) -> f64, edges: &[f64], tol: f64) -> Vec<f64> {
    edges
        .windows(2)
        .map(|w| integrate(f, w[0], w[1], tol))
        .collect()
}
