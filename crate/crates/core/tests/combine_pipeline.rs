use approx::{assert_abs_diff_eq, assert_relative_eq};

use confdist::cd::ConfDist;
use confdist::combiner::{
    combine, combine_weighted, weights_indicator, weights_kernel, CombinerSpec, KernelKind, Method,
    WeightVector,
};
use confdist::numkernel::special::norm_cdf;
use confdist::numkernel::DistFamily;
use confdist::studies::{odds_ratio_summary, Contingency2x2, StudySummary, ZeroCellPolicy};

fn summaries() -> Vec<StudySummary> {
    [(9.0, 12.0, 7.0, 17.0), (4.0, 10.0, 8.0, 6.0), (0.0, 11.0, 3.0, 9.0)]
        .iter()
        .enumerate()
        .map(|(i, &(a, b, c, d))| {
            let t = Contingency2x2::new(a, b, c, d).unwrap();
            odds_ratio_summary(&format!("s{i}"), &t, ZeroCellPolicy::HalfCorrection).unwrap()
        })
        .collect()
}

fn cds(s: &[StudySummary]) -> Vec<ConfDist> {
    s.iter().map(|x| x.to_cd().unwrap()).collect()
}

#[test]
fn odds_tables_to_an_matches_closed_form() {
    let s = summaries();
    let h = combine(&cds(&s), &CombinerSpec::new(Method::An)).unwrap();
    let p: Vec<f64> = s.iter().map(|x| 1.0 / (x.se * x.se)).collect();
    let total: f64 = p.iter().sum();
    let center = s.iter().zip(&p).map(|(x, w)| w * x.theta_hat).sum::<f64>() / total;
    for y in [-2.0, -0.5, 0.0, 0.3, 1.7] {
        assert_relative_eq!(
            h.cdf(y),
            norm_cdf(total.sqrt() * (y - center)),
            max_relative = 1e-12
        );
    }
}

#[test]
fn zero_weight_drops_a_study() {
    let all = cds(&summaries());
    let w = WeightVector::fixed(vec![1.0, 1.0, 0.0]).unwrap();
    let dropped = combine_weighted(&all, &w, DistFamily::DoubleExp).unwrap();
    let pair = combine(&all[..2], &CombinerSpec::new(Method::De)).unwrap();
    for y in [-1.0, 0.0, 0.4, 1.2] {
        assert_abs_diff_eq!(dropped.cdf(y), pair.cdf(y), epsilon = 1e-12);
    }
}

#[test]
fn adaptive_weights_ignore_a_distant_study() {
    let base = StudySummary::new("a", 0.6, 0.629, None).unwrap();
    let far = StudySummary::new("b", 0.6 + 10.0 * 0.629, 0.629, None).unwrap();
    let all = cds(&[base.clone(), base.clone(), far]);
    let twins = cds(&[base.clone(), base]);
    let reference = combine(&twins, &CombinerSpec::new(Method::De)).unwrap();
    for w in [
        weights_indicator(&all, 0.25).unwrap(),
        weights_kernel(&all, KernelKind::Rectangular, None).unwrap(),
    ] {
        let h = combine(&all, &CombinerSpec::new(Method::De).with_weights(w)).unwrap();
        assert_abs_diff_eq!(h.median().unwrap(), 0.6, epsilon = 1e-9);
        for y in [-0.5, 0.2, 0.6, 1.4] {
            assert_abs_diff_eq!(h.cdf(y), reference.cdf(y), epsilon = 1e-12);
        }
    }
}

#[test]
fn every_method_centers_identical_studies() {
    let s = StudySummary::new("x", 1.5, 0.4, None).unwrap().to_cd().unwrap();
    let all = vec![s.clone(), s.clone(), s];
    for m in [Method::Nm, Method::De, Method::An, Method::Prod] {
        let h = combine(&all, &CombinerSpec::new(m)).unwrap();
        assert_abs_diff_eq!(h.median().unwrap(), 1.5, epsilon = 1e-6);
    }
}
