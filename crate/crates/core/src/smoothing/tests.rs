use super::*;
use proptest::prelude::*;

/// Dense weighted least squares `min Σ k_i (r_i - a - b (X_i - x))²`, solved
/// per point through the 2×2 normal equations.
fn dense_oracle(x: &[f64], r: &[f64], eval: &[f64], h: f64, k: &Kernel, w: Option<&WeightFn>) -> Vec<f64> {
    eval.iter()
        .map(|&e| {
            let mut a = [[0.0; 2]; 2];
            let mut b = [0.0; 2];
            for (&xi, &ri) in x.iter().zip(r) {
                let kw = k.eval((xi - e) / h) * w.map_or(1.0, |w| w.eval(xi));
                let d = xi - e;
                a[0][0] += kw;
                a[0][1] += kw * d;
                a[1][1] += kw * d * d;
                b[0] += kw * ri;
                b[1] += kw * d * ri;
            }
            a[1][0] = a[0][1];
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            (b[0] * a[1][1] - a[0][1] * b[1]) / det
        })
        .collect()
}

fn small_sample() -> Sample {
    Sample::new(vec![0.1, 0.35, 0.4, 0.7, 0.9], vec![1.2, 0.7, 1.9, 1.4, 2.3]).unwrap()
}

fn sine_sample(n: usize) -> Sample {
    let x: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let y = x.iter().enumerate().map(|(i, &v)| (6.0 * v).sin() + 0.3 * ((i * 7919 % 13) as f64 / 13.0 - 0.5)).collect();
    Sample::new(x, y).unwrap()
}

#[test]
fn small_sample_matches_dense_solve() {
    let s = small_sample();
    let k = Kernel::epanechnikov();
    let got = fit_mean(&s, 0.5, &k, None).unwrap();
    let want = dense_oracle(s.x(), s.y(), s.x(), 0.5, &k, None);
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-12, "{g} vs {w}");
    }
}

#[test]
fn variance_matches_dense_solve_on_squared_residuals() {
    let s = small_sample();
    let k = Kernel::epanechnikov();
    let m = vec![1.0, 1.1, 1.3, 1.5, 1.8];
    let got = fit_variance(&s, &m, 0.5, &k, None).unwrap();
    let r2: Vec<f64> = s.y().iter().zip(&m).map(|(y, m)| (y - m).powi(2)).collect();
    let want = dense_oracle(s.x(), &r2, s.x(), 0.5, &k, None);
    let floor = variance_floor(s.y());
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w.max(floor)).abs() < 1e-12, "{g} vs {w}");
    }
}

#[test]
fn weighted_fit_matches_dense_solve() {
    let s = sine_sample(40);
    let k = Kernel::epanechnikov();
    let w = WeightFn::new(0.1, 0.9, 0.2).unwrap();
    let eval = [0.3, 0.5, 0.7];
    let got = local_linear_fit(s.x(), &eval, s.y(), 0.15, &k, Some(&w)).unwrap();
    let want = dense_oracle(s.x(), s.y(), &eval, 0.15, &k, Some(&w));
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-12);
    }
}

#[test]
fn unit_weight_is_a_no_op() {
    let s = sine_sample(50);
    let k = Kernel::epanechnikov();
    let w = WeightFn::covering(-1.0, 2.0);
    let plain = fit_mean(&s, 0.1, &k, None).unwrap();
    let weighted = fit_mean(&s, 0.1, &k, Some(&w)).unwrap();
    for (a, b) in plain.iter().zip(&weighted) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn constants_are_reproduced() {
    let s = sine_sample(30);
    let k = Kernel::epanechnikov();
    let c = Sample::new(s.x().to_vec(), vec![3.25; 30]).unwrap();
    for v in fit_mean(&c, 0.2, &k, None).unwrap() {
        assert!((v - 3.25).abs() < 1e-12);
    }
    // residuals all equal d
    let m: Vec<f64> = s.y().iter().map(|y| y - 0.4).collect();
    for v in fit_variance(&s, &m, 0.2, &k, None).unwrap() {
        assert!((v - 0.16).abs() < 1e-10);
    }
}

#[test]
fn zero_residuals_hit_the_floor() {
    let s = sine_sample(30);
    let k = Kernel::epanechnikov();
    let floor = variance_floor(s.y());
    assert!(floor > 0.0);
    for v in fit_variance(&s, s.y(), 0.2, &k, None).unwrap() {
        assert_eq!(v, floor);
    }
    assert_eq!(variance_floor(&[2.0; 8]), 1e-12);
}

#[test]
fn residual_identity_is_exact() {
    let s = sine_sample(30);
    let k = Kernel::epanechnikov();
    let bw = Bandwidths::new(0.2, 0.3, 0.1).unwrap();
    let f = fit(&s, bw, &k, None, None).unwrap();
    for i in 0..s.n() {
        assert_eq!(f.residuals[i], s.y()[i] - f.m_hat[i]);
    }
}

#[test]
fn isolated_point_is_degenerate() {
    let s = Sample::new(vec![0.0, 0.01, 0.02, 0.03, 5.0], vec![1.0; 5]).unwrap();
    let k = Kernel::epanechnikov();
    let err = local_linear_fit(s.x(), &[0.01, 2.5], s.y(), 0.1, &k, None).unwrap_err();
    assert!(matches!(err, Error::DegenerateNeighborhood { point: 1, .. }));
    // a data point always carries its own kernel weight
    let m = fit_mean(&s, 0.1, &k, None).unwrap();
    assert_eq!(m[4], 1.0);
}

#[test]
fn coincident_predictors_fall_back_to_local_mean() {
    // all predictors equal -> s0 s2 - s1² = 0 at every point
    let s = Sample::new(vec![0.5; 6], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
    let m = fit_mean(&s, 0.1, &Kernel::epanechnikov(), None).unwrap();
    for v in m {
        assert!((v - 3.5).abs() < 1e-12);
    }
}

#[test]
fn weighted_fit_outside_weight_support_uses_plain_fit() {
    let s = sine_sample(40);
    let k = Kernel::epanechnikov();
    let w = WeightFn::new(0.4, 0.6, 0.05).unwrap();
    let plain = fit_mean(&s, 0.1, &k, None).unwrap();
    let weighted = fit_mean(&s, 0.1, &k, Some(&w)).unwrap();
    // x_0 = 0.0125 is farther than h from the weight support
    assert_eq!(plain[0], weighted[0]);
    assert_ne!(plain[20], weighted[20]);
}

#[test]
fn cv_prefers_larger_bandwidth_on_ties() {
    let x: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
    let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
    let s = Sample::new(x, y.clone()).unwrap();
    let k = Kernel::epanechnikov();
    assert_eq!(cv_bandwidth(&s, &y, &k, &[0.1, 0.5, 1.0]).unwrap(), 1.0);
    assert_eq!(cv_bandwidth(&s, &y, &k, &[0.3]).unwrap(), 0.3);
}

#[test]
fn cv_skips_degenerate_grid_values() {
    let s = Sample::new(vec![0.0, 0.1, 0.2, 0.3, 1.0, 1.1], vec![1.0, 2.0, 1.5, 1.7, 3.0, 2.0]).unwrap();
    let k = Kernel::epanechnikov();
    assert_eq!(cv_bandwidth(&s, s.y(), &k, &[0.05, 0.08]), Err(Error::AllBandwidthsDegenerate));
    let h = cv_bandwidth(&s, s.y(), &k, &[0.05, 1.0, 2.0]).unwrap();
    assert!(h == 1.0 || h == 2.0);
    assert!(cv_bandwidth(&s, s.y(), &k, &[]).is_err());
    assert!(cv_bandwidth(&s, s.y(), &k, &[0.5, 0.2]).is_err());
}

#[test]
fn default_grid_spans_expected_fractions() {
    let s = sine_sample(40);
    let g = default_grid(&s);
    assert_eq!(g.len(), 20);
    let span = s.x_span();
    assert!((g[0] - 0.05 * span).abs() < 1e-12);
    assert!((g[19] - 0.5 * span).abs() < 1e-12);
    assert!(g.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn locality_of_compact_kernel() {
    let s = sine_sample(60);
    let k = Kernel::epanechnikov();
    let h = 0.1;
    let base = fit_mean(&s, h, &k, None).unwrap();
    let mut y = s.y().to_vec();
    y[59] += 100.0; // x = 0.9917
    let moved = fit_mean(&s.with_response(y).unwrap(), h, &k, None).unwrap();
    for i in 0..s.n() {
        if (s.x()[i] - s.x()[59]).abs() > h {
            assert!((base[i] - moved[i]).abs() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn affine_responses_are_reproduced(
        xs in prop::collection::vec(-5.0f64..5.0, 12..60),
        a in -10.0f64..10.0,
        b in -10.0f64..10.0,
        hfrac in 0.3f64..1.0,
    ) {
        let span = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - xs.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(span > 0.5);
        let y: Vec<f64> = xs.iter().map(|x| a + b * x).collect();
        let s = Sample::new(xs.clone(), y.clone()).unwrap();
        let h = hfrac * span;
        let fitted = fit_mean(&s, h, &Kernel::epanechnikov(), None).unwrap();
        for (f, t) in fitted.iter().zip(&y) {
            prop_assert!((f - t).abs() <= 1e-10 * t.abs().max(1.0));
        }
    }

    #[test]
    fn cv_choice_is_a_grid_member(seed in 0u64..1000) {
        let n = 30;
        let x: Vec<f64> = (0..n).map(|i| ((i as u64 * 2654435761 + seed) % 1000) as f64 / 1000.0).collect();
        let y: Vec<f64> = x.iter().map(|v| (5.0 * v).cos() + ((seed % 7) as f64) * 0.01 * v).collect();
        let s = Sample::new(x, y.clone()).unwrap();
        let grid = log_grid(0.08, 0.5, 7);
        if let Ok(h) = cv_bandwidth(&s, &y, &Kernel::epanechnikov(), &grid) {
            prop_assert!(grid.contains(&h));
        }
    }
}
