use limitset::geometry::{build_spline, SplineParams};
use limitset::likelihood::{gamma_cdf, gamma_q, ln_gamma, truncated_gamma_log_density, Exceedances, LikelihoodState};

fn integer_shape_cdf(k: u32, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..k {
        term *= x / j as f64;
        sum += term;
    }
    1.0 - (-x).exp() * sum
}

#[test]
fn cdf_matches_integer_shape_closed_forms() {
    for k in 1..=8 {
        for &x in &[0.01, 0.3, 1.0, 2.5, k as f64, k as f64 + 1.0, 7.5, 15.0, 40.0] {
            for rate in [0.5, 1.0, 2.0] {
                let got = gamma_cdf(x / rate, k as f64, rate).unwrap();
                let want = integer_shape_cdf(k, x);
                assert!((got - want).abs() <= 1e-12, "k={k} x={x}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn half_shape_is_error_function() {
    for &x in &[1e-4, 0.1, 0.9, 1.5, 3.0, 9.0, 30.0] {
        let got = gamma_cdf(x, 0.5, 1.0).unwrap();
        assert!((got - libm::erf(x.sqrt())).abs() <= 1e-13, "{x}");
        let q = gamma_q(0.5, x);
        assert!((q - libm::erfc(x.sqrt())).abs() <= 1e-13 * q.max(1e-300).max(1.0), "{x}");
    }
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

#[test]
fn truncated_density_integrates_to_one() {
    let cases = [
        (0.5, 1.0, 0.2),
        (1.0, 2.0, 1.0),
        (2.3, 0.7, 3.0),
        (5.0, 1.5, 0.5),
        (1.7, 1.0, 6.0),
        (12.0, 4.0, 2.0),
    ];
    for (alpha, rate, r0) in cases {
        let lga = ln_gamma(alpha);
        let density = |r: f64| truncated_gamma_log_density(alpha, lga, rate, r, r.ln(), r0).exp();
        // The tail beyond r0 + 80 / rate is below e^-60 relative to the mass.
        let upper = r0 + (80.0 + 10.0 * alpha) / rate;
        let total = simpson(density, r0 + 1e-300, upper, 400_000);
        assert!((total - 1.0).abs() <= 1e-8, "alpha={alpha} rate={rate} r0={r0}: {total}");
    }
}

#[test]
fn single_point_hand_case() {
    let lga = ln_gamma(2.0);
    let got = truncated_gamma_log_density(2.0, lga, 1.0, 3.0, 3f64.ln(), 2.0);
    assert!((got + 1.0).abs() <= 1e-12);
}

#[test]
fn state_agrees_with_per_point_sum() {
    let spline = build_spline(SplineParams::logistic_shape(0.3)).unwrap();
    let rows: Vec<(f64, f64, f64)> = (1..40)
        .map(|i| {
            let w = i as f64 / 40.0;
            (2.0 + 0.1 * i as f64, w, 1.5)
        })
        .collect();
    let data = Exceedances::new(rows.clone()).unwrap();
    let state = LikelihoodState::new(1.8, spline.clone(), &data).unwrap();
    let lga = ln_gamma(1.8);
    let want: f64 = rows
        .iter()
        .map(|&(r, w, r0)| truncated_gamma_log_density(1.8, lga, spline.gauge_at_angle(w), r, r.ln(), r0))
        .sum();
    assert!((state.log_likelihood(&data).unwrap() - want).abs() <= 1e-9);
}
