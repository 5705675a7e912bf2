//! Acceptance criteria, run in order with one PASS/FAIL line each.
//!
//! All criteria run inside a single test so the runtime limits are measured
//! without other tests competing for the CPU.

mod common;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use common::{random_valid, DenseBoundary};
use limitset::copula::Family;
use limitset::geometry::{build_spline, Param, Point, SplineParams};
use limitset::likelihood::{gamma_cdf, ln_gamma, truncated_gamma_log_density};
use limitset::measures::{default_grid, eta, lambda, tau1, tau2};
use limitset::sampler::{run_prior_chain, ChainConfig, Draw, PosteriorSample, PriorSpec};
use limitset::study::{run_study, Scenario, StudyConfig, StudyReport, ThresholdScheme, REPORT_FILES};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

/// Written straight to stdout so the lines show up without `--nocapture`.
fn report(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(started: Instant, limit: Duration) -> Result<(), String> {
    let took = started.elapsed();
    ensure(took < limit, || format!("took {took:.1?}, limit {limit:?}"))
}

fn exact_geometry() -> Outcome {
    let started = Instant::now();
    let grid = default_grid();
    for gamma in [0.3, 0.5, 0.7] {
        let spline = build_spline(SplineParams::logistic_shape(gamma)).map_err(|e| e.to_string())?;
        let e = eta(&spline);
        ensure(e == 1.0, || format!("gamma {gamma}: eta = {e}"))?;
        for &w in &grid {
            let l = lambda(&spline, w);
            let want = w.max(1.0 - w);
            ensure((l - want).abs() <= 1e-10, || format!("gamma {gamma}: lambda({w}) = {l}"))?;
        }
    }
    let spline = build_spline(SplineParams::logistic_shape(0.5)).unwrap();
    let t = tau1(&spline, 0.25);
    ensure((t - 4.0 / 7.0).abs() <= 1e-10, || format!("tau1(0.25) = {t}"))?;
    within_time(started, Duration::from_secs(1))?;
    Ok(format!("3 splines, tau1(0.25) = {t:.12}, {:.1?}", started.elapsed()))
}

const PROBES: [f64; 6] = [0.01, 0.2, 0.4, 0.5, 0.73, 0.99];

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let params = random_valid(&mut rng);
        let spline = build_spline(params).map_err(|e| e.to_string())?;
        let dense = DenseBoundary::new(&spline);
        let mut pairs = vec![("eta", 0.0, eta(&spline), dense.eta())];
        for x in PROBES {
            pairs.push(("lambda", x, lambda(&spline, x), dense.lambda(x)));
            pairs.push(("tau1", x, tau1(&spline, x), dense.tau1(x)));
            pairs.push(("tau2", x, tau2(&spline, x), dense.tau2(x)));
        }
        for (name, x, got, want) in pairs {
            let err = (got - want).abs();
            worst = worst.max(err);
            ensure(err <= 1e-6, || format!("spline {i} {params:?}: {name}({x}) {got} vs {want}"))?;
        }

        let identity = (eta(&spline) - 1.0 / (2.0 * lambda(&spline, 0.5))).abs();
        ensure(identity <= 1e-10, || format!("spline {i}: eta identity off by {identity}"))?;
        for w in [0.05, 0.3, 0.5, 0.81] {
            let x = Point::new(w, 1.0 - w);
            let g = spline.gauge_value(x).map_err(|e| e.to_string())?;
            if !g.is_finite() {
                continue;
            }
            for c in [0.1, 2.5, 10.0] {
                let gc = spline.gauge_value(Point::new(c * x.x, c * x.y)).unwrap();
                // relative once the gauge exceeds 1; absolute below
                ensure((gc - c * g).abs() <= 1e-10 * (c * g).max(1.0), || {
                    format!("spline {i}: g({c} x) = {gc} vs {c} g(x) = {}", c * g)
                })?;
            }
        }
    }
    within_time(started, Duration::from_secs(60))?;
    Ok(format!("200 splines, worst gap {worst:.2e}, {:.1?}", started.elapsed()))
}

fn integer_shape_cdf(k: u32, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..k {
        term *= x / j as f64;
        sum += term;
    }
    1.0 - (-x).exp() * sum
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

fn likelihood_correctness() -> Outcome {
    let mut worst_cdf: f64 = 0.0;
    for k in 1..=10 {
        for &x in &[0.05, 0.5, 1.0, 3.0, k as f64, 8.0, 20.0, 45.0] {
            let got = gamma_cdf(x, k as f64, 1.0).map_err(|e| e.to_string())?;
            let err = (got - integer_shape_cdf(k, x)).abs();
            worst_cdf = worst_cdf.max(err);
            ensure(err <= 1e-12, || format!("gamma_cdf({x}; {k}) off by {err:e}"))?;
        }
    }
    let lga = ln_gamma(2.0);
    let hand = truncated_gamma_log_density(2.0, lga, 1.0, 3.0, 3f64.ln(), 2.0);
    ensure((hand + 1.0).abs() <= 1e-12, || format!("hand case {hand}"))?;

    let mut worst_mass: f64 = 0.0;
    for (alpha, rate, r0) in [(0.6, 1.0, 0.3), (2.0, 1.0, 2.0), (3.7, 0.8, 1.2), (1.4, 2.5, 4.0)] {
        let lga = ln_gamma(alpha);
        let f = |r: f64| truncated_gamma_log_density(alpha, lga, rate, r, r.ln(), r0).exp();
        let mass = simpson(f, r0, r0 + (80.0 + 10.0 * alpha) / rate, 400_000);
        worst_mass = worst_mass.max((mass - 1.0).abs());
        ensure((mass - 1.0).abs() <= 1e-8, || format!("alpha {alpha}: mass {mass}"))?;
    }
    Ok(format!(
        "cdf gap {worst_cdf:.1e}, hand case {hand:.15}, mass gap {worst_mass:.1e}"
    ))
}

fn ks_statistic(mut values: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn frequency(draws: &[&Draw], pred: impl Fn(&Draw) -> bool) -> f64 {
    draws.iter().filter(|d| pred(d)).count() as f64 / draws.len() as f64
}

fn prior_recovery() -> Outcome {
    let prior = PriorSpec::default();
    let config = ChainConfig {
        iterations: 101_000,
        burn_in: 1_000,
        chains: 2,
        seed: 42,
        ..ChainConfig::default()
    };

    // Likelihood and constraints off: the marginals are the mixture weights.
    let free: PosteriorSample = run_prior_chain(&prior, &config, false).map_err(|e| e.to_string())?;
    let all: Vec<&Draw> = free.draws.iter().collect();
    let mut worst_mass: f64 = 0.0;
    for param in Param::ALL {
        if param == Param::P31 {
            continue;
        }
        let m = prior.mixture(param, false);
        for (value, weight) in [(0.0, m.mass_zero), (1.0, m.mass_one)] {
            if weight == 0.0 {
                continue;
            }
            let f = frequency(&all, |d| d.params.get(param) == value);
            worst_mass = worst_mass.max((f - weight).abs());
            ensure((f - weight).abs() <= 0.01, || {
                format!("{} = {value}: {f:.4} vs {weight}", param.name())
            })?;
        }
    }
    let available: Vec<&Draw> = all
        .iter()
        .copied()
        .filter(|d| d.params.p21.max(d.params.p42) == 1.0)
        .collect();
    let f31 = frequency(&available, |d| d.params.p31 == 1.0);
    worst_mass = worst_mass.max((f31 - prior.p31_mass_one).abs());
    ensure((f31 - prior.p31_mass_one).abs() <= 0.01, || {
        format!("p31 = 1 | available: {f31:.4} vs {}", prior.p31_mass_one)
    })?;

    let mut worst_ks: f64 = 0.0;
    for param in Param::ALL {
        let values: Vec<f64> = all
            .iter()
            .map(|d| d.params.get(param))
            .filter(|&v| v != 0.0 && v != 1.0)
            .collect();
        let d = ks_statistic(values, |v| v);
        worst_ks = worst_ks.max(d);
        ensure(d <= 0.02, || format!("{} continuous part KS {d:.4}", param.name()))?;
    }
    let alpha_cdf = |a: f64| {
        let z = (a.ln() - prior.alpha_log_mean) / prior.alpha_log_sd;
        0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
    };
    let d = ks_statistic(all.iter().map(|d| d.alpha).collect(), alpha_cdf);
    worst_ks = worst_ks.max(d);
    ensure(d <= 0.02, || format!("alpha KS {d:.4}"))?;

    // Constraints on: compare with rejection sampling of the constrained prior.
    let constrained = run_prior_chain(&prior, &config, true).map_err(|e| e.to_string())?;
    let all: Vec<&Draw> = constrained.draws.iter().collect();
    let frozen = [
        ("p21 = 1", frequency(&all, |d| d.params.p21 == 1.0), 0.1745),
        ("p21 = 0", frequency(&all, |d| d.params.p21 == 0.0), 0.0525),
        ("p11 = 0", frequency(&all, |d| d.params.p11 == 0.0), 0.3517),
        ("p61 = 0", frequency(&all, |d| d.params.p61 == 0.0), 0.1),
    ];
    for (name, got, want) in frozen {
        ensure((got - want).abs() <= 0.01, || format!("constrained {name}: {got:.4} vs {want}"))?;
    }
    let available: Vec<&Draw> = all
        .iter()
        .copied()
        .filter(|d| d.params.p21.max(d.params.p42) == 1.0)
        .collect();
    let c31 = frequency(&available, |d| d.params.p31 == 1.0);
    ensure((c31 - 0.6435).abs() <= 0.01, || format!("constrained p31 = 1 | available: {c31:.4}"))?;

    Ok(format!(
        "2x10^5 sweeps, worst mass gap {worst_mass:.4}, worst KS {worst_ks:.4}, constrained p31|avail {c31:.4}"
    ))
}

fn desk_study(seed: u64, scheme: ThresholdScheme, scenarios: Vec<Scenario>, out: &Path) -> Result<StudyReport, String> {
    let mut config = StudyConfig {
        scenarios,
        replicates: 10,
        n: 5000,
        seed,
        output_dir: Some(out.to_path_buf()),
        ..StudyConfig::default()
    };
    config.fit.tau = 0.75;
    config.fit.scheme = scheme;
    config.fit.chain.iterations = 11_000;
    config.fit.chain.burn_in = 1_000;
    config.fit.chain.chains = 2;
    run_study(&config).map_err(|e| e.to_string())
}

fn table3_scenarios() -> Vec<Scenario> {
    [Family::Gaussian, Family::Logistic, Family::InvertedLogistic]
        .into_iter()
        .map(|family| Scenario {
            family,
            dependence: 0.5,
        })
        .collect()
}

const MASTER_SEED: u64 = 1;

fn table3(report: &StudyReport) -> Outcome {
    ensure(report.failures.is_empty(), || format!("failed replicates: {:?}", report.failures))?;
    let row = |f: Family| report.scenarios.iter().find(|r| r.family == f).unwrap();
    let gauss = row(Family::Gaussian);
    let logistic = row(Family::Logistic);
    let inverted = row(Family::InvertedLogistic);
    let summary = format!(
        "gaussian {}/10 AD, mean eta {:.4}; logistic {}/10 AD; inverted logistic {}/10 AD, mean eta {:.4}",
        gauss.ad_count, gauss.mean_eta_median, logistic.ad_count, inverted.ad_count, inverted.mean_eta_median
    );
    ensure(gauss.fitted == 10 && logistic.fitted == 10 && inverted.fitted == 10, || summary.clone())?;
    ensure(gauss.ad_count == 0, || summary.clone())?;
    ensure((gauss.mean_eta_median - 0.75).abs() <= 0.05, || summary.clone())?;
    ensure(logistic.ad_count >= 8, || summary.clone())?;
    ensure(inverted.ad_count == 0, || summary.clone())?;
    ensure((inverted.mean_eta_median - 0.5f64.sqrt()).abs() <= 0.05, || summary.clone())?;
    Ok(summary)
}

fn threshold_parity(marginal: &StudyReport, dir: &Path) -> Outcome {
    let scenarios = vec![Scenario {
        family: Family::Gaussian,
        dependence: 0.5,
    }];
    let oracle = desk_study(MASTER_SEED, ThresholdScheme::Oracle, scenarios, dir)?;
    ensure(oracle.failures.is_empty(), || format!("failed replicates: {:?}", oracle.failures))?;
    let m = marginal
        .scenarios
        .iter()
        .find(|r| r.family == Family::Gaussian)
        .unwrap();
    let o = &oracle.scenarios[0];
    let same_counts = oracle
        .replicates
        .iter()
        .zip(marginal.replicates.iter().filter(|r| r.family == Family::Gaussian))
        .all(|(a, b)| a.n_exceed == b.n_exceed);
    ensure(same_counts, || "oracle and marginal exceedance counts differ".into())?;
    let gap = (o.mean_eta_median - m.mean_eta_median).abs();
    let summary = format!(
        "marginal {:.4} vs oracle {:.4}, gap {gap:.4}",
        m.mean_eta_median, o.mean_eta_median
    );
    ensure(gap <= 0.05, || summary.clone())?;
    Ok(summary)
}

fn determinism(first: &Path, second: &Path) -> Outcome {
    desk_study(MASTER_SEED, ThresholdScheme::Marginal, table3_scenarios(), second)?;
    for name in REPORT_FILES {
        let a = fs::read(first.join(name)).map_err(|e| format!("{name}: {e}"))?;
        let b = fs::read(second.join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure(a == b, || format!("{name} differs between runs"))?;
    }
    Ok(format!("{} report files identical", REPORT_FILES.len()))
}

#[test]
fn acceptance_criteria() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("table3");
    let mut outcomes: Vec<(&str, Outcome)> = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let started = Instant::now();
        let outcome = f();
        let status = if outcome.is_ok() { "PASS" } else { "FAIL" };
        let detail = match &outcome {
            Ok(s) | Err(s) => s.clone(),
        };
        report(&format!(
            "[{status}] {name}: {detail} ({:.1?})",
            started.elapsed()
        ));
        outcomes.push((name, outcome));
    };

    run("criterion 1 exact geometry", &mut exact_geometry);
    run("criterion 2 oracle equivalence", &mut oracle_equivalence);
    run("criterion 3 likelihood correctness", &mut likelihood_correctness);
    run("criterion 4 prior recovery", &mut prior_recovery);

    let mut study: Option<StudyReport> = None;
    run("criterion 5 desk-scale AD counts", &mut || {
        let report = desk_study(MASTER_SEED, ThresholdScheme::Marginal, table3_scenarios(), &first)?;
        let outcome = table3(&report);
        study = Some(report);
        outcome
    });
    run("criterion 6 threshold parity", &mut || match &study {
        Some(report) => threshold_parity(report, &tmp.path().join("oracle")),
        None => Err("criterion 5 produced no report".into()),
    });
    run("criterion 7 determinism", &mut || {
        determinism(&first, &tmp.path().join("table3_again"))
    });

    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|(_, o)| o.is_err())
        .map(|(n, _)| *n)
        .collect();
    assert!(failed.is_empty(), "failed: {failed:?}");
}
