//! End-to-end fits, simulation studies and per-file batch runs.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{analytic_measures, sample, CopulaSpec, Family};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::io;
use crate::measures::{default_grid, posterior_measures, PosteriorMeasures};
use crate::sampler::{derive_seed, run_chain, split_rhat, ChainConfig, PosteriorSample, PriorSpec};
use crate::tail::{marginal_threshold, oracle_threshold, to_exponential_margins, PolarSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdScheme {
    /// Above the `τ` quantile in at least one margin.
    #[default]
    Marginal,
    /// `C0 / g(w)` under the true gauge, with as many exceedances as the
    /// marginal scheme gives on the same data.
    Oracle,
}

/// Settings shared by every fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub tau: f64,
    pub scheme: ThresholdScheme,
    pub min_exceedances: usize,
    pub chain: ChainConfig,
    pub prior: PriorSpec,
}

impl Default for FitConfig {
    fn default() -> FitConfig {
        FitConfig {
            tau: 0.75,
            scheme: ThresholdScheme::Marginal,
            min_exceedances: 10,
            chain: ChainConfig::default(),
            prior: PriorSpec::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub polar: PolarSample,
    pub sample: PosteriorSample,
    pub measures: PosteriorMeasures,
    pub rhat_alpha: Option<f64>,
    pub rhat_eta: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct FitReport<'a> {
    n_total: usize,
    n_exceed: usize,
    tau: f64,
    scheme: ThresholdScheme,
    rhat_alpha: Option<f64>,
    rhat_eta: Option<f64>,
    summary: &'a crate::measures::PosteriorSummary,
    diagnostics: &'a [crate::sampler::ChainDiagnostics],
}

/// Rank transform, threshold, sample and summarize one dataset.
///
/// The oracle scheme needs the true copula. When `out` is given, the polar
/// data, draws, measures and a JSON summary are written there.
pub fn fit_dataset(
    points: &[Point],
    config: &FitConfig,
    truth: Option<&CopulaSpec>,
    out: Option<&Path>,
) -> Result<FitResult> {
    let exp = to_exponential_margins(points).map_err(|e| e.at("rank transform"))?;
    let (marginal, _) = marginal_threshold(&exp, config.tau).map_err(|e| e.at("threshold"))?;
    let polar = match config.scheme {
        ThresholdScheme::Marginal => marginal,
        ThresholdScheme::Oracle => {
            let spec = truth.ok_or_else(|| {
                Error::Config("the oracle threshold needs the true copula".into()).at("threshold")
            })?;
            let n_target = marginal.n_exceed.max(1);
            oracle_threshold(&exp, config.tau, |x| spec.gauge(x), n_target)
                .map_err(|e| e.at("threshold"))?
                .0
        }
    };
    if polar.n_exceed < config.min_exceedances {
        return Err(Error::Domain(format!(
            "{} exceedances, at least {} required",
            polar.n_exceed, config.min_exceedances
        ))
        .at("threshold"));
    }
    let data = polar.exceedances().map_err(|e| e.at("threshold"))?;
    let sample = run_chain(&data, &config.prior, &config.chain).map_err(|e| e.at("sampling"))?;
    let grid = default_grid();
    let measures = posterior_measures(&sample, &grid, &grid).map_err(|e| e.at("summary"))?;
    let etas: Vec<f64> = measures.per_draw.iter().map(|m| m.eta).collect();
    let mut eta_chains = vec![Vec::new(); sample.chain_count()];
    for (d, e) in sample.draws.iter().zip(&etas) {
        eta_chains[d.chain].push(*e);
    }
    let rhat_alpha = split_rhat(&sample.by_chain(|d| d.alpha));
    let rhat_eta = split_rhat(&eta_chains);

    let result = FitResult {
        polar,
        sample,
        measures,
        rhat_alpha,
        rhat_eta,
    };
    if let Some(dir) = out {
        write_fit(dir, config, &result).map_err(|e| e.at("write"))?;
    }
    Ok(result)
}

fn write_fit(dir: &Path, config: &FitConfig, fit: &FitResult) -> Result<()> {
    io::write_polar(&dir.join("polar.csv"), &fit.polar)?;
    io::write_draws(&dir.join("draws.csv"), &fit.sample, &fit.measures)?;
    io::write_measure_medians(&dir.join("measures.csv"), &fit.measures.summary)?;
    io::write_json(&dir.join("config.json"), config)?;
    io::write_json(
        &dir.join("summary.json"),
        &FitReport {
            n_total: fit.polar.n_total,
            n_exceed: fit.polar.n_exceed,
            tau: config.tau,
            scheme: config.scheme,
            rhat_alpha: fit.rhat_alpha,
            rhat_eta: fit.rhat_eta,
            summary: &fit.measures.summary,
            diagnostics: &fit.sample.diagnostics,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub family: Family,
    pub dependence: f64,
}

pub const DEFAULT_DEPENDENCE: [f64; 5] = [0.3, 0.4, 0.5, 0.6, 0.7];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub scenarios: Vec<Scenario>,
    pub asymmetry: (f64, f64),
    pub replicates: usize,
    pub n: usize,
    pub fit: FitConfig,
    /// Where the report files go; nothing is written when absent. Left out
    /// of the echoed config so reports do not depend on their location.
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
    /// Also keep every replicate's fit artifacts under `fits/`.
    pub save_fits: bool,
    pub seed: u64,
}

impl Default for StudyConfig {
    fn default() -> StudyConfig {
        StudyConfig {
            scenarios: StudyConfig::grid(&Family::ALL, &DEFAULT_DEPENDENCE),
            asymmetry: crate::copula::DEFAULT_ASYMMETRY,
            replicates: 10,
            n: 5000,
            fit: FitConfig::default(),
            output_dir: None,
            save_fits: false,
            seed: 1,
        }
    }
}

impl StudyConfig {
    /// Every family crossed with every dependence value.
    pub fn grid(families: &[Family], dependence: &[f64]) -> Vec<Scenario> {
        families
            .iter()
            .flat_map(|&family| {
                dependence.iter().map(move |&dependence| Scenario { family, dependence })
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.n < 2 {
            return Err(Error::Config("datasets need at least 2 observations".into()));
        }
        if self.scenarios.is_empty() {
            return Err(Error::Config("no scenarios to run".into()));
        }
        for s in &self.scenarios {
            self.spec(s)?;
        }
        self.fit.chain.validate()?;
        self.fit.prior.validate()
    }

    fn spec(&self, s: &Scenario) -> Result<CopulaSpec> {
        let spec = CopulaSpec::new(s.family, s.dependence)?;
        if s.family == Family::AsymmetricLogistic {
            spec.with_asymmetry(self.asymmetry.0, self.asymmetry.1)
        } else {
            Ok(spec)
        }
    }
}

/// Seed of one dataset; independent of which other scenarios run.
fn dataset_seed(master: u64, s: &Scenario, replicate: usize) -> u64 {
    let family = Family::ALL.iter().position(|&f| f == s.family).unwrap_or(0) as u64;
    let dep = (s.dependence * 1e6).round() as u64;
    derive_seed(derive_seed(derive_seed(master, family), dep), replicate as u64)
}

/// One fitted replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub family: Family,
    pub dependence: f64,
    pub replicate: usize,
    pub seed: u64,
    pub n_exceed: usize,
    pub eta_true: f64,
    pub eta_median: f64,
    pub eta_lower: f64,
    pub eta_upper: f64,
    pub eta_covered: bool,
    pub p_ad: f64,
    pub alpha_median: f64,
    /// Grid mean of squared `λ` error of the pointwise posterior median.
    pub ise_lambda: f64,
    pub ise_tau1: f64,
    pub rhat_alpha: Option<f64>,
    pub rhat_eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub family: Family,
    pub dependence: f64,
    pub replicate: usize,
    pub seed: u64,
    pub error: String,
}

/// Aggregates over the replicates of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub family: Family,
    pub dependence: f64,
    pub fitted: usize,
    pub failed: usize,
    /// Replicates whose posterior median of `η` is exactly 1.
    pub ad_count: usize,
    pub eta_true: f64,
    pub mean_eta_median: f64,
    pub rmse_eta: f64,
    pub rmise_lambda: f64,
    pub rmise_tau1: f64,
    pub eta_coverage: f64,
    pub mean_p_ad: f64,
    pub mean_n_exceed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub replicates: Vec<ReplicateRow>,
    pub scenarios: Vec<ScenarioRow>,
    pub failures: Vec<FailureRow>,
}

/// `sqrt(mean (estimate - truth)^2)`.
pub fn rmse(estimates: &[f64], truth: f64) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::Domain("RMSE of no estimates".into()));
    }
    let mse = estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / estimates.len() as f64;
    Ok(mse.sqrt())
}

/// Grid mean of squared errors of one curve.
pub fn integrated_square_error(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::GridMismatch {
            expected: truth.len(),
            got: estimate.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Domain("integrated error over an empty grid".into()));
    }
    let sum: f64 = estimate.iter().zip(truth).map(|(e, t)| (e - t).powi(2)).sum();
    Ok(sum / truth.len() as f64)
}

/// `sqrt(mean over datasets of the grid-mean squared error)`.
pub fn rmise(estimates: &[Vec<f64>], truth: &[f64]) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::Domain("RMISE of no estimates".into()));
    }
    let mut total = 0.0;
    for e in estimates {
        total += integrated_square_error(e, truth)?;
    }
    Ok((total / estimates.len() as f64).sqrt())
}

fn run_replicate(config: &StudyConfig, scenario: &Scenario, replicate: usize) -> Result<ReplicateRow> {
    let spec = config.spec(scenario)?;
    let seed = dataset_seed(config.seed, scenario, replicate);
    let points = sample(&spec, config.n, derive_seed(seed, 0)).map_err(|e| e.at("simulate"))?;
    let mut fit_config = config.fit.clone();
    fit_config.chain.seed = derive_seed(seed, 1);
    let out = match (&config.output_dir, config.save_fits) {
        (Some(dir), true) => Some(dir.join("fits").join(format!(
            "{}_{}_{:03}",
            scenario.family, scenario.dependence, replicate
        ))),
        _ => None,
    };
    let fit = fit_dataset(&points, &fit_config, Some(&spec), out.as_deref())?;

    let s = &fit.measures.summary;
    let truth = analytic_measures(&spec, &s.omega_grid, &s.delta_grid);
    Ok(ReplicateRow {
        family: scenario.family,
        dependence: scenario.dependence,
        replicate,
        seed,
        n_exceed: fit.polar.n_exceed,
        eta_true: truth.eta,
        eta_median: s.eta_median,
        eta_lower: s.eta_interval.0,
        eta_upper: s.eta_interval.1,
        eta_covered: s.eta_interval.0 <= truth.eta && truth.eta <= s.eta_interval.1,
        p_ad: s.p_ad,
        alpha_median: s.alpha_median,
        ise_lambda: integrated_square_error(&s.lambda_median, &truth.lambda)?,
        ise_tau1: integrated_square_error(&s.tau1_median, &truth.tau1)?,
        rhat_alpha: fit.rhat_alpha,
        rhat_eta: fit.rhat_eta,
    })
}

/// Aggregates replicate rows per scenario, in scenario order.
pub fn scenario_table(scenarios: &[Scenario], rows: &[ReplicateRow], failures: &[FailureRow]) -> Vec<ScenarioRow> {
    scenarios
        .iter()
        .map(|sc| {
            let mine: Vec<&ReplicateRow> = rows
                .iter()
                .filter(|r| r.family == sc.family && r.dependence == sc.dependence)
                .collect();
            let failed = failures
                .iter()
                .filter(|f| f.family == sc.family && f.dependence == sc.dependence)
                .count();
            let k = mine.len() as f64;
            let mean = |f: fn(&ReplicateRow) -> f64| mine.iter().map(|r| f(r)).sum::<f64>() / k;
            let eta_true = mine.first().map_or(f64::NAN, |r| r.eta_true);
            ScenarioRow {
                family: sc.family,
                dependence: sc.dependence,
                fitted: mine.len(),
                failed,
                ad_count: mine.iter().filter(|r| r.eta_median == 1.0).count(),
                eta_true,
                mean_eta_median: mean(|r| r.eta_median),
                rmse_eta: mean(|r| (r.eta_median - r.eta_true).powi(2)).sqrt(),
                rmise_lambda: mean(|r| r.ise_lambda).sqrt(),
                rmise_tau1: mean(|r| r.ise_tau1).sqrt(),
                eta_coverage: mean(|r| r.eta_covered as u8 as f64),
                mean_p_ad: mean(|r| r.p_ad),
                mean_n_exceed: mean(|r| r.n_exceed as f64),
            }
        })
        .collect()
}

/// Simulates, fits and scores every replicate of every scenario. Failed
/// replicates are logged and skipped.
pub fn run_study(config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let jobs: Vec<(Scenario, usize)> = config
        .scenarios
        .iter()
        .flat_map(|&s| (0..config.replicates).map(move |r| (s, r)))
        .collect();
    let outcomes: Vec<Result<ReplicateRow>> = jobs
        .par_iter()
        .map(|(s, r)| run_replicate(config, s, *r))
        .collect();

    let mut replicates = Vec::new();
    let mut failures = Vec::new();
    for ((s, r), outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(row) => replicates.push(row),
            Err(e) => failures.push(FailureRow {
                family: s.family,
                dependence: s.dependence,
                replicate: *r,
                seed: dataset_seed(config.seed, s, *r),
                error: e.to_string(),
            }),
        }
    }
    let scenarios = scenario_table(&config.scenarios, &replicates, &failures);
    let report = StudyReport {
        replicates,
        scenarios,
        failures,
    };
    if let Some(dir) = &config.output_dir {
        write_study(dir, config, &report)?;
    }
    Ok(report)
}

pub const REPORT_FILES: [&str; 5] = [
    "config.json",
    "replicates.csv",
    "scenarios.csv",
    "failures.csv",
    "summary.json",
];

pub fn write_study(dir: &Path, config: &StudyConfig, report: &StudyReport) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    io::write_json(&dir.join("config.json"), config)?;
    io::write_rows(&dir.join("replicates.csv"), &report.replicates)?;
    io::write_rows(&dir.join("scenarios.csv"), &report.scenarios)?;
    write_failures(&dir.join("failures.csv"), &report.failures)?;
    io::write_json(&dir.join("summary.json"), &report.scenarios)
}

fn write_failures(path: &Path, failures: &[FailureRow]) -> Result<()> {
    if failures.is_empty() {
        fs::write(path, "family,dependence,replicate,seed,error\n").map_err(|e| Error::io(path, e))
    } else {
        io::write_rows(path, failures)
    }
}

/// Reads `replicates.csv` and `failures.csv` from a study directory and
/// rebuilds the scenario table.
pub fn report_from_dir(dir: &Path) -> Result<StudyReport> {
    let read = |name: &str| -> Result<csv::Reader<fs::File>> {
        let path = dir.join(name);
        let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        Ok(csv::Reader::from_reader(file))
    };
    let replicates: Vec<ReplicateRow> = read("replicates.csv")?
        .deserialize()
        .collect::<std::result::Result<_, _>>()?;
    let failures: Vec<FailureRow> = read("failures.csv")?
        .deserialize()
        .collect::<std::result::Result<_, _>>()?;
    let mut scenarios: Vec<Scenario> = Vec::new();
    for r in replicates.iter().map(|r| (r.family, r.dependence)).chain(failures.iter().map(|f| (f.family, f.dependence))) {
        let s = Scenario {
            family: r.0,
            dependence: r.1,
        };
        if !scenarios.contains(&s) {
            scenarios.push(s);
        }
    }
    let scenarios = scenario_table(&scenarios, &replicates, &failures);
    Ok(StudyReport {
        replicates,
        scenarios,
        failures,
    })
}

/// Summary line of one file in a batch run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub file: String,
    pub status: String,
    pub n_total: Option<usize>,
    pub n_exceed: Option<usize>,
    pub eta_median: Option<f64>,
    pub eta_lower: Option<f64>,
    pub eta_upper: Option<f64>,
    pub p_ad: Option<f64>,
}

/// Fits every `*.csv` in `input` independently with the same settings.
pub fn run_batch(input: &Path, config: &FitConfig, output: &Path) -> Result<Vec<BatchRow>> {
    let mut files: Vec<PathBuf> = fs::read_dir(input)
        .map_err(|e| Error::io(input, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
        .collect();
    files.sort();
    let rows: Vec<BatchRow> = files
        .par_iter()
        .map(|path| {
            let stem = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            let fit = io::read_points(path)
                .map_err(|e| e.at("read"))
                .and_then(|points| fit_dataset(&points, config, None, Some(&output.join(&stem))));
            match fit {
                Ok(fit) => {
                    let s = &fit.measures.summary;
                    BatchRow {
                        file: stem,
                        status: "ok".into(),
                        n_total: Some(fit.polar.n_total),
                        n_exceed: Some(fit.polar.n_exceed),
                        eta_median: Some(s.eta_median),
                        eta_lower: Some(s.eta_interval.0),
                        eta_upper: Some(s.eta_interval.1),
                        p_ad: Some(s.p_ad),
                    }
                }
                Err(e) => BatchRow {
                    file: stem,
                    status: e.to_string(),
                    n_total: None,
                    n_exceed: None,
                    eta_median: None,
                    eta_lower: None,
                    eta_upper: None,
                    p_ad: None,
                },
            }
        })
        .collect();
    io::write_rows(&output.join("batch.csv"), &rows)?;
    Ok(rows)
}
