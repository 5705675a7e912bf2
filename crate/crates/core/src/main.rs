use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use limitset::copula::{self, CopulaSpec, Family};
use limitset::error::{Error, Result};
use limitset::io;
use limitset::measures::{default_grid, dependence_summary};
use limitset::study::{self, FitConfig, StudyConfig, ThresholdScheme};
use limitset::{build_spline, SplineParams};

#[derive(Parser)]
#[command(name = "limitset", version, about = "Limit-set estimation of bivariate extremal dependence")]
struct Cli {
    /// Root for relative output paths.
    #[arg(long, env = "LIMITSET_OUTPUT_ROOT", global = true)]
    output_root: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a dataset with standard exponential margins.
    Simulate(SimulateArgs),
    /// Fit one dataset, or every CSV in a directory.
    Fit(FitArgs),
    /// Run a simulation study.
    Study(StudyArgs),
    /// Dependence measures of spline parameter sets.
    Measures(MeasuresArgs),
    /// Rebuild and print the scenario table of a finished study.
    Report(ReportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    family: Family,
    #[arg(long)]
    dependence: f64,
    /// Asymmetry weights of the asymmetric logistic.
    #[arg(long, num_args = 2, value_names = ["THETA1", "THETA2"])]
    asymmetry: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// CSV path; the spec is echoed next to it as JSON.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ChainArgs {
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_enum)]
    scheme: Option<ThresholdScheme>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ChainArgs {
    fn apply(&self, fit: &mut FitConfig) {
        if let Some(v) = self.iterations {
            fit.chain.iterations = v;
        }
        if let Some(v) = self.burn_in {
            fit.chain.burn_in = v;
        }
        if let Some(v) = self.chains {
            fit.chain.chains = v;
        }
        if let Some(v) = self.tau {
            fit.tau = v;
        }
        if let Some(v) = self.scheme {
            fit.scheme = v;
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Two-column CSV, or a directory of them for batch mode.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// JSON fit configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    chain: ChainArgs,
    /// True copula, needed by the oracle threshold.
    #[arg(long, requires = "dependence")]
    family: Option<Family>,
    #[arg(long)]
    dependence: Option<f64>,
    /// Also write per-draw measure curves, keeping every N-th draw.
    #[arg(long)]
    per_draw_thin: Option<usize>,
}

#[derive(Args)]
struct StudyArgs {
    /// JSON study configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    families: Option<Vec<Family>>,
    #[arg(long, value_delimiter = ',')]
    dependence: Option<Vec<f64>>,
    #[arg(long)]
    replicates: Option<usize>,
    /// 100 replicates per scenario.
    #[arg(long, conflicts_with = "replicates")]
    full_scale: bool,
    #[arg(long)]
    n: Option<usize>,
    /// Datasets of 600 observations.
    #[arg(long, conflicts_with = "n")]
    small_sample: bool,
    #[command(flatten)]
    chain: ChainArgs,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Keep every replicate's fit artifacts.
    #[arg(long)]
    save_fits: bool,
}

#[derive(Args)]
struct MeasuresArgs {
    /// Spline parameters as a JSON object or a CSV with columns p02..p61.
    #[arg(long)]
    spline: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory written by `study`.
    #[arg(long)]
    study: PathBuf,
}

fn resolve(root: &Option<PathBuf>, path: &Path) -> PathBuf {
    match root {
        Some(root) if path.is_relative() => root.join(path),
        _ => path.to_path_buf(),
    }
}

fn simulate(args: &SimulateArgs, root: &Option<PathBuf>) -> Result<()> {
    let mut spec = CopulaSpec::new(args.family, args.dependence)?;
    if let Some(a) = &args.asymmetry {
        spec = spec.with_asymmetry(a[0], a[1])?;
    }
    let points = copula::sample(&spec, args.n, args.seed)?;
    let out = resolve(root, &args.output);
    io::write_points(&out, &points)?;

    #[derive(Serialize)]
    struct Sidecar<'a> {
        spec: &'a CopulaSpec,
        n: usize,
        seed: u64,
    }
    io::write_json(
        &out.with_extension("json"),
        &Sidecar {
            spec: &spec,
            n: args.n,
            seed: args.seed,
        },
    )?;
    println!("wrote {} observations to {}", points.len(), out.display());
    Ok(())
}

fn fit(args: &FitArgs, root: &Option<PathBuf>) -> Result<()> {
    let mut config: FitConfig = match &args.config {
        Some(path) => io::read_json(path)?,
        None => FitConfig::default(),
    };
    args.chain.apply(&mut config);
    if let Some(seed) = args.chain.seed {
        config.chain.seed = seed;
    }
    let truth = match (args.family, args.dependence) {
        (Some(f), Some(d)) => Some(CopulaSpec::new(f, d)?),
        _ => None,
    };
    let out = resolve(root, &args.output);

    if args.input.is_dir() {
        let rows = study::run_batch(&args.input, &config, &out)?;
        let failed = rows.iter().filter(|r| r.status != "ok").count();
        for r in &rows {
            match r.eta_median {
                Some(eta) => println!("{}: median eta {eta:.4}, P(AD) {:.3}", r.file, r.p_ad.unwrap_or(f64::NAN)),
                None => println!("{}: {}", r.file, r.status),
            }
        }
        if failed > 0 {
            return Err(Error::Domain(format!("{failed} of {} files failed", rows.len())));
        }
        return Ok(());
    }

    let points = io::read_points(&args.input).map_err(|e| e.at("read"))?;
    let result = study::fit_dataset(&points, &config, truth.as_ref(), Some(&out))?;
    if let Some(thin) = args.per_draw_thin {
        io::write_measure_draws(&out.join("measures_draws.csv"), &result.measures, thin)?;
    }
    let s = &result.measures.summary;
    println!(
        "{} of {} points exceed; median eta {:.4} (95% {:.4}-{:.4}); P(AD) {:.3}",
        result.polar.n_exceed, result.polar.n_total, s.eta_median, s.eta_interval.0, s.eta_interval.1, s.p_ad
    );
    println!("results in {}", out.display());
    Ok(())
}

fn run_study(args: &StudyArgs, root: &Option<PathBuf>) -> Result<()> {
    let mut config: StudyConfig = match &args.config {
        Some(path) => io::read_json(path)?,
        None => StudyConfig::default(),
    };
    if args.families.is_some() || args.dependence.is_some() {
        let families = args.families.clone().unwrap_or_else(|| Family::ALL.to_vec());
        let dependence = args
            .dependence
            .clone()
            .unwrap_or_else(|| study::DEFAULT_DEPENDENCE.to_vec());
        config.scenarios = StudyConfig::grid(&families, &dependence);
    }
    if let Some(r) = args.replicates {
        config.replicates = r;
    }
    if args.full_scale {
        config.replicates = 100;
    }
    if let Some(n) = args.n {
        config.n = n;
    }
    if args.small_sample {
        config.n = 600;
    }
    args.chain.apply(&mut config.fit);
    if let Some(seed) = args.chain.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.output {
        config.output_dir = Some(resolve(root, out));
    }
    config.save_fits |= args.save_fits;

    let report = study::run_study(&config)?;
    print_scenarios(&report.scenarios);
    for f in &report.failures {
        eprintln!("failed: {} {} replicate {}: {}", f.family, f.dependence, f.replicate, f.error);
    }
    if let Some(dir) = &config.output_dir {
        println!("report in {}", dir.display());
    }
    Ok(())
}

fn print_scenarios(rows: &[study::ScenarioRow]) {
    println!(
        "{:<20} {:>5} {:>6} {:>6} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "family", "dep", "fitted", "AD", "eta", "true", "rmse", "rmise_l", "rmise_t1", "cover"
    );
    for r in rows {
        println!(
            "{:<20} {:>5.2} {:>6} {:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.2}",
            r.family.name(),
            r.dependence,
            r.fitted,
            r.ad_count,
            r.mean_eta_median,
            r.eta_true,
            r.rmse_eta,
            r.rmise_lambda,
            r.rmise_tau1,
            r.eta_coverage
        );
    }
}

fn measures(args: &MeasuresArgs, root: &Option<PathBuf>) -> Result<()> {
    let splines: Vec<SplineParams> = match args.spline.extension().and_then(|e| e.to_str()) {
        Some("csv") => io::read_splines(&args.spline)?,
        _ => vec![io::read_json(&args.spline)?],
    };
    let grid = default_grid();
    let mut rows = Vec::new();
    for (i, params) in splines.iter().enumerate() {
        let spline = build_spline(*params)?;
        let m = dependence_summary(&spline, &grid, &grid);
        println!(
            "spline {i}: eta {:.6}, lambda(0.5) {:.6}, AD {}",
            m.eta,
            m.lambda[49],
            m.ad_indicator
        );
        rows.push((i, "eta", f64::NAN, m.eta));
        for (name, values) in [("lambda", &m.lambda), ("tau1", &m.tau1), ("tau2", &m.tau2)] {
            rows.extend(grid.iter().zip(values).map(|(&g, &v)| (i, name, g, v)));
        }
    }
    if let Some(out) = &args.output {
        #[derive(Serialize)]
        struct Row {
            spline: usize,
            measure: &'static str,
            grid: f64,
            value: f64,
        }
        let rows: Vec<Row> = rows
            .into_iter()
            .map(|(spline, measure, grid, value)| Row {
                spline,
                measure,
                grid,
                value,
            })
            .collect();
        io::write_rows(&resolve(root, out), &rows)?;
    }
    Ok(())
}

fn report(args: &ReportArgs, root: &Option<PathBuf>) -> Result<()> {
    let dir = resolve(root, &args.study);
    let report = study::report_from_dir(&dir)?;
    print_scenarios(&report.scenarios);
    if !report.failures.is_empty() {
        println!("{} failed replicates", report.failures.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let root = &cli.output_root;
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(a, root),
        Command::Fit(a) => fit(a, root),
        Command::Study(a) => run_study(a, root),
        Command::Measures(a) => measures(a, root),
        Command::Report(a) => report(a, root),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
