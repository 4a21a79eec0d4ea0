//! `bcp`: command-line front end for betting-conformal.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 probe failure.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use betting_conformal::csv_io::{
    read_input, read_trace, step_summaries, write_experiment_rolling, write_experiment_summary, write_probe_report,
    write_probe_rows, write_step_summaries, write_trace, InputSeries,
};
use betting_conformal::experiments::{theorem_probe, Adversary, ChangepointExperiment, ForecasterKind, ProbeConfig};
use betting_conformal::forecasters::DEFAULT_DECAY;
use betting_conformal::{
    run_multi_horizon_ar, run_scores, run_stream, ConformalStream, Error, OnlineLinear, Persistence, StepTrace,
    StreamConfig, UpdaterSpec,
};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "bcp", version, about = "Parameter-free online conformal prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the synthetic changepoint regression experiment over many seeds.
    Changepoint(ChangepointArgs),
    /// Run one conformal stream over a CSV file.
    RunCsv(RunCsvArgs),
    /// Check the KT predictor's guarantees against an adversarial score stream.
    Probe(ProbeArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum UpdaterKind {
    Kt,
    Ons,
    Ogd,
    Sfogd,
    Fixed,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum RegressionKind {
    Ols,
    Wls,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum AdversaryKind {
    Flipper,
    Constant,
    Uniform,
    Bernoulli,
    RegimeSwitch,
    Unbounded,
}

#[derive(clap::Args, Debug)]
struct ChangepointArgs {
    /// Strategies to compare; repeat the flag for several. Defaults to
    /// kt, ons, ogd and sfogd.
    #[arg(long = "updater", value_enum)]
    updaters: Vec<UpdaterKind>,
    /// Learning rates for ogd and sfogd; each rate yields one method.
    #[arg(long = "eta", value_delimiter = ',')]
    etas: Vec<f64>,
    /// Radius for the fixed strategy.
    #[arg(long)]
    fixed_radius: Option<f64>,
    #[arg(long, default_value_t = 200)]
    seeds: usize,
    /// First seed; seeds run from here upward.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = RegressionKind::Ols)]
    forecaster: RegressionKind,
    /// Weight decay for wls.
    #[arg(long, default_value_t = DEFAULT_DECAY)]
    decay: f64,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Rolling window for coverage and width.
    #[arg(long, default_value_t = 100)]
    window: usize,
    /// Rolling window for the width standard deviation.
    #[arg(long, default_value_t = 10)]
    deviation_window: usize,
    #[arg(long, default_value_t = StreamConfig::DEFAULT_BURN_IN)]
    burn_in: usize,
    #[arg(long, default_value = "changepoint-out")]
    out_dir: PathBuf,
    /// Also write one trace file per seed and method.
    #[arg(long)]
    traces: bool,
}

#[derive(clap::Args, Debug)]
struct RunCsvArgs {
    /// CSV with header `t,y[,x1,...,xd]` or `t,score`.
    #[arg(long)]
    input: PathBuf,
    /// `persistence`, `ols`, `wls` or `arN` (for example `ar3`).
    #[arg(long, default_value = "persistence")]
    forecaster: String,
    /// Forecast horizon for `arN`; one radius per step ahead.
    #[arg(long, default_value_t = 1)]
    horizon: usize,
    /// Refit cadence of the `arN` model, in observations. Defaults to the horizon.
    #[arg(long)]
    refit_every: Option<usize>,
    /// Treat the `score` column as nonconformity scores.
    #[arg(long)]
    scores_only: bool,
    /// With `--scores-only` on a trace file: score each row against the
    /// radius recorded in its `radius` column, as a fixed-radius step.
    #[arg(long, requires = "scores_only")]
    replay_radii: bool,
    #[arg(long, value_enum, default_value_t = UpdaterKind::Kt)]
    updater: UpdaterKind,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    fixed_radius: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_DECAY)]
    decay: f64,
    /// Leading rows excluded from metrics.csv.
    #[arg(long, default_value_t = 0)]
    burn_in: usize,
    #[arg(long, default_value = "run-out")]
    out_dir: PathBuf,
}

#[derive(clap::Args, Debug)]
struct ProbeArgs {
    /// Score bound D.
    #[arg(long = "d", default_value_t = 1.0)]
    bound: f64,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Number of steps.
    #[arg(long = "t", default_value_t = 10_000)]
    steps: usize,
    #[arg(long, value_enum, default_value_t = AdversaryKind::Flipper)]
    adversary: AdversaryKind,
    /// Level `c` of the constant adversary, as a fraction of D.
    #[arg(long, default_value_t = 0.5)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "probe-out")]
    out_dir: PathBuf,
}

enum Failure {
    Usage(String),
    Data(String),
    Probe(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) => Failure::Usage(e.to_string()),
            Error::AtIndex { ref source, .. } if matches!(**source, Error::InvalidParameter(_)) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Changepoint(args) => cmd_changepoint(&args),
        Command::RunCsv(args) => cmd_run_csv(&args),
        Command::Probe(args) => cmd_probe(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Probe(msg)) => {
            eprintln!("probe failed: {msg}");
            ExitCode::from(3)
        }
    }
}

fn check_alpha(alpha: f64) -> CliResult<()> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--alpha must lie in (0, 0.5), got {alpha}")))
    }
}

fn create_file(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

struct Manifest {
    body: String,
}

impl Manifest {
    fn new(command: &str) -> Self {
        let mut m = Self { body: String::new() };
        m.set("command", command);
        m.set("version", env!("CARGO_PKG_VERSION"));
        m
    }

    fn set(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.body, "{key}={value}");
    }

    fn write(&self, out_dir: &Path) -> CliResult<()> {
        fs::write(out_dir.join("manifest.txt"), &self.body)?;
        Ok(())
    }
}

fn single_updater(kind: UpdaterKind, eta: Option<f64>, fixed_radius: Option<f64>) -> CliResult<UpdaterSpec> {
    let need_eta = || eta.ok_or_else(|| Failure::Usage(format!("--eta is required for {kind:?}").to_lowercase()));
    Ok(match kind {
        UpdaterKind::Kt => UpdaterSpec::Kt,
        UpdaterKind::Ons => UpdaterSpec::Ons,
        UpdaterKind::Ogd => UpdaterSpec::Ogd { eta: need_eta()? },
        UpdaterKind::Sfogd => UpdaterSpec::SfOgd { eta: need_eta()? },
        UpdaterKind::Fixed => UpdaterSpec::Fixed {
            radius: fixed_radius.ok_or_else(|| Failure::Usage("--fixed-radius is required for fixed".into()))?,
        },
    })
}

fn changepoint_methods(args: &ChangepointArgs) -> CliResult<Vec<UpdaterSpec>> {
    let (kinds, etas) = if args.updaters.is_empty() {
        let etas = if args.etas.is_empty() {
            vec![1.0, 4.0]
        } else {
            args.etas.clone()
        };
        (
            vec![UpdaterKind::Kt, UpdaterKind::Ons, UpdaterKind::Ogd, UpdaterKind::Sfogd],
            etas,
        )
    } else {
        (args.updaters.clone(), args.etas.clone())
    };
    let mut methods = Vec::new();
    for kind in kinds {
        match kind {
            UpdaterKind::Ogd | UpdaterKind::Sfogd => {
                if etas.is_empty() {
                    return Err(Failure::Usage(format!("--eta is required for {kind:?}").to_lowercase()));
                }
                for &eta in &etas {
                    methods.push(single_updater(kind, Some(eta), None)?);
                }
            }
            _ => methods.push(single_updater(kind, None, args.fixed_radius)?),
        }
    }
    for m in &methods {
        m.reset()?;
    }
    methods.dedup();
    Ok(methods)
}

fn file_label(spec: &UpdaterSpec) -> String {
    match spec {
        UpdaterSpec::Ogd { eta } | UpdaterSpec::SfOgd { eta } => format!("{}_eta{eta}", spec.id()),
        UpdaterSpec::Fixed { radius } => format!("fixed_r{radius}"),
        _ => spec.id().to_string(),
    }
}

fn cmd_changepoint(args: &ChangepointArgs) -> CliResult<()> {
    if args.seeds == 0 {
        return Err(Failure::Usage("--seeds must be positive".into()));
    }
    if args.window == 0 || args.deviation_window < 2 {
        return Err(Failure::Usage(
            "--window must be positive and --deviation-window at least 2".into(),
        ));
    }
    check_alpha(args.alpha)?;
    let methods = changepoint_methods(args)?;
    let mut exp = ChangepointExperiment::new(methods.clone(), args.seeds);
    exp.seeds = (args.seed..args.seed + args.seeds as u64).collect();
    exp.alpha = args.alpha;
    exp.burn_in = args.burn_in;
    exp.window = args.window;
    exp.deviation_window = args.deviation_window;
    exp.forecaster = match args.forecaster {
        RegressionKind::Ols => ForecasterKind::Ols,
        RegressionKind::Wls => {
            if !(args.decay > 0.0 && args.decay <= 1.0) {
                return Err(Failure::Usage(format!(
                    "--decay must lie in (0, 1], got {}",
                    args.decay
                )));
            }
            ForecasterKind::Wls { decay: args.decay }
        }
    };
    if args.burn_in >= exp.spec.len() {
        return Err(Failure::Usage(format!(
            "--burn-in must be below the series length {}",
            exp.spec.len()
        )));
    }

    fs::create_dir_all(&args.out_dir)?;
    let started = Instant::now();
    let report = if args.traces {
        let trace_dir = args.out_dir.join("traces");
        fs::create_dir_all(&trace_dir)?;
        let mut per_seed = Vec::with_capacity(exp.seeds.len());
        for &seed in &exp.seeds {
            let run = exp.run_seed(seed)?;
            for (spec, trace) in methods.iter().zip(&run.traces) {
                let path = trace_dir.join(format!("seed{seed}_{}.csv", file_label(spec)));
                write_trace(create_file(&path)?, trace)?;
            }
            per_seed.push(exp.summarize_seed(&run)?);
        }
        exp.aggregate(per_seed)
    } else {
        exp.run()?
    };
    let elapsed = started.elapsed();

    write_experiment_summary(create_file(&args.out_dir.join("summary.csv"))?, &report)?;
    write_experiment_rolling(
        create_file(&args.out_dir.join("rolling.csv"))?,
        &report,
        args.window,
        args.deviation_window,
    )?;

    println!("{:<16} {:>9} {:>9} {:>11}", "method", "coverage", "sd", "mean_width");
    for m in &report.methods {
        println!(
            "{:<16} {:>9.4} {:>9.4} {:>11.4}",
            m.method.to_string(),
            m.coverage,
            m.coverage_sd,
            m.mean_width
        );
    }
    println!("{} seeds in {:.2}s", report.seeds.len(), elapsed.as_secs_f64());

    let mut manifest = Manifest::new("changepoint");
    manifest.set(
        "methods",
        methods.iter().map(ToString::to_string).collect::<Vec<_>>().join(";"),
    );
    manifest.set("forecaster", exp.forecaster.name());
    if let ForecasterKind::Wls { decay } = exp.forecaster {
        manifest.set("decay", decay);
    }
    manifest.set("alpha", args.alpha);
    manifest.set("seeds", args.seeds);
    manifest.set("first_seed", args.seed);
    manifest.set("burn_in", args.burn_in);
    manifest.set("window", args.window);
    manifest.set("deviation_window", args.deviation_window);
    manifest.set("series_length", exp.spec.len());
    manifest.set("summary", args.out_dir.join("summary.csv").display());
    manifest.set("rolling", args.out_dir.join("rolling.csv").display());
    if args.traces {
        manifest.set("traces", args.out_dir.join("traces").display());
    }
    manifest.set("elapsed_seconds", format!("{:.3}", elapsed.as_secs_f64()));
    manifest.write(&args.out_dir)
}

enum CsvForecaster {
    Persistence,
    Ols,
    Wls,
    Ar(usize),
}

fn parse_forecaster(name: &str) -> CliResult<CsvForecaster> {
    match name {
        "persistence" => Ok(CsvForecaster::Persistence),
        "ols" => Ok(CsvForecaster::Ols),
        "wls" => Ok(CsvForecaster::Wls),
        _ => name
            .strip_prefix("ar")
            .and_then(|p| p.parse::<usize>().ok())
            .filter(|&p| p > 0)
            .map(CsvForecaster::Ar)
            .ok_or_else(|| {
                Failure::Usage(format!(
                    "unknown forecaster {name:?}; expected persistence, ols, wls or arN"
                ))
            }),
    }
}

fn replay_radii(alpha: f64, recorded: &[StepTrace]) -> CliResult<Vec<StepTrace>> {
    recorded
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let config = StreamConfig::new(alpha, UpdaterSpec::Fixed { radius: row.radius })?;
            let (_, mut trace) = ConformalStream::new(&config)?
                .step_score(row.score)
                .map_err(|e| Error::AtIndex {
                    index: i,
                    source: Box::new(e),
                })?;
            trace.t = i + 1;
            Ok(trace)
        })
        .collect()
}

fn cmd_run_csv(args: &RunCsvArgs) -> CliResult<()> {
    check_alpha(args.alpha)?;
    let forecaster = parse_forecaster(&args.forecaster)?;
    let updater = single_updater(args.updater, args.eta, args.fixed_radius)?;
    let mut config = StreamConfig::new(args.alpha, updater)?.with_burn_in(args.burn_in);
    if args.horizon == 0 {
        return Err(Failure::Usage("--horizon must be positive".into()));
    }
    if args.horizon > 1 && !matches!(forecaster, CsvForecaster::Ar(_)) {
        return Err(Failure::Usage("--horizon above 1 needs an arN forecaster".into()));
    }
    let refit_every = args.refit_every.unwrap_or(args.horizon);
    if refit_every == 0 {
        return Err(Failure::Usage("--refit-every must be positive".into()));
    }

    let open = || File::open(&args.input).map_err(|e| Failure::Data(format!("{}: {e}", args.input.display())));
    let input = read_input(open()?, args.scores_only)?;
    if input.is_empty() {
        return Err(Failure::Data(format!("{}: no data rows", args.input.display())));
    }

    let mode;
    let trace: Vec<StepTrace> = match (&input, &forecaster) {
        (InputSeries::Scores(_), _) if args.replay_radii => {
            mode = "replay";
            replay_radii(args.alpha, &read_trace(open()?)?)?
        }
        (InputSeries::Scores(scores), _) => {
            mode = "scores";
            run_scores(&config, scores.iter().copied())?
        }
        (InputSeries::Responses(rows), CsvForecaster::Persistence) => {
            mode = "persistence";
            run_stream(&config, Persistence::new(), rows.iter().cloned())?
        }
        (InputSeries::Responses(rows), CsvForecaster::Ols | CsvForecaster::Wls) => {
            let dim = input.dim();
            if dim == 0 {
                return Err(Failure::Usage("ols and wls need covariate columns x1,...,xd".into()));
            }
            if matches!(forecaster, CsvForecaster::Ols) {
                mode = "ols";
                run_stream(&config, OnlineLinear::ols(dim), rows.iter().cloned())?
            } else {
                mode = "wls";
                run_stream(&config, OnlineLinear::wls(dim, args.decay)?, rows.iter().cloned())?
            }
        }
        (InputSeries::Responses(rows), &CsvForecaster::Ar(order)) => {
            mode = "ar";
            config = config.with_horizon(args.horizon)?;
            let series: Vec<f64> = rows.iter().map(|o| o.y).collect();
            run_multi_horizon_ar(&config, &series, order, refit_every)?
        }
    };

    fs::create_dir_all(&args.out_dir)?;
    let trace_path = args.out_dir.join("trace.csv");
    let metrics_path = args.out_dir.join("metrics.csv");
    write_trace(create_file(&trace_path)?, &trace)?;
    let summaries = step_summaries(&trace, config.horizon, args.burn_in);
    write_step_summaries(create_file(&metrics_path)?, &summaries)?;

    for s in &summaries {
        let label = s.step.map_or_else(|| "all".to_string(), |k| format!("step {k}"));
        println!(
            "{label:<8} n={:<8} coverage={:.4} mean_width={:.4}",
            s.observations, s.coverage, s.mean_width
        );
    }

    let mut manifest = Manifest::new("run-csv");
    manifest.set("input", args.input.display());
    manifest.set("mode", mode);
    manifest.set("forecaster", &args.forecaster);
    manifest.set("updater", updater);
    manifest.set("alpha", args.alpha);
    manifest.set("horizon", config.horizon);
    manifest.set("refit_every", refit_every);
    manifest.set("burn_in", args.burn_in);
    manifest.set("rows", trace.len());
    manifest.set("trace", trace_path.display());
    manifest.set("metrics", metrics_path.display());
    manifest.write(&args.out_dir)
}

fn cmd_probe(args: &ProbeArgs) -> CliResult<()> {
    check_alpha(args.alpha)?;
    if args.steps == 0 {
        return Err(Failure::Usage("--t must be positive".into()));
    }
    let adversary = match args.adversary {
        AdversaryKind::Flipper => Adversary::Flipper,
        AdversaryKind::Constant => {
            if !(0.0..=1.0).contains(&args.level) {
                return Err(Failure::Usage(format!(
                    "--level must lie in [0, 1], got {}",
                    args.level
                )));
            }
            Adversary::Constant(args.level)
        }
        AdversaryKind::Uniform => Adversary::Uniform,
        AdversaryKind::Bernoulli => Adversary::Bernoulli,
        AdversaryKind::RegimeSwitch => Adversary::RegimeSwitch,
        AdversaryKind::Unbounded => Adversary::Unbounded,
    };
    let config = ProbeConfig::new(args.bound, args.alpha, args.steps, adversary)?.with_seed(args.seed);
    let report = theorem_probe(&config)?;

    fs::create_dir_all(&args.out_dir)?;
    let report_path = args.out_dir.join("probe.csv");
    let rows_path = args.out_dir.join("probe_rows.csv");
    write_probe_report(create_file(&report_path)?, &report)?;
    write_probe_rows(create_file(&rows_path)?, &report)?;

    println!(
        "adversary={} D={} alpha={} steps={}{}",
        adversary,
        args.bound,
        args.alpha,
        report.steps_run,
        if report.truncated { " (truncated)" } else { "" }
    );
    println!("miscoverage={}", report.miscoverage);
    println!(
        "max|s|={} max|Δs|={}",
        report.max_abs_radius(),
        report.max_step_change()
    );
    for c in &report.checks {
        println!(
            "{:<28} checked={:<8} violations={}",
            c.invariant.name(),
            c.checked,
            c.violations
        );
    }
    println!("status={}", if report.passed() { "pass" } else { "fail" });

    let mut manifest = Manifest::new("probe");
    manifest.set("adversary", adversary);
    if let Adversary::Constant(c) = adversary {
        manifest.set("level", c);
    }
    manifest.set("bound", args.bound);
    manifest.set("alpha", args.alpha);
    manifest.set("steps", args.steps);
    manifest.set("steps_run", report.steps_run);
    manifest.set("truncated", report.truncated);
    manifest.set("seed", args.seed);
    manifest.set("report", report_path.display());
    manifest.set("rows", rows_path.display());
    manifest.set("passed", report.passed());
    manifest.write(&args.out_dir)?;

    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Probe(format!(
            "{} invariant violations",
            report.total_violations()
        )))
    }
}
