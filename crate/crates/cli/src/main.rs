//! Command-line front end: complexity computation, Monte-Carlo sweeps, drift
//! checks, nontrivial-sampling scans, and single traced episodes.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on configuration errors.

mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use config::{load_file, FloatList, RawExperiment};
use oddarm::assumption::{analytic_thresholds, scan, scan_to_csv, AnalyticWindow, ScanSpec};
use oddarm::complexity::{lower_bound_asymptote, solve_lambda_star};
use oddarm::policy::PolicyConfig;
use oddarm::sim::{
    config_fingerprint, format_csv_row, run_batch, run_episode, run_episode_traced, SweepResult,
    SweepRow, SwitchCostMatrix,
};

#[derive(Parser)]
#[command(
    name = "oddarm",
    version,
    about = "Odd-arm identification experiments for exponential-family bandits",
    after_help = "Thread count follows RAYON_NUM_THREADS. Arm indices are 1-based on the \
                  command line and in all output."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the problem complexity D* and the optimal sampling weights.
    Complexity(ExperimentArgs),
    /// Run a full (gamma x log L) Monte-Carlo sweep and emit the CSV table.
    Sweep(SweepArgs),
    /// Average drift of the odd arm's GLR statistic under non-stopping play.
    Drift(DriftArgs),
    /// Scan the nontrivial-sampling inequality over a parameter grid.
    VerifyAssumption(VerifyArgs),
    /// Run one seeded episode, optionally dumping the per-step trace.
    Episode(EpisodeArgs),
}

#[derive(Args, Clone)]
struct ExperimentArgs {
    /// Structured-text configuration file; flags override its values.
    #[arg(long)]
    config: Option<String>,
    /// Built-in experiment preset (1..=4).
    #[arg(long)]
    figure: Option<u8>,
    /// Family: poisson | bernoulli | gaussian-mean | gaussian-variance | vector-gaussian.
    #[arg(long)]
    family: Option<String>,
    /// Known standard deviation (gaussian-mean only).
    #[arg(long)]
    sigma: Option<f64>,
    /// Number of arms K (>= 3).
    #[arg(short = 'k', long)]
    k: Option<usize>,
    /// Odd arm index, 1-based.
    #[arg(long)]
    odd_index: Option<usize>,
    /// Odd-arm expectation parameter (comma separated when dim = 2).
    #[arg(long)]
    kappa1: Option<FloatList>,
    /// Non-odd expectation parameter.
    #[arg(long)]
    kappa2: Option<FloatList>,
    /// Odd-arm natural parameter (alternative to --kappa1).
    #[arg(long)]
    eta1: Option<FloatList>,
    /// Non-odd natural parameter (alternative to --kappa2).
    #[arg(long)]
    eta2: Option<FloatList>,
    /// Prior pseudo sufficient statistic tau.
    #[arg(long)]
    tau: Option<FloatList>,
    /// Prior pseudo count n0.
    #[arg(long)]
    n0: Option<f64>,
    /// Episode length cap.
    #[arg(long)]
    max_horizon: Option<u64>,
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<(config::Experiment, config::FileConfig), CliError> {
        let file = match &self.config {
            Some(path) => load_file(path).map_err(CliError::Config)?,
            None => config::FileConfig::default(),
        };
        let mut raw = RawExperiment {
            figure: self.figure,
            family: self.family.clone(),
            sigma: self.sigma,
            k: self.k,
            odd_index: self.odd_index,
            kappa1: self.kappa1.clone().map(|l| l.0),
            kappa2: self.kappa2.clone().map(|l| l.0),
            eta1: self.eta1.clone().map(|l| l.0),
            eta2: self.eta2.clone().map(|l| l.0),
            tau: self.tau.clone().map(|l| l.0),
            n0: self.n0,
            max_horizon: self.max_horizon,
        };
        raw.merge_file(&file);
        let exp = raw.resolve().map_err(CliError::Config)?;
        Ok((exp, file))
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Switching parameters to sweep.
    #[arg(long)]
    gammas: Option<FloatList>,
    /// log L grid points.
    #[arg(long = "logL")]
    log_l: Option<FloatList>,
    /// Episodes per cell.
    #[arg(long)]
    runs: Option<u32>,
    /// Master seed; every row is reproducible from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Uniform off-diagonal switching cost.
    #[arg(long)]
    switch_cost: Option<f64>,
    /// Output path for the CSV table (default: stdout).
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct DriftArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Steps of non-stopping play.
    #[arg(long, default_value_t = 20_000)]
    steps: u64,
    /// Switching parameter during the drift run.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Independent seeds to average over.
    #[arg(long, default_value_t = 1)]
    runs: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Structured-text configuration file ([scan] section).
    #[arg(long)]
    config: Option<String>,
    /// Family to scan.
    #[arg(long)]
    family: Option<String>,
    /// Known standard deviation (gaussian-mean only).
    #[arg(long)]
    sigma: Option<f64>,
    /// lambda-hat values to scan.
    #[arg(long = "lambda-hats")]
    lambda_hats: Option<FloatList>,
    /// Ratio r in the sufficient inequality.
    #[arg(long)]
    r: Option<f64>,
    /// Output path for the scan CSV (default: stdout).
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct EpisodeArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// log L for the stopping threshold.
    #[arg(long = "logL", default_value_t = 50.0)]
    log_l: f64,
    /// Switching parameter.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Uniform off-diagonal switching cost.
    #[arg(long, default_value_t = 1.0)]
    switch_cost: f64,
    /// Write the per-step trace (delimited text) to this path.
    #[arg(long)]
    trace: Option<String>,
}

enum CliError {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<oddarm::Error> for CliError {
    fn from(e: oddarm::Error) -> Self {
        match e {
            oddarm::Error::InvalidConfig(_)
            | oddarm::Error::InvalidParameter { .. }
            | oddarm::Error::ImproperHyper { .. }
            | oddarm::Error::InvalidGrid(_)
            | oddarm::Error::ArmOutOfRange { .. }
            | oddarm::Error::DegenerateConfiguration => CliError::Config(anyhow!(e)),
            other => CliError::Runtime(anyhow!(other)),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Command::Complexity(args) => cmd_complexity(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Drift(args) => cmd_drift(&args),
        Command::VerifyAssumption(args) => cmd_verify(&args),
        Command::Episode(args) => cmd_episode(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(CliError::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn cmd_complexity(args: &ExperimentArgs) -> Result<(), CliError> {
    let (exp, _) = args.resolve()?;
    let res = solve_lambda_star(&exp.family, &exp.psi)?;
    for line in &exp.echo {
        println!("# {line}");
    }
    println!("D*          = {:.6}", res.d_star);
    println!("lambda*     = [{}]", join_floats(&res.lambda_star));
    println!("lambda_hat* = {:.6}", res.lambda_hat);
    println!("kappa_tilde = {}", res.kappa_tilde);
    println!("eta_tilde   = {}", res.eta_tilde);
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let (exp, file) = args.experiment.resolve()?;
    let gammas = args
        .gammas
        .clone()
        .map(|l| l.0)
        .or_else(|| file.policy.gammas.clone())
        .unwrap_or_else(|| vec![0.1, 0.5, 1.0]);
    let log_l = args
        .log_l
        .clone()
        .map(|l| l.0)
        .or_else(|| file.policy.log_l.clone())
        .unwrap_or_else(|| vec![0.0, 50.0, 100.0, 150.0, 200.0, 250.0]);
    let runs = args.runs.or(file.run.runs).unwrap_or(100);
    let seed = args.seed.or(file.run.seed).unwrap_or(0);
    let cost = args.switch_cost.or(file.run.switch_cost).unwrap_or(1.0);
    let out_path = args.out.clone().or_else(|| file.run.out.clone());

    let costs = SwitchCostMatrix::uniform(exp.psi.num_arms, cost)?;
    let base = PolicyConfig::new(0.0, 1.0, exp.hyper)?.with_max_horizon(exp.max_horizon);
    let d_star = solve_lambda_star(&exp.family, &exp.psi)?.d_star;
    let fingerprint = config_fingerprint(&exp.family, &exp.psi, &base);

    let mut sink = open_sink(out_path.as_deref()).map_err(CliError::Runtime)?;
    let mut write = |line: &str| -> Result<(), CliError> {
        writeln!(sink, "{line}").map_err(|e| CliError::Runtime(anyhow!(e)))?;
        sink.flush().map_err(|e| CliError::Runtime(anyhow!(e)))
    };

    for line in &exp.echo {
        write(&format!("# {line}"))?;
    }
    write(&format!("# runs = {runs}"))?;
    write(&format!("# seed = {seed}"))?;
    write(&format!("# switch_cost = {cost}"))?;
    write(&format!("# config_hash = {fingerprint:#018x}"))?;
    write(&format!("# d_star = {d_star:.6}"))?;
    write(SweepResult::CSV_HEADER)?;

    // rows stream out as soon as each cell finishes, so an interrupted sweep
    // leaves its completed prefix behind
    for &gamma in &gammas {
        for &ll in &log_l {
            let cfg = PolicyConfig::new(ll, gamma, exp.hyper)?.with_max_horizon(exp.max_horizon);
            let stats = run_batch(&exp.psi, &exp.family, &cfg, &costs, runs, seed)?;
            let row = SweepRow {
                log_l: ll,
                gamma,
                mean_tau: stats.mean_tau,
                mean_cost: stats.mean_cost,
                error_rate: stats.error_rate,
                mean_switches: stats.mean_switches,
                lower_bound: lower_bound_asymptote(ll, d_star),
                runs,
                seed,
            };
            write(&format_csv_row(&row))?;
        }
    }
    Ok(())
}

fn cmd_drift(args: &DriftArgs) -> Result<(), CliError> {
    let (exp, _) = args.experiment.resolve()?;
    let cfg = PolicyConfig::new(0.0, args.gamma, exp.hyper)?.with_max_horizon(exp.max_horizon);
    let d_star = solve_lambda_star(&exp.family, &exp.psi)?.d_star;
    for line in &exp.echo {
        println!("# {line}");
    }
    println!("# steps = {}", args.steps);
    let mut total = 0.0;
    for i in 0..args.runs {
        let drift =
            oddarm::sim::drift_check(&exp.psi, &exp.family, &cfg, args.steps, args.seed + i)?;
        total += drift;
        println!("seed {:>4}  Z_i(n)/n = {:.6}", args.seed + i, drift);
    }
    println!("mean drift = {:.6}", total / args.runs as f64);
    println!("D*         = {d_star:.6}");
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => load_file(path).map_err(CliError::Config)?,
        None => config::FileConfig::default(),
    };
    let family_name = args
        .family
        .clone()
        .or_else(|| file.family.kind.clone())
        .ok_or_else(|| CliError::Config(anyhow!("no family given")))?;
    let family = config::build_family(&family_name, args.sigma.or(file.family.sigma))
        .map_err(CliError::Config)?;
    let lambda_hats = args
        .lambda_hats
        .clone()
        .map(|l| l.0)
        .or_else(|| file.scan.lambda_hats.clone())
        .unwrap_or_else(|| (1..=10).map(|i| i as f64 / 10.0).collect());
    let ratio = args.r.or(file.scan.r).unwrap_or(0.5);

    let mut spec = ScanSpec::with_default_grid(family, lambda_hats)
        .map_err(|e| CliError::Config(anyhow!(e)))?;
    spec.ratio = ratio;
    if let Some(points) = custom_grid(&family, &file.scan).map_err(CliError::Config)? {
        spec.kappa_pairs = points;
    }
    spec.validate().map_err(|e| CliError::Config(anyhow!(e)))?;

    let rows = scan(&spec)?;
    let mut sink = open_sink(args.out.as_deref()).map_err(CliError::Runtime)?;
    let window = match analytic_thresholds(&family) {
        AnalyticWindow::Interval { lo, hi } => format!("({lo}, {hi})"),
        AnalyticWindow::NumericOnly => "numeric-only".to_string(),
    };
    let mut emit = |line: String| -> Result<(), CliError> {
        writeln!(sink, "{line}").map_err(|e| CliError::Runtime(anyhow!(e)))
    };
    emit(format!("# family = {}", family.name()))?;
    emit(format!("# r = {ratio}"))?;
    emit(format!("# grid_pairs = {}", spec.kappa_pairs.len()))?;
    emit(format!("# analytic_window = {window}"))?;
    write!(sink, "{}", scan_to_csv(&rows)).map_err(|e| CliError::Runtime(anyhow!(e)))?;
    sink.flush().map_err(|e| CliError::Runtime(anyhow!(e)))?;
    Ok(())
}

fn custom_grid(
    family: &oddarm::expfam::FamilyDescriptor,
    scan: &config::ScanSection,
) -> anyhow::Result<
    Option<
        Vec<(
            oddarm::expfam::ExpectationParam,
            oddarm::expfam::ExpectationParam,
        )>,
    >,
> {
    use oddarm::expfam::{ExpectationParam, ParamVec};
    if let Some(points) = &scan.points {
        if family.dim() != 1 {
            anyhow::bail!("[scan].points applies to scalar families; use means/variances");
        }
        let mut pairs = Vec::new();
        for &a in points {
            for &b in points {
                if a != b {
                    pairs.push((ExpectationParam::scalar(a), ExpectationParam::scalar(b)));
                }
            }
        }
        return Ok(Some(pairs));
    }
    if scan.means.is_some() || scan.variances.is_some() {
        if family.dim() != 2 {
            anyhow::bail!("[scan].means/variances apply to the vector-gaussian family");
        }
        let means = scan
            .means
            .clone()
            .unwrap_or_else(|| (0..=20).map(f64::from).collect());
        let vars = scan
            .variances
            .clone()
            .unwrap_or_else(|| (1..=21).map(f64::from).collect());
        let mut pairs = Vec::new();
        for &v in &vars {
            for &m1 in &means {
                for &m2 in &means {
                    if m1 != m2 {
                        pairs.push((
                            ExpectationParam(ParamVec::pair(m1, m1 * m1 + v)),
                            ExpectationParam(ParamVec::pair(m2, m2 * m2 + v)),
                        ));
                    }
                }
            }
        }
        return Ok(Some(pairs));
    }
    Ok(None)
}

fn cmd_episode(args: &EpisodeArgs) -> Result<(), CliError> {
    let (exp, _) = args.experiment.resolve()?;
    let cfg =
        PolicyConfig::new(args.log_l, args.gamma, exp.hyper)?.with_max_horizon(exp.max_horizon);
    let costs = SwitchCostMatrix::uniform(exp.psi.num_arms, args.switch_cost)?;
    let result = match &args.trace {
        Some(path) => {
            let mut out = BufWriter::new(
                File::create(path)
                    .with_context(|| format!("creating {path}"))
                    .map_err(CliError::Runtime)?,
            );
            let r = run_episode_traced(&exp.psi, &exp.family, &cfg, &costs, args.seed, &mut out)?;
            out.flush().map_err(|e| CliError::Runtime(anyhow!(e)))?;
            r
        }
        None => run_episode(&exp.psi, &exp.family, &cfg, &costs, args.seed)?,
    };
    for line in &exp.echo {
        println!("# {line}");
    }
    println!(
        "# logL = {}, gamma = {}, seed = {}",
        args.log_l, args.gamma, args.seed
    );
    println!("stopping_time = {}", result.stopping_time);
    match result.decision {
        Some(d) => println!("decision      = {}", d + 1),
        None => println!("decision      = truncated"),
    }
    println!("correct       = {}", result.correct);
    println!("switches      = {}", result.switches);
    println!("switch_cost   = {:.4}", result.switch_cost);
    println!("total_cost    = {:.4}", result.total_cost);
    Ok(())
}

fn open_sink(path: Option<&str>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {p}"))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn join_floats(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.6}"))
        .collect::<Vec<_>>()
        .join(", ")
}
