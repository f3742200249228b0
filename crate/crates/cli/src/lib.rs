//! Argument and config-file handling for the `monolab` binary.
//!
//! Values resolve as: command-line flag, then config file, then
//! `MONOLAB_WORKERS` (workers only), then the library defaults.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use monolab_core::experiment::{self, EnumerateConfig, Experiment, OrderConfig};
use monolab_core::greedy::{Bandit2Config, TieRule};
use monolab_core::hiring::{HiringConfig, HiringMode, Regime};
use monolab_core::hiring_bandit::{HbRegime, HiringBanditConfig};
use monolab_core::plot::{self, FigureKind};
use monolab_core::Error;

pub const WORKERS_ENV: &str = "MONOLAB_WORKERS";

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config file or invalid parameters.
    Usage(String),
    /// Failure while running or writing results.
    Runtime(String),
    /// Help, version or a clap parse error; clap renders and exits.
    Clap(clap::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Clap(e) => e.exit_code(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
            CliError::Clap(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } | Error::TooLargeToEnumerate(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn usage(key: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("invalid `{key}`: {reason}"))
}

#[derive(Debug, Parser)]
#[command(name = "monolab", version, about = "Monoculture vs polyculture simulations")]
struct Cli {
    #[command(flatten)]
    shared: Shared,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Shared {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo replicates per cell.
    #[arg(long, global = true)]
    runs: Option<usize>,
    /// Worker threads (default: $MONOLAB_WORKERS, else all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output CSV path (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TOML file with kebab-case keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Also write every per-run value to this CSV.
    #[arg(long, global = true)]
    per_run: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    Sequential,
    Simultaneous,
}

#[derive(Debug, Clone, Copy, ValueEnum, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum TieArg {
    LowerIndex,
    Random,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sequential or simultaneous hiring market.
    Hiring {
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        candidates: Option<usize>,
        /// Firm-count grid, e.g. 2,4,8,16.
        #[arg(long, value_delimiter = ',')]
        firms: Option<Vec<usize>>,
        #[arg(long)]
        noise_sd: Option<f64>,
        /// Jobs per firm.
        #[arg(long)]
        capacity: Option<usize>,
        /// Subset of mono,poly,ensemble.
        #[arg(long, value_delimiter = ',')]
        regimes: Option<Vec<String>>,
    },
    /// Two-arm greedy bandit split into k groups.
    Bandit2 {
        #[arg(long, value_delimiter = ',')]
        n0: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        /// Total agents across all groups.
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, value_enum)]
        tie: Option<TieArg>,
    },
    /// Many-arm hiring bandit with Beta posteriors.
    HiringBandit {
        #[arg(long)]
        arms: Option<usize>,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        agents: Option<Vec<usize>>,
        #[arg(long)]
        n0: Option<u64>,
        /// Subset of mono,poly-fixed,poly-random,ensemble.
        #[arg(long, value_delimiter = ',')]
        regimes: Option<Vec<String>>,
    },
    /// Exact joblessness probabilities by enumeration.
    Enumerate {
        #[arg(long)]
        candidates: Option<usize>,
        /// Firms, one job each.
        #[arg(long)]
        firms: Option<usize>,
        /// Also report the probability that a given group of this size is left jobless.
        #[arg(long)]
        group_size: Option<usize>,
        /// Skip the per-candidate enumeration.
        #[arg(long)]
        veil_only: bool,
        #[arg(long, value_delimiter = ',')]
        regimes: Option<Vec<String>>,
    },
    /// Unmatched sets under every firm order.
    OrderSensitivity {
        /// One ranking per firm, best first, e.g. ABC,ACB.
        #[arg(long)]
        rankings: Option<String>,
    },
    /// Render a results CSV as an SVG chart.
    Plot {
        /// Results CSV.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = parse_figure)]
        figure: FigureKind,
    },
}

fn parse_figure(s: &str) -> Result<FigureKind, String> {
    FigureKind::parse(s).ok_or_else(|| {
        let names: Vec<&str> = FigureKind::ALL.iter().map(|f| f.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

#[derive(Debug, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct HiringFile {
    seed: Option<u64>,
    runs: Option<usize>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    mode: Option<ModeArg>,
    candidates: Option<usize>,
    firms: Option<Vec<usize>>,
    noise_sd: Option<f64>,
    capacity: Option<usize>,
    regimes: Option<Vec<String>>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct Bandit2File {
    seed: Option<u64>,
    runs: Option<usize>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    n0: Option<Vec<u64>>,
    k: Option<Vec<usize>>,
    horizon: Option<usize>,
    tie: Option<TieArg>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct HiringBanditFile {
    seed: Option<u64>,
    runs: Option<usize>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    arms: Option<usize>,
    rounds: Option<usize>,
    agents: Option<Vec<usize>>,
    n0: Option<u64>,
    regimes: Option<Vec<String>>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct EnumerateFile {
    workers: Option<usize>,
    out: Option<PathBuf>,
    candidates: Option<usize>,
    firms: Option<usize>,
    group_size: Option<usize>,
    veil_only: Option<bool>,
    regimes: Option<Vec<String>>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct OrderFile {
    workers: Option<usize>,
    out: Option<PathBuf>,
    rankings: Option<Vec<String>>,
}

/// A fully resolved experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub out: Option<PathBuf>,
    pub per_run: Option<PathBuf>,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Invocation {
    Run(ExperimentConfig),
    Plot { input: PathBuf, figure: FigureKind, out: PathBuf },
}

fn load_file<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn parse_labels<R: Copy>(key: &str, names: &[String], all: &[R], label: fn(R) -> &'static str) -> Result<Vec<R>, CliError> {
    names
        .iter()
        .map(|n| {
            all.iter().copied().find(|&r| label(r) == n.trim()).ok_or_else(|| {
                let known: Vec<&str> = all.iter().map(|&r| label(r)).collect();
                usage(key, format!("unknown regime `{n}`; expected one of {}", known.join(", ")))
            })
        })
        .collect()
}

/// Parses `ABC` style rankings, one per firm, into candidate indices.
pub fn parse_rankings(specs: &[String]) -> Result<Vec<Vec<usize>>, CliError> {
    specs
        .iter()
        .map(|s| {
            s.trim()
                .chars()
                .map(|c| match c.to_ascii_uppercase() {
                    u @ 'A'..='Z' => Ok(u as usize - 'A' as usize),
                    _ => Err(usage("rankings", format!("`{c}` is not a candidate letter"))),
                })
                .collect()
        })
        .collect()
}

fn resolve_workers(flag: Option<usize>, file: Option<usize>) -> Result<usize, CliError> {
    let env = match std::env::var(WORKERS_ENV) {
        Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| usage("workers", format!("{WORKERS_ENV}=`{v}` is not a count")))?),
        Err(_) => None,
    };
    let workers = flag
        .or(file)
        .or(env)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(usage("workers", "must be at least 1"));
    }
    Ok(workers)
}

fn check_runs(runs: usize) -> Result<usize, CliError> {
    if runs == 0 {
        return Err(usage("runs", "must be at least 1"));
    }
    Ok(runs)
}

/// Parses `argv` (program name first) and the optional `--config` file.
pub fn parse_config<I, T>(argv: I) -> Result<Invocation, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    resolve(Cli::try_parse_from(argv).map_err(CliError::Clap)?)
}

fn resolve(cli: Cli) -> Result<Invocation, CliError> {
    let Cli { shared: s, command } = cli;
    let cfg = s.config.as_deref();
    let experiment;
    let (w_file, out_file);
    match command {
        Command::Plot { input, figure } => {
            let out = s.out.ok_or_else(|| usage("out", "plot needs an output SVG path"))?;
            return Ok(Invocation::Plot { input, figure, out });
        }
        Command::Hiring { mode, candidates, firms, noise_sd, capacity, regimes } => {
            let f: HiringFile = load_file(cfg)?;
            let mode = match pick(mode, f.mode, ModeArg::Sequential) {
                ModeArg::Sequential => HiringMode::Sequential,
                ModeArg::Simultaneous => HiringMode::Simultaneous,
            };
            let mut c = HiringConfig::new(mode);
            c.n_candidates = pick(candidates, f.candidates, c.n_candidates);
            c.firms_grid = pick(firms, f.firms, c.firms_grid);
            c.noise_sd = pick(noise_sd, f.noise_sd, c.noise_sd);
            c.capacity = pick(capacity, f.capacity, c.capacity);
            c.n_runs = check_runs(pick(s.runs, f.runs, c.n_runs))?;
            c.seed = pick(s.seed, f.seed, c.seed);
            if let Some(names) = regimes.or(f.regimes) {
                c.regimes = parse_labels("regimes", &names, &Regime::ALL, Regime::label)?;
            }
            c.validate()?;
            (w_file, out_file) = (f.workers, f.out);
            experiment = Experiment::Hiring(c);
        }
        Command::Bandit2 { n0, k, horizon, tie } => {
            let f: Bandit2File = load_file(cfg)?;
            let mut c = Bandit2Config::default();
            c.n0_grid = pick(n0, f.n0, c.n0_grid);
            c.k_grid = pick(k, f.k, c.k_grid);
            c.total_agents = pick(horizon, f.horizon, c.total_agents);
            c.tie = match pick(tie, f.tie, TieArg::LowerIndex) {
                TieArg::LowerIndex => TieRule::LowerIndex,
                TieArg::Random => TieRule::Random,
            };
            c.n_runs = check_runs(pick(s.runs, f.runs, c.n_runs))?;
            c.seed = pick(s.seed, f.seed, c.seed);
            c.validate()?;
            (w_file, out_file) = (f.workers, f.out);
            experiment = Experiment::Bandit2(c);
        }
        Command::HiringBandit { arms, rounds, agents, n0, regimes } => {
            let f: HiringBanditFile = load_file(cfg)?;
            let mut c = HiringBanditConfig::default();
            c.n_arms = pick(arms, f.arms, c.n_arms);
            c.rounds = pick(rounds, f.rounds, c.rounds);
            c.agents_grid = pick(agents, f.agents, c.agents_grid);
            c.n0 = pick(n0, f.n0, c.n0);
            c.n_runs = check_runs(pick(s.runs, f.runs, c.n_runs))?;
            c.seed = pick(s.seed, f.seed, c.seed);
            if let Some(names) = regimes.or(f.regimes) {
                c.regimes = parse_labels("regimes", &names, &HbRegime::ALL, HbRegime::label)?;
            }
            c.validate()?;
            (w_file, out_file) = (f.workers, f.out);
            experiment = Experiment::HiringBandit(c);
        }
        Command::Enumerate { candidates, firms, group_size, veil_only, regimes } => {
            let f: EnumerateFile = load_file(cfg)?;
            let mut c = EnumerateConfig::default();
            c.n_candidates = pick(candidates, f.candidates, c.n_candidates);
            c.n_firms = pick(firms, f.firms, c.n_firms);
            c.group_size = group_size.or(f.group_size);
            c.jobless = !(veil_only || f.veil_only.unwrap_or(false));
            if let Some(names) = regimes.or(f.regimes) {
                c.regimes = parse_labels("regimes", &names, &Regime::ALL, Regime::label)?;
            }
            if c.n_firms > c.n_candidates {
                return Err(usage("firms", "cannot exceed the number of candidates"));
            }
            if !c.jobless && c.group_size.is_none() {
                return Err(usage("group-size", "required with --veil-only"));
            }
            (w_file, out_file) = (f.workers, f.out);
            experiment = Experiment::Enumerate(c);
        }
        Command::OrderSensitivity { rankings } => {
            let f: OrderFile = load_file(cfg)?;
            let specs = match (rankings, f.rankings) {
                (Some(flag), _) => flag.split(',').map(str::to_owned).collect(),
                (None, Some(file)) => file,
                (None, None) => vec!["ABC".to_owned(), "ACB".to_owned()],
            };
            (w_file, out_file) = (f.workers, f.out);
            experiment = Experiment::OrderSensitivity(OrderConfig { rankings: parse_rankings(&specs)? });
        }
    }
    Ok(Invocation::Run(ExperimentConfig {
        experiment,
        out: s.out.or(out_file),
        per_run: s.per_run,
        workers: resolve_workers(s.workers, w_file)?,
    }))
}

/// Runs the invocation, writing CSV to the configured path or stdout.
pub fn execute(inv: &Invocation) -> Result<(), CliError> {
    match inv {
        Invocation::Plot { input, figure, out } => Ok(plot::plot(input, *figure, out)?),
        Invocation::Run(cfg) => {
            let report = experiment::run_detailed(&cfg.experiment, cfg.workers)?;
            if let Some(path) = &cfg.per_run {
                experiment::write_atomic(path, &experiment::series_to_csv(&report.series))?;
            }
            match &cfg.out {
                Some(path) => experiment::write_csv(path, &report.rows)?,
                None => std::io::stdout()
                    .write_all(&experiment::rows_to_csv(&report.rows))
                    .map_err(|e| CliError::Runtime(format!("writing stdout: {e}")))?,
            }
            Ok(())
        }
    }
}
