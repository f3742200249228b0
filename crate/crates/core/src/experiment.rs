//! Experiment dispatch, long-format result rows and CSV I/O.
//!
//! Every experiment produces [`ResultRow`]s with the fixed column order
//! `kind, regime, param_name, param_value, metric, value, stderr, n_runs, seed, exact`.
//! Floats are written in Rust's shortest round-trip form, so identical results
//! give byte-identical files.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exclusion::{enumerate_sequential_outcomes, hiring_order_sensitivity, veil_group_exclusion};
use crate::greedy::{failure_rate_sweep, Bandit2Config};
use crate::hiring::{run_hiring_values, HiringConfig, Regime};
use crate::hiring_bandit::{run_experiment_values, HiringBanditConfig};
use crate::stats::Estimate;

pub const CSV_HEADER: [&str; 10] = [
    "kind",
    "regime",
    "param_name",
    "param_value",
    "metric",
    "value",
    "stderr",
    "n_runs",
    "seed",
    "exact",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub kind: String,
    pub regime: String,
    pub param_name: String,
    pub param_value: String,
    pub metric: String,
    pub value: f64,
    pub stderr: f64,
    pub n_runs: usize,
    pub seed: u64,
    /// Exact result (a `num/den` fraction or a candidate set) where one exists.
    pub exact: String,
}

impl ResultRow {
    fn estimate(
        kind: &str,
        regime: &str,
        param: (&str, String),
        metric: &str,
        est: &Estimate,
        seed: u64,
    ) -> Self {
        Self {
            kind: kind.into(),
            regime: regime.into(),
            param_name: param.0.into(),
            param_value: param.1,
            metric: metric.into(),
            value: est.mean,
            stderr: est.stderr,
            n_runs: est.n,
            seed,
            exact: String::new(),
        }
    }
}

/// Exhaustive joblessness enumeration and the group-exclusion probability.
#[derive(Debug, Clone, PartialEq)]
pub struct EnumerateConfig {
    pub n_candidates: usize,
    pub n_firms: usize,
    pub regimes: Vec<Regime>,
    /// Emits the group-exclusion row for a group of this size, with one job per firm.
    pub group_size: Option<usize>,
    /// Emits per-candidate joblessness rows (requires an enumerable instance).
    pub jobless: bool,
}

impl Default for EnumerateConfig {
    fn default() -> Self {
        Self {
            n_candidates: 3,
            n_firms: 2,
            regimes: vec![Regime::Mono, Regime::Poly],
            group_size: None,
            jobless: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderConfig {
    /// `rankings[f]` lists candidate indices best first.
    pub rankings: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Hiring(HiringConfig),
    Bandit2(Bandit2Config),
    HiringBandit(HiringBanditConfig),
    Enumerate(EnumerateConfig),
    OrderSensitivity(OrderConfig),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Hiring(c) => c.mode.kind(),
            Experiment::Bandit2(_) => "bandit2",
            Experiment::HiringBandit(_) => "hiring-bandit",
            Experiment::Enumerate(_) => "enumerate",
            Experiment::OrderSensitivity(_) => "order-sensitivity",
        }
    }
}

/// Per-run values behind one aggregated row.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSeries {
    pub regime: String,
    pub param_value: String,
    pub metric: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub rows: Vec<ResultRow>,
    /// Empty for exact experiments.
    pub series: Vec<RunSeries>,
}

pub fn run(experiment: &Experiment, workers: usize) -> Result<Vec<ResultRow>> {
    Ok(run_detailed(experiment, workers)?.rows)
}

/// Runs the experiment and keeps the per-run values of every Monte Carlo cell.
pub fn run_detailed(experiment: &Experiment, workers: usize) -> Result<RunReport> {
    let kind = experiment.kind();
    match experiment {
        Experiment::Hiring(c) => {
            let values = run_hiring_values(c, workers)?;
            let mut report = RunReport { rows: Vec::new(), series: Vec::new() };
            for (fi, &firms) in c.firms_grid.iter().enumerate() {
                for (ri, regime) in c.regimes.iter().enumerate() {
                    report.push(kind, regime.label(), ("firms", firms.to_string()), "normalized_performance", c.seed, values[fi][ri].clone());
                }
            }
            Ok(report)
        }
        Experiment::HiringBandit(c) => {
            let values = run_experiment_values(c, workers)?;
            let mut report = RunReport { rows: Vec::new(), series: Vec::new() };
            for (ai, &agents) in c.agents_grid.iter().enumerate() {
                for (ri, regime) in c.regimes.iter().enumerate() {
                    let v = &values[ai][ri];
                    let param = ("agents", agents.to_string());
                    report.push(kind, regime.label(), param.clone(), "total_bayesian_regret", c.seed, v.iter().map(|x| x.0).collect());
                    report.push(kind, regime.label(), param, "misclassified_arms", c.seed, v.iter().map(|x| x.1).collect());
                }
            }
            Ok(report)
        }
        Experiment::Bandit2(c) => {
            let cells = failure_rate_sweep(c, workers)?;
            let mut rows = Vec::new();
            for cell in &cells {
                let regime = format!("k={}", cell.k);
                let param = ("n0", cell.n0.to_string());
                rows.push(ResultRow::estimate(kind, &regime, param.clone(), "failure_rate", &cell.failure, c.seed));
                let mut lock = ResultRow::estimate(kind, &regime, param, "early_lock_in_rate", &cell.early_lock_in, c.seed);
                lock.n_runs = c.n_runs;
                rows.push(lock);
            }
            Ok(RunReport { rows, series: Vec::new() })
        }
        Experiment::Enumerate(c) => Ok(RunReport { rows: enumerate_rows(c)?, series: Vec::new() }),
        Experiment::OrderSensitivity(c) => Ok(RunReport { rows: order_rows(c)?, series: Vec::new() }),
    }
}

impl RunReport {
    fn push(&mut self, kind: &str, regime: &str, param: (&str, String), metric: &str, seed: u64, values: Vec<f64>) {
        let est = Estimate::from_values(&values);
        self.series.push(RunSeries {
            regime: regime.into(),
            param_value: param.1.clone(),
            metric: metric.into(),
            values,
        });
        self.rows.push(ResultRow::estimate(kind, regime, param, metric, &est, seed));
    }
}

/// Candidate label: `A`, `B`, ... for small markets, the index otherwise.
pub fn candidate_label(c: usize, n: usize) -> String {
    if n <= 26 {
        char::from(b'A' + c as u8).to_string()
    } else {
        c.to_string()
    }
}

fn exact_row(kind: &str, regime: &str, param: (&str, String), metric: &str, p: &crate::exclusion::ExactProbability) -> ResultRow {
    ResultRow {
        kind: kind.into(),
        regime: regime.into(),
        param_name: param.0.into(),
        param_value: param.1,
        metric: metric.into(),
        value: p.to_f64(),
        stderr: 0.0,
        n_runs: 1,
        seed: 0,
        exact: p.to_string(),
    }
}

fn enumerate_rows(c: &EnumerateConfig) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    if c.jobless {
        for &regime in &c.regimes {
            let probs = enumerate_sequential_outcomes(c.n_candidates, c.n_firms, regime)?;
            for (cand, p) in probs.iter().enumerate() {
                rows.push(exact_row(
                    "enumerate",
                    regime.label(),
                    ("candidate", candidate_label(cand, c.n_candidates)),
                    "jobless_probability",
                    p,
                ));
            }
        }
    }
    if let Some(g) = c.group_size {
        let p = veil_group_exclusion(c.n_candidates, c.n_firms, g)?;
        rows.push(exact_row("enumerate", "veil", ("group_size", g.to_string()), "group_exclusion_probability", &p));
    }
    if rows.is_empty() {
        return Err(Error::invalid("group-size", "nothing to compute: jobless rows disabled and no group size given"));
    }
    Ok(rows)
}

fn order_rows(c: &OrderConfig) -> Result<Vec<ResultRow>> {
    let result = hiring_order_sensitivity(&c.rankings)?;
    let n = c.rankings.first().map_or(0, Vec::len);
    let mut rows = Vec::new();
    for (order, unmatched) in &result.unmatched {
        let order_label = order.iter().map(|f| (f + 1).to_string()).collect::<Vec<_>>().join("-");
        let set = unmatched.iter().map(|&c| candidate_label(c, n)).collect::<Vec<_>>().join(" ");
        rows.push(ResultRow {
            kind: "order-sensitivity".into(),
            regime: "given".into(),
            param_name: "order".into(),
            param_value: order_label,
            metric: "unmatched".into(),
            value: unmatched.len() as f64,
            stderr: 0.0,
            n_runs: 1,
            seed: 0,
            exact: set,
        });
    }
    rows.push(ResultRow {
        kind: "order-sensitivity".into(),
        regime: "given".into(),
        param_name: "order".into(),
        param_value: "all".into(),
        metric: "sensitive".into(),
        value: f64::from(u8::from(result.sensitive)),
        stderr: 0.0,
        n_runs: 1,
        seed: 0,
        exact: result.sensitive.to_string(),
    });
    Ok(rows)
}

pub fn rows_to_csv(rows: &[ResultRow]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.kind.as_str(),
            r.regime.as_str(),
            r.param_name.as_str(),
            r.param_value.as_str(),
            r.metric.as_str(),
            &r.value.to_string(),
            &r.stderr.to_string(),
            &r.n_runs.to_string(),
            &r.seed.to_string(),
            r.exact.as_str(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Writes `bytes` to a temporary file next to `path`, then renames it into
/// place. On failure nothing is left at `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    write_atomic(path, &rows_to_csv(rows))
}

/// Per-run values in long format: `regime, param_value, metric, run, value`.
pub fn series_to_csv(series: &[RunSeries]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["regime", "param_value", "metric", "run", "value"]).expect("in-memory write");
    for s in series {
        for (run, v) in s.values.iter().enumerate() {
            w.write_record([s.regime.as_str(), s.param_value.as_str(), s.metric.as_str(), &run.to_string(), &v.to_string()])
                .expect("in-memory write");
        }
    }
    w.into_inner().expect("in-memory flush")
}

/// Parses result rows, reporting the 1-based line of the first bad record.
pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_csv(path, &bytes)
}

pub fn parse_csv(path: &Path, bytes: &[u8]) -> Result<Vec<ResultRow>> {
    let parse_err = |line: u64, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let header = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(parse_err(1, format!("expected header `{}`", CSV_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for record in reader.deserialize::<ResultRow>() {
        match record {
            Ok(row) => {
                if row.stderr.is_nan() || row.stderr < 0.0 {
                    return Err(parse_err(rows.len() as u64 + 2, "stderr must be non-negative".into()));
                }
                rows.push(row);
            }
            Err(e) => {
                let line = e.position().map_or(rows.len() as u64 + 2, |p| p.line());
                return Err(parse_err(line, e.to_string()));
            }
        }
    }
    Ok(rows)
}
