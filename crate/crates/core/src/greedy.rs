//! Two-arm frequentist greedy bandit.
//!
//! Monoculture is one greedy run over all agents; polyculture splits the agents
//! into `k` runs that share only the initial history. The failure event is that
//! the pooled empirical mean of the worse arm strictly exceeds that of the
//! better one at the horizon. Empirical means are compared exactly by
//! cross-multiplying integer counts.

use std::fmt;

use crate::error::{Error, Result};
use crate::harness::replicate_map;
use crate::rng::{derive_stream, RngStream};
use crate::stats::Estimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    One,
    Two,
}

impl Arm {
    pub fn index(self) -> usize {
        match self {
            Arm::One => 0,
            Arm::Two => 1,
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index() + 1)
    }
}

/// How greedy agents break exact ties between empirical means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    #[default]
    LowerIndex,
    Random,
}

/// Bernoulli means with arm 1 strictly better.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoArmEnv {
    mu1: f64,
    mu2: f64,
}

impl TwoArmEnv {
    pub fn new(mu1: f64, mu2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu1) || !(0.0..=1.0).contains(&mu2) {
            return Err(Error::invalid("mu", "means must lie in [0, 1]"));
        }
        if mu1 <= mu2 {
            return Err(Error::invalid("mu", "arm 1 must be strictly better than arm 2"));
        }
        Ok(Self { mu1, mu2 })
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu2(&self) -> f64 {
        self.mu2
    }

    pub fn mean(&self, arm: Arm) -> f64 {
        match arm {
            Arm::One => self.mu1,
            Arm::Two => self.mu2,
        }
    }
}

/// Two independent Beta(2,2) means, relabeled so arm 1 is best. Exact ties are redrawn.
pub fn draw_environment(stream: &mut RngStream) -> TwoArmEnv {
    loop {
        let a = stream.beta(2.0, 2.0).expect("valid shape");
        let b = stream.beta(2.0, 2.0).expect("valid shape");
        if a != b {
            return TwoArmEnv {
                mu1: a.max(b),
                mu2: a.min(b),
            };
        }
    }
}

/// The shared samples every agent sees before the first step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InitialHistory {
    n0: u64,
    heads: [u64; 2],
}

impl InitialHistory {
    pub fn new(n0: u64, s1: u64, s2: u64) -> Result<Self> {
        if n0 == 0 {
            return Err(Error::invalid("n0", "at least one initial sample per arm is required"));
        }
        if s1 > n0 || s2 > n0 {
            return Err(Error::invalid("n0", "heads count exceeds sample count"));
        }
        Ok(Self {
            n0,
            heads: [s1, s2],
        })
    }

    pub fn n0(&self) -> u64 {
        self.n0
    }

    pub fn heads(&self, arm: Arm) -> u64 {
        self.heads[arm.index()]
    }
}

pub fn draw_initial_history(
    env: &TwoArmEnv,
    n0: u64,
    stream: &mut RngStream,
) -> Result<InitialHistory> {
    if n0 == 0 {
        return Err(Error::invalid("n0", "at least one initial sample per arm is required"));
    }
    let mut heads = [0u64; 2];
    for arm in [Arm::One, Arm::Two] {
        let mu = env.mean(arm);
        heads[arm.index()] = (0..n0).filter(|_| stream.coin(mu)).count() as u64;
    }
    Ok(InitialHistory { n0, heads })
}

/// Choices and rewards of one greedy run, with running per-arm totals.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BanditTrace {
    choices: Vec<Arm>,
    rewards: Vec<u8>,
    pulls: [u64; 2],
    sums: [u64; 2],
}

impl BanditTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, arm: Arm, reward: u8) {
        debug_assert!(reward <= 1);
        self.choices.push(arm);
        self.rewards.push(reward);
        self.pulls[arm.index()] += 1;
        self.sums[arm.index()] += u64::from(reward);
    }

    pub fn choices(&self) -> &[Arm] {
        &self.choices
    }

    pub fn rewards(&self) -> &[u8] {
        &self.rewards
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    /// `n_j(T)`: pulls of `arm` over the whole trace.
    pub fn pulls(&self, arm: Arm) -> u64 {
        self.pulls[arm.index()]
    }

    /// `Z_j(T)`: reward collected from `arm` over the whole trace.
    pub fn reward_sum(&self, arm: Arm) -> u64 {
        self.sums[arm.index()]
    }

    /// Pull counts and reward sums after the first `t` steps.
    pub fn counts_at(&self, t: usize) -> ([u64; 2], [u64; 2]) {
        let mut pulls = [0; 2];
        let mut sums = [0; 2];
        for (arm, r) in self.choices[..t].iter().zip(&self.rewards[..t]) {
            pulls[arm.index()] += 1;
            sums[arm.index()] += u64::from(*r);
        }
        (pulls, sums)
    }

    /// Empirical mean of `arm` after the whole trace, initial samples included.
    pub fn empirical_mean(&self, arm: Arm, h0: &InitialHistory) -> f64 {
        let j = arm.index();
        (h0.heads[j] + self.sums[j]) as f64 / (h0.n0 + self.pulls[j]) as f64
    }
}

/// Compares `a1/b1` with `a2/b2` for positive denominators.
fn cmp_fraction(a1: u64, b1: u64, a2: u64, b2: u64) -> std::cmp::Ordering {
    (u128::from(a1) * u128::from(b2)).cmp(&(u128::from(a2) * u128::from(b1)))
}

fn choose(
    pulls: &[u64; 2],
    sums: &[u64; 2],
    h0: &InitialHistory,
    tie: TieRule,
    stream: Option<&mut RngStream>,
) -> Arm {
    use std::cmp::Ordering::*;
    match cmp_fraction(
        h0.heads[0] + sums[0],
        h0.n0 + pulls[0],
        h0.heads[1] + sums[1],
        h0.n0 + pulls[1],
    ) {
        Greater => Arm::One,
        Less => Arm::Two,
        Equal => match (tie, stream) {
            (TieRule::Random, Some(s)) => {
                if s.coin(0.5) {
                    Arm::Two
                } else {
                    Arm::One
                }
            }
            _ => Arm::One,
        },
    }
}

/// Arm with the higher empirical mean after `trace`; ties go to arm 1.
pub fn greedy_step(trace: &BanditTrace, h0: &InitialHistory) -> Arm {
    choose(&trace.pulls, &trace.sums, h0, TieRule::LowerIndex, None)
}

/// One greedy run of `horizon` steps with rewards drawn from `env`.
pub fn run_group(
    env: &TwoArmEnv,
    h0: &InitialHistory,
    horizon: usize,
    tie: TieRule,
    stream: &mut RngStream,
) -> BanditTrace {
    let mut trace = BanditTrace {
        choices: Vec::with_capacity(horizon),
        rewards: Vec::with_capacity(horizon),
        ..BanditTrace::default()
    };
    for _ in 0..horizon {
        let arm = choose(&trace.pulls, &trace.sums, h0, tie, Some(&mut *stream));
        let reward = u8::from(stream.coin(env.mean(arm)));
        trace.push(arm, reward);
    }
    trace
}

/// Sizes of `k` groups covering `total` agents; the first `total % k` groups get one extra.
pub fn group_sizes(total: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > total {
        return Err(Error::invalid("k", format!("need 1 <= k <= {total}, got {k}")));
    }
    let base = total / k;
    let extra = total % k;
    Ok((0..k).map(|i| base + usize::from(i < extra)).collect())
}

/// Independent greedy runs, one per group, all starting from `h0`. Groups
/// consume `stream` one after another, so `k = 1` is exactly [`run_group`].
pub fn run_regime(
    env: &TwoArmEnv,
    h0: &InitialHistory,
    total_agents: usize,
    k_groups: usize,
    tie: TieRule,
    stream: &mut RngStream,
) -> Result<Vec<BanditTrace>> {
    Ok(group_sizes(total_agents, k_groups)?
        .into_iter()
        .map(|size| run_group(env, h0, size, tie, stream))
        .collect())
}

/// Pooled numerator and denominator of each arm's empirical mean, with the
/// shared initial history counted once.
pub fn pooled_counts(traces: &[BanditTrace], h0: &InitialHistory) -> [(u64, u64); 2] {
    [Arm::One, Arm::Two].map(|arm| {
        let j = arm.index();
        let num = h0.heads[j] + traces.iter().map(|t| t.sums[j]).sum::<u64>();
        let den = h0.n0 + traces.iter().map(|t| t.pulls[j]).sum::<u64>();
        (num, den)
    })
}

/// True iff the pooled mean of arm 2 strictly exceeds that of arm 1.
pub fn pooled_failure(traces: &[BanditTrace], h0: &InitialHistory) -> bool {
    let [(n1, d1), (n2, d2)] = pooled_counts(traces, h0);
    cmp_fraction(n2, d2, n1, d1) == std::cmp::Ordering::Greater
}

/// First 1-based step from which the run never switches arms; `None` when empty.
pub fn lock_in_time(trace: &BanditTrace) -> Option<usize> {
    let last = *trace.choices.last()?;
    let tail = trace
        .choices
        .iter()
        .rev()
        .take_while(|&&a| a == last)
        .count();
    Some(trace.len() - tail + 1)
}

/// Steps `t` (0 = before any pull) at which
/// `min(hat mu_1(t), hat mu_2(t)) > min(S_1(0), S_2(0)) / N_0`.
pub fn greedy_min_violations(trace: &BanditTrace, h0: &InitialHistory) -> usize {
    let bound = h0.heads[0].min(h0.heads[1]);
    let mut pulls = [0u64; 2];
    let mut sums = [0u64; 2];
    let mut violations = 0;
    let check = |pulls: &[u64; 2], sums: &[u64; 2]| {
        let within = (0..2).any(|j| {
            cmp_fraction(h0.heads[j] + sums[j], h0.n0 + pulls[j], bound, h0.n0)
                != std::cmp::Ordering::Greater
        });
        usize::from(!within)
    };
    violations += check(&pulls, &sums);
    for (arm, r) in trace.choices.iter().zip(&trace.rewards) {
        pulls[arm.index()] += 1;
        sums[arm.index()] += u64::from(*r);
        violations += check(&pulls, &sums);
    }
    violations
}

/// `(alpha a + c) / (alpha b + d) <= (a + c) / (b + d)` given `a/b >= c/d`,
/// evaluated in cross-multiplied form with a relative tolerance for rounding.
pub fn mediant_inequality_holds(a: f64, b: f64, c: f64, d: f64, alpha: f64) -> bool {
    let lhs = (alpha * a + c) * (b + d);
    let rhs = (a + c) * (alpha * b + d);
    lhs <= rhs + 1e-12 * lhs.abs().max(rhs.abs()).max(1.0)
}

/// Empirical frequency of `{exists t > t0 : running mean <= theta - sqrt(2 ln(1/delta) / t0)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlackwellCell {
    pub theta: f64,
    pub delta: f64,
    pub t0: usize,
    pub violation: Estimate,
}

/// One Bernoulli(theta) sequence per run and theta is checked against every
/// `(delta, t0)` pair. Run `r` uses `derive_stream(seed, r).child(theta index)`.
pub fn blackwell_sweep(
    thetas: &[f64],
    deltas: &[f64],
    t0s: &[usize],
    horizon: usize,
    n_runs: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<BlackwellCell>> {
    for &d in deltas {
        if !(d > 0.0 && d < 1.0) {
            return Err(Error::invalid("delta", "must lie in (0, 1)"));
        }
    }
    let thresholds: Vec<Vec<f64>> = thetas
        .iter()
        .map(|&theta| {
            deltas
                .iter()
                .flat_map(|&delta| {
                    t0s.iter()
                        .map(move |&t0| theta - (2.0 * (1.0 / delta).ln() / t0 as f64).sqrt())
                })
                .collect()
        })
        .collect();
    let per_run = replicate_map(n_runs, workers, |r| {
        let base = derive_stream(seed, r);
        let mut hits = Vec::new();
        for (ti, &theta) in thetas.iter().enumerate() {
            let mut s = base.child(ti as u64);
            let mut sum = 0u64;
            let mut hit = vec![false; thresholds[ti].len()];
            for t in 1..=horizon {
                sum += u64::from(s.coin(theta));
                let mean = sum as f64 / t as f64;
                let mut idx = 0;
                for _ in deltas {
                    for &t0 in t0s {
                        if t > t0 && mean <= thresholds[ti][idx] {
                            hit[idx] = true;
                        }
                        idx += 1;
                    }
                }
            }
            hits.extend(hit);
        }
        Ok(hits)
    })?;
    let mut cells = Vec::new();
    let mut idx = 0;
    for &theta in thetas {
        for &delta in deltas {
            for &t0 in t0s {
                let count = per_run.iter().filter(|h| h[idx]).count();
                cells.push(BlackwellCell {
                    theta,
                    delta,
                    t0,
                    violation: Estimate::proportion(count, n_runs),
                });
                idx += 1;
            }
        }
    }
    Ok(cells)
}

/// Configuration of a failure-rate sweep over initial-sample sizes and group counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Bandit2Config {
    pub n0_grid: Vec<u64>,
    pub k_grid: Vec<usize>,
    pub total_agents: usize,
    pub n_runs: usize,
    pub seed: u64,
    pub tie: TieRule,
    /// Replaces the Beta(2,2) environment draw; a test hook.
    pub fixed_env: Option<TwoArmEnv>,
}

impl Default for Bandit2Config {
    fn default() -> Self {
        Self {
            n0_grid: vec![1, 2, 5, 10, 20],
            k_grid: vec![1, 2, 4, 8],
            total_agents: 1000,
            n_runs: 1000,
            seed: 0,
            tie: TieRule::LowerIndex,
            fixed_env: None,
        }
    }
}

impl Bandit2Config {
    pub fn validate(&self) -> Result<()> {
        if self.n0_grid.is_empty() {
            return Err(Error::invalid("n0", "grid must be nonempty"));
        }
        if self.n0_grid.contains(&0) {
            return Err(Error::invalid("n0", "values must be at least 1"));
        }
        if self.k_grid.is_empty() {
            return Err(Error::invalid("k", "grid must be nonempty"));
        }
        if self.n_runs == 0 {
            return Err(Error::invalid("runs", "must be at least 1"));
        }
        for &k in &self.k_grid {
            group_sizes(self.total_agents, k)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailureCell {
    pub n0: u64,
    pub k: usize,
    pub failure: Estimate,
    /// Fraction of group runs whose lock-in time is at most half the group's horizon.
    pub early_lock_in: Estimate,
}

#[derive(Debug, Clone, Copy, Default)]
struct CellOutcome {
    failed: bool,
    locked_runs: usize,
    runs: usize,
}

/// Failure rate for every `(n0, k)` cell.
///
/// Replicate `r` draws its environment from `derive_stream(seed, r)`; the
/// initial history for each `n0` comes from `child(n0)` of that stream and the
/// group runs from a further child tagged by `k`. Every cell of replicate `r`
/// therefore shares the environment, and each `(n0, k)` shares its history.
pub fn failure_rate_sweep(config: &Bandit2Config, workers: usize) -> Result<Vec<FailureCell>> {
    config.validate()?;
    let per_run = replicate_map(config.n_runs, workers, |r| {
        let mut stream = derive_stream(config.seed, r);
        let env = match config.fixed_env {
            Some(env) => env,
            None => draw_environment(&mut stream),
        };
        let mut cells = Vec::with_capacity(config.n0_grid.len() * config.k_grid.len());
        for &n0 in &config.n0_grid {
            let h0_stream = stream.child(n0);
            let h0 = draw_initial_history(&env, n0, &mut h0_stream.clone())?;
            for &k in &config.k_grid {
                let mut runs = h0_stream.child(k as u64);
                let traces = run_regime(&env, &h0, config.total_agents, k, config.tie, &mut runs)?;
                let locked_runs = traces
                    .iter()
                    .filter(|t| lock_in_time(t).is_some_and(|l| 2 * l <= t.len()))
                    .count();
                cells.push(CellOutcome {
                    failed: pooled_failure(&traces, &h0),
                    locked_runs,
                    runs: traces.len(),
                });
            }
        }
        Ok(cells)
    })?;

    let mut out = Vec::new();
    let mut idx = 0;
    for &n0 in &config.n0_grid {
        for &k in &config.k_grid {
            let failures = per_run.iter().filter(|c| c[idx].failed).count();
            let locked: usize = per_run.iter().map(|c| c[idx].locked_runs).sum();
            let runs: usize = per_run.iter().map(|c| c[idx].runs).sum();
            out.push(FailureCell {
                n0,
                k,
                failure: Estimate::proportion(failures, config.n_runs),
                early_lock_in: Estimate::proportion(locked, runs),
            });
            idx += 1;
        }
    }
    Ok(out)
}
