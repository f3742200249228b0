//! Hiring as a bandit with externalities: `n` greedy agents pull distinct arms
//! each round, everyone observes every pull, and beliefs are Beta posteriors
//! started from Beta(2,2) plus initial samples.
//!
//! A run draws one arm set and one polyculture sample tensor (`n0` Bernoulli
//! samples for every agent and arm). Monoculture reuses agent 0's samples for
//! everyone, ensemble monoculture pools all agents' samples, and both
//! polyculture variants give each agent its own. All regimes of a run draw
//! their rewards from the same child stream, so with one agent the mono, fixed
//! order poly and ensemble traces coincide.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::harness::replicate_map;
use crate::rng::{derive_stream, RngStream};
use crate::stats::Estimate;

const PRIOR: u64 = 2;
const REWARD_TAG: u64 = 1;
const ORDER_TAG: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HbRegime {
    Mono,
    PolyFixedOrder,
    PolyRandomOrder,
    EnsembleMono,
}

impl HbRegime {
    pub const ALL: [HbRegime; 4] = [
        HbRegime::Mono,
        HbRegime::PolyFixedOrder,
        HbRegime::PolyRandomOrder,
        HbRegime::EnsembleMono,
    ];

    pub fn label(self) -> &'static str {
        match self {
            HbRegime::Mono => "mono",
            HbRegime::PolyFixedOrder => "poly-fixed",
            HbRegime::PolyRandomOrder => "poly-random",
            HbRegime::EnsembleMono => "ensemble",
        }
    }

    fn private_samples(self) -> bool {
        matches!(self, HbRegime::PolyFixedOrder | HbRegime::PolyRandomOrder)
    }
}

impl fmt::Display for HbRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// True Bernoulli mean of every arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSet {
    true_means: Vec<f64>,
}

impl ArmSet {
    pub fn new(true_means: Vec<f64>) -> Result<Self> {
        if true_means.is_empty() {
            return Err(Error::invalid("arms", "need at least one arm"));
        }
        if true_means.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::invalid("arms", "means must lie in [0, 1]"));
        }
        Ok(Self { true_means })
    }

    pub fn means(&self) -> &[f64] {
        &self.true_means
    }

    pub fn len(&self) -> usize {
        self.true_means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.true_means.is_empty()
    }

    /// Indices of the `n` best arms by true mean, ties to the lower index.
    pub fn top(&self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            self.true_means[b]
                .total_cmp(&self.true_means[a])
                .then(a.cmp(&b))
        });
        idx.truncate(n);
        idx
    }
}

pub fn draw_arms(n_arms: usize, stream: &mut RngStream) -> Result<ArmSet> {
    let means = (0..n_arms)
        .map(|_| stream.beta(2.0, 2.0))
        .collect::<Result<Vec<_>>>()?;
    ArmSet::new(means)
}

/// Heads counts of the initial samples, one set per agent (or a single shared set).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InitialSamples {
    n0: u64,
    heads: Vec<Vec<u64>>,
}

impl InitialSamples {
    pub fn new(n0: u64, heads: Vec<Vec<u64>>) -> Result<Self> {
        if heads.iter().flatten().any(|&h| h > n0) {
            return Err(Error::invalid("n0", "heads count exceeds sample count"));
        }
        Ok(Self { n0, heads })
    }

    pub fn n0(&self) -> u64 {
        self.n0
    }

    /// Distinct sample sets; a single set when every agent shares it.
    pub fn sets(&self) -> &[Vec<u64>] {
        &self.heads
    }
}

/// `n_agents` independent sets of `n0` samples per arm, agent-major then arm.
pub fn draw_sample_sets(
    arms: &ArmSet,
    n_agents: usize,
    n0: u64,
    stream: &mut RngStream,
) -> InitialSamples {
    let heads = (0..n_agents)
        .map(|_| {
            arms.means()
                .iter()
                .map(|&mu| (0..n0).filter(|_| stream.coin(mu)).count() as u64)
                .collect()
        })
        .collect();
    InitialSamples { n0, heads }
}

/// Beta posterior counts for every agent and arm: `alpha = 2 + heads`, `beta = 2 + tails`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeliefState {
    n_arms: usize,
    heads: Vec<u64>,
    tails: Vec<u64>,
}

impl BeliefState {
    /// Every agent at the Beta(2,2) prior.
    pub fn prior(n_agents: usize, n_arms: usize) -> Self {
        Self {
            n_arms,
            heads: vec![0; n_agents * n_arms],
            tails: vec![0; n_agents * n_arms],
        }
    }

    pub fn n_agents(&self) -> usize {
        self.heads.len() / self.n_arms.max(1)
    }

    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    pub fn alpha(&self, agent: usize, arm: usize) -> f64 {
        (PRIOR + self.heads[agent * self.n_arms + arm]) as f64
    }

    pub fn beta(&self, agent: usize, arm: usize) -> f64 {
        (PRIOR + self.tails[agent * self.n_arms + arm]) as f64
    }

    pub fn posterior_mean(&self, agent: usize, arm: usize) -> f64 {
        self.alpha(agent, arm) / (self.alpha(agent, arm) + self.beta(agent, arm))
    }

    /// Observations absorbed by `agent` on `arm`.
    pub fn evidence(&self, agent: usize, arm: usize) -> u64 {
        let i = agent * self.n_arms + arm;
        self.heads[i] + self.tails[i]
    }

    pub fn total_evidence(&self, agent: usize) -> u64 {
        (0..self.n_arms).map(|a| self.evidence(agent, a)).sum()
    }

    fn agent_row(&self, agent: usize) -> (&[u64], &[u64]) {
        let r = agent * self.n_arms..(agent + 1) * self.n_arms;
        (&self.heads[r.clone()], &self.tails[r])
    }

    pub fn agents_identical(&self) -> bool {
        let first = self.agent_row(0);
        (1..self.n_agents()).all(|a| self.agent_row(a) == first)
    }

    fn observe(&mut self, agent: usize, arm: usize, reward: u8) {
        let i = agent * self.n_arms + arm;
        if reward == 1 {
            self.heads[i] += 1;
        } else {
            self.tails[i] += 1;
        }
    }
}

/// Compares posterior means `(2+h1)/(4+h1+t1)` and `(2+h2)/(4+h2+t2)` exactly.
fn cmp_posterior(h1: u64, t1: u64, h2: u64, t2: u64) -> Ordering {
    let lhs = u128::from(PRIOR + h1) * u128::from(2 * PRIOR + h2 + t2);
    let rhs = u128::from(PRIOR + h2) * u128::from(2 * PRIOR + h1 + t1);
    lhs.cmp(&rhs)
}

/// Arms ranked by posterior mean under counts `heads`/`tails`, best first, ties to the lower index.
fn rank_by_posterior(heads: &[u64], tails: &[u64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..heads.len()).collect();
    idx.sort_by(|&a, &b| cmp_posterior(heads[b], tails[b], heads[a], tails[a]).then(a.cmp(&b)));
    idx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pull {
    pub agent: usize,
    pub arm: usize,
    pub reward: u8,
}

/// Pulls of one round in the order they happened.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RoundLog {
    pub pulls: Vec<Pull>,
}

impl RoundLog {
    pub fn arms(&self) -> impl Iterator<Item = usize> + '_ {
        self.pulls.iter().map(|p| p.arm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegimeConfig {
    pub regime: HbRegime,
    pub n_agents: usize,
    pub n_arms: usize,
    pub rounds: usize,
    pub n0: u64,
}

impl RegimeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::invalid("agents", "need at least one agent"));
        }
        if self.n_agents >= self.n_arms {
            return Err(Error::invalid(
                "agents",
                format!("need fewer agents than arms ({} >= {})", self.n_agents, self.n_arms),
            ));
        }
        Ok(())
    }
}

/// Builds regime beliefs from a polyculture sample tensor. Returns the beliefs
/// and the sample sets the impartial observer may see.
pub fn beliefs_from_samples(
    regime: HbRegime,
    poly: &InitialSamples,
    n_arms: usize,
) -> (BeliefState, InitialSamples) {
    let n_agents = poly.heads.len();
    let n0 = poly.n0;
    let mut beliefs = BeliefState::prior(n_agents, n_arms);
    let visible = match regime {
        HbRegime::Mono => InitialSamples {
            n0,
            heads: vec![poly.heads[0].clone()],
        },
        _ => poly.clone(),
    };
    for agent in 0..n_agents {
        for arm in 0..n_arms {
            let (h, total) = if regime.private_samples() {
                (poly.heads[agent][arm], n0)
            } else {
                let h: u64 = visible.heads.iter().map(|set| set[arm]).sum();
                (h, n0 * visible.heads.len() as u64)
            };
            let i = agent * n_arms + arm;
            beliefs.heads[i] = h;
            beliefs.tails[i] = total - h;
        }
    }
    (beliefs, visible)
}

/// Draws the polyculture sample tensor from `stream` and derives the regime's beliefs.
pub fn init_beliefs(
    arms: &ArmSet,
    config: &RegimeConfig,
    stream: &mut RngStream,
) -> (BeliefState, InitialSamples) {
    let poly = draw_sample_sets(arms, config.n_agents, config.n0, stream);
    beliefs_from_samples(config.regime, &poly, arms.len())
}

/// Agents in `order` each pull their highest posterior-mean arm not yet taken this round.
pub fn play_round(
    beliefs: &BeliefState,
    order: &[usize],
    arms: &ArmSet,
    stream: &mut RngStream,
) -> RoundLog {
    let n_arms = beliefs.n_arms;
    let mut claimed = vec![false; n_arms];
    let mut pulls = Vec::with_capacity(order.len());
    for &agent in order {
        let (heads, tails) = beliefs.agent_row(agent);
        let mut best: Option<usize> = None;
        for arm in 0..n_arms {
            if claimed[arm] {
                continue;
            }
            best = match best {
                Some(b) if cmp_posterior(heads[arm], tails[arm], heads[b], tails[b]) != Ordering::Greater => Some(b),
                _ => Some(arm),
            };
        }
        let arm = best.expect("fewer agents than arms");
        claimed[arm] = true;
        let reward = u8::from(stream.coin(arms.means()[arm]));
        pulls.push(Pull { agent, arm, reward });
    }
    RoundLog { pulls }
}

/// Every agent absorbs every pull of the round.
pub fn observe_and_update(beliefs: &mut BeliefState, log: &RoundLog) {
    for agent in 0..beliefs.n_agents() {
        for p in &log.pulls {
            beliefs.observe(agent, p.arm, p.reward);
        }
    }
}

/// Plays `rounds` rounds from `beliefs`. PolyRandomOrder redraws the agent
/// order from `order_stream` each round; every other regime uses `0..n`.
pub fn simulate(
    regime: HbRegime,
    beliefs: &mut BeliefState,
    arms: &ArmSet,
    rounds: usize,
    reward_stream: &mut RngStream,
    order_stream: &mut RngStream,
) -> Vec<RoundLog> {
    let n = beliefs.n_agents();
    let fixed: Vec<usize> = (0..n).collect();
    (0..rounds)
        .map(|_| {
            let order = if regime == HbRegime::PolyRandomOrder {
                order_stream.permutation(n)
            } else {
                fixed.clone()
            };
            let log = play_round(beliefs, &order, arms, reward_stream);
            observe_and_update(beliefs, &log);
            log
        })
        .collect()
}

/// `T * (sum of the n best true means) - sum of the true means of every pulled arm`.
pub fn total_bayesian_regret(arms: &ArmSet, logs: &[RoundLog], n_agents: usize) -> f64 {
    let best: f64 = arms.top(n_agents).iter().map(|&a| arms.means()[a]).sum();
    let oracle = logs.len() as f64 * best;
    let realized: f64 = logs
        .iter()
        .flat_map(|l| l.pulls.iter())
        .map(|p| arms.means()[p.arm])
        .sum();
    (oracle - realized).max(0.0)
}

/// Observer posterior counts: Beta(2,2) updated on every visible initial
/// sample and every pull.
pub fn observer_counts(samples: &InitialSamples, logs: &[RoundLog], n_arms: usize) -> (Vec<u64>, Vec<u64>) {
    let mut heads = vec![0u64; n_arms];
    let mut tails = vec![0u64; n_arms];
    for set in samples.sets() {
        for (arm, &h) in set.iter().enumerate() {
            heads[arm] += h;
            tails[arm] += samples.n0 - h;
        }
    }
    for p in logs.iter().flat_map(|l| l.pulls.iter()) {
        if p.reward == 1 {
            heads[p.arm] += 1;
        } else {
            tails[p.arm] += 1;
        }
    }
    (heads, tails)
}

/// Arms the observer places in its top `n` that are not in the true top `n`.
pub fn impartial_observer_misclassification(
    arms: &ArmSet,
    samples: &InitialSamples,
    logs: &[RoundLog],
    n_agents: usize,
) -> usize {
    let (heads, tails) = observer_counts(samples, logs, arms.len());
    let observed = rank_by_posterior(&heads, &tails);
    misclassified(&observed[..n_agents.min(arms.len())], &arms.top(n_agents))
}

/// `|observer_top \ true_top|`.
pub fn misclassified(observer_top: &[usize], true_top: &[usize]) -> usize {
    observer_top.iter().filter(|a| !true_top.contains(a)).count()
}

/// Outcome of one regime over one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeRun {
    pub logs: Vec<RoundLog>,
    pub regret: f64,
    pub misclassified: usize,
}

/// Runs `regime` on shared draws: `poly` is the run's sample tensor and
/// `stream` the run's per-agent-count stream.
pub fn run_regime(
    regime: HbRegime,
    arms: &ArmSet,
    poly: &InitialSamples,
    rounds: usize,
    stream: &RngStream,
) -> RegimeRun {
    let (mut beliefs, visible) = beliefs_from_samples(regime, poly, arms.len());
    let logs = simulate(
        regime,
        &mut beliefs,
        arms,
        rounds,
        &mut stream.child(REWARD_TAG),
        &mut stream.child(ORDER_TAG),
    );
    let n = poly.heads.len();
    RegimeRun {
        regret: total_bayesian_regret(arms, &logs, n),
        misclassified: impartial_observer_misclassification(arms, &visible, &logs, n),
        logs,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiringBanditConfig {
    pub n_arms: usize,
    pub rounds: usize,
    pub agents_grid: Vec<usize>,
    pub n0: u64,
    pub n_runs: usize,
    pub seed: u64,
    pub regimes: Vec<HbRegime>,
}

impl Default for HiringBanditConfig {
    fn default() -> Self {
        Self {
            n_arms: 100,
            rounds: 200,
            agents_grid: vec![2, 4, 8, 16, 32],
            n0: 5,
            n_runs: 1000,
            seed: 0,
            regimes: HbRegime::ALL.to_vec(),
        }
    }
}

impl HiringBanditConfig {
    pub fn validate(&self) -> Result<()> {
        if self.agents_grid.is_empty() {
            return Err(Error::invalid("agents", "grid must be nonempty"));
        }
        if self.regimes.is_empty() {
            return Err(Error::invalid("regimes", "need at least one regime"));
        }
        if self.n_runs == 0 {
            return Err(Error::invalid("runs", "must be at least 1"));
        }
        for &n in &self.agents_grid {
            RegimeConfig {
                regime: HbRegime::Mono,
                n_agents: n,
                n_arms: self.n_arms,
                rounds: self.rounds,
                n0: self.n0,
            }
            .validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HbCell {
    pub agents: usize,
    pub regime: HbRegime,
    pub regret: Estimate,
    pub misclassified: Estimate,
}

/// Per-run `(regret, misclassified)` values, indexed `[agents][regime][run]`.
pub type HbRunValues = Vec<Vec<Vec<(f64, f64)>>>;

/// Monte Carlo over `n_runs` paired runs. Run `r` draws its arms from
/// `derive_stream(seed, r)`; each agent count `n` uses `child(n)` for the
/// sample tensor and, through further children, the rewards and orders.
pub fn run_experiment_values(config: &HiringBanditConfig, workers: usize) -> Result<HbRunValues> {
    config.validate()?;
    let per_run = replicate_map(config.n_runs, workers, |r| {
        let mut stream = derive_stream(config.seed, r);
        let arms = draw_arms(config.n_arms, &mut stream)?;
        Ok(config
            .agents_grid
            .iter()
            .map(|&n| {
                let sub = stream.child(n as u64);
                let poly = draw_sample_sets(&arms, n, config.n0, &mut sub.clone());
                config
                    .regimes
                    .iter()
                    .map(|&regime| {
                        let out = run_regime(regime, &arms, &poly, config.rounds, &sub);
                        (out.regret, out.misclassified as f64)
                    })
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>())
    })?;
    Ok((0..config.agents_grid.len())
        .map(|ai| {
            (0..config.regimes.len())
                .map(|ri| per_run.iter().map(|run| run[ai][ri]).collect())
                .collect()
        })
        .collect())
}

pub fn run_experiment(config: &HiringBanditConfig, workers: usize) -> Result<Vec<HbCell>> {
    let values = run_experiment_values(config, workers)?;
    let mut cells = Vec::new();
    for (ai, &agents) in config.agents_grid.iter().enumerate() {
        for (ri, &regime) in config.regimes.iter().enumerate() {
            let v = &values[ai][ri];
            let regrets: Vec<f64> = v.iter().map(|x| x.0).collect();
            let mis: Vec<f64> = v.iter().map(|x| x.1).collect();
            cells.push(HbCell {
                agents,
                regime,
                regret: Estimate::from_values(&regrets),
                misclassified: Estimate::from_values(&mis),
            });
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arms(means: &[f64]) -> ArmSet {
        ArmSet::new(means.to_vec()).unwrap()
    }

    fn config(regime: HbRegime, n_agents: usize, n_arms: usize, n0: u64) -> RegimeConfig {
        RegimeConfig {
            regime,
            n_agents,
            n_arms,
            rounds: 10,
            n0,
        }
    }

    #[test]
    fn zero_samples_leave_the_prior() {
        let a = arms(&[0.2, 0.5, 0.9, 0.4]);
        for regime in HbRegime::ALL {
            let (b, _) = init_beliefs(&a, &config(regime, 2, 4, 0), &mut derive_stream(1, 0));
            for agent in 0..2 {
                for arm in 0..4 {
                    assert_eq!((b.alpha(agent, arm), b.beta(agent, arm)), (2.0, 2.0));
                }
            }
        }
    }

    #[test]
    fn mono_and_ensemble_beliefs_are_shared() {
        let a = draw_arms(20, &mut derive_stream(2, 0)).unwrap();
        for regime in [HbRegime::Mono, HbRegime::EnsembleMono] {
            let (b, _) = init_beliefs(&a, &config(regime, 4, 20, 5), &mut derive_stream(2, 1));
            assert!(b.agents_identical());
        }
        let (b, _) = init_beliefs(&a, &config(HbRegime::PolyFixedOrder, 4, 20, 5), &mut derive_stream(2, 1));
        assert!(!b.agents_identical());
    }

    #[test]
    fn evidence_conservation_at_init() {
        let a = draw_arms(10, &mut derive_stream(3, 0)).unwrap();
        let (b, samples) = init_beliefs(&a, &config(HbRegime::EnsembleMono, 3, 10, 5), &mut derive_stream(3, 1));
        for agent in 0..3 {
            for arm in 0..10 {
                assert_eq!(b.alpha(agent, arm) + b.beta(agent, arm), 4.0 + 15.0);
            }
        }
        assert_eq!(samples.sets().len(), 3);
        let (b, samples) = init_beliefs(&a, &config(HbRegime::Mono, 3, 10, 5), &mut derive_stream(3, 1));
        assert_eq!(b.alpha(1, 0) + b.beta(1, 0), 9.0);
        assert_eq!(samples.sets().len(), 1);
    }

    #[test]
    fn shared_ranking_round() {
        let a = arms(&[0.5; 10]);
        let mut b = BeliefState::prior(2, 10);
        for agent in 0..2 {
            b.heads[agent * 10 + 3] = 5;
            b.heads[agent * 10 + 7] = 3;
        }
        let log = play_round(&b, &[1, 0], &a, &mut derive_stream(1, 0));
        assert_eq!(log.pulls[0].agent, 1);
        assert_eq!(log.pulls[0].arm, 3);
        assert_eq!(log.pulls[1].arm, 7);
    }

    #[test]
    fn single_agent_takes_argmax_and_ties_go_low() {
        let a = arms(&[0.5; 5]);
        let mut b = BeliefState::prior(1, 5);
        let log = play_round(&b, &[0], &a, &mut derive_stream(1, 0));
        assert_eq!(log.pulls[0].arm, 0);
        b.heads[4] = 1;
        let log = play_round(&b, &[0], &a, &mut derive_stream(1, 0));
        assert_eq!(log.pulls[0].arm, 4);
    }

    #[test]
    fn rounds_pull_distinct_arms_and_conserve_evidence() {
        let a = draw_arms(30, &mut derive_stream(4, 0)).unwrap();
        let poly = draw_sample_sets(&a, 6, 5, &mut derive_stream(4, 1));
        for regime in HbRegime::ALL {
            let (mut b, _) = beliefs_from_samples(regime, &poly, 30);
            let start: Vec<u64> = (0..6).map(|ag| b.total_evidence(ag)).collect();
            let logs = simulate(regime, &mut b, &a, 25, &mut derive_stream(4, 2), &mut derive_stream(4, 3));
            for log in &logs {
                let mut arms_pulled: Vec<usize> = log.arms().collect();
                assert_eq!(arms_pulled.len(), 6);
                arms_pulled.sort_unstable();
                arms_pulled.dedup();
                assert_eq!(arms_pulled.len(), 6);
            }
            for ag in 0..6 {
                assert_eq!(b.total_evidence(ag), start[ag] + 6 * 25);
            }
            if matches!(regime, HbRegime::Mono | HbRegime::EnsembleMono) {
                assert!(b.agents_identical());
            }
        }
    }

    #[test]
    fn update_increments_by_outcome() {
        let mut b = BeliefState::prior(3, 4);
        let log = RoundLog {
            pulls: vec![
                Pull { agent: 0, arm: 1, reward: 1 },
                Pull { agent: 2, arm: 3, reward: 0 },
            ],
        };
        observe_and_update(&mut b, &log);
        for agent in 0..3 {
            assert_eq!(b.alpha(agent, 1), 3.0);
            assert_eq!(b.beta(agent, 1), 2.0);
            assert_eq!(b.alpha(agent, 3), 2.0);
            assert_eq!(b.beta(agent, 3), 3.0);
        }
        assert!(b.agents_identical());
    }

    #[test]
    fn mono_pulled_set_is_order_invariant() {
        let a = draw_arms(40, &mut derive_stream(5, 0)).unwrap();
        let poly = draw_sample_sets(&a, 8, 5, &mut derive_stream(5, 1));
        let (b, _) = beliefs_from_samples(HbRegime::Mono, &poly, 40);
        let mut s = derive_stream(5, 2);
        let reference: std::collections::BTreeSet<usize> =
            play_round(&b, &(0..8).collect::<Vec<_>>(), &a, &mut s.clone()).arms().collect();
        for _ in 0..20 {
            let order = s.permutation(8);
            let got: std::collections::BTreeSet<usize> =
                play_round(&b, &order, &a, &mut derive_stream(5, 3)).arms().collect();
            assert_eq!(got, reference);
        }
    }

    fn log_of(arms_per_round: &[&[usize]]) -> Vec<RoundLog> {
        arms_per_round
            .iter()
            .map(|round| RoundLog {
                pulls: round
                    .iter()
                    .enumerate()
                    .map(|(agent, &arm)| Pull { agent, arm, reward: 0 })
                    .collect(),
            })
            .collect()
    }

    #[test]
    fn regret_examples() {
        let a = arms(&[0.9, 0.1]);
        assert_eq!(total_bayesian_regret(&a, &log_of(&[&[0], &[0], &[0]]), 1), 0.0);
        let t = 7;
        let logs = log_of(&vec![&[1usize][..]; t]);
        assert!((total_bayesian_regret(&a, &logs, 1) - 0.8 * t as f64).abs() < 1e-12);

        let a = arms(&[0.9, 0.6, 0.5, 0.2]);
        let logs = log_of(&[&[0, 1], &[0, 2], &[1, 0]]);
        assert!((total_bayesian_regret(&a, &logs, 2) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn misclassification_examples() {
        let a = arms(&[0.9, 0.5, 0.1]);
        assert_eq!(misclassified(&[0], &a.top(1)), 0);
        // Observer means (0.4, 0.6, 0.1) put arm 1 on top.
        assert_eq!(misclassified(&[1], &a.top(1)), 1);

        let samples = InitialSamples::new(10, vec![vec![1, 9, 0]]).unwrap();
        assert_eq!(impartial_observer_misclassification(&a, &samples, &[], 1), 1);
        let samples = InitialSamples::new(10, vec![vec![9, 5, 1]]).unwrap();
        assert_eq!(impartial_observer_misclassification(&a, &samples, &[], 1), 0);
        // K = n: every arm is top-n.
        let samples = InitialSamples::new(10, vec![vec![0, 5, 10]]).unwrap();
        assert_eq!(impartial_observer_misclassification(&a, &samples, &[], 3), 0);
    }

    #[test]
    fn single_agent_regimes_coincide() {
        let a = draw_arms(15, &mut derive_stream(6, 0)).unwrap();
        let sub = derive_stream(6, 1);
        let poly = draw_sample_sets(&a, 1, 5, &mut sub.clone());
        let mono = run_regime(HbRegime::Mono, &a, &poly, 50, &sub);
        let fixed = run_regime(HbRegime::PolyFixedOrder, &a, &poly, 50, &sub);
        let ens = run_regime(HbRegime::EnsembleMono, &a, &poly, 50, &sub);
        assert_eq!(mono, fixed);
        assert_eq!(mono, ens);
    }

    #[test]
    fn bounds_hold_over_random_runs() {
        let config = HiringBanditConfig {
            n_arms: 20,
            rounds: 30,
            agents_grid: vec![1, 5, 12],
            n0: 2,
            n_runs: 40,
            seed: 11,
            regimes: HbRegime::ALL.to_vec(),
        };
        let values = run_experiment_values(&config, 2).unwrap();
        for (ai, &n) in config.agents_grid.iter().enumerate() {
            for v in values[ai].iter().flatten() {
                assert!(v.0 >= 0.0);
                assert!(v.1 >= 0.0 && v.1 <= n.min(20 - n) as f64);
            }
        }
    }

    #[test]
    fn overwhelming_initial_evidence_means_little_regret() {
        let config = HiringBanditConfig {
            n_arms: 20,
            rounds: 20,
            agents_grid: vec![4],
            n0: 10_000,
            n_runs: 20,
            seed: 5,
            regimes: HbRegime::ALL.to_vec(),
        };
        let tiny = HiringBanditConfig { n0: 1, ..config.clone() };
        let strong = run_experiment(&config, 1).unwrap();
        let weak = run_experiment(&tiny, 1).unwrap();
        for (s, w) in strong.iter().zip(&weak) {
            // Per-round regret with 4 pulls of 20 Beta(2,2) arms.
            assert!(s.regret.mean / 20.0 < 0.02, "{s:?}");
            assert!(s.regret.mean < w.regret.mean);
        }
    }

    #[test]
    fn experiment_is_deterministic() {
        let config = HiringBanditConfig {
            n_arms: 20,
            rounds: 15,
            agents_grid: vec![3, 6],
            n0: 5,
            n_runs: 30,
            seed: 2,
            regimes: HbRegime::ALL.to_vec(),
        };
        assert_eq!(run_experiment(&config, 1).unwrap(), run_experiment(&config, 4).unwrap());
    }

    #[test]
    fn config_rejects_too_many_agents() {
        let c = HiringBanditConfig {
            n_arms: 10,
            agents_grid: vec![10],
            ..HiringBanditConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
