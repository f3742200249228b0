//! Hiring markets: objective candidate values, noisy firm scores under the
//! three regimes, sequential hiring and candidate-proposing deferred acceptance,
//! and the normalized performance metric.
//!
//! Stream consumption order for one market is fixed: candidate values first,
//! then noise in candidate-major order (for each candidate, one draw per firm),
//! then the firm order or candidate preferences. All three regimes consume the
//! same noise tensor, so at a given stream state they share both the market and
//! the noise; monoculture uses firm 0's noise column.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;

use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    Mono,
    Poly,
    EnsembleMono,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Mono, Regime::Poly, Regime::EnsembleMono];

    pub fn label(self) -> &'static str {
        match self {
            Regime::Mono => "mono",
            Regime::Poly => "poly",
            Regime::EnsembleMono => "ensemble",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Objective value of every candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketInstance {
    values: Vec<f64>,
}

impl MarketInstance {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("candidates", "market needs at least one candidate"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values", "candidate values must be finite"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Firm-by-candidate matrix of estimated values, stored row-major by firm.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    regime: Regime,
    n_firms: usize,
    n_candidates: usize,
    scores: Vec<f64>,
}

impl ScoreTable {
    /// Builds a table from explicit rows. Rows must be equal length.
    pub fn from_rows(regime: Regime, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_firms = rows.len();
        if n_firms == 0 {
            return Err(Error::invalid("firms", "score table needs at least one firm"));
        }
        let n_candidates = rows[0].len();
        if rows.iter().any(|r| r.len() != n_candidates) {
            return Err(Error::invalid("scores", "ragged score rows"));
        }
        Ok(Self {
            regime,
            n_firms,
            n_candidates,
            scores: rows.into_iter().flatten().collect(),
        })
    }

    /// Every firm shares the same row.
    pub fn shared(regime: Regime, n_firms: usize, row: Vec<f64>) -> Result<Self> {
        Self::from_rows(regime, vec![row; n_firms])
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn n_firms(&self) -> usize {
        self.n_firms
    }

    pub fn n_candidates(&self) -> usize {
        self.n_candidates
    }

    pub fn row(&self, firm: usize) -> &[f64] {
        &self.scores[firm * self.n_candidates..(firm + 1) * self.n_candidates]
    }

    pub fn score(&self, firm: usize, candidate: usize) -> f64 {
        self.scores[firm * self.n_candidates + candidate]
    }

    /// True if `firm` ranks candidate `a` strictly above `b` (ties favor the lower index).
    pub fn prefers(&self, firm: usize, a: usize, b: usize) -> bool {
        rank_cmp(self.score(firm, a), a, self.score(firm, b), b) == Ordering::Greater
    }
}

/// Orders `(score, index)` pairs so that the preferred candidate compares greater.
fn rank_cmp(sa: f64, a: usize, sb: f64, b: usize) -> Ordering {
    sa.total_cmp(&sb).then_with(|| b.cmp(&a))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Priority {
    score: f64,
    candidate: usize,
}

impl Eq for Priority {}

impl PartialOrd for Priority {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Priority {
    fn cmp(&self, other: &Self) -> Ordering {
        rank_cmp(self.score, self.candidate, other.score, other.candidate)
    }
}

/// Assignment of each candidate to a firm, or `None` when unmatched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HiringOutcome {
    assignment: Vec<Option<usize>>,
}

impl HiringOutcome {
    pub fn new(assignment: Vec<Option<usize>>) -> Self {
        Self { assignment }
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    pub fn firm_of(&self, candidate: usize) -> Option<usize> {
        self.assignment[candidate]
    }

    pub fn matched(&self) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(c, f)| f.map(|_| c))
    }

    pub fn unmatched(&self) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(c, f)| f.is_none().then_some(c))
    }

    pub fn matched_count(&self) -> usize {
        self.assignment.iter().filter(|f| f.is_some()).count()
    }

    /// Number of candidates held by each of `n_firms` firms.
    pub fn load(&self, n_firms: usize) -> Vec<usize> {
        let mut load = vec![0; n_firms];
        for f in self.assignment.iter().flatten() {
            load[*f] += 1;
        }
        load
    }
}

/// Per-candidate strict preference order over firms, most preferred first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidatePrefs {
    orderings: Vec<Vec<usize>>,
}

impl CandidatePrefs {
    pub fn new(orderings: Vec<Vec<usize>>) -> Result<Self> {
        if let Some(first) = orderings.first() {
            let n_firms = first.len();
            for o in &orderings {
                if !is_permutation(o, n_firms) {
                    return Err(Error::invalid(
                        "prefs",
                        "every candidate must rank every firm exactly once",
                    ));
                }
            }
        }
        Ok(Self { orderings })
    }

    pub fn ordering(&self, candidate: usize) -> &[usize] {
        &self.orderings[candidate]
    }

    pub fn n_candidates(&self) -> usize {
        self.orderings.len()
    }

    /// Position of `firm` in the candidate's list; lower is better.
    pub fn rank_of(&self, candidate: usize, firm: usize) -> usize {
        self.orderings[candidate]
            .iter()
            .position(|&f| f == firm)
            .expect("firm missing from preference list")
    }
}

fn is_permutation(order: &[usize], n: usize) -> bool {
    if order.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

pub fn generate_market(n_candidates: usize, stream: &mut RngStream) -> Result<MarketInstance> {
    if n_candidates == 0 {
        return Err(Error::invalid("candidates", "must be at least 1"));
    }
    let values = (0..n_candidates)
        .map(|_| stream.gaussian(0.0, 1.0))
        .collect::<Result<Vec<_>>>()?;
    MarketInstance::new(values)
}

/// Estimated values under `regime`.
///
/// Draws `n_candidates * n_firms` noise values in candidate-major order for
/// every regime. Poly uses them all; Mono uses firm 0's draws for every row;
/// EnsembleMono averages the Poly rows per candidate.
pub fn score_regime(
    market: &MarketInstance,
    n_firms: usize,
    noise_sd: f64,
    regime: Regime,
    stream: &mut RngStream,
) -> Result<ScoreTable> {
    if n_firms == 0 {
        return Err(Error::invalid("firms", "must be at least 1"));
    }
    if !noise_sd.is_finite() || noise_sd < 0.0 {
        return Err(Error::invalid("noise-sd", "must be finite and non-negative"));
    }
    let n = market.len();
    let mut poly = vec![vec![0.0; n]; n_firms];
    for (c, &value) in market.values().iter().enumerate() {
        for row in poly.iter_mut() {
            row[c] = value + stream.gaussian(0.0, noise_sd)?;
        }
    }
    match regime {
        Regime::Poly => ScoreTable::from_rows(regime, poly),
        Regime::Mono => {
            let shared = poly.swap_remove(0);
            ScoreTable::shared(regime, n_firms, shared)
        }
        Regime::EnsembleMono => {
            let mean: Vec<f64> = (0..n)
                .map(|c| poly.iter().map(|row| row[c]).sum::<f64>() / n_firms as f64)
                .collect();
            ScoreTable::shared(regime, n_firms, mean)
        }
    }
}

/// Firms take turns in `firm_order`; on its turn a firm hires its `capacity`
/// top-scored candidates among those still available.
pub fn sequential_hire(
    scores: &ScoreTable,
    firm_order: &[usize],
    capacity: usize,
) -> Result<HiringOutcome> {
    let n_firms = scores.n_firms();
    if !is_permutation(firm_order, n_firms) {
        return Err(Error::invalid("firm_order", "must be a permutation of the firms"));
    }
    if capacity == 0 {
        return Err(Error::invalid("capacity", "must be at least 1"));
    }
    let n = scores.n_candidates();
    if n < n_firms * capacity {
        return Err(Error::invalid(
            "candidates",
            format!("{n} candidates cannot fill {n_firms} firms x {capacity} jobs"),
        ));
    }
    let mut assignment = vec![None; n];
    for &firm in firm_order {
        let row = scores.row(firm);
        for _ in 0..capacity {
            let best = (0..n)
                .filter(|&c| assignment[c].is_none())
                .max_by(|&a, &b| rank_cmp(row[a], a, row[b], b))
                .expect("enough candidates remain");
            assignment[best] = Some(firm);
        }
    }
    Ok(HiringOutcome::new(assignment))
}

pub fn generate_prefs(
    n_candidates: usize,
    n_firms: usize,
    stream: &mut RngStream,
) -> Result<CandidatePrefs> {
    if n_candidates == 0 || n_firms == 0 {
        return Err(Error::invalid("prefs", "counts must be at least 1"));
    }
    Ok(CandidatePrefs {
        orderings: (0..n_candidates).map(|_| stream.permutation(n_firms)).collect(),
    })
}

/// Candidate-proposing deferred acceptance. Each firm holds up to `capacity`
/// proposers, ranked by its score row with ties to the lower candidate index.
pub fn deferred_acceptance(
    scores: &ScoreTable,
    prefs: &CandidatePrefs,
    capacity: usize,
) -> Result<HiringOutcome> {
    let n = scores.n_candidates();
    let n_firms = scores.n_firms();
    if capacity == 0 {
        return Err(Error::invalid("capacity", "must be at least 1"));
    }
    if prefs.n_candidates() != n {
        return Err(Error::invalid("prefs", "one preference list per candidate required"));
    }
    if n > 0 && prefs.ordering(0).len() != n_firms {
        return Err(Error::invalid("prefs", "preference lists must cover every firm"));
    }

    let mut next_choice = vec![0usize; n];
    let mut held: Vec<BinaryHeap<Reverse<Priority>>> =
        (0..n_firms).map(|_| BinaryHeap::with_capacity(capacity + 1)).collect();
    let mut free: Vec<usize> = (0..n).rev().collect();

    while let Some(c) = free.pop() {
        let Some(&firm) = prefs.ordering(c).get(next_choice[c]) else {
            continue;
        };
        next_choice[c] += 1;
        let heap = &mut held[firm];
        heap.push(Reverse(Priority {
            score: scores.score(firm, c),
            candidate: c,
        }));
        if heap.len() > capacity {
            let Reverse(rejected) = heap.pop().expect("heap over capacity");
            free.push(rejected.candidate);
        }
    }

    let mut assignment = vec![None; n];
    for (firm, heap) in held.iter().enumerate() {
        for Reverse(p) in heap {
            assignment[p.candidate] = Some(firm);
        }
    }
    Ok(HiringOutcome::new(assignment))
}

/// Candidates in descending order of a shared score each take their most
/// preferred firm with a free job.
pub fn serial_dictatorship(
    shared: &[f64],
    prefs: &CandidatePrefs,
    n_firms: usize,
    capacity: usize,
) -> HiringOutcome {
    let mut order: Vec<usize> = (0..shared.len()).collect();
    order.sort_by(|&a, &b| rank_cmp(shared[b], b, shared[a], a));
    let mut free = vec![capacity; n_firms];
    let mut assignment = vec![None; shared.len()];
    for c in order {
        if let Some(&f) = prefs.ordering(c).iter().find(|&&f| free[f] > 0) {
            free[f] -= 1;
            assignment[c] = Some(f);
        }
    }
    HiringOutcome::new(assignment)
}

/// All `(firm, candidate)` pairs that block `outcome`: the firm has spare
/// capacity or holds someone it ranks below the candidate, and the candidate
/// is unmatched or prefers the firm to their match.
pub fn blocking_pairs(
    scores: &ScoreTable,
    prefs: &CandidatePrefs,
    capacity: usize,
    outcome: &HiringOutcome,
) -> Vec<(usize, usize)> {
    let n_firms = scores.n_firms();
    let load = outcome.load(n_firms);
    let mut pairs = Vec::new();
    for firm in 0..n_firms {
        for c in 0..scores.n_candidates() {
            let current = outcome.firm_of(c);
            if current == Some(firm) {
                continue;
            }
            let candidate_wants = match current {
                None => true,
                Some(f) => prefs.rank_of(c, firm) < prefs.rank_of(c, f),
            };
            if !candidate_wants {
                continue;
            }
            let firm_wants = load[firm] < capacity
                || outcome
                    .matched()
                    .filter(|&h| outcome.firm_of(h) == Some(firm))
                    .any(|h| scores.prefers(firm, c, h));
            if firm_wants {
                pairs.push((firm, c));
            }
        }
    }
    pairs
}

/// `(Actual - Worst) / (Best - Worst)` over the `n` matched candidates.
pub fn normalized_performance(outcome: &HiringOutcome, market: &MarketInstance) -> Result<f64> {
    let values = market.values();
    if outcome.assignment().len() != values.len() {
        return Err(Error::invalid("outcome", "outcome and market sizes differ"));
    }
    let n = outcome.matched_count();
    if n == 0 {
        return Err(Error::invalid("outcome", "no candidate was matched"));
    }
    let actual = outcome.matched().map(|c| values[c]).sum::<f64>() / n as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let worst = sorted[..n].iter().sum::<f64>() / n as f64;
    let best = sorted[sorted.len() - n..].iter().sum::<f64>() / n as f64;
    if best <= worst {
        return Err(Error::DegenerateMetric);
    }
    Ok(((actual - worst) / (best - worst)).clamp(0.0, 1.0))
}

/// Sequential turn-taking or simultaneous deferred acceptance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HiringMode {
    Sequential,
    Simultaneous,
}

impl HiringMode {
    pub fn kind(self) -> &'static str {
        match self {
            HiringMode::Sequential => "hiring-seq",
            HiringMode::Simultaneous => "hiring-sim",
        }
    }

    pub fn default_capacity(self) -> usize {
        match self {
            HiringMode::Sequential => 1,
            HiringMode::Simultaneous => 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiringConfig {
    pub mode: HiringMode,
    pub n_candidates: usize,
    pub firms_grid: Vec<usize>,
    pub noise_sd: f64,
    pub capacity: usize,
    pub n_runs: usize,
    pub seed: u64,
    pub regimes: Vec<Regime>,
}

impl HiringConfig {
    pub fn new(mode: HiringMode) -> Self {
        Self {
            mode,
            n_candidates: 1000,
            firms_grid: vec![2, 4, 8, 16, 32, 64],
            noise_sd: 0.5,
            capacity: mode.default_capacity(),
            n_runs: 1000,
            seed: 0,
            regimes: Regime::ALL.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.firms_grid.is_empty() {
            return Err(Error::invalid("firms", "grid must be nonempty"));
        }
        if self.regimes.is_empty() {
            return Err(Error::invalid("regimes", "need at least one regime"));
        }
        if self.n_runs == 0 {
            return Err(Error::invalid("runs", "must be at least 1"));
        }
        if self.capacity == 0 {
            return Err(Error::invalid("capacity", "must be at least 1"));
        }
        if !self.noise_sd.is_finite() || self.noise_sd < 0.0 {
            return Err(Error::invalid("noise-sd", "must be finite and non-negative"));
        }
        for &f in &self.firms_grid {
            if f == 0 {
                return Err(Error::invalid("firms", "values must be at least 1"));
            }
            // Every job filled must leave someone out, or the metric is undefined.
            if f * self.capacity >= self.n_candidates {
                return Err(Error::invalid(
                    "firms",
                    format!(
                        "{f} firms x {} jobs needs more than {} candidates",
                        self.capacity, self.n_candidates
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Normalized performance of one regime in one market.
///
/// `stream` is positioned after the market draw; it supplies the noise tensor
/// and then the firm order (sequential) or candidate preferences (simultaneous).
pub fn hire_once(
    market: &MarketInstance,
    n_firms: usize,
    regime: Regime,
    config: &HiringConfig,
    stream: &mut RngStream,
) -> Result<f64> {
    let scores = score_regime(market, n_firms, config.noise_sd, regime, stream)?;
    let outcome = match config.mode {
        HiringMode::Sequential => {
            let order = stream.permutation(n_firms);
            sequential_hire(&scores, &order, config.capacity)?
        }
        HiringMode::Simultaneous => {
            let prefs = generate_prefs(market.len(), n_firms, stream)?;
            deferred_acceptance(&scores, &prefs, config.capacity)?
        }
    };
    normalized_performance(&outcome, market)
}

/// Per-run normalized performance, indexed `[firms][regime][run]`.
///
/// Run `r` draws its market from `derive_stream(seed, r)`; each firm count `f`
/// uses `child(f)` of that stream, restarted for every regime so all regimes
/// see the same noise, order and preferences.
pub fn run_hiring_values(config: &HiringConfig, workers: usize) -> Result<Vec<Vec<Vec<f64>>>> {
    config.validate()?;
    let per_run = crate::harness::replicate_map(config.n_runs, workers, |r| {
        let mut stream = crate::rng::derive_stream(config.seed, r);
        let market = generate_market(config.n_candidates, &mut stream)?;
        config
            .firms_grid
            .iter()
            .map(|&f| {
                let sub = stream.child(f as u64);
                config
                    .regimes
                    .iter()
                    .map(|&regime| hire_once(&market, f, regime, config, &mut sub.clone()))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok((0..config.firms_grid.len())
        .map(|fi| {
            (0..config.regimes.len())
                .map(|ri| per_run.iter().map(|run| run[fi][ri]).collect())
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiringCell {
    pub firms: usize,
    pub regime: Regime,
    pub performance: crate::stats::Estimate,
}

pub fn run_hiring(config: &HiringConfig, workers: usize) -> Result<Vec<HiringCell>> {
    let values = run_hiring_values(config, workers)?;
    let mut cells = Vec::new();
    for (fi, &firms) in config.firms_grid.iter().enumerate() {
        for (ri, &regime) in config.regimes.iter().enumerate() {
            cells.push(HiringCell {
                firms,
                regime,
                performance: crate::stats::Estimate::from_values(&values[fi][ri]),
            });
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    const A: usize = 0;
    const B: usize = 1;
    const C: usize = 2;

    /// Scores realizing the given strict rankings (best first).
    fn table_from_rankings(rankings: &[&[usize]]) -> ScoreTable {
        let n = rankings[0].len();
        let rows = rankings
            .iter()
            .map(|r| {
                let mut row = vec![0.0; n];
                for (pos, &c) in r.iter().enumerate() {
                    row[c] = (n - pos) as f64;
                }
                row
            })
            .collect();
        ScoreTable::from_rows(Regime::Poly, rows).unwrap()
    }

    #[test]
    fn hiring_order_examples() {
        let t = table_from_rankings(&[&[A, B, C], &[A, C, B]]);
        let first = sequential_hire(&t, &[0, 1], 1).unwrap();
        assert_eq!(first.assignment(), &[Some(0), None, Some(1)]);
        let second = sequential_hire(&t, &[1, 0], 1).unwrap();
        assert_eq!(second.assignment(), &[Some(1), Some(0), None]);
    }

    #[test]
    fn single_firm_single_candidate() {
        let t = ScoreTable::from_rows(Regime::Mono, vec![vec![0.3]]).unwrap();
        assert_eq!(sequential_hire(&t, &[0], 1).unwrap().assignment(), &[Some(0)]);
        let prefs = CandidatePrefs::new(vec![vec![0]]).unwrap();
        assert_eq!(
            deferred_acceptance(&t, &prefs, 1).unwrap().assignment(),
            &[Some(0)]
        );
    }

    #[test]
    fn sequential_rejects_short_markets_and_bad_orders() {
        let t = ScoreTable::from_rows(Regime::Poly, vec![vec![1.0], vec![2.0]]).unwrap();
        assert!(sequential_hire(&t, &[0, 1], 1).is_err());
        let t = table_from_rankings(&[&[A, B, C], &[A, C, B]]);
        assert!(sequential_hire(&t, &[0, 0], 1).is_err());
        assert!(sequential_hire(&t, &[0, 1], 2).is_err());
    }

    #[test]
    fn ties_go_to_lower_index() {
        let t = ScoreTable::from_rows(Regime::Mono, vec![vec![1.0, 1.0, 1.0]]).unwrap();
        assert_eq!(
            sequential_hire(&t, &[0], 1).unwrap().assignment(),
            &[Some(0), None, None]
        );
        assert!(t.prefers(0, 0, 2));
        assert!(!t.prefers(0, 2, 0));
    }

    #[test]
    fn da_respects_candidate_preferences() {
        // Both firms score A > B; A prefers F2, B prefers F1.
        let t = ScoreTable::from_rows(Regime::Poly, vec![vec![2.0, 1.0], vec![2.0, 1.0]]).unwrap();
        let prefs = CandidatePrefs::new(vec![vec![1, 0], vec![0, 1]]).unwrap();
        let out = deferred_acceptance(&t, &prefs, 1).unwrap();
        assert_eq!(out.assignment(), &[Some(1), Some(0)]);
        assert!(blocking_pairs(&t, &prefs, 1, &out).is_empty());
    }

    #[test]
    fn da_under_shared_ranking_is_serial_dictatorship() {
        // Shared ranking A > B > C; A and B both prefer F1.
        let row = vec![3.0, 2.0, 1.0];
        let t = ScoreTable::shared(Regime::Mono, 2, row.clone()).unwrap();
        let prefs = CandidatePrefs::new(vec![vec![0, 1], vec![0, 1], vec![1, 0]]).unwrap();
        let out = deferred_acceptance(&t, &prefs, 1).unwrap();
        assert_eq!(out.assignment(), &[Some(0), Some(1), None]);
        assert_eq!(out, serial_dictatorship(&row, &prefs, 2, 1));
    }

    #[test]
    fn blocking_pair_detected() {
        let t = ScoreTable::from_rows(Regime::Poly, vec![vec![2.0, 1.0], vec![2.0, 1.0]]).unwrap();
        let prefs = CandidatePrefs::new(vec![vec![1, 0], vec![0, 1]]).unwrap();
        // A with F1 and B with F2: A prefers F2 and F2 prefers A over B.
        let bad = HiringOutcome::new(vec![Some(0), Some(1)]);
        assert_eq!(blocking_pairs(&t, &prefs, 1, &bad), vec![(1, 0)]);
    }

    #[test]
    fn zero_noise_scores_equal_values() {
        let mut s = derive_stream(5, 0);
        let market = generate_market(50, &mut s).unwrap();
        for regime in Regime::ALL {
            let t = score_regime(&market, 4, 0.0, regime, &mut s).unwrap();
            for f in 0..4 {
                assert_eq!(t.row(f), market.values());
            }
        }
    }

    #[test]
    fn single_firm_poly_equals_ensemble() {
        let mut s = derive_stream(6, 0);
        let market = generate_market(30, &mut s).unwrap();
        let poly = score_regime(&market, 1, 0.5, Regime::Poly, &mut s.clone()).unwrap();
        let ens = score_regime(&market, 1, 0.5, Regime::EnsembleMono, &mut s.clone()).unwrap();
        assert_eq!(poly.row(0), ens.row(0));
    }

    #[test]
    fn regime_row_structure() {
        let mut s = derive_stream(7, 0);
        let market = generate_market(40, &mut s).unwrap();
        for regime in [Regime::Mono, Regime::EnsembleMono] {
            let t = score_regime(&market, 5, 0.5, regime, &mut s.clone()).unwrap();
            for f in 1..5 {
                assert_eq!(t.row(f), t.row(0));
            }
        }
        let t = score_regime(&market, 5, 0.5, Regime::Poly, &mut s).unwrap();
        for f in 1..5 {
            assert_ne!(t.row(f), t.row(0));
        }
    }

    #[test]
    fn ensemble_noise_variance_shrinks() {
        let mut s = derive_stream(8, 0);
        let n = 100_000;
        let market = MarketInstance::new(vec![0.0; n]).unwrap();
        let t = score_regime(&market, 25, 0.5, Regime::EnsembleMono, &mut s).unwrap();
        let var = t.row(0).iter().map(|x| x * x).sum::<f64>() / n as f64;
        let expected = 0.25 / 25.0;
        assert!((var - expected).abs() / expected < 0.05, "var {var}");
    }

    #[test]
    fn market_generation() {
        assert!(generate_market(0, &mut derive_stream(1, 0)).is_err());
        let one = generate_market(1, &mut derive_stream(1, 0)).unwrap();
        assert!(one.values()[0].is_finite());
        assert_eq!(
            generate_market(10, &mut derive_stream(2, 3)).unwrap(),
            generate_market(10, &mut derive_stream(2, 3)).unwrap()
        );
        let mut total = 0.0;
        for r in 0..1000 {
            total += generate_market(1000, &mut derive_stream(77, r))
                .unwrap()
                .values()
                .iter()
                .sum::<f64>();
        }
        assert!((total / 1e6).abs() < 0.01);
    }

    #[test]
    fn prefs_generation() {
        let p = generate_prefs(5, 1, &mut derive_stream(1, 0)).unwrap();
        assert!((0..5).all(|c| p.ordering(c) == [0]));
        assert_eq!(
            generate_prefs(20, 4, &mut derive_stream(4, 4)).unwrap(),
            generate_prefs(20, 4, &mut derive_stream(4, 4)).unwrap()
        );
        let n = 600_000;
        let p = generate_prefs(n, 3, &mut derive_stream(9, 9)).unwrap();
        let mut counts = std::collections::BTreeMap::new();
        for c in 0..n {
            *counts.entry(p.ordering(c).to_vec()).or_insert(0usize) += 1;
        }
        let q = 1.0 / 6.0;
        let se = (q * (1.0 - q) / n as f64).sqrt();
        assert_eq!(counts.len(), 6);
        for c in counts.values() {
            assert!((*c as f64 / n as f64 - q).abs() < 3.0 * se);
        }
    }

    #[test]
    fn normalized_performance_extremes() {
        let market = MarketInstance::new(vec![1.0, 0.0, -1.0]).unwrap();
        let mid = HiringOutcome::new(vec![None, Some(0), None]);
        assert_eq!(normalized_performance(&mid, &market).unwrap(), 0.5);
        let top = HiringOutcome::new(vec![Some(0), None, None]);
        assert_eq!(normalized_performance(&top, &market).unwrap(), 1.0);
        let bottom = HiringOutcome::new(vec![None, Some(0), Some(1)]);
        assert_eq!(normalized_performance(&bottom, &market).unwrap(), 0.0);
        let none = HiringOutcome::new(vec![None, None, None]);
        assert!(normalized_performance(&none, &market).is_err());
    }

    #[test]
    fn zero_noise_sequential_is_optimal() {
        let config = HiringConfig {
            n_candidates: 60,
            firms_grid: vec![1, 5, 20],
            noise_sd: 0.0,
            n_runs: 20,
            seed: 3,
            ..HiringConfig::new(HiringMode::Sequential)
        };
        for v in run_hiring_values(&config, 1).unwrap().iter().flatten().flatten() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sequential_hires_exactly_one_per_firm() {
        let mut s = derive_stream(10, 0);
        let market = generate_market(50, &mut s).unwrap();
        for regime in Regime::ALL {
            let t = score_regime(&market, 7, 0.5, regime, &mut s).unwrap();
            let out = sequential_hire(&t, &s.permutation(7), 1).unwrap();
            assert_eq!(out.matched_count(), 7);
            assert_eq!(out.unmatched().count(), 43);
            assert_eq!(out.load(7), vec![1; 7]);
        }
    }

    #[test]
    fn da_output_is_stable_and_within_capacity() {
        let mut s = derive_stream(12, 0);
        for _ in 0..20 {
            let market = generate_market(60, &mut s).unwrap();
            for regime in Regime::ALL {
                let t = score_regime(&market, 4, 0.5, regime, &mut s).unwrap();
                let prefs = generate_prefs(60, 4, &mut s).unwrap();
                let out = deferred_acceptance(&t, &prefs, 5).unwrap();
                assert!(out.load(4).iter().all(|&l| l == 5));
                assert!(blocking_pairs(&t, &prefs, 5, &out).is_empty());
                if regime != Regime::Poly {
                    assert_eq!(out, serial_dictatorship(t.row(0), &prefs, 4, 5));
                }
            }
        }
    }

    #[test]
    fn hiring_config_validation() {
        let mut c = HiringConfig::new(HiringMode::Simultaneous);
        assert_eq!(c.capacity, 10);
        c.firms_grid = vec![100];
        assert!(c.validate().is_err());
        let c = HiringConfig {
            n_runs: 0,
            ..HiringConfig::new(HiringMode::Sequential)
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn degenerate_metric_signalled() {
        let market = MarketInstance::new(vec![0.5, 0.5]).unwrap();
        let out = HiringOutcome::new(vec![Some(0), None]);
        assert!(matches!(
            normalized_performance(&out, &market),
            Err(Error::DegenerateMetric)
        ));
        let all = HiringOutcome::new(vec![Some(0), Some(1)]);
        let market = MarketInstance::new(vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            normalized_performance(&all, &market),
            Err(Error::DegenerateMetric)
        ));
    }

    proptest::proptest! {
        #[test]
        fn da_is_stable_and_feasible(
            n_firms in 1usize..5,
            n_cand in 1usize..12,
            capacity in 1usize..4,
            seed in 0u64..10_000,
        ) {
            let mut s = derive_stream(seed, 1);
            let rows: Vec<Vec<f64>> = (0..n_firms).map(|_| (0..n_cand).map(|_| s.uniform()).collect()).collect();
            let t = ScoreTable::from_rows(Regime::Poly, rows).unwrap();
            let prefs = generate_prefs(n_cand, n_firms, &mut s).unwrap();
            let out = deferred_acceptance(&t, &prefs, capacity).unwrap();
            proptest::prop_assert!(out.load(n_firms).iter().all(|&l| l <= capacity));
            proptest::prop_assert_eq!(out.matched_count(), n_cand.min(n_firms * capacity));
            proptest::prop_assert!(blocking_pairs(&t, &prefs, capacity, &out).is_empty());
        }
    }
}
