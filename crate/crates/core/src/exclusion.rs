//! Exact joblessness probabilities under uniformly random rankings, and
//! hiring-order sensitivity of sequential one-hire-per-firm allocation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use itertools::Itertools;
use num_bigint::BigUint;
use num_integer::binomial;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::hiring::{sequential_hire, Regime, ScoreTable};

pub const MAX_ENUM_CANDIDATES: usize = 6;
pub const MAX_ENUM_FIRMS: usize = 4;
pub const MAX_ORDER_FIRMS: usize = 6;

/// A probability held as a reduced fraction of arbitrary-precision integers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactProbability(Ratio<BigUint>);

impl ExactProbability {
    pub fn new(numerator: BigUint, denominator: BigUint) -> Result<Self> {
        if denominator.is_zero() {
            return Err(Error::invalid("denominator", "must be positive"));
        }
        if numerator > denominator {
            return Err(Error::invalid("numerator", "probability exceeds one"));
        }
        Ok(Self(Ratio::new(numerator, denominator)))
    }

    pub fn from_u64(numerator: u64, denominator: u64) -> Result<Self> {
        Self::new(numerator.into(), denominator.into())
    }

    pub fn zero() -> Self {
        Self(Ratio::zero())
    }

    pub fn one() -> Self {
        Self(Ratio::one())
    }

    pub fn numerator(&self) -> &BigUint {
        self.0.numer()
    }

    pub fn denominator(&self) -> &BigUint {
        self.0.denom()
    }

    pub fn as_ratio(&self) -> &Ratio<BigUint> {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        match (self.numerator().to_f64(), self.denominator().to_f64()) {
            (Some(n), Some(d)) if d.is_finite() && n.is_finite() => n / d,
            // Huge operands: scale both down before dividing.
            _ => {
                let shift = self.denominator().bits().saturating_sub(1000);
                let n = (self.numerator() >> shift).to_f64().unwrap_or(f64::NAN);
                let d = (self.denominator() >> shift).to_f64().unwrap_or(f64::NAN);
                n / d
            }
        }
    }
}

impl fmt::Display for ExactProbability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator(), self.denominator())
    }
}

fn factorial(n: usize) -> BigUint {
    (1..=n as u64).map(BigUint::from).product()
}

fn check_enumerable(n_candidates: usize, n_firms: usize) -> Result<()> {
    if n_firms == 0 || n_candidates == 0 {
        return Err(Error::invalid("firms", "need at least one firm and one candidate"));
    }
    if n_firms > n_candidates {
        return Err(Error::invalid(
            "firms",
            "more firms than candidates leaves jobs unfilled",
        ));
    }
    if n_candidates > MAX_ENUM_CANDIDATES || n_firms > MAX_ENUM_FIRMS {
        return Err(Error::TooLargeToEnumerate(format!(
            "{n_candidates} candidates and {n_firms} firms (limits {MAX_ENUM_CANDIDATES} and {MAX_ENUM_FIRMS})"
        )));
    }
    Ok(())
}

/// Exact per-candidate probability of being left jobless when firms
/// `0..n_firms` hire one candidate each, in that order, and every ranking of
/// the candidates is equally likely. Mono (and EnsembleMono) share a single
/// ranking; Poly draws one ranking per firm independently.
pub fn enumerate_sequential_outcomes(
    n_candidates: usize,
    n_firms: usize,
    regime: Regime,
) -> Result<Vec<ExactProbability>> {
    check_enumerable(n_candidates, n_firms)?;
    let (jobless, total) = match regime {
        Regime::Mono | Regime::EnsembleMono => shared_ranking_counts(n_candidates, n_firms),
        Regime::Poly => independent_ranking_counts(n_candidates, n_firms),
    };
    jobless
        .into_iter()
        .map(|j| ExactProbability::new(j, total.clone()))
        .collect()
}

fn shared_ranking_counts(n_candidates: usize, n_firms: usize) -> (Vec<BigUint>, BigUint) {
    let mut jobless = vec![0u64; n_candidates];
    let mut total = 0u64;
    for ranking in (0..n_candidates).permutations(n_candidates) {
        total += 1;
        // Each firm in turn takes the best remaining, so the shared ranking's
        // tail is what is left over.
        for &c in &ranking[n_firms..] {
            jobless[c] += 1;
        }
    }
    (jobless.into_iter().map(BigUint::from).collect(), total.into())
}

/// Sums over the product of independent rankings, one per firm. Firm `f`'s
/// pick depends only on its own ranking and the set still available, so the
/// product space is tallied one firm at a time, memoized on that set.
fn independent_ranking_counts(n_candidates: usize, n_firms: usize) -> (Vec<BigUint>, BigUint) {
    let rankings: Vec<Vec<usize>> = (0..n_candidates).permutations(n_candidates).collect();
    let mut top_tally: HashMap<u32, Vec<u64>> = HashMap::new();
    let mut memo: HashMap<(usize, u32), Vec<BigUint>> = HashMap::new();
    let full = (1u32 << n_candidates) - 1;
    let jobless = jobless_weights(0, full, n_firms, n_candidates, &rankings, &mut top_tally, &mut memo);
    let total = factorial(n_candidates).pow(n_firms as u32);
    (jobless, total)
}

fn jobless_weights(
    firm: usize,
    remaining: u32,
    n_firms: usize,
    n_candidates: usize,
    rankings: &[Vec<usize>],
    top_tally: &mut HashMap<u32, Vec<u64>>,
    memo: &mut HashMap<(usize, u32), Vec<BigUint>>,
) -> Vec<BigUint> {
    if firm == n_firms {
        return (0..n_candidates)
            .map(|c| BigUint::from(u32::from(remaining & (1 << c) != 0)))
            .collect();
    }
    if let Some(hit) = memo.get(&(firm, remaining)) {
        return hit.clone();
    }
    let tally = top_tally
        .entry(remaining)
        .or_insert_with(|| {
            let mut t = vec![0u64; n_candidates];
            for r in rankings {
                let top = r
                    .iter()
                    .copied()
                    .find(|&c| remaining & (1 << c) != 0)
                    .expect("remaining set is nonempty");
                t[top] += 1;
            }
            t
        })
        .clone();
    let mut acc = vec![BigUint::zero(); n_candidates];
    for (pick, &ways) in tally.iter().enumerate() {
        if ways == 0 {
            continue;
        }
        let sub = jobless_weights(
            firm + 1,
            remaining & !(1 << pick),
            n_firms,
            n_candidates,
            rankings,
            top_tally,
            memo,
        );
        for (a, s) in acc.iter_mut().zip(sub) {
            *a += s * ways;
        }
    }
    memo.insert((firm, remaining), acc.clone());
    acc
}

/// Probability that every member of a `group_size` group is jobless when the
/// jobless set is a uniformly random subset of size `n_candidates - n_jobs`.
pub fn veil_group_exclusion(
    n_candidates: usize,
    n_jobs: usize,
    group_size: usize,
) -> Result<ExactProbability> {
    if n_jobs > n_candidates {
        return Err(Error::invalid("jobs", "cannot exceed the number of candidates"));
    }
    if group_size > n_candidates {
        return Err(Error::invalid("group-size", "cannot exceed the number of candidates"));
    }
    let jobless = n_candidates - n_jobs;
    if group_size > jobless {
        return Ok(ExactProbability::zero());
    }
    let big = |x: usize| BigUint::from(x as u64);
    ExactProbability::new(
        binomial(big(n_candidates - group_size), big(jobless - group_size)),
        binomial(big(n_candidates), big(jobless)),
    )
}

/// Unmatched candidates for every firm order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderSensitivity {
    pub unmatched: BTreeMap<Vec<usize>, BTreeSet<usize>>,
    pub sensitive: bool,
}

/// Runs one-hire-per-firm sequential allocation under every firm order.
/// `rankings[f]` lists candidate indices best first.
pub fn hiring_order_sensitivity(rankings: &[Vec<usize>]) -> Result<OrderSensitivity> {
    let n_firms = rankings.len();
    if n_firms == 0 {
        return Err(Error::invalid("rankings", "need at least one firm"));
    }
    if n_firms > MAX_ORDER_FIRMS {
        return Err(Error::TooLargeToEnumerate(format!(
            "{n_firms} firms (limit {MAX_ORDER_FIRMS})"
        )));
    }
    let n_candidates = rankings[0].len();
    let rows = rankings
        .iter()
        .map(|r| {
            let mut seen = vec![false; n_candidates];
            if r.len() != n_candidates || r.iter().any(|&c| c >= n_candidates || std::mem::replace(&mut seen[c], true)) {
                return Err(Error::invalid(
                    "rankings",
                    "each ranking must order the same candidates exactly once",
                ));
            }
            let mut row = vec![0.0; n_candidates];
            for (pos, &c) in r.iter().enumerate() {
                row[c] = (n_candidates - pos) as f64;
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let table = ScoreTable::from_rows(Regime::Poly, rows)?;

    let mut unmatched = BTreeMap::new();
    for order in (0..n_firms).permutations(n_firms) {
        let outcome = sequential_hire(&table, &order, 1)?;
        unmatched.insert(order, outcome.unmatched().collect::<BTreeSet<_>>());
    }
    let sensitive = unmatched.values().tuple_windows().any(|(a, b)| a != b);
    Ok(OrderSensitivity {
        unmatched,
        sensitive,
    })
}
