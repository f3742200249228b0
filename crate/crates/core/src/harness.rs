//! Replicate-parallel execution with index-ordered results.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Evaluates `f(r)` for `r in 0..n_runs` on `workers` threads and returns the
/// results in replicate order, so any downstream reduction is independent of
/// the worker count.
pub fn replicate_map<T, F>(n_runs: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    if workers <= 1 {
        return (0..n_runs as u64).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    pool.install(|| (0..n_runs as u64).into_par_iter().map(f).collect())
}
