//! Batch proving over independent problems, one private e-graph each.
//!
//! With the `parallel` feature (default) the batch maps over a rayon pool;
//! without it the same function runs sequentially. Results always come
//! back in input order, and each result is bitwise identical either way —
//! parallelism never crosses a problem boundary.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::pipeline::{prove_problem, ProveError, ProveOutcome};
use crate::problem::ProblemFile;

/// Prove every problem, in input order.
pub fn prove_batch(problems: &[ProblemFile]) -> Vec<Result<ProveOutcome, ProveError>> {
    #[cfg(feature = "parallel")]
    {
        prove_batch_with_jobs(problems, 0)
    }
    #[cfg(not(feature = "parallel"))]
    {
        prove_batch_serial(problems)
    }
}

/// Sequential reference path, kept unconditionally for benchmarks and for
/// pinning down any suspected parallelism issue.
pub fn prove_batch_serial(problems: &[ProblemFile]) -> Vec<Result<ProveOutcome, ProveError>> {
    problems.iter().map(prove_problem).collect()
}

/// Prove a batch on a dedicated pool of `jobs` threads (0 = default size).
///
/// The batch level always runs on its own pool: its workers block joining
/// the per-problem prove threads, which feed their inner match-collection
/// parallelism to the global pool, so the two levels never starve each
/// other.
#[cfg(feature = "parallel")]
pub fn prove_batch_with_jobs(
    problems: &[ProblemFile],
    jobs: usize,
) -> Vec<Result<ProveOutcome, ProveError>> {
    if jobs == 1 {
        return prove_batch_serial(problems);
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if jobs > 0 {
        builder = builder.num_threads(jobs);
    }
    match builder.build() {
        Ok(pool) => pool.install(|| problems.par_iter().map(prove_problem).collect()),
        Err(_) => prove_batch_serial(problems),
    }
}
