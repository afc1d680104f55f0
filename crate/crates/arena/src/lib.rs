//! Experiment harness for the two-advertiser auto-bidding auctions in
//! `arena-core`: instance files, seeded experiments, bound curves,
//! lower-bound verification, plots and the acceptance suite.

pub mod acceptance;
pub mod curves;
pub mod experiment;
pub mod format;
pub mod plot;

use std::num::NonZeroUsize;

/// Number of worker threads: `ARENA_THREADS` if set to a positive integer,
/// otherwise the available parallelism.
pub fn worker_threads() -> usize {
    std::env::var("ARENA_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, NonZeroUsize::get))
}

/// Runs `f` inside a rayon pool sized by [`worker_threads`].
pub fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> anyhow::Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads())
        .build()?;
    Ok(pool.install(f))
}
