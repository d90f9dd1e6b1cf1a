//! Reproducible parallel replication. Replicate `i` of a check labelled `l`
//! draws from `stream(labelled_seed(seed, l), i)`, and results are collected
//! in replicate order, so output does not depend on the number of workers.

use rayon::prelude::*;
use splitree_core::rng::{labelled_seed, stream, Stream};
use splitree_core::sim::TreeSimulator;

pub fn replicate<T, F>(seed: u64, label: &str, n: u64, f: F) -> splitree_core::Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut Stream, &mut TreeSimulator) -> splitree_core::Result<T> + Sync,
{
    let key = labelled_seed(seed, label);
    (0..n)
        .into_par_iter()
        .map_init(TreeSimulator::default, |sim, i| f(&mut stream(key, i), sim))
        .collect()
}

/// Runs `f` on a pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> anyhow::Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            Ok(pool.install(f))
        }
    }
}
