//! Data-parallel mapping with a sequential fallback.
//!
//! With the `parallel` feature (default) the helpers fan out over rayon;
//! without it they run sequentially. Outputs are collected in input order
//! either way, so results never depend on the worker count. Reductions that
//! must be bit-deterministic (gradient sums, metric aggregation) map to
//! per-item values here and fold sequentially at the call site.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map over a slice, in parallel when the `parallel` feature is enabled.
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Map with the item index, in parallel when the feature is enabled.
pub fn map_indexed<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}

/// Sequential twin of [`map`], kept callable regardless of features so the
/// benchmark suite can compare both code paths.
pub fn map_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Sequential twin of [`map_indexed`].
pub fn map_indexed_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(usize, &T) -> U,
{
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

/// Size the global worker pool. Results never depend on the worker count;
/// this only trades wall-clock time. Without the `parallel` feature a
/// request for more than one thread logs a warning.
pub fn configure_threads(threads: usize) {
    #[cfg(feature = "parallel")]
    {
        if threads >= 1 {
            // Errors only if a global pool already exists; keep that one.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        if threads > 1 {
            log::warn!("built without the 'parallel' feature; running single-threaded");
        }
    }
}
