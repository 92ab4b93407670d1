//! Order-preserving data-parallel helpers.
//!
//! With the `parallel` feature these dispatch to rayon; without it they run
//! sequentially. Results are always returned in input order so callers can rely
//! on identical output in both modes.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution mode for loops that support both paths at runtime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// `Parallel` when the crate was built with rayon, `Sequential` otherwise.
    pub fn available() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Maps `op` over `items`, preserving order.
pub fn map<T, R, F>(items: &[T], op: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_with(Execution::Parallel, items, op)
}

/// Like [`map`] with an explicit execution mode.
pub fn map_with<T, R, F>(mode: Execution, items: &[T], op: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        Execution::Parallel => items.par_iter().map(op).collect(),
        _ => items.iter().map(op).collect(),
    }
}

/// Maps `op` over `0..n`, preserving order.
pub fn map_range<R, F>(mode: Execution, n: usize, op: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().map(op).collect(),
        _ => (0..n).map(op).collect(),
    }
}

/// Runs `op` over `items` with at most `limit` items in flight at once.
///
/// Used by the network-bound stages (caption revision, embedding requests).
pub fn map_bounded<T, R, F>(limit: usize, items: &[T], op: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    let limit = limit.max(1);
    #[cfg(feature = "parallel")]
    {
        if limit > 1 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(limit).build() {
                return pool.install(|| items.par_iter().map(&op).collect());
            }
        }
    }
    items.iter().map(op).collect()
}
