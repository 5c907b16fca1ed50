//! Sequential / data-parallel execution of per-cell passes.
//!
//! Every pass in this crate is written once as a per-index closure and handed
//! to [`map_indexed`]. With the `parallel` feature the closure runs on the
//! rayon pool; without it (or with [`Execution::Sequential`]) it runs on the
//! calling thread. Floating-point sums go through [`sum`], which reduces over
//! fixed-size chunks so the result is bit-identical in both modes.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length used by [`sum`]; fixed so reductions do not depend on thread count.
pub const REDUCTION_CHUNK: usize = 1024;

/// How a per-cell pass is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise sequential.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Evaluates `f(i)` for `i in 0..n` and collects the results in index order.
pub fn map_indexed<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Applies `f` to every element of `items`, preserving order.
pub fn map_slice<S, T, F>(items: &[S], exec: Execution, f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    map_indexed(items.len(), exec, |i| f(&items[i]))
}

/// Deterministic sum: chunk sums in index order, then a pairwise reduction
/// over the chunk sums.
pub fn sum(values: &[f64], exec: Execution) -> f64 {
    let chunks = values.len().div_ceil(REDUCTION_CHUNK);
    let partial = map_indexed(chunks, exec, |c| {
        let lo = c * REDUCTION_CHUNK;
        let hi = (lo + REDUCTION_CHUNK).min(values.len());
        values[lo..hi].iter().sum::<f64>()
    });
    pairwise(&partial)
}

fn pairwise(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (l, r) = values.split_at(n / 2);
            pairwise(l) + pairwise(r)
        }
    }
}
