//! Sample-level parallelism with a sequential fallback.
//!
//! All parallel maps preserve input order, and every reduction in the crate
//! is done sequentially over the ordered results, so output is bitwise
//! identical whichever mode runs.

/// Execution mode for data-parallel loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise
    /// behaves like `Sequential`.
    #[default]
    Parallel,
}

impl Exec {
    /// Map `f` over `0..n`, collecting results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..n).map(f).collect(),
            Exec::Parallel => par_map(n, f),
        }
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
