//! Sequential / rayon execution switch.
//!
//! `Execution::Parallel` maps work items with rayon when the `parallel`
//! feature is enabled and silently degrades to a plain loop otherwise.
//! Either way results come back in input order, so callers get identical
//! output regardless of the mode or thread count.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn map_indexed<T, F>(self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..count).map(f).collect(),
            Execution::Parallel => par_map(count, f),
        }
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).map(f).collect()
}

/// Runs `op` inside a thread pool of `threads` workers (parallel builds only).
#[cfg(feature = "parallel")]
pub fn with_threads<R: Send>(threads: Option<usize>, op: impl FnOnce() -> R + Send) -> R {
    match threads {
        Some(k) if k > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .expect("failed to build rayon thread pool")
            .install(op),
        _ => op(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<R: Send>(_threads: Option<usize>, op: impl FnOnce() -> R + Send) -> R {
    op()
}
