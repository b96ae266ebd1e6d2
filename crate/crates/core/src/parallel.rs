//! Data-parallel helpers. With the `parallel` feature work items run on the
//! rayon pool; without it everything runs in order on the calling thread.
//! Output order always follows input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `f(0), f(1), ..., f(n - 1)` collected in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_sequential(n, f)
}

pub fn map_indexed_sequential<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Run `f` on a dedicated pool of `workers` threads (`None` uses the global
/// pool). Without the `parallel` feature this just calls `f`.
#[cfg(feature = "parallel")]
pub fn with_workers<R, F>(workers: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match workers {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(f),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<R, F>(_workers: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    f()
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
