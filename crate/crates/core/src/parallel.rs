//! Index-ordered parallel map with a sequential fallback.
//!
//! Results are always returned in index order, so the output never depends on
//! scheduling or on the number of workers.

pub fn available_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Evaluate `f(0..count)`. `workers = None` uses the ambient rayon pool,
/// `Some(1)` runs on the calling thread.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(count: usize, workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;

    match workers {
        Some(0) | Some(1) => map_sequential(count, f),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| (0..count).into_par_iter().map(&f).collect()),
            Err(_) => map_sequential(count, f),
        },
        None => (0..count).into_par_iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(count: usize, _workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_sequential(count, f)
}

pub fn map_sequential<T, F: Fn(usize) -> T>(count: usize, f: F) -> Vec<T> {
    (0..count).map(f).collect()
}
