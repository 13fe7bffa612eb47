use rayon::prelude::*;

/// Evaluates `f` for every index in `0..n`, returning results in index order.
/// With `threads <= 1` (or when a pool cannot be built) this runs inline.
pub(crate) fn map_indices<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if threads > 1 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
    }
    (0..n).map(f).collect()
}
