use rayon::prelude::*;

/// Maps `f` over `items`, keeping input order. `jobs <= 1` runs on the
/// calling thread; otherwise a dedicated pool of `jobs` threads is used.
pub(crate) fn map_ordered<T, R, E, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    if jobs > 1 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            return pool.install(|| items.par_iter().map(&f).collect());
        }
        log::warn!("could not start a {jobs}-thread pool, running sequentially");
    }
    items.iter().map(f).collect()
}
