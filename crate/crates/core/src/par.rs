//! Execution facade: data-parallel maps on rayon behind the `parallel`
//! feature, plain iterators otherwise.
//!
//! All helpers are index-preserving maps, so results are byte-identical
//! regardless of thread count or feature selection. Reductions that would
//! be sensitive to summation order are kept sequential at the call sites.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Minimum per-thread chunk for voxel-indexed loops; keeps rayon overhead
/// below the cost of the tiny per-voxel kernels.
const MIN_CHUNK: usize = 4096;

/// Map over `0..n`, parallel when the `parallel` feature is on.
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().with_min_len(MIN_CHUNK).map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Map over a slice, parallel when the `parallel` feature is on.
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
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

/// Map over `0..n` with a work item per index that is heavy enough to
/// justify one task each (fold runs, per-patient generation).
pub fn map_tasks<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Cap the global rayon pool from the `COMPASS_THREADS` env var.
///
/// No-op when the variable is unset, unparsable, or the pool is already
/// built; no-op entirely without the `parallel` feature.
pub fn configure_threads_from_env() {
    #[cfg(feature = "parallel")]
    {
        if let Ok(raw) = std::env::var("COMPASS_THREADS") {
            if let Ok(n) = raw.trim().parse::<usize>() {
                if n >= 1 {
                    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_range_preserves_index_order() {
        let out = map_range(10_000, |i| i * 2);
        assert_eq!(out[0], 0);
        assert_eq!(out[9_999], 19_998);
        assert!(out.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn map_slice_matches_sequential() {
        let xs: Vec<f64> = (0..5000).map(|i| i as f64).collect();
        let par: Vec<f64> = map_slice(&xs, |x| x.sqrt());
        let seq: Vec<f64> = xs.iter().map(|x| x.sqrt()).collect();
        assert_eq!(par, seq);
    }
}
