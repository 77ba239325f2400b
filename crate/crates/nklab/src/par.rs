// SPDX-License-Identifier: Apache-2.0

//! Data-parallel map with a sequential fallback.

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is on.
pub fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential version, always available for comparisons.
pub fn map_indices_seq<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Runs `f` over the samples either way, selected at run time.
pub fn map_with<T, F>(parallel: bool, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if parallel {
        map_indices(n, f)
    } else {
        map_indices_seq(n, f)
    }
}
