//! Plane-parallel execution helpers.
//!
//! With the `parallel` feature every independent output plane is computed on
//! the rayon pool; without it the same closures run serially. Each plane is
//! written by exactly one closure call, so results are bitwise identical
//! across both paths and any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Calls `f(plane_index, plane)` for each `plane_len` chunk of `out`.
pub(crate) fn for_each_plane<F>(out: &mut [f32], plane_len: usize, f: F)
where
    F: Fn(usize, &mut [f32]) + Send + Sync,
{
    if plane_len == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    out.par_chunks_mut(plane_len)
        .enumerate()
        .for_each(|(i, p)| f(i, p));
    #[cfg(not(feature = "parallel"))]
    out.chunks_mut(plane_len)
        .enumerate()
        .for_each(|(i, p)| f(i, p));
}

/// Maps `0..n` to values, preserving order.
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    return (0..n).into_par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    return (0..n).map(f).collect();
}

/// True when the crate was built with the rayon backend.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
