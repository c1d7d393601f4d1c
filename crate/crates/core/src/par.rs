//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper produces output in index order, and reductions are performed
//! sequentially over fixed-size chunks, so results do not depend on the number
//! of worker threads or on whether the `parallel` feature is enabled.

/// Chunk length used for chunked reductions. Fixed so the summation order
/// never depends on the thread count.
pub const CHUNK: usize = 64;

/// `(0..n).map(f).collect()`, in parallel when available.
#[cfg(feature = "parallel")]
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Applies `f(row_index, row)` to each `width`-long row of `data`.
#[cfg(feature = "parallel")]
pub fn for_each_row_mut<T, F>(data: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    use rayon::prelude::*;
    data.par_chunks_mut(width).enumerate().for_each(|(i, row)| f(i, row));
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_row_mut<T, F>(data: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    data.chunks_mut(width).enumerate().for_each(|(i, row)| f(i, row));
}

/// Maps `f` over `[start, end)` chunks of `0..n` of length [`CHUNK`], returning
/// the per-chunk results in order. Callers fold them sequentially.
pub fn map_chunks<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, usize) -> T + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    map_range(chunks, |c| {
        let start = c * CHUNK;
        f(start, (start + CHUNK).min(n))
    })
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
