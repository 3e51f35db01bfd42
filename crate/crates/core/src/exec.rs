//! Execution strategy for the data-parallel loops.
//!
//! Every parallel operation in this crate decomposes its work into chunks
//! whose boundaries depend only on the input, computes one value per chunk,
//! and combines the per-chunk values in chunk order. The result is therefore
//! bit-identical for [`Execution::Sequential`] and [`Execution::Parallel`]
//! and independent of the rayon thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Single-threaded reference path.
    Sequential,
    /// Rayon data-parallel path; falls back to sequential when the
    /// `parallel` feature is disabled.
    #[default]
    Parallel,
}

/// Applies `work` to every index in `0..n` and collects the results in
/// index order.
pub(crate) fn run_indexed<T, F>(n: usize, exec: Execution, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..n).map(work).collect(),
        Execution::Parallel => {
            #[cfg(feature = "parallel")]
            {
                (0..n).into_par_iter().map(work).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                (0..n).map(work).collect()
            }
        }
    }
}

/// Splits `data` into chunks of `chunk` elements and applies `work` to each,
/// passing the chunk index. Chunks are disjoint, so the mutation pattern is
/// identical in both execution modes.
pub(crate) fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, exec: Execution, work: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    match exec {
        Execution::Sequential => {
            for (i, c) in data.chunks_mut(chunk).enumerate() {
                work(i, c);
            }
        }
        Execution::Parallel => {
            #[cfg(feature = "parallel")]
            {
                data.par_chunks_mut(chunk)
                    .enumerate()
                    .for_each(|(i, c)| work(i, c));
            }
            #[cfg(not(feature = "parallel"))]
            {
                for (i, c) in data.chunks_mut(chunk).enumerate() {
                    work(i, c);
                }
            }
        }
    }
}

/// Number of `chunk`-sized pieces needed to cover `len` items.
pub(crate) fn chunk_count(len: usize, chunk: usize) -> usize {
    len.div_ceil(chunk)
}

/// Bounds of chunk `i` within `0..len`.
pub(crate) fn chunk_bounds(len: usize, chunk: usize, i: usize) -> (usize, usize) {
    let start = i * chunk;
    (start, (start + chunk).min(len))
}
