//! Data-parallel driver for the independent inner loops (optimizer restarts,
//! sample sweeps). With the `parallel` feature the work runs on rayon; the
//! sequential fallback is the plain iterator. Results come back in index
//! order and callers reduce them sequentially, so both builds produce
//! bit-identical output.

#[cfg(feature = "parallel")]
pub(crate) fn indexed_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn indexed_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).map(f).collect()
}
