//! Tiny seam between the rayon-backed and sequential builds.
//!
//! Everything data-parallel in this crate (cell-table builds, per-epsilon
//! error sweeps) funnels through [`map_collect`]. Results land at the index
//! of their input, so output is deterministic regardless of scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn map_collect<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_iter().map(f).collect()
}

/// True when this build fans work out across threads.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}
