//! Data-parallel helpers that fall back to plain iterators when the
//! `parallel` feature is off. Every helper preserves input order in its
//! output, so results are identical in both builds.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `range.map(f).collect()`, in parallel when enabled.
#[cfg(feature = "parallel")]
pub(crate) fn map_range<T, F>(range: Range<u32>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u32) -> T + Sync + Send,
{
    range.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_range<T, F>(range: Range<u32>, f: F) -> Vec<T>
where
    F: Fn(u32) -> T,
{
    range.map(f).collect()
}

/// Maps a slice element-wise, in parallel when enabled.
#[cfg(feature = "parallel")]
pub(crate) fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    F: Fn(&S) -> T,
{
    items.iter().map(f).collect()
}

/// Applies `f` to every element of a mutable slice.
#[cfg(feature = "parallel")]
pub(crate) fn for_each_mut<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    items.par_iter_mut().enumerate().for_each(|(k, x)| f(k, x));
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn for_each_mut<T, F>(items: &mut [T], f: F)
where
    F: Fn(usize, &mut T),
{
    items.iter_mut().enumerate().for_each(|(k, x)| f(k, x));
}

/// Whether this build evaluates in parallel.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
