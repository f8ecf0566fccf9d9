//! Switch point between the rayon and sequential execution paths.
//!
//! Observation counts in the low hundreds are cheaper sequentially, so the
//! parallel path only engages above a threshold.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many items the parallel dispatch overhead dominates.
pub(crate) const PAR_THRESHOLD: usize = 2048;

/// Sum of `f` over `items`, parallel when the `parallel` feature is on and
/// the input is large enough.
#[cfg(feature = "parallel")]
pub(crate) fn sum_mapped<T: Sync, F: Fn(&T) -> f64 + Sync>(items: &[T], f: F) -> f64 {
    if items.len() >= PAR_THRESHOLD {
        items.par_iter().map(&f).sum()
    } else {
        items.iter().map(&f).sum()
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn sum_mapped<T, F: Fn(&T) -> f64>(items: &[T], f: F) -> f64 {
    items.iter().map(&f).sum()
}

/// Sum of `f(i)` for `i` in `0..n`, parallel under the same conditions as
/// [`sum_mapped`].
#[cfg(feature = "parallel")]
pub(crate) fn sum_indexed<F: Fn(usize) -> f64 + Sync>(n: usize, f: F) -> f64 {
    if n >= PAR_THRESHOLD {
        (0..n).into_par_iter().map(&f).sum()
    } else {
        (0..n).map(&f).sum()
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn sum_indexed<F: Fn(usize) -> f64>(n: usize, f: F) -> f64 {
    (0..n).map(&f).sum()
}

/// Maps `f` over `items`, parallel under the same conditions as
/// [`sum_mapped`].
#[cfg(feature = "parallel")]
pub(crate) fn map_collect<T: Sync, R: Send, F: Fn(&T) -> R + Sync>(items: &[T], f: F) -> Vec<R> {
    if items.len() >= PAR_THRESHOLD {
        items.par_iter().map(&f).collect()
    } else {
        items.iter().map(&f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_collect<T, R, F: Fn(&T) -> R>(items: &[T], f: F) -> Vec<R> {
    items.iter().map(&f).collect()
}
