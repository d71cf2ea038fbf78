//! Data-parallel map helpers.
//!
//! All corpus-scale loops go through [`map`], which fans out on rayon when
//! the `parallel` feature is enabled and degrades to a plain iterator
//! otherwise. Results are always collected in input order and reduced
//! sequentially afterwards, so outputs are bit-identical regardless of
//! thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub(crate) fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
