//! Combinatorial-modulus machinery for estimating the Ahlfors-regular
//! conformal dimension of compact metric spaces.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! thread pools live in the `confdim` companion crate.

#![no_std]

extern crate alloc;

pub mod covering;
pub mod error;
pub mod exponent;
pub mod gauge;
pub mod graph;
pub mod hierarchy;
pub mod modulus;
pub mod nerve;
pub mod rng;
pub mod space;

mod math;
mod spatial;

pub use covering::{assign_genealogy, build_covering, deepest_level, descendants, CoveringHierarchy, Genealogy};
pub use error::{Error, Result};
pub use hierarchy::Hierarchy;
pub use nerve::{build_nerve, NerveGraph};
pub use space::{make_space, Generator, MetricSpace};

/// Work distribution used by the aggregation layers.
///
/// The core runs everything sequentially; the std companion plugs in a
/// thread pool.
pub trait Executor: Sync {
    fn map<T, R, F>(&self, items: alloc::vec::Vec<T>, f: F) -> alloc::vec::Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Sync + Send;
}

/// Runs jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, R, F>(&self, items: alloc::vec::Vec<T>, f: F) -> alloc::vec::Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Sync + Send,
    {
        items.into_iter().map(f).collect()
    }
}
