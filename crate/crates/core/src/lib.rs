//! Allocation-only core of the PathoGraph pipeline.
//!
//! Brain correlation graphs are pruned to their disease-relevant subgraphs
//! by an RBF-SVM subgraph classifier, node features are distilled by
//! cross-subject SVD scoring plus group-specific Bernoulli masking, and the
//! result is classified by a compact graph convolutional network.
//!
//! Nothing in this crate touches the filesystem, the clock or threads; the
//! `pathograph` companion crate supplies those.
#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod config;
pub mod distill;
pub mod error;
pub mod eval;
pub mod gcn;
pub mod graph;
pub mod linalg;
pub mod partition;
pub mod pathofilter;
pub mod rng;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{BrainGraph, Cohort, TimeSeries};
pub use linalg::{DenseMatrix, SvdResult};
pub use partition::Partition;

/// Source of monotonic wall-clock seconds, injected so the core stays
/// free of `std::time`.
pub trait Clock: Sync {
    fn now_seconds(&self) -> f64;
}

/// A clock that never advances. Timing fields come out as zero.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullClock;

impl Clock for NullClock {
    fn now_seconds(&self) -> f64 {
        0.0
    }
}
