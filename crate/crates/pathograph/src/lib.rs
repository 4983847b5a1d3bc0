//! Filesystem, threading and command-line layer over `pathograph-core`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! failure.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod ingest;
pub mod reports;
pub mod runner;

pub use error::{AppError, AppResult};
