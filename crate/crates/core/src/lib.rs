//! Exact decision boundaries for closest-vector decoding of the root lattice
//! `A_n`, their folding into linearly many pieces, and explicit deep ReLU
//! networks that evaluate them.

pub mod boundary;
pub mod cli;
pub mod error;
pub mod folding;
pub mod geometry;
pub mod lattice;
pub mod oracle;
pub mod relunet;

pub use error::{Error, Result};

/// Version tag written into every machine-readable report.
pub const REPORT_VERSION: u32 = 1;
