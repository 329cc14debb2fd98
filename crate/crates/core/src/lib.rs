//! Iterative-decoding thresholds of protograph-based q-ary spatially
//! coupled LDPC ensembles on the binary erasure channel.
//!
//! The crate builds coupled base matrices from edge spreadings
//! ([`protograph`], [`ensemble`]), runs q-ary protograph density evolution
//! over the whole chain ([`pde`]) or a sliding window ([`window`]), and
//! bisects for flooding and windowed decoding thresholds ([`threshold`]).
//! [`analysis`] turns per-position iteration counts into latency and
//! complexity figures.

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod ensemble;
pub mod error;
pub mod pde;
pub mod protograph;
pub mod subspace;
pub mod threshold;
pub mod window;

pub use ensemble::{EnsembleSpec, Family};
pub use error::{Error, Result};
pub use pde::{DecodeOutcome, FailureKind, PdeConfig, PdeEngine};
pub use protograph::{BaseMatrix, ComponentStack, CoupledChain};
pub use subspace::{DeMessage, Rule, SubspaceTables};
pub use threshold::{SaturationResult, ThresholdConfig, ThresholdResult};
pub use window::{WdOutcome, WindowConfig};
