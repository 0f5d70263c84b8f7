//! Evaluation engine for machine-unlearning claims.
//!
//! The central score compares an unlearned model against the original one on
//! the forget set, then removes the shift the same pair shows on a validation
//! set the original model never saw. The result is a KS p-value that needs no
//! retrained reference model. Baseline metrics, meta-evaluation of metrics,
//! per-example unlearning losses and a synthetic scenario simulator sit
//! alongside it.

pub mod baseline;
pub mod dcue;
pub mod error;
pub mod jsonl;
pub mod losses;
pub mod meta;
pub mod score_log;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
