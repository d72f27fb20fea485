//! Traceability link classification.
//!
//! Every candidate link between two artifact sets is described by 131
//! features (IR ranks in both directions, pre- and post-retrieval query
//! quality, document statistics), optionally reduced by feature selection,
//! rebalanced, and classified as valid or invalid. The [`eval`] module runs
//! the repeated stratified cross-validation protocol and compares the
//! classifiers against ranked-retrieval baselines cut at the same depth.

pub mod balance;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod ir;
pub mod learn;
pub mod seed;
pub mod selection;

pub use error::{Error, Result};
