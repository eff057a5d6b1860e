//! Influence-diagram evaluation through probabilistic inference.
//!
//! A diagram of chance, decision and value nodes is turned into a network
//! that ordinary belief-network machinery can process, and optimal policies
//! are read off posterior queries or cluster potentials. Several solvers
//! share the same model and factor code and are cross-checked against a
//! brute-force oracle.

mod backend;
pub mod cli;
pub mod cluster_decision;
pub mod dp;
pub mod error;
pub mod factor;
pub mod fixtures;
pub mod format;
pub mod inference;
pub mod model;
pub mod oracle;
pub mod policy;
pub mod queries;
pub mod random;
pub mod solve;
pub mod transform;

pub use error::{Error, Result};
pub use factor::{Assignment, Factor, Semantics};
pub use model::{Combination, DiagramBuilder, InfluenceDiagram, Kind, VarId};
