//! Blockchain selection: score assignment, weights, validation and the winner
//! decision.

pub mod policy;
pub mod rank;
pub mod saf;
pub mod validation;

use thiserror::Error;

use crate::metrics::Metric;

pub use policy::{RankingPolicy, Weights};
pub use rank::{rank, rank_candidates, Candidate, ChainRanking, RankingResult};
pub use saf::{Piece, ScoreAssignment};
pub use validation::{CmpOp, Formula, Validation, ValidationResult, ValidationRule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("policy document: {0}")]
    Parse(String),
    #[error("weight {value} for {metric} is outside 0..=5")]
    Weight { metric: Metric, value: u8 },
    #[error("no weight for {0}")]
    MissingWeight(Metric),
    #[error("no score assignment for {0}")]
    MissingSaf(Metric),
    #[error("score assignment for {metric}: {reason}")]
    Saf { metric: Metric, reason: String },
    #[error("validation rule on {metric}: {reason}")]
    Rule { metric: Metric, reason: String },
}
