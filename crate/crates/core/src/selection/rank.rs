use serde::{Deserialize, Serialize};

use super::policy::{RankingPolicy, Weights};
use super::validation::{Validation, ValidationResult};
use crate::chain::ChainId;
use crate::metrics::MetricVector;
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainRanking {
    pub chain: ChainId,
    pub scores: [u8; 8],
    pub weighted_scores: [u32; 8],
    pub benefit: u32,
    pub validation: ValidationResult,
    pub eligible: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingResult {
    /// One entry per chain, in the order the vectors were supplied.
    pub per_chain: Vec<ChainRanking>,
    pub winner: Option<ChainId>,
    pub computed_at: Timestamp,
}

impl RankingResult {
    pub fn get(&self, chain: &ChainId) -> Option<&ChainRanking> {
        self.per_chain.iter().find(|c| &c.chain == chain)
    }

    pub fn benefits(&self) -> Vec<u32> {
        self.per_chain.iter().map(|c| c.benefit).collect()
    }
}

/// Input to the winner decision for one chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub chain: ChainId,
    pub scores: [u8; 8],
    pub validation: ValidationResult,
    /// Fresh metrics over a non-empty window.
    pub usable: bool,
}

/// Picks the eligible chain with the highest benefit. Ties go to `active`,
/// then to the lexicographically smallest id.
pub fn rank_candidates(
    weights: &Weights,
    candidates: Vec<Candidate>,
    active: Option<&ChainId>,
    now: Timestamp,
) -> RankingResult {
    let per_chain: Vec<ChainRanking> = candidates
        .into_iter()
        .map(|c| {
            let weighted_scores = weights.weighted(&c.scores);
            ChainRanking {
                benefit: weighted_scores.iter().sum(),
                weighted_scores,
                eligible: c.usable && c.validation.overall,
                chain: c.chain,
                scores: c.scores,
                validation: c.validation,
            }
        })
        .collect();
    let winner = per_chain
        .iter()
        .filter(|c| c.eligible)
        .max_by(|a, b| {
            a.benefit
                .cmp(&b.benefit)
                .then_with(|| (Some(&a.chain) == active).cmp(&(Some(&b.chain) == active)))
                .then_with(|| b.chain.cmp(&a.chain))
        })
        .map(|c| c.chain.clone());
    RankingResult {
        per_chain,
        winner,
        computed_at: now,
    }
}

pub fn validate(validation: &Validation, vector: &MetricVector) -> ValidationResult {
    validation.validate(vector)
}

/// Scores, validates and ranks the given metric vectors.
pub fn rank(
    policy: &RankingPolicy,
    vectors: &[MetricVector],
    active: Option<&ChainId>,
    now: Timestamp,
) -> RankingResult {
    let candidates = vectors
        .iter()
        .map(|v| {
            let scalars = v.scalars();
            Candidate {
                chain: v.chain.clone(),
                scores: policy.scores(&scalars),
                validation: policy.validation.evaluate_scalars(&scalars),
                usable: v.is_usable(),
            }
        })
        .collect();
    rank_candidates(&policy.weights, candidates, active, now)
}
