//! The suggestion state machine and suppression timer.

use std::collections::BTreeMap;

use super::history::HistoryEntry;
use super::strategy::{StrategySide, TransferStrategyInput};
use super::{ExecutionReport, SuggestionId, SuggestionState, SwitchMode, SwitchoverError, SwitchoverSuggestion};
use crate::chain::ChainId;
use crate::selection::{RankingPolicy, RankingResult, ValidationResult};
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuppressionDecision {
    NoChange,
    Suppressed,
    Suggest,
}

/// Whether a ranking whose winner is `winner` leads to a new suggestion.
/// The timer only restarts on emitted suggestions.
pub fn suppression_decision(
    now: Timestamp,
    winner: Option<&ChainId>,
    active: &ChainId,
    last_suggestion_at: Option<Timestamp>,
    period_s: u64,
) -> SuppressionDecision {
    match winner {
        None => SuppressionDecision::NoChange,
        Some(w) if w == active => SuppressionDecision::NoChange,
        Some(_) => match last_suggestion_at {
            Some(last) if (now.since(last) as i128) < period_s as i128 => SuppressionDecision::Suppressed,
            _ => SuppressionDecision::Suggest,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuggestOutcome {
    /// The winner is the active chain, or nothing is eligible.
    None,
    /// An open suggestion for the same switchover already exists.
    Unchanged(SuggestionId),
    /// Inside the suppression period. `new` is false when the same
    /// suppressed switchover was already recorded.
    Suppressed {
        id: SuggestionId,
        new: bool,
    },
    Suggested(SuggestionId),
}

#[derive(Debug, Default)]
pub struct SwitchoverManager {
    suggestions: BTreeMap<SuggestionId, SwitchoverSuggestion>,
    last_id: SuggestionId,
    last_suggestion_at: Option<Timestamp>,
    seq: u64,
    outbox: Vec<HistoryEntry>,
}

fn side(ranking: &RankingResult, chain: &ChainId) -> StrategySide {
    match ranking.get(chain) {
        Some(r) => StrategySide {
            weighted_scores: r.weighted_scores,
            validation: r.validation,
        },
        None => StrategySide {
            weighted_scores: [0; 8],
            validation: ValidationResult::ALL_TRUE,
        },
    }
}

impl SwitchoverManager {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn last_suggestion_at(&self) -> Option<Timestamp> {
        self.last_suggestion_at
    }

    pub fn get(&self, id: SuggestionId) -> Option<&SwitchoverSuggestion> {
        self.suggestions.get(&id)
    }

    pub fn list(&self, state: Option<SuggestionState>) -> Vec<SwitchoverSuggestion> {
        self.suggestions
            .values()
            .filter(|s| state.is_none_or(|st| s.state == st))
            .cloned()
            .collect()
    }

    pub fn open(&self) -> Option<&SwitchoverSuggestion> {
        self.suggestions.values().rev().find(|s| s.state.is_open())
    }

    /// History entries produced since the last call.
    pub fn drain_history(&mut self) -> Vec<HistoryEntry> {
        std::mem::take(&mut self.outbox)
    }

    fn record(&mut self, id: SuggestionId, at: Timestamp, with_snapshot: bool) {
        let s = &self.suggestions[&id];
        self.seq += 1;
        self.outbox.push(HistoryEntry {
            seq: self.seq,
            at,
            suggestion: id,
            from: s.from.clone(),
            to: s.to.clone(),
            state: s.state,
            transfer_range: s.transfer_range,
            detail: s.detail.clone(),
            report: s.report.clone(),
            snapshot: with_snapshot.then(|| s.snapshot.clone()),
        });
    }

    fn create(
        &mut self,
        now: Timestamp,
        ranking: &RankingResult,
        active: &ChainId,
        winner: &ChainId,
        state: SuggestionState,
        policy: &RankingPolicy,
    ) -> SuggestionId {
        self.last_id += 1;
        let id = self.last_id;
        let transfer_range = if state == SuggestionState::Suppressed {
            None
        } else {
            let input = TransferStrategyInput {
                current: side(ranking, active),
                suggested: side(ranking, winner),
            };
            policy.transfer_strategy.evaluate(&input, now)
        };
        self.suggestions.insert(
            id,
            SwitchoverSuggestion {
                id,
                from: active.clone(),
                to: winner.clone(),
                created_at: now,
                snapshot: ranking.clone(),
                transfer_range,
                state,
                report: None,
                detail: None,
            },
        );
        self.record(id, now, true);
        id
    }

    /// Reacts to a fresh ranking while `active` is in use.
    pub fn suggest(
        &mut self,
        now: Timestamp,
        ranking: &RankingResult,
        active: &ChainId,
        policy: &RankingPolicy,
    ) -> SuggestOutcome {
        let Some(winner) = ranking.winner.as_ref() else {
            return SuggestOutcome::None;
        };
        if winner == active {
            return SuggestOutcome::None;
        }
        if let Some(open) = self.open() {
            if open.state != SuggestionState::Pending || (&open.to == winner && &open.from == active) {
                return SuggestOutcome::Unchanged(open.id);
            }
        }
        match suppression_decision(
            now,
            Some(winner),
            active,
            self.last_suggestion_at,
            policy.suppression_period_s,
        ) {
            SuppressionDecision::NoChange => SuggestOutcome::None,
            SuppressionDecision::Suppressed => {
                let repeat = self
                    .suggestions
                    .values()
                    .next_back()
                    .filter(|s| s.state == SuggestionState::Suppressed && &s.to == winner && &s.from == active);
                if let Some(s) = repeat {
                    return SuggestOutcome::Suppressed { id: s.id, new: false };
                }
                let id = self.create(now, ranking, active, winner, SuggestionState::Suppressed, policy);
                SuggestOutcome::Suppressed { id, new: true }
            }
            SuppressionDecision::Suggest => {
                if let Some(stale) = self.open().map(|s| s.id) {
                    let s = self.suggestions.get_mut(&stale).expect("open suggestion exists");
                    s.state = SuggestionState::Rejected;
                    s.detail = Some(format!("superseded by a suggestion for {winner}"));
                    self.record(stale, now, false);
                }
                let id = self.create(now, ranking, active, winner, SuggestionState::Pending, policy);
                self.last_suggestion_at = Some(now);
                if policy.mode == SwitchMode::AutoSwitch {
                    self.transition(id, SuggestionState::Approved, now, None)
                        .expect("fresh suggestion is pending");
                }
                SuggestOutcome::Suggested(id)
            }
        }
    }

    fn transition(
        &mut self,
        id: SuggestionId,
        to: SuggestionState,
        now: Timestamp,
        detail: Option<String>,
    ) -> Result<&SwitchoverSuggestion, SwitchoverError> {
        let s = self
            .suggestions
            .get_mut(&id)
            .ok_or(SwitchoverError::UnknownSuggestion(id))?;
        if !s.state.can_become(to) {
            return Err(SwitchoverError::IllegalTransition { id, from: s.state, to });
        }
        s.state = to;
        if detail.is_some() {
            s.detail = detail;
        }
        self.record(id, now, false);
        Ok(&self.suggestions[&id])
    }

    pub fn approve(&mut self, id: SuggestionId, now: Timestamp) -> Result<&SwitchoverSuggestion, SwitchoverError> {
        self.transition(id, SuggestionState::Approved, now, None)
    }

    pub fn reject(&mut self, id: SuggestionId, now: Timestamp) -> Result<&SwitchoverSuggestion, SwitchoverError> {
        self.transition(id, SuggestionState::Rejected, now, None)
    }

    pub fn begin_execution(
        &mut self,
        id: SuggestionId,
        now: Timestamp,
    ) -> Result<&SwitchoverSuggestion, SwitchoverError> {
        self.transition(id, SuggestionState::Executing, now, None)
    }

    /// Marks the execution outcome from `report`.
    pub fn finish_execution(
        &mut self,
        id: SuggestionId,
        now: Timestamp,
        report: ExecutionReport,
    ) -> Result<&SwitchoverSuggestion, SwitchoverError> {
        let state = if report.succeeded() {
            SuggestionState::Executed
        } else {
            SuggestionState::Failed
        };
        let s = self
            .suggestions
            .get_mut(&id)
            .ok_or(SwitchoverError::UnknownSuggestion(id))?;
        if !s.state.can_become(state) {
            return Err(SwitchoverError::IllegalTransition {
                id,
                from: s.state,
                to: state,
            });
        }
        s.report = Some(report);
        self.transition(id, state, now, None)
    }
}
