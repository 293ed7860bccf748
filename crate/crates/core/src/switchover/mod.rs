//! Switchover suggestions, their lifecycle, and date-ranged record transfer.

pub mod execute;
pub mod history;
pub mod manager;
pub mod strategy;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::ChainId;
use crate::selection::RankingResult;
use crate::time::{DateRange, Timestamp};

pub use execute::{execute_transfer, ExecutionReport};
pub use history::{HistoryEntry, HistoryLog};
pub use manager::{suppression_decision, SuggestOutcome, SuppressionDecision, SwitchoverManager};
pub use strategy::{StrategySide, TransferStrategy, TransferStrategyInput};

pub type SuggestionId = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SwitchoverError {
    #[error("unknown suggestion {0}")]
    UnknownSuggestion(SuggestionId),
    #[error("suggestion {id} is {from}; cannot move to {to}")]
    IllegalTransition {
        id: SuggestionId,
        from: SuggestionState,
        to: SuggestionState,
    },
}

/// Whether an emitted suggestion runs without operator approval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum SwitchMode {
    #[serde(rename = "auto", alias = "auto-switch")]
    AutoSwitch,
    #[default]
    #[serde(rename = "require-approval")]
    RequireApproval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuggestionState {
    Pending,
    Approved,
    Rejected,
    Executing,
    Executed,
    Suppressed,
    Failed,
}

impl SuggestionState {
    pub fn can_become(self, next: SuggestionState) -> bool {
        use SuggestionState::*;
        matches!(
            (self, next),
            (Pending, Approved)
                | (Pending, Rejected)
                | (Approved, Executing)
                | (Executing, Executed)
                | (Executing, Failed)
                | (Failed, Executing)
        )
    }

    /// Still heading towards execution.
    pub fn is_open(self) -> bool {
        matches!(
            self,
            SuggestionState::Pending | SuggestionState::Approved | SuggestionState::Executing
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SuggestionState::Pending => "pending",
            SuggestionState::Approved => "approved",
            SuggestionState::Rejected => "rejected",
            SuggestionState::Executing => "executing",
            SuggestionState::Executed => "executed",
            SuggestionState::Suppressed => "suppressed",
            SuggestionState::Failed => "failed",
        }
    }
}

impl fmt::Display for SuggestionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuggestionState {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use SuggestionState::*;
        [Pending, Approved, Rejected, Executing, Executed, Suppressed, Failed]
            .into_iter()
            .find(|st| st.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown suggestion state {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchoverSuggestion {
    pub id: SuggestionId,
    pub from: ChainId,
    pub to: ChainId,
    pub created_at: Timestamp,
    pub snapshot: RankingResult,
    pub transfer_range: Option<DateRange>,
    pub state: SuggestionState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ExecutionReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use SuggestionState::*;

    #[test]
    fn allowed_transitions() {
        let all = [Pending, Approved, Rejected, Executing, Executed, Suppressed, Failed];
        let allowed = [
            (Pending, Approved),
            (Pending, Rejected),
            (Approved, Executing),
            (Executing, Executed),
            (Executing, Failed),
            (Failed, Executing),
        ];
        for a in all {
            for b in all {
                assert_eq!(a.can_become(b), allowed.contains(&(a, b)), "{a} -> {b}");
            }
        }
    }

    #[test]
    fn state_names() {
        assert_eq!("Pending".parse::<SuggestionState>().unwrap(), Pending);
        assert_eq!(serde_json::to_string(&Suppressed).unwrap(), "\"suppressed\"");
        assert_eq!(serde_json::to_string(&SwitchMode::AutoSwitch).unwrap(), "\"auto\"");
        assert!("done".parse::<SuggestionState>().is_err());
    }
}
