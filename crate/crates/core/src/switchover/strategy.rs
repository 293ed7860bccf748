//! Transfer strategies: which historical records follow a switchover.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::Metric;
use crate::selection::ValidationResult;
use crate::time::{DateRange, Timestamp, DAY_SECS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StrategyError {
    #[error("unknown transfer strategy {0:?}; expected none, all, last-days(k) or on-trust-loss(k)")]
    UnknownStrategy(String),
}

/// Built-in transfer strategies.
///
/// * `none`: copy nothing.
/// * `all`: copy every record up to now.
/// * `last-days(k)`: copy the current calendar day and the `k - 1` days before it.
/// * `on-trust-loss(k)`: like `all` when the current chain failed validation
///   on M6 or M7, otherwise like `last-days(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TransferStrategy {
    #[default]
    None,
    All,
    LastDays(u32),
    OnTrustLoss(u32),
}

/// What a strategy sees about the current and the suggested chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategySide {
    pub weighted_scores: [u32; 8],
    pub validation: ValidationResult,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferStrategyInput {
    pub current: StrategySide,
    pub suggested: StrategySide,
}

fn last_days(k: u32, now: Timestamp) -> DateRange {
    let day_start = now.secs().div_euclid(DAY_SECS) * DAY_SECS;
    let back = i64::from(k.max(1) - 1) * DAY_SECS;
    DateRange {
        start: Timestamp::from_secs((day_start - back).max(0)).min(now),
        end: now,
    }
}

impl TransferStrategy {
    pub fn evaluate(&self, input: &TransferStrategyInput, now: Timestamp) -> Option<DateRange> {
        match *self {
            TransferStrategy::None => None,
            TransferStrategy::All => Some(DateRange::through(now)),
            TransferStrategy::LastDays(k) => Some(last_days(k, now)),
            TransferStrategy::OnTrustLoss(k) => {
                let v = &input.current.validation;
                if !v.metric(Metric::M6) || !v.metric(Metric::M7) {
                    Some(DateRange::through(now))
                } else {
                    Some(last_days(k, now))
                }
            }
        }
    }
}

impl fmt::Display for TransferStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransferStrategy::None => f.write_str("none"),
            TransferStrategy::All => f.write_str("all"),
            TransferStrategy::LastDays(k) => write!(f, "last-days({k})"),
            TransferStrategy::OnTrustLoss(k) => write!(f, "on-trust-loss({k})"),
        }
    }
}

impl FromStr for TransferStrategy {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || StrategyError::UnknownStrategy(s.to_string());
        let t = s.trim();
        match t {
            "none" => return Ok(TransferStrategy::None),
            "all" => return Ok(TransferStrategy::All),
            _ => {}
        }
        let (name, rest) = t.split_once('(').ok_or_else(unknown)?;
        let arg = rest.strip_suffix(')').ok_or_else(unknown)?;
        let k: u32 = arg.trim().parse().map_err(|_| unknown())?;
        if k == 0 {
            return Err(unknown());
        }
        match name.trim() {
            "last-days" => Ok(TransferStrategy::LastDays(k)),
            "on-trust-loss" => Ok(TransferStrategy::OnTrustLoss(k)),
            _ => Err(unknown()),
        }
    }
}

impl Serialize for TransferStrategy {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TransferStrategy {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
