//! The ranking policy document.
//!
//! ```json
//! {
//!   "weights": {"m1": 5, "m2": 0, "m3": 5, "m4": 5, "m5": 5, "m6": 5, "m7": 5, "m8": 5},
//!   "safs": {"m4": [[0, 20, 4], [20, 40, 3], [40, 60, 2], [60, 120, 1], [120, "inf", 0]], "...": []},
//!   "validation": {"rules": [{"metric": "m7", "op": ">=", "threshold": 180e9}], "formula": "m1 and m7"},
//!   "suppression_period_s": 3600,
//!   "mode": "require-approval",
//!   "transfer_strategy": "last-days(28)"
//! }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::saf::ScoreAssignment;
use super::validation::Validation;
use super::PolicyError;
use crate::metrics::Metric;
use crate::switchover::{SwitchMode, TransferStrategy};

pub const MAX_WEIGHT: u8 = 5;

/// Importance of each metric, 0 (none) to 5 (very high).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Weights(pub [u8; 8]);

impl Weights {
    pub fn get(&self, m: Metric) -> u8 {
        self.0[m.index()]
    }

    pub fn set(&mut self, m: Metric, w: u8) {
        self.0[m.index()] = w;
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|w| u32::from(*w)).sum()
    }

    pub fn weighted(&self, scores: &[u8; 8]) -> [u32; 8] {
        std::array::from_fn(|i| u32::from(self.0[i]) * u32::from(scores[i]))
    }

    /// Sum of weight times score over all metrics.
    pub fn benefit(&self, scores: &[u8; 8]) -> u32 {
        self.weighted(scores).iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingPolicy {
    pub weights: Weights,
    pub safs: [ScoreAssignment; 8],
    pub validation: Validation,
    pub suppression_period_s: u64,
    pub mode: SwitchMode,
    pub transfer_strategy: TransferStrategy,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyDoc {
    weights: BTreeMap<Metric, u8>,
    safs: BTreeMap<Metric, ScoreAssignment>,
    #[serde(default)]
    validation: Validation,
    #[serde(default)]
    suppression_period_s: u64,
    #[serde(default)]
    mode: SwitchMode,
    #[serde(default)]
    transfer_strategy: TransferStrategy,
}

impl RankingPolicy {
    pub fn saf(&self, m: Metric) -> &ScoreAssignment {
        &self.safs[m.index()]
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        for m in Metric::ALL {
            let w = self.weights.get(m);
            if w > MAX_WEIGHT {
                return Err(PolicyError::Weight { metric: m, value: w });
            }
            self.saf(m).check_domain(m)?;
        }
        self.validation.check()
    }

    /// Scores of the metric scalars under this policy's SAFs.
    pub fn scores(&self, scalars: &[f64; 8]) -> [u8; 8] {
        std::array::from_fn(|i| self.safs[i].apply(scalars[i]))
    }

    pub fn from_json(text: &str) -> Result<Self, PolicyError> {
        let doc: PolicyDoc = serde_json::from_str(text).map_err(|e| PolicyError::Parse(e.to_string()))?;
        doc.try_into()
    }

    pub fn from_toml(text: &str) -> Result<Self, PolicyError> {
        let doc: PolicyDoc = toml::from_str(text).map_err(|e| PolicyError::Parse(e.to_string()))?;
        doc.try_into()
    }

    /// Loads a JSON or TOML policy file, chosen by extension.
    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        let text = std::fs::read_to_string(path).map_err(|e| PolicyError::Parse(format!("{}: {e}", path.display())))?;
        let is_toml = path.extension().is_some_and(|e| e == "toml");
        let parsed = if is_toml {
            Self::from_toml(&text)
        } else {
            Self::from_json(&text)
        };
        parsed.map_err(|e| match e {
            PolicyError::Parse(msg) => PolicyError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serializes")
    }
}

impl TryFrom<PolicyDoc> for RankingPolicy {
    type Error = PolicyError;

    fn try_from(doc: PolicyDoc) -> Result<Self, PolicyError> {
        let mut weights = Weights::default();
        for m in Metric::ALL {
            let w = *doc.weights.get(&m).ok_or(PolicyError::MissingWeight(m))?;
            weights.set(m, w);
        }
        let mut safs = Vec::with_capacity(8);
        for m in Metric::ALL {
            safs.push(doc.safs.get(&m).cloned().ok_or(PolicyError::MissingSaf(m))?);
        }
        let policy = RankingPolicy {
            weights,
            safs: safs.try_into().expect("eight score functions"),
            validation: doc.validation,
            suppression_period_s: doc.suppression_period_s,
            mode: doc.mode,
            transfer_strategy: doc.transfer_strategy,
        };
        policy.validate()?;
        Ok(policy)
    }
}

impl From<&RankingPolicy> for PolicyDoc {
    fn from(p: &RankingPolicy) -> Self {
        PolicyDoc {
            weights: Metric::ALL.iter().map(|m| (*m, p.weights.get(*m))).collect(),
            safs: Metric::ALL.iter().map(|m| (*m, p.saf(*m).clone())).collect(),
            validation: p.validation.clone(),
            suppression_period_s: p.suppression_period_s,
            mode: p.mode,
            transfer_strategy: p.transfer_strategy,
        }
    }
}

impl Serialize for RankingPolicy {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PolicyDoc::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RankingPolicy {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        PolicyDoc::deserialize(deserializer)?
            .try_into()
            .map_err(serde::de::Error::custom)
    }
}
