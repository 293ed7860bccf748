//! Instance configuration file (TOML).
//!
//! ```toml
//! active = "ethereum"                 # optional chain in use at start
//! history_log = "history.jsonl"       # optional, relative to this file
//! trace = "blocks.jsonl"              # block trace for `proxy = "trace"` chains
//! policy_file = "policy.json"         # or an inline [policy] table
//!
//! [clock]
//! mode = "virtual"                    # or "realtime"
//! start = "2018-09-26T00:00:00Z"      # end of warm-up
//! until = "2018-09-26T01:00:00Z"      # optional end of the run
//! tick_s = 60
//!
//! [api]
//! bind = "127.0.0.1:8547"
//!
//! [quotes]
//! source = "trace"                    # or "static" with a [quotes.prices] table
//! trace = "quotes.jsonl"
//! staleness_s = 600
//!
//! [[chains]]
//! id = "ethereum"
//! name = "Ethereum"
//! family = "ethereum-like"
//! symbol = "ETH"
//! reputation = 10
//! proxy = "trace"                     # or "sim" with a [chains.sim] table
//!
//! [[policy_updates]]
//! at = "2018-09-26T00:00:30Z"
//! file = "other-policy.json"
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rust_decimal::Decimal;
use serde::Deserialize;
use thiserror::Error;

use crate::chain::{ChainDescriptor, ChainFamily, ChainId};
use crate::num::{decimal_number, opt_decimal_number};
use crate::proxy::quote::DEFAULT_STALENESS_SECS;
use crate::proxy::SimChainConfig;
use crate::selection::{PolicyError, RankingPolicy};
use crate::time::Timestamp;

pub const DEFAULT_BIND: &str = "127.0.0.1:8547";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
pub enum ClockMode {
    #[default]
    #[serde(rename = "virtual", alias = "virtual-replay")]
    Virtual,
    #[serde(rename = "realtime", alias = "real-time")]
    RealTime,
}

fn default_tick() -> u64 {
    60
}

fn default_speed() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockConfig {
    #[serde(default)]
    pub mode: ClockMode,
    /// End of warm-up. Defaults to the latest trace event (virtual) or the
    /// wall clock (realtime).
    #[serde(default)]
    pub start: Option<Timestamp>,
    #[serde(default)]
    pub until: Option<Timestamp>,
    #[serde(default = "default_tick")]
    pub tick_s: u64,
    /// Virtual seconds per wall second in realtime mode.
    #[serde(default = "default_speed")]
    pub speed: f64,
}

impl Default for ClockConfig {
    fn default() -> Self {
        ClockConfig {
            mode: ClockMode::Virtual,
            start: None,
            until: None,
            tick_s: default_tick(),
            speed: default_speed(),
        }
    }
}

fn default_bind() -> String {
    DEFAULT_BIND.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApiConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
}

impl Default for ApiConfig {
    fn default() -> Self {
        ApiConfig { bind: default_bind() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuoteSource {
    #[default]
    Static,
    Trace,
}

fn default_staleness() -> i64 {
    DEFAULT_STALENESS_SECS
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuotesConfig {
    #[serde(default)]
    pub source: QuoteSource,
    #[serde(default)]
    pub trace: Option<PathBuf>,
    /// Fixed USD prices per symbol for `source = "static"`.
    #[serde(default)]
    pub prices: BTreeMap<String, f64>,
    #[serde(default = "default_staleness")]
    pub staleness_s: i64,
}

impl Default for QuotesConfig {
    fn default() -> Self {
        QuotesConfig {
            source: QuoteSource::Static,
            trace: None,
            prices: BTreeMap::new(),
            staleness_s: default_staleness(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProxyKind {
    Sim,
    #[serde(alias = "trace-replay")]
    Trace,
}

/// Simulator parameters; the family comes from the chain entry.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimParams {
    pub mean_interblock_s: f64,
    pub miner_distribution: BTreeMap<String, f64>,
    pub difficulty: u64,
    #[serde(with = "decimal_number")]
    pub fee_rate: Decimal,
    #[serde(default)]
    pub uncle_rate: f64,
    #[serde(default)]
    pub tx_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_target_blocks() -> u32 {
    6
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub id: ChainId,
    #[serde(default)]
    pub name: Option<String>,
    pub family: ChainFamily,
    pub symbol: String,
    pub reputation: u8,
    #[serde(default = "default_target_blocks")]
    pub target_inclusion_blocks: u32,
    pub proxy: ProxyKind,
    /// Fee rate used for M1 instead of the window median: satoshi per byte
    /// or wei per gas.
    #[serde(default, with = "opt_decimal_number")]
    pub fee: Option<Decimal>,
    #[serde(default)]
    pub block_gas_limit: Option<u64>,
    #[serde(default)]
    pub sim: Option<SimParams>,
}

impl ChainConfig {
    pub fn descriptor(&self) -> ChainDescriptor {
        ChainDescriptor {
            id: self.id.clone(),
            name: self.name.clone().unwrap_or_else(|| self.id.to_string()),
            family: self.family,
            currency_symbol: self.symbol.clone(),
            reputation: self.reputation,
            target_inclusion_blocks: self.target_inclusion_blocks,
        }
    }

    pub fn sim_config(&self) -> Option<SimChainConfig> {
        self.sim.as_ref().map(|s| SimChainConfig {
            family: self.family,
            mean_interblock_s: s.mean_interblock_s,
            miner_distribution: s.miner_distribution.clone(),
            difficulty: s.difficulty,
            fee_rate: s.fee_rate,
            uncle_rate: s.uncle_rate,
            tx_rate: s.tx_rate,
            seed: s.seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyUpdateConfig {
    pub at: Timestamp,
    pub file: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    #[serde(default)]
    pub active: Option<ChainId>,
    #[serde(default)]
    pub history_log: Option<PathBuf>,
    #[serde(default)]
    pub trace: Option<PathBuf>,
    #[serde(default)]
    pub clock: ClockConfig,
    #[serde(default)]
    pub api: ApiConfig,
    #[serde(default)]
    pub quotes: QuotesConfig,
    pub chains: Vec<ChainConfig>,
    #[serde(default)]
    pub policy: Option<RankingPolicy>,
    #[serde(default)]
    pub policy_file: Option<PathBuf>,
    #[serde(default)]
    pub policy_updates: Vec<PolicyUpdateConfig>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl InstanceConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: InstanceConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::from("<config>"),
            message: e.to_string(),
        })?;
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.chains.is_empty() {
            return invalid("at least one chain must be configured".into());
        }
        let mut seen = BTreeSet::new();
        for c in &self.chains {
            if !seen.insert(&c.id) {
                return invalid(format!("chain {} is configured twice", c.id));
            }
            c.descriptor()
                .validate()
                .map_err(|e| ConfigError::Invalid(format!("chain {}: {e}", c.id)))?;
            match (c.proxy, &c.sim) {
                (ProxyKind::Sim, None) => {
                    return invalid(format!(
                        "chain {} uses proxy = \"sim\" without a [chains.sim] table",
                        c.id
                    ))
                }
                (ProxyKind::Trace, Some(_)) => {
                    return invalid(format!("chain {} has a [chains.sim] table but proxy = \"trace\"", c.id))
                }
                (ProxyKind::Sim, Some(_)) => {
                    let mut sim = c.sim_config().expect("sim table present");
                    sim.validate()
                        .map_err(|e| ConfigError::Invalid(format!("chain {}: {e}", c.id)))?;
                }
                (ProxyKind::Trace, None) => {}
            }
        }
        if let Some(active) = &self.active {
            if !seen.contains(active) {
                return invalid(format!("active chain {active} is not configured"));
            }
        }
        match (&self.policy, &self.policy_file) {
            (None, None) => return invalid("a [policy] table or policy_file is required".into()),
            (Some(_), Some(_)) => return invalid("use either [policy] or policy_file, not both".into()),
            _ => {}
        }
        if self.quotes.source == QuoteSource::Trace && self.quotes.trace.is_none() {
            return invalid("quotes.source = \"trace\" needs quotes.trace".into());
        }
        if self.quotes.staleness_s <= 0 {
            return invalid("quotes.staleness_s must be positive".into());
        }
        if self.clock.tick_s == 0 {
            return invalid("clock.tick_s must be positive".into());
        }
        if !(self.clock.speed.is_finite() && self.clock.speed > 0.0) {
            return invalid("clock.speed must be positive".into());
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// The initial policy, read from `policy_file` when not inline.
    pub fn initial_policy(&self) -> Result<RankingPolicy, ConfigError> {
        match (&self.policy, &self.policy_file) {
            (Some(p), _) => Ok(p.clone()),
            (None, Some(f)) => Ok(RankingPolicy::load(&self.resolve(f))?),
            (None, None) => Err(ConfigError::Invalid("no policy configured".into())),
        }
    }

    pub fn chain(&self, id: &ChainId) -> Option<&ChainConfig> {
        self.chains.iter().find(|c| &c.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const POLICY: &str = r#"
[policy]
suppression_period_s = 0
[policy.weights]
m1 = 1
m2 = 1
m3 = 1
m4 = 1
m5 = 1
m6 = 1
m7 = 1
m8 = 1
[policy.safs]
m1 = [[0, "inf", 1]]
m2 = [[0, "inf", 1]]
m3 = [[0, "inf", 1]]
m4 = [[0, "inf", 1]]
m5 = [[0, "inf", 1]]
m6 = [[0, "inf", 1]]
m7 = [[0, "inf", 1]]
m8 = [[0, 10, 1]]
"#;

    fn with_chains(chains: &str) -> String {
        format!("active = \"a\"\n{chains}\n{POLICY}")
    }

    const SIM: &str = r#"
[[chains]]
id = "a"
family = "ethereum-like"
symbol = "A"
reputation = 5
proxy = "sim"
[chains.sim]
mean_interblock_s = 14
miner_distribution = { x = 0.5, y = 0.5 }
difficulty = 1000
fee_rate = 2e9
"#;

    #[test]
    fn parses_a_sim_chain() {
        let c = InstanceConfig::parse(&with_chains(SIM)).unwrap();
        assert_eq!(c.chains[0].descriptor().name, "a");
        assert_eq!(c.chains[0].sim_config().unwrap().family, ChainFamily::EthereumLike);
        assert_eq!(c.api.bind, DEFAULT_BIND);
        assert_eq!(c.clock.tick_s, 60);
        assert_eq!(c.initial_policy().unwrap().weights.total(), 8);
    }

    #[test]
    fn rejects_bad_documents() {
        let dup = format!("{SIM}{SIM}");
        assert!(matches!(
            InstanceConfig::parse(&with_chains(&dup)),
            Err(ConfigError::Invalid(_))
        ));
        let no_sim = SIM.replace("proxy = \"sim\"", "proxy = \"trace\"");
        assert!(InstanceConfig::parse(&with_chains(&no_sim)).is_err());
        let unknown = with_chains(SIM).replace("active = \"a\"", "active = \"b\"");
        assert!(InstanceConfig::parse(&unknown).is_err());
        let extra = with_chains(SIM).replace("active = \"a\"", "active = \"a\"\ncolour = 1");
        assert!(matches!(InstanceConfig::parse(&extra), Err(ConfigError::Parse { .. })));
        assert!(InstanceConfig::parse(POLICY).is_err());
    }

    #[test]
    fn resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("instance.toml");
        std::fs::write(&path, with_chains(SIM)).unwrap();
        let c = InstanceConfig::load(&path).unwrap();
        assert_eq!(c.resolve(Path::new("x.jsonl")), dir.path().join("x.jsonl"));
        assert!(matches!(
            InstanceConfig::load(&dir.path().join("missing.toml")),
            Err(ConfigError::Io { .. })
        ));
    }
}
