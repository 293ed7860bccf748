//! Deterministic simulated block producer.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{BlockHash, BlockHeader, ChainFamily, ChainId, FeeStats};
use crate::num::decimal_number;
use crate::time::Timestamp;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimConfigError {
    #[error("mean_interblock_s must be positive and finite, got {0}")]
    InterblockTime(f64),
    #[error("miner_distribution is empty")]
    NoMiners,
    #[error("miner share for {0:?} is negative or not finite")]
    BadShare(String),
    #[error("miner shares sum to {0}, expected 1")]
    SharesSum(f64),
    #[error("difficulty must be positive")]
    Difficulty,
    #[error("fee_rate must be non-negative")]
    FeeRate,
    #[error("uncle_rate must be in [0, 1), got {0}")]
    UncleRate(f64),
    #[error("tx_rate must be non-negative and finite, got {0}")]
    TxRate(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimChainConfig {
    pub family: ChainFamily,
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

impl SimChainConfig {
    /// Checks the configuration. Bitcoin-like chains never produce uncles, so
    /// their `uncle_rate` is reset to zero.
    pub fn validate(&mut self) -> Result<(), SimConfigError> {
        if !(self.mean_interblock_s.is_finite() && self.mean_interblock_s > 0.0) {
            return Err(SimConfigError::InterblockTime(self.mean_interblock_s));
        }
        if self.miner_distribution.is_empty() {
            return Err(SimConfigError::NoMiners);
        }
        for (miner, share) in &self.miner_distribution {
            if !(share.is_finite() && *share >= 0.0) {
                return Err(SimConfigError::BadShare(miner.clone()));
            }
        }
        let sum: f64 = self.miner_distribution.values().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SimConfigError::SharesSum(sum));
        }
        if self.difficulty == 0 {
            return Err(SimConfigError::Difficulty);
        }
        if self.fee_rate.is_sign_negative() {
            return Err(SimConfigError::FeeRate);
        }
        if !(0.0..1.0).contains(&self.uncle_rate) {
            return Err(SimConfigError::UncleRate(self.uncle_rate));
        }
        if !(self.tx_rate.is_finite() && self.tx_rate >= 0.0) {
            return Err(SimConfigError::TxRate(self.tx_rate));
        }
        if self.family == ChainFamily::BitcoinLike {
            self.uncle_rate = 0.0;
        }
        Ok(())
    }
}

/// Block generator for one simulated chain.
///
/// Inter-arrival times are exponential with the configured mean. Two
/// generators built from the same configuration, start and chain produce
/// identical block streams.
#[derive(Debug, Clone)]
pub struct SimChain {
    chain: ChainId,
    config: SimChainConfig,
    miners: Vec<(String, f64)>,
    rng: ChaCha8Rng,
    start: Timestamp,
    elapsed: f64,
    height: u64,
    queued: VecDeque<BlockHeader>,
}

impl SimChain {
    pub fn new(
        chain: ChainId,
        mut config: SimChainConfig,
        start: Timestamp,
        start_height: u64,
    ) -> Result<Self, SimConfigError> {
        config.validate()?;
        let mut acc = 0.0;
        let miners = config
            .miner_distribution
            .iter()
            .map(|(m, share)| {
                acc += share;
                (m.clone(), acc)
            })
            .collect();
        Ok(SimChain {
            chain,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            miners,
            start,
            elapsed: 0.0,
            height: start_height,
            queued: VecDeque::new(),
        })
    }

    pub fn chain(&self) -> &ChainId {
        &self.chain
    }

    pub fn config(&self) -> &SimChainConfig {
        &self.config
    }

    /// Timestamp of the next block this generator will emit.
    pub fn peek_timestamp(&mut self) -> Timestamp {
        self.fill();
        self.queued[0].timestamp
    }

    /// Emits the next block if it was mined at or before `now`.
    pub fn next_block(&mut self, now: Timestamp) -> Option<BlockHeader> {
        if self.peek_timestamp() <= now {
            self.queued.pop_front()
        } else {
            None
        }
    }

    fn fill(&mut self) {
        if !self.queued.is_empty() {
            return;
        }
        let u: f64 = self.rng.random();
        let dt = -self.config.mean_interblock_s * (1.0 - u).ln();
        self.elapsed += dt;
        self.height += 1;
        let timestamp = self.start.plus_secs(self.elapsed.floor() as i64);

        let expected_tx = self.config.tx_rate * dt;
        let frac: f64 = self.rng.random();
        let tx_count = expected_tx.floor() as u64 + u64::from(frac < expected_tx.fract());

        let miner = self.draw_miner();
        let block = self.header(timestamp, miner, tx_count, false);
        self.queued.push_back(block);

        if self.config.uncle_rate > 0.0 {
            let p: f64 = self.rng.random();
            if p < self.config.uncle_rate {
                let miner = self.draw_miner();
                let uncle = self.header(timestamp, miner, 0, true);
                self.queued.push_back(uncle);
            }
        }
    }

    fn draw_miner(&mut self) -> String {
        let u: f64 = self.rng.random::<f64>() * self.miners.last().map_or(1.0, |m| m.1);
        self.miners
            .iter()
            .find(|(_, cum)| u < *cum)
            .or(self.miners.last())
            .map(|(m, _)| m.clone())
            .expect("validated distribution is non-empty")
    }

    fn header(&self, timestamp: Timestamp, miner: String, tx_count: u64, is_uncle: bool) -> BlockHeader {
        let tag: &[u8] = if is_uncle { b"uncle" } else { b"block" };
        BlockHeader {
            chain: self.chain.clone(),
            height: self.height,
            hash: BlockHash::digest(&[
                self.chain.as_str().as_bytes(),
                &self.config.seed.to_be_bytes(),
                &self.height.to_be_bytes(),
                tag,
            ]),
            timestamp,
            miner,
            difficulty: self.config.difficulty,
            tx_count,
            is_uncle,
            fee_stats: FeeStats::new(self.config.fee_rate),
        }
    }
}

impl Iterator for SimChain {
    type Item = BlockHeader;

    fn next(&mut self) -> Option<BlockHeader> {
        self.fill();
        self.queued.pop_front()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(family: ChainFamily, uncle_rate: f64, miners: &[(&str, f64)]) -> SimChainConfig {
        SimChainConfig {
            family,
            mean_interblock_s: 14.0,
            miner_distribution: miners.iter().map(|(m, s)| (m.to_string(), *s)).collect(),
            difficulty: 1_000,
            fee_rate: Decimal::from(10),
            uncle_rate,
            tx_rate: 5.0,
            seed: 42,
        }
    }

    fn chain(cfg: SimChainConfig) -> SimChain {
        SimChain::new(ChainId::new("eth-sim").unwrap(), cfg, Timestamp::from_secs(1_000), 0).unwrap()
    }

    #[test]
    fn zero_uncle_rate_never_emits_uncles() {
        let c = chain(config(ChainFamily::EthereumLike, 0.0, &[("a", 1.0)]));
        assert!(c.take(2_000).all(|b| !b.is_uncle));
    }

    #[test]
    fn bitcoin_uncle_rate_is_forced_to_zero() {
        let c = chain(config(ChainFamily::BitcoinLike, 0.5, &[("a", 1.0)]));
        assert_eq!(c.config().uncle_rate, 0.0);
        assert!(c.take(500).all(|b| !b.is_uncle));
    }

    #[test]
    fn same_seed_same_stream() {
        let cfg = config(ChainFamily::EthereumLike, 0.1, &[("a", 0.3), ("b", 0.7)]);
        let a: Vec<_> = chain(cfg.clone()).take(1_000).map(|b| b.hash).collect();
        let b: Vec<_> = chain(cfg).take(1_000).map(|b| b.hash).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_distribution() {
        let c = chain(config(ChainFamily::EthereumLike, 0.2, &[("only", 1.0)]));
        assert!(c.take(1_000).all(|b| b.miner == "only"));
    }

    #[test]
    fn uncles_follow_their_block() {
        let blocks: Vec<_> = chain(config(ChainFamily::EthereumLike, 0.3, &[("a", 1.0)]))
            .take(3_000)
            .collect();
        let uncles = blocks.iter().filter(|b| b.is_uncle).count();
        let rate = uncles as f64 / (blocks.len() - uncles) as f64;
        assert!((rate - 0.3).abs() < 0.05, "uncle rate {rate}");
        for pair in blocks.windows(2) {
            assert!(pair[0].timestamp <= pair[1].timestamp);
            if pair[1].is_uncle {
                assert!(!pair[0].is_uncle);
                assert_eq!(pair[0].timestamp, pair[1].timestamp);
            }
        }
    }

    #[test]
    fn next_block_respects_now() {
        let mut c = chain(config(ChainFamily::EthereumLike, 0.0, &[("a", 1.0)]));
        let first = c.peek_timestamp();
        assert!(c.next_block(first.minus_secs(1)).is_none());
        assert_eq!(c.next_block(first).unwrap().timestamp, first);
    }

    #[test]
    fn mean_interarrival_and_throughput() {
        let blocks: Vec<_> = chain(config(ChainFamily::EthereumLike, 0.0, &[("a", 1.0)]))
            .take(20_000)
            .collect();
        let span = blocks.last().unwrap().timestamp.since(Timestamp::from_secs(1_000)) as f64;
        let mean = span / blocks.len() as f64;
        assert!((mean - 14.0).abs() < 0.5, "mean {mean}");
        let tx: u64 = blocks.iter().map(|b| b.tx_count).sum();
        let rate = tx as f64 / span;
        assert!((rate - 5.0).abs() < 0.2, "tx rate {rate}");
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = config(ChainFamily::EthereumLike, 0.0, &[("a", 0.5), ("b", 0.4)]);
        assert!(matches!(cfg.validate(), Err(SimConfigError::SharesSum(_))));
        let mut cfg = config(ChainFamily::EthereumLike, 1.0, &[("a", 1.0)]);
        assert!(matches!(cfg.validate(), Err(SimConfigError::UncleRate(_))));
        let mut cfg = config(ChainFamily::EthereumLike, 0.0, &[]);
        assert_eq!(cfg.validate(), Err(SimConfigError::NoMiners));
    }
}
