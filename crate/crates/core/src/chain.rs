//! Domain types shared across the crate and the 24-hour rolling block window.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::num::decimal_number;
use crate::time::{Timestamp, DAY_SECS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChainError {
    #[error("invalid chain id {0:?}: expected 1-32 chars of [a-z0-9-]")]
    InvalidChainId(String),
    #[error("block belongs to chain {block}, window tracks {window}")]
    ChainMismatch { window: ChainId, block: ChainId },
    #[error("reputation {0} is outside 0..=10")]
    InvalidReputation(u8),
    #[error("target_inclusion_blocks must be positive")]
    InvalidTarget,
    #[error("uncle blocks are only valid on ethereum-like chains (chain {0})")]
    UncleOnBitcoinLike(ChainId),
    #[error("block timestamp {0} is negative")]
    NegativeTimestamp(i64),
    #[error("invalid hex identifier: {0}")]
    InvalidHex(String),
}

/// Short identifier of a registered chain, e.g. `ethereum-classic`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ChainId(String);

impl ChainId {
    pub fn new(id: impl Into<String>) -> Result<Self, ChainError> {
        let id = id.into();
        let ok = !id.is_empty()
            && id.len() <= 32
            && id
                .bytes()
                .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-');
        if ok {
            Ok(ChainId(id))
        } else {
            Err(ChainError::InvalidChainId(id))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ChainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for ChainId {
    type Err = ChainError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ChainId::new(s)
    }
}

impl TryFrom<String> for ChainId {
    type Error = ChainError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        ChainId::new(s)
    }
}

impl From<ChainId> for String {
    fn from(id: ChainId) -> String {
        id.0
    }
}

/// Determines the cost model and the hash-rate formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainFamily {
    #[serde(alias = "bitcoin", alias = "BitcoinLike")]
    BitcoinLike,
    #[serde(alias = "ethereum", alias = "EthereumLike")]
    EthereumLike,
}

fn default_target_blocks() -> u32 {
    6
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainDescriptor {
    pub id: ChainId,
    /// Human readable name used in logs, e.g. "Ethereum Classic".
    pub name: String,
    pub family: ChainFamily,
    pub currency_symbol: String,
    /// Manually assigned reputation, 0 (worst) to 10 (excellent).
    pub reputation: u8,
    #[serde(default = "default_target_blocks")]
    pub target_inclusion_blocks: u32,
}

impl ChainDescriptor {
    pub fn new(
        id: ChainId,
        name: impl Into<String>,
        family: ChainFamily,
        currency_symbol: impl Into<String>,
        reputation: u8,
    ) -> Result<Self, ChainError> {
        let d = ChainDescriptor {
            id,
            name: name.into(),
            family,
            currency_symbol: currency_symbol.into(),
            reputation,
            target_inclusion_blocks: default_target_blocks(),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), ChainError> {
        if self.reputation > 10 {
            return Err(ChainError::InvalidReputation(self.reputation));
        }
        if self.target_inclusion_blocks == 0 {
            return Err(ChainError::InvalidTarget);
        }
        Ok(())
    }

    /// Checks that a block may be ingested for this chain.
    pub fn admit(&self, block: &BlockHeader) -> Result<(), ChainError> {
        if block.chain != self.id {
            return Err(ChainError::ChainMismatch {
                window: self.id.clone(),
                block: block.chain.clone(),
            });
        }
        if block.is_uncle && self.family == ChainFamily::BitcoinLike {
            return Err(ChainError::UncleOnBitcoinLike(self.id.clone()));
        }
        if block.timestamp.secs() < 0 {
            return Err(ChainError::NegativeTimestamp(block.timestamp.secs()));
        }
        Ok(())
    }
}

fn parse_hex_array<const N: usize>(s: &str) -> Result<[u8; N], ChainError> {
    let bytes = hex::decode(s).map_err(|_| ChainError::InvalidHex(s.to_string()))?;
    bytes.try_into().map_err(|_| ChainError::InvalidHex(s.to_string()))
}

/// Opaque 32-byte block identifier, written as 64 lowercase hex characters.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BlockHash(pub [u8; 32]);

impl BlockHash {
    pub fn digest(parts: &[&[u8]]) -> Self {
        let mut h = Sha256::new();
        for p in parts {
            h.update((p.len() as u64).to_be_bytes());
            h.update(p);
        }
        BlockHash(h.finalize().into())
    }
}

impl fmt::Display for BlockHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for BlockHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BlockHash({})", &hex::encode(self.0)[..12])
    }
}

impl FromStr for BlockHash {
    type Err = ChainError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 64 || s.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(ChainError::InvalidHex(s.to_string()));
        }
        parse_hex_array(s).map(BlockHash)
    }
}

impl TryFrom<String> for BlockHash {
    type Error = ChainError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<BlockHash> for String {
    fn from(h: BlockHash) -> String {
        h.to_string()
    }
}

/// Observed fee level: satoshi per byte on bitcoin-like chains, gas price in
/// wei on ethereum-like chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeeStats {
    #[serde(with = "decimal_number")]
    pub median_fee_rate: Decimal,
}

impl FeeStats {
    pub fn new(median_fee_rate: Decimal) -> Self {
        FeeStats { median_fee_rate }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockHeader {
    pub chain: ChainId,
    pub height: u64,
    pub hash: BlockHash,
    pub timestamp: Timestamp,
    pub miner: String,
    /// Per-block difficulty (ethereum-like) or the difficulty `D` used for the
    /// bitcoin hash-rate estimate.
    pub difficulty: u64,
    pub tx_count: u64,
    pub is_uncle: bool,
    pub fee_stats: FeeStats,
}

type WindowKey = (Timestamp, u64, BlockHash);

/// Blocks (and uncles) of one chain mined within the last 24 hours.
///
/// Ordered by `(timestamp, height)`; a hash is stored at most once. The window
/// remembers the latest eviction instant, so a block that arrives already
/// older than the horizon is dropped on insert.
#[derive(Debug, Clone)]
pub struct RollingWindow {
    chain: ChainId,
    horizon_secs: i64,
    blocks: BTreeMap<WindowKey, BlockHeader>,
    hashes: HashSet<BlockHash>,
    now: Option<Timestamp>,
}

impl RollingWindow {
    pub fn new(chain: ChainId) -> Self {
        RollingWindow {
            chain,
            horizon_secs: DAY_SECS,
            blocks: BTreeMap::new(),
            hashes: HashSet::new(),
            now: None,
        }
    }

    pub fn chain(&self) -> &ChainId {
        &self.chain
    }

    pub fn horizon_secs(&self) -> i64 {
        self.horizon_secs
    }

    /// The earliest timestamp still retained at the last eviction.
    pub fn cutoff(&self) -> Option<Timestamp> {
        self.now.map(|n| n.minus_secs(self.horizon_secs))
    }

    /// Inserts a block. Returns `false` when the block was already present or
    /// is older than the current horizon.
    pub fn insert(&mut self, block: BlockHeader) -> Result<bool, ChainError> {
        if block.chain != self.chain {
            return Err(ChainError::ChainMismatch {
                window: self.chain.clone(),
                block: block.chain,
            });
        }
        if self.hashes.contains(&block.hash) {
            return Ok(false);
        }
        if let Some(cutoff) = self.cutoff() {
            if block.timestamp < cutoff {
                return Ok(false);
            }
        }
        self.hashes.insert(block.hash);
        self.blocks.insert((block.timestamp, block.height, block.hash), block);
        Ok(true)
    }

    /// Drops every block with `timestamp < now - 24h`. The boundary is closed:
    /// a block exactly 24 hours old is kept. Clock regressions are ignored.
    pub fn evict(&mut self, now: Timestamp) -> usize {
        let now = match self.now {
            Some(prev) if prev > now => prev,
            _ => now,
        };
        self.now = Some(now);
        let cutoff = now.minus_secs(self.horizon_secs);
        let mut removed = 0;
        while let Some(entry) = self.blocks.first_entry() {
            if entry.key().0 >= cutoff {
                break;
            }
            let block = entry.remove();
            self.hashes.remove(&block.hash);
            removed += 1;
        }
        removed
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// All blocks in `(timestamp, height)` order, uncles included.
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &BlockHeader> + '_ {
        self.blocks.values()
    }

    /// Regular (non-uncle) blocks in order.
    pub fn regular(&self) -> impl DoubleEndedIterator<Item = &BlockHeader> + '_ {
        self.blocks.values().filter(|b| !b.is_uncle)
    }

    pub fn regular_count(&self) -> usize {
        self.regular().count()
    }

    pub fn latest_regular(&self) -> Option<&BlockHeader> {
        self.regular().next_back()
    }

    pub fn contains(&self, hash: &BlockHash) -> bool {
        self.hashes.contains(hash)
    }
}

/// 16-byte identifier of a stored data record.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct RecordId(pub [u8; 16]);

impl RecordId {
    /// Content address of a record: the first 16 bytes of
    /// SHA-256(created_at || payload).
    pub fn derive(payload: &[u8], created_at: Timestamp) -> Self {
        let mut h = Sha256::new();
        h.update(created_at.secs().to_be_bytes());
        h.update(payload);
        let digest: [u8; 32] = h.finalize().into();
        let mut id = [0u8; 16];
        id.copy_from_slice(&digest[..16]);
        RecordId(id)
    }
}

impl fmt::Display for RecordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for RecordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RecordId({self})")
    }
}

impl FromStr for RecordId {
    type Err = ChainError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_hex_array(s).map(RecordId)
    }
}

impl TryFrom<String> for RecordId {
    type Error = ChainError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<RecordId> for String {
    fn from(id: RecordId) -> String {
        id.to_string()
    }
}

/// An application data record stored on some chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataRecord {
    pub record_id: RecordId,
    pub payload: Vec<u8>,
    pub created_at: Timestamp,
    pub chain_of_record: ChainId,
    /// Set once the record has been mined into `chain_of_record`.
    pub inclusion_time: Option<Timestamp>,
}

impl DataRecord {
    pub fn new(payload: Vec<u8>, created_at: Timestamp, chain: ChainId) -> Self {
        DataRecord {
            record_id: RecordId::derive(&payload, created_at),
            payload,
            created_at,
            chain_of_record: chain,
            inclusion_time: None,
        }
    }
}
