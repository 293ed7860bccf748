//! Blockchain proxies: the neutral interface every monitored chain is accessed
//! through, plus cost models, fee estimation, simulated chains, quote feeds and
//! trace files.

pub mod codec;
pub mod cost;
pub mod fee;
pub mod ledger;
pub mod quote;
pub mod sim;
pub mod trace;

use rust_decimal::Decimal;
use thiserror::Error;

use crate::chain::{BlockHeader, ChainDescriptor, ChainId, DataRecord, FeeStats, RecordId, RollingWindow};
use crate::time::{DateRange, Timestamp};

pub use codec::CodecError;
pub use cost::CostError;
pub use ledger::SimProxy;
pub use quote::{Quote, QuoteBook, QuoteFeed, StaticQuotes};
pub use sim::{SimChain, SimChainConfig, SimConfigError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProxyError {
    #[error("proxy for chain {0} is unavailable")]
    Unavailable(ChainId),
    #[error("no blocks in the 24h window of chain {0}")]
    EmptyWindow(ChainId),
    #[error("record {0} was submitted for chain {1}")]
    WrongChain(RecordId, ChainId),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// Handle for a submitted, not yet mined record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingTx {
    pub record_id: RecordId,
    pub chain: ChainId,
    pub carriers: usize,
    /// Total carrier size in bytes (bitcoin-like) or gas (ethereum-like).
    pub weight: u64,
    pub fee_rate: Option<Decimal>,
}

/// Stream of blocks produced by a proxy, in timestamp order.
pub type BlockStream = Box<dyn Iterator<Item = BlockHeader> + Send>;

/// Access to one blockchain.
///
/// Implementations are owned by a single event loop; only `&mut self`
/// methods mutate.
pub trait BlockchainProxy: Send {
    fn descriptor(&self) -> &ChainDescriptor;

    /// Blocks this proxy produces by itself. Proxies fed from an external
    /// trace return an empty stream.
    fn subscribe_blocks(&mut self) -> BlockStream {
        Box::new(std::iter::empty())
    }

    fn submit_record(&mut self, record: &DataRecord, fee_rate: Option<Decimal>) -> Result<PendingTx, ProxyError>;

    /// Mined records whose inclusion time lies in `range`, payloads reassembled.
    fn read_records(&self, range: DateRange) -> Result<Vec<DataRecord>, ProxyError>;

    /// Whether a record with this id is mined or pending on the chain.
    fn contains_record(&self, id: &RecordId) -> Result<bool, ProxyError>;

    fn estimate_fee(&self, window: &RollingWindow, target_blocks: u32) -> Result<FeeStats, ProxyError> {
        fee::estimate_fee(window, target_blocks)
    }

    /// Called for every block admitted to the chain's window.
    fn on_block(&mut self, block: &BlockHeader);

    /// Records submitted but not yet mined.
    fn pending_count(&self) -> usize {
        0
    }

    /// Marks every pending record as mined at `at`, without a block.
    fn mine_pending(&mut self, _at: Timestamp) {}
}
