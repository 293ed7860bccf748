//! Line-delimited JSON block and quote traces.
//!
//! Block trace lines carry exactly the fields
//! `chain, height, hash, timestamp, miner, difficulty, tx_count, is_uncle,
//! median_fee_rate`. Quote trace lines carry `timestamp, symbol, usd`.
//! Blank lines are skipped.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use rust_decimal::Decimal;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{BlockHash, BlockHeader, ChainId, FeeStats};
use crate::num::decimal_number;
use crate::time::Timestamp;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("{source_name}: {error}")]
    Io {
        source_name: String,
        #[source]
        error: io::Error,
    },
    #[error("{source_name}:{line}: {message}")]
    Malformed {
        source_name: String,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceBlock {
    pub chain: ChainId,
    pub height: u64,
    pub hash: BlockHash,
    pub timestamp: Timestamp,
    pub miner: String,
    pub difficulty: u64,
    pub tx_count: u64,
    pub is_uncle: bool,
    #[serde(with = "decimal_number")]
    pub median_fee_rate: Decimal,
}

impl From<TraceBlock> for BlockHeader {
    fn from(t: TraceBlock) -> Self {
        BlockHeader {
            chain: t.chain,
            height: t.height,
            hash: t.hash,
            timestamp: t.timestamp,
            miner: t.miner,
            difficulty: t.difficulty,
            tx_count: t.tx_count,
            is_uncle: t.is_uncle,
            fee_stats: FeeStats::new(t.median_fee_rate),
        }
    }
}

impl From<&BlockHeader> for TraceBlock {
    fn from(b: &BlockHeader) -> Self {
        TraceBlock {
            chain: b.chain.clone(),
            height: b.height,
            hash: b.hash,
            timestamp: b.timestamp,
            miner: b.miner.clone(),
            difficulty: b.difficulty,
            tx_count: b.tx_count,
            is_uncle: b.is_uncle,
            median_fee_rate: b.fee_stats.median_fee_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuoteRecord {
    pub timestamp: Timestamp,
    pub symbol: String,
    #[serde(with = "decimal_number")]
    pub usd: Decimal,
}

/// Streaming reader over a line-delimited JSON trace.
pub struct TraceReader<R, T> {
    source_name: String,
    lines: io::Lines<R>,
    line: usize,
    _item: std::marker::PhantomData<T>,
}

impl<R: BufRead, T: DeserializeOwned> TraceReader<R, T> {
    pub fn new(source_name: impl Into<String>, reader: R) -> Self {
        TraceReader {
            source_name: source_name.into(),
            lines: reader.lines(),
            line: 0,
            _item: std::marker::PhantomData,
        }
    }
}

impl<R: BufRead, T: DeserializeOwned> Iterator for TraceReader<R, T> {
    type Item = Result<(usize, T), TraceError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(error) => {
                    return Some(Err(TraceError::Io {
                        source_name: self.source_name.clone(),
                        error,
                    }))
                }
            };
            self.line += 1;
            if text.trim().is_empty() {
                continue;
            }
            return Some(
                serde_json::from_str(&text)
                    .map(|v| (self.line, v))
                    .map_err(|e| TraceError::Malformed {
                        source_name: self.source_name.clone(),
                        line: self.line,
                        message: e.to_string(),
                    }),
            );
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, TraceError> {
    File::open(path).map(BufReader::new).map_err(|error| TraceError::Io {
        source_name: path.display().to_string(),
        error,
    })
}

fn read_all<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, TraceError> {
    TraceReader::new(path.display().to_string(), open(path)?)
        .map(|r| r.map(|(_, v)| v))
        .collect()
}

/// Reads a block trace in file order.
pub fn read_block_trace(path: &Path) -> Result<Vec<BlockHeader>, TraceError> {
    Ok(read_all::<TraceBlock>(path)?
        .into_iter()
        .map(BlockHeader::from)
        .collect())
}

pub fn read_quote_trace(path: &Path) -> Result<Vec<QuoteRecord>, TraceError> {
    read_all(path)
}

fn write_lines<W: Write, T: Serialize>(mut out: W, items: impl IntoIterator<Item = T>) -> io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, &item)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_block_trace<'a, W: Write>(out: W, blocks: impl IntoIterator<Item = &'a BlockHeader>) -> io::Result<()> {
    write_lines(out, blocks.into_iter().map(TraceBlock::from))
}

pub fn write_quote_trace<'a, W: Write>(out: W, quotes: impl IntoIterator<Item = &'a QuoteRecord>) -> io::Result<()> {
    write_lines(out, quotes)
}
