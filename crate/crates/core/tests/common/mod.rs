#![allow(dead_code)]

use std::path::PathBuf;

use chainsel::chain::{BlockHash, BlockHeader, ChainDescriptor, ChainFamily, ChainId, FeeStats};
use chainsel::gateway::{replay, BuildOptions, Engine, InstanceConfig, Journal};
use chainsel::scenario::Fixture;
use chainsel::time::Timestamp;
use rust_decimal::Decimal;
use tempfile::TempDir;

pub fn id(s: &str) -> ChainId {
    ChainId::new(s).unwrap()
}

pub fn ts(s: &str) -> Timestamp {
    Timestamp::parse(s).unwrap()
}

pub fn descriptor(name: &str, family: ChainFamily, symbol: &str, reputation: u8) -> ChainDescriptor {
    ChainDescriptor::new(id(name), name, family, symbol, reputation).unwrap()
}

pub fn block(chain: &str, height: u64, at: Timestamp, miner: &str, difficulty: u64, tx: u64) -> BlockHeader {
    BlockHeader {
        chain: id(chain),
        height,
        hash: BlockHash::digest(&[chain.as_bytes(), &height.to_be_bytes(), &at.secs().to_be_bytes()]),
        timestamp: at,
        miner: miner.into(),
        difficulty,
        tx_count: tx,
        is_uncle: false,
        fee_stats: FeeStats::new(Decimal::from(20)),
    }
}

/// A fixture written into a fresh directory.
pub struct Written {
    pub dir: TempDir,
    pub config: PathBuf,
}

pub fn write(fixture: &Fixture) -> Written {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture.write(dir.path()).unwrap();
    Written { dir, config }
}

pub fn load(w: &Written) -> InstanceConfig {
    InstanceConfig::load(&w.config).unwrap()
}

pub fn fresh() -> BuildOptions {
    BuildOptions {
        fresh_history: true,
        ..BuildOptions::default()
    }
}

pub fn replay_fixture(fixture: &Fixture) -> (Written, Engine) {
    let w = write(fixture);
    let engine = replay(&load(&w), &fresh(), Journal::new()).unwrap();
    (w, engine)
}

pub fn totals(engine: &Engine) -> Vec<u32> {
    engine.ranking().unwrap().benefits()
}

/// Journal lines without their clock prefix.
pub fn messages(engine: &Engine) -> Vec<String> {
    engine
        .journal()
        .lines()
        .iter()
        .map(|l| l.split_once(" - ").unwrap().1.to_string())
        .collect()
}

pub mod oracle;
