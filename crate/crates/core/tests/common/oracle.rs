//! Metric formulas recomputed from a plain block list, without the window.

use std::collections::{BTreeMap, HashSet};

use chainsel::chain::{BlockHeader, ChainFamily};
use chainsel::time::Timestamp;
use proptest::prelude::*;

use super::{block, id};

const DAY: f64 = 86_400.0;

/// Blocks a closed 24h window at `now` retains: first copy of each hash,
/// timestamps in `[now - 86400, now]`.
pub fn retained(blocks: &[BlockHeader], now: Timestamp) -> Vec<BlockHeader> {
    let mut seen = HashSet::new();
    blocks
        .iter()
        .filter(|b| b.timestamp.secs() >= now.secs() - 86_400 && b.timestamp <= now)
        .filter(|b| seen.insert(b.hash))
        .cloned()
        .collect()
}

pub fn m4(blocks: &[BlockHeader]) -> f64 {
    let n = blocks.iter().filter(|b| !b.is_uncle).count();
    if n == 0 {
        f64::INFINITY
    } else {
        DAY / n as f64
    }
}

pub fn m5(blocks: &[BlockHeader]) -> f64 {
    blocks
        .iter()
        .filter(|b| !b.is_uncle)
        .map(|b| b.tx_count as f64)
        .sum::<f64>()
        / DAY
}

pub fn m6(blocks: &[BlockHeader], family: ChainFamily) -> BTreeMap<String, f64> {
    let counted: Vec<&BlockHeader> = blocks
        .iter()
        .filter(|b| family == ChainFamily::EthereumLike || !b.is_uncle)
        .collect();
    let mut shares = BTreeMap::new();
    for b in &counted {
        *shares.entry(b.miner.clone()).or_insert(0.0) += 100.0 / counted.len() as f64;
    }
    shares
}

pub fn m7(blocks: &[BlockHeader], family: ChainFamily) -> f64 {
    match family {
        ChainFamily::BitcoinLike => {
            let regular: Vec<&BlockHeader> = blocks.iter().filter(|b| !b.is_uncle).collect();
            let latest = regular
                .iter()
                .max_by_key(|b| (b.timestamp, b.height))
                .expect("non-empty window");
            let per_block_hashes = latest.difficulty as f64 * 4_294_967_296.0 / 600.0;
            regular.len() as f64 / 144.0 * per_block_hashes
        }
        ChainFamily::EthereumLike => blocks.iter().map(|b| b.difficulty as f64).sum::<f64>() / DAY,
    }
}

pub fn rel_err(actual: f64, expected: f64) -> f64 {
    if actual == expected {
        0.0
    } else {
        (actual - expected).abs() / expected.abs().max(f64::MIN_POSITIVE)
    }
}

/// A random day and a half of blocks for chain `w`, with uncles and repeats,
/// plus the instant to evaluate at.
pub fn arb_stream() -> impl Strategy<Value = (Vec<BlockHeader>, Timestamp)> {
    let one = (
        0i64..129_600,
        0u8..5,
        1u64..1_000_000_000_000,
        0u64..5_000,
        any::<bool>(),
    );
    (proptest::collection::vec(one, 1..300), 0usize..4).prop_map(|(raw, repeats)| {
        let base = Timestamp::from_secs(1_600_000_000);
        let mut blocks: Vec<BlockHeader> = raw
            .into_iter()
            .enumerate()
            .map(|(i, (offset, miner, difficulty, tx, uncle))| {
                let mut b = block(
                    "w",
                    i as u64 + 1,
                    base.plus_secs(offset),
                    &format!("miner-{miner}"),
                    difficulty,
                    tx,
                );
                b.is_uncle = uncle && i % 3 == 0;
                b
            })
            .collect();
        for i in 0..repeats.min(blocks.len()) {
            blocks.push(blocks[i].clone());
        }
        blocks.sort_by_key(|b| b.timestamp);
        (blocks, base.plus_secs(129_600))
    })
}

pub fn window_id() -> chainsel::chain::ChainId {
    id("w")
}
