//! Deterministic simulated block producers.
//!
//! ```text
//! cargo run --example simulated_chains [-- <seed>]
//! ```

use std::collections::BTreeMap;

use chainsel::chain::{ChainFamily, ChainId};
use chainsel::proxy::{SimChain, SimChainConfig};
use chainsel::time::Timestamp;
use rust_decimal::Decimal;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(42);
    let config = SimChainConfig {
        family: ChainFamily::EthereumLike,
        mean_interblock_s: 14.0,
        miner_distribution: BTreeMap::from([
            ("pool-a".to_string(), 0.45),
            ("pool-b".to_string(), 0.35),
            ("pool-c".to_string(), 0.20),
        ]),
        difficulty: 3_000_000_000_000_000,
        fee_rate: Decimal::from(20_000_000_000u64),
        uncle_rate: 0.07,
        tx_rate: 6.0,
        seed,
    };
    let start = Timestamp::parse("2018-10-01T00:00:00Z")?;
    let chain = SimChain::new(ChainId::new("sim")?, config, start, 6_400_000)?;

    let blocks: Vec<_> = chain.take_while(|b| b.timestamp < start.plus_secs(86_400)).collect();
    let regular = blocks.iter().filter(|b| !b.is_uncle).count();
    let mut shares: BTreeMap<&str, usize> = BTreeMap::new();
    for b in &blocks {
        *shares.entry(b.miner.as_str()).or_default() += 1;
    }
    println!(
        "seed {seed}: {regular} blocks and {} uncles in one day",
        blocks.len() - regular
    );
    for (miner, n) in shares {
        println!("  {miner}: {:.1} %", n as f64 * 100.0 / blocks.len() as f64);
    }
    for b in blocks.iter().take(5) {
        println!(
            "  #{} {} {} tx {}{}",
            b.height,
            b.timestamp,
            b.miner,
            b.tx_count,
            if b.is_uncle { " uncle" } else { "" }
        );
    }
    Ok(())
}
