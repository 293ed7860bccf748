//! A 24-hour block window and the metrics computed over it.
//!
//! ```text
//! cargo run --example rolling_window
//! ```

use chainsel::chain::{BlockHash, BlockHeader, ChainDescriptor, ChainFamily, ChainId, FeeStats, RollingWindow};
use chainsel::metrics::compute_vector;
use chainsel::time::{Timestamp, DAY_SECS};
use rust_decimal::Decimal;

fn header(chain: &ChainId, height: u64, at: Timestamp, miner: &str, uncle: bool) -> BlockHeader {
    BlockHeader {
        chain: chain.clone(),
        height,
        hash: BlockHash::digest(&[chain.as_str().as_bytes(), &height.to_be_bytes(), &[uncle as u8]]),
        timestamp: at,
        miner: miner.to_string(),
        difficulty: 2_000_000_000_000,
        tx_count: if uncle { 0 } else { 150 },
        is_uncle: uncle,
        fee_stats: FeeStats::new(Decimal::from(4_000_000_000u64)),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let id = ChainId::new("demo")?;
    let descriptor = ChainDescriptor::new(id.clone(), "Demo", ChainFamily::EthereumLike, "DMO", 7)?;
    let start = Timestamp::parse("2018-10-01T00:00:00Z")?;
    let miners = ["pool-a", "pool-b", "pool-a", "pool-c"];

    let mut window = RollingWindow::new(id.clone());
    // A block every 30 s for a day and a half, with an uncle every tenth block.
    for i in 0..4320u64 {
        let at = start.plus_secs(30 * i as i64);
        window.evict(at);
        window.insert(header(&id, i, at, miners[i as usize % 4], false))?;
        if i % 10 == 0 {
            window.insert(header(&id, i, at, "pool-d", true))?;
        }
    }
    let now = start.plus_secs(30 * 4319);
    let evicted = window.evict(now);
    println!(
        "window: {} blocks ({} regular), evicted {evicted} just now",
        window.len(),
        window.regular_count()
    );
    println!(
        "oldest kept: {}",
        window.iter().next().map(|b| b.timestamp).unwrap_or(now)
    );
    println!("cutoff:      {}", now.minus_secs(DAY_SECS));

    let v = compute_vector(&window, &descriptor, Some("12.5".parse()?), false, None, now);
    println!("M1 write cost per KB  {} USD", v.m1_write_cost_usd_per_kb);
    println!("M4 inter-block time   {:.2} s", v.m4_interblock_s);
    println!("M5 throughput         {:.3} tx/s", v.m5_tx_per_s);
    for (miner, share) in &v.m6_miner_shares {
        println!("M6 {miner:<18} {share:.2} %");
    }
    println!("M7 hash rate          {:.3e} H/s", v.m7_network_hashrate_hps);
    Ok(())
}
