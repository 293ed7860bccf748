mod common;

use std::collections::BTreeMap;
use std::path::Path;

use chainsel::chain::{BlockHeader, ChainFamily};
use chainsel::gateway::{BuildOptions, ClockMode, Instance, InstanceConfig, Journal};
use chainsel::proxy::trace::{read_block_trace, write_block_trace, TraceError};
use chainsel::proxy::{SimChain, SimChainConfig, SimConfigError};
use chainsel::time::Timestamp;
use common::*;
use rust_decimal::Decimal;

const T0: Timestamp = Timestamp::from_secs(1_600_000_000);

fn config(family: ChainFamily, uncle_rate: f64, seed: u64) -> SimChainConfig {
    SimChainConfig {
        family,
        mean_interblock_s: 15.0,
        miner_distribution: BTreeMap::from([("a".to_string(), 0.5), ("b".to_string(), 0.3), ("c".to_string(), 0.2)]),
        difficulty: 1_000,
        fee_rate: Decimal::from(3),
        uncle_rate,
        tx_rate: 2.0,
        seed,
    }
}

fn take(cfg: SimChainConfig, n: usize) -> Vec<BlockHeader> {
    SimChain::new(id("s"), cfg, T0, 0).unwrap().take(n).collect()
}

#[test]
fn miner_shares_follow_the_distribution() {
    for seed in [1, 2, 3] {
        let blocks = take(config(ChainFamily::BitcoinLike, 0.0, seed), 6000);
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for b in &blocks {
            *counts.entry(b.miner.as_str()).or_default() += 1;
        }
        for (miner, share) in [("a", 50.0), ("b", 30.0), ("c", 20.0)] {
            let observed = counts[miner] as f64 * 100.0 / blocks.len() as f64;
            assert!((observed - share).abs() <= 2.0, "seed {seed} miner {miner}: {observed}");
        }
    }
}

#[test]
fn timing_and_throughput_track_the_configuration() {
    let blocks = take(config(ChainFamily::BitcoinLike, 0.0, 9), 8000);
    let span = blocks.last().unwrap().timestamp.since(T0) as f64;
    let mean = span / blocks.len() as f64;
    assert!((mean - 15.0).abs() < 0.75, "mean inter-block time {mean}");
    let tx: u64 = blocks.iter().map(|b| b.tx_count).sum();
    let rate = tx as f64 / span;
    assert!((rate - 2.0).abs() < 0.1, "tx rate {rate}");
    assert!(blocks.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
    assert!(blocks.windows(2).all(|w| w[0].height < w[1].height));
}

#[test]
fn uncles_only_on_ethereum_like_chains() {
    let eth = take(config(ChainFamily::EthereumLike, 0.25, 4), 4000);
    let uncles = eth.iter().filter(|b| b.is_uncle).count();
    let regular = eth.len() - uncles;
    let rate = uncles as f64 / regular as f64;
    assert!((rate - 0.25).abs() < 0.03, "uncle rate {rate}");
    let btc = take(config(ChainFamily::BitcoinLike, 0.25, 4), 4000);
    assert!(btc.iter().all(|b| !b.is_uncle));
}

#[test]
fn same_seed_same_stream_other_seed_other_stream() {
    let a = take(config(ChainFamily::EthereumLike, 0.1, 7), 500);
    let b = take(config(ChainFamily::EthereumLike, 0.1, 7), 500);
    let c = take(config(ChainFamily::EthereumLike, 0.1, 8), 500);
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn invalid_configurations_are_refused() {
    let mut bad = config(ChainFamily::BitcoinLike, 0.0, 1);
    bad.miner_distribution.insert("d".into(), 0.5);
    assert!(matches!(
        SimChain::new(id("s"), bad, T0, 0),
        Err(SimConfigError::SharesSum(_))
    ));
    let mut bad = config(ChainFamily::BitcoinLike, 0.0, 1);
    bad.mean_interblock_s = 0.0;
    assert!(matches!(
        SimChain::new(id("s"), bad, T0, 0),
        Err(SimConfigError::InterblockTime(_))
    ));
    let bad = config(ChainFamily::EthereumLike, 1.0, 1);
    assert!(matches!(
        SimChain::new(id("s"), bad, T0, 0),
        Err(SimConfigError::UncleRate(_))
    ));
}

#[test]
fn traces_round_trip_and_report_bad_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("blocks.jsonl");
    let blocks = take(config(ChainFamily::EthereumLike, 0.2, 5), 200);
    write_block_trace(std::fs::File::create(&path).unwrap(), &blocks).unwrap();
    assert_eq!(read_block_trace(&path).unwrap(), blocks);

    let mut text = std::fs::read_to_string(&path).unwrap();
    text.push_str("\n{\"chain\": \"s\"}\n");
    std::fs::write(&path, text).unwrap();
    match read_block_trace(&path) {
        Err(TraceError::Malformed { line, .. }) => assert_eq!(line, 202),
        other => panic!("expected a malformed line, got {other:?}"),
    }
}

fn demo_config() -> InstanceConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/demo-sim.toml");
    InstanceConfig::load(&path).unwrap()
}

#[test]
fn simulated_instance_replays_deterministically() {
    let run = || {
        let mut config = demo_config();
        config.history_log = None;
        config.clock.mode = ClockMode::Virtual;
        config.clock.start = Some(T0);
        config.clock.until = Some(T0.plus_secs(3600));
        let opts = BuildOptions::default();
        let mut instance = Instance::build(&config, &opts, Journal::new()).unwrap();
        assert_eq!(instance.mode, ClockMode::Virtual);
        instance.warm_up();
        instance.run_to_end();
        instance.engine
    };
    let a = run();
    let b = run();
    assert_eq!(a.vectors(), b.vectors());
    assert_eq!(a.journal().lines(), b.journal().lines());
    assert_eq!(a.now(), T0.plus_secs(3600));
    let eth = a.vector(&id("sim-ether")).unwrap();
    assert!(eth.block_count > 5000, "{} blocks", eth.block_count);
    assert!((eth.m4_interblock_s - 14.0).abs() < 1.0);
    assert!((eth.m5_tx_per_s - 5.7).abs() < 0.3);
    assert!(a.ranking().unwrap().per_chain.iter().all(|c| c.eligible));
}
