//! Per-chain metric computation over the rolling window.
//!
//! | Metric | Meaning                          | Type            |
//! |--------|----------------------------------|-----------------|
//! | M1     | write cost, USD per KB           | decimal         |
//! | M2     | read cost, USD per KB            | decimal (0)     |
//! | M3     | exchange rate, USD               | decimal         |
//! | M4     | inter-block time, s              | float, +inf     |
//! | M5     | throughput, tx/s                 | float           |
//! | M6     | miner shares, % per miner        | map of floats   |
//! | M7     | network hash rate, H/s           | float           |
//! | M8     | reputation                       | integer 0..=10  |

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{ChainDescriptor, ChainFamily, ChainId, RollingWindow};
use crate::num::{decimal_number, f64_or_inf};
use crate::proxy::cost::{
    btc_write_cost_usd, eth_write_cost_gas, eth_write_cost_usd, CostError, DEFAULT_BLOCK_GAS_LIMIT,
};
use crate::proxy::fee::estimate_fee;
use crate::time::{Timestamp, DAY_SECS};

/// Payload size the write-cost metric is quoted for.
pub const KILOBYTE: usize = 1024;
const SECONDS_PER_DAY: f64 = DAY_SECS as f64;
/// Bitcoin blocks expected per day at the 10-minute target.
const BTC_BLOCKS_PER_DAY: f64 = 144.0;
const BTC_TARGET_SPACING_S: f64 = 600.0;
const TWO_POW_32: f64 = 4_294_967_296.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no quote available for {0}")]
    QuoteUnavailable(String),
    #[error("no blocks in the 24h window of chain {0}")]
    EmptyWindow(ChainId),
    #[error(transparent)]
    Cost(#[from] CostError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    M1,
    M2,
    M3,
    M4,
    M5,
    M6,
    M7,
    M8,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::M1,
        Metric::M2,
        Metric::M3,
        Metric::M4,
        Metric::M5,
        Metric::M6,
        Metric::M7,
        Metric::M8,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Metric> {
        Metric::ALL.get(i).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::M1 => "M1",
            Metric::M2 => "M2",
            Metric::M3 => "M3",
            Metric::M4 => "M4",
            Metric::M5 => "M5",
            Metric::M6 => "M6",
            Metric::M7 => "M7",
            Metric::M8 => "M8",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "m1" => Ok(Metric::M1),
            "m2" => Ok(Metric::M2),
            "m3" => Ok(Metric::M3),
            "m4" => Ok(Metric::M4),
            "m5" => Ok(Metric::M5),
            "m6" => Ok(Metric::M6),
            "m7" => Ok(Metric::M7),
            "m8" => Ok(Metric::M8),
            _ => Err(format!("unknown metric {s:?}, expected m1..m8")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub chain: ChainId,
    #[serde(with = "decimal_number")]
    pub m1_write_cost_usd_per_kb: Decimal,
    #[serde(with = "decimal_number")]
    pub m2_read_cost_usd_per_kb: Decimal,
    #[serde(with = "decimal_number")]
    pub m3_exchange_rate_usd: Decimal,
    #[serde(with = "f64_or_inf")]
    pub m4_interblock_s: f64,
    pub m5_tx_per_s: f64,
    pub m6_miner_shares: BTreeMap<String, f64>,
    pub m7_network_hashrate_hps: f64,
    pub m8_reputation: u8,
    pub computed_at: Timestamp,
    /// Regular blocks in the window.
    pub block_count: usize,
    /// Set when an input (quote, fee estimate) was missing or too old.
    pub stale: bool,
    /// Sequence number of the last event that affected this chain.
    #[serde(default)]
    pub seq: u64,
}

impl MetricVector {
    pub fn largest_miner_share(&self) -> f64 {
        self.m6_miner_shares.values().copied().fold(0.0, f64::max)
    }

    /// The scalar a score function or validation rule sees for `metric`.
    /// M6 is reduced to the largest miner share.
    pub fn scalar(&self, metric: Metric) -> f64 {
        use rust_decimal::prelude::ToPrimitive;
        match metric {
            Metric::M1 => self.m1_write_cost_usd_per_kb.to_f64().unwrap_or(f64::INFINITY),
            Metric::M2 => self.m2_read_cost_usd_per_kb.to_f64().unwrap_or(f64::INFINITY),
            Metric::M3 => self.m3_exchange_rate_usd.to_f64().unwrap_or(f64::INFINITY),
            Metric::M4 => self.m4_interblock_s,
            Metric::M5 => self.m5_tx_per_s,
            Metric::M6 => self.largest_miner_share(),
            Metric::M7 => self.m7_network_hashrate_hps,
            Metric::M8 => f64::from(self.m8_reputation),
        }
    }

    pub fn scalars(&self) -> [f64; 8] {
        Metric::ALL.map(|m| self.scalar(m))
    }

    /// Complete enough to take part in selection.
    pub fn is_usable(&self) -> bool {
        !self.stale && self.block_count > 0
    }
}

/// Write cost of one kilobyte in USD. Uses `user_fee` when given, otherwise
/// the median fee of the latest `target_inclusion_blocks` blocks.
pub fn compute_m1(
    window: &RollingWindow,
    descriptor: &ChainDescriptor,
    quote_usd: Option<Decimal>,
    user_fee: Option<Decimal>,
) -> Result<Decimal, MetricsError> {
    let usd = quote_usd.ok_or_else(|| MetricsError::QuoteUnavailable(descriptor.currency_symbol.clone()))?;
    let fee = match user_fee {
        Some(f) => f,
        None => {
            estimate_fee(window, descriptor.target_inclusion_blocks)
                .map_err(|_| MetricsError::EmptyWindow(window.chain().clone()))?
                .median_fee_rate
        }
    };
    Ok(match descriptor.family {
        ChainFamily::BitcoinLike => btc_write_cost_usd(KILOBYTE, fee, usd)?,
        ChainFamily::EthereumLike => {
            let gas = eth_write_cost_gas(KILOBYTE, 1.0, DEFAULT_BLOCK_GAS_LIMIT)?;
            eth_write_cost_usd(gas, fee, usd)?
        }
    })
}

/// Reading is free on every supported chain.
pub fn compute_m2() -> Decimal {
    Decimal::ZERO
}

/// Mean inter-block time; `+inf` when no regular block was mined in 24h.
pub fn compute_m4(window: &RollingWindow) -> f64 {
    let n = window.regular_count();
    if n == 0 {
        f64::INFINITY
    } else {
        SECONDS_PER_DAY / n as f64
    }
}

pub fn compute_m5(window: &RollingWindow) -> f64 {
    let total: u128 = window.regular().map(|b| u128::from(b.tx_count)).sum();
    total as f64 / SECONDS_PER_DAY
}

/// Share of mined blocks per miner, in percent. Uncles count on
/// ethereum-like chains.
pub fn compute_m6(window: &RollingWindow, family: ChainFamily) -> Result<BTreeMap<String, f64>, MetricsError> {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for b in window.iter() {
        if b.is_uncle && family == ChainFamily::BitcoinLike {
            continue;
        }
        *counts.entry(b.miner.as_str()).or_default() += 1;
    }
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(MetricsError::EmptyWindow(window.chain().clone()));
    }
    Ok(counts
        .into_iter()
        .map(|(m, c)| (m.to_string(), c as f64 * 100.0 / total as f64))
        .collect())
}

/// Network hash rate in hashes per second.
///
/// Bitcoin-like: `(n / 144) * (D * 2^32 / 600)` with `D` the difficulty of the
/// latest regular block. Ethereum-like: summed difficulty of blocks and uncles
/// divided by one day.
pub fn compute_m7(window: &RollingWindow, family: ChainFamily) -> Result<f64, MetricsError> {
    let empty = || MetricsError::EmptyWindow(window.chain().clone());
    match family {
        ChainFamily::BitcoinLike => {
            let latest = window.latest_regular().ok_or_else(empty)?;
            let n = window.regular_count() as f64;
            Ok(btc_hashrate(n, latest.difficulty as f64))
        }
        ChainFamily::EthereumLike => {
            if window.is_empty() {
                return Err(empty());
            }
            let total: u128 = window.iter().map(|b| u128::from(b.difficulty)).sum();
            Ok(total as f64 / SECONDS_PER_DAY)
        }
    }
}

pub fn btc_hashrate(n: f64, difficulty: f64) -> f64 {
    (n / BTC_BLOCKS_PER_DAY) * (difficulty * TWO_POW_32 / BTC_TARGET_SPACING_S)
}

/// Assembles M1-M8. Never fails: missing inputs leave zeros in the affected
/// metrics and mark the vector stale; an empty window gives `block_count = 0`.
pub fn compute_vector(
    window: &RollingWindow,
    descriptor: &ChainDescriptor,
    quote_usd: Option<Decimal>,
    quote_stale: bool,
    user_fee: Option<Decimal>,
    now: Timestamp,
) -> MetricVector {
    let mut stale = quote_stale || quote_usd.is_none();
    let m1 = match compute_m1(window, descriptor, quote_usd, user_fee) {
        Ok(v) => v,
        Err(MetricsError::EmptyWindow(_)) => Decimal::ZERO,
        Err(_) => {
            stale = true;
            Decimal::ZERO
        }
    };
    MetricVector {
        chain: descriptor.id.clone(),
        m1_write_cost_usd_per_kb: m1,
        m2_read_cost_usd_per_kb: compute_m2(),
        m3_exchange_rate_usd: quote_usd.unwrap_or_default(),
        m4_interblock_s: compute_m4(window),
        m5_tx_per_s: compute_m5(window),
        m6_miner_shares: compute_m6(window, descriptor.family).unwrap_or_default(),
        m7_network_hashrate_hps: compute_m7(window, descriptor.family).unwrap_or(0.0),
        m8_reputation: descriptor.reputation,
        computed_at: now,
        block_count: window.regular_count(),
        stale,
        seq: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{BlockHash, BlockHeader, FeeStats};
    use std::str::FromStr;

    fn desc(family: ChainFamily) -> ChainDescriptor {
        ChainDescriptor::new(ChainId::new("c").unwrap(), "C", family, "C", 10).unwrap()
    }

    fn window(blocks: &[(&str, u64, u64, bool)]) -> RollingWindow {
        let chain = ChainId::new("c").unwrap();
        let mut w = RollingWindow::new(chain.clone());
        for (i, (miner, difficulty, tx, uncle)) in blocks.iter().enumerate() {
            w.insert(BlockHeader {
                chain: chain.clone(),
                height: i as u64,
                hash: BlockHash::digest(&[&(i as u64).to_be_bytes()]),
                timestamp: Timestamp::from_secs(i as i64),
                miner: miner.to_string(),
                difficulty: *difficulty,
                tx_count: *tx,
                is_uncle: *uncle,
                fee_stats: FeeStats::new(Decimal::from(10)),
            })
            .unwrap();
        }
        w
    }

    #[test]
    fn m1_bitcoin() {
        let w = window(&[("a", 1, 1, false)]);
        let d = desc(ChainFamily::BitcoinLike);
        let price = Decimal::from_str("6394.25").unwrap();
        assert_eq!(
            compute_m1(&w, &d, Some(price), None).unwrap(),
            Decimal::from_str("2.33390125").unwrap()
        );
        assert_eq!(
            compute_m1(&w, &d, Some(price), Some(Decimal::ZERO)).unwrap(),
            Decimal::ZERO
        );
        assert_eq!(
            compute_m1(&w, &d, None, None),
            Err(MetricsError::QuoteUnavailable("C".into()))
        );
    }

    #[test]
    fn m1_ethereum_uses_90632_gas() {
        let w = window(&[]);
        let d = desc(ChainFamily::EthereumLike);
        let v = compute_m1(
            &w,
            &d,
            Some(Decimal::ONE),
            Some(Decimal::from(1_000_000_000_000_000_000u64)),
        )
        .unwrap();
        assert_eq!(v, Decimal::from(90_632));
        assert!(matches!(
            compute_m1(&w, &d, Some(Decimal::ONE), None),
            Err(MetricsError::EmptyWindow(_))
        ));
    }

    #[test]
    fn m4_and_m5() {
        let blocks: Vec<_> = (0..144).map(|_| ("a", 1, 0, false)).collect();
        assert_eq!(compute_m4(&window(&blocks)), 600.0);
        assert!(compute_m4(&window(&[])).is_infinite());
        assert_eq!(compute_m5(&window(&[])), 0.0);
        assert_eq!(compute_m5(&window(&[("a", 1, 86_400, false)])), 1.0);
        let w = window(&[
            ("a", 1, 100, false),
            ("a", 1, 200, false),
            ("a", 1, 300, false),
            ("a", 1, 999, true),
        ]);
        assert_eq!(compute_m5(&w), 600.0 / 86_400.0);
    }

    #[test]
    fn m6_shares() {
        let w = window(&[
            ("A", 1, 0, false),
            ("A", 1, 0, false),
            ("B", 1, 0, false),
            ("B", 1, 0, false),
        ]);
        let s = compute_m6(&w, ChainFamily::BitcoinLike).unwrap();
        assert_eq!(s["A"], 50.0);
        assert_eq!(s["B"], 50.0);

        let w = window(&[("A", 1, 0, false), ("B", 1, 0, false), ("B", 1, 0, true)]);
        let s = compute_m6(&w, ChainFamily::EthereumLike).unwrap();
        assert!((s["A"] - 100.0 / 3.0).abs() < 1e-12);
        assert!((s["B"] - 200.0 / 3.0).abs() < 1e-12);
        assert!(compute_m6(&window(&[]), ChainFamily::EthereumLike).is_err());
    }

    #[test]
    fn m7_formulas() {
        assert_eq!(btc_hashrate(144.0, 600.0 / TWO_POW_32), 1.0);
        let blocks: Vec<_> = (0..72).map(|_| ("a", 1, 0, false)).collect();
        let h = compute_m7(&window(&blocks), ChainFamily::BitcoinLike).unwrap();
        assert!((h - 3_579_139.413_333_333).abs() < 1e-6);

        let w = window(&[("a", 86_400, 0, false), ("b", 86_400, 0, true)]);
        assert_eq!(compute_m7(&w, ChainFamily::EthereumLike).unwrap(), 2.0);
    }

    #[test]
    fn vector_passes_reputation_and_flags_staleness() {
        let w = window(&[("a", 1, 1, false)]);
        let d = desc(ChainFamily::BitcoinLike);
        let v = compute_vector(&w, &d, Some(Decimal::ONE), false, None, Timestamp::EPOCH);
        assert_eq!(v.m8_reputation, 10);
        assert_eq!(v.m2_read_cost_usd_per_kb, Decimal::ZERO);
        assert!(v.is_usable());
        let v = compute_vector(&w, &d, None, false, None, Timestamp::EPOCH);
        assert!(v.stale);
        let v = compute_vector(&window(&[]), &d, Some(Decimal::ONE), false, None, Timestamp::EPOCH);
        assert!(!v.is_usable());
        assert!(v.m4_interblock_s.is_infinite());
    }

    #[test]
    fn vector_json_shape() {
        let v = compute_vector(
            &window(&[]),
            &desc(ChainFamily::BitcoinLike),
            Some(Decimal::ONE),
            false,
            None,
            Timestamp::EPOCH,
        );
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["m4_interblock_s"], "inf");
        assert_eq!(json["computed_at"], "1970-01-01T00:00:00Z");
        let back: MetricVector = serde_json::from_value(json).unwrap();
        assert_eq!(back, v);
    }
}
