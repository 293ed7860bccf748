//! Built-in replay fixtures.
//!
//! Each fixture is one day of synthetic blocks per chain, shaped so the
//! metrics land in chosen score intervals, plus the policies the run uses.
//! [`Fixture::write`] lays out a directory that `chainsel replay` accepts:
//!
//! ```text
//! <dir>/<name>.toml
//! <dir>/policies/<policy>.json
//! <dir>/generated/<name>-blocks.jsonl
//! <dir>/generated/<name>-quotes.jsonl
//! ```

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use rust_decimal::Decimal;

use crate::chain::{BlockHash, BlockHeader, ChainDescriptor, ChainFamily, ChainId, FeeStats};
use crate::metrics::Metric;
use crate::proxy::trace::{write_block_trace, write_quote_trace, QuoteRecord};
use crate::selection::{CmpOp, Piece, RankingPolicy, ScoreAssignment, Validation, ValidationRule, Weights};
use crate::switchover::{SwitchMode, TransferStrategy};
use crate::time::{Timestamp, DAY_SECS};

pub const BALANCED: &str = "balanced";
pub const COST_FOCUS: &str = "cost-focus";
pub const RELAXED_LATENCY: &str = "relaxed-latency";
pub const HASH_RATE_WATCH: &str = "hash-rate-watch";

/// Seconds after the start instant at which policy updates apply.
pub const UPDATE_OFFSET_S: i64 = 30;

/// First block height of every generated chain.
const BASE_HEIGHT: u64 = 1_000_000;

fn dec(s: &str) -> Decimal {
    s.parse().expect("decimal literal")
}

fn saf(pieces: &[(f64, f64, u8)]) -> ScoreAssignment {
    ScoreAssignment::new(pieces.iter().map(|&(lo, hi, s)| Piece(lo, hi, s)).collect()).expect("valid score assignment")
}

const INF: f64 = f64::INFINITY;

/// Cheap, fast and trustworthy: every metric but M2 at weight 5.
pub fn balanced_policy() -> RankingPolicy {
    RankingPolicy {
        weights: Weights([5, 0, 5, 5, 5, 5, 5, 5]),
        safs: [
            saf(&[
                (0.0, 1e-4, 4),
                (1e-4, 1e-2, 3),
                (1e-2, 1e-1, 2),
                (1e-1, 1.0, 1),
                (1.0, INF, 0),
            ]),
            saf(&[(0.0, INF, 4)]),
            saf(&[
                (0.0, 50.0, 4),
                (50.0, 100.0, 3),
                (100.0, 250.0, 2),
                (250.0, 500.0, 1),
                (500.0, INF, 0),
            ]),
            saf(&[
                (0.0, 20.0, 4),
                (20.0, 40.0, 3),
                (40.0, 60.0, 2),
                (60.0, 120.0, 1),
                (120.0, INF, 0),
            ]),
            saf(&[
                (0.0, 0.45, 0),
                (0.45, 2.0, 1),
                (2.0, 5.0, 2),
                (5.0, 10.0, 3),
                (10.0, INF, 4),
            ]),
            saf(&[
                (0.0, 22.0, 4),
                (22.0, 27.0, 3),
                (27.0, 30.0, 2),
                (30.0, 38.0, 1),
                (38.0, INF, 0),
            ]),
            saf(&[
                (0.0, 1e14, 0),
                (1e14, 4e14, 1),
                (4e14, 7e14, 2),
                (7e14, 1e15, 3),
                (1e15, INF, 4),
            ]),
            saf(&[
                (0.0, 2.0, 0),
                (2.0, 4.0, 1),
                (4.0, 6.0, 2),
                (6.0, 8.0, 3),
                (8.0, 10.0, 4),
            ]),
        ],
        validation: Validation::default(),
        suppression_period_s: 3600,
        mode: SwitchMode::RequireApproval,
        transfer_strategy: TransferStrategy::OnTrustLoss(7),
    }
}

/// [`balanced_policy`] without the decentralization, hash-rate and
/// reputation weights.
pub fn cost_focus_policy() -> RankingPolicy {
    let mut p = balanced_policy();
    for m in [Metric::M6, Metric::M7, Metric::M8] {
        p.weights.set(m, 0);
    }
    p
}

/// [`cost_focus_policy`] with a coarser inter-block time scale and a lower
/// throughput weight.
pub fn relaxed_latency_policy() -> RankingPolicy {
    let mut p = cost_focus_policy();
    p.safs[Metric::M4.index()] = saf(&[
        (0.0, 60.0, 4),
        (60.0, 120.0, 3),
        (120.0, 180.0, 2),
        (180.0, 240.0, 1),
        (240.0, INF, 0),
    ]);
    p.weights.set(Metric::M5, 3);
    p
}

/// Flat scores with a single rule: hash rate of at least 180 GH/s.
pub fn hash_rate_watch_policy() -> RankingPolicy {
    RankingPolicy {
        weights: Weights([1; 8]),
        safs: std::array::from_fn(|_| ScoreAssignment::constant(1)),
        validation: Validation {
            rules: vec![ValidationRule::new(Metric::M7, CmpOp::Ge, 180e9)],
            formula: Default::default(),
        },
        suppression_period_s: 0,
        mode: SwitchMode::RequireApproval,
        transfer_strategy: TransferStrategy::All,
    }
}

/// Every named policy the fixtures refer to.
pub fn policies() -> Vec<(&'static str, RankingPolicy)> {
    vec![
        (BALANCED, balanced_policy()),
        (COST_FOCUS, cost_focus_policy()),
        (RELAXED_LATENCY, relaxed_latency_policy()),
        (HASH_RATE_WATCH, hash_rate_watch_policy()),
    ]
}

/// One chain over one day.
#[derive(Debug, Clone)]
pub struct ChainDay {
    pub descriptor: ChainDescriptor,
    pub regular: u64,
    pub uncles: u64,
    /// Transactions over the day.
    pub tx: u64,
    /// Blocks per miner, uncles included; sums to `regular + uncles`.
    pub miners: Vec<u64>,
    pub difficulty: u64,
    /// Target median fee: sat/B or wei per gas.
    pub fee: Decimal,
    pub price_usd: Decimal,
}

fn descriptor(id: &str, name: &str, family: ChainFamily, symbol: &str, reputation: u8) -> ChainDescriptor {
    ChainDescriptor::new(ChainId::new(id).expect("chain id"), name, family, symbol, reputation).expect("descriptor")
}

pub fn bitcoin() -> ChainDescriptor {
    descriptor("bitcoin", "Bitcoin", ChainFamily::BitcoinLike, "BTC", 10)
}

pub fn ethereum() -> ChainDescriptor {
    descriptor("ethereum", "Ethereum", ChainFamily::EthereumLike, "ETH", 10)
}

pub fn ethereum_classic() -> ChainDescriptor {
    descriptor(
        "ethereum-classic",
        "Ethereum Classic",
        ChainFamily::EthereumLike,
        "ETC",
        9,
    )
}

pub fn expanse() -> ChainDescriptor {
    descriptor("expanse", "Expanse", ChainFamily::EthereumLike, "EXP", 5)
}

const ETH_MINERS: [u64; 8] = [1584, 1320, 990, 792, 660, 528, 330, 396];
const ETC_MINERS: [u64; 6] = [2730, 1300, 975, 650, 455, 390];
const EXP_MINERS: [u64; 5] = [960, 500, 300, 160, 80];

#[allow(clippy::too_many_arguments)]
fn day(
    descriptor: ChainDescriptor,
    regular: u64,
    uncles: u64,
    tx: u64,
    miners: &[u64],
    difficulty: u64,
    fee: &str,
    price: &str,
) -> ChainDay {
    ChainDay {
        descriptor,
        regular,
        uncles,
        tx,
        miners: miners.to_vec(),
        difficulty,
        fee: dec(fee),
        price_usd: dec(price),
    }
}

/// One miner name per block, miner `i` taking `counts[i]` blocks spread
/// evenly over the day.
fn miner_sequence(symbol: &str, counts: &[u64]) -> Vec<String> {
    let mut slots: Vec<(f64, usize)> = counts
        .iter()
        .enumerate()
        .flat_map(|(j, &c)| (0..c).map(move |i| ((i as f64 + 0.5) / c as f64, j)))
        .collect();
    slots.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let prefix = symbol.to_ascii_lowercase();
    slots
        .into_iter()
        .map(|(_, j)| format!("{prefix}-pool-{}", j + 1))
        .collect()
}

fn block_hash(chain: &ChainId, height: u64, uncle: bool, index: u64) -> BlockHash {
    BlockHash::digest(&[
        chain.as_str().as_bytes(),
        &height.to_be_bytes(),
        if uncle { b"uncle" } else { b"block" },
        &index.to_be_bytes(),
    ])
}

/// Blocks in `(first, last]` for `day`, ending exactly at `last`.
fn day_blocks(day: &ChainDay, first: Timestamp, last: Timestamp) -> Vec<BlockHeader> {
    let id = &day.descriptor.id;
    let span = last.since(first);
    let n = day.regular;
    let mut blocks = Vec::with_capacity((n + day.uncles) as usize);
    let tx_base = day.tx / n;
    let tx_extra = day.tx % n;
    let tenth = day.fee / Decimal::TEN;
    let mut times = Vec::with_capacity(n as usize);
    for i in 0..n {
        let ts = first.plus_secs(((i as i64 + 1) * span) / n as i64);
        times.push(ts);
        let height = BASE_HEIGHT + i;
        let fee = if i % 2 == 0 { day.fee - tenth } else { day.fee + tenth };
        blocks.push(BlockHeader {
            chain: id.clone(),
            height,
            hash: block_hash(id, height, false, i),
            timestamp: ts,
            miner: String::new(),
            difficulty: day.difficulty,
            tx_count: tx_base + u64::from(i < tx_extra),
            is_uncle: false,
            fee_stats: FeeStats::new(fee),
        });
    }
    for j in 0..day.uncles {
        let k = ((2 * j + 1) * n / (2 * day.uncles)) as usize;
        let height = BASE_HEIGHT + k as u64 - 1;
        blocks.push(BlockHeader {
            chain: id.clone(),
            height,
            hash: block_hash(id, height, true, j),
            timestamp: times[k],
            miner: String::new(),
            difficulty: day.difficulty,
            tx_count: 0,
            is_uncle: true,
            fee_stats: FeeStats::new(day.fee),
        });
    }
    blocks.sort_by_key(|b| (b.timestamp, b.height, b.is_uncle));
    let miners = miner_sequence(&day.descriptor.currency_symbol, &day.miners);
    assert_eq!(
        miners.len(),
        blocks.len(),
        "miner counts of {id} must cover every block"
    );
    for (b, m) in blocks.iter_mut().zip(miners) {
        b.miner = m;
    }
    blocks
}

/// A replayable setup: chains, their blocks and quotes, and the policies in
/// force.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    /// End of warm-up; the ranking is first computed here.
    pub start: Timestamp,
    pub active: Option<ChainId>,
    pub chains: Vec<ChainDescriptor>,
    pub blocks: Vec<BlockHeader>,
    pub quotes: Vec<QuoteRecord>,
    pub policy: &'static str,
    pub policy_updates: Vec<(Timestamp, &'static str)>,
}

impl Fixture {
    fn from_days(
        name: &'static str,
        start: &str,
        active: Option<ChainDescriptor>,
        days: Vec<ChainDay>,
        policy: &'static str,
        update: Option<&'static str>,
    ) -> Fixture {
        let start = Timestamp::parse(start).expect("start instant");
        // Leaves an hour of slack so the window still holds every block when
        // policy updates apply after the start.
        let first = start.minus_secs(DAY_SECS - 3600);
        let mut blocks: Vec<BlockHeader> = days.iter().flat_map(|d| day_blocks(d, first, start)).collect();
        blocks.sort_by(|a, b| (a.timestamp, &a.chain, a.height).cmp(&(b.timestamp, &b.chain, b.height)));
        let quotes = days
            .iter()
            .map(|d| QuoteRecord {
                timestamp: start.minus_secs(60),
                symbol: d.descriptor.currency_symbol.clone(),
                usd: d.price_usd,
            })
            .collect();
        Fixture {
            name,
            start,
            active: active.map(|d| d.id),
            chains: days.into_iter().map(|d| d.descriptor).collect(),
            blocks,
            quotes,
            policy,
            policy_updates: update
                .map(|p| (start.plus_secs(UPDATE_OFFSET_S), p))
                .into_iter()
                .collect(),
        }
    }

    pub fn blocks_file(&self) -> String {
        format!("generated/{}-blocks.jsonl", self.name)
    }

    pub fn quotes_file(&self) -> String {
        format!("generated/{}-quotes.jsonl", self.name)
    }

    pub fn history_file(&self) -> String {
        format!("generated/{}-history.jsonl", self.name)
    }

    /// The instance configuration, with paths relative to the fixture
    /// directory.
    pub fn config_toml(&self) -> String {
        let mut s = String::new();
        if let Some(active) = &self.active {
            writeln!(s, "active = \"{active}\"").unwrap();
        }
        writeln!(s, "trace = \"{}\"", self.blocks_file()).unwrap();
        writeln!(s, "history_log = \"{}\"", self.history_file()).unwrap();
        writeln!(s, "policy_file = \"policies/{}.json\"", self.policy).unwrap();
        writeln!(
            s,
            "\n[clock]\nmode = \"virtual\"\nstart = \"{}\"\ntick_s = 60",
            self.start
        )
        .unwrap();
        writeln!(
            s,
            "\n[quotes]\nsource = \"trace\"\ntrace = \"{}\"\nstaleness_s = 600",
            self.quotes_file()
        )
        .unwrap();
        for c in &self.chains {
            let family = match c.family {
                ChainFamily::BitcoinLike => "bitcoin-like",
                ChainFamily::EthereumLike => "ethereum-like",
            };
            writeln!(
                s,
                "\n[[chains]]\nid = \"{}\"\nname = \"{}\"\nfamily = \"{family}\"\nsymbol = \"{}\"\nreputation = {}\nproxy = \"trace\"",
                c.id, c.name, c.currency_symbol, c.reputation
            )
            .unwrap();
        }
        for (at, policy) in &self.policy_updates {
            writeln!(
                s,
                "\n[[policy_updates]]\nat = \"{at}\"\nfile = \"policies/{policy}.json\""
            )
            .unwrap();
        }
        s
    }

    /// Writes the block and quote traces under `dir/generated`.
    pub fn write_traces(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir.join("generated"))?;
        write_block_trace(
            BufWriter::new(fs::File::create(dir.join(self.blocks_file()))?),
            &self.blocks,
        )?;
        write_quote_trace(
            BufWriter::new(fs::File::create(dir.join(self.quotes_file()))?),
            &self.quotes,
        )
    }

    /// Writes the configuration, every policy and the traces into `dir`.
    /// Returns the configuration path.
    pub fn write(&self, dir: &Path) -> io::Result<PathBuf> {
        write_policies(dir)?;
        self.write_traces(dir)?;
        let path = dir.join(format!("{}.toml", self.name));
        fs::write(&path, self.config_toml())?;
        Ok(path)
    }
}

/// Writes `dir/policies/<name>.json` for every named policy.
pub fn write_policies(dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir.join("policies"))?;
    for (name, policy) in policies() {
        fs::write(
            dir.join("policies").join(format!("{name}.json")),
            policy.to_json_pretty() + "\n",
        )?;
    }
    Ok(())
}

/// Four chains ranked under [`balanced_policy`] with no chain in use yet.
pub fn baseline_selection() -> Fixture {
    let days = vec![
        day(
            bitcoin(),
            160,
            0,
            222_048,
            &[32, 28, 24, 20, 16, 12, 10, 8, 6, 4],
            7_152_633_351_906,
            "20",
            "6394.25",
        ),
        day(
            ethereum(),
            6171,
            429,
            495_936,
            &ETH_MINERS,
            3_430_000_000_000_000,
            "10000000000",
            "213.14",
        ),
        day(
            ethereum_classic(),
            6200,
            300,
            40_608,
            &ETC_MINERS,
            218_000_000_000_000,
            "1300000000",
            "10.66",
        ),
        day(
            expanse(),
            1964,
            36,
            5_184,
            &EXP_MINERS,
            8_877_600_000_000,
            "61670000000",
            "0.36",
        ),
    ];
    Fixture::from_days("baseline-selection", "2018-09-26T00:00:00Z", None, days, BALANCED, None)
}

/// Ethereum in use; a switch to [`cost_focus_policy`] shortly after the start.
pub fn cost_focus() -> Fixture {
    let days = vec![
        day(
            bitcoin(),
            158,
            0,
            225_504,
            &[33, 27, 25, 19, 16, 12, 10, 8, 5, 3],
            7_182_852_313_938,
            "22",
            "6590.52",
        ),
        day(
            ethereum(),
            6150,
            450,
            501_984,
            &ETH_MINERS,
            3_300_000_000_000_000,
            "4000000000",
            "227.43",
        ),
        day(
            ethereum_classic(),
            6180,
            320,
            42_336,
            &ETC_MINERS,
            210_000_000_000_000,
            "2000000000",
            "10.86",
        ),
        day(
            expanse(),
            1963,
            37,
            4_320,
            &EXP_MINERS,
            8_600_000_000_000,
            "2000000000",
            "0.34",
        ),
    ];
    Fixture::from_days(
        "cost-focus",
        "2018-10-08T00:00:00Z",
        Some(ethereum()),
        days,
        BALANCED,
        Some(COST_FOCUS),
    )
}

/// Ethereum Classic in use under [`cost_focus_policy`]; a switch to
/// [`relaxed_latency_policy`] shortly after the start.
pub fn relaxed_latency() -> Fixture {
    let days = vec![
        day(
            bitcoin(),
            150,
            0,
            210_816,
            &[30, 26, 24, 19, 15, 12, 9, 7, 5, 3],
            7_184_404_942_701,
            "15",
            "6480.77",
        ),
        day(
            ethereum(),
            6210,
            390,
            485_568,
            &ETH_MINERS,
            3_200_000_000_000_000,
            "5000000000",
            "205.12",
        ),
        day(
            ethereum_classic(),
            6150,
            350,
            44_064,
            &ETC_MINERS,
            205_000_000_000_000,
            "2200000000",
            "9.46",
        ),
        day(
            expanse(),
            1960,
            40,
            6_048,
            &EXP_MINERS,
            8_500_000_000_000,
            "1490000000",
            "0.31",
        ),
    ];
    Fixture::from_days(
        "relaxed-latency",
        "2018-10-18T00:00:00Z",
        Some(ethereum_classic()),
        days,
        COST_FOCUS,
        Some(RELAXED_LATENCY),
    )
}

/// Per-block difficulty of the five early Expanse blocks that hold 43.2
/// TH of extra work.
const HEAVY_DIFFICULTY: u64 = 432_000_000_000_000 + LIVE_DIFFICULTY;
/// Difficulty of each Expanse block mined after the start.
const LIVE_DIFFICULTY: u64 = 8_800_000_000_000;
const HEAVY_BLOCKS: i64 = 5;
/// Summed difficulty of the 24 h window at the start: 200 GH/s.
const START_WORK: u64 = 17_280_000_000_000_000;

/// Expanse in use under [`hash_rate_watch_policy`]. Its hash rate falls from
/// 200 to 175 GH/s in 5 GH/s steps, one new block every five seconds.
pub fn hash_rate_drop() -> Fixture {
    let start = Timestamp::parse("2018-10-20T13:52:25Z").expect("start instant");
    let etc = day(
        ethereum_classic(),
        6200,
        300,
        40_608,
        &ETC_MINERS,
        218_000_000_000_000,
        "1300000000",
        "10.66",
    );
    let exp = expanse();
    let id = exp.id.clone();
    let mut blocks: Vec<BlockHeader> = day_blocks(&etc, start.minus_secs(DAY_SECS - 3600), start);

    // Five heavy blocks drop out of the window one by one while five light
    // blocks arrive, each exchange removing 5 GH/s.
    let mut exp_blocks = Vec::new();
    let mut push = |ts: Timestamp, difficulty: u64, tx: u64| {
        let i = exp_blocks.len() as u64;
        let height = BASE_HEIGHT + i;
        let fee = if i.is_multiple_of(2) {
            dec("55503000000")
        } else {
            dec("67837000000")
        };
        exp_blocks.push(BlockHeader {
            chain: id.clone(),
            height,
            hash: block_hash(&id, height, false, i),
            timestamp: ts,
            miner: String::new(),
            difficulty,
            tx_count: tx,
            is_uncle: false,
            fee_stats: FeeStats::new(fee),
        });
    };
    let day_start = start.minus_secs(DAY_SECS);
    for k in 1..=HEAVY_BLOCKS {
        push(day_start.plus_secs(5 * k - 1), HEAVY_DIFFICULTY, 3);
    }
    let baseline = 1990u64;
    let baseline_work = START_WORK - HEAVY_BLOCKS as u64 * HEAVY_DIFFICULTY;
    let per_block = baseline_work / baseline;
    let first = day_start.plus_secs(5 * HEAVY_BLOCKS);
    let span = start.since(first);
    for i in 0..baseline {
        let ts = first.plus_secs(((i as i64 + 1) * span) / baseline as i64);
        let extra = if i + 1 == baseline {
            baseline_work - per_block * baseline
        } else {
            0
        };
        push(ts, per_block + extra, 3);
    }
    for k in 1..=HEAVY_BLOCKS {
        push(start.plus_secs(5 * k), LIVE_DIFFICULTY, 3);
    }
    let miners = miner_sequence(&exp.currency_symbol, &EXP_MINERS);
    for (b, m) in exp_blocks.iter_mut().zip(miners) {
        b.miner = m;
    }
    blocks.extend(exp_blocks);
    blocks.sort_by(|a, b| (a.timestamp, &a.chain, a.height).cmp(&(b.timestamp, &b.chain, b.height)));

    let quotes = vec![
        QuoteRecord {
            timestamp: start.minus_secs(60),
            symbol: "ETC".into(),
            usd: dec("10.66"),
        },
        QuoteRecord {
            timestamp: start.minus_secs(60),
            symbol: "EXP".into(),
            usd: dec("0.36"),
        },
    ];
    Fixture {
        name: "hash-rate-drop",
        start,
        active: Some(id),
        chains: vec![etc.descriptor, exp],
        blocks,
        quotes,
        policy: HASH_RATE_WATCH,
        policy_updates: Vec::new(),
    }
}

/// Every built-in fixture by name.
pub fn all() -> Vec<Fixture> {
    vec![baseline_selection(), cost_focus(), relaxed_latency(), hash_rate_drop()]
}

pub fn by_name(name: &str) -> Option<Fixture> {
    all().into_iter().find(|f| f.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn miner_sequence_keeps_counts() {
        let seq = miner_sequence("ETH", &[3, 1]);
        assert_eq!(seq.len(), 4);
        assert_eq!(seq.iter().filter(|m| *m == "eth-pool-1").count(), 3);
    }

    #[test]
    fn policies_are_valid() {
        for (name, p) in policies() {
            p.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(RankingPolicy::from_json(&p.to_json_pretty()).unwrap(), p);
        }
    }

    #[test]
    fn day_blocks_end_at_the_start() {
        let f = baseline_selection();
        assert_eq!(f.blocks.last().unwrap().timestamp, f.start);
        assert_eq!(f.blocks.len(), 160 + 6600 + 6500 + 2000);
    }

    #[test]
    fn hash_rate_drop_starts_at_200_ghs() {
        let f = hash_rate_drop();
        let work: u128 = f
            .blocks
            .iter()
            .filter(|b| b.chain.as_str() == "expanse" && b.timestamp <= f.start)
            .map(|b| u128::from(b.difficulty))
            .sum();
        assert_eq!(work, u128::from(START_WORK));
    }
}
