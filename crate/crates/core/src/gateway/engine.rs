//! The serialized pipeline: window update, metric recomputation, ranking,
//! suggestion and, in auto mode, execution.

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::journal::Journal;
use crate::chain::{BlockHeader, ChainDescriptor, ChainError, ChainId, DataRecord, RecordId, RollingWindow};
use crate::metrics::{compute_vector, Metric, MetricVector};
use crate::proxy::quote::QuoteStatus;
use crate::proxy::{BlockchainProxy, ProxyError, QuoteBook};
use crate::selection::{rank, PolicyError, RankingPolicy, RankingResult, ValidationResult};
use crate::switchover::{
    execute_transfer, HistoryLog, SuggestOutcome, SuggestionId, SuggestionState, SwitchoverError, SwitchoverManager,
    SwitchoverSuggestion,
};
use crate::time::{DateRange, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Approve,
    Reject,
}

/// Input to the pipeline. Events are applied strictly in arrival order.
#[derive(Debug, Clone)]
pub enum ChainEvent {
    NewBlock(BlockHeader),
    QuoteUpdate {
        symbol: String,
        usd: Decimal,
    },
    Tick,
    PolicyUpdate(Box<RankingPolicy>),
    Approval {
        suggestion: SuggestionId,
        decision: Decision,
    },
}

impl ChainEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            ChainEvent::NewBlock(_) => "new-block",
            ChainEvent::QuoteUpdate { .. } => "quote-update",
            ChainEvent::Tick => "tick",
            ChainEvent::PolicyUpdate(_) => "policy-update",
            ChainEvent::Approval { .. } => "approval",
        }
    }
}

/// What the event stream reports to observers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventSummary {
    pub seq: u64,
    pub at: Timestamp,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainId>,
    pub detail: String,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("no active chain")]
    NoActiveChain,
    #[error("payload must not be empty")]
    InvalidPayload,
    #[error("unknown chain {0}")]
    UnknownChain(ChainId),
    #[error("chain {0} is registered twice")]
    DuplicateChain(ChainId),
    #[error("the engine has stopped")]
    Stopped,
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Proxy(#[from] ProxyError),
    #[error(transparent)]
    Switchover(#[from] SwitchoverError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStatus {
    #[serde(flatten)]
    pub descriptor: ChainDescriptor,
    pub stale: bool,
    /// Regular blocks in the 24h window.
    pub block_count: usize,
    pub active: bool,
    pub pending_records: usize,
}

/// Everything the API serves, published after every event.
#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub now: Timestamp,
    pub seq: u64,
    pub active: Option<ChainId>,
    pub chains: Vec<ChainStatus>,
    pub metrics: Vec<MetricVector>,
    pub ranking: Option<RankingResult>,
    pub suggestions: Vec<SwitchoverSuggestion>,
    pub policy: RankingPolicy,
    pub policy_version: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriteReceipt {
    pub record_id: RecordId,
    pub chain: ChainId,
    pub carriers: usize,
    /// Bytes (bitcoin-like) or gas (ethereum-like) of all carriers.
    pub weight: u64,
}

struct Slot {
    descriptor: ChainDescriptor,
    window: RollingWindow,
    proxy: Box<dyn BlockchainProxy>,
    user_fee: Option<Decimal>,
    vector: MetricVector,
    quote_seen: Option<(Decimal, bool)>,
    last_event: u64,
    logged_hashrate: Option<String>,
}

fn hashrate_text(hps: f64) -> String {
    format!("{:.1} GH/s", hps / 1e9)
}

fn describe(metric: Metric, v: &MetricVector) -> String {
    match metric {
        Metric::M1 => format!("Write cost ({} USD/KB)", v.m1_write_cost_usd_per_kb),
        Metric::M2 => format!("Read cost ({} USD/KB)", v.m2_read_cost_usd_per_kb),
        Metric::M3 => format!("Exchange rate ({} USD)", v.m3_exchange_rate_usd),
        Metric::M4 => format!("Inter-block time ({:.1} s)", v.m4_interblock_s),
        Metric::M5 => format!("Throughput ({:.2} tx/s)", v.m5_tx_per_s),
        Metric::M6 => format!("Largest miner share ({:.1} %)", v.largest_miner_share()),
        Metric::M7 => format!("Hash rate ({})", hashrate_text(v.m7_network_hashrate_hps)),
        Metric::M8 => format!("Reputation ({})", v.m8_reputation),
    }
}

fn pair_mut<T>(items: &mut [T], a: usize, b: usize) -> (&mut T, &mut T) {
    assert_ne!(a, b);
    if a < b {
        let (lo, hi) = items.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = items.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}

/// The selection and switchover actor. One instance owns every proxy and
/// window; callers feed it events in order.
///
/// Events before [`Engine::start`] only fill windows and quote books. The
/// first ranking, the initial chain selection and all logging happen at start.
pub struct Engine {
    slots: Vec<Slot>,
    quotes: QuoteBook,
    policy: RankingPolicy,
    policy_version: u64,
    active: Option<ChainId>,
    active_validation: Option<ValidationResult>,
    switchover: SwitchoverManager,
    history: HistoryLog,
    journal: Journal,
    ranking: Option<RankingResult>,
    now_ms: i64,
    seq: u64,
    live: bool,
    mine_on_write: bool,
    collect_events: bool,
    outbox: Vec<EventSummary>,
}

impl Engine {
    pub fn new(policy: RankingPolicy, quotes: QuoteBook, history: HistoryLog, journal: Journal) -> Self {
        Engine {
            slots: Vec::new(),
            quotes,
            policy,
            policy_version: 1,
            active: None,
            active_validation: None,
            switchover: SwitchoverManager::new(),
            history,
            journal,
            ranking: None,
            now_ms: 0,
            seq: 0,
            live: false,
            mine_on_write: false,
            collect_events: false,
            outbox: Vec::new(),
        }
    }

    /// Registers a chain. Registration order is the column order of reports.
    pub fn add_chain(
        &mut self,
        descriptor: ChainDescriptor,
        proxy: Box<dyn BlockchainProxy>,
        user_fee: Option<Decimal>,
    ) -> Result<(), EngineError> {
        descriptor.validate()?;
        if self.index(&descriptor.id).is_some() {
            return Err(EngineError::DuplicateChain(descriptor.id));
        }
        if proxy.descriptor().id != descriptor.id {
            return Err(EngineError::UnknownChain(proxy.descriptor().id.clone()));
        }
        let window = RollingWindow::new(descriptor.id.clone());
        let vector = compute_vector(&window, &descriptor, None, true, user_fee, Timestamp::EPOCH);
        self.slots.push(Slot {
            descriptor,
            window,
            proxy,
            user_fee,
            vector,
            quote_seen: None,
            last_event: 0,
            logged_hashrate: None,
        });
        Ok(())
    }

    /// Sets the chain in use before start.
    pub fn set_active(&mut self, chain: Option<ChainId>) -> Result<(), EngineError> {
        if let Some(c) = &chain {
            self.slot_index(c)?;
        }
        self.active = chain;
        Ok(())
    }

    /// Records written while no block is expected are mined immediately.
    pub fn set_mine_on_write(&mut self, on: bool) {
        self.mine_on_write = on;
    }

    /// Keeps event summaries for [`Engine::drain_events`].
    pub fn set_collect_events(&mut self, on: bool) {
        self.collect_events = on;
    }

    pub fn is_live(&self) -> bool {
        self.live
    }

    pub fn now(&self) -> Timestamp {
        Timestamp::from_millis(self.now_ms)
    }

    pub fn now_ms(&self) -> i64 {
        self.now_ms
    }

    pub fn active(&self) -> Option<&ChainId> {
        self.active.as_ref()
    }

    pub fn policy(&self) -> &RankingPolicy {
        &self.policy
    }

    pub fn ranking(&self) -> Option<&RankingResult> {
        self.ranking.as_ref()
    }

    pub fn vectors(&self) -> Vec<MetricVector> {
        self.slots.iter().map(|s| s.vector.clone()).collect()
    }

    pub fn vector(&self, chain: &ChainId) -> Option<&MetricVector> {
        self.index(chain).map(|i| &self.slots[i].vector)
    }

    pub fn descriptors(&self) -> Vec<ChainDescriptor> {
        self.slots.iter().map(|s| s.descriptor.clone()).collect()
    }

    pub fn suggestions(&self, state: Option<SuggestionState>) -> Vec<SwitchoverSuggestion> {
        self.switchover.list(state)
    }

    pub fn suggestion(&self, id: SuggestionId) -> Option<&SwitchoverSuggestion> {
        self.switchover.get(id)
    }

    pub fn journal(&self) -> &Journal {
        &self.journal
    }

    pub fn history(&self) -> &HistoryLog {
        &self.history
    }

    pub fn proxy(&self, chain: &ChainId) -> Option<&dyn BlockchainProxy> {
        self.index(chain).map(|i| self.slots[i].proxy.as_ref())
    }

    pub fn drain_events(&mut self) -> Vec<EventSummary> {
        std::mem::take(&mut self.outbox)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            now: self.now(),
            seq: self.seq,
            active: self.active.clone(),
            chains: self
                .slots
                .iter()
                .map(|s| ChainStatus {
                    descriptor: s.descriptor.clone(),
                    stale: s.vector.stale,
                    block_count: s.vector.block_count,
                    active: self.active.as_ref() == Some(&s.descriptor.id),
                    pending_records: s.proxy.pending_count(),
                })
                .collect(),
            metrics: self.vectors(),
            ranking: self.ranking.clone(),
            suggestions: self.switchover.list(None),
            policy: self.policy.clone(),
            policy_version: self.policy_version,
        }
    }

    fn index(&self, chain: &ChainId) -> Option<usize> {
        self.slots.iter().position(|s| &s.descriptor.id == chain)
    }

    fn slot_index(&self, chain: &ChainId) -> Result<usize, EngineError> {
        self.index(chain)
            .ok_or_else(|| EngineError::UnknownChain(chain.clone()))
    }

    fn name(&self, chain: &ChainId) -> String {
        self.index(chain)
            .map_or_else(|| chain.to_string(), |i| self.slots[i].descriptor.name.clone())
    }

    fn advance(&mut self, at_ms: i64) {
        self.now_ms = self.now_ms.max(at_ms);
        self.seq += 1;
    }

    fn emit(&mut self, kind: &str, chain: Option<ChainId>, detail: String) {
        if self.collect_events {
            self.outbox.push(EventSummary {
                seq: self.seq,
                at: self.now(),
                kind: kind.to_string(),
                chain,
                detail,
            });
        }
    }

    fn log(&mut self, message: String) {
        self.journal.log(self.now_ms, &message);
        self.emit("log", None, message);
    }

    /// Applies one event. Before start, events only fill state.
    pub fn handle(&mut self, at_ms: i64, event: ChainEvent) -> Result<(), EngineError> {
        if let ChainEvent::Approval { suggestion, decision } = event {
            return match decision {
                Decision::Approve => self.approve(at_ms, suggestion).map(drop),
                Decision::Reject => self.reject(at_ms, suggestion).map(drop),
            };
        }
        self.advance(at_ms);
        let kind = event.kind();
        let (chain, detail) = self.apply(event)?;
        self.emit(kind, chain, detail);
        if self.live {
            self.evaluate();
        }
        Ok(())
    }

    /// Evicts every window to the current time and applies the event's state
    /// change. Returns the chain concerned and a one-line description.
    fn apply(&mut self, event: ChainEvent) -> Result<(Option<ChainId>, String), EngineError> {
        let now = self.now();
        for slot in &mut self.slots {
            if slot.window.evict(now) > 0 {
                slot.last_event = self.seq;
            }
        }
        Ok(match event {
            ChainEvent::NewBlock(block) => {
                let i = self.slot_index(&block.chain)?;
                let slot = &mut self.slots[i];
                slot.descriptor.admit(&block)?;
                let detail = format!(
                    "height {}{}",
                    block.height,
                    if block.is_uncle { " (uncle)" } else { "" }
                );
                let chain = block.chain.clone();
                let inserted = slot.window.insert(block.clone())?;
                if inserted {
                    slot.proxy.on_block(&block);
                    slot.last_event = self.seq;
                }
                (Some(chain), detail)
            }
            ChainEvent::QuoteUpdate { symbol, usd } => {
                self.quotes.update(&symbol, usd, now);
                (None, format!("{symbol} {usd} USD"))
            }
            ChainEvent::Tick => (None, String::new()),
            ChainEvent::PolicyUpdate(policy) => {
                policy.validate()?;
                self.policy = *policy;
                self.policy_version += 1;
                if self.live {
                    self.log("Ranking policy updated".to_string());
                }
                (None, format!("version {}", self.policy_version))
            }
            ChainEvent::Approval { .. } => unreachable!("handled before apply"),
        })
    }

    fn quote_for(&self, slot: &Slot, now: Timestamp) -> Option<(Decimal, bool)> {
        match self.quotes.status(&slot.descriptor.currency_symbol, now) {
            QuoteStatus::Fresh(q) => Some((q.usd, false)),
            QuoteStatus::Stale(q) => Some((q.usd, true)),
            QuoteStatus::Missing => None,
        }
    }

    /// Recomputes the vectors whose inputs changed since they were built.
    fn refresh(&mut self, force: bool) {
        let now = self.now();
        for i in 0..self.slots.len() {
            let quote = self.quote_for(&self.slots[i], now);
            let slot = &mut self.slots[i];
            if quote != slot.quote_seen {
                slot.quote_seen = quote;
                slot.last_event = self.seq;
            }
            if force || slot.vector.seq < slot.last_event {
                let (usd, stale) = match quote {
                    Some((usd, stale)) => (Some(usd), stale),
                    None => (None, true),
                };
                let mut v = compute_vector(&slot.window, &slot.descriptor, usd, stale, slot.user_fee, now);
                v.seq = self.seq;
                slot.vector = v;
            }
        }
    }

    fn rerank(&mut self) {
        debug_assert!(self.slots.iter().all(|s| s.vector.seq >= s.last_event));
        let vectors = self.vectors();
        let ranking = rank(&self.policy, &vectors, self.active.as_ref(), self.now());
        let detail = match &ranking.winner {
            Some(w) => format!("winner {w}"),
            None => "no eligible chain".to_string(),
        };
        self.ranking = Some(ranking);
        self.emit("ranking", None, detail);
    }

    /// Ends the warm-up phase: computes metrics, ranks, and selects the
    /// initial chain when none is configured.
    pub fn start(&mut self, at_ms: i64) {
        self.advance(at_ms);
        let now = self.now();
        for slot in &mut self.slots {
            slot.window.evict(now);
        }
        self.refresh(true);
        for slot in &mut self.slots {
            slot.logged_hashrate = Some(hashrate_text(slot.vector.m7_network_hashrate_hps));
        }
        self.live = true;
        self.rerank();
        if let Some(active) = self.active.clone() {
            self.log(format!("Active blockchain: {}", self.name(&active)));
        }
        self.active_validation = Some(ValidationResult::ALL_TRUE);
        self.after_ranking();
    }

    fn evaluate(&mut self) {
        self.refresh(false);
        self.log_hashrate();
        self.rerank();
        self.after_ranking();
    }

    fn log_hashrate(&mut self) {
        let Some(i) = self.active.as_ref().and_then(|a| self.index(a)) else {
            return;
        };
        let text = hashrate_text(self.slots[i].vector.m7_network_hashrate_hps);
        if self.slots[i].logged_hashrate.as_deref() != Some(text.as_str()) {
            self.slots[i].logged_hashrate = Some(text.clone());
            let name = self.slots[i].descriptor.name.clone();
            self.log(format!("{name} network hash rate: {text}"));
        }
    }

    fn after_ranking(&mut self) {
        let Some(ranking) = self.ranking.clone() else {
            return;
        };
        let Some(active) = self.active.clone() else {
            if let Some(winner) = ranking.winner.clone() {
                self.switch_active(winner.clone());
                self.log(format!("Active blockchain: {}", self.name(&winner)));
            }
            return;
        };
        if let Some(row) = ranking.get(&active) {
            let now_valid = row.validation;
            let before = self.active_validation.unwrap_or(ValidationResult::ALL_TRUE);
            let i = self.index(&active).expect("active chain is registered");
            let mut flipped = false;
            for m in Metric::ALL {
                if before.metric(m) && !now_valid.metric(m) {
                    flipped = true;
                    let text = describe(m, &self.slots[i].vector);
                    self.log(format!("{text} violated"));
                }
            }
            if before.overall && !now_valid.overall && !flipped {
                self.log(format!("{} failed validation", self.name(&active)));
            }
            self.active_validation = Some(now_valid);
        }
        let now = self.now();
        let outcome = self.switchover.suggest(now, &ranking, &active, &self.policy);
        match outcome {
            SuggestOutcome::Suggested(id) => {
                let to = self.switchover.get(id).expect("new suggestion").to.clone();
                self.log(format!("Switchover suggestion: {}", self.name(&to)));
                self.flush_history();
                if self.switchover.get(id).map(|s| s.state) == Some(SuggestionState::Approved) {
                    if let Err(e) = self.execute(id) {
                        tracing::error!("switchover {id} could not run: {e}");
                    }
                }
            }
            SuggestOutcome::Suppressed { id, new: true } => {
                let to = self.switchover.get(id).expect("suppressed suggestion").to.clone();
                self.log(format!("Switchover suggestion suppressed: {}", self.name(&to)));
            }
            _ => {}
        }
        self.flush_history();
    }

    fn flush_history(&mut self) {
        for entry in self.switchover.drain_history() {
            let detail = format!("#{} {} -> {}: {}", entry.suggestion, entry.from, entry.to, entry.state);
            self.emit("suggestion", Some(entry.to.clone()), detail);
            if let Err(e) = self.history.append(entry) {
                tracing::error!("cannot append to the history log: {e}");
            }
        }
    }

    fn switch_active(&mut self, chain: ChainId) {
        if let Some(i) = self.index(&chain) {
            let v = &self.slots[i].vector;
            self.slots[i].logged_hashrate = Some(hashrate_text(v.m7_network_hashrate_hps));
            self.active_validation = self.ranking.as_ref().and_then(|r| r.get(&chain)).map(|r| r.validation);
        }
        self.active = Some(chain);
    }

    /// Runs an approved (or failed) suggestion: switches the active chain,
    /// then copies the transfer range from the old chain to the new one.
    fn execute(&mut self, id: SuggestionId) -> Result<SwitchoverSuggestion, EngineError> {
        let now = self.now();
        let s = self.switchover.begin_execution(id, now)?.clone();
        let from = self.slot_index(&s.from)?;
        let to = self.slot_index(&s.to)?;
        self.switch_active(s.to.clone());
        self.log(format!("Switching to {}", self.name(&s.to)));
        let (src, dst) = pair_mut(&mut self.slots, from, to);
        let report = execute_transfer(s.transfer_range, src.proxy.as_ref(), dst.proxy.as_mut());
        if self.mine_on_write {
            dst.proxy.mine_pending(now);
        }
        let message = match &report.error {
            None => format!(
                "Switchover to {} executed ({} records copied, {} already present)",
                self.name(&s.to),
                report.records_copied,
                report.skipped_duplicates
            ),
            Some(e) => format!("Switchover to {} failed: {e}", self.name(&s.to)),
        };
        let done = self.switchover.finish_execution(id, now, report)?.clone();
        self.log(message);
        self.flush_history();
        Ok(done)
    }

    /// Approves a pending suggestion and runs it; a failed one is retried.
    pub fn approve(&mut self, at_ms: i64, id: SuggestionId) -> Result<SwitchoverSuggestion, EngineError> {
        self.advance(at_ms);
        self.emit("approval", None, format!("#{id} approve"));
        let state = self
            .switchover
            .get(id)
            .ok_or(SwitchoverError::UnknownSuggestion(id))?
            .state;
        if state != SuggestionState::Failed {
            self.switchover.approve(id, self.now())?;
            self.flush_history();
        }
        self.execute(id)
    }

    pub fn reject(&mut self, at_ms: i64, id: SuggestionId) -> Result<SwitchoverSuggestion, EngineError> {
        self.advance(at_ms);
        self.emit("approval", None, format!("#{id} reject"));
        let s = self.switchover.reject(id, self.now())?.clone();
        self.flush_history();
        Ok(s)
    }

    /// Replaces the ranking policy and re-ranks.
    pub fn update_policy(&mut self, at_ms: i64, policy: RankingPolicy) -> Result<(), EngineError> {
        policy.validate()?;
        self.handle(at_ms, ChainEvent::PolicyUpdate(Box::new(policy)))
    }

    /// Stores a record on the active chain.
    pub fn write_record(
        &mut self,
        at_ms: i64,
        payload: Vec<u8>,
        fee_rate: Option<Decimal>,
    ) -> Result<WriteReceipt, EngineError> {
        if payload.is_empty() {
            return Err(EngineError::InvalidPayload);
        }
        let active = self.active.clone().ok_or(EngineError::NoActiveChain)?;
        let i = self.slot_index(&active)?;
        self.advance(at_ms);
        let now = self.now();
        let record = DataRecord::new(payload, now, active.clone());
        let slot = &mut self.slots[i];
        let pending = slot.proxy.submit_record(&record, fee_rate)?;
        if self.mine_on_write {
            slot.proxy.mine_pending(now);
        }
        self.emit(
            "record",
            Some(active.clone()),
            format!("{} ({} carriers)", record.record_id, pending.carriers),
        );
        Ok(WriteReceipt {
            record_id: record.record_id,
            chain: active,
            carriers: pending.carriers,
            weight: pending.weight,
        })
    }

    /// Mined records in `range` from `chain`, or from the active chain.
    pub fn read_records(&self, range: DateRange, chain: Option<&ChainId>) -> Result<Vec<DataRecord>, EngineError> {
        let chain = match chain {
            Some(c) => c.clone(),
            None => self.active.clone().ok_or(EngineError::NoActiveChain)?,
        };
        let i = self.slot_index(&chain)?;
        Ok(self.slots[i].proxy.read_records(range)?)
    }
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("chains", &self.slots.len())
            .field("active", &self.active)
            .field("seq", &self.seq)
            .field("live", &self.live)
            .finish()
    }
}
