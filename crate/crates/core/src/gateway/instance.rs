//! Wiring a configuration into an engine and its event schedule.

use std::path::PathBuf;

use super::config::{ClockMode, InstanceConfig, ProxyKind, QuoteSource};
use super::engine::{ChainEvent, Engine};
use super::journal::Journal;
use super::schedule::Schedule;
use super::GatewayError;
use crate::num::decimal_from_f64;
use crate::proxy::trace::{read_block_trace, read_quote_trace};
use crate::proxy::{QuoteBook, SimChain, SimProxy};
use crate::selection::RankingPolicy;
use crate::switchover::HistoryLog;
use crate::time::{Timestamp, DAY_SECS};

/// Overrides applied on top of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    /// Block trace used instead of the configured one.
    pub trace: Option<PathBuf>,
    pub until: Option<Timestamp>,
    /// History log used instead of the configured one.
    pub history: Option<PathBuf>,
    /// Start the history log empty instead of appending.
    pub fresh_history: bool,
    /// Run in virtual time whatever the configured clock mode.
    pub force_virtual: bool,
}

/// A configured engine together with the events it will consume.
#[derive(Debug)]
pub struct Instance {
    pub engine: Engine,
    pub schedule: Schedule,
    pub start_ms: i64,
    pub mode: ClockMode,
    /// Virtual seconds per wall second in realtime mode.
    pub speed: f64,
}

impl Instance {
    pub fn build(config: &InstanceConfig, opts: &BuildOptions, journal: Journal) -> Result<Self, GatewayError> {
        let policy = config.initial_policy()?;
        let mut quotes = QuoteBook::new(config.quotes.staleness_s);
        let mut events: Vec<(i64, ChainEvent)> = Vec::new();

        match config.quotes.source {
            QuoteSource::Static => {
                for (symbol, usd) in &config.quotes.prices {
                    let usd = decimal_from_f64(*usd)
                        .filter(|d| !d.is_sign_negative())
                        .ok_or_else(|| {
                            GatewayError::Invalid(format!("price of {symbol} must be a non-negative number"))
                        })?;
                    quotes.pin(symbol, usd);
                }
            }
            QuoteSource::Trace => {
                let path = config.resolve(config.quotes.trace.as_deref().expect("checked on load"));
                for q in read_quote_trace(&path)? {
                    events.push((
                        q.timestamp.secs() * 1000,
                        ChainEvent::QuoteUpdate {
                            symbol: q.symbol,
                            usd: q.usd,
                        },
                    ));
                }
            }
        }

        let trace = opts
            .trace
            .clone()
            .or_else(|| config.trace.as_ref().map(|t| config.resolve(t)));
        if let Some(path) = trace {
            for block in read_block_trace(&path)? {
                match config.chain(&block.chain).map(|c| c.proxy) {
                    Some(ProxyKind::Trace) => {}
                    Some(ProxyKind::Sim) => {
                        return Err(GatewayError::Invalid(format!(
                            "{}: block for simulated chain {}",
                            path.display(),
                            block.chain
                        )))
                    }
                    None => {
                        return Err(GatewayError::Invalid(format!(
                            "{}: block for unknown chain {}",
                            path.display(),
                            block.chain
                        )))
                    }
                }
                events.push((block.timestamp.secs() * 1000, ChainEvent::NewBlock(block)));
            }
        }

        for update in &config.policy_updates {
            let policy = RankingPolicy::load(&config.resolve(&update.file))?;
            events.push((update.at.secs() * 1000, ChainEvent::PolicyUpdate(Box::new(policy))));
        }

        let mode = if opts.force_virtual {
            ClockMode::Virtual
        } else {
            config.clock.mode
        };
        let last_event_ms = events.iter().map(|(t, _)| *t).max();
        let start = match (config.clock.start, mode) {
            (Some(s), _) => s,
            (None, ClockMode::Virtual) => Timestamp::from_millis(last_event_ms.unwrap_or(DAY_SECS * 1000)),
            (None, ClockMode::RealTime) => Timestamp::now(),
        };
        let start_ms = start.secs() * 1000;
        let until = opts.until.or(config.clock.until);
        let end_ms = match (until, mode) {
            (Some(u), _) => Some(u.secs() * 1000),
            (None, ClockMode::Virtual) => Some(last_event_ms.unwrap_or(start_ms).max(start_ms)),
            (None, ClockMode::RealTime) => None,
        };

        let history = match opts
            .history
            .clone()
            .or_else(|| config.history_log.as_ref().map(|h| config.resolve(h)))
        {
            Some(path) if opts.fresh_history => HistoryLog::create(&path),
            Some(path) => HistoryLog::open(&path),
            None => Ok(HistoryLog::in_memory()),
        }
        .map_err(|e| GatewayError::Invalid(format!("history log: {e}")))?;

        let mut engine = Engine::new(policy, quotes, history, journal);
        let mut sims = Vec::new();
        for chain in &config.chains {
            let descriptor = chain.descriptor();
            let mut proxy = SimProxy::new(descriptor.clone());
            if let Some(limit) = chain.block_gas_limit {
                proxy = proxy.with_block_gas_limit(limit);
            }
            engine.add_chain(descriptor, Box::new(proxy), chain.fee)?;
            if let Some(sim) = chain.sim_config() {
                sims.push(SimChain::new(chain.id.clone(), sim, start.minus_secs(DAY_SECS), 0)?);
            }
        }
        engine.set_active(config.active.clone())?;

        Ok(Instance {
            engine,
            schedule: Schedule::new(events, sims, start_ms, config.clock.tick_s, end_ms),
            start_ms,
            mode,
            speed: config.clock.speed,
        })
    }

    fn step(&mut self, at_ms: i64, event: ChainEvent) {
        if let Err(e) = self.engine.handle(at_ms, event) {
            tracing::warn!("event skipped: {e}");
        }
    }

    /// Applies every event up to the start instant, then starts the engine.
    pub fn warm_up(&mut self) {
        while self.schedule.peek_time().is_some_and(|t| t <= self.start_ms) {
            let (t, event) = self.schedule.pop().expect("peeked");
            self.step(t, event);
        }
        self.engine.start(self.start_ms);
    }

    /// Applies the next scheduled event at `at_ms` (or its own time, if later).
    pub fn step_next(&mut self, at_ms: Option<i64>) -> bool {
        match self.schedule.pop() {
            Some((t, event)) => {
                self.step(at_ms.map_or(t, |a| a.max(t)), event);
                true
            }
            None => false,
        }
    }

    /// Runs the remaining schedule in virtual time.
    pub fn run_to_end(&mut self) {
        while self.step_next(None) {}
    }
}

/// Replays a configuration in virtual time and returns the final engine.
pub fn replay(config: &InstanceConfig, opts: &BuildOptions, journal: Journal) -> Result<Engine, GatewayError> {
    let opts = BuildOptions {
        force_virtual: true,
        ..opts.clone()
    };
    let mut instance = Instance::build(config, &opts, journal)?;
    instance.warm_up();
    instance.run_to_end();
    Ok(instance.engine)
}
