//! Hosting an instance: the engine actor task, snapshot publication and the
//! HTTP server.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use arc_swap::ArcSwap;
use rust_decimal::Decimal;
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, oneshot};
use tokio::task::JoinHandle;

use super::config::{ClockMode, InstanceConfig};
use super::engine::{Engine, EngineError, EventSummary, Snapshot, WriteReceipt};
use super::instance::{BuildOptions, Instance};
use super::journal::Journal;
use super::{api, GatewayError};
use crate::chain::{ChainId, DataRecord};
use crate::selection::RankingPolicy;
use crate::switchover::{SuggestionId, SwitchoverSuggestion};
use crate::time::DateRange;

type Reply<T> = oneshot::Sender<Result<T, EngineError>>;

/// Requests the API hands to the engine actor.
#[derive(Debug)]
pub enum Command {
    Approve(SuggestionId, Reply<SwitchoverSuggestion>),
    Reject(SuggestionId, Reply<SwitchoverSuggestion>),
    UpdatePolicy(Box<RankingPolicy>, Reply<()>),
    WriteRecord {
        payload: Vec<u8>,
        fee: Option<Decimal>,
        reply: Reply<WriteReceipt>,
    },
    ReadRecords {
        range: DateRange,
        chain: Option<ChainId>,
        reply: Reply<Vec<DataRecord>>,
    },
}

/// Shared access to a running engine: lock-free snapshot reads, queued
/// mutations, and the event feed.
#[derive(Clone)]
pub struct EngineHandle {
    snapshot: Arc<ArcSwap<Snapshot>>,
    commands: mpsc::Sender<Command>,
    events: broadcast::Sender<EventSummary>,
}

impl EngineHandle {
    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.load_full()
    }

    pub fn subscribe(&self) -> broadcast::Receiver<EventSummary> {
        self.events.subscribe()
    }

    async fn call<T>(&self, command: impl FnOnce(Reply<T>) -> Command) -> Result<T, EngineError> {
        let (tx, rx) = oneshot::channel();
        self.commands
            .send(command(tx))
            .await
            .map_err(|_| EngineError::Stopped)?;
        rx.await.map_err(|_| EngineError::Stopped)?
    }

    pub async fn approve(&self, id: SuggestionId) -> Result<SwitchoverSuggestion, EngineError> {
        self.call(|r| Command::Approve(id, r)).await
    }

    pub async fn reject(&self, id: SuggestionId) -> Result<SwitchoverSuggestion, EngineError> {
        self.call(|r| Command::Reject(id, r)).await
    }

    pub async fn update_policy(&self, policy: RankingPolicy) -> Result<(), EngineError> {
        self.call(|r| Command::UpdatePolicy(Box::new(policy), r)).await
    }

    pub async fn write_record(&self, payload: Vec<u8>, fee: Option<Decimal>) -> Result<WriteReceipt, EngineError> {
        self.call(|reply| Command::WriteRecord { payload, fee, reply }).await
    }

    pub async fn read_records(&self, range: DateRange, chain: Option<ChainId>) -> Result<Vec<DataRecord>, EngineError> {
        self.call(|reply| Command::ReadRecords { range, chain, reply }).await
    }
}

fn run_command(engine: &mut Engine, now_ms: i64, command: Command) {
    match command {
        Command::Approve(id, reply) => {
            let _ = reply.send(engine.approve(now_ms, id));
        }
        Command::Reject(id, reply) => {
            let _ = reply.send(engine.reject(now_ms, id));
        }
        Command::UpdatePolicy(policy, reply) => {
            let _ = reply.send(engine.update_policy(now_ms, *policy));
        }
        Command::WriteRecord { payload, fee, reply } => {
            let _ = reply.send(engine.write_record(now_ms, payload, fee));
        }
        Command::ReadRecords { range, chain, reply } => {
            let _ = reply.send(engine.read_records(range, chain.as_ref()));
        }
    }
}

struct Publisher {
    snapshot: Arc<ArcSwap<Snapshot>>,
    events: broadcast::Sender<EventSummary>,
}

impl Publisher {
    fn publish(&self, engine: &mut Engine) {
        for e in engine.drain_events() {
            let _ = self.events.send(e);
        }
        self.snapshot.store(Arc::new(engine.snapshot()));
    }
}

/// How many virtual-time events run between yields to the runtime.
const VIRTUAL_BATCH: usize = 256;

async fn drive(mut instance: Instance, mut commands: mpsc::Receiver<Command>, publisher: Publisher) -> Engine {
    instance.engine.set_collect_events(true);
    instance.warm_up();
    publisher.publish(&mut instance.engine);
    let wall_start = tokio::time::Instant::now();
    let start_ms = instance.start_ms;
    let speed = instance.speed;
    let wall_now_ms = || start_ms + (wall_start.elapsed().as_millis() as f64 * speed) as i64;
    let mut batch = 0;
    loop {
        match instance.mode {
            ClockMode::Virtual => {
                while let Ok(cmd) = commands.try_recv() {
                    let now = instance.engine.now_ms();
                    run_command(&mut instance.engine, now, cmd);
                    publisher.publish(&mut instance.engine);
                }
                if instance.step_next(None) {
                    publisher.publish(&mut instance.engine);
                    batch += 1;
                    if batch % VIRTUAL_BATCH == 0 {
                        tokio::task::yield_now().await;
                    }
                    continue;
                }
                instance.engine.set_mine_on_write(true);
                let Some(cmd) = commands.recv().await else {
                    break;
                };
                let now = instance.engine.now_ms();
                run_command(&mut instance.engine, now, cmd);
                publisher.publish(&mut instance.engine);
            }
            ClockMode::RealTime => {
                let due = instance.schedule.peek_time().map(|t| {
                    let wait = ((t - start_ms).max(0) as f64 / speed) as u64;
                    wall_start + Duration::from_millis(wait)
                });
                tokio::select! {
                    cmd = commands.recv() => match cmd {
                        Some(cmd) => run_command(&mut instance.engine, wall_now_ms(), cmd),
                        None => break,
                    },
                    _ = tokio::time::sleep_until(due.unwrap_or(wall_start)), if due.is_some() => {
                        instance.step_next(Some(wall_now_ms()));
                    }
                }
                publisher.publish(&mut instance.engine);
            }
        }
    }
    instance.engine
}

/// Starts the engine actor for `instance` and returns a handle to it.
pub fn spawn(instance: Instance) -> (EngineHandle, JoinHandle<Engine>) {
    let snapshot = Arc::new(ArcSwap::from_pointee(instance.engine.snapshot()));
    let (tx, rx) = mpsc::channel(64);
    let (events, _) = broadcast::channel(1024);
    let handle = EngineHandle {
        snapshot: snapshot.clone(),
        commands: tx,
        events: events.clone(),
    };
    let task = tokio::spawn(drive(instance, rx, Publisher { snapshot, events }));
    (handle, task)
}

/// A running engine with its HTTP API.
pub struct Daemon {
    pub addr: SocketAddr,
    pub handle: EngineHandle,
    shutdown: oneshot::Sender<()>,
    server: JoinHandle<std::io::Result<()>>,
    engine: JoinHandle<Engine>,
}

impl Daemon {
    pub async fn start(instance: Instance, listener: TcpListener) -> std::io::Result<Daemon> {
        let addr = listener.local_addr()?;
        let (handle, engine) = spawn(instance);
        let (shutdown, stop) = oneshot::channel::<()>();
        let app = api::router(handle.clone());
        let server = tokio::spawn(async move {
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = stop.await;
                })
                .await
        });
        Ok(Daemon {
            addr,
            handle,
            shutdown,
            server,
            engine,
        })
    }

    /// Stops the server and returns the engine once it drained its queue.
    pub async fn stop(self) -> Engine {
        let _ = self.shutdown.send(());
        let mut server = self.server;
        match tokio::time::timeout(Duration::from_secs(2), &mut server).await {
            Ok(Ok(Err(e))) => tracing::error!("API server: {e}"),
            Ok(_) => {}
            Err(_) => server.abort(),
        }
        drop(self.handle);
        self.engine.await.expect("engine task panicked")
    }
}

/// Runs `config` with its HTTP API until interrupted.
pub async fn run(config: &InstanceConfig, journal: Journal) -> Result<(), GatewayError> {
    let instance = Instance::build(config, &BuildOptions::default(), journal)?;
    let listener = TcpListener::bind(&config.api.bind)
        .await
        .map_err(|e| GatewayError::Invalid(format!("cannot bind {}: {e}", config.api.bind)))?;
    let daemon = Daemon::start(instance, listener)
        .await
        .map_err(|e| GatewayError::Invalid(format!("cannot start the API: {e}")))?;
    tracing::info!("API listening on http://{}", daemon.addr);
    let _ = tokio::signal::ctrl_c().await;
    daemon.stop().await;
    Ok(())
}
