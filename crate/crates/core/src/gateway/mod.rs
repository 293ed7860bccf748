//! The long-running side: an event-driven engine that keeps the metric
//! vectors and ranking current, drives switchovers, and serves the HTTP API.

pub mod api;
pub mod config;
pub mod daemon;
pub mod engine;
pub mod instance;
pub mod journal;
pub mod schedule;

use thiserror::Error;

use crate::proxy::trace::TraceError;
use crate::proxy::SimConfigError;
use crate::selection::PolicyError;

pub use config::{ClockMode, InstanceConfig};
pub use daemon::{Daemon, EngineHandle};
pub use engine::{ChainEvent, Decision, Engine, EngineError, EventSummary, Snapshot, WriteReceipt};
pub use instance::{replay, BuildOptions, Instance};
pub use journal::Journal;
pub use schedule::Schedule;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Sim(#[from] SimConfigError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("{0}")]
    Invalid(String),
}
