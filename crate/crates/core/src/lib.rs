pub mod chain;
pub mod cli;
pub mod gateway;
pub mod metrics;
pub mod num;
pub mod proxy;
pub mod report;
pub mod scenario;
pub mod selection;
pub mod switchover;
pub mod time;
