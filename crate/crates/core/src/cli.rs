//! The `chainsel` command line.
//!
//! ```text
//! chainsel run --config instance.toml
//! chainsel replay --config fixture.toml [--trace blocks.jsonl] [--until 2018-09-26T01:00:00Z] [--history out.jsonl]
//! chainsel rank [--api http://127.0.0.1:8547]
//! chainsel approve 3 [--api URL]
//! chainsel reject 3 [--api URL]
//! ```
//!
//! Exit codes: 0 on success, 1 on any runtime error (one `error: ...` line
//! on stderr), 2 on usage errors.

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use thiserror::Error;

use crate::gateway::api::ErrorBody;
use crate::gateway::config::ConfigError;
use crate::gateway::{daemon, replay, BuildOptions, GatewayError, InstanceConfig, Journal};
use crate::report;
use crate::selection::RankingResult;
use crate::switchover::{SuggestionId, SwitchoverSuggestion};
use crate::time::Timestamp;

pub const DEFAULT_API: &str = "http://127.0.0.1:8547";

#[derive(Debug, Parser)]
#[command(name = "chainsel", version, about = "Blockchain monitoring, ranking and switchover")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an instance with its HTTP API until interrupted.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Replay an instance in virtual time and print the final ranking.
    Replay {
        #[arg(long)]
        config: PathBuf,
        /// Block trace replacing the configured one.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Stop the replay at this instant.
        #[arg(long, value_parser = parse_timestamp)]
        until: Option<Timestamp>,
        /// History log replacing the configured one.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Print the latest ranking of a running instance.
    Rank {
        #[arg(long, env = "CHAINSEL_API", default_value = DEFAULT_API)]
        api: String,
    },
    /// Approve a pending switchover suggestion.
    Approve {
        id: SuggestionId,
        #[arg(long, env = "CHAINSEL_API", default_value = DEFAULT_API)]
        api: String,
    },
    /// Reject a pending switchover suggestion.
    Reject {
        id: SuggestionId,
        #[arg(long, env = "CHAINSEL_API", default_value = DEFAULT_API)]
        api: String,
    },
}

fn parse_timestamp(s: &str) -> Result<Timestamp, String> {
    Timestamp::parse(s).map_err(|e| e.to_string())
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("{0}")]
    Http(String),
    #[error("cannot start the runtime: {0}")]
    Runtime(#[source] std::io::Error),
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(CliError::Runtime)
}

async fn request<T: DeserializeOwned>(req: reqwest::RequestBuilder, what: &str) -> Result<T, CliError> {
    let resp = req.send().await.map_err(|e| CliError::Http(format!("{what}: {e}")))?;
    let status = resp.status();
    let body = resp.bytes().await.map_err(|e| CliError::Http(format!("{what}: {e}")))?;
    if !status.is_success() {
        let message = serde_json::from_slice::<ErrorBody>(&body)
            .map(|b| b.error)
            .unwrap_or_else(|_| String::from_utf8_lossy(&body).into_owned());
        return Err(CliError::Http(format!("{what}: {status}: {message}")));
    }
    serde_json::from_slice(&body).map_err(|e| CliError::Http(format!("{what}: unexpected response: {e}")))
}

fn endpoint(api: &str, path: &str) -> String {
    format!("{}{path}", api.trim_end_matches('/'))
}

fn decide(api: &str, id: SuggestionId, action: &str) -> Result<String, CliError> {
    let client = reqwest::Client::new();
    let url = endpoint(api, &format!("/v1/suggestions/{id}/{action}"));
    let s: SwitchoverSuggestion = runtime()?.block_on(request(client.post(url), action))?;
    Ok(format!("suggestion {}: {} -> {} {}\n", s.id, s.from, s.to, s.state))
}

/// Runs `command` and returns what it prints on stdout.
pub fn execute(command: Command) -> Result<String, CliError> {
    match command {
        Command::Run { config } => {
            let config = InstanceConfig::load(&config)?;
            runtime()?.block_on(daemon::run(&config, Journal::to_stderr()))?;
            Ok(String::new())
        }
        Command::Replay {
            config,
            trace,
            until,
            history,
        } => {
            let config = InstanceConfig::load(&config)?;
            let opts = BuildOptions {
                trace,
                until,
                history,
                fresh_history: true,
                force_virtual: true,
            };
            let engine = replay(&config, &opts, Journal::to_stderr())?;
            Ok(report::full_report(engine.ranking(), &engine.suggestions(None)))
        }
        Command::Rank { api } => {
            let client = reqwest::Client::new();
            let ranking: RankingResult =
                runtime()?.block_on(request(client.get(endpoint(&api, "/v1/ranking")), "ranking"))?;
            Ok(report::ranking_table(&ranking))
        }
        Command::Approve { id, api } => decide(&api, id, "approve"),
        Command::Reject { id, api } => decide(&api, id, "reject"),
    }
}

fn init_tracing() {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("chainsel=info"));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_target(false)
        .try_init();
}

/// Parses `args` (program name first), runs the command and reports errors.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    init_tracing();
    match execute(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            eprintln!("error: {line}");
            ExitCode::from(1)
        }
    }
}

pub fn main() -> ExitCode {
    main_with(std::env::args_os())
}
