//! Runs a fixture behind the HTTP API on a free port and uses it.
//!
//! ```text
//! cargo run --example embedded_daemon
//! ```

use std::time::Duration;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use chainsel::gateway::{BuildOptions, Daemon, Instance, InstanceConfig, Journal};
use chainsel::scenario;
use tokio::net::TcpListener;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("chainsel-daemon-{}", std::process::id()));
    let config = InstanceConfig::load(&scenario::cost_focus().write(&dir)?)?;
    let opts = BuildOptions {
        fresh_history: true,
        ..BuildOptions::default()
    };
    let instance = Instance::build(&config, &opts, Journal::new())?;
    let daemon = Daemon::start(instance, TcpListener::bind("127.0.0.1:0").await?).await?;
    let base = format!("http://{}", daemon.addr);
    println!("API on {base}");

    while daemon.handle.snapshot().suggestions.is_empty() {
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    let client = reqwest::Client::new();
    let ranking: serde_json::Value = client.get(format!("{base}/v1/ranking")).send().await?.json().await?;
    println!("winner: {}", ranking["winner"]);

    let body = serde_json::json!({ "payload": BASE64.encode("hello from the example") });
    let receipt: serde_json::Value = client
        .post(format!("{base}/v1/records"))
        .json(&body)
        .send()
        .await?
        .json()
        .await?;
    println!("stored {} on {}", receipt["record_id"], receipt["chain"]);

    let done: serde_json::Value = client
        .post(format!("{base}/v1/suggestions/1/approve"))
        .send()
        .await?
        .json()
        .await?;
    println!("suggestion 1 is {}", done["state"]);

    let records: serde_json::Value = client
        .get(format!("{base}/v1/records?chain=ethereum-classic"))
        .send()
        .await?
        .json()
        .await?;
    println!(
        "{} record(s) now on ethereum-classic",
        records.as_array().map_or(0, Vec::len)
    );

    daemon.stop().await;
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
