//! Replays a built-in fixture in virtual time and prints the report.
//!
//! ```text
//! cargo run --example scenario_replay [-- baseline-selection|cost-focus|relaxed-latency|hash-rate-drop]
//! ```

use chainsel::gateway::{replay, BuildOptions, InstanceConfig, Journal};
use chainsel::{report, scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "cost-focus".to_string());
    let fixture = scenario::by_name(&name).ok_or_else(|| format!("unknown fixture {name}"))?;
    let dir = tempfile_dir()?;
    let config = InstanceConfig::load(&fixture.write(&dir)?)?;
    let opts = BuildOptions {
        fresh_history: true,
        ..BuildOptions::default()
    };
    let engine = replay(&config, &opts, Journal::new())?;
    for line in engine.journal().lines() {
        println!("{line}");
    }
    println!();
    print!("{}", report::full_report(engine.ranking(), &engine.suggestions(None)));
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

fn tempfile_dir() -> std::io::Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join(format!("chainsel-replay-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
