//! Drives the engine block by block through a falling hash rate and shows
//! when validation fails.
//!
//! ```text
//! cargo run --example hash_rate_drop
//! ```

use chainsel::gateway::{BuildOptions, Instance, InstanceConfig, Journal};
use chainsel::metrics::Metric;
use chainsel::scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixture = scenario::hash_rate_drop();
    let dir = std::env::temp_dir().join(format!("chainsel-drop-{}", std::process::id()));
    let config = InstanceConfig::load(&fixture.write(&dir)?)?;
    let mut instance = Instance::build(&config, &BuildOptions::default(), Journal::to_stderr())?;
    instance.warm_up();
    let exp = chainsel::chain::ChainId::new("expanse")?;
    loop {
        let v = instance.engine.vector(&exp).ok_or("no expanse vector")?;
        let eligible = instance
            .engine
            .ranking()
            .and_then(|r| r.get(&exp))
            .is_some_and(|c| c.eligible);
        println!(
            "{}  {:.1} GH/s  eligible={eligible}",
            instance.engine.now(),
            v.scalar(Metric::M7) / 1e9
        );
        if !instance.step_next(None) {
            break;
        }
    }
    for s in instance.engine.suggestions(None) {
        println!("suggestion #{}: {} -> {} ({})", s.id, s.from, s.to, s.state);
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
