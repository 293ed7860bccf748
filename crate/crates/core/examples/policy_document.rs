//! Loading, checking and evaluating a ranking policy document.
//!
//! ```text
//! cargo run --example policy_document [-- path/to/policy.json]
//! ```

use std::path::PathBuf;

use chainsel::metrics::Metric;
use chainsel::selection::RankingPolicy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/policies/hash-rate-watch.json"));
    let policy = RankingPolicy::load(&path)?;
    println!("{}", path.display());
    println!(
        "  suppression period {} s, mode {:?}, transfer {}",
        policy.suppression_period_s, policy.mode, policy.transfer_strategy
    );
    for m in Metric::ALL {
        println!(
            "  {} weight {} over {} intervals",
            m.label(),
            policy.weights.get(m),
            policy.saf(m).pieces().len()
        );
    }

    // Scalars for M1..M8; M7 sits just below the 180 GH/s rule.
    let mut scalars = [0.001, 0.0, 0.5, 44.0, 0.06, 48.0, 179.9e9, 5.0];
    let result = policy.validation.evaluate_scalars(&scalars);
    println!("at 179.9 GH/s: valid = {}", result.overall);
    scalars[Metric::M7.index()] = 180e9;
    println!(
        "at 180.0 GH/s: valid = {}",
        policy.validation.evaluate_scalars(&scalars).overall
    );

    let broken = r#"{"weights": {"m1": 7}, "safs": {}}"#;
    match RankingPolicy::from_json(broken) {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
