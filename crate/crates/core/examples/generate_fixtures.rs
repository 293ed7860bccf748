//! Writes every built-in fixture, its policies and its traces.
//!
//! ```text
//! cargo run --example generate_fixtures [-- <dir>]
//! ```
//!
//! The directory defaults to this crate's `fixtures/`.

use std::path::PathBuf;

fn main() -> std::io::Result<()> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    for fixture in chainsel::scenario::all() {
        let config = fixture.write(&dir)?;
        println!("{} ({} blocks)", config.display(), fixture.blocks.len());
    }
    Ok(())
}
