//! Suggestion lifecycle and record transfer between two simulated chains.
//!
//! ```text
//! cargo run --example switchover
//! ```

use chainsel::chain::{ChainDescriptor, ChainFamily, ChainId, DataRecord};
use chainsel::proxy::{BlockchainProxy, SimProxy};
use chainsel::selection::{rank_candidates, Candidate, ValidationResult, Weights};
use chainsel::switchover::{execute_transfer, SuggestOutcome, SwitchoverManager, TransferStrategy};
use chainsel::time::{DateRange, Timestamp};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let old = ChainId::new("old")?;
    let new = ChainId::new("new")?;
    let mut source = SimProxy::new(ChainDescriptor::new(
        old.clone(),
        "Old",
        ChainFamily::BitcoinLike,
        "OLD",
        5,
    )?);
    let mut dest = SimProxy::new(ChainDescriptor::new(
        new.clone(),
        "New",
        ChainFamily::EthereumLike,
        "NEW",
        8,
    )?);

    let t0 = Timestamp::parse("2018-10-01T00:00:00Z")?;
    for day in 0..10 {
        let at = t0.plus_secs(day * 86_400);
        let record = DataRecord::new(format!("reading of day {day}").into_bytes(), at, old.clone());
        source.submit_record(&record, None)?;
        source.mine_pending(at);
    }

    let now = t0.plus_secs(10 * 86_400);
    let candidate = |chain: &ChainId, score| Candidate {
        chain: chain.clone(),
        scores: [score; 8],
        validation: ValidationResult::ALL_TRUE,
        usable: true,
    };
    let ranking = rank_candidates(
        &Weights([1; 8]),
        vec![candidate(&old, 2), candidate(&new, 3)],
        Some(&old),
        now,
    );

    let mut policy = chainsel::scenario::balanced_policy();
    policy.transfer_strategy = TransferStrategy::LastDays(3);
    let mut manager = SwitchoverManager::new();
    let SuggestOutcome::Suggested(id) = manager.suggest(now, &ranking, &old, &policy) else {
        return Err("no suggestion".into());
    };
    let range = manager.get(id).and_then(|s| s.transfer_range);
    println!(
        "suggestion #{id}: {old} -> {new}, transfer {}",
        range.map_or("none".into(), |r| r.to_string())
    );

    manager.approve(id, now)?;
    manager.begin_execution(id, now)?;
    let report = execute_transfer(range, &source, &mut dest);
    dest.mine_pending(now);
    let state = manager.finish_execution(id, now, report.clone())?.state;
    println!(
        "{state}: {} copied, {} already present",
        report.records_copied, report.skipped_duplicates
    );

    // A second run copies nothing.
    let again = execute_transfer(range, &source, &mut dest);
    println!(
        "rerun: {} copied, {} already present",
        again.records_copied, again.skipped_duplicates
    );

    for r in dest.read_records(DateRange::through(now))? {
        println!("  {} {}", r.created_at, String::from_utf8_lossy(&r.payload));
    }
    for entry in manager.drain_history() {
        println!("history #{} {}", entry.seq, entry.state);
    }
    Ok(())
}
