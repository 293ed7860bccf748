//! Fee estimation from the rolling window.

use rust_decimal::Decimal;

use super::ProxyError;
use crate::chain::{FeeStats, RollingWindow};

/// Median fee rate over the latest `target_blocks` regular blocks. When the
/// window holds fewer blocks, all of them are used.
pub fn estimate_fee(window: &RollingWindow, target_blocks: u32) -> Result<FeeStats, ProxyError> {
    let rates: Vec<Decimal> = window
        .regular()
        .rev()
        .take(target_blocks.max(1) as usize)
        .map(|b| b.fee_stats.median_fee_rate)
        .collect();
    median(rates)
        .map(FeeStats::new)
        .ok_or_else(|| ProxyError::EmptyWindow(window.chain().clone()))
}

pub fn median(mut values: Vec<Decimal>) -> Option<Decimal> {
    if values.is_empty() {
        return None;
    }
    values.sort();
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        Some(values[mid])
    } else {
        Some((values[mid - 1] + values[mid]) / Decimal::TWO)
    }
}
