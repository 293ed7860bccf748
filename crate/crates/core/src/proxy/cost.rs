//! Write-cost models.
//!
//! Bitcoin-like chains store data in OP_RETURN outputs of 1-input/2-output
//! carrier transactions. A carrier holding a full 80-byte chunk is 282 bytes;
//! a carrier holding `r < 80` bytes is `282 - (80 - r)` bytes.
//!
//! Ethereum-like chains store data in the transaction data field:
//! 21,000 gas per transaction plus 68 gas per non-zero byte.

use rust_decimal::{Decimal, RoundingStrategy};
use thiserror::Error;

pub const OP_RETURN_CAPACITY: usize = 80;
pub const FULL_CARRIER_TX_BYTES: u64 = 282;
pub const ETH_BASE_TX_GAS: u64 = 21_000;
pub const ETH_NONZERO_BYTE_GAS: u64 = 68;
pub const DEFAULT_BLOCK_GAS_LIMIT: u64 = 8_000_000;
/// USD amounts carry eight fractional digits.
pub const USD_SCALE: u32 = 8;

const SATOSHI_PER_BTC: u64 = 100_000_000;
const WEI_PER_ETHER: u64 = 1_000_000_000_000_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("transaction needs {gas} gas, above the block gas limit of {limit}")]
    GasLimitExceeded { gas: u64, limit: u64 },
    #[error("non-zero byte fraction {0} is outside [0, 1]")]
    InvalidFraction(f64),
    #[error("negative input to cost model")]
    Negative,
    #[error("cost arithmetic overflowed")]
    Overflow,
}

/// Size in bytes of one carrier transaction holding `chunk_len` data bytes.
pub fn btc_carrier_tx_bytes(chunk_len: usize) -> u64 {
    debug_assert!(chunk_len <= OP_RETURN_CAPACITY);
    FULL_CARRIER_TX_BYTES - (OP_RETURN_CAPACITY - chunk_len) as u64
}

/// Number of carrier transactions needed for `payload_len` bytes.
pub fn btc_carrier_count(payload_len: usize) -> usize {
    payload_len.div_ceil(OP_RETURN_CAPACITY)
}

/// Total size of the carrier transactions for a payload of `payload_len` bytes.
pub fn btc_write_cost_bytes(payload_len: usize) -> u64 {
    let full = (payload_len / OP_RETURN_CAPACITY) as u64;
    let rest = payload_len % OP_RETURN_CAPACITY;
    let mut total = full * FULL_CARRIER_TX_BYTES;
    if rest > 0 {
        total += btc_carrier_tx_bytes(rest);
    }
    total
}

fn to_usd(amount: Decimal) -> Decimal {
    amount.round_dp_with_strategy(USD_SCALE, RoundingStrategy::MidpointNearestEven)
}

/// USD cost of writing `payload_len` bytes at `fee_rate` satoshi/byte with
/// bitcoin priced at `btc_usd`.
pub fn btc_write_cost_usd(payload_len: usize, fee_rate: Decimal, btc_usd: Decimal) -> Result<Decimal, CostError> {
    if fee_rate.is_sign_negative() || btc_usd.is_sign_negative() {
        return Err(CostError::Negative);
    }
    let satoshi = Decimal::from(btc_write_cost_bytes(payload_len))
        .checked_mul(fee_rate)
        .ok_or(CostError::Overflow)?;
    let btc = satoshi / Decimal::from(SATOSHI_PER_BTC);
    btc.checked_mul(btc_usd).map(to_usd).ok_or(CostError::Overflow)
}

/// Gas for one data transaction carrying `payload_len` bytes, of which
/// `nonzero_fraction` are non-zero.
pub fn eth_write_cost_gas(payload_len: usize, nonzero_fraction: f64, block_gas_limit: u64) -> Result<u64, CostError> {
    if !(0.0..=1.0).contains(&nonzero_fraction) {
        return Err(CostError::InvalidFraction(nonzero_fraction));
    }
    let nonzero = (payload_len as f64 * nonzero_fraction).round() as u64;
    let gas = ETH_BASE_TX_GAS + ETH_NONZERO_BYTE_GAS * nonzero;
    if gas > block_gas_limit {
        return Err(CostError::GasLimitExceeded {
            gas,
            limit: block_gas_limit,
        });
    }
    Ok(gas)
}

/// Largest all-non-zero payload a single transaction can carry.
pub fn eth_max_payload_per_tx(block_gas_limit: u64) -> usize {
    (block_gas_limit.saturating_sub(ETH_BASE_TX_GAS) / ETH_NONZERO_BYTE_GAS) as usize
}

/// USD cost of `gas` units at `gas_price_wei` with the native coin priced at
/// `coin_usd`.
pub fn eth_write_cost_usd(gas: u64, gas_price_wei: Decimal, coin_usd: Decimal) -> Result<Decimal, CostError> {
    if gas_price_wei.is_sign_negative() || coin_usd.is_sign_negative() {
        return Err(CostError::Negative);
    }
    let wei = Decimal::from(gas)
        .checked_mul(gas_price_wei)
        .ok_or(CostError::Overflow)?;
    let coins = wei / Decimal::from(WEI_PER_ETHER);
    coins.checked_mul(coin_usd).map(to_usd).ok_or(CostError::Overflow)
}
