//! Write cost of a payload on bitcoin-like and ethereum-like chains.
//!
//! ```text
//! cargo run --example cost_models
//! ```

use chainsel::proxy::cost::{
    btc_carrier_count, btc_write_cost_bytes, btc_write_cost_usd, eth_write_cost_gas, eth_write_cost_usd,
    DEFAULT_BLOCK_GAS_LIMIT,
};
use rust_decimal::Decimal;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let btc_usd: Decimal = "6394.25".parse()?;
    let eth_usd: Decimal = "220.11".parse()?;
    let sat_per_byte = Decimal::from(10);
    let wei_per_gas = Decimal::from(20_000_000_000u64);

    println!(
        "{:>8}  {:>8}  {:>6}  {:>12}  {:>8}  {:>12}",
        "bytes", "btc B", "txs", "btc USD", "eth gas", "eth USD"
    );
    for len in [1, 80, 81, 512, 1024, 4096, 65_536] {
        let bytes = btc_write_cost_bytes(len);
        let gas = eth_write_cost_gas(len, 1.0, DEFAULT_BLOCK_GAS_LIMIT)?;
        println!(
            "{len:>8}  {bytes:>8}  {:>6}  {:>12}  {gas:>8}  {:>12}",
            btc_carrier_count(len),
            btc_write_cost_usd(len, sat_per_byte, btc_usd)?,
            eth_write_cost_usd(gas, wei_per_gas, eth_usd)?,
        );
    }

    // Zero bytes in calldata only pay the base cost.
    let sparse = eth_write_cost_gas(1024, 0.25, DEFAULT_BLOCK_GAS_LIMIT)?;
    println!("1024 bytes, a quarter non-zero: {sparse} gas");
    Ok(())
}
