//! Splits record payloads into carrier transactions and reassembles them.
//!
//! Carriers hold raw payload bytes: 80-byte OP_RETURN chunks on bitcoin-like
//! chains, and as few data transactions as the block gas limit allows on
//! ethereum-like chains. The carrier's record id and sequence number live in
//! the proxy's index, not inside the carrier bytes.

use thiserror::Error;

use super::cost::{btc_carrier_tx_bytes, eth_max_payload_per_tx, eth_write_cost_gas, CostError, OP_RETURN_CAPACITY};
use crate::chain::{ChainFamily, RecordId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("record payload is empty")]
    EmptyPayload,
    #[error("record {0} has no carriers")]
    NoCarriers(RecordId),
    #[error("record {record} is missing carrier {seq}")]
    MissingCarrier { record: RecordId, seq: u32 },
    #[error("carrier belongs to record {found}, expected {expected}")]
    ForeignCarrier { expected: RecordId, found: RecordId },
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// One on-chain transaction carrying part of a record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Carrier {
    pub record_id: RecordId,
    pub seq: u32,
    pub data: Vec<u8>,
    /// Transaction size in bytes (bitcoin-like) or gas used (ethereum-like).
    pub weight: u64,
}

/// Largest chunk a single carrier may hold for `family`.
pub fn chunk_capacity(family: ChainFamily, block_gas_limit: u64) -> usize {
    match family {
        ChainFamily::BitcoinLike => OP_RETURN_CAPACITY,
        ChainFamily::EthereumLike => eth_max_payload_per_tx(block_gas_limit),
    }
}

pub fn encode(
    family: ChainFamily,
    record_id: RecordId,
    payload: &[u8],
    block_gas_limit: u64,
) -> Result<Vec<Carrier>, CodecError> {
    if payload.is_empty() {
        return Err(CodecError::EmptyPayload);
    }
    let capacity = chunk_capacity(family, block_gas_limit);
    payload
        .chunks(capacity)
        .enumerate()
        .map(|(seq, chunk)| {
            let weight = match family {
                ChainFamily::BitcoinLike => btc_carrier_tx_bytes(chunk.len()),
                ChainFamily::EthereumLike => {
                    let nonzero = chunk.iter().filter(|b| **b != 0).count();
                    let fraction = nonzero as f64 / chunk.len() as f64;
                    eth_write_cost_gas(chunk.len(), fraction, block_gas_limit)?
                }
            };
            Ok(Carrier {
                record_id,
                seq: seq as u32,
                data: chunk.to_vec(),
                weight,
            })
        })
        .collect()
}

/// Reassembles a payload. Carriers may arrive in any order.
pub fn decode(record_id: RecordId, carriers: &[Carrier]) -> Result<Vec<u8>, CodecError> {
    if carriers.is_empty() {
        return Err(CodecError::NoCarriers(record_id));
    }
    let mut ordered: Vec<&Carrier> = carriers.iter().collect();
    ordered.sort_by_key(|c| c.seq);
    let mut out = Vec::with_capacity(ordered.iter().map(|c| c.data.len()).sum());
    for (expected, c) in ordered.into_iter().enumerate() {
        if c.record_id != record_id {
            return Err(CodecError::ForeignCarrier {
                expected: record_id,
                found: c.record_id,
            });
        }
        if c.seq != expected as u32 {
            return Err(CodecError::MissingCarrier {
                record: record_id,
                seq: expected as u32,
            });
        }
        out.extend_from_slice(&c.data);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proxy::cost::{btc_write_cost_bytes, DEFAULT_BLOCK_GAS_LIMIT};
    use crate::time::Timestamp;
    use proptest::prelude::*;

    fn rid(payload: &[u8]) -> RecordId {
        RecordId::derive(payload, Timestamp::from_secs(0))
    }

    #[test]
    fn bitcoin_carrier_counts() {
        let p80 = vec![7u8; 80];
        assert_eq!(
            encode(ChainFamily::BitcoinLike, rid(&p80), &p80, DEFAULT_BLOCK_GAS_LIMIT)
                .unwrap()
                .len(),
            1
        );
        let p1k = vec![7u8; 1024];
        let carriers = encode(ChainFamily::BitcoinLike, rid(&p1k), &p1k, DEFAULT_BLOCK_GAS_LIMIT).unwrap();
        assert_eq!(carriers.len(), 13);
        assert_eq!(
            carriers.iter().map(|c| c.weight).sum::<u64>(),
            btc_write_cost_bytes(1024)
        );
    }

    #[test]
    fn ethereum_fits_64k_in_one_transaction() {
        let p = vec![1u8; 64 * 1024];
        let carriers = encode(ChainFamily::EthereumLike, rid(&p), &p, DEFAULT_BLOCK_GAS_LIMIT).unwrap();
        assert_eq!(carriers.len(), 1);
        assert_eq!(carriers[0].weight, 21_000 + 68 * 64 * 1024);
    }

    #[test]
    fn ethereum_splits_above_the_gas_limit() {
        let p = vec![1u8; 10_000];
        let carriers = encode(ChainFamily::EthereumLike, rid(&p), &p, 400_000).unwrap();
        assert_eq!(carriers.len(), 2);
        assert!(carriers.iter().all(|c| c.weight <= 400_000));
    }

    #[test]
    fn empty_payload_is_rejected() {
        assert_eq!(
            encode(ChainFamily::BitcoinLike, rid(b""), b"", DEFAULT_BLOCK_GAS_LIMIT),
            Err(CodecError::EmptyPayload)
        );
    }

    #[test]
    fn missing_carrier_is_detected() {
        let p = vec![3u8; 200];
        let id = rid(&p);
        let mut carriers = encode(ChainFamily::BitcoinLike, id, &p, DEFAULT_BLOCK_GAS_LIMIT).unwrap();
        carriers.remove(1);
        assert_eq!(
            decode(id, &carriers),
            Err(CodecError::MissingCarrier { record: id, seq: 1 })
        );
    }

    proptest! {
        #[test]
        fn round_trip_in_any_order(
            payload in proptest::collection::vec(any::<u8>(), 1..4096),
            eth in any::<bool>(),
            rotate in 0usize..64,
        ) {
            let family = if eth { ChainFamily::EthereumLike } else { ChainFamily::BitcoinLike };
            let id = rid(&payload);
            let mut carriers = encode(family, id, &payload, 100_000).unwrap();
            let k = rotate % carriers.len();
            carriers.rotate_left(k);
            prop_assert_eq!(decode(id, &carriers).unwrap(), payload);
        }
    }
}
