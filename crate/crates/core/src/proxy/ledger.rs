//! In-memory simulated chain ledger.

use std::collections::{BTreeMap, HashSet};

use rust_decimal::Decimal;

use super::codec::{self, Carrier};
use super::cost::DEFAULT_BLOCK_GAS_LIMIT;
use super::sim::SimChain;
use super::{BlockStream, BlockchainProxy, PendingTx, ProxyError};
use crate::chain::{BlockHeader, ChainDescriptor, DataRecord, RecordId};
use crate::time::{DateRange, Timestamp};

#[derive(Debug, Clone)]
struct Stored {
    record_id: RecordId,
    created_at: Timestamp,
    carriers: Vec<Carrier>,
}

/// Proxy backed by an in-memory ledger. Submitted records are mined with the
/// next regular block the proxy observes.
#[derive(Debug)]
pub struct SimProxy {
    descriptor: ChainDescriptor,
    block_gas_limit: u64,
    generator: Option<SimChain>,
    pending: Vec<Stored>,
    mined: BTreeMap<(Timestamp, RecordId), Stored>,
    known: HashSet<RecordId>,
    available: bool,
    submit_budget: Option<usize>,
}

impl SimProxy {
    pub fn new(descriptor: ChainDescriptor) -> Self {
        SimProxy {
            descriptor,
            block_gas_limit: DEFAULT_BLOCK_GAS_LIMIT,
            generator: None,
            pending: Vec::new(),
            mined: BTreeMap::new(),
            known: HashSet::new(),
            available: true,
            submit_budget: None,
        }
    }

    pub fn with_generator(mut self, generator: SimChain) -> Self {
        self.generator = Some(generator);
        self
    }

    pub fn with_block_gas_limit(mut self, limit: u64) -> Self {
        self.block_gas_limit = limit;
        self
    }

    /// Lets the next `n` submissions succeed, then fails every later one.
    pub fn fail_after(&mut self, n: usize) {
        self.submit_budget = Some(n);
    }

    pub fn set_available(&mut self, available: bool) {
        self.available = available;
        if available {
            self.submit_budget = None;
        }
    }

    pub fn mined_count(&self) -> usize {
        self.mined.len()
    }

    /// Ids of every mined or pending record.
    pub fn record_ids(&self) -> impl Iterator<Item = &RecordId> + '_ {
        self.known.iter()
    }

    fn check_available(&self) -> Result<(), ProxyError> {
        if self.available {
            Ok(())
        } else {
            Err(ProxyError::Unavailable(self.descriptor.id.clone()))
        }
    }

    fn materialize(&self, inclusion: Timestamp, stored: &Stored) -> Result<DataRecord, ProxyError> {
        Ok(DataRecord {
            record_id: stored.record_id,
            payload: codec::decode(stored.record_id, &stored.carriers)?,
            created_at: stored.created_at,
            chain_of_record: self.descriptor.id.clone(),
            inclusion_time: Some(inclusion),
        })
    }
}

impl BlockchainProxy for SimProxy {
    fn descriptor(&self) -> &ChainDescriptor {
        &self.descriptor
    }

    fn subscribe_blocks(&mut self) -> BlockStream {
        match self.generator.take() {
            Some(g) => Box::new(g),
            None => Box::new(std::iter::empty()),
        }
    }

    fn submit_record(&mut self, record: &DataRecord, fee_rate: Option<Decimal>) -> Result<PendingTx, ProxyError> {
        self.check_available()?;
        if record.chain_of_record != self.descriptor.id {
            return Err(ProxyError::WrongChain(record.record_id, record.chain_of_record.clone()));
        }
        let carriers = codec::encode(
            self.descriptor.family,
            record.record_id,
            &record.payload,
            self.block_gas_limit,
        )?;
        let pending = PendingTx {
            record_id: record.record_id,
            chain: self.descriptor.id.clone(),
            carriers: carriers.len(),
            weight: carriers.iter().map(|c| c.weight).sum(),
            fee_rate,
        };
        if self.known.contains(&record.record_id) {
            return Ok(pending);
        }
        if let Some(budget) = self.submit_budget.as_mut() {
            if *budget == 0 {
                self.available = false;
                return Err(ProxyError::Unavailable(self.descriptor.id.clone()));
            }
            *budget -= 1;
        }
        self.known.insert(record.record_id);
        self.pending.push(Stored {
            record_id: record.record_id,
            created_at: record.created_at,
            carriers,
        });
        Ok(pending)
    }

    fn read_records(&self, range: DateRange) -> Result<Vec<DataRecord>, ProxyError> {
        self.check_available()?;
        self.mined
            .range((range.start, RecordId([0; 16]))..=(range.end, RecordId([0xff; 16])))
            .map(|((ts, _), stored)| self.materialize(*ts, stored))
            .collect()
    }

    fn contains_record(&self, id: &RecordId) -> Result<bool, ProxyError> {
        self.check_available()?;
        Ok(self.known.contains(id))
    }

    fn on_block(&mut self, block: &BlockHeader) {
        if !block.is_uncle && block.chain == self.descriptor.id {
            self.mine_pending(block.timestamp);
        }
    }

    fn pending_count(&self) -> usize {
        self.pending.len()
    }

    fn mine_pending(&mut self, at: Timestamp) {
        for stored in self.pending.drain(..) {
            self.mined.insert((at, stored.record_id), stored);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{ChainFamily, ChainId};

    fn proxy(family: ChainFamily) -> SimProxy {
        let id = ChainId::new("sim").unwrap();
        SimProxy::new(ChainDescriptor::new(id, "Sim", family, "SIM", 5).unwrap())
    }

    fn record(p: &SimProxy, payload: &[u8], at: i64) -> DataRecord {
        DataRecord::new(payload.to_vec(), Timestamp::from_secs(at), p.descriptor().id.clone())
    }

    #[test]
    fn records_are_mined_by_the_next_block() {
        let mut p = proxy(ChainFamily::BitcoinLike);
        let r = record(&p, &[9; 1024], 10);
        let tx = p.submit_record(&r, None).unwrap();
        assert_eq!(tx.carriers, 13);
        assert_eq!(tx.weight, 3_650);
        assert!(p
            .read_records(DateRange::through(Timestamp::from_secs(1_000)))
            .unwrap()
            .is_empty());
        p.mine_pending(Timestamp::from_secs(20));
        let read = p.read_records(DateRange::through(Timestamp::from_secs(1_000))).unwrap();
        assert_eq!(read.len(), 1);
        assert_eq!(read[0].payload, r.payload);
        assert_eq!(read[0].inclusion_time, Some(Timestamp::from_secs(20)));
    }

    #[test]
    fn range_filters_on_inclusion_time() {
        let mut p = proxy(ChainFamily::EthereumLike);
        for t in [100, 200, 300] {
            let r = record(&p, format!("r{t}").as_bytes(), t);
            p.submit_record(&r, None).unwrap();
            p.mine_pending(Timestamp::from_secs(t));
        }
        let range = DateRange::new(Timestamp::from_secs(150), Timestamp::from_secs(300)).unwrap();
        let read = p.read_records(range).unwrap();
        assert_eq!(
            read.iter().map(|r| r.payload.clone()).collect::<Vec<_>>(),
            vec![b"r200".to_vec(), b"r300".to_vec()]
        );
    }

    #[test]
    fn resubmission_is_idempotent() {
        let mut p = proxy(ChainFamily::BitcoinLike);
        let r = record(&p, b"x", 1);
        p.submit_record(&r, None).unwrap();
        p.submit_record(&r, None).unwrap();
        assert_eq!(p.pending_count(), 1);
        assert!(p.contains_record(&r.record_id).unwrap());
    }

    #[test]
    fn fault_injection() {
        let mut p = proxy(ChainFamily::BitcoinLike);
        p.fail_after(1);
        p.submit_record(&record(&p, b"a", 1), None).unwrap();
        assert!(matches!(
            p.submit_record(&record(&p, b"b", 1), None),
            Err(ProxyError::Unavailable(_))
        ));
        p.set_available(true);
        p.submit_record(&record(&p, b"b", 1), None).unwrap();
    }

    #[test]
    fn wrong_chain_and_empty_payload() {
        let mut p = proxy(ChainFamily::BitcoinLike);
        let other = DataRecord::new(b"x".to_vec(), Timestamp::EPOCH, ChainId::new("other").unwrap());
        assert!(matches!(p.submit_record(&other, None), Err(ProxyError::WrongChain(..))));
        assert!(matches!(
            p.submit_record(&record(&p, b"", 1), None),
            Err(ProxyError::Codec(_))
        ));
    }
}
