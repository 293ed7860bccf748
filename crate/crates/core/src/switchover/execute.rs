use serde::{Deserialize, Serialize};

use crate::chain::{DataRecord, RecordId};
use crate::proxy::{BlockchainProxy, ProxyError};
use crate::time::DateRange;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub records_copied: usize,
    pub skipped_duplicates: usize,
    /// Set when the copy stopped early.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_record: Option<RecordId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ExecutionReport {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

/// Copies every source record mined inside `range` to `dest`. Records whose
/// id already exists on `dest` are skipped, so a rerun after a failure only
/// copies what is missing. The source is only read.
pub fn execute_transfer(
    range: Option<DateRange>,
    source: &dyn BlockchainProxy,
    dest: &mut dyn BlockchainProxy,
) -> ExecutionReport {
    let mut report = ExecutionReport::default();
    let Some(range) = range else {
        return report;
    };
    let records = match source.read_records(range) {
        Ok(r) => r,
        Err(e) => {
            report.error = Some(e.to_string());
            return report;
        }
    };
    let dest_id = dest.descriptor().id.clone();
    for record in records {
        let outcome: Result<bool, ProxyError> = dest.contains_record(&record.record_id).and_then(|present| {
            if present {
                return Ok(false);
            }
            let copy = DataRecord {
                chain_of_record: dest_id.clone(),
                inclusion_time: None,
                ..record.clone()
            };
            dest.submit_record(&copy, None).map(|_| true)
        });
        match outcome {
            Ok(true) => report.records_copied += 1,
            Ok(false) => report.skipped_duplicates += 1,
            Err(e) => {
                report.failed_record = Some(record.record_id);
                report.error = Some(e.to_string());
                break;
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{ChainDescriptor, ChainFamily, ChainId};
    use crate::proxy::SimProxy;
    use crate::time::Timestamp;

    fn proxy(id: &str) -> SimProxy {
        SimProxy::new(ChainDescriptor::new(ChainId::new(id).unwrap(), id, ChainFamily::EthereumLike, "X", 5).unwrap())
    }

    fn fill(p: &mut SimProxy, n: usize) {
        for i in 0..n {
            let r = DataRecord::new(
                format!("record {i}").into_bytes(),
                Timestamp::from_secs(i as i64),
                p.descriptor().id.clone(),
            );
            p.submit_record(&r, None).unwrap();
            p.mine_pending(Timestamp::from_secs(100 + i as i64));
        }
    }

    fn all() -> Option<DateRange> {
        Some(DateRange::through(Timestamp::from_secs(1_000_000)))
    }

    #[test]
    fn no_range_copies_nothing() {
        let mut src = proxy("src");
        fill(&mut src, 3);
        let mut dst = proxy("dst");
        assert_eq!(execute_transfer(None, &src, &mut dst), ExecutionReport::default());
    }

    #[test]
    fn copies_then_skips() {
        let mut src = proxy("src");
        fill(&mut src, 5);
        let mut dst = proxy("dst");
        let first = execute_transfer(all(), &src, &mut dst);
        assert_eq!((first.records_copied, first.skipped_duplicates), (5, 0));
        let second = execute_transfer(all(), &src, &mut dst);
        assert_eq!((second.records_copied, second.skipped_duplicates), (0, 5));
    }

    #[test]
    fn resumes_after_partial_failure() {
        let mut src = proxy("src");
        fill(&mut src, 5);
        let mut dst = proxy("dst");
        dst.fail_after(3);
        let first = execute_transfer(all(), &src, &mut dst);
        assert_eq!(first.records_copied, 3);
        assert!(!first.succeeded());
        dst.set_available(true);
        let second = execute_transfer(all(), &src, &mut dst);
        assert_eq!((second.records_copied, second.skipped_duplicates), (2, 3));
        assert!(second.succeeded());
    }

    #[test]
    fn range_limits_the_copy() {
        let mut src = proxy("src");
        fill(&mut src, 5);
        let mut dst = proxy("dst");
        let range = DateRange::new(Timestamp::from_secs(101), Timestamp::from_secs(102)).ok();
        assert_eq!(execute_transfer(range, &src, &mut dst).records_copied, 2);
    }
}
