mod common;

use chainsel::chain::{ChainFamily, DataRecord};
use chainsel::proxy::{BlockchainProxy, ProxyError, SimProxy};
use chainsel::time::{DateRange, Timestamp};
use common::*;
use proptest::prelude::*;

fn proxy(family: ChainFamily) -> SimProxy {
    SimProxy::new(descriptor("store", family, "STO", 5))
}

fn store(p: &mut SimProxy, payload: Vec<u8>, at: i64) -> DataRecord {
    let r = DataRecord::new(payload, Timestamp::from_secs(at), id("store"));
    p.submit_record(&r, None).unwrap();
    r
}

fn everything() -> DateRange {
    DateRange::through(Timestamp::from_secs(i64::from(u32::MAX)))
}

#[test]
fn carrier_counts() {
    let mut btc = proxy(ChainFamily::BitcoinLike);
    let r = DataRecord::new(vec![1; 80], Timestamp::EPOCH, id("store"));
    assert_eq!(btc.submit_record(&r, None).unwrap().carriers, 1);
    let r = DataRecord::new(vec![1; 81], Timestamp::EPOCH, id("store"));
    assert_eq!(btc.submit_record(&r, None).unwrap().carriers, 2);
    let r = DataRecord::new(vec![1; 1024], Timestamp::EPOCH, id("store"));
    let tx = btc.submit_record(&r, None).unwrap();
    assert_eq!((tx.carriers, tx.weight), (13, 3650));

    let mut eth = proxy(ChainFamily::EthereumLike);
    let r = DataRecord::new(vec![1; 1024], Timestamp::EPOCH, id("store"));
    let tx = eth.submit_record(&r, None).unwrap();
    assert_eq!((tx.carriers, tx.weight), (1, 90_632));
}

#[test]
fn empty_store_and_disjoint_ranges_read_nothing() {
    let mut p = proxy(ChainFamily::EthereumLike);
    assert!(p.read_records(everything()).unwrap().is_empty());
    store(&mut p, b"hello".to_vec(), 100);
    p.mine_pending(Timestamp::from_secs(200));
    let before = DateRange::new(Timestamp::EPOCH, Timestamp::from_secs(199)).unwrap();
    let after = DateRange::new(Timestamp::from_secs(201), Timestamp::from_secs(500)).unwrap();
    assert!(p.read_records(before).unwrap().is_empty());
    assert!(p.read_records(after).unwrap().is_empty());
    let exact = DateRange::new(Timestamp::from_secs(200), Timestamp::from_secs(200)).unwrap();
    assert_eq!(p.read_records(exact).unwrap().len(), 1);
}

#[test]
fn unavailable_proxy_refuses_reads_and_writes() {
    let mut p = proxy(ChainFamily::BitcoinLike);
    p.set_available(false);
    assert!(matches!(p.read_records(everything()), Err(ProxyError::Unavailable(_))));
    let r = DataRecord::new(b"x".to_vec(), Timestamp::EPOCH, id("store"));
    assert!(matches!(p.submit_record(&r, None), Err(ProxyError::Unavailable(_))));
    assert!(matches!(
        p.contains_record(&r.record_id),
        Err(ProxyError::Unavailable(_))
    ));
}

#[test]
fn record_ids_depend_on_payload_and_time() {
    let a = DataRecord::new(b"x".to_vec(), Timestamp::from_secs(1), id("store"));
    let b = DataRecord::new(b"x".to_vec(), Timestamp::from_secs(2), id("store"));
    let c = DataRecord::new(b"y".to_vec(), Timestamp::from_secs(1), id("store"));
    let a2 = DataRecord::new(b"x".to_vec(), Timestamp::from_secs(1), id("other"));
    assert_ne!(a.record_id, b.record_id);
    assert_ne!(a.record_id, c.record_id);
    assert_eq!(a.record_id, a2.record_id);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn payloads_survive_a_round_trip(
        payload in proptest::collection::vec(any::<u8>(), 1..=64 * 1024),
        btc in any::<bool>(),
        created in 0i64..1_000_000,
    ) {
        let family = if btc { ChainFamily::BitcoinLike } else { ChainFamily::EthereumLike };
        let mut p = proxy(family);
        let r = store(&mut p, payload.clone(), created);
        let mined_at = Timestamp::from_secs(created + 1);
        p.mine_pending(mined_at);
        let read = p.read_records(everything()).unwrap();
        prop_assert_eq!(read.len(), 1);
        prop_assert_eq!(&read[0].payload, &payload);
        prop_assert_eq!(read[0].record_id, r.record_id);
        prop_assert_eq!(read[0].created_at, r.created_at);
        prop_assert_eq!(read[0].inclusion_time, Some(mined_at));
        if btc {
            prop_assert_eq!(
                p.submit_record(&r, None).unwrap().carriers,
                payload.len().div_ceil(80)
            );
        }
    }

    #[test]
    fn range_reads_match_a_filter(times in proptest::collection::vec(0i64..1000, 1..40), lo in 0i64..1000, len in 0i64..1000) {
        let mut p = proxy(ChainFamily::EthereumLike);
        for (i, t) in times.iter().enumerate() {
            store(&mut p, format!("r{i}").into_bytes(), *t);
            p.mine_pending(Timestamp::from_secs(*t));
        }
        let range = DateRange::new(Timestamp::from_secs(lo), Timestamp::from_secs(lo + len)).unwrap();
        let read = p.read_records(range).unwrap();
        let expected = times.iter().filter(|t| **t >= lo && **t <= lo + len).count();
        prop_assert_eq!(read.len(), expected);
        prop_assert!(read.windows(2).all(|w| w[0].inclusion_time <= w[1].inclusion_time));
    }
}
