mod common;

use std::time::Duration;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use chainsel::gateway::api::{ErrorBody, RecordView};
use chainsel::gateway::engine::ChainStatus;
use chainsel::gateway::{BuildOptions, Daemon, Instance, Journal, WriteReceipt};
use chainsel::metrics::MetricVector;
use chainsel::scenario::{self, Fixture};
use chainsel::selection::{RankingPolicy, RankingResult};
use chainsel::switchover::{SuggestionState, SwitchoverSuggestion};
use common::*;
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde_json::json;
use tokio::net::TcpListener;

struct Running {
    _w: Written,
    daemon: Daemon,
    base: String,
    client: reqwest::Client,
}

impl Running {
    async fn start(fixture: &Fixture, opts: BuildOptions) -> Running {
        let w = write(fixture);
        let instance = Instance::build(&load(&w), &opts, Journal::new()).unwrap();
        let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
        let daemon = Daemon::start(instance, listener).await.unwrap();
        let base = format!("http://{}", daemon.addr);
        Running {
            _w: w,
            daemon,
            base,
            client: reqwest::Client::new(),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> (StatusCode, T) {
        let resp = self.client.get(self.url(path)).send().await.unwrap();
        (resp.status(), resp.json().await.unwrap())
    }

    async fn post<T: DeserializeOwned>(&self, path: &str, body: Option<serde_json::Value>) -> (StatusCode, T) {
        let mut req = self.client.post(self.url(path));
        if let Some(b) = body {
            req = req.json(&b);
        }
        let resp = req.send().await.unwrap();
        (resp.status(), resp.json().await.unwrap())
    }

    /// Waits until the replay has consumed its schedule.
    async fn settle(&self) {
        let mut last = u64::MAX;
        for _ in 0..400 {
            let seq = self.daemon.handle.snapshot().seq;
            if seq == last && self.daemon.handle.snapshot().ranking.is_some() {
                return;
            }
            last = seq;
            tokio::time::sleep(Duration::from_millis(25)).await;
        }
        panic!("replay did not settle");
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn read_endpoints_reflect_the_replay() {
    let r = Running::start(&scenario::cost_focus(), fresh()).await;
    r.settle().await;

    let (status, chains): (_, Vec<ChainStatus>) = r.get("/v1/chains").await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<&str> = chains.iter().map(|c| c.descriptor.id.as_str()).collect();
    assert_eq!(ids, ["bitcoin", "ethereum", "ethereum-classic", "expanse"]);
    assert!(chains
        .iter()
        .find(|c| c.active)
        .is_some_and(|c| c.descriptor.id == id("ethereum")));
    assert!(chains.iter().all(|c| c.block_count > 0 && !c.stale));

    let (_, metrics): (_, Vec<MetricVector>) = r.get("/v1/metrics").await;
    assert_eq!(metrics.len(), 4);
    assert_eq!(metrics[3].m3_exchange_rate_usd.to_string(), "0.34");

    let (status, ranking): (_, RankingResult) = r.get("/v1/ranking").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ranking.benefits(), vec![10, 55, 60, 50]);
    assert_eq!(ranking.winner, Some(id("ethereum-classic")));

    let (_, pending): (_, Vec<SwitchoverSuggestion>) = r.get("/v1/suggestions?state=pending").await;
    assert_eq!(pending.len(), 1);
    let (_, rejected): (_, Vec<SwitchoverSuggestion>) = r.get("/v1/suggestions?state=rejected").await;
    assert!(rejected.is_empty());
    let (status, err): (_, ErrorBody) = r.get("/v1/suggestions?state=sideways").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(err.error.contains("sideways"));

    let (_, policy): (_, serde_json::Value) = r.get("/v1/policy").await;
    let parsed = RankingPolicy::from_json(&policy.to_string()).unwrap();
    assert_eq!(parsed, scenario::cost_focus_policy());

    let resp = r.client.get(r.url("/v1/nowhere")).send().await.unwrap();
    assert_eq!(resp.status(), StatusCode::NOT_FOUND);
    r.daemon.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn records_approval_and_transfer() {
    let r = Running::start(&scenario::cost_focus(), fresh()).await;
    r.settle().await;

    let payload = b"sensor reading 42".to_vec();
    let (status, receipt): (_, WriteReceipt) = r
        .post("/v1/records", Some(json!({ "payload": BASE64.encode(&payload) })))
        .await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(receipt.chain, id("ethereum"));
    assert_eq!(receipt.carriers, 1);

    let (_, records): (_, Vec<RecordView>) = r.get("/v1/records").await;
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].payload_bytes().unwrap(), payload);
    assert_eq!(records[0].record_id, receipt.record_id);

    for bad in [
        json!({ "payload": "***" }),
        json!({ "payload": "" }),
        json!({ "payload": "aGk=", "colour": "red" }),
        json!({ "fee": 3 }),
    ] {
        let (status, err): (_, ErrorBody) = r.post("/v1/records", Some(bad.clone())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad}: {}", err.error);
    }

    let (status, done): (_, SwitchoverSuggestion) = r.post("/v1/suggestions/1/approve", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(done.state, SuggestionState::Executed);
    assert_eq!(done.report.unwrap().records_copied, 1);

    let (_, moved): (_, Vec<RecordView>) = r.get("/v1/records?chain=ethereum-classic").await;
    assert_eq!(moved.len(), 1);
    assert_eq!(moved[0].payload_bytes().unwrap(), payload);
    let (_, original): (_, Vec<RecordView>) = r.get("/v1/records?chain=ethereum").await;
    assert_eq!(original, records);
    let (_, chains): (_, Vec<ChainStatus>) = r.get("/v1/chains").await;
    assert!(chains
        .iter()
        .find(|c| c.active)
        .is_some_and(|c| c.descriptor.id == id("ethereum-classic")));

    let (status, _): (_, ErrorBody) = r.post("/v1/suggestions/1/approve", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _): (_, ErrorBody) = r.post("/v1/suggestions/1/reject", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _): (_, ErrorBody) = r.post("/v1/suggestions/99/approve", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _): (_, ErrorBody) = r.post("/v1/suggestions/abc/reject", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (status, _): (_, ErrorBody) = r.get("/v1/records?chain=nowhere").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _): (_, ErrorBody) = r.get("/v1/records?from=yesterday").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _): (_, ErrorBody) = r
        .get("/v1/records?from=2018-10-09T00:00:00Z&to=2018-10-08T00:00:00Z")
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, empty): (_, Vec<RecordView>) = r
        .get("/v1/records?from=2018-01-01T00:00:00Z&to=2018-01-02T00:00:00Z")
        .await;
    assert_eq!(status, StatusCode::OK);
    assert!(empty.is_empty());

    let engine = r.daemon.stop().await;
    assert_eq!(engine.active(), Some(&id("ethereum-classic")));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn reject_and_policy_update() {
    let r = Running::start(&scenario::relaxed_latency(), fresh()).await;
    r.settle().await;
    let (status, s): (_, SwitchoverSuggestion) = r.post("/v1/suggestions/1/reject", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(s.state, SuggestionState::Rejected);
    assert_eq!(s.to, id("expanse"));

    let before = r.daemon.handle.snapshot().policy_version;
    let body = scenario::balanced_policy().to_json_pretty();
    let resp = r.client.put(r.url("/v1/policy")).body(body).send().await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let after = r.daemon.handle.snapshot();
    assert_eq!(after.policy_version, before + 1);
    assert_eq!(after.policy, scenario::balanced_policy());
    assert_eq!(after.ranking.as_ref().unwrap().benefits(), vec![70, 95, 80, 60]);

    for bad in ["{", r#"{"weights": {"m1": 9}}"#, "not json at all"] {
        let resp = r.client.put(r.url("/v1/policy")).body(bad).send().await.unwrap();
        assert_eq!(resp.status(), StatusCode::BAD_REQUEST, "{bad}");
        let err: ErrorBody = resp.json().await.unwrap();
        assert!(!err.error.is_empty());
    }
    assert_eq!(r.daemon.handle.snapshot().policy_version, before + 1);
    r.daemon.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn writes_need_an_active_chain() {
    let f = scenario::baseline_selection();
    let empty = tempfile::NamedTempFile::new().unwrap();
    let opts = chainsel::gateway::BuildOptions {
        trace: Some(empty.path().to_path_buf()),
        ..fresh()
    };
    let r = Running::start(&f, opts).await;
    r.settle().await;
    let (_, ranking): (_, RankingResult) = r.get("/v1/ranking").await;
    assert_eq!(ranking.winner, None);
    let (status, err): (_, ErrorBody) = r.post("/v1/records", Some(json!({ "payload": "aGk=" }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(err.error.contains("active"), "{}", err.error);
    let (status, _): (_, ErrorBody) = r.get("/v1/records").await;
    assert_eq!(status, StatusCode::CONFLICT);
    r.daemon.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn event_stream_reports_writes() {
    let r = Running::start(&scenario::cost_focus(), fresh()).await;
    r.settle().await;
    let mut stream = r.client.get(r.url("/v1/events")).send().await.unwrap();
    assert_eq!(stream.status(), StatusCode::OK);
    assert_eq!(stream.headers()["content-type"], "text/event-stream");

    let (status, receipt): (_, WriteReceipt) = r.post("/v1/records", Some(json!({ "payload": "aGk=" }))).await;
    assert_eq!(status, StatusCode::CREATED);

    let mut text = String::new();
    let found = tokio::time::timeout(Duration::from_secs(5), async {
        while let Some(chunk) = stream.chunk().await.unwrap() {
            text.push_str(&String::from_utf8_lossy(&chunk));
            if text.contains("event: record") {
                return true;
            }
        }
        false
    })
    .await
    .unwrap_or(false);
    assert!(found, "no record event in {text:?}");
    let data = text
        .lines()
        .skip_while(|l| *l != "event: record")
        .find_map(|l| l.strip_prefix("data: "))
        .unwrap();
    let event: serde_json::Value = serde_json::from_str(data).unwrap();
    assert_eq!(event["kind"], "record");
    assert_eq!(event["chain"], "ethereum");
    assert!(event["detail"]
        .as_str()
        .unwrap()
        .starts_with(&receipt.record_id.to_string()));
    drop(stream);
    r.daemon.stop().await;
}
