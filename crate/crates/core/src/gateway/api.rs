//! HTTP API. Reads come from the latest published snapshot; mutations are
//! queued to the engine actor.

use std::convert::Infallible;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use futures::{Stream, StreamExt};
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use tokio_stream::wrappers::BroadcastStream;

use super::daemon::EngineHandle;
use super::engine::{ChainStatus, EngineError};
use crate::chain::{ChainId, DataRecord, RecordId};
use crate::metrics::MetricVector;
use crate::num::opt_decimal_number;
use crate::proxy::ProxyError;
use crate::selection::{RankingPolicy, RankingResult};
use crate::switchover::{SuggestionState, SwitchoverError, SwitchoverSuggestion};
use crate::time::{DateRange, Timestamp};

/// Error body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError(StatusCode::BAD_REQUEST, message.into())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(ErrorBody { error: self.1 })).into_response()
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let status = match &e {
            EngineError::InvalidPayload | EngineError::Policy(_) | EngineError::Chain(_) => StatusCode::BAD_REQUEST,
            EngineError::UnknownChain(_) | EngineError::Switchover(SwitchoverError::UnknownSuggestion(_)) => {
                StatusCode::NOT_FOUND
            }
            EngineError::NoActiveChain | EngineError::Switchover(SwitchoverError::IllegalTransition { .. }) => {
                StatusCode::CONFLICT
            }
            EngineError::Proxy(ProxyError::Unavailable(_)) | EngineError::Stopped => StatusCode::SERVICE_UNAVAILABLE,
            EngineError::Proxy(ProxyError::Codec(_) | ProxyError::Cost(_)) => StatusCode::BAD_REQUEST,
            EngineError::Proxy(_) | EngineError::DuplicateChain(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Request body of `POST /v1/records`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WriteRequest {
    /// Base64 payload.
    pub payload: String,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_decimal_number")]
    pub fee: Option<Decimal>,
}

/// A stored record as the API returns it; the payload is base64.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordView {
    pub record_id: RecordId,
    pub payload: String,
    pub created_at: Timestamp,
    pub chain_of_record: ChainId,
    pub inclusion_time: Option<Timestamp>,
}

impl From<DataRecord> for RecordView {
    fn from(r: DataRecord) -> Self {
        RecordView {
            record_id: r.record_id,
            payload: BASE64.encode(&r.payload),
            created_at: r.created_at,
            chain_of_record: r.chain_of_record,
            inclusion_time: r.inclusion_time,
        }
    }
}

impl RecordView {
    pub fn payload_bytes(&self) -> Result<Vec<u8>, base64::DecodeError> {
        BASE64.decode(&self.payload)
    }
}

#[derive(Debug, Default, Deserialize)]
struct StateFilter {
    state: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
struct RecordsQuery {
    from: Option<String>,
    to: Option<String>,
    chain: Option<String>,
}

pub fn router(handle: EngineHandle) -> Router {
    Router::new()
        .route("/v1/chains", get(chains))
        .route("/v1/metrics", get(metrics))
        .route("/v1/ranking", get(ranking))
        .route("/v1/suggestions", get(suggestions))
        .route("/v1/suggestions/{id}/approve", post(approve))
        .route("/v1/suggestions/{id}/reject", post(reject))
        .route("/v1/policy", get(policy).put(put_policy))
        .route("/v1/records", get(read_records).post(write_record))
        .route("/v1/events", get(events))
        .with_state(handle)
}

async fn chains(State(h): State<EngineHandle>) -> Json<Vec<ChainStatus>> {
    Json(h.snapshot().chains.clone())
}

async fn metrics(State(h): State<EngineHandle>) -> Json<Vec<MetricVector>> {
    Json(h.snapshot().metrics.clone())
}

async fn ranking(State(h): State<EngineHandle>) -> ApiResult<Json<RankingResult>> {
    h.snapshot()
        .ranking
        .clone()
        .map(Json)
        .ok_or_else(|| ApiError(StatusCode::SERVICE_UNAVAILABLE, "no ranking computed yet".into()))
}

async fn suggestions(
    State(h): State<EngineHandle>,
    Query(filter): Query<StateFilter>,
) -> ApiResult<Json<Vec<SwitchoverSuggestion>>> {
    let state = match filter.state.as_deref() {
        None | Some("") => None,
        Some(s) => Some(s.parse::<SuggestionState>().map_err(ApiError::bad_request)?),
    };
    let snapshot = h.snapshot();
    Ok(Json(
        snapshot
            .suggestions
            .iter()
            .filter(|s| state.is_none_or(|st| s.state == st))
            .cloned()
            .collect(),
    ))
}

fn parse_id(raw: &str) -> ApiResult<u64> {
    raw.parse()
        .map_err(|_| ApiError(StatusCode::NOT_FOUND, format!("unknown suggestion {raw}")))
}

async fn approve(State(h): State<EngineHandle>, Path(id): Path<String>) -> ApiResult<Json<SwitchoverSuggestion>> {
    Ok(Json(h.approve(parse_id(&id)?).await?))
}

async fn reject(State(h): State<EngineHandle>, Path(id): Path<String>) -> ApiResult<Json<SwitchoverSuggestion>> {
    Ok(Json(h.reject(parse_id(&id)?).await?))
}

async fn policy(State(h): State<EngineHandle>) -> Json<RankingPolicy> {
    Json(h.snapshot().policy.clone())
}

async fn put_policy(State(h): State<EngineHandle>, body: Bytes) -> ApiResult<Json<RankingPolicy>> {
    let text = std::str::from_utf8(&body).map_err(|_| ApiError::bad_request("body is not UTF-8"))?;
    let policy = RankingPolicy::from_json(text).map_err(|e| ApiError::bad_request(e.to_string()))?;
    h.update_policy(policy.clone()).await?;
    Ok(Json(policy))
}

async fn write_record(State(h): State<EngineHandle>, body: Bytes) -> ApiResult<Response> {
    let req: WriteRequest = serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let payload = BASE64
        .decode(req.payload.trim())
        .map_err(|e| ApiError::bad_request(format!("payload is not base64: {e}")))?;
    let receipt = h.write_record(payload, req.fee).await?;
    Ok((StatusCode::CREATED, Json(receipt)).into_response())
}

fn parse_time(name: &str, raw: Option<&str>, default: Timestamp) -> ApiResult<Timestamp> {
    match raw {
        None | Some("") => Ok(default),
        Some(s) => Timestamp::parse(s).map_err(|e| ApiError::bad_request(format!("{name}: {e}"))),
    }
}

async fn read_records(
    State(h): State<EngineHandle>,
    Query(q): Query<RecordsQuery>,
) -> ApiResult<Json<Vec<RecordView>>> {
    let now = h.snapshot().now;
    let from = parse_time("from", q.from.as_deref(), Timestamp::EPOCH)?;
    let to = parse_time("to", q.to.as_deref(), now)?;
    let range = DateRange::new(from, to).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let chain = match q.chain.as_deref() {
        None | Some("") => None,
        Some(c) => Some(ChainId::new(c).map_err(|e| ApiError::bad_request(e.to_string()))?),
    };
    let records = h.read_records(range, chain).await?;
    Ok(Json(records.into_iter().map(RecordView::from).collect()))
}

async fn events(State(h): State<EngineHandle>) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let stream = BroadcastStream::new(h.subscribe()).filter_map(|item| async move {
        let summary = item.ok()?;
        Event::default()
            .event(summary.kind.clone())
            .json_data(&summary)
            .ok()
            .map(Ok)
    });
    Sse::new(stream).keep_alive(KeepAlive::default())
}
