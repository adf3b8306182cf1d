//! HTTP/1.1 JSON front end.

#![allow(clippy::result_large_err)]

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use route_receipt::policy::{evaluate, ConstraintPolicy, Violation};
use route_receipt::receipt::{
    canonical_serialize, export_schema, parse_receipt_value, CompletionStatus, Timestamp, ValidationReport,
};
use route_receipt::redact::RedactionPolicy;
use route_receipt::store::{Metric, ReceiptFilter, ReceiptStore, StoreError, TimeWindow};
use route_receipt::{validate_document, Audience};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ServiceConfig;
use crate::probes::{run_alias_drift_probe, run_fallback_probe, AliasDriftProbe, FallbackProbe};
use crate::scenario::SimScenario;
use crate::service::{Gateway, GatewayError};
use crate::simulator::CompletionRequest;
use crate::upstream::SimulatedUpstream;

/// Header naming the caller's access role. Requests without it are served
/// as `end_user`.
pub const ROLE_HEADER: &str = "x-route-receipt-role";

#[derive(Clone)]
pub struct AppState {
    pub gateway: Arc<Gateway>,
    /// Scenario the probes run against.
    pub scenario: Arc<SimScenario>,
}

impl AppState {
    pub fn new(gateway: Gateway, scenario: SimScenario) -> Self {
        AppState {
            gateway: Arc::new(gateway),
            scenario: Arc::new(scenario),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/completions", post(completions))
        .route("/v1/receipts", post(ingest))
        .route("/v1/receipts/{id}", get(receipt))
        .route("/v1/receipts/{id}/labels", get(labels))
        .route("/v1/validate", post(validate))
        .route("/v1/constraints/evaluate", post(constraints))
        .route("/v1/aggregates/{metric}", get(aggregate))
        .route("/v1/probes/alias-drift", post(alias_drift))
        .route("/v1/probes/fallback", post(fallback))
        .route("/v1/schema", get(schema))
        .with_state(state)
}

fn json_text(status: StatusCode, body: String) -> Response {
    (
        status,
        [(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))],
        body,
    )
        .into_response()
}

fn json<T: Serialize>(status: StatusCode, body: &T) -> Response {
    json_text(status, serde_json::to_string(body).expect("responses serialize"))
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

fn error(status: StatusCode, message: impl ToString) -> Response {
    json(
        status,
        &ErrorBody {
            error: message.to_string(),
        },
    )
}

fn malformed(detail: impl Into<String>) -> Response {
    json(StatusCode::BAD_REQUEST, &ValidationReport::malformed(detail))
}

fn parse_json(body: &Bytes) -> Result<Value, Response> {
    serde_json::from_slice(body).map_err(|e| malformed(format!("not a JSON document: {e}")))
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, Response> {
    let doc = parse_json(body)?;
    serde_json::from_value(doc).map_err(|e| malformed(format!("unexpected body: {e}")))
}

fn store_error(e: StoreError) -> Response {
    match e {
        StoreError::NotFound(_) => error(StatusCode::NOT_FOUND, e),
        StoreError::Purged(tombstone) => json(StatusCode::GONE, &tombstone),
        StoreError::Duplicate(_) => error(StatusCode::CONFLICT, e),
        StoreError::Invalid(report) => json(StatusCode::UNPROCESSABLE_ENTITY, &report),
        StoreError::ReadOnly => error(StatusCode::SERVICE_UNAVAILABLE, e),
        other => error(StatusCode::INTERNAL_SERVER_ERROR, other),
    }
}

fn gateway_error(e: GatewayError) -> Response {
    match e {
        GatewayError::Store(e) => store_error(e),
        other => error(StatusCode::BAD_GATEWAY, other),
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    tokio::task::spawn_blocking(f).await.expect("blocking task panicked")
}

async fn completions(State(state): State<AppState>, body: Bytes) -> Response {
    let req: CompletionRequest = match parse_body(&body) {
        Ok(req) => req,
        Err(resp) => return resp,
    };
    let gateway = state.gateway.clone();
    match blocking(move || gateway.handle_completion(req)).await {
        Ok(exchange) if exchange.receipt.completion_status == CompletionStatus::Error => {
            json(StatusCode::BAD_GATEWAY, &exchange)
        }
        Ok(exchange) => json(StatusCode::OK, &exchange),
        Err(e) => gateway_error(e),
    }
}

#[derive(Serialize)]
struct Ingested {
    receipt_id: String,
    position: u64,
}

async fn ingest(State(state): State<AppState>, body: Bytes) -> Response {
    let doc = match parse_json(&body) {
        Ok(doc) => doc,
        Err(resp) => return resp,
    };
    let receipt = match parse_receipt_value(doc) {
        Ok(r) => r,
        Err(e) => return json(StatusCode::UNPROCESSABLE_ENTITY, e.report()),
    };
    let gateway = state.gateway.clone();
    let receipt_id = receipt.receipt_id.clone();
    match blocking(move || gateway.store().append(&receipt)).await {
        Ok(at) => json(
            StatusCode::CREATED,
            &Ingested {
                receipt_id,
                position: at.position,
            },
        ),
        Err(e) => store_error(e),
    }
}

fn audience_for(headers: &HeaderMap, query: &HashMap<String, String>) -> Result<Audience, Response> {
    let role = match headers.get(ROLE_HEADER) {
        None => Audience::EndUser,
        Some(v) => v
            .to_str()
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| error(StatusCode::BAD_REQUEST, format!("bad {ROLE_HEADER} header")))?,
    };
    let requested = match query.get("audience") {
        None => role,
        Some(a) => a.parse().map_err(|e| error(StatusCode::BAD_REQUEST, e))?,
    };
    if requested > role {
        return Err(error(
            StatusCode::FORBIDDEN,
            format!("role {role} may not read the {requested} view"),
        ));
    }
    Ok(requested)
}

async fn receipt(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
    headers: HeaderMap,
) -> Response {
    let audience = match audience_for(&headers, &query) {
        Ok(a) => a,
        Err(resp) => return resp,
    };
    match state.gateway.view(&id, audience) {
        Ok(view) => json_text(StatusCode::OK, canonical_serialize(&view.receipt)),
        Err(e) => store_error(e),
    }
}

async fn labels(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    match state.gateway.labels(&id) {
        Ok(labels) => json(StatusCode::OK, &labels),
        Err(e) => store_error(e),
    }
}

async fn validate(body: Bytes) -> Response {
    let text = match std::str::from_utf8(&body) {
        Ok(t) => t,
        Err(_) => return malformed("body is not UTF-8"),
    };
    if let Err(resp) = parse_json(&body) {
        return resp;
    }
    let report = validate_document(text);
    let status = if report.is_valid() {
        StatusCode::OK
    } else {
        StatusCode::UNPROCESSABLE_ENTITY
    };
    json(status, &report)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvaluateBody {
    receipt: Value,
    policy: Value,
}

#[derive(Serialize)]
struct Evaluation {
    violations: Vec<Violation>,
}

async fn constraints(body: Bytes) -> Response {
    let EvaluateBody { receipt, policy } = match parse_body(&body) {
        Ok(b) => b,
        Err(resp) => return resp,
    };
    let receipt = match parse_receipt_value(receipt) {
        Ok(r) => r,
        Err(e) => return json(StatusCode::UNPROCESSABLE_ENTITY, e.report()),
    };
    let policy: ConstraintPolicy = match serde_json::from_value(policy) {
        Ok(p) => p,
        Err(e) => return malformed(format!("bad constraint policy: {e}")),
    };
    json(
        StatusCode::OK,
        &Evaluation {
            violations: evaluate(&receipt, &policy),
        },
    )
}

fn timestamp(query: &HashMap<String, String>, key: &str) -> Result<Option<Timestamp>, Response> {
    query
        .get(key)
        .map(|t| {
            t.parse()
                .map_err(|e| error(StatusCode::BAD_REQUEST, format!("{key}: {e}")))
        })
        .transpose()
}

async fn aggregate(
    State(state): State<AppState>,
    Path(metric): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> Response {
    let metric: Metric = match metric.parse() {
        Ok(m) => m,
        Err(e) => return error(StatusCode::NOT_FOUND, e),
    };
    let window = match (timestamp(&query, "from"), timestamp(&query, "to")) {
        (Ok(from), Ok(to)) => match TimeWindow::new(from, to) {
            Ok(w) => w,
            Err(e) => return error(StatusCode::BAD_REQUEST, e),
        },
        (Err(resp), _) | (_, Err(resp)) => return resp,
    };
    let mut filter = ReceiptFilter::in_window(window);
    filter.requested_model = query.get("requested_model").cloned();
    json(StatusCode::OK, &state.gateway.store().aggregate(metric, &filter))
}

async fn alias_drift(State(state): State<AppState>, body: Bytes) -> Response {
    let probe: AliasDriftProbe = match parse_body(&body) {
        Ok(p) => p,
        Err(resp) => return resp,
    };
    let scenario = state.scenario.clone();
    match blocking(move || run_alias_drift_probe(&probe, &scenario)).await {
        Ok(report) => json(StatusCode::OK, &report),
        Err(e) => error(StatusCode::UNPROCESSABLE_ENTITY, e),
    }
}

async fn fallback(State(state): State<AppState>, body: Bytes) -> Response {
    let probe: FallbackProbe = match parse_body(&body) {
        Ok(p) => p,
        Err(resp) => return resp,
    };
    let scenario = state.scenario.clone();
    let gateway = state.gateway.clone();
    match blocking(move || run_fallback_probe(&probe, &scenario, gateway.policy())).await {
        Ok(report) => json(StatusCode::OK, &report),
        Err(e) => error(StatusCode::UNPROCESSABLE_ENTITY, e),
    }
}

async fn schema() -> Response {
    json_text(StatusCode::OK, export_schema().to_owned())
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Scenario(#[from] crate::scenario::ScenarioError),
    #[error("redaction policy {path}: {detail}")]
    Policy { path: String, detail: String },
    #[error("cannot listen on {addr}: {source}")]
    Listen {
        addr: std::net::SocketAddr,
        source: std::io::Error,
    },
}

/// Wires a gateway over the simulated provider from `config`.
pub fn build(config: &ServiceConfig) -> Result<AppState, ServeError> {
    let scenario = match &config.scenario_path {
        Some(path) => SimScenario::load(path)?,
        None => SimScenario::default(),
    };
    let policy = match &config.policy_path {
        Some(path) => {
            let policy_error = |detail: String| ServeError::Policy {
                path: path.display().to_string(),
                detail,
            };
            let text = std::fs::read_to_string(path).map_err(|e| policy_error(e.to_string()))?;
            RedactionPolicy::from_json(&text).map_err(|e| policy_error(e.to_string()))?
        }
        None => RedactionPolicy::default_policy(),
    };
    let store = ReceiptStore::from_config(&config.store)?;
    let upstream = Arc::new(SimulatedUpstream::new(scenario.clone()));
    let gateway = Gateway::new(upstream, Arc::new(store))
        .with_policy(policy)
        .with_fast_tiers(config.fast_tiers.clone());
    Ok(AppState::new(gateway, scenario))
}

/// Serves until ctrl-c.
pub async fn serve(config: &ServiceConfig) -> Result<(), ServeError> {
    let state = build(config)?;
    let listener = tokio::net::TcpListener::bind(config.listen)
        .await
        .map_err(|source| ServeError::Listen {
            addr: config.listen,
            source,
        })?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|source| ServeError::Listen {
            addr: config.listen,
            source,
        })
}
