//! Drives the HTTP router in process: one completion, then the receipt as
//! two different roles see it. `rr serve` runs the same router on a socket.
//!
//!     cargo run -p route-receipt-gateway --example http_service

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use route_receipt::store::ReceiptStore;
use route_receipt_gateway::http::{router, AppState, ROLE_HEADER};
use route_receipt_gateway::{Gateway, SimScenario, SimulatedUpstream};
use serde_json::{json, Value};
use tower::ServiceExt;

const NORTHSTAR: &str = include_str!("../fixtures/scenarios/northstar.json");

async fn call(app: &axum::Router, req: Request<Body>) -> (StatusCode, String) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8_lossy(&bytes).into_owned())
}

#[tokio::main]
async fn main() {
    let scenario = SimScenario::from_json(NORTHSTAR).unwrap();
    let gateway = Gateway::new(
        Arc::new(SimulatedUpstream::new(scenario.clone())),
        Arc::new(ReceiptStore::in_memory()),
    );
    let app = router(AppState::new(gateway, scenario));

    let body = json!({"model": "contract-pro-latest", "prompt": "summarize", "tools": ["file_search"]});
    let req = Request::post("/v1/completions")
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let (status, exchange) = call(&app, req).await;
    println!("POST /v1/completions -> {status}");
    let exchange: Value = serde_json::from_str(&exchange).unwrap();
    let id = exchange["response"]["receipt_id"].as_str().unwrap().to_owned();

    for role in ["end_user", "auditor"] {
        let req = Request::get(format!("/v1/receipts/{id}?audience={role}"))
            .header(ROLE_HEADER, role)
            .body(Body::empty())
            .unwrap();
        let (status, view) = call(&app, req).await;
        println!("GET as {role} -> {status}");
        println!("{view}");
    }

    let req = Request::get(format!("/v1/receipts/{id}?audience=auditor"))
        .header(ROLE_HEADER, "developer")
        .body(Body::empty())
        .unwrap();
    println!("developer asking for the auditor view -> {}", call(&app, req).await.0);
}
