//! Runs twenty completions through the gateway against the mixed scenario
//! and prints the route each one took.
//!
//!     cargo run -p route-receipt-gateway --example gateway_completion

use std::sync::Arc;

use route_receipt::store::ReceiptStore;
use route_receipt_gateway::{CompletionRequest, Gateway, IdSource, SimScenario, SimulatedUpstream, StepClock};

const MIXED: &str = include_str!("../fixtures/scenarios/mixed.json");

fn main() {
    let scenario = SimScenario::from_json(MIXED).unwrap();
    let gateway = Gateway::new(
        Arc::new(SimulatedUpstream::new(scenario)),
        Arc::new(ReceiptStore::in_memory()),
    )
    .with_clock(Arc::new(StepClock::new(
        "2026-06-15T14:00:00Z".parse().unwrap(),
        chrono::Duration::seconds(1),
    )))
    .with_ids(IdSource::seeded(7));

    for i in 0..20 {
        let mut req = CompletionRequest::new(if i % 2 == 0 { "contract-pro-latest" } else { "auto" });
        req.service_tier = Some("priority".into());
        req.tools = Some(vec!["web_search".into(), "file_search".into()]);
        let ex = gateway.handle_completion(req).expect("completion");
        let r = &ex.receipt;
        println!(
            "{:>2} {} {:<24} tier={:<8} fallback={:<8} status={}",
            ex.response.request_index,
            r.receipt_id,
            r.resolved_model.as_deref().unwrap_or("-"),
            r.effective_tier().unwrap_or("-"),
            r.fallback.status,
            r.completion_status,
        );
    }

    let id = gateway.store().query(&Default::default()).pop().unwrap();
    let labels = gateway.labels(&id).unwrap();
    println!();
    println!("labels for {id}:");
    for l in labels {
        println!("  {l}");
    }
}
