//! Black-box probes against the simulator: alias drift over 100 requests and
//! fallback visibility under scheduled failures.
//!
//!     cargo run -p route-receipt-gateway --example probes

use route_receipt::redact::RedactionPolicy;
use route_receipt_gateway::probes::{
    run_alias_drift_probe, run_fallback_probe, AliasDriftProbe, FallbackProbe, FallbackTrigger, TriggerKind,
};
use route_receipt_gateway::SimScenario;

const DRIFT: &str = include_str!("../fixtures/scenarios/drift_30_70.json");
const CHAIN: &str = include_str!("../fixtures/scenarios/chain.json");

fn main() {
    let drift = SimScenario::from_json(DRIFT).unwrap();
    let probe = AliasDriftProbe {
        aliases: vec!["contract-pro-latest".into()],
        prompts: vec!["summarize the filing".into()],
        n: 100,
    };
    let report = run_alias_drift_probe(&probe, &drift).unwrap();
    println!("{}", serde_json::to_string_pretty(&report).unwrap());

    let chain = SimScenario::from_json(CHAIN).unwrap();
    let probe = FallbackProbe {
        triggers: vec![
            FallbackTrigger {
                kind: TriggerKind::RateLimit,
                request_index: 0,
            },
            FallbackTrigger {
                kind: TriggerKind::ProviderError,
                request_index: 1,
            },
            FallbackTrigger {
                kind: TriggerKind::UnavailableModel,
                request_index: 2,
            },
        ],
        model: None,
        audience: route_receipt::Audience::Developer,
    };
    let report = run_fallback_probe(&probe, &chain, &RedactionPolicy::default_policy()).unwrap();
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
}
