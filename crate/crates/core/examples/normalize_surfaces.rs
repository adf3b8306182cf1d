//! Extracts a fragment from every bundled provider surface and merges the
//! priority-tier one into a full receipt.
//!
//!     cargo run -p route-receipt --example normalize_surfaces

use route_receipt::canonical_serialize;
use route_receipt::normalize::{extract_fragment, merge, Envelope, ProviderSurface};
use serde_json::Value;

const ENVELOPE: &str = include_str!("../fixtures/golden/envelope_minimal.json");

fn raw(surface: ProviderSurface) -> Value {
    let text = match surface {
        ProviderSurface::OpenaiPriority => include_str!("../fixtures/surfaces/openai_priority.json"),
        ProviderSurface::AnthropicTiers => include_str!("../fixtures/surfaces/anthropic_tiers.json"),
        ProviderSurface::BedrockTiers => include_str!("../fixtures/surfaces/bedrock_tiers.json"),
        ProviderSurface::OpenaiWebSearch => include_str!("../fixtures/surfaces/openai_web_search.json"),
        ProviderSurface::OpenrouterFallback => include_str!("../fixtures/surfaces/openrouter_fallback.json"),
        ProviderSurface::Simulated => include_str!("../fixtures/surfaces/simulated.json"),
    };
    serde_json::from_str(text).unwrap()
}

fn main() {
    for &surface in ProviderSurface::ALL {
        let fragment = extract_fragment(surface, &raw(surface)).expect("bundled surface extracts");
        println!("{surface:<20} {}", fragment.partial.canonical());
    }

    let envelope: Envelope = serde_json::from_str(ENVELOPE).unwrap();
    let fragment = extract_fragment(ProviderSurface::OpenaiPriority, &raw(ProviderSurface::OpenaiPriority)).unwrap();
    let merged = merge(&envelope, &[fragment]).expect("merge");
    println!();
    println!("{}", canonical_serialize(&merged.receipt));
    for w in &merged.warnings {
        println!("warning: {w:?}");
    }
}
