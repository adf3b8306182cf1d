//! Renders the full fixture receipt for each audience under the default
//! redaction policy, then the end-user labels.
//!
//!     cargo run -p route-receipt --example audience_views

use route_receipt::redact::{end_user_labels_with, view_for, LabelContext, RedactionPolicy};
use route_receipt::{canonical_serialize, parse_receipt, Audience};

const FULL: &str = include_str!("../fixtures/golden/full.json");

fn main() {
    let receipt = parse_receipt(FULL).unwrap();
    let policy = RedactionPolicy::default_policy();

    for &audience in Audience::ALL {
        let view = view_for(&receipt, audience, &policy);
        let text = canonical_serialize(&view.receipt);
        println!("{audience:<13} {:>5} bytes  {text}", text.len());
    }

    let ctx = LabelContext {
        previous_resolved_model: Some("contract-pro-2026-03-02".into()),
        fast_tiers: vec![],
    };
    println!();
    for label in end_user_labels_with(&receipt, &ctx) {
        println!("{label}");
    }
}
