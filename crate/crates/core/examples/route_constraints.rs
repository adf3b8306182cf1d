//! The Northstar case: a pinned-snapshot policy against the receipt that
//! silently resolved to a newer snapshot, plus the diff between both answers.
//!
//!     cargo run -p route-receipt --example route_constraints

use route_receipt::parse_receipt;
use route_receipt::policy::{diff, evaluate, ConstraintPolicy};

const GOLDEN: &str = include_str!("../fixtures/golden/golden_s7.json");
const POLICY: &str = include_str!("../fixtures/golden/northstar_policy.json");

fn main() {
    let policy = ConstraintPolicy::from_json(POLICY).unwrap();
    let after = parse_receipt(GOLDEN).unwrap();

    for v in evaluate(&after, &policy) {
        println!("{}", serde_json::to_string(&v).unwrap());
    }

    let mut before = after.clone();
    before.resolved_model = Some("contract-pro-2026-03-02".into());
    before.receipt_id = "rr-00000000000000000000000000000001".into();
    println!("before violations: {}", evaluate(&before, &policy).len());

    let d = diff(&before, &after);
    let mut renumbered = before.clone();
    renumbered.receipt_id = after.receipt_id.clone();
    println!("envelope-only change material: {}", diff(&renumbered, &before).material);
    println!("material change: {}", d.material);
    for c in &d.changed_fields {
        let show = |v: &Option<serde_json::Value>| v.as_ref().map_or("absent".to_owned(), |v| v.to_string());
        println!(
            "  {}: {} -> {}",
            c.field_path,
            show(&c.left_value),
            show(&c.right_value)
        );
    }
}
