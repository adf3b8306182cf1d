//! Appends receipts to a disk store, aggregates them, exports an auditor
//! view and enforces retention.
//!
//!     cargo run -p route-receipt --example receipt_store

use route_receipt::receipt::{RetentionClass, Timestamp};
use route_receipt::redact::RedactionPolicy;
use route_receipt::store::{Metric, ReceiptFilter, ReceiptStore};
use route_receipt::{parse_receipt, Audience};

const GOLDEN: &str = include_str!("../fixtures/golden/golden_s7.json");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let store = ReceiptStore::open(dir.path().join("receipts"))?;

    let base = parse_receipt(GOLDEN)?;
    let snapshots = ["contract-pro-2026-03-02", "contract-pro-2026-04-18"];
    for i in 0..6u32 {
        let mut r = base.clone();
        r.receipt_id = format!("rr-{i:032x}");
        r.served_at = format!("2026-06-15T14:0{i}:00Z").parse()?;
        r.resolved_model = Some(snapshots[(i / 3) as usize].into());
        if i == 0 {
            r.retention_class = Some(RetentionClass::Ephemeral);
        }
        let at = store.append(&r)?;
        println!("appended {} at {}", r.receipt_id, at.position);
    }

    let report = store.aggregate(Metric::AliasResolutionHistogram, &ReceiptFilter::default());
    println!("{}", serde_json::to_string(&report)?);

    let mut out = Vec::new();
    let n = store.export_jsonl(
        &ReceiptFilter::default(),
        Audience::Auditor,
        &RedactionPolicy::open(),
        &mut out,
    )?;
    println!("exported {n} lines, {} bytes", out.len());

    let now: Timestamp = "2026-06-17T00:00:00Z".parse()?;
    let purge = store.enforce_configured_retention(&now)?;
    println!("purged {:?}; {} receipts left", purge.purged, store.len());
    Ok(())
}
