//! Validates the Northstar receipt and a copy with `redactions` deleted.
//!
//!     cargo run -p route-receipt --example validate_receipt

use route_receipt::{canonical_serialize, parse_receipt, validate_document};

const GOLDEN: &str = include_str!("../fixtures/golden/golden_s7.json");
const BROKEN: &str = include_str!("../fixtures/golden/broken_missing_redactions.json");

fn main() {
    let report = validate_document(GOLDEN);
    println!("golden: valid={} warnings={}", report.is_valid(), report.warnings.len());

    let receipt = parse_receipt(GOLDEN).expect("golden receipt parses");
    let canonical = canonical_serialize(&receipt);
    println!("canonical form is {} bytes", canonical.len());
    assert_eq!(canonical, canonical_serialize(&parse_receipt(&canonical).unwrap()));

    let report = validate_document(BROKEN);
    println!("broken: valid={}", report.is_valid());
    print!("{report}");
}
