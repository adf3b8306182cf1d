//! Receipt data model, schema validation, consistency checks and the
//! canonical wire form.

mod consistency;
mod enums;
mod model;
mod schema;
mod validate;

use serde_json::Value;

pub use consistency::{check_consistency, Warning, WarningCode};
pub use enums::*;
pub use model::*;
pub use schema::{export_schema, schema_value};
pub use validate::{schema_errors, validate_document, validate_value, ErrorKind, ValidationError, ValidationReport};

#[derive(Debug, thiserror::Error)]
pub enum ReceiptError {
    #[error("invalid receipt: {0}")]
    Invalid(ValidationReport),
}

impl ReceiptError {
    pub fn report(&self) -> &ValidationReport {
        match self {
            ReceiptError::Invalid(report) => report,
        }
    }
}

/// Parses receipt text, rejecting anything with schema errors.
pub fn parse_receipt(text: &str) -> Result<RouteReceipt, ReceiptError> {
    match serde_json::from_str::<Value>(text) {
        Ok(doc) => parse_receipt_value(doc),
        Err(e) => Err(ReceiptError::Invalid(ValidationReport::malformed(format!(
            "not a JSON document: {e}"
        )))),
    }
}

pub fn parse_receipt_value(doc: Value) -> Result<RouteReceipt, ReceiptError> {
    let report = schema_errors(&doc);
    if !report.is_valid() {
        return Err(ReceiptError::Invalid(report));
    }
    serde_json::from_value(doc)
        .map_err(|e| ReceiptError::Invalid(ValidationReport::malformed(format!("does not map onto a receipt: {e}"))))
}

/// Canonical text: compact JSON, known fields in schema order, keys inside
/// `provider_extensions` sorted lexicographically.
pub fn canonical_serialize(r: &RouteReceipt) -> String {
    serde_json::to_string(r).expect("receipts always serialize")
}

/// Parses and re-serializes a document into canonical form.
pub fn canonicalize(text: &str) -> Result<String, ReceiptError> {
    parse_receipt(text).map(|r| canonical_serialize(&r))
}

/// Compact JSON with every object's keys sorted, for documents without a
/// schema-defined order.
pub fn canonical_json(value: &Value) -> String {
    // serde_json's default map is ordered by key
    serde_json::to_string(value).expect("values always serialize")
}

/// Resolves a dotted field path such as `fallback.from` inside a serialized
/// receipt.
pub fn lookup_field<'a>(doc: &'a Value, dotted: &str) -> Option<&'a Value> {
    dotted
        .split('.')
        .try_fold(doc, |node, segment| node.as_object()?.get(segment))
}
