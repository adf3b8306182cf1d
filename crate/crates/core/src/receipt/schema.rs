//! The embedded v0.1 receipt schema.

use std::sync::OnceLock;

use serde_json::Value;

const SCHEMA_TEXT: &str = include_str!("schema.v0.1.json");

/// The v0.1 JSON Schema (draft 2020-12) text, exactly as published.
pub fn export_schema() -> &'static str {
    SCHEMA_TEXT
}

/// Parsed form of [`export_schema`], shared by the validator.
pub fn schema_value() -> &'static Value {
    static PARSED: OnceLock<Value> = OnceLock::new();
    PARSED.get_or_init(|| serde_json::from_str(SCHEMA_TEXT).expect("embedded schema is valid JSON"))
}
