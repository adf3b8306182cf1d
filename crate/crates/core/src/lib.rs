//! Route receipts: compact per-answer records of the service path that
//! produced an AI response.
//!
//! - [`receipt`]: the data model, schema validation, consistency checks and
//!   canonical serialization.
//! - [`normalize`]: turns provider response metadata into receipt fragments
//!   and merges them into full receipts.
//! - [`redact`]: audience-scoped views and end-user labels.
//! - [`policy`]: route-constraint evaluation and receipt diffs.
//! - [`store`]: append-only receipt storage with retention, query and
//!   aggregation.

pub mod normalize;
pub mod policy;
pub mod receipt;
pub mod redact;
pub mod store;

pub use receipt::{
    canonical_serialize, check_consistency, export_schema, parse_receipt, validate_document, Audience, RouteReceipt,
    ValidationReport,
};
