//! Typed receipt model.
//!
//! Field declaration order matches the schema's property order; canonical
//! serialization relies on it.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use rand::RngCore;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use super::enums::*;

/// The only accepted `schema_version`.
pub const SCHEMA_VERSION: &str = "route-receipt.v0.1";

/// Canonical location of the v0.1 schema.
pub const SCHEMA_ID: &str = "https://routereceipt.org/schemas/route-receipt/v0.1/schema.json";

/// A UTC instant that remembers the exact text it was parsed from.
///
/// Receipts must round-trip byte-for-byte, so the original rendering is
/// kept; ordering and equality use the instant first.
#[derive(Clone)]
pub struct Timestamp {
    raw: String,
    instant: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TimestampError {
    #[error("`{0}` is not an RFC 3339 date-time")]
    Malformed(String),
    #[error("`{0}` must be UTC with a `Z` offset")]
    NotUtc(String),
}

impl Timestamp {
    /// Renders `instant` with second precision, or finer when it carries
    /// sub-second digits.
    pub fn from_datetime(instant: DateTime<Utc>) -> Self {
        let raw = instant.to_rfc3339_opts(SecondsFormat::AutoSi, true);
        Timestamp { raw, instant }
    }

    pub fn as_str(&self) -> &str {
        &self.raw
    }

    pub fn instant(&self) -> DateTime<Utc> {
        self.instant
    }
}

impl FromStr for Timestamp {
    type Err = TimestampError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = s.as_bytes();
        if bytes.len() < 20 || bytes[10] != b'T' {
            return Err(TimestampError::Malformed(s.to_owned()));
        }
        let parsed = DateTime::parse_from_rfc3339(s).map_err(|_| TimestampError::Malformed(s.to_owned()))?;
        if !s.ends_with('Z') {
            return Err(TimestampError::NotUtc(s.to_owned()));
        }
        Ok(Timestamp {
            raw: s.to_owned(),
            instant: parsed.with_timezone(&Utc),
        })
    }
}

impl fmt::Debug for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Timestamp({})", self.raw)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl PartialEq for Timestamp {
    fn eq(&self, other: &Self) -> bool {
        self.raw == other.raw
    }
}

impl Eq for Timestamp {}

impl PartialOrd for Timestamp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Timestamp {
    fn cmp(&self, other: &Self) -> Ordering {
        self.instant.cmp(&other.instant).then_with(|| self.raw.cmp(&other.raw))
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.raw)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Mints a fresh receipt id: 128 random bits as lowercase hex behind `rr-`.
pub fn new_receipt_id() -> String {
    receipt_id_from(&mut rand::thread_rng())
}

/// Same as [`new_receipt_id`] with a caller-supplied generator.
pub fn receipt_id_from<R: RngCore + ?Sized>(rng: &mut R) -> String {
    let mut bytes = [0u8; 16];
    rng.fill_bytes(&mut bytes);
    let mut id = String::with_capacity(35);
    id.push_str("rr-");
    for b in bytes {
        id.push_str(&format!("{b:02x}"));
    }
    id
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceTierRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requested: Option<String>,
    pub effective: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub change_reason: Option<TierChangeReason>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffortRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requested: Option<EffortLevel>,
    pub effective_status: EffortStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolUse {
    pub name: String,
    pub invocation_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result_refs: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub redacted: Option<bool>,
}

impl ToolUse {
    pub fn new(name: impl Into<String>, invocation_count: u64) -> Self {
        ToolUse {
            name: name.into(),
            invocation_count,
            result_refs: None,
            redacted: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrievalSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_classes: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieved_item_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub redacted: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolsRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed: Option<Vec<String>>,
    pub used: Vec<ToolUse>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieval_summary: Option<RetrievalSummary>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextRecord {
    pub input_truncated: InputTruncated,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieved_item_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_window_class: Option<ContextWindowClass>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FallbackRecord {
    pub status: FallbackStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<FallbackReason>,
}

impl FallbackRecord {
    pub fn with_status(status: FallbackStatus) -> Self {
        FallbackRecord {
            status,
            from: None,
            to: None,
            reason: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafetyRecord {
    pub status: SafetyStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visible_action: Option<SafetyAction>,
}

impl SafetyRecord {
    pub fn with_status(status: SafetyStatus) -> Self {
        SafetyRecord {
            status,
            category: None,
            visible_action: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderHop {
    pub role: HopRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub redacted: Option<bool>,
}

/// Bookkeeping that a field was hidden or generalized, and for whom it is
/// still visible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RedactionEntry {
    pub field: String,
    pub reason: RedactionReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visible_to: Option<Vec<Audience>>,
}

impl RedactionEntry {
    pub fn not_collected(field: impl Into<String>) -> Self {
        RedactionEntry {
            field: field.into(),
            reason: RedactionReason::NotCollected,
            visible_to: None,
        }
    }

    /// Whether this entry says the field is visible to `audience`. An entry
    /// without `visible_to` hides the field from everyone.
    pub fn is_visible_to(&self, audience: Audience) -> bool {
        self.visible_to.as_ref().is_some_and(|v| v.contains(&audience))
    }
}

/// One per-answer route receipt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteReceipt {
    pub schema_version: String,
    pub receipt_id: String,
    pub request_id: String,
    pub served_at: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requested_model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved_model: Option<String>,
    pub model_identifier_type: ModelIdentifierType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service_tier: Option<ServiceTierRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effort: Option<EffortRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tools: Option<ToolsRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<ContextRecord>,
    pub fallback: FallbackRecord,
    pub safety: SafetyRecord,
    pub region_class: RegionClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider_chain: Option<Vec<ProviderHop>>,
    pub completion_status: CompletionStatus,
    pub redactions: Vec<RedactionEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retention_class: Option<RetentionClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider_extensions: Option<Map<String, Value>>,
}

impl RouteReceipt {
    /// A receipt carrying only the ten required fields.
    pub fn minimal(receipt_id: impl Into<String>, request_id: impl Into<String>, served_at: Timestamp) -> Self {
        RouteReceipt {
            schema_version: SCHEMA_VERSION.to_owned(),
            receipt_id: receipt_id.into(),
            request_id: request_id.into(),
            served_at,
            requested_model: None,
            resolved_model: None,
            model_identifier_type: ModelIdentifierType::Unknown,
            service_tier: None,
            effort: None,
            tools: None,
            context: None,
            fallback: FallbackRecord::with_status(FallbackStatus::Unknown),
            safety: SafetyRecord::with_status(SafetyStatus::Unknown),
            region_class: RegionClass::Unknown,
            provider_chain: None,
            completion_status: CompletionStatus::Unknown,
            redactions: Vec::new(),
            retention_class: None,
            provider_extensions: None,
        }
    }

    /// Convenience accessor for the tools actually used.
    pub fn tools_used(&self) -> &[ToolUse] {
        self.tools.as_ref().map(|t| t.used.as_slice()).unwrap_or(&[])
    }

    pub fn effective_tier(&self) -> Option<&str> {
        self.service_tier.as_ref().map(|t| t.effective.as_str())
    }
}
