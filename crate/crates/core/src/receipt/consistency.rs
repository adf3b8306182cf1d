//! Cross-field checks the schema cannot express.
//!
//! These are warnings only: a third-party receipt that contradicts itself
//! still parses, but the contradiction is surfaced.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::enums::{FallbackStatus, RedactionReason, SafetyAction, SafetyStatus, TierChangeReason};
use super::lookup_field;
use super::model::RouteReceipt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarningCode {
    /// `change_reason` is `none` but the requested and effective tiers differ.
    UnexplainedTierChange,
    /// `fallback.status` is `none` but a fallback route is named.
    FallbackRouteWithoutFallback,
    /// `safety.status` is `none` but a visible action is recorded.
    SafetyActionWithoutIntervention,
    /// `context.retrieved_item_count` disagrees with the tool result references.
    RetrievalCountMismatch,
    /// A field marked redacted for everyone is still present in clear.
    RedactedFieldPresent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub path: String,
    pub code: WarningCode,
    pub detail: String,
}

impl Warning {
    fn new(path: impl Into<String>, code: WarningCode, detail: impl Into<String>) -> Self {
        Warning {
            path: path.into(),
            code,
            detail: detail.into(),
        }
    }
}

pub fn check_consistency(r: &RouteReceipt) -> Vec<Warning> {
    let mut warnings = Vec::new();

    if let Some(tier) = &r.service_tier {
        if let (Some(requested), Some(TierChangeReason::None)) = (&tier.requested, tier.change_reason) {
            if requested != &tier.effective {
                warnings.push(Warning::new(
                    "/service_tier/change_reason",
                    WarningCode::UnexplainedTierChange,
                    format!(
                        "requested `{requested}` but served `{}` with change_reason none",
                        tier.effective
                    ),
                ));
            }
        }
    }

    if r.fallback.status == FallbackStatus::None && (r.fallback.from.is_some() || r.fallback.to.is_some()) {
        warnings.push(Warning::new(
            "/fallback",
            WarningCode::FallbackRouteWithoutFallback,
            "status is none but from/to are present",
        ));
    }

    if r.safety.status == SafetyStatus::None {
        if let Some(action) = r.safety.visible_action.filter(|a| *a != SafetyAction::None) {
            warnings.push(Warning::new(
                "/safety/visible_action",
                WarningCode::SafetyActionWithoutIntervention,
                format!("status is none but visible_action is {action}"),
            ));
        }
    }

    if let Some(expected) = r.context.as_ref().and_then(|c| c.retrieved_item_count) {
        let refs: Vec<usize> = r
            .tools_used()
            .iter()
            .filter_map(|t| t.result_refs.as_ref().map(Vec::len))
            .collect();
        if !refs.is_empty() {
            let total: u64 = refs.iter().map(|n| *n as u64).sum();
            if total != expected {
                warnings.push(Warning::new(
                    "/context/retrieved_item_count",
                    WarningCode::RetrievalCountMismatch,
                    format!("count is {expected} but tools list {total} result reference(s)"),
                ));
            }
        }
    }

    if r.redactions.iter().any(|e| e.visible_to.is_none()) {
        let doc = serde_json::to_value(r).expect("receipts always serialize");
        for (i, entry) in r.redactions.iter().enumerate() {
            if entry.visible_to.is_some()
                || matches!(
                    entry.reason,
                    RedactionReason::NotCollected | RedactionReason::NotApplicable
                )
            {
                continue;
            }
            let shown = lookup_field(&doc, &entry.field).is_some_and(|v| !v.is_null() && v != &Value::from("redacted"));
            if shown {
                warnings.push(Warning::new(
                    format!("/redactions/{i}"),
                    WarningCode::RedactedFieldPresent,
                    format!("`{}` is marked redacted ({}) but present", entry.field, entry.reason),
                ));
            }
        }
    }

    warnings
}
