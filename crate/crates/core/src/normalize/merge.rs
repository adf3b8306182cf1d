use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::receipt::{
    check_consistency, schema_errors, CompletionStatus, FallbackRecord, FallbackStatus, ModelIdentifierType,
    RedactionEntry, RegionClass, RetentionClass, RouteReceipt, SafetyRecord, SafetyStatus, Timestamp, ValidationReport,
    Warning, SCHEMA_VERSION,
};

use super::ReceiptFragment;

/// Detail fields expected when no fragment says otherwise.
pub const DEFAULT_EXPECTED_FIELDS: &[&str] = &["service_tier", "effort", "tools", "context"];

/// Identity and outcome fields that come from the serving system itself
/// rather than from provider metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    pub receipt_id: String,
    pub request_id: String,
    pub served_at: Timestamp,
    pub model_identifier_type: ModelIdentifierType,
    pub region_class: RegionClass,
    pub completion_status: CompletionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retention_class: Option<RetentionClass>,
    /// Request-side tool configuration, copied into `tools.allowed` when a
    /// fragment reports tool usage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tools_allowed: Option<Vec<String>>,
    /// Optional fields this deployment promises to collect. When unset, the
    /// fields documented by the contributing surfaces are expected, or
    /// [`DEFAULT_EXPECTED_FIELDS`] when there are no fragments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_fields: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Merged {
    pub receipt: RouteReceipt,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MergeError {
    #[error("fragments disagree on {field}: {first} vs {second}")]
    Conflict { field: String, first: Value, second: Value },
    #[error("merged receipt is not schema-valid: {0}")]
    Invalid(ValidationReport),
}

fn take<T: Clone + PartialEq + Serialize>(
    slot: &mut Option<T>,
    incoming: &Option<T>,
    field: &str,
) -> Result<(), MergeError> {
    let Some(value) = incoming else { return Ok(()) };
    match slot {
        Some(existing) if existing != value => Err(MergeError::Conflict {
            field: format!("/{field}"),
            first: serde_json::to_value(&*existing).unwrap_or(Value::Null),
            second: serde_json::to_value(value).unwrap_or(Value::Null),
        }),
        Some(_) => Ok(()),
        None => {
            *slot = Some(value.clone());
            Ok(())
        }
    }
}

/// Builds a full receipt from an envelope and any number of fragments.
///
/// Overlapping fragments must agree exactly; there is no precedence order.
pub fn merge(envelope: &Envelope, fragments: &[ReceiptFragment]) -> Result<Merged, MergeError> {
    let mut r = RouteReceipt {
        schema_version: SCHEMA_VERSION.to_owned(),
        receipt_id: envelope.receipt_id.clone(),
        request_id: envelope.request_id.clone(),
        served_at: envelope.served_at.clone(),
        requested_model: None,
        resolved_model: None,
        model_identifier_type: envelope.model_identifier_type,
        service_tier: None,
        effort: None,
        tools: None,
        context: None,
        fallback: FallbackRecord::with_status(FallbackStatus::Unknown),
        safety: SafetyRecord::with_status(SafetyStatus::Unknown),
        region_class: envelope.region_class,
        provider_chain: None,
        completion_status: envelope.completion_status,
        redactions: Vec::new(),
        retention_class: envelope.retention_class,
        provider_extensions: None,
    };

    let mut fallback = None;
    let mut safety = None;
    for fragment in fragments {
        let p = &fragment.partial;
        take(&mut r.requested_model, &p.requested_model, "requested_model")?;
        take(&mut r.resolved_model, &p.resolved_model, "resolved_model")?;
        take(&mut r.service_tier, &p.service_tier, "service_tier")?;
        take(&mut r.effort, &p.effort, "effort")?;
        take(&mut r.tools, &p.tools, "tools")?;
        take(&mut r.context, &p.context, "context")?;
        take(&mut fallback, &p.fallback, "fallback")?;
        take(&mut safety, &p.safety, "safety")?;
        take(&mut r.provider_chain, &p.provider_chain, "provider_chain")?;
        for entry in &p.redactions {
            if !r.redactions.contains(entry) {
                r.redactions.push(entry.clone());
            }
        }
    }
    if let Some(f) = fallback {
        r.fallback = f;
    }
    if let Some(s) = safety {
        r.safety = s;
    }
    if let (Some(tools), Some(allowed)) = (r.tools.as_mut(), &envelope.tools_allowed) {
        tools.allowed = Some(allowed.clone());
    }

    let expected: Vec<String> = match &envelope.expected_fields {
        Some(fields) => fields.clone(),
        None if fragments.is_empty() => DEFAULT_EXPECTED_FIELDS.iter().map(|s| s.to_string()).collect(),
        None => {
            let mut fields: Vec<String> = Vec::new();
            for f in fragments {
                for name in f.surface.documented_fields() {
                    if !fields.iter().any(|n| n == name) {
                        fields.push(name.to_string());
                    }
                }
            }
            fields
        }
    };

    let doc = serde_json::to_value(&r).expect("receipts always serialize");
    for field in &expected {
        let observed = doc.get(field).is_some();
        let explained = r.redactions.iter().any(|e| &e.field == field);
        if !observed && !explained {
            r.redactions.push(RedactionEntry::not_collected(field.clone()));
        }
    }

    let report = schema_errors(&serde_json::to_value(&r).expect("receipts always serialize"));
    if !report.is_valid() {
        return Err(MergeError::Invalid(report));
    }
    let warnings = check_consistency(&r);
    Ok(Merged { receipt: r, warnings })
}
