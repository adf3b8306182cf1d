//! Audience-scoped receipt views.
//!
//! The four audiences form a total order (`end_user < developer <
//! administrator < auditor`). Every rule makes a field visible from some
//! audience upward; narrower audiences get a view where the field is
//! removed (optional fields) or generalized (required fields), and every
//! view carries a redaction entry saying who can still see it.

mod labels;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::receipt::{Audience, RedactionEntry, RedactionReason, RouteReceipt};

pub use labels::{end_user_labels, end_user_labels_with, EndUserLabel, LabelCode, LabelContext};

/// What happens to a field that is hidden from an audience.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Treatment {
    /// Optional field: dropped from the view.
    Remove,
    /// Required field: replaced by a generic value that keeps the view
    /// schema-valid.
    Generalize(&'static str),
    /// Required object: replaced by `{"status": "redacted"}`.
    RedactStatus,
    /// Every tool's `result_refs` is dropped and the tool marked redacted.
    ToolResultRefs,
}

/// Field paths a policy may name, in schema order, with their treatment.
pub const REDACTABLE_FIELDS: &[(&str, Treatment)] = &[
    ("request_id", Treatment::Generalize("redacted")),
    ("requested_model", Treatment::Remove),
    ("resolved_model", Treatment::Remove),
    ("model_identifier_type", Treatment::Generalize("unknown")),
    ("service_tier", Treatment::Remove),
    ("service_tier.requested", Treatment::Remove),
    ("service_tier.effective", Treatment::Generalize("redacted")),
    ("service_tier.change_reason", Treatment::Remove),
    ("effort", Treatment::Remove),
    ("effort.requested", Treatment::Remove),
    ("effort.effective_status", Treatment::Generalize("redacted")),
    ("tools", Treatment::Remove),
    ("tools.allowed", Treatment::Remove),
    ("tools.used.result_refs", Treatment::ToolResultRefs),
    ("tools.retrieval_summary", Treatment::Remove),
    ("context", Treatment::Remove),
    ("context.input_truncated", Treatment::Generalize("redacted")),
    ("context.retrieved_item_count", Treatment::Remove),
    ("context.context_window_class", Treatment::Remove),
    ("fallback", Treatment::RedactStatus),
    ("fallback.status", Treatment::Generalize("redacted")),
    ("fallback.from", Treatment::Remove),
    ("fallback.to", Treatment::Remove),
    ("fallback.reason", Treatment::Remove),
    ("safety", Treatment::RedactStatus),
    ("safety.status", Treatment::Generalize("redacted")),
    ("safety.category", Treatment::Remove),
    ("safety.visible_action", Treatment::Remove),
    ("region_class", Treatment::Generalize("redacted")),
    ("provider_chain", Treatment::Remove),
    ("completion_status", Treatment::Generalize("unknown")),
    ("retention_class", Treatment::Remove),
    ("provider_extensions", Treatment::Remove),
];

pub fn treatment_of(path: &str) -> Option<Treatment> {
    REDACTABLE_FIELDS.iter().find(|(p, _)| *p == path).map(|(_, t)| *t)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("`{0}` is not a redactable receipt field")]
    UnknownField(String),
    #[error("rule for `{0}` has an empty visible_to list")]
    EmptyAudience(String),
    #[error("rule for `{0}` lists an audience twice")]
    DuplicateAudience(String),
    #[error("more than one rule names `{0}`")]
    DuplicateRule(String),
    #[error("policy document is malformed: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RedactionRule {
    #[serde(alias = "field")]
    pub field_path: String,
    pub reason: RedactionReason,
    pub visible_to: Vec<Audience>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyDocument {
    #[serde(default)]
    rules: Vec<RedactionRule>,
    #[serde(default)]
    default_visibility: BTreeMap<String, Audience>,
}

/// A checked redaction policy.
///
/// `visible_to` lists are closed upward on load: a field visible to some
/// audience is visible to every wider one. `default_visibility` gives the
/// narrowest audience allowed to see a field when no explicit rule names
/// it; such fields are recorded with reason `contractual`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PolicyDocument")]
pub struct RedactionPolicy {
    rules: Vec<RedactionRule>,
    default_visibility: BTreeMap<String, Audience>,
}

impl TryFrom<PolicyDocument> for RedactionPolicy {
    type Error = PolicyError;

    fn try_from(doc: PolicyDocument) -> Result<Self, Self::Error> {
        RedactionPolicy::new(doc.rules, doc.default_visibility)
    }
}

impl RedactionPolicy {
    pub fn new(rules: Vec<RedactionRule>, default_visibility: BTreeMap<String, Audience>) -> Result<Self, PolicyError> {
        let mut checked: Vec<RedactionRule> = Vec::with_capacity(rules.len());
        for rule in rules {
            if treatment_of(&rule.field_path).is_none() {
                return Err(PolicyError::UnknownField(rule.field_path));
            }
            if checked.iter().any(|r| r.field_path == rule.field_path) {
                return Err(PolicyError::DuplicateRule(rule.field_path));
            }
            let mut seen = rule.visible_to.clone();
            seen.sort();
            seen.dedup();
            if seen.len() != rule.visible_to.len() {
                return Err(PolicyError::DuplicateAudience(rule.field_path));
            }
            let narrowest = *seen
                .first()
                .ok_or_else(|| PolicyError::EmptyAudience(rule.field_path.clone()))?;
            checked.push(RedactionRule {
                visible_to: narrowest.and_wider().collect(),
                ..rule
            });
        }
        if let Some(path) = default_visibility.keys().find(|p| treatment_of(p).is_none()) {
            return Err(PolicyError::UnknownField(path.clone()));
        }
        checked.sort_by_key(|r| schema_rank(&r.field_path));
        Ok(RedactionPolicy {
            rules: checked,
            default_visibility,
        })
    }

    /// The empty policy: every audience sees everything.
    pub fn open() -> Self {
        RedactionPolicy::default()
    }

    pub fn from_json(text: &str) -> Result<Self, PolicyError> {
        serde_json::from_str(text).map_err(|e| PolicyError::Malformed(e.to_string()))
    }

    pub fn rules(&self) -> &[RedactionRule] {
        &self.rules
    }

    pub fn default_visibility(&self) -> &BTreeMap<String, Audience> {
        &self.default_visibility
    }

    /// Out-of-the-box tiering: safety categories and provider chains are
    /// audit-only, fallback endpoints are operational detail.
    pub fn default_policy() -> Self {
        let rule = |path: &str, reason, from: Audience| RedactionRule {
            field_path: path.to_owned(),
            reason,
            visible_to: from.and_wider().collect(),
        };
        RedactionPolicy::new(
            vec![
                rule("fallback.from", RedactionReason::Contractual, Audience::Developer),
                rule("fallback.to", RedactionReason::Contractual, Audience::Developer),
                rule("safety.category", RedactionReason::Safety, Audience::Auditor),
                rule("provider_chain", RedactionReason::TradeSecret, Audience::Auditor),
            ],
            BTreeMap::new(),
        )
        .expect("default policy is well-formed")
    }

    /// Explicit rules plus rules implied by `default_visibility`, in schema
    /// order.
    pub fn effective_rules(&self) -> Vec<RedactionRule> {
        let mut rules = self.rules.clone();
        for (path, narrowest) in &self.default_visibility {
            if !rules.iter().any(|r| &r.field_path == path) {
                rules.push(RedactionRule {
                    field_path: path.clone(),
                    reason: RedactionReason::Contractual,
                    visible_to: narrowest.and_wider().collect(),
                });
            }
        }
        rules.sort_by_key(|r| schema_rank(&r.field_path));
        rules
    }
}

fn schema_rank(path: &str) -> usize {
    REDACTABLE_FIELDS
        .iter()
        .position(|(p, _)| *p == path)
        .unwrap_or(usize::MAX)
}

/// A receipt as one audience is allowed to see it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AudienceView {
    pub audience: Audience,
    pub receipt: RouteReceipt,
}

impl fmt::Display for AudienceView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", serde_json::to_string(self).map_err(|_| fmt::Error)?)
    }
}

/// How a field appears in a document.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldState {
    Absent,
    Generalized,
    Shown(Value),
}

/// Inspects `path` in a serialized receipt.
pub fn field_state(doc: &Value, path: &str) -> FieldState {
    let Some(treatment) = treatment_of(path) else {
        return FieldState::Absent;
    };
    if treatment == Treatment::ToolResultRefs {
        let used = doc.pointer("/tools/used").and_then(Value::as_array);
        let Some(used) = used else { return FieldState::Absent };
        let refs: Vec<Value> = used.iter().filter_map(|t| t.get("result_refs").cloned()).collect();
        return if !refs.is_empty() {
            FieldState::Shown(Value::from(refs))
        } else if used.iter().any(|t| t.get("redacted") == Some(&Value::Bool(true))) {
            FieldState::Generalized
        } else {
            FieldState::Absent
        };
    }
    match crate::receipt::lookup_field(doc, path) {
        None => FieldState::Absent,
        Some(v) => {
            let generalized = match treatment {
                Treatment::Generalize(sentinel) => v == &Value::from(sentinel),
                Treatment::RedactStatus => {
                    v.as_object().is_some_and(|o| o.len() == 1) && v.get("status") == Some(&Value::from("redacted"))
                }
                _ => false,
            };
            if generalized {
                FieldState::Generalized
            } else {
                FieldState::Shown(v.clone())
            }
        }
    }
}

fn parent_and_key<'a>(doc: &'a mut Value, path: &str) -> Option<(&'a mut Map<String, Value>, String)> {
    let mut segments: Vec<&str> = path.split('.').collect();
    let key = segments.pop()?.to_owned();
    let mut node = doc;
    for s in segments {
        node = node.as_object_mut()?.get_mut(s)?;
    }
    Some((node.as_object_mut()?, key))
}

fn hide(doc: &mut Value, path: &str, treatment: Treatment) {
    match treatment {
        Treatment::ToolResultRefs => {
            if let Some(used) = doc.pointer_mut("/tools/used").and_then(Value::as_array_mut) {
                for tool in used.iter_mut().filter_map(Value::as_object_mut) {
                    if tool.remove("result_refs").is_some() {
                        tool.insert("redacted".into(), Value::Bool(true));
                    }
                }
            }
        }
        Treatment::Remove => {
            if let Some((parent, key)) = parent_and_key(doc, path) {
                parent.remove(&key);
            }
        }
        Treatment::Generalize(sentinel) => {
            if let Some((parent, key)) = parent_and_key(doc, path) {
                if let Some(v) = parent.get_mut(&key) {
                    *v = Value::from(sentinel);
                }
            }
        }
        Treatment::RedactStatus => {
            if let Some((parent, key)) = parent_and_key(doc, path) {
                if let Some(v) = parent.get_mut(&key) {
                    *v = serde_json::json!({"status": "redacted"});
                }
            }
        }
    }
}

/// Produces the view of `r` for `audience` under `policy`.
///
/// For every rule whose field is shown in `r` and that restricts at least
/// one audience, the view carries a redaction entry with the rule's
/// audiences; the field itself is hidden when `audience` is not among
/// them. Existing entries are kept, so applying a view twice changes
/// nothing.
pub fn view_for(r: &RouteReceipt, audience: Audience, policy: &RedactionPolicy) -> AudienceView {
    let rules = policy.effective_rules();
    if rules.is_empty() {
        return AudienceView {
            audience,
            receipt: r.clone(),
        };
    }
    let original = serde_json::to_value(r).expect("receipts always serialize");
    let mut doc = original.clone();
    let mut entries: Vec<RedactionEntry> = Vec::new();
    for rule in &rules {
        if rule.visible_to.len() == Audience::ALL.len() {
            continue;
        }
        if !matches!(field_state(&original, &rule.field_path), FieldState::Shown(_)) {
            continue;
        }
        entries.push(RedactionEntry {
            field: rule.field_path.clone(),
            reason: rule.reason,
            visible_to: Some(rule.visible_to.clone()),
        });
        if !rule.visible_to.contains(&audience) {
            let treatment = treatment_of(&rule.field_path).expect("policy paths are checked on load");
            hide(&mut doc, &rule.field_path, treatment);
        }
    }
    let mut receipt: RouteReceipt = serde_json::from_value(doc).expect("redaction keeps the receipt shape");
    for entry in entries {
        if !receipt.redactions.contains(&entry) {
            receipt.redactions.push(entry);
        }
    }
    AudienceView { audience, receipt }
}
