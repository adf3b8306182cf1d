//! Compact end-user labels derived from a receipt.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::receipt::{CompletionStatus, EffortLevel, FallbackStatus, RouteReceipt, SafetyStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelCode {
    WebSearchUsed,
    FastMode,
    ModelUpdated,
    FallbackUsed,
    SafetyRestricted,
    IncompleteResponse,
}

impl LabelCode {
    /// Rendering order.
    pub const ALL: &'static [LabelCode] = &[
        LabelCode::WebSearchUsed,
        LabelCode::FastMode,
        LabelCode::ModelUpdated,
        LabelCode::FallbackUsed,
        LabelCode::SafetyRestricted,
        LabelCode::IncompleteResponse,
    ];

    pub fn text(self) -> &'static str {
        match self {
            LabelCode::WebSearchUsed => "web search used",
            LabelCode::FastMode => "answered in fast mode",
            LabelCode::ModelUpdated => "model updated since previous answer",
            LabelCode::FallbackUsed => "fallback used",
            LabelCode::SafetyRestricted => "response restricted by safety policy",
            LabelCode::IncompleteResponse => "response incomplete",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndUserLabel {
    pub code: LabelCode,
    pub present: bool,
}

impl fmt::Display for EndUserLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.present { "yes" } else { "no" };
        write!(f, "{:<38} {mark}", self.code.text())
    }
}

/// Deployment facts some labels need beyond the receipt itself.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelContext {
    /// The model the same requested alias resolved to on the previous answer.
    pub previous_resolved_model: Option<String>,
    /// Effective service tiers this deployment treats as latency-optimized.
    pub fast_tiers: Vec<String>,
}

/// Labels with no history and no fast tiers configured.
pub fn end_user_labels(r: &RouteReceipt) -> Vec<EndUserLabel> {
    end_user_labels_with(r, &LabelContext::default())
}

pub fn end_user_labels_with(r: &RouteReceipt, ctx: &LabelContext) -> Vec<EndUserLabel> {
    LabelCode::ALL
        .iter()
        .map(|&code| {
            let present = match code {
                LabelCode::WebSearchUsed => r
                    .tools_used()
                    .iter()
                    .any(|t| t.name == "web_search" && t.invocation_count > 0),
                LabelCode::FastMode => {
                    let low_effort = r
                        .effort
                        .as_ref()
                        .and_then(|e| e.requested)
                        .is_some_and(|l| matches!(l, EffortLevel::Minimal | EffortLevel::Low));
                    let fast_tier = r
                        .effective_tier()
                        .is_some_and(|t| ctx.fast_tiers.iter().any(|f| f == t));
                    low_effort || fast_tier
                }
                LabelCode::ModelUpdated => match (&ctx.previous_resolved_model, &r.resolved_model) {
                    (Some(before), Some(now)) => before != now,
                    _ => false,
                },
                LabelCode::FallbackUsed => r.fallback.status == FallbackStatus::Occurred,
                LabelCode::SafetyRestricted => r.safety.status == SafetyStatus::Intervened,
                LabelCode::IncompleteResponse => r.completion_status != CompletionStatus::Complete,
            };
            EndUserLabel { code, present }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::receipt::{EffortRecord, EffortStatus, ToolUse, ToolsRecord};

    fn base() -> RouteReceipt {
        let mut r = RouteReceipt::minimal("rr-1", "req-1", "2026-06-15T14:02:11Z".parse().unwrap());
        r.completion_status = CompletionStatus::Complete;
        r.fallback.status = FallbackStatus::None;
        r.safety.status = SafetyStatus::None;
        r
    }

    fn present(labels: &[EndUserLabel]) -> Vec<LabelCode> {
        labels.iter().filter(|l| l.present).map(|l| l.code).collect()
    }

    #[test]
    fn quiet_receipt_has_all_labels_absent() {
        let labels = end_user_labels(&base());
        assert_eq!(labels.len(), 6);
        assert!(present(&labels).is_empty());
        let codes: Vec<_> = labels.iter().map(|l| l.code).collect();
        assert_eq!(codes, LabelCode::ALL);
    }

    #[test]
    fn direct_mappings() {
        let mut r = base();
        r.fallback.status = FallbackStatus::Occurred;
        assert_eq!(present(&end_user_labels(&r)), vec![LabelCode::FallbackUsed]);
        let mut r = base();
        r.completion_status = CompletionStatus::LengthLimit;
        assert_eq!(present(&end_user_labels(&r)), vec![LabelCode::IncompleteResponse]);
        let mut r = base();
        r.safety.status = SafetyStatus::Intervened;
        assert_eq!(present(&end_user_labels(&r)), vec![LabelCode::SafetyRestricted]);
        // unknown status is not evidence of a fallback
        let mut r = base();
        r.fallback.status = FallbackStatus::Unknown;
        assert!(present(&end_user_labels(&r)).is_empty());
    }

    #[test]
    fn web_search_needs_an_invocation() {
        let mut r = base();
        r.tools = Some(ToolsRecord {
            allowed: None,
            used: vec![ToolUse::new("web_search", 0), ToolUse::new("file_search", 2)],
            retrieval_summary: None,
        });
        assert!(present(&end_user_labels(&r)).is_empty());
        r.tools.as_mut().unwrap().used[0].invocation_count = 1;
        assert_eq!(present(&end_user_labels(&r)), vec![LabelCode::WebSearchUsed]);
    }

    #[test]
    fn fast_mode_from_effort_or_tier() {
        let mut r = base();
        r.effort = Some(EffortRecord {
            requested: Some(EffortLevel::Low),
            effective_status: EffortStatus::Completed,
        });
        assert_eq!(present(&end_user_labels(&r)), vec![LabelCode::FastMode]);

        let mut r = base();
        r.service_tier = Some(crate::receipt::ServiceTierRecord {
            requested: None,
            effective: "flex-fast".into(),
            change_reason: None,
        });
        assert!(present(&end_user_labels(&r)).is_empty());
        let ctx = LabelContext {
            fast_tiers: vec!["flex-fast".into()],
            ..Default::default()
        };
        assert_eq!(present(&end_user_labels_with(&r, &ctx)), vec![LabelCode::FastMode]);
    }

    #[test]
    fn model_update_needs_history() {
        let mut r = base();
        r.resolved_model = Some("contract-pro-2026-04-18".into());
        assert!(present(&end_user_labels(&r)).is_empty());
        let ctx = LabelContext {
            previous_resolved_model: Some("contract-pro-2026-03-02".into()),
            ..Default::default()
        };
        assert_eq!(present(&end_user_labels_with(&r, &ctx)), vec![LabelCode::ModelUpdated]);
        let same = LabelContext {
            previous_resolved_model: Some("contract-pro-2026-04-18".into()),
            ..Default::default()
        };
        assert!(present(&end_user_labels_with(&r, &same)).is_empty());
    }
}
