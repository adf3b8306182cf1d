//! Route metadata emitted by the in-repo simulated provider.
//!
//! Unlike the commercial surfaces this one documents every route fact, so a
//! single simulated fragment can populate all optional route fields.

use serde::{Deserialize, Serialize};

use crate::receipt::{
    CompletionStatus, ContextRecord, EffortLevel, EffortRecord, EffortStatus, FallbackReason, FallbackRecord,
    FallbackStatus, HopRole, InputTruncated, ModelIdentifierType, ProviderHop, RedactionEntry, RedactionReason,
    RegionClass, SafetyAction, SafetyRecord, SafetyStatus, ServiceTierRecord, TierChangeReason, ToolUse, ToolsRecord,
};

use super::FragmentFields;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulatedRoute {
    pub request_index: u64,
    pub requested_model: String,
    pub resolved_model: String,
    pub model_identifier_type: ModelIdentifierType,
    pub service_tier: SimulatedTier,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effort: Option<SimulatedEffort>,
    pub attempts: Vec<Attempt>,
    #[serde(default)]
    pub tools: Vec<SimulatedToolCall>,
    pub safety: SimulatedSafety,
    pub input_truncated: bool,
    pub region_class: RegionClass,
    pub completion_status: CompletionStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulatedTier {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requested: Option<String>,
    pub effective: String,
    pub downgraded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulatedEffort {
    pub requested: EffortLevel,
    pub status: EffortStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptOutcome {
    Ok,
    RateLimit,
    ProviderError,
    UnavailableModel,
    ModerationRefusal,
}

impl AttemptOutcome {
    pub fn fallback_reason(self) -> FallbackReason {
        match self {
            AttemptOutcome::Ok => FallbackReason::None,
            AttemptOutcome::RateLimit => FallbackReason::RateLimit,
            AttemptOutcome::ProviderError | AttemptOutcome::UnavailableModel => FallbackReason::ProviderError,
            AttemptOutcome::ModerationRefusal => FallbackReason::ModerationRefusal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attempt {
    pub model: String,
    pub provider: String,
    pub outcome: AttemptOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulatedToolCall {
    pub name: String,
    pub invocations: u64,
    #[serde(default)]
    pub refs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulatedSafety {
    pub intervened: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    pub action: SafetyAction,
}

impl SimulatedRoute {
    /// The fallback record implied by the attempt sequence. A tier
    /// downgrade without a model change is a capacity fallback.
    pub fn fallback_record(&self) -> FallbackRecord {
        match self.attempts.as_slice() {
            [first, .., last] => FallbackRecord {
                status: FallbackStatus::Occurred,
                from: Some(first.model.clone()),
                to: Some(last.model.clone()),
                reason: Some(first.outcome.fallback_reason()),
            },
            _ if self.service_tier.downgraded => FallbackRecord {
                status: FallbackStatus::Occurred,
                from: None,
                to: None,
                reason: Some(FallbackReason::Capacity),
            },
            _ => FallbackRecord {
                status: FallbackStatus::None,
                from: None,
                to: None,
                reason: Some(FallbackReason::None),
            },
        }
    }

    pub fn service_tier_record(&self) -> ServiceTierRecord {
        let tier = &self.service_tier;
        let change_reason = match &tier.requested {
            None => None,
            Some(_) if tier.downgraded => Some(TierChangeReason::Capacity),
            Some(requested) if *requested == tier.effective => Some(TierChangeReason::None),
            Some(_) => Some(TierChangeReason::Unknown),
        };
        ServiceTierRecord {
            requested: tier.requested.clone(),
            effective: tier.effective.clone(),
            change_reason,
        }
    }

    pub fn tools_record(&self) -> ToolsRecord {
        let used = self
            .tools
            .iter()
            .filter(|t| t.invocations > 0)
            .map(|t| ToolUse {
                name: t.name.clone(),
                invocation_count: t.invocations,
                result_refs: (!t.refs.is_empty()).then(|| t.refs.clone()),
                redacted: None,
            })
            .collect();
        ToolsRecord {
            allowed: None,
            used,
            retrieval_summary: None,
        }
    }

    pub fn safety_record(&self) -> SafetyRecord {
        SafetyRecord {
            status: if self.safety.intervened {
                SafetyStatus::Intervened
            } else {
                SafetyStatus::None
            },
            category: self.safety.category.clone(),
            visible_action: Some(self.safety.action),
        }
    }

    pub fn provider_chain(&self) -> Vec<ProviderHop> {
        let last = self.attempts.len().saturating_sub(1);
        self.attempts
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let role = if i == last && a.outcome == AttemptOutcome::Ok {
                    HopRole::Served
                } else if i == 0 {
                    HopRole::Requested
                } else {
                    HopRole::Fallback
                };
                ProviderHop {
                    role,
                    provider: Some(a.provider.clone()),
                    model: Some(a.model.clone()),
                    redacted: None,
                }
            })
            .collect()
    }

    pub(super) fn to_fields(&self) -> FragmentFields {
        let tools = self.tools_record();
        let retrieved: u64 = tools
            .used
            .iter()
            .filter_map(|t| t.result_refs.as_ref())
            .map(|r| r.len() as u64)
            .sum();
        let mut redactions = Vec::new();
        let effort = match &self.effort {
            Some(e) => Some(EffortRecord {
                requested: Some(e.requested),
                effective_status: e.status,
            }),
            None => {
                redactions.push(RedactionEntry {
                    field: "effort".into(),
                    reason: RedactionReason::NotApplicable,
                    visible_to: None,
                });
                None
            }
        };
        FragmentFields {
            requested_model: Some(self.requested_model.clone()),
            resolved_model: Some(self.resolved_model.clone()),
            service_tier: Some(self.service_tier_record()),
            effort,
            tools: Some(tools),
            context: Some(ContextRecord {
                input_truncated: if self.input_truncated {
                    InputTruncated::True
                } else {
                    InputTruncated::False
                },
                retrieved_item_count: Some(retrieved),
                context_window_class: None,
            }),
            fallback: Some(self.fallback_record()),
            safety: Some(self.safety_record()),
            provider_chain: Some(self.provider_chain()),
            redactions,
        }
    }
}
