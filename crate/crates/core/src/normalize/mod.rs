//! Provider metadata normalization.
//!
//! Each supported provider surface exposes a few route facts in its own
//! response shape. [`extract_fragment`] maps one raw metadata document to a
//! [`ReceiptFragment`] holding only the facts that surface documents, and
//! [`merge`] combines fragments with an [`Envelope`] into a full receipt,
//! recording a `not_collected` redaction for every expected field nobody
//! observed.
//!
//! Raw shapes are this crate's fixture convention (see `fixtures/surfaces`):
//!
//! | surface               | key field                          | receipt target                 |
//! |-----------------------|------------------------------------|--------------------------------|
//! | `openai_priority`     | `response.service_tier`            | effective service tier         |
//! | `anthropic_tiers`     | `response.usage.service_tier`      | effective service tier         |
//! | `bedrock_tiers`       | `response.resolvedServiceTier`     | effective service tier         |
//! | `openai_web_search`   | `response.output`                  | tool-use summary               |
//! | `openrouter_fallback` | `response.model`                   | resolved model and fallback    |
//! | `simulated`           | whole document ([`SimulatedRoute`]) | every route field             |

mod merge;
mod simulated;

use std::fmt;
use std::str::FromStr;

use chrono::Utc;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::receipt::{
    ContextRecord, EffortRecord, FallbackReason, FallbackRecord, FallbackStatus, ProviderHop, RedactionEntry,
    SafetyRecord, ServiceTierRecord, TierChangeReason, Timestamp, ToolUse, ToolsRecord, UnknownVariant,
};

pub use merge::{merge, Envelope, MergeError, Merged, DEFAULT_EXPECTED_FIELDS};
pub use simulated::{
    Attempt, AttemptOutcome, SimulatedEffort, SimulatedRoute, SimulatedSafety, SimulatedTier, SimulatedToolCall,
};

/// A provider response surface with documented per-answer route fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderSurface {
    OpenaiPriority,
    AnthropicTiers,
    BedrockTiers,
    OpenaiWebSearch,
    OpenrouterFallback,
    Simulated,
}

impl ProviderSurface {
    pub const ALL: &'static [ProviderSurface] = &[
        ProviderSurface::OpenaiPriority,
        ProviderSurface::AnthropicTiers,
        ProviderSurface::BedrockTiers,
        ProviderSurface::OpenaiWebSearch,
        ProviderSurface::OpenrouterFallback,
        ProviderSurface::Simulated,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProviderSurface::OpenaiPriority => "openai_priority",
            ProviderSurface::AnthropicTiers => "anthropic_tiers",
            ProviderSurface::BedrockTiers => "bedrock_tiers",
            ProviderSurface::OpenaiWebSearch => "openai_web_search",
            ProviderSurface::OpenrouterFallback => "openrouter_fallback",
            ProviderSurface::Simulated => "simulated",
        }
    }

    /// Optional receipt fields this surface is documented to expose.
    pub fn documented_fields(self) -> &'static [&'static str] {
        match self {
            ProviderSurface::OpenaiPriority | ProviderSurface::AnthropicTiers | ProviderSurface::BedrockTiers => {
                &["service_tier"]
            }
            ProviderSurface::OpenaiWebSearch => &["tools"],
            ProviderSurface::OpenrouterFallback => &["requested_model", "resolved_model"],
            ProviderSurface::Simulated => &[
                "requested_model",
                "resolved_model",
                "service_tier",
                "effort",
                "tools",
                "context",
                "provider_chain",
            ],
        }
    }

    /// Whether the provider documents downgrading requested capacity when
    /// traffic ramps, which lets a tier mismatch be attributed to capacity.
    fn documents_capacity_downgrade(self) -> bool {
        matches!(self, ProviderSurface::OpenaiPriority)
    }
}

impl fmt::Display for ProviderSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for ProviderSurface {
    type Err = UnknownVariant;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProviderSurface::ALL
            .iter()
            .copied()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| UnknownVariant {
                kind: "ProviderSurface",
                value: s.to_owned(),
            })
    }
}

/// The receipt fields one surface observed. Serializes in schema order,
/// always carrying its (possibly empty) redaction list.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FragmentFields {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requested_model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved_model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service_tier: Option<ServiceTierRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effort: Option<EffortRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tools: Option<ToolsRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<ContextRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<FallbackRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety: Option<SafetyRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider_chain: Option<Vec<ProviderHop>>,
    #[serde(default)]
    pub redactions: Vec<RedactionEntry>,
}

impl FragmentFields {
    /// Names of the optional fields that are set.
    pub fn present_fields(&self) -> Vec<&'static str> {
        let mut names = Vec::new();
        let mut add = |set: bool, name| {
            if set {
                names.push(name)
            }
        };
        add(self.requested_model.is_some(), "requested_model");
        add(self.resolved_model.is_some(), "resolved_model");
        add(self.service_tier.is_some(), "service_tier");
        add(self.effort.is_some(), "effort");
        add(self.tools.is_some(), "tools");
        add(self.context.is_some(), "context");
        add(self.fallback.is_some(), "fallback");
        add(self.safety.is_some(), "safety");
        add(self.provider_chain.is_some(), "provider_chain");
        names
    }

    /// Canonical compact text of the fragment.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("fragments always serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceiptFragment {
    pub surface: ProviderSurface,
    pub observed_at: Timestamp,
    pub partial: FragmentFields,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("{surface} metadata is missing `{key}`")]
    MissingKey {
        surface: ProviderSurface,
        key: &'static str,
    },
    #[error("{surface} metadata has an unexpected shape at `{key}`: {detail}")]
    Shape {
        surface: ProviderSurface,
        key: &'static str,
        detail: String,
    },
}

/// Extracts a fragment, stamping it with the current time.
pub fn extract_fragment(surface: ProviderSurface, raw: &Value) -> Result<ReceiptFragment, ExtractError> {
    extract_fragment_at(surface, raw, Timestamp::from_datetime(Utc::now()))
}

pub fn extract_fragment_at(
    surface: ProviderSurface,
    raw: &Value,
    observed_at: Timestamp,
) -> Result<ReceiptFragment, ExtractError> {
    let partial = match surface {
        ProviderSurface::OpenaiPriority => {
            tier_fragment(surface, raw, "response.service_tier", "request.service_tier")?
        }
        ProviderSurface::AnthropicTiers => {
            tier_fragment(surface, raw, "response.usage.service_tier", "request.service_tier")?
        }
        ProviderSurface::BedrockTiers => {
            tier_fragment(surface, raw, "response.resolvedServiceTier", "request.serviceTier")?
        }
        ProviderSurface::OpenaiWebSearch => web_search_fragment(raw)?,
        ProviderSurface::OpenrouterFallback => openrouter_fragment(raw)?,
        ProviderSurface::Simulated => {
            let route: SimulatedRoute = serde_json::from_value(raw.clone()).map_err(|e| ExtractError::Shape {
                surface,
                key: "$",
                detail: e.to_string(),
            })?;
            route.to_fields()
        }
    };
    Ok(ReceiptFragment {
        surface,
        observed_at,
        partial,
    })
}

fn lookup<'a>(raw: &'a Value, dotted: &str) -> Option<&'a Value> {
    crate::receipt::lookup_field(raw, dotted)
}

fn required_str<'a>(surface: ProviderSurface, raw: &'a Value, key: &'static str) -> Result<&'a str, ExtractError> {
    match lookup(raw, key) {
        None | Some(Value::Null) => Err(ExtractError::MissingKey { surface, key }),
        Some(Value::String(s)) if !s.is_empty() => Ok(s),
        Some(other) => Err(ExtractError::Shape {
            surface,
            key,
            detail: format!("expected a non-empty string, found {other}"),
        }),
    }
}

fn optional_str<'a>(
    surface: ProviderSurface,
    raw: &'a Value,
    key: &'static str,
) -> Result<Option<&'a str>, ExtractError> {
    match lookup(raw, key) {
        None | Some(Value::Null) => Ok(None),
        Some(_) => required_str(surface, raw, key).map(Some),
    }
}

fn tier_fragment(
    surface: ProviderSurface,
    raw: &Value,
    effective_key: &'static str,
    requested_key: &'static str,
) -> Result<FragmentFields, ExtractError> {
    let effective = required_str(surface, raw, effective_key)?;
    let requested = optional_str(surface, raw, requested_key)?;
    let downgraded = requested.is_some_and(|r| r != effective);
    let change_reason = match requested {
        None => None,
        Some(_) if !downgraded => Some(TierChangeReason::None),
        Some(_) if surface.documents_capacity_downgrade() => Some(TierChangeReason::Capacity),
        Some(_) => Some(TierChangeReason::Unknown),
    };
    let fallback = (change_reason == Some(TierChangeReason::Capacity)).then_some(FallbackRecord {
        status: FallbackStatus::Occurred,
        from: None,
        to: None,
        reason: Some(FallbackReason::Capacity),
    });
    Ok(FragmentFields {
        service_tier: Some(ServiceTierRecord {
            requested: requested.map(str::to_owned),
            effective: effective.to_owned(),
            change_reason,
        }),
        fallback,
        ..FragmentFields::default()
    })
}

fn web_search_fragment(raw: &Value) -> Result<FragmentFields, ExtractError> {
    let surface = ProviderSurface::OpenaiWebSearch;
    let key = "response.output";
    let output = match lookup(raw, key) {
        None | Some(Value::Null) => return Err(ExtractError::MissingKey { surface, key }),
        Some(Value::Array(items)) => items,
        Some(other) => {
            return Err(ExtractError::Shape {
                surface,
                key,
                detail: format!("expected an array, found {other}"),
            })
        }
    };
    let item_type = |item: &Value| item.get("type").and_then(Value::as_str).map(str::to_owned);
    let calls = output
        .iter()
        .filter(|item| item_type(item).as_deref() == Some("web_search_call"))
        .count() as u64;
    let citations: Vec<String> = output
        .iter()
        .filter(|item| item_type(item).as_deref() == Some("message"))
        .filter_map(|item| item.get("content").and_then(Value::as_array))
        .flatten()
        .filter_map(|part| part.get("annotations").and_then(Value::as_array))
        .flatten()
        .filter(|a| a.get("type").and_then(Value::as_str) == Some("url_citation"))
        .filter_map(|a| a.get("url").and_then(Value::as_str).map(str::to_owned))
        .collect();

    let used = if calls == 0 {
        Vec::new()
    } else {
        let mut tool = ToolUse::new("web_search", calls);
        tool.result_refs = (!citations.is_empty()).then_some(citations);
        vec![tool]
    };
    Ok(FragmentFields {
        tools: Some(ToolsRecord {
            allowed: None,
            used,
            retrieval_summary: None,
        }),
        ..FragmentFields::default()
    })
}

fn openrouter_fragment(raw: &Value) -> Result<FragmentFields, ExtractError> {
    let surface = ProviderSurface::OpenrouterFallback;
    let returned = required_str(surface, raw, "response.model")?;
    let requested = optional_str(surface, raw, "request.model")?;
    let fallback = requested.map(|r| {
        FallbackRecord::with_status(if r == returned {
            FallbackStatus::None
        } else {
            FallbackStatus::Occurred
        })
    });
    Ok(FragmentFields {
        requested_model: requested.map(str::to_owned),
        resolved_model: Some(returned.to_owned()),
        fallback,
        ..FragmentFields::default()
    })
}
