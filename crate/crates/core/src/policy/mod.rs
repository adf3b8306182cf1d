//! Route constraints checked after the fact, and receipt-to-receipt diffs.
//!
//! A constraint the receipt cannot confirm (the field is `unknown`,
//! `redacted` or missing) counts as a violation: the promise did not
//! demonstrably hold.

mod diff;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::receipt::{FallbackStatus, ModelIdentifierType, RegionClass, RouteReceipt};

pub use diff::{diff, ChangedField, RouteDiff, MATERIAL_FIELDS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCode {
    ModelDrift,
    MovingAliasUsed,
    FallbackForbidden,
    RegionForbidden,
    ToolForbidden,
    TierMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub field_path: String,
    pub expected: String,
    pub observed: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstraintError {
    #[error("allowed_region_classes must not be empty")]
    NoRegionAllowed,
    #[error("constraint policy is malformed: {0}")]
    Malformed(String),
}

fn yes() -> bool {
    true
}

fn all_regions() -> BTreeSet<RegionClass> {
    RegionClass::ALL.iter().copied().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintDocument {
    #[serde(default)]
    pinned_resolved_model: Option<String>,
    #[serde(default = "yes")]
    allow_moving_alias: bool,
    #[serde(default = "yes")]
    allow_fallback: bool,
    #[serde(default = "all_regions")]
    allowed_region_classes: BTreeSet<RegionClass>,
    #[serde(default)]
    allowed_tools: Option<BTreeSet<String>>,
    #[serde(default)]
    required_effective_tier: Option<String>,
    #[serde(default)]
    forbid_global_endpoint: bool,
}

/// The route promises a workflow wants verified. Fields left out of a
/// policy document are unconstrained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ConstraintDocument", into = "ConstraintDocument")]
pub struct ConstraintPolicy {
    pub pinned_resolved_model: Option<String>,
    pub allow_moving_alias: bool,
    pub allow_fallback: bool,
    allowed_region_classes: BTreeSet<RegionClass>,
    pub allowed_tools: Option<BTreeSet<String>>,
    pub required_effective_tier: Option<String>,
    pub forbid_global_endpoint: bool,
}

impl TryFrom<ConstraintDocument> for ConstraintPolicy {
    type Error = ConstraintError;

    fn try_from(d: ConstraintDocument) -> Result<Self, Self::Error> {
        let policy = ConstraintPolicy {
            pinned_resolved_model: d.pinned_resolved_model,
            allow_moving_alias: d.allow_moving_alias,
            allow_fallback: d.allow_fallback,
            allowed_region_classes: d.allowed_region_classes,
            allowed_tools: d.allowed_tools,
            required_effective_tier: d.required_effective_tier,
            forbid_global_endpoint: d.forbid_global_endpoint,
        };
        if policy.effective_regions().is_empty() {
            return Err(ConstraintError::NoRegionAllowed);
        }
        Ok(policy)
    }
}

impl From<ConstraintPolicy> for ConstraintDocument {
    fn from(p: ConstraintPolicy) -> Self {
        ConstraintDocument {
            pinned_resolved_model: p.pinned_resolved_model,
            allow_moving_alias: p.allow_moving_alias,
            allow_fallback: p.allow_fallback,
            allowed_region_classes: p.allowed_region_classes,
            allowed_tools: p.allowed_tools,
            required_effective_tier: p.required_effective_tier,
            forbid_global_endpoint: p.forbid_global_endpoint,
        }
    }
}

impl Default for ConstraintPolicy {
    fn default() -> Self {
        ConstraintPolicy::permissive()
    }
}

impl ConstraintPolicy {
    /// A policy that constrains nothing.
    pub fn permissive() -> Self {
        ConstraintPolicy {
            pinned_resolved_model: None,
            allow_moving_alias: true,
            allow_fallback: true,
            allowed_region_classes: all_regions(),
            allowed_tools: None,
            required_effective_tier: None,
            forbid_global_endpoint: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConstraintError> {
        serde_json::from_str(text).map_err(|e| ConstraintError::Malformed(e.to_string()))
    }

    pub fn allowed_region_classes(&self) -> &BTreeSet<RegionClass> {
        &self.allowed_region_classes
    }

    pub fn with_allowed_regions(
        mut self,
        regions: impl IntoIterator<Item = RegionClass>,
    ) -> Result<Self, ConstraintError> {
        self.allowed_region_classes = regions.into_iter().collect();
        if self.effective_regions().is_empty() {
            return Err(ConstraintError::NoRegionAllowed);
        }
        Ok(self)
    }

    /// Allowed regions after applying `forbid_global_endpoint`.
    pub fn effective_regions(&self) -> BTreeSet<RegionClass> {
        let mut regions = self.allowed_region_classes.clone();
        if self.forbid_global_endpoint {
            regions.remove(&RegionClass::Global);
        }
        regions
    }

    fn regions_constrained(&self) -> bool {
        self.effective_regions().len() < RegionClass::ALL.len()
    }

    /// Splits the policy into single-constraint policies whose combined
    /// violations equal this policy's.
    pub fn single_constraints(&self) -> Vec<ConstraintPolicy> {
        let base = ConstraintPolicy::permissive();
        let mut parts = Vec::new();
        if self.pinned_resolved_model.is_some() {
            parts.push(ConstraintPolicy {
                pinned_resolved_model: self.pinned_resolved_model.clone(),
                ..base.clone()
            });
        }
        if !self.allow_moving_alias {
            parts.push(ConstraintPolicy {
                allow_moving_alias: false,
                ..base.clone()
            });
        }
        if !self.allow_fallback {
            parts.push(ConstraintPolicy {
                allow_fallback: false,
                ..base.clone()
            });
        }
        if self.regions_constrained() {
            parts.push(ConstraintPolicy {
                allowed_region_classes: self.effective_regions(),
                ..base.clone()
            });
        }
        if self.allowed_tools.is_some() {
            parts.push(ConstraintPolicy {
                allowed_tools: self.allowed_tools.clone(),
                ..base.clone()
            });
        }
        if self.required_effective_tier.is_some() {
            parts.push(ConstraintPolicy {
                required_effective_tier: self.required_effective_tier.clone(),
                ..base
            });
        }
        parts
    }
}

fn hidden_or_unknown(r: &RouteReceipt, field: &str) -> String {
    if r.redactions.iter().any(|e| e.field == field) {
        "redacted".into()
    } else {
        "unknown".into()
    }
}

/// Checks every constraint in `p` against `r`; one violation per breach.
pub fn evaluate(r: &RouteReceipt, p: &ConstraintPolicy) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |code, field_path: &str, expected: String, observed: String| {
        out.push(Violation {
            code,
            field_path: field_path.to_owned(),
            expected,
            observed,
        })
    };

    if let Some(pin) = &p.pinned_resolved_model {
        let observed = match &r.resolved_model {
            Some(m) => m.clone(),
            None => hidden_or_unknown(r, "resolved_model"),
        };
        if &observed != pin || r.resolved_model.is_none() {
            push(ViolationCode::ModelDrift, "/resolved_model", pin.clone(), observed);
        }
    }

    if !p.allow_moving_alias {
        match r.model_identifier_type {
            ModelIdentifierType::Fixed => {}
            other => push(
                ViolationCode::MovingAliasUsed,
                "/model_identifier_type",
                ModelIdentifierType::Fixed.to_string(),
                other.to_string(),
            ),
        }
    }

    if !p.allow_fallback && r.fallback.status != FallbackStatus::None {
        push(
            ViolationCode::FallbackForbidden,
            "/fallback/status",
            FallbackStatus::None.to_string(),
            r.fallback.status.to_string(),
        );
    }

    let regions = p.effective_regions();
    if !regions.contains(&r.region_class) {
        let expected: Vec<&str> = regions.iter().map(|c| c.as_str()).collect();
        push(
            ViolationCode::RegionForbidden,
            "/region_class",
            expected.join("|"),
            r.region_class.to_string(),
        );
    }

    if let Some(allowed) = &p.allowed_tools {
        let expected = allowed.iter().cloned().collect::<Vec<_>>().join("|");
        match &r.tools {
            None => push(
                ViolationCode::ToolForbidden,
                "/tools",
                expected,
                hidden_or_unknown(r, "tools"),
            ),
            Some(tools) => {
                for (i, tool) in tools.used.iter().enumerate() {
                    if tool.invocation_count > 0 && !allowed.contains(&tool.name) {
                        push(
                            ViolationCode::ToolForbidden,
                            &format!("/tools/used/{i}/name"),
                            expected.clone(),
                            tool.name.clone(),
                        );
                    }
                }
            }
        }
    }

    if let Some(tier) = &p.required_effective_tier {
        match &r.service_tier {
            Some(t) if &t.effective == tier => {}
            Some(t) => push(
                ViolationCode::TierMismatch,
                "/service_tier/effective",
                tier.clone(),
                t.effective.clone(),
            ),
            None => push(
                ViolationCode::TierMismatch,
                "/service_tier/effective",
                tier.clone(),
                hidden_or_unknown(r, "service_tier"),
            ),
        }
    }

    out
}
