use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::receipt::{CompletionStatus, FallbackStatus, RouteReceipt, SafetyStatus};

use super::TimeWindow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    FallbackRate,
    TierChangeRate,
    AliasResolutionHistogram,
    SafetyInterventionRate,
    IncompleteRate,
}

impl Metric {
    pub const ALL: &'static [Metric] = &[
        Metric::FallbackRate,
        Metric::TierChangeRate,
        Metric::AliasResolutionHistogram,
        Metric::SafetyInterventionRate,
        Metric::IncompleteRate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::FallbackRate => "fallback_rate",
            Metric::TierChangeRate => "tier_change_rate",
            Metric::AliasResolutionHistogram => "alias_resolution_histogram",
            Metric::SafetyInterventionRate => "safety_intervention_rate",
            Metric::IncompleteRate => "incomplete_rate",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown metric {0:?}")]
pub struct UnknownMetric(pub String);

impl FromStr for Metric {
    type Err = UnknownMetric;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| UnknownMetric(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AggregateValue {
    Rate(f64),
    /// resolved_model -> count
    Histogram(BTreeMap<String, u64>),
}

impl AggregateValue {
    pub fn rate(&self) -> Option<f64> {
        match self {
            AggregateValue::Rate(r) => Some(*r),
            AggregateValue::Histogram(_) => None,
        }
    }

    pub fn histogram(&self) -> Option<&BTreeMap<String, u64>> {
        match self {
            AggregateValue::Histogram(h) => Some(h),
            AggregateValue::Rate(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub metric: Metric,
    pub window: TimeWindow,
    pub value: AggregateValue,
    /// Receipts that satisfied the metric's condition. For the histogram this
    /// equals the denominator.
    pub numerator: u64,
    pub denominator: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Computes `metric` over receipts already narrowed to `window`.
pub fn compute<'a>(
    metric: Metric,
    window: TimeWindow,
    receipts: impl IntoIterator<Item = &'a RouteReceipt>,
) -> AggregateReport {
    let mut num = 0u64;
    let mut den = 0u64;
    let mut histogram = BTreeMap::new();
    for r in receipts {
        match metric {
            Metric::FallbackRate => {
                den += 1;
                num += u64::from(r.fallback.status == FallbackStatus::Occurred);
            }
            Metric::SafetyInterventionRate => {
                den += 1;
                num += u64::from(r.safety.status == SafetyStatus::Intervened);
            }
            Metric::IncompleteRate => {
                den += 1;
                num += u64::from(r.completion_status != CompletionStatus::Complete);
            }
            Metric::TierChangeRate => {
                if let Some(t) = &r.service_tier {
                    if let Some(requested) = &t.requested {
                        den += 1;
                        num += u64::from(requested != &t.effective);
                    }
                }
            }
            Metric::AliasResolutionHistogram => {
                if let Some(m) = &r.resolved_model {
                    den += 1;
                    num += 1;
                    *histogram.entry(m.clone()).or_insert(0) += 1;
                }
            }
        }
    }
    let value = match metric {
        Metric::AliasResolutionHistogram => AggregateValue::Histogram(histogram),
        _ => AggregateValue::Rate(ratio(num, den)),
    };
    AggregateReport {
        metric,
        window,
        value,
        numerator: num,
        denominator: den,
    }
}
