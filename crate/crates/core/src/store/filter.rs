use serde::{Deserialize, Serialize};

use crate::receipt::{CompletionStatus, FallbackStatus, RegionClass, RetentionClass, RouteReceipt, Timestamp};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("window starts at {from} but ends earlier at {to}")]
pub struct WindowError {
    pub from: Timestamp,
    pub to: Timestamp,
}

/// Half-open `[from, to)` range over `served_at`. Either bound may be open.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawWindow", into = "RawWindow")]
pub struct TimeWindow {
    from: Option<Timestamp>,
    to: Option<Timestamp>,
}

#[derive(Serialize, Deserialize)]
struct RawWindow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    from: Option<Timestamp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    to: Option<Timestamp>,
}

impl TryFrom<RawWindow> for TimeWindow {
    type Error = WindowError;

    fn try_from(raw: RawWindow) -> Result<Self, WindowError> {
        TimeWindow::new(raw.from, raw.to)
    }
}

impl From<TimeWindow> for RawWindow {
    fn from(w: TimeWindow) -> Self {
        RawWindow { from: w.from, to: w.to }
    }
}

impl TimeWindow {
    pub fn new(from: Option<Timestamp>, to: Option<Timestamp>) -> Result<Self, WindowError> {
        if let (Some(f), Some(t)) = (&from, &to) {
            if f.instant() > t.instant() {
                return Err(WindowError {
                    from: f.clone(),
                    to: t.clone(),
                });
            }
        }
        Ok(TimeWindow { from, to })
    }

    pub fn all() -> Self {
        TimeWindow::default()
    }

    pub fn from(&self) -> Option<&Timestamp> {
        self.from.as_ref()
    }

    pub fn to(&self) -> Option<&Timestamp> {
        self.to.as_ref()
    }

    pub fn contains(&self, t: &Timestamp) -> bool {
        let at = t.instant();
        self.from.as_ref().is_none_or(|f| f.instant() <= at) && self.to.as_ref().is_none_or(|e| at < e.instant())
    }
}

/// Absent or unknown retention classes are kept as standard.
pub fn effective_retention(r: &RouteReceipt) -> RetentionClass {
    match r.retention_class {
        None | Some(RetentionClass::Unknown) => RetentionClass::Standard,
        Some(c) => c,
    }
}

/// Every set field must match.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiptFilter {
    #[serde(default, flatten)]
    pub window: TimeWindow,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requested_model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback_status: Option<FallbackStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_class: Option<RegionClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_status: Option<CompletionStatus>,
    /// Compared against the effective class, so `standard` also matches
    /// receipts without one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retention_class: Option<RetentionClass>,
}

impl ReceiptFilter {
    pub fn all() -> Self {
        ReceiptFilter::default()
    }

    pub fn in_window(window: TimeWindow) -> Self {
        ReceiptFilter {
            window,
            ..Default::default()
        }
    }

    pub fn matches(&self, r: &RouteReceipt) -> bool {
        self.window.contains(&r.served_at)
            && self
                .requested_model
                .as_ref()
                .is_none_or(|m| r.requested_model.as_ref() == Some(m))
            && self.fallback_status.is_none_or(|s| r.fallback.status == s)
            && self.region_class.is_none_or(|c| r.region_class == c)
            && self.completion_status.is_none_or(|c| r.completion_status == c)
            && self
                .retention_class
                .is_none_or(|c| effective_retention(r) == effective_class(c))
    }
}

fn effective_class(c: RetentionClass) -> RetentionClass {
    if c == RetentionClass::Unknown {
        RetentionClass::Standard
    } else {
        c
    }
}
