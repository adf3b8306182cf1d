//! Closed string enumerations used by the receipt schema.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Returned when a string is not a member of a closed enumeration.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{value}` is not a valid {kind}")]
pub struct UnknownVariant {
    pub kind: &'static str,
    pub value: String,
}

macro_rules! string_enum {
    (
        $(#[$meta:meta])*
        $name:ident { $($variant:ident => $text:literal),+ $(,)? }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            /// Every member, in schema declaration order.
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl FromStr for $name {
            type Err = UnknownVariant;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(UnknownVariant { kind: stringify!($name), value: s.to_owned() }),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.pad(self.as_str())
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_enum! {
    /// Whether the requested model label is a pinned snapshot or something that can move.
    ModelIdentifierType {
        Fixed => "fixed",
        MovingAlias => "moving_alias",
        Router => "router",
        Unknown => "unknown",
    }
}

string_enum! {
    TierChangeReason {
        None => "none",
        Capacity => "capacity",
        RateLimit => "rate_limit",
        Policy => "policy",
        ProviderFailure => "provider_failure",
        Unknown => "unknown",
        Redacted => "redacted",
    }
}

string_enum! {
    EffortLevel {
        Minimal => "minimal",
        Low => "low",
        Medium => "medium",
        High => "high",
        XHigh => "xhigh",
        ProviderDefault => "provider_default",
        Unknown => "unknown",
    }
}

string_enum! {
    EffortStatus {
        Completed => "completed",
        BudgetExhausted => "budget_exhausted",
        Downgraded => "downgraded",
        NotApplicable => "not_applicable",
        Unknown => "unknown",
        Redacted => "redacted",
    }
}

string_enum! {
    /// Truncation flag. The schema models booleans as strings so that
    /// `unknown` and `redacted` fit alongside them.
    InputTruncated {
        False => "false",
        True => "true",
        Unknown => "unknown",
        Redacted => "redacted",
    }
}

string_enum! {
    ContextWindowClass {
        WithinLimit => "within_limit",
        NearLimit => "near_limit",
        Exceeded => "exceeded",
        Unknown => "unknown",
        Redacted => "redacted",
    }
}

string_enum! {
    FallbackStatus {
        None => "none",
        Occurred => "occurred",
        Unknown => "unknown",
        Redacted => "redacted",
    }
}

string_enum! {
    FallbackReason {
        None => "none",
        RateLimit => "rate_limit",
        ProviderError => "provider_error",
        ModerationRefusal => "moderation_refusal",
        Capacity => "capacity",
        Policy => "policy",
        Unknown => "unknown",
        Redacted => "redacted",
    }
}

string_enum! {
    SafetyStatus {
        None => "none",
        Intervened => "intervened",
        Unknown => "unknown",
        Redacted => "redacted",
    }
}

string_enum! {
    SafetyAction {
        None => "none",
        Blocked => "blocked",
        Masked => "masked",
        Rewritten => "rewritten",
        Refused => "refused",
        Unknown => "unknown",
        Redacted => "redacted",
    }
}

string_enum! {
    RegionClass {
        UserSelectedRegion => "user_selected_region",
        DataZone => "data_zone",
        Global => "global",
        ProviderDefault => "provider_default",
        Unknown => "unknown",
        Redacted => "redacted",
    }
}

string_enum! {
    HopRole {
        Requested => "requested",
        Served => "served",
        Fallback => "fallback",
        Tool => "tool",
        Unknown => "unknown",
    }
}

string_enum! {
    CompletionStatus {
        Complete => "complete",
        LengthLimit => "length_limit",
        ToolError => "tool_error",
        SafetyBlock => "safety_block",
        Error => "error",
        Unknown => "unknown",
    }
}

string_enum! {
    RedactionReason {
        Privacy => "privacy",
        Security => "security",
        Safety => "safety",
        TradeSecret => "trade_secret",
        Contractual => "contractual",
        NotCollected => "not_collected",
        NotApplicable => "not_applicable",
    }
}

string_enum! {
    RetentionClass {
        Ephemeral => "ephemeral",
        Standard => "standard",
        Regulated => "regulated",
        AuditHold => "audit_hold",
        Unknown => "unknown",
    }
}

string_enum! {
    /// The four stakeholder views, ordered from narrowest to widest access.
    Audience {
        EndUser => "end_user",
        Developer => "developer",
        Administrator => "administrator",
        Auditor => "auditor",
    }
}

impl Audience {
    /// All audiences at or above `self` in the disclosure order.
    pub fn and_wider(self) -> impl Iterator<Item = Audience> {
        Audience::ALL.iter().copied().filter(move |a| *a >= self)
    }
}
