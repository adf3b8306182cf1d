use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::receipt::{RetentionClass, Timestamp};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("{key}: {detail}")]
    BadDuration { key: String, detail: String },
    #[error("audit_hold receipts never expire")]
    AuditHoldExpires,
    #[error("ephemeral TTL must not exceed the standard TTL")]
    EphemeralOutlivesStandard,
    #[error("cannot read config {path}: {detail}")]
    Read { path: PathBuf, detail: String },
    #[error("config is malformed: {0}")]
    Malformed(String),
}

/// Time to live for one class. `None` never expires.
pub type Ttl = Option<Duration>;

fn parse_ttl(key: &str, text: &str) -> Result<Ttl, ConfigError> {
    let text = text.trim();
    if text == "never" || text == "never_expires" {
        return Ok(None);
    }
    humantime::parse_duration(text)
        .map(Some)
        .map_err(|e| ConfigError::BadDuration {
            key: key.to_owned(),
            detail: e.to_string(),
        })
}

fn format_ttl(ttl: Ttl) -> String {
    match ttl {
        None => "never".into(),
        Some(d) => humantime::format_duration(d).to_string(),
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRules {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ephemeral: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    standard: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    regulated: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    audit_hold: Option<String>,
}

/// Per-class time to live, counted from `served_at`. Durations are written
/// like `24h` or `90days`; `never` disables expiry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawRules", into = "RawRules")]
pub struct RetentionRules {
    ephemeral: Ttl,
    standard: Ttl,
    regulated: Ttl,
}

const HOUR: u64 = 3600;
const DAY: u64 = 24 * HOUR;

impl Default for RetentionRules {
    fn default() -> Self {
        RetentionRules {
            ephemeral: Some(Duration::from_secs(24 * HOUR)),
            standard: Some(Duration::from_secs(90 * DAY)),
            regulated: Some(Duration::from_secs(365 * DAY)),
        }
    }
}

impl TryFrom<RawRules> for RetentionRules {
    type Error = ConfigError;

    fn try_from(raw: RawRules) -> Result<Self, ConfigError> {
        let mut rules = RetentionRules::default();
        for (key, value) in [
            ("ephemeral", raw.ephemeral),
            ("standard", raw.standard),
            ("regulated", raw.regulated),
            ("audit_hold", raw.audit_hold),
        ] {
            if let Some(v) = value {
                rules.set(key, &v)?;
            }
        }
        rules.check()?;
        Ok(rules)
    }
}

impl From<RetentionRules> for RawRules {
    fn from(r: RetentionRules) -> Self {
        RawRules {
            ephemeral: Some(format_ttl(r.ephemeral)),
            standard: Some(format_ttl(r.standard)),
            regulated: Some(format_ttl(r.regulated)),
            audit_hold: Some("never".into()),
        }
    }
}

impl RetentionRules {
    pub fn new(ephemeral: Ttl, standard: Ttl, regulated: Ttl) -> Result<Self, ConfigError> {
        let rules = RetentionRules {
            ephemeral,
            standard,
            regulated,
        };
        rules.check()?;
        Ok(rules)
    }

    fn check(&self) -> Result<(), ConfigError> {
        let longer = match (self.ephemeral, self.standard) {
            (Some(e), Some(s)) => e > s,
            (None, Some(_)) => true,
            _ => false,
        };
        if longer {
            return Err(ConfigError::EphemeralOutlivesStandard);
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let ttl = parse_ttl(key, value)?;
        match key {
            "ephemeral" => self.ephemeral = ttl,
            "standard" => self.standard = ttl,
            "regulated" => self.regulated = ttl,
            "audit_hold" if ttl.is_none() => {}
            "audit_hold" => return Err(ConfigError::AuditHoldExpires),
            _ => unreachable!("retention keys are fixed"),
        }
        Ok(())
    }

    /// Absent and unknown classes use the standard TTL.
    pub fn ttl(&self, class: RetentionClass) -> Ttl {
        match class {
            RetentionClass::Ephemeral => self.ephemeral,
            RetentionClass::Regulated => self.regulated,
            RetentionClass::AuditHold => None,
            RetentionClass::Standard | RetentionClass::Unknown => self.standard,
        }
    }

    /// Whether a receipt of `class` served at `served_at` has expired by `now`.
    pub fn expired(&self, class: RetentionClass, served_at: &Timestamp, now: &Timestamp) -> bool {
        let Some(ttl) = self.ttl(class) else { return false };
        match chrono::Duration::from_std(ttl) {
            Ok(ttl) => served_at
                .instant()
                .checked_add_signed(ttl)
                .is_some_and(|deadline| deadline <= now.instant()),
            Err(_) => false,
        }
    }
}

/// What remains of a purged receipt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tombstone {
    pub receipt_id: String,
    pub served_at: Timestamp,
    pub retention_class: RetentionClass,
    pub purged_at: Timestamp,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PurgeReport {
    pub purged: Vec<String>,
}

pub const ENV_STORE_PATH: &str = "RR_STORE_PATH";
pub const ENV_RETENTION_PREFIX: &str = "RR_RETENTION_";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoreConfig {
    /// Store directory; `None` keeps receipts in memory only.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub retention: RetentionRules,
    #[serde(default = "default_segment_lines")]
    pub segment_lines: usize,
}

fn default_segment_lines() -> usize {
    10_000
}

impl Default for StoreConfig {
    fn default() -> Self {
        StoreConfig {
            path: None,
            retention: RetentionRules::default(),
            segment_lines: default_segment_lines(),
        }
    }
}

impl StoreConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Malformed(e.to_string()))
    }

    /// Reads an optional JSON config file, then applies process environment
    /// overrides.
    pub fn load(file: Option<&Path>) -> Result<Self, ConfigError> {
        let config = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
                    path: path.to_owned(),
                    detail: e.to_string(),
                })?;
                StoreConfig::from_json(&text)?
            }
            None => StoreConfig::default(),
        };
        config.with_env(std::env::vars())
    }

    /// Applies `RR_STORE_PATH` and `RR_RETENTION_<CLASS>` from `vars`.
    pub fn with_env(mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<Self, ConfigError> {
        for (key, value) in vars {
            if key == ENV_STORE_PATH {
                self.path = Some(PathBuf::from(value));
            } else if let Some(class) = key.strip_prefix(ENV_RETENTION_PREFIX) {
                let class = class.to_ascii_lowercase();
                if matches!(class.as_str(), "ephemeral" | "standard" | "regulated" | "audit_hold") {
                    let mut key_name = String::from(ENV_RETENTION_PREFIX);
                    key_name.push_str(&class.to_ascii_uppercase());
                    self.retention.set(&class, &value).map_err(|e| match e {
                        ConfigError::BadDuration { detail, .. } => ConfigError::BadDuration { key: key_name, detail },
                        other => other,
                    })?;
                }
            }
        }
        self.retention.check()?;
        Ok(self)
    }
}
