//! Scenario files for the simulated provider.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::Rng;
use route_receipt::normalize::AttemptOutcome;
use route_receipt::receipt::{EffortStatus, RegionClass, SafetyAction};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {detail}")]
    Read { path: String, detail: String },
    #[error("scenario is malformed: {0}")]
    Malformed(String),
    #[error("alias {0:?} has no snapshots")]
    EmptyAlias(String),
    #[error("alias {0:?} must start at request index 0")]
    AliasStartsLate(String),
    #[error("alias {0:?} lists active_from {1} twice or out of order")]
    AliasOrder(String, u64),
    #[error("probability {0} is outside [0, 1]")]
    Probability(f64),
    #[error("hop {0} fails with \"ok\"")]
    OkFailure(usize),
}

/// When a behavior fires: at listed request indices, and otherwise with a
/// fixed probability.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub at: BTreeSet<u64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub probability: f64,
}

fn is_zero(p: &f64) -> bool {
    *p == 0.0
}

impl Schedule {
    pub fn at(indices: impl IntoIterator<Item = u64>) -> Self {
        Schedule {
            at: indices.into_iter().collect(),
            probability: 0.0,
        }
    }

    /// Always draws once so later draws do not depend on the schedule.
    pub fn fires(&self, index: u64, rng: &mut impl Rng) -> bool {
        let roll: f64 = rng.gen();
        self.at.contains(&index) || roll < self.probability
    }

    fn check(&self) -> Result<(), ScenarioError> {
        if !(0.0..=1.0).contains(&self.probability) {
            return Err(ScenarioError::Probability(self.probability));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AliasStep {
    pub snapshot: String,
    pub active_from: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierDowngrade {
    #[serde(default = "priority")]
    pub from: String,
    #[serde(default = "default_tier")]
    pub to: String,
    #[serde(default, flatten)]
    pub when: Schedule,
}

fn priority() -> String {
    "priority".into()
}

fn default_tier() -> String {
    "default".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HopFailure {
    pub at: u64,
    pub kind: AttemptOutcome,
}

/// One entry of the fallback chain. Without `model` the hop serves
/// whatever the requested model resolved to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hop {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub provider: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<HopFailure>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub failure_probability: f64,
    #[serde(default = "rate_limit")]
    pub failure_kind: AttemptOutcome,
}

fn rate_limit() -> AttemptOutcome {
    AttemptOutcome::RateLimit
}

impl Hop {
    pub fn new(model: Option<&str>, provider: &str) -> Self {
        Hop {
            model: model.map(str::to_owned),
            provider: provider.to_owned(),
            failures: Vec::new(),
            failure_probability: 0.0,
            failure_kind: AttemptOutcome::RateLimit,
        }
    }

    /// Outcome of this hop for request `index`.
    pub fn outcome(&self, index: u64, rng: &mut impl Rng) -> AttemptOutcome {
        let roll: f64 = rng.gen();
        if let Some(f) = self.failures.iter().find(|f| f.at == index) {
            return f.kind;
        }
        if roll < self.failure_probability {
            self.failure_kind
        } else {
            AttemptOutcome::Ok
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolBehavior {
    #[serde(default, flatten)]
    pub when: Schedule,
    #[serde(default = "one")]
    pub invocations: u64,
    #[serde(default)]
    pub results: u64,
    /// Result references to report; generated as `<tool>_results[i]` when
    /// shorter than `results`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub refs: Vec<String>,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafetyBehavior {
    #[serde(default, flatten)]
    pub when: Schedule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default = "refused")]
    pub action: SafetyAction,
}

fn refused() -> SafetyAction {
    SafetyAction::Refused
}

impl Default for SafetyBehavior {
    fn default() -> Self {
        SafetyBehavior {
            when: Schedule::default(),
            category: None,
            action: SafetyAction::Refused,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionBehavior {
    #[serde(default = "provider_default")]
    pub default: RegionClass,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub at: BTreeMap<u64, RegionClass>,
}

fn provider_default() -> RegionClass {
    RegionClass::ProviderDefault
}

impl Default for RegionBehavior {
    fn default() -> Self {
        RegionBehavior {
            default: RegionClass::ProviderDefault,
            at: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffortBehavior {
    /// Requests whose reasoning budget runs out.
    #[serde(default, flatten)]
    pub budget_exhausted: Schedule,
    #[serde(default = "budget_exhausted")]
    pub status: EffortStatus,
}

fn budget_exhausted() -> EffortStatus {
    EffortStatus::BudgetExhausted
}

impl Default for EffortBehavior {
    fn default() -> Self {
        EffortBehavior {
            budget_exhausted: Schedule::default(),
            status: EffortStatus::BudgetExhausted,
        }
    }
}

/// Everything the simulated provider decides, as data. Decisions for a
/// request depend only on the scenario and the request's index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimScenario {
    #[serde(default)]
    pub seed: u64,
    /// Moving aliases and the snapshot each resolves to from a request
    /// index onward.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub alias_table: BTreeMap<String, Vec<AliasStep>>,
    /// Requested names that a router resolves; otherwise like aliases.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub routers: BTreeSet<String>,
    /// Tier used when the request names none.
    #[serde(default = "default_tier")]
    pub default_tier: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tier_downgrade: Option<TierDowngrade>,
    /// Tried in order until a hop answers. Empty means one hop on
    /// `default_provider`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fallback_chain: Vec<Hop>,
    #[serde(default = "sim_provider")]
    pub default_provider: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tools: BTreeMap<String, ToolBehavior>,
    #[serde(default)]
    pub safety: SafetyBehavior,
    #[serde(default)]
    pub region: RegionBehavior,
    #[serde(default)]
    pub effort: EffortBehavior,
    #[serde(default)]
    pub truncation: Schedule,
    #[serde(default)]
    pub length_limit: Schedule,
}

fn sim_provider() -> String {
    "sim".into()
}

impl Default for SimScenario {
    fn default() -> Self {
        SimScenario::from_json("{}").expect("empty scenario is valid")
    }
}

impl SimScenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: SimScenario = serde_json::from_str(text).map_err(|e| ScenarioError::Malformed(e.to_string()))?;
        s.check()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Read {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        SimScenario::from_json(&text)
    }

    pub fn check(&self) -> Result<(), ScenarioError> {
        for (alias, steps) in &self.alias_table {
            let first = steps.first().ok_or_else(|| ScenarioError::EmptyAlias(alias.clone()))?;
            if first.active_from != 0 {
                return Err(ScenarioError::AliasStartsLate(alias.clone()));
            }
            for pair in steps.windows(2) {
                if pair[1].active_from <= pair[0].active_from {
                    return Err(ScenarioError::AliasOrder(alias.clone(), pair[1].active_from));
                }
            }
        }
        let mut schedules = vec![
            &self.safety.when,
            &self.effort.budget_exhausted,
            &self.truncation,
            &self.length_limit,
        ];
        if let Some(d) = &self.tier_downgrade {
            schedules.push(&d.when);
        }
        schedules.extend(self.tools.values().map(|t| &t.when));
        for s in schedules {
            s.check()?;
        }
        for (i, hop) in self.fallback_chain.iter().enumerate() {
            if !(0.0..=1.0).contains(&hop.failure_probability) {
                return Err(ScenarioError::Probability(hop.failure_probability));
            }
            if hop.failure_kind == AttemptOutcome::Ok || hop.failures.iter().any(|f| f.kind == AttemptOutcome::Ok) {
                return Err(ScenarioError::OkFailure(i));
            }
        }
        Ok(())
    }

    /// Snapshot `alias` resolves to at request `index`, or `None` for names
    /// that are not moving aliases.
    pub fn resolve_alias(&self, alias: &str, index: u64) -> Option<&str> {
        self.alias_table
            .get(alias)?
            .iter()
            .rev()
            .find(|s| s.active_from <= index)
            .map(|s| s.snapshot.as_str())
    }

    /// The hops a request walks through, never empty.
    pub fn hops(&self) -> Vec<Hop> {
        if self.fallback_chain.is_empty() {
            vec![Hop::new(None, &self.default_provider)]
        } else {
            self.fallback_chain.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn alias_resolution_by_index() {
        let s = SimScenario::from_json(
            r#"{"alias_table": {"contract-pro-latest": [
                {"snapshot": "contract-pro-2026-03-02", "active_from": 0},
                {"snapshot": "contract-pro-2026-04-18", "active_from": 50}]}}"#,
        )
        .unwrap();
        assert_eq!(
            s.resolve_alias("contract-pro-latest", 49),
            Some("contract-pro-2026-03-02")
        );
        assert_eq!(
            s.resolve_alias("contract-pro-latest", 50),
            Some("contract-pro-2026-04-18")
        );
        assert_eq!(s.resolve_alias("m-a", 0), None);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(matches!(
            SimScenario::from_json(r#"{"alias_table": {"a": []}}"#),
            Err(ScenarioError::EmptyAlias(_))
        ));
        assert!(matches!(
            SimScenario::from_json(r#"{"alias_table": {"a": [{"snapshot": "s", "active_from": 3}]}}"#),
            Err(ScenarioError::AliasStartsLate(_))
        ));
        assert!(matches!(
            SimScenario::from_json(r#"{"truncation": {"probability": 1.5}}"#),
            Err(ScenarioError::Probability(_))
        ));
        assert!(SimScenario::from_json(r#"{"sead": 1}"#).is_err());
        assert!(matches!(
            SimScenario::from_json(r#"{"fallback_chain": [{"provider": "p", "failures": [{"at": 1, "kind": "ok"}]}]}"#),
            Err(ScenarioError::OkFailure(0))
        ));
    }

    #[test]
    fn schedules_fire_at_indices() {
        let s = Schedule::at([3]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        assert!(s.fires(3, &mut rng));
        assert!(!s.fires(4, &mut rng));
        let always = Schedule {
            at: BTreeSet::new(),
            probability: 1.0,
        };
        assert!(always.fires(9, &mut rng));
    }

    #[test]
    fn defaults() {
        let s = SimScenario::default();
        assert_eq!(s.default_tier, "default");
        assert_eq!(s.hops().len(), 1);
        assert_eq!(s.region.default, RegionClass::ProviderDefault);
    }
}
