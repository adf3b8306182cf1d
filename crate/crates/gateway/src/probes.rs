//! Alias-drift and fallback-observability probes against the simulator.

use std::collections::BTreeMap;

use route_receipt::normalize::AttemptOutcome;
use route_receipt::receipt::{CompletionStatus, FallbackStatus, RouteReceipt, Timestamp};
use route_receipt::redact::{field_state, view_for, FieldState, RedactionPolicy};
use route_receipt::Audience;
use serde::{Deserialize, Serialize};

use crate::clock::IdSource;
use crate::scenario::{HopFailure, SimScenario};
use crate::service::{assemble, GatewayError};
use crate::simulator::{decide, CompletionRequest};
use crate::upstream::SimulatedUpstream;

#[derive(Debug, thiserror::Error)]
pub enum ProbeError {
    #[error("alias {0:?} is not in the scenario's alias table")]
    UnknownAlias(String),
    #[error("alias-drift probe needs at least one alias and one prompt")]
    NothingToProbe,
    #[error("fallback probe needs a chain of at least two hops, scenario has {0}")]
    ChainTooShort(usize),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    AliasDrift,
    FallbackObservability,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventDetail {
    Drift {
        alias: String,
        from: String,
        to: String,
    },
    Fallback {
        kind: TriggerKind,
        completion_status: CompletionStatus,
        visible: FallbackVisibility,
        matches_decision_log: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeEvent {
    pub request_index: u64,
    pub detail: EventDetail,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub requests: u64,
    pub events: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visible: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub all_visible: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub probe: ProbeKind,
    pub events: Vec<ProbeEvent>,
    pub summary: ProbeSummary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AliasDriftProbe {
    pub aliases: Vec<String>,
    #[serde(default = "default_prompts")]
    pub prompts: Vec<String>,
    pub n: u64,
}

fn default_prompts() -> Vec<String> {
    vec!["Summarize the indemnity clause.".into()]
}

fn served_at() -> Timestamp {
    "2026-01-01T00:00:00Z".parse().expect("fixed instant")
}

/// Receipt the gateway would emit for request `index`, without storing it.
fn probe_receipt(
    scenario: &SimScenario,
    index: u64,
    req: &CompletionRequest,
    ids: &IdSource,
) -> Result<(RouteReceipt, route_receipt::normalize::SimulatedRoute), GatewayError> {
    let route = decide(scenario, index, req);
    let reply = SimulatedUpstream::reply_for(&route);
    let id = ids.next_receipt_id();
    let request_id = format!("req-probe-{index}");
    let (merged, _, _) = assemble(Ok(reply), req, id, request_id, served_at())?;
    Ok((merged.receipt, route))
}

/// Issues `n` completions per prompt for every alias and reports each index
/// where an alias resolved differently than at the index before.
pub fn run_alias_drift_probe(probe: &AliasDriftProbe, scenario: &SimScenario) -> Result<ProbeReport, ProbeError> {
    if probe.aliases.is_empty() || probe.prompts.is_empty() {
        return Err(ProbeError::NothingToProbe);
    }
    if let Some(unknown) = probe.aliases.iter().find(|a| !scenario.alias_table.contains_key(*a)) {
        return Err(ProbeError::UnknownAlias(unknown.clone()));
    }

    let ids = IdSource::seeded(scenario.seed);
    let mut events = Vec::new();
    let mut requests = 0;
    for alias in &probe.aliases {
        let mut previous: BTreeMap<&str, String> = BTreeMap::new();
        for index in 0..probe.n {
            let mut change = None;
            for prompt in &probe.prompts {
                let mut req = CompletionRequest::new(alias.clone());
                req.prompt = prompt.clone();
                let (receipt, _) = probe_receipt(scenario, index, &req, &ids)?;
                requests += 1;
                let now = receipt.resolved_model.unwrap_or_else(|| "unknown".into());
                if let Some(before) = previous.insert(prompt.as_str(), now.clone()) {
                    if before != now && change.is_none() {
                        change = Some((before, now));
                    }
                }
            }
            if let Some((from, to)) = change {
                events.push(ProbeEvent {
                    request_index: index,
                    detail: EventDetail::Drift {
                        alias: alias.clone(),
                        from,
                        to,
                    },
                });
            }
        }
    }
    Ok(ProbeReport {
        probe: ProbeKind::AliasDrift,
        summary: ProbeSummary {
            requests,
            events: events.len() as u64,
            ..Default::default()
        },
        events,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerKind {
    RateLimit,
    ProviderError,
    UnavailableModel,
}

impl TriggerKind {
    fn outcome(self) -> AttemptOutcome {
        match self {
            TriggerKind::RateLimit => AttemptOutcome::RateLimit,
            TriggerKind::ProviderError => AttemptOutcome::ProviderError,
            TriggerKind::UnavailableModel => AttemptOutcome::UnavailableModel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FallbackTrigger {
    pub kind: TriggerKind,
    pub request_index: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FallbackProbe {
    #[serde(default)]
    pub triggers: Vec<FallbackTrigger>,
    /// Model to request. Defaults to the first hop's model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default = "developer")]
    pub audience: Audience,
}

fn developer() -> Audience {
    Audience::Developer
}

/// Which parts of the fallback record the audience view shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FallbackVisibility {
    pub status: bool,
    pub from: bool,
    pub to: bool,
    pub reason: bool,
}

impl FallbackVisibility {
    pub fn all(&self) -> bool {
        self.status && self.from && self.to && self.reason
    }
}

/// Fires each trigger in isolation and checks that the receipt shows the
/// fallback to `probe.audience` under `policy`.
pub fn run_fallback_probe(
    probe: &FallbackProbe,
    scenario: &SimScenario,
    policy: &RedactionPolicy,
) -> Result<ProbeReport, ProbeError> {
    let hops = scenario.hops();
    if !probe.triggers.is_empty() && hops.len() < 2 {
        return Err(ProbeError::ChainTooShort(hops.len()));
    }
    let model = probe
        .model
        .clone()
        .or_else(|| hops[0].model.clone())
        .unwrap_or_else(|| "sim-model".into());

    let ids = IdSource::seeded(scenario.seed);
    let mut events = Vec::new();
    for trigger in &probe.triggers {
        let mut s = scenario.clone();
        s.fallback_chain = hops.clone();
        let failing = match trigger.kind {
            TriggerKind::UnavailableModel => s.fallback_chain.len(),
            _ => 1,
        };
        for hop in &mut s.fallback_chain[..failing] {
            hop.failures.push(HopFailure {
                at: trigger.request_index,
                kind: trigger.kind.outcome(),
            });
        }
        let req = CompletionRequest::new(model.clone());
        let (receipt, route) = probe_receipt(&s, trigger.request_index, &req, &ids)?;
        let view = view_for(&receipt, probe.audience, policy);
        let doc = serde_json::to_value(&view.receipt).expect("receipts serialize");
        let shown = |path| matches!(field_state(&doc, path), FieldState::Shown(_));
        let visible = FallbackVisibility {
            status: shown("fallback.status") && view.receipt.fallback.status == FallbackStatus::Occurred,
            from: shown("fallback.from"),
            to: shown("fallback.to"),
            reason: shown("fallback.reason"),
        };
        events.push(ProbeEvent {
            request_index: trigger.request_index,
            detail: EventDetail::Fallback {
                kind: trigger.kind,
                completion_status: receipt.completion_status,
                visible,
                matches_decision_log: receipt.fallback == route.fallback_record()
                    && receipt.resolved_model.as_deref() == Some(route.resolved_model.as_str())
                    && receipt.completion_status == route.completion_status,
            },
        });
    }
    let visible = events
        .iter()
        .filter(|e| matches!(&e.detail, EventDetail::Fallback { visible, .. } if visible.all()))
        .count() as u64;
    Ok(ProbeReport {
        probe: ProbeKind::FallbackObservability,
        summary: ProbeSummary {
            requests: events.len() as u64,
            events: events.len() as u64,
            visible: Some(visible),
            all_visible: Some(visible == events.len() as u64),
        },
        events,
    })
}
