use std::sync::Mutex;

use route_receipt::normalize::{ProviderSurface, SimulatedRoute};
use route_receipt::receipt::{CompletionStatus, ModelIdentifierType, RegionClass};
use serde_json::Value;

use crate::scenario::SimScenario;
use crate::simulator::{decide, CompletionRequest};

/// Route facts the serving side knows without reading provider metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServingFacts {
    pub model_identifier_type: ModelIdentifierType,
    pub region_class: RegionClass,
    pub completion_status: CompletionStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpstreamReply {
    pub text: String,
    pub surface: ProviderSurface,
    /// Provider metadata in the surface's documented shape.
    pub raw: Value,
    pub facts: ServingFacts,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("upstream failed: {0}")]
pub struct UpstreamError(pub String);

/// A provider the gateway forwards completions to. `index` numbers requests
/// in arrival order.
pub trait Upstream: Send + Sync {
    fn complete(&self, index: u64, req: &CompletionRequest) -> Result<UpstreamReply, UpstreamError>;
}

/// The scenario-driven provider. Keeps a log of every decision it made.
#[derive(Debug)]
pub struct SimulatedUpstream {
    scenario: SimScenario,
    log: Mutex<Vec<SimulatedRoute>>,
}

pub const PLACEHOLDER_TEXT: &str = "[simulated completion]";

impl SimulatedUpstream {
    pub fn new(scenario: SimScenario) -> Self {
        SimulatedUpstream {
            scenario,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn scenario(&self) -> &SimScenario {
        &self.scenario
    }

    /// Decisions in the order they were made.
    pub fn decision_log(&self) -> Vec<SimulatedRoute> {
        self.log.lock().expect("decision log poisoned").clone()
    }

    pub fn reply_for(route: &SimulatedRoute) -> UpstreamReply {
        UpstreamReply {
            text: PLACEHOLDER_TEXT.to_owned(),
            surface: ProviderSurface::Simulated,
            raw: serde_json::to_value(route).expect("routes serialize"),
            facts: ServingFacts {
                model_identifier_type: route.model_identifier_type,
                region_class: route.region_class,
                completion_status: route.completion_status,
            },
        }
    }
}

impl Upstream for SimulatedUpstream {
    fn complete(&self, index: u64, req: &CompletionRequest) -> Result<UpstreamReply, UpstreamError> {
        let route = decide(&self.scenario, index, req);
        let reply = SimulatedUpstream::reply_for(&route);
        self.log.lock().expect("decision log poisoned").push(route);
        Ok(reply)
    }
}
