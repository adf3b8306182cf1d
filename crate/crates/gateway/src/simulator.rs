//! The deterministic simulated provider.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use route_receipt::normalize::{
    Attempt, AttemptOutcome, SimulatedEffort, SimulatedRoute, SimulatedSafety, SimulatedTier, SimulatedToolCall,
};
use route_receipt::receipt::{
    CompletionStatus, EffortLevel, EffortStatus, ModelIdentifierType, RegionClass, RetentionClass, SafetyAction,
};
use serde::{Deserialize, Serialize};

use crate::scenario::SimScenario;

/// What a caller asks the gateway for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompletionRequest {
    pub model: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service_tier: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effort: Option<EffortLevel>,
    /// Tools the model may call. None allows no tools.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tools: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retention_class: Option<RetentionClass>,
}

impl CompletionRequest {
    pub fn new(model: impl Into<String>) -> Self {
        CompletionRequest {
            model: model.into(),
            prompt: String::new(),
            service_tier: None,
            effort: None,
            tools: None,
            region: None,
            request_id: None,
            retention_class: None,
        }
    }
}

/// Per-request randomness: one ChaCha stream per request index.
pub fn request_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Every route decision for request `index`. Pure in its arguments.
pub fn decide(scenario: &SimScenario, index: u64, req: &CompletionRequest) -> SimulatedRoute {
    let mut rng = request_rng(scenario.seed, index);

    let (resolved, model_identifier_type) = match scenario.resolve_alias(&req.model, index) {
        Some(snapshot) if scenario.routers.contains(&req.model) => (snapshot.to_owned(), ModelIdentifierType::Router),
        Some(snapshot) => (snapshot.to_owned(), ModelIdentifierType::MovingAlias),
        None => (req.model.clone(), ModelIdentifierType::Fixed),
    };

    let mut effective = req
        .service_tier
        .clone()
        .unwrap_or_else(|| scenario.default_tier.clone());
    let mut downgraded = false;
    if let Some(d) = &scenario.tier_downgrade {
        let fires = d.when.fires(index, &mut rng);
        if fires && req.service_tier.as_deref() == Some(d.from.as_str()) {
            effective = d.to.clone();
            downgraded = true;
        }
    }

    let mut attempts = Vec::new();
    for hop in scenario.hops() {
        let outcome = hop.outcome(index, &mut rng);
        attempts.push(Attempt {
            model: hop.model.clone().unwrap_or_else(|| resolved.clone()),
            provider: hop.provider.clone(),
            outcome,
        });
        if outcome == AttemptOutcome::Ok {
            break;
        }
    }
    let served = attempts.last().is_some_and(|a| a.outcome == AttemptOutcome::Ok);
    let resolved_model = attempts.last().map(|a| a.model.clone()).unwrap_or(resolved);

    let allowed = req.tools.as_deref().unwrap_or_default();
    let mut tools = Vec::new();
    for (name, behavior) in &scenario.tools {
        let fires = behavior.when.fires(index, &mut rng);
        if fires && served && allowed.contains(name) {
            let refs = (0..behavior.results as usize)
                .map(|i| {
                    behavior
                        .refs
                        .get(i)
                        .cloned()
                        .unwrap_or_else(|| format!("{name}_results[{i}]"))
                })
                .collect();
            tools.push(SimulatedToolCall {
                name: name.clone(),
                invocations: behavior.invocations,
                refs,
            });
        }
    }

    let intervened = scenario.safety.when.fires(index, &mut rng) && served;
    let safety = SimulatedSafety {
        intervened,
        category: if intervened {
            scenario.safety.category.clone()
        } else {
            None
        },
        action: if intervened {
            scenario.safety.action
        } else {
            SafetyAction::None
        },
    };

    let exhausted = scenario.effort.budget_exhausted.fires(index, &mut rng);
    let effort = req.effort.map(|requested| SimulatedEffort {
        requested,
        status: if exhausted {
            scenario.effort.status
        } else {
            EffortStatus::Completed
        },
    });

    let input_truncated = scenario.truncation.fires(index, &mut rng);
    let length_limited = scenario.length_limit.fires(index, &mut rng);

    let region_class = scenario
        .region
        .at
        .get(&index)
        .copied()
        .or(req.region)
        .unwrap_or(scenario.region.default);

    let completion_status = if !served {
        CompletionStatus::Error
    } else if intervened && matches!(safety.action, SafetyAction::Blocked | SafetyAction::Refused) {
        CompletionStatus::SafetyBlock
    } else if length_limited {
        CompletionStatus::LengthLimit
    } else {
        CompletionStatus::Complete
    };

    SimulatedRoute {
        request_index: index,
        requested_model: req.model.clone(),
        resolved_model,
        model_identifier_type,
        service_tier: SimulatedTier {
            requested: req.service_tier.clone(),
            effective,
            downgraded,
        },
        effort,
        attempts,
        tools,
        safety,
        input_truncated,
        region_class,
        completion_status,
    }
}
