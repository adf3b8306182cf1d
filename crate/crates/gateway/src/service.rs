use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use route_receipt::normalize::{extract_fragment_at, merge, Envelope, ExtractError, MergeError, Merged};
use route_receipt::receipt::{CompletionStatus, ModelIdentifierType, RegionClass, RouteReceipt, Timestamp, Warning};
use route_receipt::redact::{
    end_user_labels_with, view_for, AudienceView, EndUserLabel, LabelContext, RedactionPolicy,
};
use route_receipt::store::{ReceiptStore, StoreError};
use route_receipt::Audience;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::clock::{Clock, IdSource, SystemClock};
use crate::simulator::CompletionRequest;
use crate::upstream::{Upstream, UpstreamError, UpstreamReply};

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Merge(#[from] MergeError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    pub receipt_id: String,
    pub request_index: u64,
    /// Provider metadata the receipt was built from; absent when the
    /// upstream itself failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider_metadata: Option<Value>,
}

/// One request, its answer, and the full receipt stored for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionExchange {
    pub request: CompletionRequest,
    pub response: CompletionResponse,
    pub receipt: RouteReceipt,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

/// Receipt-emitting front door for one upstream.
pub struct Gateway {
    upstream: Arc<dyn Upstream>,
    store: Arc<ReceiptStore>,
    policy: RedactionPolicy,
    clock: Arc<dyn Clock>,
    ids: IdSource,
    next_index: AtomicU64,
    fast_tiers: Vec<String>,
}

impl Gateway {
    pub fn new(upstream: Arc<dyn Upstream>, store: Arc<ReceiptStore>) -> Self {
        Gateway {
            upstream,
            store,
            policy: RedactionPolicy::default_policy(),
            clock: Arc::new(SystemClock),
            ids: IdSource::Random,
            next_index: AtomicU64::new(0),
            fast_tiers: Vec::new(),
        }
    }

    pub fn with_policy(mut self, policy: RedactionPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_ids(mut self, ids: IdSource) -> Self {
        self.ids = ids;
        self
    }

    pub fn with_fast_tiers(mut self, tiers: Vec<String>) -> Self {
        self.fast_tiers = tiers;
        self
    }

    pub fn store(&self) -> &Arc<ReceiptStore> {
        &self.store
    }

    pub fn policy(&self) -> &RedactionPolicy {
        &self.policy
    }

    /// Index the next completion will get.
    pub fn next_index(&self) -> u64 {
        self.next_index.load(Ordering::SeqCst)
    }

    /// Forwards `req`, builds its receipt from the reply metadata and
    /// stores it. Failed completions get a receipt too.
    pub fn handle_completion(&self, req: CompletionRequest) -> Result<CompletionExchange, GatewayError> {
        let index = self.next_index.fetch_add(1, Ordering::SeqCst);
        let reply = self.upstream.complete(index, &req);
        let served_at = self.clock.now();
        let receipt_id = self.ids.next_receipt_id();
        let request_id = req
            .request_id
            .clone()
            .unwrap_or_else(|| format!("req-{}", &receipt_id[3..]));

        let (merged, text, raw) = assemble(reply, &req, receipt_id.clone(), request_id, served_at)?;
        self.store.append(&merged.receipt)?;
        Ok(CompletionExchange {
            request: req,
            response: CompletionResponse {
                text,
                receipt_id,
                request_index: index,
                provider_metadata: raw,
            },
            receipt: merged.receipt,
            warnings: merged.warnings,
        })
    }

    pub fn view(&self, id: &str, audience: Audience) -> Result<AudienceView, StoreError> {
        self.store.get(id, audience, &self.policy)
    }

    pub fn view_of(&self, r: &RouteReceipt, audience: Audience) -> AudienceView {
        view_for(r, audience, &self.policy)
    }

    /// End-user labels with history from the store.
    pub fn labels(&self, id: &str) -> Result<Vec<EndUserLabel>, StoreError> {
        let r = self.store.get_receipt(id)?;
        let ctx = LabelContext {
            previous_resolved_model: self.store.previous_resolution(&r),
            fast_tiers: self.fast_tiers.clone(),
        };
        Ok(end_user_labels_with(&r, &ctx))
    }

    pub fn now(&self) -> Timestamp {
        self.clock.now()
    }
}

/// Builds the receipt for one upstream outcome. Returns the merged receipt,
/// the response text and the raw provider metadata.
pub fn assemble(
    reply: Result<UpstreamReply, UpstreamError>,
    req: &CompletionRequest,
    receipt_id: String,
    request_id: String,
    served_at: Timestamp,
) -> Result<(Merged, String, Option<Value>), GatewayError> {
    match reply {
        Ok(reply) => {
            let fragment = extract_fragment_at(reply.surface, &reply.raw, served_at.clone())?;
            let envelope = Envelope {
                receipt_id,
                request_id,
                served_at,
                model_identifier_type: reply.facts.model_identifier_type,
                region_class: reply.facts.region_class,
                completion_status: reply.facts.completion_status,
                retention_class: req.retention_class,
                tools_allowed: req.tools.clone(),
                expected_fields: None,
            };
            Ok((merge(&envelope, &[fragment])?, reply.text, Some(reply.raw)))
        }
        Err(UpstreamError(detail)) => {
            let envelope = Envelope {
                receipt_id,
                request_id,
                served_at,
                model_identifier_type: ModelIdentifierType::Unknown,
                region_class: req.region.unwrap_or(RegionClass::Unknown),
                completion_status: CompletionStatus::Error,
                retention_class: req.retention_class,
                tools_allowed: None,
                expected_fields: None,
            };
            Ok((merge(&envelope, &[])?, format!("[upstream failure: {detail}]"), None))
        }
    }
}
