//! Receipt-emitting gateway in front of a (simulated) provider.
//!
//! [`Gateway`] forwards a completion upstream, builds a route receipt from
//! the reply metadata and stores it. [`http::router`] exposes the gateway,
//! the store and the receipt tools over HTTP. [`probes`] runs black-box
//! drift and fallback probes against a scenario.

pub mod clock;
pub mod config;
pub mod http;
pub mod probes;
pub mod scenario;
pub mod service;
pub mod simulator;
pub mod upstream;

pub use clock::{Clock, FixedClock, IdSource, StepClock, SystemClock};
pub use config::ServiceConfig;
pub use scenario::SimScenario;
pub use service::{CompletionExchange, CompletionResponse, Gateway, GatewayError};
pub use simulator::{decide, CompletionRequest};
pub use upstream::{SimulatedUpstream, Upstream, UpstreamError, UpstreamReply};
