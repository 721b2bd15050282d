//! Harvesting under provider constraints: on-demand pulls, link-following
//! crawls, and stream subscriptions, all rate-limited per SLA and billed
//! per request. Runs are driven by a single-threaded event loop over either
//! a virtual clock (deterministic, for simulation) or the wall clock.

pub mod cost;
pub mod http;
pub mod poll;
pub mod rate;
pub mod run;
pub mod sim;
pub mod stream;

use serde::{Deserialize, Serialize};

use crate::policy::PrivacyLevel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    /// Queried per request through an interface.
    OnDemand,
    /// Crawled by following links from seed pages.
    Site,
    /// Pushes items under a subscription.
    Stream,
}

impl ProviderKind {
    pub fn label(&self) -> &'static str {
        match self {
            ProviderKind::OnDemand => "on_demand",
            ProviderKind::Site => "site",
            ProviderKind::Stream => "stream",
        }
    }
}

/// A provider's declared constraints: quota, auth, defaults for documents it
/// serves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlaContract {
    pub max_requests: u32,
    /// Window length in seconds over which `max_requests` applies.
    pub window: f64,
    #[serde(default)]
    pub auth_required: bool,
    #[serde(default)]
    pub default_privacy: PrivacyLevel,
    #[serde(default)]
    pub default_license: String,
}

impl SlaContract {
    pub fn validate(&self) -> Result<()> {
        if self.max_requests < 1 {
            return Err(Error::Plan("sla max_requests must be at least 1".into()));
        }
        if !(self.window > 0.0) {
            return Err(Error::Plan("sla window must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkProfile {
    /// Seconds of fixed round-trip overhead per request.
    pub latency: f64,
    /// Bytes per second.
    pub throughput: f64,
    /// Currency per byte moved, on top of the invocation price.
    #[serde(default)]
    pub price_per_byte: f64,
}

impl NetworkProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.latency >= 0.0) {
            return Err(Error::Plan("network latency must be non-negative".into()));
        }
        if !(self.throughput > 0.0) {
            return Err(Error::Plan("network throughput must be positive".into()));
        }
        if !(self.price_per_byte >= 0.0) {
            return Err(Error::Plan("price_per_byte must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Credentials {
    pub bearer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderDescriptor {
    pub id: String,
    pub kind: ProviderKind,
    /// `http://`/`https://` URL for the real adapter, anything else is a
    /// simulation script path relative to the plan file.
    pub endpoint: String,
    pub sla: SlaContract,
    pub network: NetworkProfile,
    #[serde(default)]
    pub invocation_price: f64,
    /// Requests per second the provider's method can serve.
    pub method_throughput: f64,
    pub jurisdiction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credentials: Option<Credentials>,
}

impl ProviderDescriptor {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::Plan("provider id must be non-empty".into()));
        }
        self.sla.validate()?;
        self.network.validate()?;
        if !(self.method_throughput > 0.0) {
            return Err(Error::Plan(format!(
                "provider {}: method_throughput must be positive",
                self.id
            )));
        }
        if !(self.invocation_price >= 0.0) {
            return Err(Error::Plan(format!(
                "provider {}: invocation_price must be non-negative",
                self.id
            )));
        }
        Ok(())
    }

    pub fn uses_real_http(&self) -> bool {
        self.endpoint.starts_with("http://") || self.endpoint.starts_with("https://")
    }
}
