//! Documents, provenance stamps, and content addressing.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::value::{DocValue, Timestamp};
use crate::Result;

/// Why a provider interaction produced no documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnavailableReason {
    Auth,
    Privacy,
    RateLimit,
    ProviderError,
}

impl UnavailableReason {
    pub fn label(&self) -> &'static str {
        match self {
            UnavailableReason::Auth => "auth",
            UnavailableReason::Privacy => "privacy",
            UnavailableReason::RateLimit => "rate_limit",
            UnavailableReason::ProviderError => "provider_error",
        }
    }
}

/// Tri-state availability: data, a confirmed absence of data, or a block.
///
/// Every interaction with a provider ends in one of these; blocked access is
/// stored, never silently dropped, so downstream reports can tell "no posts"
/// from "could not look".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum AvailabilityStatus {
    Collected,
    Empty,
    Unavailable(UnavailableReason),
}

impl AvailabilityStatus {
    pub fn is_collected(&self) -> bool {
        matches!(self, AvailabilityStatus::Collected)
    }
}

/// Where and when a document came from.
// Field order is lexicographic so serialized stamps are canonical as-is.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceStamp {
    pub availability: AvailabilityStatus,
    pub collected_at: Timestamp,
    pub jurisdiction: String,
    pub provider_id: String,
}

/// A stored document: content-addressed body plus provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub body: DocValue,
    pub id: String,
    pub provenance: ProvenanceStamp,
}

/// Content id: SHA-256 over canonical body bytes, a NUL separator, and the
/// provider id; 64 lowercase hex characters.
pub fn compute_id(body: &DocValue, provider_id: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(body.canonical_bytes());
    hasher.update([0u8]);
    hasher.update(provider_id.as_bytes());
    hex::encode(hasher.finalize())
}

impl Document {
    pub fn new(body: DocValue, provenance: ProvenanceStamp) -> Result<Document> {
        body.validate()?;
        let id = compute_id(&body, &provenance.provider_id);
        Ok(Document {
            body,
            id,
            provenance,
        })
    }

    /// The body's canonical size in bytes (used for cost accounting).
    pub fn body_bytes(&self) -> u64 {
        self.body.canonical_bytes().len() as u64
    }
}
