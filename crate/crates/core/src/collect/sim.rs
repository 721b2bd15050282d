//! Scripted provider simulation: timed responses, failures, and stream
//! items, fully determined by (script, seed).

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::doc::UnavailableReason;
use crate::value::DocValue;
use crate::{Error, Result};

/// What one interaction with a provider produced.
#[derive(Debug, Clone, PartialEq)]
pub enum FetchOutcome {
    Documents {
        docs: Vec<DocValue>,
        links: Vec<String>,
    },
    Empty,
    Unavailable(UnavailableReason),
}

/// Transport abstraction the collection engine drives; implemented by the
/// simulator and the real-HTTP adapter.
pub trait ProviderSource {
    fn fetch(&mut self, request: &str) -> Result<FetchOutcome>;

    /// The next stream item by index, with its delivery jitter in seconds,
    /// or None once the script is exhausted. Must be called once per index,
    /// in order.
    fn stream_item(&mut self, index: u64) -> Result<Option<(DocValue, f64)>>;

    /// Upper bound on stream jitter; the engine requires it to stay below
    /// the production period so deliveries cannot reorder.
    fn max_stream_jitter(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ScriptStatus {
    Ok,
    Empty,
    Auth,
    Privacy,
    RateLimit,
    ProviderError,
}

#[derive(Debug, Clone, Deserialize)]
struct RawResponse {
    #[serde(default = "default_status")]
    outcome: ScriptStatus,
    #[serde(default)]
    documents: Vec<serde_json::Value>,
    #[serde(default)]
    links: Vec<String>,
}

fn default_status() -> ScriptStatus {
    ScriptStatus::Ok
}

#[derive(Debug, Clone, Deserialize)]
struct RawScript {
    #[serde(default)]
    responses: BTreeMap<String, RawResponse>,
    /// Fallback for requests the script does not name; absent means such
    /// requests fail as provider errors.
    #[serde(default)]
    default: Option<RawResponse>,
    /// Items a stream subscription delivers, in order.
    #[serde(default)]
    stream: Vec<serde_json::Value>,
    /// Max seconds of random delivery delay per stream item.
    #[serde(default)]
    jitter: f64,
}

#[derive(Debug, Clone)]
struct ScriptedResponse {
    outcome: FetchOutcome,
}

fn parse_response(raw: &RawResponse, what: &str) -> Result<ScriptedResponse> {
    let outcome = match raw.outcome {
        ScriptStatus::Ok => {
            let docs = raw
                .documents
                .iter()
                .map(DocValue::from_json)
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::Plan(format!("bad document in script response {what}: {e}")))?;
            if docs.is_empty() && raw.links.is_empty() {
                FetchOutcome::Empty
            } else {
                FetchOutcome::Documents {
                    docs,
                    links: raw.links.clone(),
                }
            }
        }
        ScriptStatus::Empty => FetchOutcome::Empty,
        ScriptStatus::Auth => FetchOutcome::Unavailable(UnavailableReason::Auth),
        ScriptStatus::Privacy => FetchOutcome::Unavailable(UnavailableReason::Privacy),
        ScriptStatus::RateLimit => FetchOutcome::Unavailable(UnavailableReason::RateLimit),
        ScriptStatus::ProviderError => FetchOutcome::Unavailable(UnavailableReason::ProviderError),
    };
    Ok(ScriptedResponse { outcome })
}

/// A provider driven entirely by a script file and a derived RNG.
#[derive(Debug)]
pub struct SimulatedProvider {
    responses: BTreeMap<String, ScriptedResponse>,
    default: Option<ScriptedResponse>,
    stream: Vec<DocValue>,
    jitter: f64,
    rng: ChaCha12Rng,
    next_stream_index: u64,
}

impl SimulatedProvider {
    pub fn from_script_file(path: impl AsRef<Path>, seed: u64, provider_id: &str) -> Result<Self> {
        let raw = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::Plan(format!(
                "cannot read script {}: {e}",
                path.as_ref().display()
            ))
        })?;
        Self::from_script_str(&raw, seed, provider_id)
    }

    pub fn from_script_str(raw: &str, seed: u64, provider_id: &str) -> Result<Self> {
        let script: RawScript =
            serde_json::from_str(raw).map_err(|e| Error::Plan(format!("bad script: {e}")))?;
        if !(script.jitter >= 0.0) {
            return Err(Error::Plan("script jitter must be non-negative".into()));
        }
        let mut responses = BTreeMap::new();
        for (req, resp) in &script.responses {
            responses.insert(req.clone(), parse_response(resp, req)?);
        }
        let default = script
            .default
            .as_ref()
            .map(|r| parse_response(r, "(default)"))
            .transpose()?;
        let stream = script
            .stream
            .iter()
            .map(DocValue::from_json)
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Plan(format!("bad stream item in script: {e}")))?;
        Ok(SimulatedProvider {
            responses,
            default,
            stream,
            jitter: script.jitter,
            rng: derive_rng(seed, provider_id),
            next_stream_index: 0,
        })
    }

    pub fn stream_len(&self) -> usize {
        self.stream.len()
    }
}

/// Per-provider RNG: hash the run seed with the provider id so providers are
/// decorrelated but each (seed, provider) pair replays identically.
fn derive_rng(seed: u64, provider_id: &str) -> ChaCha12Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(provider_id.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha12Rng::from_seed(key)
}

impl ProviderSource for SimulatedProvider {
    fn fetch(&mut self, request: &str) -> Result<FetchOutcome> {
        match self.responses.get(request).or(self.default.as_ref()) {
            Some(r) => Ok(r.outcome.clone()),
            None => Ok(FetchOutcome::Unavailable(UnavailableReason::ProviderError)),
        }
    }

    fn stream_item(&mut self, index: u64) -> Result<Option<(DocValue, f64)>> {
        debug_assert_eq!(index, self.next_stream_index, "stream items read in order");
        self.next_stream_index = index + 1;
        let Some(body) = self.stream.get(index as usize) else {
            return Ok(None);
        };
        let jitter = if self.jitter > 0.0 {
            self.rng.random_range(0.0..self.jitter)
        } else {
            0.0
        };
        Ok(Some((body.clone(), jitter)))
    }

    fn max_stream_jitter(&self) -> f64 {
        self.jitter
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCRIPT: &str = r#"{
        "responses": {
            "user:alice": {"documents": [{"n": 1}, {"n": 2}]},
            "user:bob": {"outcome": "privacy"},
            "user:carol": {"outcome": "empty"},
            "page:home": {"documents": [{"p": 1}], "links": ["page:about"]}
        },
        "stream": [{"s": 1}, {"s": 2}],
        "jitter": 2.5
    }"#;

    #[test]
    fn scripted_responses_replay_by_request() {
        let mut p = SimulatedProvider::from_script_str(SCRIPT, 7, "tw").unwrap();
        match p.fetch("user:alice").unwrap() {
            FetchOutcome::Documents { docs, links } => {
                assert_eq!(docs.len(), 2);
                assert!(links.is_empty());
            }
            other => panic!("expected documents, got {other:?}"),
        }
        assert_eq!(
            p.fetch("user:bob").unwrap(),
            FetchOutcome::Unavailable(UnavailableReason::Privacy)
        );
        assert_eq!(p.fetch("user:carol").unwrap(), FetchOutcome::Empty);
        match p.fetch("page:home").unwrap() {
            FetchOutcome::Documents { links, .. } => assert_eq!(links, vec!["page:about"]),
            other => panic!("expected documents, got {other:?}"),
        }
        // Unknown request, no default: provider error.
        assert_eq!(
            p.fetch("user:nobody").unwrap(),
            FetchOutcome::Unavailable(UnavailableReason::ProviderError)
        );
    }

    #[test]
    fn default_response_catches_unknown_requests() {
        let script = r#"{"default": {"outcome": "empty"}}"#;
        let mut p = SimulatedProvider::from_script_str(script, 7, "tw").unwrap();
        assert_eq!(p.fetch("anything").unwrap(), FetchOutcome::Empty);
    }

    #[test]
    fn same_seed_replays_identical_stream_jitter() {
        let run = |seed: u64, id: &str| -> Vec<(DocValue, f64)> {
            let mut p = SimulatedProvider::from_script_str(SCRIPT, seed, id).unwrap();
            let mut out = Vec::new();
            let mut i = 0;
            while let Some(item) = p.stream_item(i).unwrap() {
                out.push(item);
                i += 1;
            }
            out
        };
        let a = run(7, "tw");
        let b = run(7, "tw");
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert!(a.iter().all(|(_, j)| (0.0..2.5).contains(j)));

        // A different seed or provider id shifts the jitter stream.
        let c = run(8, "tw");
        let d = run(7, "fb");
        assert!(a.iter().zip(&c).any(|(x, y)| x.1 != y.1));
        assert!(a.iter().zip(&d).any(|(x, y)| x.1 != y.1));
    }

    #[test]
    fn zero_documents_with_ok_status_reads_as_empty() {
        let script = r#"{"responses": {"q": {"documents": []}}}"#;
        let mut p = SimulatedProvider::from_script_str(script, 1, "x").unwrap();
        assert_eq!(p.fetch("q").unwrap(), FetchOutcome::Empty);
    }

    #[test]
    fn malformed_script_documents_are_rejected_at_load() {
        let script = r#"{"responses": {"q": {"documents": [{"": 1}]}}}"#;
        assert!(SimulatedProvider::from_script_str(script, 1, "x").is_err());
    }
}
