//! Real-HTTP adapter: plain GET with an optional bearer token. Everything
//! above the transport (rate limiting, cost, provenance) is shared with the
//! simulator.

use std::time::Duration;

use url::Url;

use crate::doc::UnavailableReason;
use crate::value::DocValue;
use crate::{Error, Result};

use super::sim::{FetchOutcome, ProviderSource};
use super::Credentials;

pub struct HttpSource {
    client: reqwest::blocking::Client,
    base: Url,
    bearer: Option<String>,
}

impl HttpSource {
    pub fn new(endpoint: &str, credentials: Option<&Credentials>) -> Result<HttpSource> {
        let base = Url::parse(endpoint)
            .map_err(|e| Error::Plan(format!("bad http endpoint {endpoint}: {e}")))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| Error::Http(e.to_string()))?;
        Ok(HttpSource {
            client,
            base,
            bearer: credentials.map(|c| c.bearer.clone()),
        })
    }

    fn resolve(&self, request: &str) -> Result<Url> {
        if request.starts_with("http://") || request.starts_with("https://") {
            Url::parse(request).map_err(|e| Error::Http(format!("bad request url: {e}")))
        } else {
            self.base
                .join(request)
                .map_err(|e| Error::Http(format!("cannot resolve {request}: {e}")))
        }
    }
}

impl ProviderSource for HttpSource {
    fn fetch(&mut self, request: &str) -> Result<FetchOutcome> {
        let url = self.resolve(request)?;
        let mut req = self.client.get(url.clone());
        if let Some(token) = &self.bearer {
            req = req.bearer_auth(token);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) => {
                tracing::warn!(url = %url, error = %e, "request failed");
                return Ok(FetchOutcome::Unavailable(UnavailableReason::ProviderError));
            }
        };
        let status = resp.status();
        if !status.is_success() {
            let reason = match status.as_u16() {
                401 | 403 => UnavailableReason::Auth,
                429 => UnavailableReason::RateLimit,
                404 => return Ok(FetchOutcome::Empty),
                _ => UnavailableReason::ProviderError,
            };
            return Ok(FetchOutcome::Unavailable(reason));
        }
        let is_json = resp
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .is_some_and(|ct| ct.contains("json"));
        let text = resp.text().map_err(|e| Error::Http(e.to_string()))?;

        if is_json {
            let parsed: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| Error::Http(format!("bad json from {url}: {e}")))?;
            let docs = match parsed {
                serde_json::Value::Array(items) => items
                    .iter()
                    .map(DocValue::from_json)
                    .collect::<Result<Vec<_>>>()?,
                other => vec![DocValue::from_json(&other)?],
            };
            if docs.is_empty() {
                return Ok(FetchOutcome::Empty);
            }
            return Ok(FetchOutcome::Documents {
                docs,
                links: Vec::new(),
            });
        }

        // Non-JSON: wrap the page and harvest its links for the frontier.
        let links = extract_links(&url, &text);
        let body = DocValue::record([
            ("content".to_string(), DocValue::text(text)),
            ("url".to_string(), DocValue::text(url.to_string())),
        ]);
        Ok(FetchOutcome::Documents {
            docs: vec![body],
            links,
        })
    }

    fn stream_item(&mut self, _index: u64) -> Result<Option<(DocValue, f64)>> {
        Err(Error::Plan(
            "http providers do not support stream subscriptions".into(),
        ))
    }
}

/// Pull href targets out of markup, resolved against the page URL.
/// Fragments and non-http(s) schemes are dropped; order of appearance is
/// kept, duplicates removed.
pub fn extract_links(page: &Url, html: &str) -> Vec<String> {
    // href = "..." / href = '...'
    static PATTERN: &str = r#"href\s*=\s*["']([^"']+)["']"#;
    let re = regex::Regex::new(PATTERN).expect("static pattern compiles");
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for cap in re.captures_iter(html) {
        let raw = &cap[1];
        if raw.starts_with('#') {
            continue;
        }
        let Ok(resolved) = page.join(raw) else {
            continue;
        };
        if resolved.scheme() != "http" && resolved.scheme() != "https" {
            continue;
        }
        let mut url = resolved;
        url.set_fragment(None);
        let s = url.to_string();
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    out
}
