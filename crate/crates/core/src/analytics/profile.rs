//! Candidate profile construction: attribute stored documents to roster
//! accounts, then count, tag, and time them per platform.

use std::collections::BTreeMap;

use super::timeline::activity_timeline;
use super::{CampaignProfile, Candidate, PlatformActivity, Reconciliation, Roster, TimelineSeries};
use crate::dataset::{DatasetCollection, DocFilter};
use crate::doc::{AvailabilityStatus, Document};
use crate::value::{scalar_at_path, visit_paths, Leaf, Scalar};
use crate::view::deps::influence_measure;
use crate::view::tags::extract_hashtags;
use crate::view::{TopicTag, ViewConfig};
use crate::{Error, Result};

/// Where every stored document landed: per (candidate, platform) for both
/// real documents and availability markers, plus per-platform pools and the
/// collected documents nobody claimed.
pub struct Attribution<'a> {
    collected: BTreeMap<(String, String), Vec<&'a Document>>,
    markers: BTreeMap<(String, String), Vec<&'a Document>>,
    /// Owned per-provider pools, the reference sets for influence counting.
    by_provider: BTreeMap<String, Vec<Document>>,
    pub collected_total: u64,
    pub unattributed: u64,
}

/// A placeholder's request string names the account it targeted; crawl
/// placeholders carry page URLs under the account's base URL.
fn request_matches(request: &str, account: &str) -> bool {
    request == account || request.strip_prefix(account).is_some_and(|r| r.starts_with('/'))
}

fn marker_request(doc: &Document) -> Option<String> {
    scalar_at_path(&doc.body, "request").map(|s| s.canonical_string())
}

pub fn attribute_documents<'a>(
    docs: &'a [Document],
    roster: &Roster,
    config: &ViewConfig,
) -> Result<Attribution<'a>> {
    let author_path = config
        .author_path
        .as_deref()
        .ok_or_else(|| Error::Plan("analytics needs an author path".into()))?;

    // account key on a platform -> candidate id
    let mut accounts: BTreeMap<(&str, &str), &str> = BTreeMap::new();
    for c in &roster.candidates {
        for (provider, account) in &c.accounts {
            if accounts
                .insert((provider.as_str(), account.as_str()), c.id.as_str())
                .is_some()
            {
                return Err(Error::Plan(format!(
                    "account {account:?} on {provider:?} claimed twice"
                )));
            }
        }
    }

    let mut attribution = Attribution {
        collected: BTreeMap::new(),
        markers: BTreeMap::new(),
        by_provider: BTreeMap::new(),
        collected_total: 0,
        unattributed: 0,
    };
    for doc in docs {
        let provider = doc.provenance.provider_id.as_str();
        match doc.provenance.availability {
            AvailabilityStatus::Collected => {
                attribution.collected_total += 1;
                attribution
                    .by_provider
                    .entry(provider.to_string())
                    .or_default()
                    .push(doc.clone());
                let author = scalar_at_path(&doc.body, author_path)
                    .map(|s| s.canonical_string());
                let owner = author
                    .and_then(|a| accounts.get(&(provider, a.as_str())).copied());
                match owner {
                    Some(candidate) => attribution
                        .collected
                        .entry((candidate.to_string(), provider.to_string()))
                        .or_default()
                        .push(doc),
                    None => attribution.unattributed += 1,
                }
            }
            AvailabilityStatus::Empty | AvailabilityStatus::Unavailable(_) => {
                let Some(request) = marker_request(doc) else {
                    continue;
                };
                let owner = roster.candidates.iter().find_map(|c| {
                    c.accounts
                        .get(provider)
                        .is_some_and(|account| request_matches(&request, account))
                        .then_some(c.id.as_str())
                });
                if let Some(candidate) = owner {
                    attribution
                        .markers
                        .entry((candidate.to_string(), provider.to_string()))
                        .or_default()
                        .push(doc);
                }
            }
        }
    }
    Ok(attribution)
}

fn topic_frequencies(docs: &[&Document]) -> Vec<TopicTag> {
    let mut freq: BTreeMap<String, u64> = BTreeMap::new();
    for doc in docs {
        visit_paths(&doc.body, |_, leaf| {
            if let Leaf::Scalar(v) = leaf {
                if let Some(Scalar::Text(t)) = Scalar::from_doc_value(v) {
                    for tag in extract_hashtags(&t) {
                        *freq.entry(tag).or_insert(0) += 1;
                    }
                }
            }
        });
    }
    let mut topics: Vec<TopicTag> = freq
        .into_iter()
        .map(|(tag, frequency)| TopicTag { tag, frequency })
        .collect();
    topics.sort_by(|a, b| b.frequency.cmp(&a.frequency).then_with(|| a.tag.cmp(&b.tag)));
    topics
}

fn platform_activity(
    candidate: &Candidate,
    provider: &str,
    attribution: &Attribution<'_>,
    config: &ViewConfig,
) -> PlatformActivity {
    let key = (candidate.id.clone(), provider.to_string());
    let collected = attribution.collected.get(&key).cloned().unwrap_or_default();

    let status = if collected.is_empty() {
        attribution
            .markers
            .get(&key)
            .and_then(|markers| {
                markers
                    .iter()
                    .find(|m| matches!(m.provenance.availability, AvailabilityStatus::Unavailable(_)))
            })
            .map(|m| m.provenance.availability)
            .unwrap_or(AvailabilityStatus::Empty)
    } else {
        AvailabilityStatus::Collected
    };

    let post_count = match status {
        AvailabilityStatus::Unavailable(_) => None,
        _ => Some(collected.len() as u64),
    };
    let influence = match (&status, &config.link_path) {
        (AvailabilityStatus::Unavailable(_), _) | (_, None) => None,
        (_, Some(link)) => {
            let pool = attribution
                .by_provider
                .get(provider)
                .map(Vec::as_slice)
                .unwrap_or_default();
            Some(
                collected
                    .iter()
                    .map(|doc| {
                        influence_measure(
                            doc,
                            pool,
                            link,
                            config.link_native_id_path.as_deref(),
                            &config.dummy_values,
                        )
                    })
                    .sum(),
            )
        }
    };

    PlatformActivity {
        provider: provider.to_string(),
        status,
        post_count,
        topics: topic_frequencies(&collected),
        influence,
    }
}

fn candidate_profile(
    candidate: &Candidate,
    attribution: &Attribution<'_>,
    config: &ViewConfig,
) -> CampaignProfile {
    let platforms: Vec<PlatformActivity> = candidate
        .accounts
        .keys()
        .map(|provider| platform_activity(candidate, provider, attribution, config))
        .collect();

    let timeline = match &config.time_path {
        Some(time_path) => {
            let mut docs: Vec<&Document> = Vec::new();
            for provider in candidate.accounts.keys() {
                if let Some(list) = attribution
                    .collected
                    .get(&(candidate.id.clone(), provider.clone()))
                {
                    docs.extend(list.iter().copied());
                }
            }
            activity_timeline(&docs, time_path, &config.dummy_values)
        }
        None => TimelineSeries::empty(),
    };

    CampaignProfile {
        candidate: candidate.id.clone(),
        party: candidate.party.clone(),
        country: candidate.country.clone(),
        platforms,
        timeline,
    }
}

/// Profiles for the whole roster plus the reconciliation tally, sharing one
/// attribution pass.
pub fn build_all_profiles(
    ds: &DatasetCollection,
    roster: &Roster,
    config: &ViewConfig,
) -> Result<(Vec<CampaignProfile>, Reconciliation)> {
    roster.validate()?;
    let docs = ds.documents(DocFilter::default())?;
    let attribution = attribute_documents(&docs, roster, config)?;
    let profiles: Vec<CampaignProfile> = roster
        .candidates
        .iter()
        .map(|c| candidate_profile(c, &attribution, config))
        .collect();
    let profiled_posts: u64 = profiles.iter().map(CampaignProfile::known_posts).sum();
    let reconciliation = Reconciliation {
        collected_documents: attribution.collected_total,
        profiled_posts,
        unattributed: attribution.unattributed,
    };
    Ok((profiles, reconciliation))
}

/// Profile one candidate; unknown ids are an error.
pub fn build_profile(
    ds: &DatasetCollection,
    roster: &Roster,
    candidate_id: &str,
    config: &ViewConfig,
) -> Result<CampaignProfile> {
    let candidate = roster.candidate(candidate_id)?;
    let docs = ds.documents(DocFilter::default())?;
    let attribution = attribute_documents(&docs, roster, config)?;
    Ok(candidate_profile(candidate, &attribution, config))
}
