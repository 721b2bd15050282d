//! Campaign analytics over curated datasets: per-candidate profiles,
//! party aggregates, cross-country comparison, and report files.
//!
//! Attribution is roster-driven: each candidate lists one account per
//! platform (provider). Collected documents attach through the authorship
//! attribute, placeholders through the request string they were stored
//! with, so blocked platforms surface as unavailable instead of zero.

pub mod aggregate;
pub mod profile;
pub mod report;
pub mod timeline;
pub mod topics;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::doc::AvailabilityStatus;
use crate::value::Timestamp;
use crate::view::TopicTag;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub party: String,
    pub country: String,
    /// Provider id → account key: the authorship value of the candidate's
    /// documents there, and the request-string prefix of placeholders.
    pub accounts: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roster {
    pub candidates: Vec<Candidate>,
}

impl Roster {
    pub fn load(path: impl AsRef<Path>) -> Result<Roster> {
        let raw = std::fs::read_to_string(path.as_ref())?;
        let roster: Roster =
            serde_json::from_str(&raw).map_err(|e| Error::Plan(format!("bad roster: {e}")))?;
        roster.validate()?;
        Ok(roster)
    }

    pub fn validate(&self) -> Result<()> {
        if self.candidates.is_empty() {
            return Err(Error::Plan("roster has no candidates".into()));
        }
        let mut seen = BTreeSet::new();
        for c in &self.candidates {
            if c.id.is_empty() || c.party.is_empty() || c.country.is_empty() {
                return Err(Error::Plan(format!(
                    "candidate {:?} needs id, party, and country",
                    c.id
                )));
            }
            if !seen.insert(&c.id) {
                return Err(Error::Plan(format!("duplicate candidate id {:?}", c.id)));
            }
            if c.accounts.is_empty() {
                return Err(Error::Plan(format!("candidate {} has no accounts", c.id)));
            }
        }
        Ok(())
    }

    pub fn candidate(&self, id: &str) -> Result<&Candidate> {
        self.candidates
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| Error::Plan(format!("unknown candidate {id:?}")))
    }

    /// Every platform any candidate has an account on, sorted.
    pub fn platforms(&self) -> Vec<String> {
        let set: BTreeSet<String> = self
            .candidates
            .iter()
            .flat_map(|c| c.accounts.keys().cloned())
            .collect();
        set.into_iter().collect()
    }
}

/// Daily post counts from the first to the last active day, gaps filled
/// with zeros. An empty series has no start day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineSeries {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_day: Option<Timestamp>,
    pub counts: Vec<u64>,
}

impl TimelineSeries {
    pub fn empty() -> TimelineSeries {
        TimelineSeries {
            start_day: None,
            counts: Vec::new(),
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `YYYY-MM-DD` of bucket i.
    pub fn day_label(&self, i: usize) -> Option<String> {
        let start = self.start_day?;
        Some(Timestamp::from_day_index(start.day_index() + i as i64).date_string())
    }
}

/// One platform of one candidate's campaign.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlatformActivity {
    pub provider: String,
    pub status: AvailabilityStatus,
    /// Known count (possibly 0). Never present for unavailable platforms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_count: Option<u64>,
    pub topics: Vec<TopicTag>,
    /// Inbound links to this candidate's documents on the platform; absent
    /// when the platform is unavailable or no link attribute is configured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub influence: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignProfile {
    pub candidate: String,
    pub party: String,
    pub country: String,
    pub platforms: Vec<PlatformActivity>,
    pub timeline: TimelineSeries,
}

impl CampaignProfile {
    pub fn platform(&self, provider: &str) -> Option<&PlatformActivity> {
        self.platforms.iter().find(|p| p.provider == provider)
    }

    /// Sum of known platform counts.
    pub fn known_posts(&self) -> u64 {
        self.platforms.iter().filter_map(|p| p.post_count).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformTotals {
    pub provider: String,
    /// Posts across candidates whose count on this platform is known.
    pub total: u64,
    /// Candidates with a known count (collected or empty); the per-capita
    /// denominator. Blocked candidates stay out: their counts are unknowable.
    pub known_candidates: u64,
    pub unavailable_candidates: u64,
    pub per_capita: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartyAggregate {
    pub party: String,
    pub country: String,
    pub candidate_count: u64,
    pub platforms: Vec<PlatformTotals>,
    pub total_posts: u64,
    /// Total known posts divided by candidate count.
    pub global_average: f64,
    /// Platform with the highest total; ties go to the lexicographically
    /// first provider, and "unknown" means no platform had a known count.
    pub favourite_tool: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlatformTopics {
    pub provider: String,
    pub top: Vec<TopicTag>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicDivergence {
    pub a: String,
    pub b: String,
    /// Tags in a's top list missing from b's, and vice versa.
    pub only_a: Vec<String>,
    pub only_b: Vec<String>,
    pub overlap: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicReport {
    pub per_platform: Vec<PlatformTopics>,
    pub divergences: Vec<TopicDivergence>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountrySummary {
    pub country: String,
    pub candidate_count: u64,
    pub total_posts: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountrySeries {
    pub country: String,
    pub series: TimelineSeries,
}

/// Every profile count must trace back to stored documents:
/// profiled + unattributed = collected documents, exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reconciliation {
    pub collected_documents: u64,
    pub profiled_posts: u64,
    /// Collected documents no roster account claims.
    pub unattributed: u64,
}

impl Reconciliation {
    pub fn holds(&self) -> bool {
        self.profiled_posts + self.unattributed == self.collected_documents
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub countries: Vec<CountrySummary>,
    pub parties: Vec<PartyAggregate>,
    pub profiles: Vec<CampaignProfile>,
    pub topics: TopicReport,
    pub timelines: Vec<CountrySeries>,
    pub reconciliation: Reconciliation,
}
