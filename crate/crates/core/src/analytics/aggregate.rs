//! Party and country aggregation over candidate profiles.

use std::collections::{BTreeMap, BTreeSet};

use super::profile::build_all_profiles;
use super::timeline::merge_series;
use super::topics::{cross_platform_topics, DEFAULT_TOP_N};
use super::{
    CampaignProfile, ComparisonReport, CountrySeries, CountrySummary, PartyAggregate,
    PlatformTotals, Roster, TimelineSeries,
};
use crate::dataset::DatasetCollection;
use crate::doc::AvailabilityStatus;
use crate::view::ViewConfig;
use crate::{Error, Result};

/// Totals and per-capita averages for one party.
///
/// The per-capita denominator counts candidates whose figure on a platform
/// is known (collected or verifiably empty); blocked candidates are left
/// out rather than counted as zeros.
pub fn party_aggregate(profiles: &[CampaignProfile], party: &str) -> Result<PartyAggregate> {
    let members: Vec<&CampaignProfile> =
        profiles.iter().filter(|p| p.party == party).collect();
    if members.is_empty() {
        return Err(Error::Plan(format!("no profiles for party {party:?}")));
    }

    let providers: BTreeSet<&str> = members
        .iter()
        .flat_map(|m| m.platforms.iter().map(|p| p.provider.as_str()))
        .collect();

    let mut platforms = Vec::new();
    for provider in providers {
        let mut total = 0u64;
        let mut known = 0u64;
        let mut unavailable = 0u64;
        for member in &members {
            let Some(activity) = member.platform(provider) else {
                continue;
            };
            match activity.post_count {
                Some(n) => {
                    total += n;
                    known += 1;
                }
                None => unavailable += 1,
            }
        }
        platforms.push(PlatformTotals {
            provider: provider.to_string(),
            total,
            known_candidates: known,
            unavailable_candidates: unavailable,
            per_capita: if known > 0 {
                total as f64 / known as f64
            } else {
                0.0
            },
        });
    }

    let total_posts: u64 = platforms.iter().map(|p| p.total).sum();
    let favourite_tool = platforms
        .iter()
        .filter(|p| p.known_candidates > 0)
        .max_by(|a, b| {
            a.total
                .cmp(&b.total)
                .then_with(|| b.provider.cmp(&a.provider))
        })
        .map(|p| p.provider.clone())
        .unwrap_or_else(|| "unknown".to_string());

    Ok(PartyAggregate {
        party: party.to_string(),
        country: members[0].country.clone(),
        candidate_count: members.len() as u64,
        platforms,
        total_posts,
        global_average: total_posts as f64 / members.len() as f64,
        favourite_tool,
    })
}

fn country_timeline(members: &[&CampaignProfile]) -> TimelineSeries {
    members
        .iter()
        .fold(TimelineSeries::empty(), |acc, m| merge_series(&acc, &m.timeline))
}

/// The full comparative report: per-country summaries and timelines, party
/// aggregates, cross-platform topics, and the reconciliation tally.
pub fn build_comparison(
    ds: &DatasetCollection,
    roster: &Roster,
    config: &ViewConfig,
    top_n: Option<usize>,
) -> Result<ComparisonReport> {
    let (profiles, reconciliation) = build_all_profiles(ds, roster, config)?;

    let mut parties_idx: BTreeSet<(String, String)> = BTreeSet::new();
    let mut countries_idx: BTreeSet<String> = BTreeSet::new();
    for p in &profiles {
        parties_idx.insert((p.country.clone(), p.party.clone()));
        countries_idx.insert(p.country.clone());
    }

    let parties: Vec<PartyAggregate> = parties_idx
        .iter()
        .map(|(_, party)| party_aggregate(&profiles, party))
        .collect::<Result<_>>()?;

    let mut countries = Vec::new();
    let mut timelines = Vec::new();
    for country in &countries_idx {
        let members: Vec<&CampaignProfile> =
            profiles.iter().filter(|p| &p.country == country).collect();
        countries.push(CountrySummary {
            country: country.clone(),
            candidate_count: members.len() as u64,
            total_posts: members.iter().map(|m| m.known_posts()).sum(),
        });
        timelines.push(CountrySeries {
            country: country.clone(),
            series: country_timeline(&members),
        });
    }

    // Platform topic pools across every candidate.
    let mut frequencies: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for profile in &profiles {
        for platform in &profile.platforms {
            let pool = frequencies.entry(platform.provider.clone()).or_default();
            for topic in &platform.topics {
                *pool.entry(topic.tag.clone()).or_insert(0) += topic.frequency;
            }
        }
    }
    let topics = cross_platform_topics(&frequencies, top_n.unwrap_or(DEFAULT_TOP_N));

    Ok(ComparisonReport {
        countries,
        parties,
        profiles,
        topics,
        timelines,
        reconciliation,
    })
}

/// True when a platform's figures are known for this profile.
pub fn platform_known(profile: &CampaignProfile, provider: &str) -> bool {
    profile
        .platform(provider)
        .is_some_and(|p| !matches!(p.status, AvailabilityStatus::Unavailable(_)))
}
