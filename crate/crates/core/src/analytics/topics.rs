//! Cross-platform topic comparison: per-platform top lists and what each
//! platform talks about that another does not.

use std::collections::{BTreeMap, BTreeSet};

use super::{PlatformTopics, TopicDivergence, TopicReport};
use crate::view::TopicTag;

pub const DEFAULT_TOP_N: usize = 10;

fn top_tags(freq: &BTreeMap<String, u64>, n: usize) -> Vec<TopicTag> {
    let mut tags: Vec<TopicTag> = freq
        .iter()
        .map(|(tag, frequency)| TopicTag {
            tag: tag.clone(),
            frequency: *frequency,
        })
        .collect();
    tags.sort_by(|a, b| b.frequency.cmp(&a.frequency).then_with(|| a.tag.cmp(&b.tag)));
    tags.truncate(n);
    tags
}

/// Per-platform top-N tags plus pairwise divergence: tags in one top list
/// missing from the other, and the overlap size.
pub fn cross_platform_topics(
    frequencies: &BTreeMap<String, BTreeMap<String, u64>>,
    n: usize,
) -> TopicReport {
    let per_platform: Vec<PlatformTopics> = frequencies
        .iter()
        .map(|(provider, freq)| PlatformTopics {
            provider: provider.clone(),
            top: top_tags(freq, n),
        })
        .collect();

    let mut divergences = Vec::new();
    for (i, a) in per_platform.iter().enumerate() {
        for b in &per_platform[i + 1..] {
            let set_a: BTreeSet<&str> = a.top.iter().map(|t| t.tag.as_str()).collect();
            let set_b: BTreeSet<&str> = b.top.iter().map(|t| t.tag.as_str()).collect();
            divergences.push(TopicDivergence {
                a: a.provider.clone(),
                b: b.provider.clone(),
                only_a: set_a.difference(&set_b).map(|t| t.to_string()).collect(),
                only_b: set_b.difference(&set_a).map(|t| t.to_string()).collect(),
                overlap: set_a.intersection(&set_b).count() as u64,
            });
        }
    }
    TopicReport {
        per_platform,
        divergences,
    }
}
