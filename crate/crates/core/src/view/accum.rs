//! Per-path accumulation. An accumulator is the full value multiset plus the
//! missing-slot list; finalizing derives every published figure from scratch,
//! so two accumulators built from the same occurrences in any arrival order
//! finalize to identical profiles.

use std::collections::{BTreeMap, BTreeSet};

use super::infer::{infer_type, is_dummy, numeric_of, timestamp_of};
use super::stats::{categorical_histogram, compute_stats_weighted, top_value_list};
use super::tags::extract_hashtags;
use super::{
    AttrType, AttributeProfile, ImputeMethod, InferredValue, MissingSlot, SlotKind, TopicTag,
    ValueCountEntry, ViewConfig,
};
use crate::policy::PrivacyLevel;
use crate::value::{DocValue, Scalar, Timestamp};

#[derive(Debug, Clone, Default)]
pub struct PathAccum {
    pub value_counts: BTreeMap<Scalar, u64>,
    pub missing_slots: Vec<MissingSlot>,
    pub count_records: u64,
    pub count_lists: u64,
    pub providers: BTreeSet<String>,
}

impl PathAccum {
    /// Rebuild the accumulator a profile was finalized from.
    pub fn from_profile(profile: &AttributeProfile) -> PathAccum {
        PathAccum {
            value_counts: profile
                .value_counts
                .iter()
                .map(|e| (e.value.clone(), e.count))
                .collect(),
            missing_slots: profile.missing_slots.clone(),
            count_records: profile.count_records,
            count_lists: profile.count_lists,
            providers: profile.providers.iter().cloned().collect(),
        }
    }

    /// Record a scalar occurrence, classifying dummies as missing.
    pub fn observe_scalar(
        &mut self,
        value: &Scalar,
        document_id: &str,
        provider_id: &str,
        dummy_values: &[String],
    ) {
        if is_dummy(value, dummy_values) {
            self.observe_missing(document_id, SlotKind::Dummy);
            return;
        }
        *self.value_counts.entry(value.clone()).or_insert(0) += 1;
        self.providers.insert(provider_id.to_string());
    }

    pub fn observe_record(&mut self, provider_id: &str) {
        self.count_records += 1;
        self.providers.insert(provider_id.to_string());
    }

    pub fn observe_list(&mut self, provider_id: &str) {
        self.count_lists += 1;
        self.providers.insert(provider_id.to_string());
    }

    pub fn observe_missing(&mut self, document_id: &str, kind: SlotKind) {
        self.missing_slots.push(MissingSlot {
            document_id: document_id.to_string(),
            kind,
        });
    }

    fn count_present(&self) -> u64 {
        self.value_counts.values().sum::<u64>() + self.count_records + self.count_lists
    }

    pub fn finalize(
        &self,
        path: &str,
        config: &ViewConfig,
        type_override: Option<AttrType>,
    ) -> AttributeProfile {
        let count_present = self.count_present();
        let count_missing = self.missing_slots.len() as u64;
        let count_null = self
            .missing_slots
            .iter()
            .filter(|s| s.kind == SlotKind::Null)
            .count() as u64;
        let count_dummy = self
            .missing_slots
            .iter()
            .filter(|s| s.kind == SlotKind::Dummy)
            .count() as u64;

        let mut type_distribution: BTreeMap<AttrType, u64> = BTreeMap::new();
        for (value, count) in &self.value_counts {
            *type_distribution.entry(infer_type(value)).or_insert(0) += count;
        }
        if self.count_records > 0 {
            *type_distribution.entry(AttrType::Record).or_insert(0) += self.count_records;
        }
        if self.count_lists > 0 {
            *type_distribution.entry(AttrType::List).or_insert(0) += self.count_lists;
        }
        // Highest count wins; ties go to the earlier type in declaration
        // order, which the BTreeMap iteration already provides.
        let inferred_primary = type_distribution
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(t, _)| *t);
        let primary_type = type_override.or(inferred_primary);

        let pairs: Vec<(Scalar, u64)> = self
            .value_counts
            .iter()
            .map(|(v, c)| (v.clone(), *c))
            .collect();

        let numeric: Option<Vec<(f64, u64)>> = domain(&pairs, numeric_of);
        let temporal: Option<Vec<(f64, u64)>> = if numeric.is_some() {
            None
        } else {
            domain(&pairs, |v| timestamp_of(v).map(|s| s as f64))
        };

        let ordered = numeric.as_deref().or(temporal.as_deref());
        let stats = ordered.and_then(|d| compute_stats_weighted(d, config.bin_count));

        let (min, max) = match ordered {
            Some(domain_values) => min_max_by_domain(&pairs, domain_values),
            None => (
                self.value_counts.keys().next().cloned(),
                self.value_counts.keys().next_back().cloned(),
            ),
        };

        let histogram = match &stats {
            Some(s) => s.histogram.clone(),
            None => categorical_histogram(&pairs, config.top_k),
        };

        let mut topic_freq: BTreeMap<String, u64> = BTreeMap::new();
        for (value, count) in &self.value_counts {
            if let Scalar::Text(t) = value {
                for tag in extract_hashtags(t) {
                    *topic_freq.entry(tag).or_insert(0) += count;
                }
            }
        }
        let mut topics: Vec<TopicTag> = topic_freq
            .into_iter()
            .map(|(tag, frequency)| TopicTag { tag, frequency })
            .collect();
        topics.sort_by(|a, b| b.frequency.cmp(&a.frequency).then_with(|| a.tag.cmp(&b.tag)));

        let mut imputation_undefined = false;
        let mut inferred_values = Vec::new();
        if !self.missing_slots.is_empty() {
            if self.value_counts.is_empty() {
                imputation_undefined = true;
            } else {
                let (imputed, confidence, method) = self.impute(
                    count_present,
                    numeric.as_deref(),
                    temporal.as_deref(),
                    inferred_primary,
                    config,
                );
                for slot in &self.missing_slots {
                    inferred_values.push(InferredValue {
                        document_id: slot.document_id.clone(),
                        path: path.to_string(),
                        imputed: imputed.clone(),
                        confidence,
                        method,
                    });
                }
            }
        }

        let providers: Vec<String> = self.providers.iter().cloned().collect();
        let (privacy, license) = provider_privacy(&providers, config);

        AttributeProfile {
            path: path.to_string(),
            value_counts: pairs
                .iter()
                .map(|(v, c)| ValueCountEntry {
                    value: v.clone(),
                    count: *c,
                })
                .collect(),
            missing_slots: self.missing_slots.clone(),
            count_records: self.count_records,
            count_lists: self.count_lists,
            providers,
            type_distribution,
            primary_type,
            type_override,
            count_present,
            count_null,
            count_missing,
            count_dummy,
            min,
            max,
            mean: stats.as_ref().map(|s| s.mean),
            stddev: stats.as_ref().map(|s| s.stddev),
            sum: stats.as_ref().map(|s| s.sum),
            sum_sq: stats.as_ref().map(|s| s.sum_sq),
            histogram,
            distinct_count: self.value_counts.len() as u64,
            top_values: top_value_list(&pairs, config.top_k),
            inferred_values,
            imputation_undefined,
            author_path: config.author_path.clone(),
            license,
            privacy,
            topics,
        }
    }

    /// One imputed value for every missing slot of this path.
    fn impute(
        &self,
        count_present: u64,
        numeric: Option<&[(f64, u64)]>,
        temporal: Option<&[(f64, u64)]>,
        inferred_primary: Option<AttrType>,
        config: &ViewConfig,
    ) -> (DocValue, f64, ImputeMethod) {
        debug_assert!(count_present > 0);
        if let Some(domain_values) = numeric {
            let median = weighted_median(domain_values);
            let imputed = if inferred_primary == Some(AttrType::Integer) && median.fract() == 0.0 {
                DocValue::Int(median as i64)
            } else {
                DocValue::float(median).expect("median of finite values is finite")
            };
            let confidence =
                median_confidence(domain_values, median, count_present, config.bin_count);
            return (imputed, confidence, ImputeMethod::Median);
        }
        if let Some(domain_values) = temporal {
            // Timestamps floor to whole seconds.
            let median = weighted_median(domain_values).floor();
            let imputed = DocValue::Time(Timestamp::from_unix(median as i64));
            let confidence =
                median_confidence(domain_values, median, count_present, config.bin_count);
            return (imputed, confidence, ImputeMethod::Median);
        }
        // Mode: most frequent value; count ties break on the canonical
        // string, ascending.
        let (mode, mode_count) = self
            .value_counts
            .iter()
            .max_by(|a, b| {
                a.1.cmp(b.1)
                    .then_with(|| b.0.canonical_string().cmp(&a.0.canonical_string()))
            })
            .expect("non-empty value_counts");
        (
            mode.to_doc_value(),
            *mode_count as f64 / count_present as f64,
            ImputeMethod::Mode,
        )
    }
}

/// Map every distinct value through `read`; None if any value lacks the
/// reading or there are no values at all.
fn domain<F: Fn(&Scalar) -> Option<f64>>(
    pairs: &[(Scalar, u64)],
    read: F,
) -> Option<Vec<(f64, u64)>> {
    if pairs.is_empty() {
        return None;
    }
    pairs.iter().map(|(v, c)| read(v).map(|f| (f, *c))).collect()
}

/// The distinct values minimizing and maximizing the domain reading;
/// reading ties keep the first value in canonical scalar order.
fn min_max_by_domain(
    pairs: &[(Scalar, u64)],
    domain_values: &[(f64, u64)],
) -> (Option<Scalar>, Option<Scalar>) {
    debug_assert_eq!(pairs.len(), domain_values.len());
    let mut min: Option<(f64, &Scalar)> = None;
    let mut max: Option<(f64, &Scalar)> = None;
    for ((scalar, _), (reading, _)) in pairs.iter().zip(domain_values) {
        if min.as_ref().is_none_or(|(m, _)| reading < m) {
            min = Some((*reading, scalar));
        }
        if max.as_ref().is_none_or(|(m, _)| reading > m) {
            max = Some((*reading, scalar));
        }
    }
    (
        min.map(|(_, s)| s.clone()),
        max.map(|(_, s)| s.clone()),
    )
}

/// Median of a weighted multiset; even totals average the two middles.
pub fn weighted_median(domain_values: &[(f64, u64)]) -> f64 {
    let mut sorted: Vec<(f64, u64)> = domain_values
        .iter()
        .copied()
        .filter(|&(_, c)| c > 0)
        .collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: u64 = sorted.iter().map(|&(_, c)| c).sum();
    assert!(total > 0, "median of an empty multiset");
    let lower = select(&sorted, (total - 1) / 2);
    let upper = select(&sorted, total / 2);
    (lower + upper) / 2.0
}

fn select(sorted: &[(f64, u64)], k: u64) -> f64 {
    let mut seen = 0u64;
    for &(v, c) in sorted {
        seen += c;
        if k < seen {
            return v;
        }
    }
    unreachable!("rank beyond multiset size")
}

/// Fraction of present values within half a bin width of the imputed value.
/// A degenerate range (all values equal) makes that everything.
fn median_confidence(
    domain_values: &[(f64, u64)],
    median: f64,
    count_present: u64,
    bin_count: u32,
) -> f64 {
    let lo = domain_values
        .iter()
        .map(|&(v, _)| v)
        .fold(f64::INFINITY, f64::min);
    let hi = domain_values
        .iter()
        .map(|&(v, _)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let half_width = (hi - lo) / bin_count as f64 / 2.0;
    let near: u64 = domain_values
        .iter()
        .filter(|&&(v, _)| (v - median).abs() <= half_width)
        .map(|&(_, c)| c)
        .sum();
    near as f64 / count_present as f64
}

fn provider_privacy(providers: &[String], config: &ViewConfig) -> (PrivacyLevel, String) {
    let mut privacy = PrivacyLevel::Public;
    let mut license = String::new();
    let mut chosen: Option<&str> = None;
    for id in providers {
        let level = config
            .provider_privacy
            .get(id)
            .copied()
            .unwrap_or(PrivacyLevel::Public);
        if chosen.is_none() || level > privacy {
            privacy = level;
            chosen = Some(id);
        }
    }
    if let Some(id) = chosen {
        if let Some(l) = config.provider_license.get(id) {
            license = l.clone();
        }
    }
    (privacy, license)
}
