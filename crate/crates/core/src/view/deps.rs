//! Inter-attribute relationship detectors: approximate functional
//! dependencies, temporal ordering of document links, and link-based
//! influence counts.

use std::collections::{BTreeMap, HashMap};

use super::infer::is_dummy;
use super::{RelationKind, Relationship};
use crate::doc::Document;
use crate::value::{scalar_at_path, Scalar, Timestamp};

/// A value participates in dependency rows only when it is a real scalar:
/// present, not null, not a dummy.
fn real_scalar(doc: &Document, path: &str, dummy_values: &[String]) -> Option<Scalar> {
    let v = scalar_at_path(&doc.body, path)?;
    if is_dummy(&v, dummy_values) {
        return None;
    }
    Some(v)
}

/// Support and violation counts for "from determines to" over the documents
/// where both sides hold real values. Violations are the rows outside each
/// determining group's majority image.
pub fn fd_counts(
    docs: &[Document],
    from: &str,
    to: &str,
    dummy_values: &[String],
) -> (u64, u64) {
    let mut groups: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for doc in docs {
        let (Some(a), Some(b)) = (
            real_scalar(doc, from, dummy_values),
            real_scalar(doc, to, dummy_values),
        ) else {
            continue;
        };
        *groups
            .entry(a.canonical_string())
            .or_default()
            .entry(b.canonical_string())
            .or_insert(0) += 1;
    }
    let mut support = 0u64;
    let mut violations = 0u64;
    for images in groups.values() {
        let size: u64 = images.values().sum();
        let majority = images.values().copied().max().unwrap_or(0);
        support += size;
        violations += size - majority;
    }
    (support, violations)
}

/// Checks each candidate pair and keeps those within tolerance: emitted iff
/// support is positive and violations ≤ epsilon · support.
pub fn detect_fd(
    docs: &[Document],
    pairs: &[(String, String)],
    epsilon: f64,
    dummy_values: &[String],
) -> Vec<Relationship> {
    let mut found = Vec::new();
    for (from, to) in pairs {
        let (support, violations) = fd_counts(docs, from, to, dummy_values);
        if support == 0 {
            continue;
        }
        if violations as f64 <= epsilon * support as f64 {
            found.push(Relationship::with_strength(
                RelationKind::FunctionalDependency,
                from.clone(),
                to.clone(),
                support,
                violations,
                0,
            ));
        }
    }
    found
}

/// Timestamp of a document under `time_path`, if it parses.
fn doc_time(doc: &Document, time_path: &str, dummy_values: &[String]) -> Option<Timestamp> {
    match real_scalar(doc, time_path, dummy_values)? {
        Scalar::Time(t) => Some(t),
        Scalar::Text(s) => Timestamp::parse_lenient(&s),
        _ => None,
    }
}

/// Checks that every resolvable link points at a strictly earlier document.
///
/// Links resolve against content ids and, when configured, a provider-native
/// id attribute; the first holder of a native id wins duplicates. Links that
/// don't resolve, or resolve to documents without a usable timestamp, count
/// as dangling and stay out of the support.
pub fn check_temporal(
    docs: &[Document],
    link_path: &str,
    time_path: &str,
    native_id_path: Option<&str>,
    dummy_values: &[String],
) -> Relationship {
    let mut index: HashMap<String, usize> = HashMap::new();
    for (i, doc) in docs.iter().enumerate() {
        index.entry(doc.id.clone()).or_insert(i);
        if let Some(path) = native_id_path {
            if let Some(native) = real_scalar(doc, path, dummy_values) {
                index.entry(native.canonical_string()).or_insert(i);
            }
        }
    }

    let mut support = 0u64;
    let mut violations = 0u64;
    let mut dangling = 0u64;
    for doc in docs {
        let Some(link) = real_scalar(doc, link_path, dummy_values) else {
            continue;
        };
        let target = index.get(&link.canonical_string()).map(|&i| &docs[i]);
        let referenced = target.and_then(|t| doc_time(t, time_path, dummy_values));
        let referencing = doc_time(doc, time_path, dummy_values);
        match (referenced, referencing) {
            (Some(referenced), Some(referencing)) => {
                support += 1;
                if referenced >= referencing {
                    violations += 1;
                }
            }
            _ => dangling += 1,
        }
    }
    Relationship::with_strength(
        RelationKind::TemporalDependency,
        link_path.to_string(),
        time_path.to_string(),
        support,
        violations,
        dangling,
    )
}

/// How many documents link to this one, by content id or native id.
pub fn influence_measure(
    target: &Document,
    docs: &[Document],
    link_path: &str,
    native_id_path: Option<&str>,
    dummy_values: &[String],
) -> u64 {
    let mut keys = vec![target.id.clone()];
    if let Some(path) = native_id_path {
        if let Some(native) = real_scalar(target, path, dummy_values) {
            keys.push(native.canonical_string());
        }
    }
    docs.iter()
        .filter(|doc| {
            real_scalar(doc, link_path, dummy_values)
                .is_some_and(|link| keys.contains(&link.canonical_string()))
        })
        .count() as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doc::{AvailabilityStatus, Document, ProvenanceStamp};
    use crate::value::{DocValue, Timestamp};
    use crate::view::default_dummy_values;

    fn doc(fields: &[(&str, DocValue)]) -> Document {
        let body = DocValue::record(
            fields
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone())),
        );
        Document::new(
            body,
            ProvenanceStamp {
                availability: AvailabilityStatus::Collected,
                collected_at: Timestamp::from_unix(0),
                jurisdiction: "eu".into(),
                provider_id: "p1".into(),
            },
        )
        .unwrap()
    }

    #[test]
    fn exact_dependency_has_full_strength() {
        let docs: Vec<Document> = (0..20)
            .map(|i| {
                doc(&[
                    ("city", DocValue::text(if i % 2 == 0 { "paris" } else { "lyon" })),
                    ("country", DocValue::text("fr")),
                ])
            })
            .collect();
        let dict = default_dummy_values();
        let (support, violations) = fd_counts(&docs, "city", "country", &dict);
        assert_eq!((support, violations), (20, 0));
        let rels = detect_fd(
            &docs,
            &[("city".into(), "country".into())],
            0.0,
            &dict,
        );
        assert_eq!(rels.len(), 1);
        assert_eq!(rels[0].strength, 1.0);
    }

    #[test]
    fn tolerance_admits_a_near_dependency() {
        let mut docs: Vec<Document> = (0..99)
            .map(|_| doc(&[("a", DocValue::Int(1)), ("b", DocValue::Int(10))]))
            .collect();
        docs.push(doc(&[("a", DocValue::Int(1)), ("b", DocValue::Int(11))]));
        let dict = default_dummy_values();
        let (support, violations) = fd_counts(&docs, "a", "b", &dict);
        assert_eq!((support, violations), (100, 1));
        assert!(detect_fd(&docs, &[("a".into(), "b".into())], 0.0, &dict).is_empty());
        let rels = detect_fd(&docs, &[("a".into(), "b".into())], 0.01, &dict);
        assert_eq!(rels.len(), 1);
        assert!((rels[0].strength - 0.99).abs() < 1e-12);
    }

    #[test]
    fn dummies_and_absences_stay_out_of_support() {
        let docs = vec![
            doc(&[("a", DocValue::text("x")), ("b", DocValue::text("y"))]),
            doc(&[("a", DocValue::text("N/A")), ("b", DocValue::text("y"))]),
            doc(&[("a", DocValue::text("x"))]),
        ];
        let dict = default_dummy_values();
        let (support, _) = fd_counts(&docs, "a", "b", &dict);
        assert_eq!(support, 1);
    }

    #[test]
    fn replies_must_follow_their_originals() {
        let dict = default_dummy_values();
        let original = doc(&[
            ("tweet_id", DocValue::text("t1")),
            ("date", DocValue::text("2014-05-25T10:00:00Z")),
        ]);
        let reply = doc(&[
            ("tweet_id", DocValue::text("t2")),
            ("reply_to", DocValue::text("t1")),
            ("date", DocValue::text("2014-05-25T11:00:00Z")),
        ]);
        let backwards = doc(&[
            ("tweet_id", DocValue::text("t3")),
            ("reply_to", DocValue::text("t2")),
            ("date", DocValue::text("2014-05-25T09:00:00Z")),
        ]);
        let dangling = doc(&[
            ("tweet_id", DocValue::text("t4")),
            ("reply_to", DocValue::text("nowhere")),
            ("date", DocValue::text("2014-05-25T12:00:00Z")),
        ]);
        let docs = vec![original, reply, backwards, dangling];
        let rel = check_temporal(&docs, "reply_to", "date", Some("tweet_id"), &dict);
        assert_eq!(rel.support, 2);
        assert_eq!(rel.violations, 1);
        assert_eq!(rel.dangling, 1);
        assert!((rel.strength - 0.5).abs() < 1e-12);
    }

    #[test]
    fn equal_timestamps_violate_strict_ordering() {
        let dict = default_dummy_values();
        let a = doc(&[
            ("tweet_id", DocValue::text("t1")),
            ("date", DocValue::text("2014-05-25T10:00:00Z")),
        ]);
        let b = doc(&[
            ("tweet_id", DocValue::text("t2")),
            ("reply_to", DocValue::text("t1")),
            ("date", DocValue::text("2014-05-25T10:00:00Z")),
        ]);
        let rel = check_temporal(&[a, b], "reply_to", "date", Some("tweet_id"), &dict);
        assert_eq!((rel.support, rel.violations), (1, 1));
    }

    #[test]
    fn influence_counts_inbound_links() {
        let dict = default_dummy_values();
        let original = doc(&[("tweet_id", DocValue::text("t1"))]);
        let r1 = doc(&[
            ("tweet_id", DocValue::text("t2")),
            ("reply_to", DocValue::text("t1")),
        ]);
        let r2 = doc(&[
            ("tweet_id", DocValue::text("t3")),
            ("reply_to", DocValue::text("t1")),
        ]);
        let elsewhere = doc(&[
            ("tweet_id", DocValue::text("t4")),
            ("reply_to", DocValue::text("t2")),
        ]);
        let by_content_id = doc(&[
            ("tweet_id", DocValue::text("t5")),
            ("reply_to", DocValue::text(original.id.clone())),
        ]);
        let docs = vec![original.clone(), r1, r2, elsewhere, by_content_id];
        assert_eq!(
            influence_measure(&original, &docs, "reply_to", Some("tweet_id"), &dict),
            3
        );
    }
}
