//! Chronological activity: contiguous daily buckets from the first to the
//! last active day, zeros in the gaps.

use super::TimelineSeries;
use crate::doc::Document;
use crate::value::{scalar_at_path, Scalar, Timestamp};
use crate::view::infer::is_dummy;

fn doc_day(doc: &Document, time_path: &str, dummy_values: &[String]) -> Option<i64> {
    let value = scalar_at_path(&doc.body, time_path)?;
    if is_dummy(&value, dummy_values) {
        return None;
    }
    let ts = match value {
        Scalar::Time(t) => Some(t),
        Scalar::Text(s) => Timestamp::parse_lenient(&s),
        _ => None,
    }?;
    Some(ts.day_index())
}

/// Daily post counts over all documents with a usable timestamp; documents
/// without one are not on the timeline. No timestamps, no series.
pub fn activity_timeline(
    docs: &[&Document],
    time_path: &str,
    dummy_values: &[String],
) -> TimelineSeries {
    let days: Vec<i64> = docs
        .iter()
        .filter_map(|doc| doc_day(doc, time_path, dummy_values))
        .collect();
    let (Some(&first), Some(&last)) = (days.iter().min(), days.iter().max()) else {
        return TimelineSeries::empty();
    };
    let mut counts = vec![0u64; (last - first + 1) as usize];
    for day in days {
        counts[(day - first) as usize] += 1;
    }
    TimelineSeries {
        start_day: Some(Timestamp::from_day_index(first)),
        counts,
    }
}

/// Pointwise sum of two series over the union of their day ranges.
pub fn merge_series(a: &TimelineSeries, b: &TimelineSeries) -> TimelineSeries {
    let (Some(start_a), Some(start_b)) = (a.start_day, b.start_day) else {
        let filled = if a.start_day.is_some() { a } else { b };
        return filled.clone();
    };
    let first = start_a.day_index().min(start_b.day_index());
    let last = (start_a.day_index() + a.counts.len() as i64 - 1)
        .max(start_b.day_index() + b.counts.len() as i64 - 1);
    let mut counts = vec![0u64; (last - first + 1) as usize];
    for (series, start) in [(a, start_a), (b, start_b)] {
        let offset = (start.day_index() - first) as usize;
        for (i, &c) in series.counts.iter().enumerate() {
            counts[offset + i] += c;
        }
    }
    TimelineSeries {
        start_day: Some(Timestamp::from_day_index(first)),
        counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doc::{AvailabilityStatus, ProvenanceStamp};
    use crate::value::DocValue;
    use crate::view::default_dummy_values;

    fn doc(date: &str) -> Document {
        Document::new(
            DocValue::record([("date".to_string(), DocValue::text(date))]),
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
    fn one_day_is_one_bucket() {
        let docs = [
            doc("2014-05-20T08:00:00Z"),
            doc("2014-05-20T12:00:00Z"),
            doc("2014-05-20T20:00:00Z"),
        ];
        let refs: Vec<&Document> = docs.iter().collect();
        let series = activity_timeline(&refs, "date", &default_dummy_values());
        assert_eq!(series.counts, [3]);
        assert_eq!(series.day_label(0).unwrap(), "2014-05-20");
        assert_eq!(series.total(), 3);
    }

    #[test]
    fn gaps_fill_with_zero() {
        let docs = [
            doc("2014-05-20T08:00:00Z"),
            doc("2014-05-22T09:00:00Z"),
            doc("2014-05-22T10:00:00Z"),
        ];
        let refs: Vec<&Document> = docs.iter().collect();
        let series = activity_timeline(&refs, "date", &default_dummy_values());
        assert_eq!(series.counts, [1, 0, 2]);
    }

    #[test]
    fn unusable_timestamps_stay_off_the_series() {
        let docs = [doc("not a date"), doc("1970-01-01T00:00:00Z")];
        let refs: Vec<&Document> = docs.iter().collect();
        let series = activity_timeline(&refs, "date", &default_dummy_values());
        assert!(series.counts.is_empty());
        assert_eq!(series.start_day, None);
    }

    #[test]
    fn merged_series_covers_the_union_range() {
        let a = TimelineSeries {
            start_day: Some(Timestamp::from_day_index(10)),
            counts: vec![1, 2],
        };
        let b = TimelineSeries {
            start_day: Some(Timestamp::from_day_index(12)),
            counts: vec![5],
        };
        let merged = merge_series(&a, &b);
        assert_eq!(merged.start_day, Some(Timestamp::from_day_index(10)));
        assert_eq!(merged.counts, [1, 2, 5]);
        let empty = merge_series(&TimelineSeries::empty(), &TimelineSeries::empty());
        assert!(empty.counts.is_empty());
    }
}
