//! Type inference over raw attribute occurrences. Text content is probed in
//! a fixed order (boolean, integer, float, timestamp, URL) so that a column
//! whose values arrive as strings still profiles under its semantic type.

use url::Url;

use super::AttrType;
use crate::value::{Scalar, Timestamp};

pub fn infer_type(value: &Scalar) -> AttrType {
    match value {
        Scalar::Bool(_) => AttrType::Boolean,
        Scalar::Int(_) => AttrType::Integer,
        Scalar::Float(_) => AttrType::Float,
        Scalar::Time(_) => AttrType::Timestamp,
        Scalar::Text(t) => infer_text_type(t),
    }
}

pub fn infer_text_type(text: &str) -> AttrType {
    if text == "true" || text == "false" {
        return AttrType::Boolean;
    }
    if text.parse::<i64>().is_ok() {
        return AttrType::Integer;
    }
    // "NaN" and "inf" parse as f64 but are not finite, so they stay text.
    if let Ok(f) = text.parse::<f64>() {
        if f.is_finite() {
            return AttrType::Float;
        }
    }
    if Timestamp::parse_lenient(text).is_some() {
        return AttrType::Timestamp;
    }
    if is_url(text) {
        return AttrType::Url;
    }
    AttrType::Text
}

fn is_url(text: &str) -> bool {
    // Hierarchical URLs only; bare scheme:path strings stay text.
    text.contains("://") && Url::parse(text).is_ok_and(|u| u.has_host())
}

/// Numeric reading of a value, if it has one. Integers widen to f64, which
/// is lossless up to 2^53; profile sums over larger magnitudes round.
pub fn numeric_of(value: &Scalar) -> Option<f64> {
    match value {
        Scalar::Int(i) => Some(*i as f64),
        Scalar::Float(f) => Some(*f),
        Scalar::Text(t) => match infer_text_type(t) {
            AttrType::Integer | AttrType::Float => t.parse::<f64>().ok(),
            _ => None,
        },
        _ => None,
    }
}

/// Timestamp reading of a value, if it has one, in unix seconds.
pub fn timestamp_of(value: &Scalar) -> Option<i64> {
    match value {
        Scalar::Time(t) => Some(t.unix()),
        Scalar::Text(t) => Timestamp::parse_lenient(t).map(|ts| ts.unix()),
        _ => None,
    }
}

/// A value is a dummy when its canonical string form appears in the
/// dictionary, so `Time(0)` and the text "1970-01-01T00:00:00Z" both match
/// the epoch sentinel.
pub fn is_dummy(value: &Scalar, dictionary: &[String]) -> bool {
    let canon = value.canonical_string();
    dictionary.iter().any(|d| d == &canon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::view::default_dummy_values;

    #[test]
    fn text_probing_follows_the_fixed_order() {
        assert_eq!(infer_text_type("true"), AttrType::Boolean);
        assert_eq!(infer_text_type("false"), AttrType::Boolean);
        assert_eq!(infer_text_type("42"), AttrType::Integer);
        assert_eq!(infer_text_type("-7"), AttrType::Integer);
        assert_eq!(infer_text_type("3.5"), AttrType::Float);
        assert_eq!(infer_text_type("1e3"), AttrType::Float);
        assert_eq!(infer_text_type("2014-05-25T20:00:00Z"), AttrType::Timestamp);
        assert_eq!(infer_text_type("2014-05-25"), AttrType::Timestamp);
        assert_eq!(infer_text_type("https://example.org/p?q=1"), AttrType::Url);
        assert_eq!(infer_text_type("hello world"), AttrType::Text);
        assert_eq!(infer_text_type("NaN"), AttrType::Text);
        assert_eq!(infer_text_type("inf"), AttrType::Text);
        assert_eq!(infer_text_type("mailto:x@y.z"), AttrType::Text);
        assert_eq!(infer_text_type(""), AttrType::Text);
    }

    #[test]
    fn intrinsic_scalar_types_pass_through() {
        assert_eq!(infer_type(&Scalar::Bool(true)), AttrType::Boolean);
        assert_eq!(infer_type(&Scalar::Int(3)), AttrType::Integer);
        assert_eq!(infer_type(&Scalar::Float(0.5)), AttrType::Float);
        assert_eq!(
            infer_type(&Scalar::Time(Timestamp::from_unix(0))),
            AttrType::Timestamp
        );
    }

    #[test]
    fn dummy_dictionary_matches_by_canonical_form() {
        let dict = default_dummy_values();
        assert!(is_dummy(&Scalar::Text(String::new()), &dict));
        assert!(is_dummy(&Scalar::Text("N/A".into()), &dict));
        assert!(is_dummy(&Scalar::Text("unknown".into()), &dict));
        assert!(is_dummy(&Scalar::Time(Timestamp::from_unix(0)), &dict));
        assert!(is_dummy(
            &Scalar::Text("1970-01-01T00:00:00Z".into()),
            &dict
        ));
        assert!(!is_dummy(&Scalar::Text("known".into()), &dict));
        assert!(!is_dummy(&Scalar::Int(0), &dict));
    }

    #[test]
    fn numeric_and_timestamp_readings() {
        assert_eq!(numeric_of(&Scalar::Int(4)), Some(4.0));
        assert_eq!(numeric_of(&Scalar::Text("4.5".into())), Some(4.5));
        assert_eq!(numeric_of(&Scalar::Text("abc".into())), None);
        assert_eq!(numeric_of(&Scalar::Bool(true)), None);
        assert_eq!(
            timestamp_of(&Scalar::Text("1970-01-01T00:01:00Z".into())),
            Some(60)
        );
        assert_eq!(timestamp_of(&Scalar::Int(60)), None);
    }
}
