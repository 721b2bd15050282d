//! Document value model and canonical JSON encoding.
//!
//! Every stored document body is a [`DocValue`] tree: null, bool, 64-bit int,
//! finite float, text, second-precision UTC timestamp, list, or record.
//! The canonical encoding keeps content ids stable: record fields sort
//! lexicographically, integers use their minimal decimal form, floats the
//! shortest round-trip decimal form, timestamps RFC 3339 UTC.
//!
//! Attribute paths are dotted field names; list elements are addressed by a
//! `[]` suffix on the segment that held the list (`content.tags[]`). A scalar
//! at the document root is addressed as `$`. Field names containing `.` or
//! `[]` still profile fine but cannot be addressed individually.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, NaiveDate, NaiveDateTime, SecondsFormat, Utc};
use serde::de::Error as _;
use serde::ser::{SerializeMap, SerializeSeq, SerializeStruct};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Maximum nesting depth of a document body (root value counts as 1).
pub const MAX_DEPTH: usize = 32;

/// Replacement text installed by policy redaction.
pub const REDACTED: &str = "[REDACTED]";

/// Seconds-precision UTC timestamp.
///
/// Stored as Unix seconds, clamped to a range RFC 3339 can express.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(i64);

const TS_RANGE: i64 = 8_000_000_000_000;

impl Timestamp {
    pub const UNIX_EPOCH: Timestamp = Timestamp(0);

    pub fn from_unix(secs: i64) -> Self {
        Timestamp(secs.clamp(-TS_RANGE, TS_RANGE))
    }

    pub fn unix(self) -> i64 {
        self.0
    }

    /// Day bucket index (floor of unix seconds / 86400).
    pub fn day_index(self) -> i64 {
        self.0.div_euclid(86_400)
    }

    pub fn from_day_index(day: i64) -> Self {
        Timestamp::from_unix(day * 86_400)
    }

    /// Strict RFC 3339 parse; fractional seconds are truncated.
    pub fn parse(s: &str) -> Result<Self> {
        let dt = DateTime::parse_from_rfc3339(s)
            .map_err(|e| Error::InvalidValue(format!("bad timestamp {s:?}: {e}")))?;
        Ok(Timestamp::from_unix(dt.with_timezone(&Utc).timestamp()))
    }

    /// Accepts RFC 3339 plus the common ISO-8601 reduced forms
    /// (`YYYY-MM-DDTHH:MM:SS`, `YYYY-MM-DD HH:MM:SS`, `YYYY-MM-DD`).
    pub fn parse_lenient(s: &str) -> Option<Self> {
        if let Ok(ts) = Timestamp::parse(s) {
            return Some(ts);
        }
        for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
            if let Ok(ndt) = NaiveDateTime::parse_from_str(s, fmt) {
                return Some(Timestamp::from_unix(ndt.and_utc().timestamp()));
            }
        }
        if let Ok(nd) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
            let ndt = nd.and_hms_opt(0, 0, 0)?;
            return Some(Timestamp::from_unix(ndt.and_utc().timestamp()));
        }
        None
    }

    pub fn to_rfc3339(self) -> String {
        let dt = DateTime::from_timestamp(self.0, 0).expect("clamped into range");
        dt.to_rfc3339_opts(SecondsFormat::Secs, true)
    }

    /// `YYYY-MM-DD` of the UTC day.
    pub fn date_string(self) -> String {
        let dt = DateTime::from_timestamp(self.0, 0).expect("clamped into range");
        dt.format("%Y-%m-%d").to_string()
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_rfc3339())
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_rfc3339())
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Timestamp::parse(&s).map_err(D::Error::custom)
    }
}

/// A document body value.
///
/// Floats are always finite; record field names are unique and non-empty;
/// nesting never exceeds [`MAX_DEPTH`]. Equality compares floats bitwise so
/// that it agrees with canonical-byte identity.
#[derive(Debug, Clone)]
pub enum DocValue {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
    Time(Timestamp),
    List(Vec<DocValue>),
    Record(BTreeMap<String, DocValue>),
}

impl PartialEq for DocValue {
    fn eq(&self, other: &Self) -> bool {
        use DocValue::*;
        match (self, other) {
            (Null, Null) => true,
            (Bool(a), Bool(b)) => a == b,
            (Int(a), Int(b)) => a == b,
            (Float(a), Float(b)) => a.to_bits() == b.to_bits(),
            (Text(a), Text(b)) => a == b,
            (Time(a), Time(b)) => a == b,
            (List(a), List(b)) => a == b,
            (Record(a), Record(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for DocValue {}

impl DocValue {
    pub fn text(s: impl Into<String>) -> Self {
        DocValue::Text(s.into())
    }

    /// Finite-checked float constructor.
    pub fn float(f: f64) -> Result<Self> {
        if f.is_finite() {
            Ok(DocValue::Float(f))
        } else {
            Err(Error::InvalidValue(format!("non-finite float {f}")))
        }
    }

    pub fn record(fields: impl IntoIterator<Item = (String, DocValue)>) -> Self {
        DocValue::Record(fields.into_iter().collect())
    }

    pub fn is_scalar(&self) -> bool {
        !matches!(self, DocValue::Null | DocValue::List(_) | DocValue::Record(_))
    }

    /// Parses a raw JSON text into a value tree.
    ///
    /// Strings stay text (no silent promotion to timestamps or numbers);
    /// integers beyond i64 fall back to floats. Duplicate record keys keep
    /// the last value, as in ordinary JSON parsing.
    pub fn from_json_str(raw: &str) -> Result<Self> {
        let v: serde_json::Value =
            serde_json::from_str(raw).map_err(|e| Error::from_json(&e))?;
        DocValue::from_json(&v)
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        Self::from_json_depth(v, 1)
    }

    fn from_json_depth(v: &serde_json::Value, depth: usize) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(Error::InvalidValue(format!(
                "nesting exceeds maximum depth {MAX_DEPTH}"
            )));
        }
        Ok(match v {
            serde_json::Value::Null => DocValue::Null,
            serde_json::Value::Bool(b) => DocValue::Bool(*b),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    DocValue::Int(i)
                } else {
                    let f = n.as_f64().unwrap_or(f64::NAN);
                    DocValue::float(f)?
                }
            }
            serde_json::Value::String(s) => DocValue::Text(s.clone()),
            serde_json::Value::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    out.push(Self::from_json_depth(item, depth + 1)?);
                }
                DocValue::List(out)
            }
            serde_json::Value::Object(map) => {
                let mut out = BTreeMap::new();
                for (k, val) in map {
                    if k.is_empty() {
                        return Err(Error::InvalidValue("empty record field name".into()));
                    }
                    out.insert(k.clone(), Self::from_json_depth(val, depth + 1)?);
                }
                DocValue::Record(out)
            }
        })
    }

    /// Checks the model invariants on a hand-built tree.
    pub fn validate(&self) -> Result<()> {
        self.validate_depth(1)
    }

    fn validate_depth(&self, depth: usize) -> Result<()> {
        if depth > MAX_DEPTH {
            return Err(Error::InvalidValue(format!(
                "nesting exceeds maximum depth {MAX_DEPTH}"
            )));
        }
        match self {
            DocValue::Float(f) if !f.is_finite() => {
                Err(Error::InvalidValue(format!("non-finite float {f}")))
            }
            DocValue::List(items) => {
                for item in items {
                    item.validate_depth(depth + 1)?;
                }
                Ok(())
            }
            DocValue::Record(map) => {
                for (k, v) in map {
                    if k.is_empty() {
                        return Err(Error::InvalidValue("empty record field name".into()));
                    }
                    v.validate_depth(depth + 1)?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Canonical JSON encoding: the deterministic byte form used for content
    /// hashing, deduplication, and size accounting.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("canonical encoding never fails")
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        self.canonical_json().into_bytes()
    }
}

impl Serialize for DocValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DocValue::Null => s.serialize_unit(),
            DocValue::Bool(b) => s.serialize_bool(*b),
            DocValue::Int(i) => s.serialize_i64(*i),
            DocValue::Float(f) => s.serialize_f64(*f),
            DocValue::Text(t) => s.serialize_str(t),
            DocValue::Time(ts) => s.serialize_str(&ts.to_rfc3339()),
            DocValue::List(items) => {
                let mut seq = s.serialize_seq(Some(items.len()))?;
                for item in items {
                    seq.serialize_element(item)?;
                }
                seq.end()
            }
            DocValue::Record(map) => {
                let mut m = s.serialize_map(Some(map.len()))?;
                for (k, v) in map {
                    m.serialize_entry(k, v)?;
                }
                m.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for DocValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        DocValue::from_json(&v).map_err(D::Error::custom)
    }
}

/// A scalar occurrence, usable as an ordered map key.
///
/// Ordering is total: variants rank `Bool < Int < Float < Time < Text`, then
/// values compare within the variant (floats via `total_cmp`).
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Bool(bool),
    Int(i64),
    Float(f64),
    Time(Timestamp),
    Text(String),
}

impl Eq for Scalar {}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        fn rank(s: &Scalar) -> u8 {
            match s {
                Scalar::Bool(_) => 0,
                Scalar::Int(_) => 1,
                Scalar::Float(_) => 2,
                Scalar::Time(_) => 3,
                Scalar::Text(_) => 4,
            }
        }
        match (self, other) {
            (Scalar::Bool(a), Scalar::Bool(b)) => a.cmp(b),
            (Scalar::Int(a), Scalar::Int(b)) => a.cmp(b),
            (Scalar::Float(a), Scalar::Float(b)) => a.total_cmp(b),
            (Scalar::Time(a), Scalar::Time(b)) => a.cmp(b),
            (Scalar::Text(a), Scalar::Text(b)) => a.cmp(b),
            (a, b) => rank(a).cmp(&rank(b)),
        }
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Scalar {
    pub fn from_doc_value(v: &DocValue) -> Option<Scalar> {
        match v {
            DocValue::Bool(b) => Some(Scalar::Bool(*b)),
            DocValue::Int(i) => Some(Scalar::Int(*i)),
            DocValue::Float(f) => Some(Scalar::Float(*f)),
            DocValue::Time(t) => Some(Scalar::Time(*t)),
            DocValue::Text(s) => Some(Scalar::Text(s.clone())),
            _ => None,
        }
    }

    pub fn to_doc_value(&self) -> DocValue {
        match self {
            Scalar::Bool(b) => DocValue::Bool(*b),
            Scalar::Int(i) => DocValue::Int(*i),
            Scalar::Float(f) => DocValue::Float(*f),
            Scalar::Time(t) => DocValue::Time(*t),
            Scalar::Text(s) => DocValue::Text(s.clone()),
        }
    }

    /// Canonical text form; the tie-break order for modes and majorities.
    /// Text is its own content and times render as RFC 3339, so a value and
    /// its string spelling ("42" and 42) share one form.
    pub fn canonical_string(&self) -> String {
        match self {
            Scalar::Text(s) => s.clone(),
            Scalar::Time(t) => t.to_rfc3339(),
            other => other.to_doc_value().canonical_json(),
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Scalar::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Scalar", 2)?;
        match self {
            Scalar::Bool(b) => {
                st.serialize_field("type", "boolean")?;
                st.serialize_field("value", b)?;
            }
            Scalar::Int(i) => {
                st.serialize_field("type", "integer")?;
                st.serialize_field("value", i)?;
            }
            Scalar::Float(f) => {
                st.serialize_field("type", "float")?;
                st.serialize_field("value", f)?;
            }
            Scalar::Time(t) => {
                st.serialize_field("type", "timestamp")?;
                st.serialize_field("value", &t.to_rfc3339())?;
            }
            Scalar::Text(x) => {
                st.serialize_field("type", "text")?;
                st.serialize_field("value", x)?;
            }
        }
        st.end()
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            #[serde(rename = "type")]
            kind: String,
            value: serde_json::Value,
        }
        let r = Repr::deserialize(d)?;
        let bad = || D::Error::custom(format!("bad scalar value for type {}", r.kind));
        Ok(match r.kind.as_str() {
            "boolean" => Scalar::Bool(r.value.as_bool().ok_or_else(bad)?),
            "integer" => Scalar::Int(r.value.as_i64().ok_or_else(bad)?),
            "float" => {
                let f = r.value.as_f64().ok_or_else(bad)?;
                if !f.is_finite() {
                    return Err(bad());
                }
                Scalar::Float(f)
            }
            "timestamp" => {
                let s = r.value.as_str().ok_or_else(bad)?;
                Scalar::Time(Timestamp::parse(s).map_err(D::Error::custom)?)
            }
            "text" => Scalar::Text(r.value.as_str().ok_or_else(bad)?.to_string()),
            other => return Err(D::Error::custom(format!("unknown scalar type {other}"))),
        })
    }
}

/// What a path walk found at one position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Leaf<'a> {
    Scalar(&'a DocValue),
    Null,
    Record,
    List,
}

/// Visits every path occurrence in a body, records and lists included.
///
/// The document root itself is not reported unless it is a scalar, null, or
/// list (reported under `$`, with list elements under `[]`).
pub fn visit_paths<'a, F: FnMut(&str, Leaf<'a>)>(root: &'a DocValue, mut f: F) {
    let mut path = String::new();
    visit_rec(root, &mut path, &mut f);
}

fn label(path: &str) -> &str {
    if path.is_empty() {
        "$"
    } else {
        path
    }
}

fn visit_rec<'a, F: FnMut(&str, Leaf<'a>)>(v: &'a DocValue, path: &mut String, f: &mut F) {
    match v {
        DocValue::Record(map) => {
            if !path.is_empty() {
                f(path, Leaf::Record);
            }
            for (k, child) in map {
                let len = path.len();
                if !path.is_empty() {
                    path.push('.');
                }
                path.push_str(k);
                visit_rec(child, path, f);
                path.truncate(len);
            }
        }
        DocValue::List(items) => {
            f(label(path), Leaf::List);
            let len = path.len();
            path.push_str("[]");
            for item in items {
                visit_rec(item, path, f);
            }
            path.truncate(len);
        }
        DocValue::Null => f(label(path), Leaf::Null),
        scalar => f(label(path), Leaf::Scalar(scalar)),
    }
}

/// One step of a parsed attribute path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathOp {
    Field(String),
    Elems,
}

/// Parses a dotted path (`a[].b`) into navigation ops; `$` parses to none.
pub fn parse_path(path: &str) -> Result<Vec<PathOp>> {
    if path == "$" {
        return Ok(Vec::new());
    }
    if path.is_empty() {
        return Err(Error::UnknownPath("(empty)".into()));
    }
    let mut ops = Vec::new();
    for (i, part) in path.split('.').enumerate() {
        let mut name = part;
        let mut lists = 0usize;
        while let Some(stripped) = name.strip_suffix("[]") {
            name = stripped;
            lists += 1;
        }
        if name.contains('[') || name.contains(']') {
            return Err(Error::UnknownPath(path.to_string()));
        }
        if name.is_empty() {
            // Only a leading bare `[]` (root list) is addressable.
            if !(i == 0 && lists > 0) {
                return Err(Error::UnknownPath(path.to_string()));
            }
        } else {
            ops.push(PathOp::Field(name.to_string()));
        }
        for _ in 0..lists {
            ops.push(PathOp::Elems);
        }
    }
    Ok(ops)
}

/// All values a path reaches inside a body.
pub fn values_at_path<'a>(root: &'a DocValue, path: &str) -> Vec<&'a DocValue> {
    let Ok(ops) = parse_path(path) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    collect_at(root, &ops, &mut out);
    out
}

fn collect_at<'a>(v: &'a DocValue, ops: &[PathOp], out: &mut Vec<&'a DocValue>) {
    match ops.split_first() {
        None => out.push(v),
        Some((PathOp::Field(name), rest)) => {
            if let DocValue::Record(map) = v {
                if let Some(child) = map.get(name) {
                    collect_at(child, rest, out);
                }
            }
        }
        Some((PathOp::Elems, rest)) => {
            if let DocValue::List(items) = v {
                for item in items {
                    collect_at(item, rest, out);
                }
            }
        }
    }
}

/// The single scalar a path holds in this body, if it is exactly one.
pub fn scalar_at_path(root: &DocValue, path: &str) -> Option<Scalar> {
    let values = values_at_path(root, path);
    match values.as_slice() {
        [one] => Scalar::from_doc_value(one),
        _ => None,
    }
}

/// Replaces every value the path reaches with `"[REDACTED]"`.
///
/// Returns how many positions changed; 0 means the path missed.
pub fn redact_at_path(root: &mut DocValue, path: &str) -> usize {
    let Ok(ops) = parse_path(path) else {
        return 0;
    };
    redact_rec(root, &ops)
}

fn redact_rec(v: &mut DocValue, ops: &[PathOp]) -> usize {
    match ops.split_first() {
        None => {
            *v = DocValue::Text(REDACTED.to_string());
            1
        }
        Some((PathOp::Field(name), rest)) => match v {
            DocValue::Record(map) => map.get_mut(name).map_or(0, |c| redact_rec(c, rest)),
            _ => 0,
        },
        Some((PathOp::Elems, rest)) => match v {
            DocValue::List(items) => items.iter_mut().map(|e| redact_rec(e, rest)).sum(),
            _ => 0,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(pairs: &[(&str, DocValue)]) -> DocValue {
        DocValue::record(pairs.iter().map(|(k, v)| (k.to_string(), v.clone())))
    }

    #[test]
    fn canonical_sorts_record_fields() {
        let a = DocValue::from_json_str(r#"{"b":1,"a":2}"#).unwrap();
        let b = DocValue::from_json_str(r#"{"a":2,"b":1}"#).unwrap();
        assert_eq!(a.canonical_json(), b.canonical_json());
        assert_eq!(a.canonical_json(), r#"{"a":2,"b":1}"#);
    }

    #[test]
    fn canonical_empty_record() {
        let v = DocValue::from_json_str("{}").unwrap();
        assert_eq!(v.canonical_json(), "{}");
    }

    #[test]
    fn canonical_keeps_ints_and_floats_distinct() {
        assert_eq!(DocValue::Int(1).canonical_json(), "1");
        assert_eq!(DocValue::Float(1.0).canonical_json(), "1.0");
        assert_eq!(DocValue::Float(0.1).canonical_json(), "0.1");
    }

    #[test]
    fn canonical_timestamp_is_rfc3339_utc() {
        let ts = Timestamp::parse("2014-05-22T10:00:00+02:00").unwrap();
        assert_eq!(
            DocValue::Time(ts).canonical_json(),
            "\"2014-05-22T08:00:00Z\""
        );
    }

    #[test]
    fn parse_reports_position() {
        let err = DocValue::from_json_str("{\"user\":").unwrap_err();
        match err {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 1);
                assert!(column >= 8);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn depth_limit_enforced() {
        let mut s = String::new();
        for _ in 0..MAX_DEPTH {
            s.push_str("[");
        }
        s.push('1');
        for _ in 0..MAX_DEPTH {
            s.push(']');
        }
        // 32 list levels + the scalar = depth 33.
        assert!(DocValue::from_json_str(&s).is_err());
        let ok = &s[1..s.len() - 1];
        assert!(DocValue::from_json_str(ok).is_ok());
    }

    #[test]
    fn empty_field_name_rejected() {
        let err = DocValue::from_json_str(r#"{"":1}"#).unwrap_err();
        assert!(matches!(err, Error::InvalidValue(_)));
    }

    #[test]
    fn float_constructor_rejects_non_finite() {
        assert!(DocValue::float(f64::NAN).is_err());
        assert!(DocValue::float(f64::INFINITY).is_err());
        assert!(DocValue::float(1.5).is_ok());
    }

    #[test]
    fn visit_reports_flattened_paths() {
        let v = rec(&[
            ("user", DocValue::text("x")),
            (
                "content",
                rec(&[
                    ("text", DocValue::text("hi")),
                    (
                        "tags",
                        DocValue::List(vec![DocValue::text("a"), DocValue::text("b")]),
                    ),
                ]),
            ),
        ]);
        let mut seen = Vec::new();
        visit_paths(&v, |p, leaf| {
            if matches!(leaf, Leaf::Scalar(_)) {
                seen.push(p.to_string());
            }
        });
        assert_eq!(
            seen,
            vec!["content.tags[]", "content.tags[]", "content.text", "user"]
        );
    }

    #[test]
    fn root_scalar_uses_dollar() {
        let mut seen = Vec::new();
        visit_paths(&DocValue::Int(5), |p, _| seen.push(p.to_string()));
        assert_eq!(seen, vec!["$"]);
    }

    #[test]
    fn values_at_path_descends_lists() {
        let v = rec(&[(
            "a",
            DocValue::List(vec![
                rec(&[("b", DocValue::Int(1))]),
                rec(&[("b", DocValue::Int(2))]),
                rec(&[("c", DocValue::Int(3))]),
            ]),
        )]);
        let got = values_at_path(&v, "a[].b");
        assert_eq!(got, vec![&DocValue::Int(1), &DocValue::Int(2)]);
        assert!(values_at_path(&v, "a[].missing").is_empty());
        assert_eq!(scalar_at_path(&v, "a[].b"), None);
    }

    #[test]
    fn redact_replaces_and_counts() {
        let mut v = rec(&[
            ("user", DocValue::text("handle")),
            ("n", DocValue::Int(3)),
        ]);
        assert_eq!(redact_at_path(&mut v, "user"), 1);
        assert_eq!(redact_at_path(&mut v, "missing"), 0);
        assert_eq!(
            values_at_path(&v, "user"),
            vec![&DocValue::Text(REDACTED.into())]
        );
        assert_eq!(values_at_path(&v, "n"), vec![&DocValue::Int(3)]);
    }

    #[test]
    fn scalar_order_is_total_and_typed() {
        let mut xs = vec![
            Scalar::Text("a".into()),
            Scalar::Int(5),
            Scalar::Bool(true),
            Scalar::Float(2.5),
            Scalar::Time(Timestamp::from_unix(10)),
        ];
        xs.sort();
        assert!(matches!(xs[0], Scalar::Bool(_)));
        assert!(matches!(xs[4], Scalar::Text(_)));
    }

    #[test]
    fn scalar_json_round_trip() {
        for s in [
            Scalar::Bool(false),
            Scalar::Int(-42),
            Scalar::Float(0.1),
            Scalar::Float(-0.0),
            Scalar::Time(Timestamp::from_unix(1_400_000_000)),
            Scalar::Text("x,y".into()),
        ] {
            let j = serde_json::to_string(&s).unwrap();
            let back: Scalar = serde_json::from_str(&j).unwrap();
            assert_eq!(back, s, "{j}");
        }
    }

    #[test]
    fn timestamp_lenient_forms() {
        let day = Timestamp::parse_lenient("2014-05-22").unwrap();
        assert_eq!(day.to_rfc3339(), "2014-05-22T00:00:00Z");
        let full = Timestamp::parse_lenient("2014-05-22T10:00:00Z").unwrap();
        assert_eq!(full.unix() - day.unix(), 36_000);
        assert!(Timestamp::parse_lenient("22/05/2014").is_none());
    }

    #[test]
    fn doc_round_trip_via_json() {
        let v = rec(&[
            ("a", DocValue::Float(0.5)),
            ("b", DocValue::List(vec![DocValue::Null, DocValue::Int(1)])),
        ]);
        let canon = v.canonical_json();
        let back = DocValue::from_json_str(&canon).unwrap();
        assert_eq!(back.canonical_json(), canon);
    }
}
