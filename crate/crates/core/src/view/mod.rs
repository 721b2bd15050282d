//! Dataset views: one statistical profile per attribute path, plus detected
//! inter-attribute relationships, built so that incremental merges are exact.
//!
//! Every derived figure in a profile (types, stats, histogram, top values,
//! topics, imputations) is recomputed from serialized accumulators, namely
//! the full value multiset and the missing-slot list, so merging new
//! documents into a view yields byte-for-byte the same profiles as profiling
//! the whole dataset at once.

pub mod accum;
pub mod deps;
pub mod extract;
pub mod infer;
pub mod render;
pub mod stats;
pub mod tags;
pub mod validate;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::policy::PrivacyLevel;
use crate::value::{DocValue, Scalar, Timestamp};
use crate::{Error, Result};

pub const VIEW_FORMAT: &str = "view-v1";

/// Inferred type of an attribute occurrence. Order doubles as the tie-break
/// for the primary type (earlier wins on equal counts).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum AttrType {
    Boolean,
    Integer,
    Float,
    Timestamp,
    Url,
    Text,
    Record,
    List,
}

impl AttrType {
    pub fn label(&self) -> &'static str {
        match self {
            AttrType::Boolean => "boolean",
            AttrType::Integer => "integer",
            AttrType::Float => "float",
            AttrType::Timestamp => "timestamp",
            AttrType::Url => "url",
            AttrType::Text => "text",
            AttrType::Record => "record",
            AttrType::List => "list",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewStatus {
    Draft,
    Validated,
    Amended,
}

/// Why a slot counts as missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotKind {
    /// The path does not occur in the document at all.
    Absent,
    /// An explicit null.
    Null,
    /// A sentinel from the dummy dictionary standing in for a value.
    Dummy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingSlot {
    pub document_id: String,
    pub kind: SlotKind,
}

/// One distinct value and its occurrence count; the serialized accumulator
/// behind all derived statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueCountEntry {
    pub value: Scalar,
    pub count: u64,
}

/// A rendered top-list entry (canonical string form of the value).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueCount {
    pub value: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Histogram {
    /// Equal-width bins over [lo, hi]; the last bin is closed, so hi itself
    /// lands in it.
    Numeric {
        lo: f64,
        hi: f64,
        bin_count: u32,
        counts: Vec<u64>,
    },
    /// Top-K value counts plus the mass beyond K.
    Categorical {
        top: Vec<ValueCount>,
        other_count: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputeMethod {
    Mode,
    Median,
}

/// A suggested stand-in for one missing slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferredValue {
    pub document_id: String,
    pub path: String,
    pub imputed: DocValue,
    pub confidence: f64,
    pub method: ImputeMethod,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicTag {
    /// Lowercased hashtag text, without the leading `#`.
    pub tag: String,
    pub frequency: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    FunctionalDependency,
    TemporalDependency,
    SemanticSimilarity,
    /// Reserved: no detector constructs this.
    Causal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relationship {
    pub kind: RelationKind,
    pub from_path: String,
    pub to_path: String,
    pub strength: f64,
    pub support: u64,
    pub violations: u64,
    /// Temporal checks: references that could not be resolved or timed,
    /// excluded from support.
    #[serde(default)]
    pub dangling: u64,
}

impl Relationship {
    /// Strength is always 1 − violations/support; zero support reads as
    /// zero strength (no evidence).
    pub fn with_strength(
        kind: RelationKind,
        from_path: String,
        to_path: String,
        support: u64,
        violations: u64,
        dangling: u64,
    ) -> Relationship {
        debug_assert!(violations <= support);
        let strength = if support > 0 {
            1.0 - violations as f64 / support as f64
        } else {
            0.0
        };
        Relationship {
            kind,
            from_path,
            to_path,
            strength,
            support,
            violations,
            dangling,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationAction {
    Confirm,
    OverrideType(AttrType),
    Note(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationAnnotation {
    pub path: String,
    pub action: AnnotationAction,
    pub analyst: String,
    pub at: Timestamp,
}

/// Per-path profile. The `value_counts`, `missing_slots`, structural counts,
/// and provider list are the accumulators; everything after them is derived
/// and rebuilt on every finalize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeProfile {
    pub path: String,

    // Accumulators.
    pub value_counts: Vec<ValueCountEntry>,
    pub missing_slots: Vec<MissingSlot>,
    pub count_records: u64,
    pub count_lists: u64,
    pub providers: Vec<String>,

    // Derived.
    pub type_distribution: BTreeMap<AttrType, u64>,
    pub primary_type: Option<AttrType>,
    /// Analyst override of the primary type, reapplied across merges.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub type_override: Option<AttrType>,
    pub count_present: u64,
    pub count_null: u64,
    pub count_missing: u64,
    pub count_dummy: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stddev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sum: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sum_sq: Option<f64>,
    pub histogram: Histogram,
    pub distinct_count: u64,
    pub top_values: Vec<ValueCount>,
    pub inferred_values: Vec<InferredValue>,
    /// No present values to impute from, yet slots were missing.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub imputation_undefined: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author_path: Option<String>,
    pub license: String,
    pub privacy: PrivacyLevel,
    pub topics: Vec<TopicTag>,
}

fn default_bin_count() -> u32 {
    20
}
fn default_top_k() -> usize {
    50
}
fn default_epsilon() -> f64 {
    0.01
}
fn default_true() -> bool {
    true
}

/// Values standing in for "no value"; matching is by canonical string form,
/// so `1970-01-01T00:00:00Z` catches both the text and the parsed timestamp.
pub fn default_dummy_values() -> Vec<String> {
    ["", "N/A", "null", "-", "unknown", "1970-01-01T00:00:00Z"]
        .into_iter()
        .map(String::from)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewConfig {
    #[serde(default = "default_bin_count")]
    pub bin_count: u32,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    /// Dependency tolerance: emit A→B iff strength ≥ 1 − epsilon.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_dummy_values")]
    pub dummy_values: Vec<String>,
    #[serde(default = "default_true")]
    pub detect_dependencies: bool,
    /// Path whose value references another document (reply/share link).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link_path: Option<String>,
    /// Path holding the document's own timestamp, for temporal checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_path: Option<String>,
    /// Path holding a provider-native id that links may reference instead
    /// of the content id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link_native_id_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author_path: Option<String>,
    /// Provider id → privacy level of documents it serves.
    #[serde(default)]
    pub provider_privacy: BTreeMap<String, PrivacyLevel>,
    #[serde(default)]
    pub provider_license: BTreeMap<String, String>,
}

impl Default for ViewConfig {
    fn default() -> Self {
        ViewConfig {
            bin_count: default_bin_count(),
            top_k: default_top_k(),
            epsilon: default_epsilon(),
            dummy_values: default_dummy_values(),
            detect_dependencies: true,
            link_path: None,
            time_path: None,
            link_native_id_path: None,
            author_path: None,
            provider_privacy: BTreeMap::new(),
            provider_license: BTreeMap::new(),
        }
    }
}

impl ViewConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bin_count == 0 {
            return Err(Error::Plan("bin_count must be positive".into()));
        }
        if self.top_k == 0 {
            return Err(Error::Plan("top_k must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Plan("epsilon must be in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ViewConfig> {
        let raw = std::fs::read_to_string(path.as_ref())?;
        let config: ViewConfig = serde_json::from_str(&raw)
            .map_err(|e| Error::Plan(format!("bad view config: {e}")))?;
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct View {
    pub format: String,
    /// Dataset name (not path): views travel with their dataset directory.
    pub dataset_id: String,
    /// Latest collection time among profiled documents; the epoch when the
    /// dataset is empty. Never the wall clock, so repeat runs are identical.
    pub created_at: Timestamp,
    pub version: u64,
    pub status: ViewStatus,
    pub document_count: u64,
    /// Ids of the profiled documents, in dataset order; merges append and
    /// use the list to backfill absent slots for newly seen paths.
    pub documents: Vec<String>,
    pub config: ViewConfig,
    pub profiles: Vec<AttributeProfile>,
    pub relationships: Vec<Relationship>,
    pub annotations: Vec<ValidationAnnotation>,
}

impl View {
    pub fn profile(&self, path: &str) -> Option<&AttributeProfile> {
        self.profiles.iter().find(|p| p.path == path)
    }

    pub fn to_canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_canonical_json()?)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<View> {
        let raw = std::fs::read_to_string(path.as_ref())?;
        let view: View =
            serde_json::from_str(&raw).map_err(|e| Error::Plan(format!("bad view file: {e}")))?;
        if view.format != VIEW_FORMAT {
            return Err(Error::Plan(format!(
                "unsupported view format {:?}, expected {VIEW_FORMAT:?}",
                view.format
            )));
        }
        Ok(view)
    }
}
