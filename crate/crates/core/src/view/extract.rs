//! View extraction and incremental merge.
//!
//! Extraction runs two passes: the first pass registers every attribute
//! path, the second accumulates occurrences and fills absent slots against
//! the complete path set. A merge replays the same accumulation for the
//! documents the view has not seen, backfilling absent slots for paths that
//! are new to it, so merging batch by batch finalizes to exactly the view a
//! full extraction would produce. Relationships are re-detected over all
//! profiled documents on every finalize.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::accum::PathAccum;
use super::deps::{check_temporal, detect_fd};
use super::tags::semantic_similarity;
use super::{
    AnnotationAction, AttrType, AttributeProfile, RelationKind, Relationship, View, ViewConfig,
    ViewStatus, VIEW_FORMAT,
};
use crate::dataset::{AvailabilityFilter, DatasetCollection, DocFilter};
use crate::doc::Document;
use crate::value::{visit_paths, Leaf, Scalar, Timestamp};
use crate::view::SlotKind;
use crate::{Error, Result};

fn collected_filter() -> DocFilter {
    DocFilter {
        availability: Some(AvailabilityFilter::Collected),
        ..DocFilter::default()
    }
}

/// Element paths (`tags[]`, `a[].b`) hold list elements: a document without
/// the list contributes no slots, so they are never absent-filled.
fn is_element_path(path: &str) -> bool {
    path.contains("[]")
}

struct Builder {
    accums: BTreeMap<String, PathAccum>,
    documents: Vec<String>,
    created_at: Timestamp,
}

impl Builder {
    fn new() -> Builder {
        Builder {
            accums: BTreeMap::new(),
            documents: Vec::new(),
            created_at: Timestamp::UNIX_EPOCH,
        }
    }

    fn from_view(view: &View) -> Builder {
        Builder {
            accums: view
                .profiles
                .iter()
                .map(|p| (p.path.clone(), PathAccum::from_profile(p)))
                .collect(),
            documents: view.documents.clone(),
            created_at: view.created_at,
        }
    }

    /// First pass: make sure every path the document touches has an
    /// accumulator. Paths new to the view owe an absent slot to every
    /// document profiled before them.
    fn register_paths(&mut self, doc: &Document) {
        visit_paths(&doc.body, |path, _| {
            if !self.accums.contains_key(path) {
                let mut accum = PathAccum::default();
                if !is_element_path(path) {
                    for id in &self.documents {
                        accum.observe_missing(id, SlotKind::Absent);
                    }
                }
                self.accums.insert(path.to_string(), accum);
            }
        });
    }

    /// Second pass: record the document's occurrences and absent-fill the
    /// paths it does not touch.
    fn accumulate(&mut self, doc: &Document, config: &ViewConfig) {
        let provider = doc.provenance.provider_id.as_str();
        let mut touched: BTreeSet<String> = BTreeSet::new();
        let accums = &mut self.accums;
        visit_paths(&doc.body, |path, leaf| {
            let accum = accums
                .get_mut(path)
                .expect("path registered in the first pass");
            match leaf {
                Leaf::Scalar(v) => {
                    let scalar = Scalar::from_doc_value(v).expect("leaf scalar");
                    accum.observe_scalar(&scalar, &doc.id, provider, &config.dummy_values);
                }
                Leaf::Null => accum.observe_missing(&doc.id, SlotKind::Null),
                Leaf::Record => accum.observe_record(provider),
                Leaf::List => accum.observe_list(provider),
            }
            touched.insert(path.to_string());
        });
        for (path, accum) in accums.iter_mut() {
            if !touched.contains(path) && !is_element_path(path) {
                accum.observe_missing(&doc.id, SlotKind::Absent);
            }
        }
        self.documents.push(doc.id.clone());
        self.created_at = self.created_at.max(doc.provenance.collected_at);
    }

    fn finalize(
        self,
        dataset_id: String,
        config: ViewConfig,
        docs: &[Document],
        version: u64,
        status: ViewStatus,
        annotations: Vec<super::ValidationAnnotation>,
    ) -> View {
        let overrides = type_overrides(&annotations);
        let profiles: Vec<AttributeProfile> = self
            .accums
            .iter()
            .map(|(path, accum)| {
                accum.finalize(path, &config, overrides.get(path.as_str()).copied())
            })
            .collect();
        let relationships = detect_relationships(docs, &profiles, &config);
        View {
            format: VIEW_FORMAT.to_string(),
            dataset_id,
            created_at: self.created_at,
            version,
            status,
            document_count: self.documents.len() as u64,
            documents: self.documents,
            config,
            profiles,
            relationships,
            annotations,
        }
    }
}

/// Last analyst type override per path wins.
fn type_overrides(annotations: &[super::ValidationAnnotation]) -> BTreeMap<&str, AttrType> {
    let mut map = BTreeMap::new();
    for ann in annotations {
        if let AnnotationAction::OverrideType(t) = &ann.action {
            map.insert(ann.path.as_str(), *t);
        }
    }
    map
}

fn detect_relationships(
    docs: &[Document],
    profiles: &[AttributeProfile],
    config: &ViewConfig,
) -> Vec<Relationship> {
    let mut relationships = Vec::new();
    if !config.detect_dependencies {
        return relationships;
    }

    // Candidate dependency pairs: ordered pairs of non-element paths that
    // hold at least one real scalar.
    let scalar_paths: Vec<&str> = profiles
        .iter()
        .filter(|p| !is_element_path(&p.path) && !p.value_counts.is_empty())
        .map(|p| p.path.as_str())
        .collect();
    let mut pairs = Vec::new();
    for &from in &scalar_paths {
        for &to in &scalar_paths {
            if from != to {
                pairs.push((from.to_string(), to.to_string()));
            }
        }
    }
    relationships.extend(detect_fd(docs, &pairs, config.epsilon, &config.dummy_values));

    if let (Some(link), Some(time)) = (&config.link_path, &config.time_path) {
        let rel = check_temporal(
            docs,
            link,
            time,
            config.link_native_id_path.as_deref(),
            &config.dummy_values,
        );
        if rel.support + rel.dangling > 0 {
            relationships.push(rel);
        }
    }

    // Topic overlap between text attributes, for pairs that share a tag.
    for (i, a) in profiles.iter().enumerate() {
        for b in &profiles[i + 1..] {
            if a.topics.is_empty() || b.topics.is_empty() {
                continue;
            }
            let tags_a: BTreeSet<String> = a.topics.iter().map(|t| t.tag.clone()).collect();
            let tags_b: BTreeSet<String> = b.topics.iter().map(|t| t.tag.clone()).collect();
            let strength = semantic_similarity(&tags_a, &tags_b);
            if strength > 0.0 {
                let union = tags_a.union(&tags_b).count() as u64;
                let overlap = tags_a.intersection(&tags_b).count() as u64;
                relationships.push(Relationship::with_strength(
                    RelationKind::SemanticSimilarity,
                    a.path.clone(),
                    b.path.clone(),
                    union,
                    union - overlap,
                    0,
                ));
            }
        }
    }
    relationships
}

/// Profile every collected document of the dataset into a fresh draft view.
pub fn extract_view(ds: &DatasetCollection, config: &ViewConfig) -> Result<View> {
    config.validate()?;
    let docs = ds.documents(collected_filter())?;
    let mut builder = Builder::new();
    for doc in &docs {
        builder.register_paths(doc);
    }
    for doc in &docs {
        builder.accumulate(doc, config);
    }
    Ok(builder.finalize(
        ds.name().to_string(),
        config.clone(),
        &docs,
        1,
        ViewStatus::Draft,
        Vec::new(),
    ))
}

/// Fold the dataset's documents the view has not profiled yet into a new
/// version. A validated view degrades to amended; analyst type overrides
/// are reapplied. With nothing new, the view is returned unchanged.
pub fn merge_view(view: &View, ds: &DatasetCollection) -> Result<View> {
    if ds.name() != view.dataset_id {
        return Err(Error::DatasetMismatch {
            expected: view.dataset_id.clone(),
            got: ds.name().to_string(),
        });
    }
    view.config.validate()?;
    let all_docs = ds.documents(collected_filter())?;
    let known: HashSet<&str> = view.documents.iter().map(String::as_str).collect();
    let new_docs: Vec<&Document> = all_docs
        .iter()
        .filter(|d| !known.contains(d.id.as_str()))
        .collect();
    if new_docs.is_empty() {
        return Ok(view.clone());
    }

    let mut builder = Builder::from_view(view);
    for doc in &new_docs {
        builder.register_paths(doc);
    }
    for doc in &new_docs {
        builder.accumulate(doc, &view.config);
    }

    // Relationships cover exactly the profiled documents, in dataset order.
    let profiled: HashSet<&str> = builder.documents.iter().map(String::as_str).collect();
    let docs: Vec<Document> = all_docs
        .iter()
        .filter(|d| profiled.contains(d.id.as_str()))
        .cloned()
        .collect();

    let status = match view.status {
        ViewStatus::Validated => ViewStatus::Amended,
        other => other,
    };
    Ok(builder.finalize(
        view.dataset_id.clone(),
        view.config.clone(),
        &docs,
        view.version + 1,
        status,
        view.annotations.clone(),
    ))
}
