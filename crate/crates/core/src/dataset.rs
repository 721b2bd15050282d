//! Append-only JSONL dataset store with a manifest and content-hash dedup.
//!
//! Layout on disk: `<root>/manifest.json` plus `shard-NNNNN.jsonl` files, one
//! serialized document per line. A shard rolls over once it reaches the
//! manifest's `shard_limit` lines. Single writer, any number of readers.

use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Lines, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::doc::{compute_id, AvailabilityStatus, Document, ProvenanceStamp, UnavailableReason};
use crate::value::{DocValue, Timestamp};
use crate::{Error, Result};

pub const DEFAULT_SHARD_LIMIT: u32 = 10_000;
const MANIFEST_FILE: &str = "manifest.json";

/// How eagerly writes reach stable storage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Durability {
    /// fsync the shard and rewrite the manifest after every document.
    #[default]
    PerDocument,
    /// Buffer; callers must `sync` (or drop the collection) to persist counts.
    Batched,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardEntry {
    pub file: String,
    pub lines: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub doc_count: u64,
    pub duplicate_count: u64,
    pub shard_limit: u32,
    pub shards: Vec<ShardEntry>,
}

/// Result of one ingest call.
#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub document: Document,
    /// True when an identical document (same content id) was already stored;
    /// the store keeps one copy and counts the rest.
    pub duplicate: bool,
}

/// Predicate over stored documents; all set fields must match.
#[derive(Debug, Clone, Default)]
pub struct DocFilter {
    pub provider: Option<String>,
    pub availability: Option<AvailabilityFilter>,
    /// Inclusive lower bound on `collected_at`.
    pub collected_from: Option<Timestamp>,
    /// Inclusive upper bound on `collected_at`.
    pub collected_to: Option<Timestamp>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvailabilityFilter {
    Collected,
    Empty,
    AnyUnavailable,
    Unavailable(UnavailableReason),
}

impl DocFilter {
    pub fn matches(&self, doc: &Document) -> bool {
        if let Some(p) = &self.provider {
            if &doc.provenance.provider_id != p {
                return false;
            }
        }
        if let Some(a) = &self.availability {
            let ok = match (a, doc.provenance.availability) {
                (AvailabilityFilter::Collected, AvailabilityStatus::Collected) => true,
                (AvailabilityFilter::Empty, AvailabilityStatus::Empty) => true,
                (AvailabilityFilter::AnyUnavailable, AvailabilityStatus::Unavailable(_)) => true,
                (AvailabilityFilter::Unavailable(want), AvailabilityStatus::Unavailable(got)) => {
                    *want == got
                }
                _ => false,
            };
            if !ok {
                return false;
            }
        }
        if let Some(from) = self.collected_from {
            if doc.provenance.collected_at < from {
                return false;
            }
        }
        if let Some(to) = self.collected_to {
            if doc.provenance.collected_at > to {
                return false;
            }
        }
        true
    }
}

#[derive(Debug)]
pub struct DatasetCollection {
    root: PathBuf,
    manifest: Manifest,
    ids: HashSet<String>,
    writer: Option<BufWriter<File>>,
    durability: Durability,
    manifest_dirty: bool,
}

impl DatasetCollection {
    pub fn create(root: impl AsRef<Path>, name: &str) -> Result<DatasetCollection> {
        Self::create_with(root, name, DEFAULT_SHARD_LIMIT, Durability::default())
    }

    pub fn create_with(
        root: impl AsRef<Path>,
        name: &str,
        shard_limit: u32,
        durability: Durability,
    ) -> Result<DatasetCollection> {
        if shard_limit == 0 {
            return Err(Error::Storage("shard limit must be positive".into()));
        }
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root)?;
        if root.join(MANIFEST_FILE).exists() {
            return Err(Error::Storage(format!(
                "dataset already exists at {}",
                root.display()
            )));
        }
        let manifest = Manifest {
            name: name.to_string(),
            doc_count: 0,
            duplicate_count: 0,
            shard_limit,
            shards: Vec::new(),
        };
        let mut collection = DatasetCollection {
            root,
            manifest,
            ids: HashSet::new(),
            writer: None,
            durability,
            manifest_dirty: false,
        };
        collection.write_manifest()?;
        Ok(collection)
    }

    pub fn open(root: impl AsRef<Path>) -> Result<DatasetCollection> {
        Self::open_with(root, Durability::default())
    }

    pub fn open_with(root: impl AsRef<Path>, durability: Durability) -> Result<DatasetCollection> {
        let root = root.as_ref().to_path_buf();
        let manifest_path = root.join(MANIFEST_FILE);
        let raw = fs::read_to_string(&manifest_path).map_err(|e| {
            Error::Storage(format!("cannot read {}: {e}", manifest_path.display()))
        })?;
        let manifest: Manifest = serde_json::from_str(&raw)
            .map_err(|e| Error::Storage(format!("corrupt manifest: {e}")))?;

        let mut ids = HashSet::with_capacity(manifest.doc_count as usize);
        for shard in &manifest.shards {
            let path = root.join(&shard.file);
            let file = File::open(&path)
                .map_err(|e| Error::Storage(format!("cannot open shard {}: {e}", shard.file)))?;
            let mut lines = 0u64;
            for line in BufReader::new(file).lines() {
                let line = line?;
                let doc: Document = serde_json::from_str(&line).map_err(|e| {
                    Error::Storage(format!("corrupt document in {}: {e}", shard.file))
                })?;
                ids.insert(doc.id);
                lines += 1;
            }
            if lines != shard.lines {
                return Err(Error::Storage(format!(
                    "shard {} holds {lines} lines, manifest says {}",
                    shard.file, shard.lines
                )));
            }
        }
        if ids.len() as u64 != manifest.doc_count {
            return Err(Error::Storage(format!(
                "manifest counts {} documents, shards hold {}",
                manifest.doc_count,
                ids.len()
            )));
        }
        Ok(DatasetCollection {
            root,
            manifest,
            ids,
            writer: None,
            durability,
            manifest_dirty: false,
        })
    }

    pub fn name(&self) -> &str {
        &self.manifest.name
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn len(&self) -> u64 {
        self.manifest.doc_count
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.doc_count == 0
    }

    pub fn duplicates(&self) -> u64 {
        self.manifest.duplicate_count
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn contains(&self, id: &str) -> bool {
        self.ids.contains(id)
    }

    /// Parse a raw JSON body and store it under the given provenance.
    pub fn ingest(&mut self, raw: &str, provenance: ProvenanceStamp) -> Result<IngestOutcome> {
        let body = DocValue::from_json_str(raw)?;
        self.ingest_document(Document::new(body, provenance)?)
    }

    pub fn ingest_document(&mut self, doc: Document) -> Result<IngestOutcome> {
        debug_assert_eq!(doc.id, compute_id(&doc.body, &doc.provenance.provider_id));
        if self.ids.contains(&doc.id) {
            self.manifest.duplicate_count += 1;
            self.persist_manifest()?;
            return Ok(IngestOutcome {
                document: doc,
                duplicate: true,
            });
        }

        self.roll_shard_if_full()?;
        let line = serde_json::to_string(&doc)?;
        let writer = self.writer.as_mut().expect("roll_shard_if_full opened one");
        writer.write_all(line.as_bytes())?;
        writer.write_all(b"\n")?;
        writer.flush()?;
        if self.durability == Durability::PerDocument {
            writer.get_ref().sync_data()?;
        }

        self.manifest.doc_count += 1;
        self.manifest
            .shards
            .last_mut()
            .expect("shard exists after roll")
            .lines += 1;
        self.ids.insert(doc.id.clone());
        self.persist_manifest()?;
        Ok(IngestOutcome {
            document: doc,
            duplicate: false,
        })
    }

    /// Flush buffered writes and persist the manifest. A no-op under
    /// `PerDocument`, where every ingest already did this.
    pub fn sync(&mut self) -> Result<()> {
        if let Some(writer) = self.writer.as_mut() {
            writer.flush()?;
            writer.get_ref().sync_data()?;
        }
        if self.manifest_dirty {
            self.write_manifest()?;
        }
        Ok(())
    }

    /// Stream documents in insertion order, optionally filtered. Each yielded
    /// document has had its content id re-verified against its body.
    pub fn iter(&self, filter: DocFilter) -> DocIter {
        DocIter {
            root: self.root.clone(),
            shards: self.manifest.shards.iter().map(|s| s.file.clone()).collect(),
            next_shard: 0,
            lines: None,
            filter,
        }
    }

    /// Collect matching documents into memory.
    pub fn documents(&self, filter: DocFilter) -> Result<Vec<Document>> {
        self.iter(filter).collect()
    }

    fn roll_shard_if_full(&mut self) -> Result<()> {
        let needs_new = match self.manifest.shards.last() {
            None => true,
            Some(s) => s.lines >= self.manifest.shard_limit as u64,
        };
        if needs_new {
            if let Some(w) = self.writer.as_mut() {
                w.flush()?;
                w.get_ref().sync_data()?;
            }
            let file = format!("shard-{:05}.jsonl", self.manifest.shards.len());
            self.manifest.shards.push(ShardEntry {
                file: file.clone(),
                lines: 0,
            });
            let handle = OpenOptions::new()
                .create_new(true)
                .append(true)
                .open(self.root.join(&file))?;
            self.writer = Some(BufWriter::new(handle));
        } else if self.writer.is_none() {
            let file = &self.manifest.shards.last().expect("checked above").file;
            let handle = OpenOptions::new().append(true).open(self.root.join(file))?;
            self.writer = Some(BufWriter::new(handle));
        }
        Ok(())
    }

    fn persist_manifest(&mut self) -> Result<()> {
        match self.durability {
            Durability::PerDocument => self.write_manifest(),
            Durability::Batched => {
                self.manifest_dirty = true;
                Ok(())
            }
        }
    }

    fn write_manifest(&mut self) -> Result<()> {
        let tmp = self.root.join("manifest.json.tmp");
        let body = serde_json::to_string_pretty(&self.manifest)?;
        {
            let mut f = File::create(&tmp)?;
            f.write_all(body.as_bytes())?;
            f.write_all(b"\n")?;
            f.sync_data()?;
        }
        fs::rename(&tmp, self.root.join(MANIFEST_FILE))?;
        self.manifest_dirty = false;
        Ok(())
    }
}

impl Drop for DatasetCollection {
    fn drop(&mut self) {
        if self.sync().is_err() {
            tracing::warn!(root = %self.root.display(), "dataset sync failed on drop");
        }
    }
}

pub struct DocIter {
    root: PathBuf,
    shards: Vec<String>,
    next_shard: usize,
    lines: Option<Lines<BufReader<File>>>,
    filter: DocFilter,
}

impl DocIter {
    fn next_line(&mut self) -> Result<Option<String>> {
        loop {
            if let Some(lines) = self.lines.as_mut() {
                match lines.next() {
                    Some(line) => return Ok(Some(line?)),
                    None => self.lines = None,
                }
            }
            if self.next_shard >= self.shards.len() {
                return Ok(None);
            }
            let path = self.root.join(&self.shards[self.next_shard]);
            self.next_shard += 1;
            let file = File::open(&path)
                .map_err(|e| Error::Storage(format!("cannot open shard {}: {e}", path.display())))?;
            self.lines = Some(BufReader::new(file).lines());
        }
    }
}

impl Iterator for DocIter {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.next_line() {
                Ok(Some(line)) => line,
                Ok(None) => return None,
                Err(e) => return Some(Err(e)),
            };
            let doc: Document = match serde_json::from_str(&line) {
                Ok(doc) => doc,
                Err(e) => return Some(Err(Error::Storage(format!("corrupt document: {e}")))),
            };
            let expect = compute_id(&doc.body, &doc.provenance.provider_id);
            if doc.id != expect {
                return Some(Err(Error::Storage(format!(
                    "content id mismatch for {}",
                    doc.id
                ))));
            }
            if self.filter.matches(&doc) {
                return Some(Ok(doc));
            }
        }
    }
}
