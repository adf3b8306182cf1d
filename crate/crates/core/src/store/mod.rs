//! Append-only receipt storage.
//!
//! A directory store keeps canonical receipts in `segments/NNNN.jsonl`, an
//! id index in `index.jsonl` and purge records in `tombstones.jsonl`. The
//! whole log is held in memory as well; reads never touch the disk. One
//! process at a time may open a directory for writing.

mod aggregate;
mod disk;
mod filter;
mod retention;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::receipt::{canonical_serialize, parse_receipt, schema_errors, RouteReceipt, Timestamp, ValidationReport};
use crate::redact::{view_for, AudienceView, RedactionPolicy};
use crate::Audience;

pub use aggregate::{compute as compute_aggregate, AggregateReport, AggregateValue, Metric, UnknownMetric};
pub use filter::{effective_retention, ReceiptFilter, TimeWindow, WindowError};
pub use retention::{
    ConfigError, PurgeReport, RetentionRules, StoreConfig, Tombstone, Ttl, ENV_RETENTION_PREFIX, ENV_STORE_PATH,
};

use disk::Disk;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("receipt {0} is already stored")]
    Duplicate(String),
    #[error("receipt rejected: {0}")]
    Invalid(ValidationReport),
    #[error("no receipt {0}")]
    NotFound(String),
    #[error("receipt {} was purged at {}", .0.receipt_id, .0.purged_at)]
    Purged(Tombstone),
    #[error("store is open read-only")]
    ReadOnly,
    #[error("store at {0} is locked by another writer")]
    Locked(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {detail}")]
    Corrupt { path: PathBuf, line: usize, detail: String },
    #[error("import line {line}: {source}")]
    Import {
        line: usize,
        #[source]
        source: Box<StoreError>,
    },
}

/// Where an appended receipt landed. Positions count appends and are never
/// reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredPosition {
    pub position: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportReport {
    pub appended: usize,
}

#[derive(Debug, Clone)]
struct Stored {
    receipt: RouteReceipt,
    canonical: String,
    at: StoredPosition,
}

#[derive(Debug, Default)]
struct State {
    records: HashMap<String, Stored>,
    // instant, then id: equal instants written differently still tie
    order: BTreeSet<(DateTime<Utc>, String)>,
    tombstones: BTreeMap<String, Tombstone>,
    next_position: u64,
}

impl State {
    fn insert(&mut self, stored: Stored) {
        self.next_position = self.next_position.max(stored.at.position + 1);
        self.order
            .insert((stored.receipt.served_at.instant(), stored.receipt.receipt_id.clone()));
        self.records.insert(stored.receipt.receipt_id.clone(), stored);
    }

    fn remove(&mut self, id: &str) -> Option<Stored> {
        let stored = self.records.remove(id)?;
        self.order.remove(&(stored.receipt.served_at.instant(), id.to_owned()));
        Some(stored)
    }

    fn matching<'a>(&'a self, f: &'a ReceiptFilter) -> impl Iterator<Item = &'a Stored> + 'a {
        self.order
            .iter()
            .map(|(_, id)| &self.records[id])
            .filter(move |s| f.matches(&s.receipt))
    }
}

pub struct ReceiptStore {
    state: RwLock<State>,
    disk: Option<Mutex<Disk>>,
    read_only: bool,
    retention: RetentionRules,
}

impl std::fmt::Debug for ReceiptStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReceiptStore")
            .field("path", &self.path())
            .field("read_only", &self.read_only)
            .field("len", &self.len())
            .finish()
    }
}

impl ReceiptStore {
    pub fn in_memory() -> Self {
        ReceiptStore::in_memory_with(RetentionRules::default())
    }

    pub fn in_memory_with(retention: RetentionRules) -> Self {
        ReceiptStore {
            state: RwLock::new(State::default()),
            disk: None,
            read_only: false,
            retention,
        }
    }

    /// Opens or creates a directory store for writing with default settings.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        ReceiptStore::open_dir(path.as_ref(), &StoreConfig::default(), false)
    }

    /// Opens an existing directory store as a snapshot without taking the
    /// writer lock.
    pub fn open_read_only(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        ReceiptStore::open_dir(path.as_ref(), &StoreConfig::default(), true)
    }

    pub fn from_config(config: &StoreConfig) -> Result<Self, StoreError> {
        match &config.path {
            Some(path) => ReceiptStore::open_dir(path, config, false),
            None => Ok(ReceiptStore::in_memory_with(config.retention)),
        }
    }

    fn open_dir(path: &Path, config: &StoreConfig, read_only: bool) -> Result<Self, StoreError> {
        let (disk, loaded, tombstones) = Disk::open(path, config.segment_lines.max(1), read_only)?;
        let mut state = State::default();
        for (receipt, canonical, at) in loaded {
            state.insert(Stored { receipt, canonical, at });
        }
        for t in tombstones {
            state.tombstones.insert(t.receipt_id.clone(), t);
        }
        Ok(ReceiptStore {
            state: RwLock::new(state),
            disk: Some(Mutex::new(disk)),
            read_only,
            retention: config.retention,
        })
    }

    pub fn path(&self) -> Option<PathBuf> {
        self.disk
            .as_ref()
            .map(|d| d.lock().expect("disk lock poisoned").root().to_owned())
    }

    pub fn retention(&self) -> &RetentionRules {
        &self.retention
    }

    pub fn len(&self) -> usize {
        self.read().records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, State> {
        self.state.read().expect("store lock poisoned")
    }

    fn write(&self) -> Result<std::sync::RwLockWriteGuard<'_, State>, StoreError> {
        if self.read_only {
            return Err(StoreError::ReadOnly);
        }
        Ok(self.state.write().expect("store lock poisoned"))
    }

    /// Stores `r` in canonical form.
    pub fn append(&self, r: &RouteReceipt) -> Result<StoredPosition, StoreError> {
        let report = schema_errors(&serde_json::to_value(r).expect("receipts always serialize"));
        if !report.is_valid() {
            return Err(StoreError::Invalid(report));
        }
        let mut state = self.write()?;
        let id = &r.receipt_id;
        if state.records.contains_key(id) || state.tombstones.contains_key(id) {
            return Err(StoreError::Duplicate(id.clone()));
        }
        let canonical = canonical_serialize(r);
        let position = state.next_position;
        let segment = match &self.disk {
            Some(disk) => Some(
                disk.lock()
                    .expect("disk lock poisoned")
                    .append(id, position, &canonical)?,
            ),
            None => None,
        };
        let at = StoredPosition { position, segment };
        state.insert(Stored {
            receipt: r.clone(),
            canonical,
            at,
        });
        Ok(at)
    }

    /// Parses, validates and appends receipt text.
    pub fn append_text(&self, text: &str) -> Result<StoredPosition, StoreError> {
        let r = parse_receipt(text).map_err(|e| StoreError::Invalid(e.report().clone()))?;
        self.append(&r)
    }

    fn lookup<T>(&self, id: &str, f: impl FnOnce(&Stored) -> T) -> Result<T, StoreError> {
        let state = self.read();
        if let Some(s) = state.records.get(id) {
            return Ok(f(s));
        }
        match state.tombstones.get(id) {
            Some(t) => Err(StoreError::Purged(t.clone())),
            None => Err(StoreError::NotFound(id.to_owned())),
        }
    }

    /// The stored canonical text, exactly as appended.
    pub fn get_canonical(&self, id: &str) -> Result<String, StoreError> {
        self.lookup(id, |s| s.canonical.clone())
    }

    pub fn get_receipt(&self, id: &str) -> Result<RouteReceipt, StoreError> {
        self.lookup(id, |s| s.receipt.clone())
    }

    pub fn get(&self, id: &str, audience: Audience, policy: &RedactionPolicy) -> Result<AudienceView, StoreError> {
        self.lookup(id, |s| view_for(&s.receipt, audience, policy))
    }

    pub fn tombstone(&self, id: &str) -> Option<Tombstone> {
        self.read().tombstones.get(id).cloned()
    }

    pub fn tombstones(&self) -> Vec<Tombstone> {
        self.read().tombstones.values().cloned().collect()
    }

    /// Ids of live receipts matching `f`, by `served_at` then id.
    pub fn query(&self, f: &ReceiptFilter) -> Vec<String> {
        self.read().matching(f).map(|s| s.receipt.receipt_id.clone()).collect()
    }

    pub fn receipts(&self, f: &ReceiptFilter) -> Vec<RouteReceipt> {
        self.read().matching(f).map(|s| s.receipt.clone()).collect()
    }

    /// `metric` over every receipt matching `f`; the report's window is the
    /// filter's.
    pub fn aggregate(&self, metric: Metric, f: &ReceiptFilter) -> AggregateReport {
        let state = self.read();
        compute_aggregate(metric, f.window.clone(), state.matching(f).map(|s| &s.receipt))
    }

    /// Resolved model of the latest earlier receipt that asked for the same
    /// requested model.
    pub fn previous_resolution(&self, r: &RouteReceipt) -> Option<String> {
        let requested = r.requested_model.as_ref()?;
        let state = self.read();
        state
            .order
            .range(..(r.served_at.instant(), r.receipt_id.clone()))
            .rev()
            .map(|(_, id)| &state.records[id].receipt)
            .find(|o| o.requested_model.as_ref() == Some(requested) && o.resolved_model.is_some())
            .and_then(|o| o.resolved_model.clone())
    }

    /// Purges with the store's configured rules.
    pub fn enforce_configured_retention(&self, now: &Timestamp) -> Result<PurgeReport, StoreError> {
        let rules = self.retention;
        self.enforce_retention(&rules, now)
    }

    /// Replaces every receipt whose TTL has elapsed at `now` with a
    /// tombstone. Purged ids come back in query order.
    pub fn enforce_retention(&self, rules: &RetentionRules, now: &Timestamp) -> Result<PurgeReport, StoreError> {
        let mut state = self.write()?;
        let expired: Vec<Tombstone> = state
            .matching(&ReceiptFilter::all())
            .filter(|s| rules.expired(effective_retention(&s.receipt), &s.receipt.served_at, now))
            .map(|s| Tombstone {
                receipt_id: s.receipt.receipt_id.clone(),
                served_at: s.receipt.served_at.clone(),
                retention_class: effective_retention(&s.receipt),
                purged_at: now.clone(),
            })
            .collect();
        if expired.is_empty() {
            return Ok(PurgeReport::default());
        }
        if let Some(disk) = &self.disk {
            disk.lock().expect("disk lock poisoned").purge(&expired)?;
        }
        let mut purged = Vec::with_capacity(expired.len());
        for t in expired {
            state.remove(&t.receipt_id);
            purged.push(t.receipt_id.clone());
            state.tombstones.insert(t.receipt_id.clone(), t);
        }
        Ok(PurgeReport { purged })
    }

    /// Writes one canonical audience view per line in query order.
    pub fn export_jsonl(
        &self,
        f: &ReceiptFilter,
        audience: Audience,
        policy: &RedactionPolicy,
        mut out: impl Write,
    ) -> io::Result<usize> {
        let state = self.read();
        let mut lines = 0;
        for s in state.matching(f) {
            let view = view_for(&s.receipt, audience, policy);
            out.write_all(canonical_serialize(&view.receipt).as_bytes())?;
            out.write_all(b"\n")?;
            lines += 1;
        }
        out.flush()?;
        Ok(lines)
    }

    /// Appends every non-blank line. Stops at the first bad line; earlier
    /// lines stay appended.
    pub fn import_jsonl(&self, input: impl BufRead) -> Result<ImportReport, StoreError> {
        let mut report = ImportReport::default();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|source| StoreError::Io {
                path: PathBuf::from("<import>"),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            self.append_text(&line).map_err(|e| StoreError::Import {
                line: i + 1,
                source: Box::new(e),
            })?;
            report.appended += 1;
        }
        Ok(report)
    }
}
