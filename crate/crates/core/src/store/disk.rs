use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File, OpenOptions, TryLockError};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::receipt::{canonical_serialize, parse_receipt, RouteReceipt};

use super::{StoreError, StoredPosition, Tombstone};

const SEGMENTS: &str = "segments";
const INDEX: &str = "index.jsonl";
const TOMBSTONES: &str = "tombstones.jsonl";
const LOCK: &str = "LOCK";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct IndexEntry {
    receipt_id: String,
    segment: u32,
    position: u64,
}

pub(super) type Loaded = (RouteReceipt, String, StoredPosition);

#[derive(Debug)]
pub(super) struct Disk {
    root: PathBuf,
    segment_lines: usize,
    current: u32,
    current_lines: usize,
    segment_of: HashMap<String, u32>,
    // held for the lifetime of a writable store
    _lock: Option<File>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_owned(),
        source,
    }
}

fn segment_name(n: u32) -> String {
    format!("{n:04}.jsonl")
}

fn read_lines(path: &Path) -> Result<Vec<String>, StoreError> {
    match File::open(path) {
        Ok(f) => BufReader::new(f)
            .lines()
            .collect::<Result<Vec<_>, _>>()
            .map_err(io_err(path)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(io_err(path)(e)),
    }
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, StoreError> {
    read_lines(path)?
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| StoreError::Corrupt {
                path: path.to_owned(),
                line: i + 1,
                detail: e.to_string(),
            })
        })
        .collect()
}

fn append_line(path: &Path, line: &str) -> Result<(), StoreError> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    let mut buf = String::with_capacity(line.len() + 1);
    buf.push_str(line);
    buf.push('\n');
    f.write_all(buf.as_bytes()).map_err(io_err(path))?;
    f.sync_data().map_err(io_err(path))
}

// write-then-rename so readers never see a half-written file
fn replace_file(path: &Path, lines: &[String]) -> Result<(), StoreError> {
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
        for l in lines {
            f.write_all(l.as_bytes()).map_err(io_err(&tmp))?;
            f.write_all(b"\n").map_err(io_err(&tmp))?;
        }
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

impl Disk {
    pub(super) fn root(&self) -> &Path {
        &self.root
    }

    fn segment_path(&self, n: u32) -> PathBuf {
        self.root.join(SEGMENTS).join(segment_name(n))
    }

    pub(super) fn open(
        root: &Path,
        segment_lines: usize,
        read_only: bool,
    ) -> Result<(Disk, Vec<Loaded>, Vec<Tombstone>), StoreError> {
        let lock = if read_only {
            if !root.join(SEGMENTS).is_dir() {
                return Err(io_err(root)(io::Error::new(
                    io::ErrorKind::NotFound,
                    "not a receipt store",
                )));
            }
            None
        } else {
            fs::create_dir_all(root.join(SEGMENTS)).map_err(io_err(root))?;
            let lock_path = root.join(LOCK);
            let f = OpenOptions::new()
                .create(true)
                .truncate(false)
                .write(true)
                .open(&lock_path)
                .map_err(io_err(&lock_path))?;
            match f.try_lock() {
                Ok(()) => {}
                Err(TryLockError::WouldBlock) => return Err(StoreError::Locked(root.to_owned())),
                Err(TryLockError::Error(e)) => return Err(io_err(&lock_path)(e)),
            }
            Some(f)
        };

        let tombstones: Vec<Tombstone> = read_jsonl(&root.join(TOMBSTONES))?;
        let purged: HashSet<&str> = tombstones.iter().map(|t| t.receipt_id.as_str()).collect();
        let index: Vec<IndexEntry> = read_jsonl(&root.join(INDEX))?;
        let positions: HashMap<&str, u64> = index.iter().map(|e| (e.receipt_id.as_str(), e.position)).collect();

        let mut segments: BTreeMap<u32, PathBuf> = BTreeMap::new();
        let dir = root.join(SEGMENTS);
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let path = entry.map_err(io_err(&dir))?.path();
            let stem = path
                .file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.strip_suffix(".jsonl"));
            if let Some(n) = stem.and_then(|s| s.parse::<u32>().ok()) {
                segments.insert(n, path);
            }
        }

        let mut disk = Disk {
            root: root.to_owned(),
            segment_lines,
            current: 0,
            current_lines: 0,
            segment_of: HashMap::new(),
            _lock: lock,
        };
        let mut loaded = Vec::new();
        let mut stale = false;
        let mut next_position = index.iter().map(|e| e.position + 1).max().unwrap_or(0);
        for (&n, path) in &segments {
            let lines = read_lines(path)?;
            let mut kept = Vec::with_capacity(lines.len());
            for (i, line) in lines.iter().enumerate() {
                let corrupt = |detail: String| StoreError::Corrupt {
                    path: path.clone(),
                    line: i + 1,
                    detail,
                };
                let r = parse_receipt(line).map_err(|e| corrupt(e.to_string()))?;
                if canonical_serialize(&r) != *line {
                    return Err(corrupt("stored text is not canonical".into()));
                }
                // a purge interrupted before its segment rewrite
                if purged.contains(r.receipt_id.as_str()) {
                    stale = true;
                    continue;
                }
                let position = match positions.get(r.receipt_id.as_str()) {
                    Some(&p) => p,
                    None => {
                        stale = true;
                        next_position += 1;
                        next_position - 1
                    }
                };
                disk.segment_of.insert(r.receipt_id.clone(), n);
                kept.push(line.clone());
                loaded.push((
                    r,
                    line.clone(),
                    StoredPosition {
                        position,
                        segment: Some(n),
                    },
                ));
            }
            if kept.len() != lines.len() && !read_only {
                replace_file(path, &kept)?;
            }
            disk.current = n;
            disk.current_lines = kept.len();
        }
        if (stale || index.len() != loaded.len()) && !read_only {
            disk.rewrite_index(&loaded)?;
        }
        Ok((disk, loaded, tombstones))
    }

    fn rewrite_index(&self, loaded: &[Loaded]) -> Result<(), StoreError> {
        let mut entries: Vec<&Loaded> = loaded.iter().collect();
        entries.sort_by_key(|(_, _, at)| at.position);
        let lines: Vec<String> = entries
            .into_iter()
            .map(|(r, _, at)| {
                serde_json::to_string(&IndexEntry {
                    receipt_id: r.receipt_id.clone(),
                    segment: at.segment.unwrap_or_default(),
                    position: at.position,
                })
                .expect("index entries serialize")
            })
            .collect();
        replace_file(&self.root.join(INDEX), &lines)
    }

    /// Appends one canonical line; returns the segment it went to.
    pub(super) fn append(&mut self, id: &str, position: u64, canonical: &str) -> Result<u32, StoreError> {
        if self.current_lines >= self.segment_lines {
            self.current += 1;
            self.current_lines = 0;
        }
        let segment = self.current;
        append_line(&self.segment_path(segment), canonical)?;
        self.current_lines += 1;
        let entry = IndexEntry {
            receipt_id: id.to_owned(),
            segment,
            position,
        };
        append_line(
            &self.root.join(INDEX),
            &serde_json::to_string(&entry).expect("index entries serialize"),
        )?;
        self.segment_of.insert(id.to_owned(), segment);
        Ok(segment)
    }

    /// Records tombstones first, then drops the receipts from their segments
    /// and the index. Reopening finishes an interrupted purge.
    pub(super) fn purge(&mut self, tombstones: &[Tombstone]) -> Result<(), StoreError> {
        let path = self.root.join(TOMBSTONES);
        for t in tombstones {
            append_line(&path, &serde_json::to_string(t).expect("tombstones serialize"))?;
        }
        let gone: HashSet<&str> = tombstones.iter().map(|t| t.receipt_id.as_str()).collect();
        let mut touched: Vec<u32> = gone.iter().filter_map(|id| self.segment_of.get(*id).copied()).collect();
        touched.sort_unstable();
        touched.dedup();
        for n in touched {
            let seg = self.segment_path(n);
            let kept: Vec<String> = read_lines(&seg)?
                .into_iter()
                .filter(|l| {
                    serde_json::from_str::<serde_json::Value>(l)
                        .ok()
                        .and_then(|v| v.get("receipt_id").and_then(|i| i.as_str()).map(|i| !gone.contains(i)))
                        .unwrap_or(true)
                })
                .collect();
            if n == self.current {
                self.current_lines = kept.len();
            }
            replace_file(&seg, &kept)?;
        }
        let index_path = self.root.join(INDEX);
        let kept: Vec<String> = read_jsonl::<IndexEntry>(&index_path)?
            .into_iter()
            .filter(|e| !gone.contains(e.receipt_id.as_str()))
            .map(|e| serde_json::to_string(&e).expect("index entries serialize"))
            .collect();
        replace_file(&index_path, &kept)?;
        for id in gone {
            self.segment_of.remove(id);
        }
        Ok(())
    }
}
