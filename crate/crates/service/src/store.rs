//! Story persistence: an append-only JSON-lines log of full story records,
//! compacted into a snapshot every few dozen writes.
//!
//! Each log line is the complete record after a write, so replay is
//! last-write-wins and replaying a line twice is harmless. A torn final line
//! (crash mid-append) is skipped on load.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use taletailor::story::{FeedbackRecord, StoryDocument};
use thiserror::Error;

const LOG_FILE: &str = "events.jsonl";
const SNAPSHOT_FILE: &str = "snapshot.json";
const DEFAULT_SNAPSHOT_EVERY: usize = 64;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("story {0:?} not found")]
    NotFound(String),
    #[error("version conflict: expected {expected}, story is at {actual}")]
    VersionConflict { expected: u64, actual: u64 },
    #[error("storage: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt store file {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
}

/// A story plus everything recorded about it outside the document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredStory {
    pub doc: StoryDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub share_token: Option<String>,
    /// Frozen HTML rendering, set on publish.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub html: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<FeedbackRecord>,
    #[serde(default)]
    pub suggestions: SuggestionCounts,
}

/// Suggestion batches offered for a story and what became of them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestionCounts {
    pub offered: u64,
    pub accepted: u64,
    pub dismissed: u64,
}

impl StoredStory {
    pub fn new(doc: StoryDocument) -> Self {
        Self {
            doc,
            share_token: None,
            html: None,
            feedback: None,
            suggestions: SuggestionCounts::default(),
        }
    }
}

struct Persistence {
    dir: PathBuf,
    log: File,
    since_snapshot: usize,
    snapshot_every: usize,
}

struct Inner {
    stories: HashMap<String, StoredStory>,
    shares: HashMap<String, String>,
    disk: Option<Persistence>,
}

pub struct Store {
    inner: Mutex<Inner>,
}

impl Store {
    pub fn in_memory() -> Self {
        Self {
            inner: Mutex::new(Inner {
                stories: HashMap::new(),
                shares: HashMap::new(),
                disk: None,
            }),
        }
    }

    /// Opens (or creates) a store in `dir`, replaying snapshot and log.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        Self::open_with(dir, DEFAULT_SNAPSHOT_EVERY)
    }

    pub fn open_with(dir: impl AsRef<Path>, snapshot_every: usize) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_owned();
        fs::create_dir_all(&dir)?;
        let mut stories = HashMap::new();
        let snap = dir.join(SNAPSHOT_FILE);
        if snap.exists() {
            let records: Vec<StoredStory> =
                serde_json::from_reader(BufReader::new(File::open(&snap)?)).map_err(|e| StoreError::Corrupt {
                    path: snap.clone(),
                    message: e.to_string(),
                })?;
            for r in records {
                stories.insert(r.doc.id.clone(), r);
            }
        }
        let log_path = dir.join(LOG_FILE);
        let mut replayed = 0;
        let mut torn = false;
        if log_path.exists() {
            let lines: Vec<String> = BufReader::new(File::open(&log_path)?)
                .lines()
                .collect::<io::Result<_>>()?;
            let last = lines.len().saturating_sub(1);
            for (i, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<StoredStory>(line) {
                    Ok(r) => {
                        stories.insert(r.doc.id.clone(), r);
                        replayed += 1;
                    }
                    Err(e) if i == last => {
                        log::warn!("ignoring torn last line of {}: {e}", log_path.display());
                        torn = true;
                    }
                    Err(e) => {
                        return Err(StoreError::Corrupt {
                            path: log_path,
                            message: format!("line {}: {e}", i + 1),
                        })
                    }
                }
            }
        }
        let shares = stories
            .values()
            .filter_map(|s| s.share_token.clone().map(|t| (t, s.doc.id.clone())))
            .collect();
        let log = OpenOptions::new().create(true).append(true).open(&log_path)?;
        log::info!(
            "store {}: {} stories ({replayed} log records)",
            dir.display(),
            stories.len()
        );
        let mut inner = Inner {
            stories,
            shares,
            disk: Some(Persistence {
                dir,
                log,
                since_snapshot: replayed,
                snapshot_every: snapshot_every.max(1),
            }),
        };
        if torn {
            // Appending after the fragment would corrupt the next record.
            inner.snapshot()?;
        }
        Ok(Self {
            inner: Mutex::new(inner),
        })
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn len(&self) -> usize {
        self.lock().stories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, id: &str) -> Option<StoredStory> {
        self.lock().stories.get(id).cloned()
    }

    pub fn by_share_token(&self, token: &str) -> Option<StoredStory> {
        let inner = self.lock();
        let id = inner.shares.get(token)?;
        inner.stories.get(id).cloned()
    }

    pub fn insert(&self, record: StoredStory) -> Result<StoredStory, StoreError> {
        let mut inner = self.lock();
        inner.commit(record.clone())?;
        Ok(record)
    }

    /// Applies `f` to a copy of the story and commits it with the version
    /// bumped, provided the story is at `expected` (when given). Nothing is
    /// written when `f` fails.
    pub fn update<E, F>(&self, id: &str, expected: Option<u64>, now: DateTime<Utc>, f: F) -> Result<StoredStory, E>
    where
        E: From<StoreError>,
        F: FnOnce(&mut StoredStory) -> Result<(), E>,
    {
        let mut inner = self.lock();
        let current = inner
            .stories
            .get(id)
            .ok_or_else(|| StoreError::NotFound(id.to_owned()))?;
        if let Some(expected) = expected {
            if expected != current.doc.version {
                return Err(StoreError::VersionConflict {
                    expected,
                    actual: current.doc.version,
                }
                .into());
            }
        }
        let mut next = current.clone();
        f(&mut next)?;
        next.doc.version += 1;
        next.doc.updated = now;
        inner.commit(next.clone())?;
        Ok(next)
    }

    /// Changes bookkeeping that is not part of the document (no version
    /// bump).
    pub fn annotate(&self, id: &str, f: impl FnOnce(&mut StoredStory)) -> Result<StoredStory, StoreError> {
        let mut inner = self.lock();
        let mut next = inner
            .stories
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::NotFound(id.to_owned()))?;
        f(&mut next);
        inner.commit(next.clone())?;
        Ok(next)
    }

    /// Writes a snapshot now and empties the log.
    pub fn compact(&self) -> Result<(), StoreError> {
        let mut inner = self.lock();
        inner.snapshot()
    }
}

impl Inner {
    fn commit(&mut self, record: StoredStory) -> Result<(), StoreError> {
        if let Some(disk) = &mut self.disk {
            let mut line = serde_json::to_vec(&record).expect("story records serialize");
            line.push(b'\n');
            disk.log.write_all(&line)?;
            disk.log.flush()?;
            disk.since_snapshot += 1;
        }
        if let Some(t) = &record.share_token {
            self.shares.insert(t.clone(), record.doc.id.clone());
        }
        self.stories.insert(record.doc.id.clone(), record);
        let due = self.disk.as_ref().is_some_and(|d| d.since_snapshot >= d.snapshot_every);
        if due {
            if let Err(e) = self.snapshot() {
                // The log still holds everything; retry at the next write.
                log::warn!("snapshot failed: {e}");
            }
        }
        Ok(())
    }

    fn snapshot(&mut self) -> Result<(), StoreError> {
        let Some(disk) = &mut self.disk else {
            return Ok(());
        };
        let mut records: Vec<&StoredStory> = self.stories.values().collect();
        records.sort_by(|a, b| a.doc.id.cmp(&b.doc.id));
        let tmp = disk.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        {
            let mut f = File::create(&tmp)?;
            serde_json::to_writer(&mut f, &records).map_err(io::Error::other)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, disk.dir.join(SNAPSHOT_FILE))?;
        disk.log = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(disk.dir.join(LOG_FILE))?;
        disk.since_snapshot = 0;
        Ok(())
    }
}
