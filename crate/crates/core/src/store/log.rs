//! Append-only session event log, one JSON record per line.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::StoreError;
use crate::session::{Condition, SessionEvent, SessionId, SessionState};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LogPayload {
    Created {
        condition: Condition,
        created_at: DateTime<Utc>,
    },
    Event {
        event: SessionEvent,
    },
}

/// One line of the log. Sequence numbers start at 0 (the `Created` entry)
/// and are contiguous per session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionLogEntry {
    pub session_id: SessionId,
    pub seq: u64,
    pub payload: LogPayload,
    /// State after applying the payload.
    pub state: SessionState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ack {
    pub session_id: SessionId,
    pub seq: u64,
}

/// Storage backend for the event log. Writers are serialised by the owner.
pub trait EventLog: Send {
    /// Appends `entry`; its `seq` must be exactly one past the last
    /// persisted entry for the session (or 0 for a new session).
    fn append(&mut self, entry: &SessionLogEntry) -> Result<Ack, StoreError>;

    /// Every persisted entry in append order.
    fn entries(&self) -> Result<Vec<SessionLogEntry>, StoreError>;

    fn flush(&mut self) -> Result<(), StoreError> {
        Ok(())
    }
}

/// Next expected sequence number per session.
#[derive(Debug, Default, Clone)]
pub struct SequenceTracker {
    next: HashMap<SessionId, u64>,
}

impl SequenceTracker {
    pub fn check(&self, entry: &SessionLogEntry) -> Result<(), StoreError> {
        let expected = self.next.get(&entry.session_id).copied().unwrap_or(0);
        if entry.seq != expected {
            return Err(StoreError::Conflict {
                session_id: entry.session_id,
                expected,
                got: entry.seq,
            });
        }
        let is_created = matches!(entry.payload, LogPayload::Created { .. });
        if is_created != (entry.seq == 0) {
            return Err(StoreError::Conflict {
                session_id: entry.session_id,
                expected,
                got: entry.seq,
            });
        }
        Ok(())
    }

    pub fn record(&mut self, entry: &SessionLogEntry) {
        self.next.insert(entry.session_id, entry.seq + 1);
    }
}

#[derive(Debug, Default)]
pub struct MemoryLog {
    entries: Vec<SessionLogEntry>,
    tracker: SequenceTracker,
}

impl MemoryLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Seeds a log with previously persisted entries, validating sequence order.
    pub fn from_entries(entries: Vec<SessionLogEntry>) -> Result<Self, StoreError> {
        let mut log = Self::new();
        for e in &entries {
            log.append(e)?;
        }
        Ok(log)
    }
}

impl EventLog for MemoryLog {
    fn append(&mut self, entry: &SessionLogEntry) -> Result<Ack, StoreError> {
        self.tracker.check(entry)?;
        self.tracker.record(entry);
        self.entries.push(entry.clone());
        Ok(Ack {
            session_id: entry.session_id,
            seq: entry.seq,
        })
    }

    fn entries(&self) -> Result<Vec<SessionLogEntry>, StoreError> {
        Ok(self.entries.clone())
    }
}

/// Parses a log stream. A final line without a terminating newline that does
/// not parse is treated as a torn write and dropped; any other bad line is
/// reported with its 1-based line number.
///
/// Returns the entries and the byte length of the well-formed prefix.
pub fn parse_log(reader: impl Read) -> Result<(Vec<SessionLogEntry>, u64), StoreError> {
    let mut reader = BufReader::new(reader);
    let mut entries = Vec::new();
    let mut tracker = SequenceTracker::default();
    let mut good_len = 0u64;
    let mut line = String::new();
    let mut number = 0usize;
    loop {
        line.clear();
        let read = reader.read_line(&mut line).map_err(StoreError::Io)?;
        if read == 0 {
            break;
        }
        number += 1;
        let terminated = line.ends_with('\n');
        let text = line.trim_end_matches(['\n', '\r']);
        if text.trim().is_empty() {
            good_len += read as u64;
            continue;
        }
        let entry: SessionLogEntry = match serde_json::from_str(text) {
            Ok(e) => e,
            Err(_) if !terminated => break,
            Err(e) => {
                return Err(StoreError::Corrupt {
                    line: number,
                    message: e.to_string(),
                })
            }
        };
        tracker.check(&entry).map_err(|e| StoreError::Corrupt {
            line: number,
            message: e.to_string(),
        })?;
        tracker.record(&entry);
        entries.push(entry);
        good_len += read as u64;
    }
    Ok((entries, good_len))
}

/// Reads a log file without modifying it. A missing file is an empty log.
pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<SessionLogEntry>, StoreError> {
    match File::open(path.as_ref()) {
        Ok(f) => parse_log(f).map(|(entries, _)| entries),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(StoreError::Io(e)),
    }
}

/// File-backed log. Every append is written, flushed and synced before it is
/// acknowledged.
#[derive(Debug)]
pub struct FileLog {
    path: PathBuf,
    file: File,
    tracker: SequenceTracker,
    sync: bool,
}

impl FileLog {
    /// Opens (creating if needed) a log file, dropping a torn trailing line.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)
            .map_err(StoreError::Io)?;
        let (entries, good_len) = parse_log(&mut file)?;
        if file.metadata().map_err(StoreError::Io)?.len() != good_len {
            file.set_len(good_len).map_err(StoreError::Io)?;
        }
        file.seek(SeekFrom::End(0)).map_err(StoreError::Io)?;
        let mut tracker = SequenceTracker::default();
        for e in &entries {
            tracker.record(e);
        }
        Ok(Self {
            path,
            file,
            tracker,
            sync: true,
        })
    }

    /// Skip `fsync` on append (tests and bulk imports).
    pub fn without_sync(mut self) -> Self {
        self.sync = false;
        self
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl EventLog for FileLog {
    fn append(&mut self, entry: &SessionLogEntry) -> Result<Ack, StoreError> {
        self.tracker.check(entry)?;
        let mut line = serde_json::to_string(entry).map_err(|e| StoreError::Io(e.into()))?;
        line.push('\n');
        self.file.write_all(line.as_bytes()).map_err(StoreError::Io)?;
        self.file.flush().map_err(StoreError::Io)?;
        if self.sync {
            self.file.sync_data().map_err(StoreError::Io)?;
        }
        self.tracker.record(entry);
        Ok(Ack {
            session_id: entry.session_id,
            seq: entry.seq,
        })
    }

    fn entries(&self) -> Result<Vec<SessionLogEntry>, StoreError> {
        read_log(&self.path)
    }

    fn flush(&mut self) -> Result<(), StoreError> {
        self.file.flush().map_err(StoreError::Io)?;
        self.file.sync_all().map_err(StoreError::Io)
    }
}
