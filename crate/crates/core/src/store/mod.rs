//! Session persistence, content bank loading and CSV export.
//!
//! Every accepted transition is appended to an [`EventLog`] before the
//! in-memory record is updated; reopening a store replays the log.

mod content;
mod export;
mod log;

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use thiserror::Error;

pub use content::{
    load_content_bank, AssessmentSection, Bfi10Item, Bfi10Section, ContentBank, ContentError, FeedbackPrompt,
    FeedbackSection, BANK_VERSION,
};
pub use export::{read_csv, write_csv, ExportFilter, ExportRow, CSV_HEADER};
pub use log::{parse_log, read_log, Ack, EventLog, FileLog, LogPayload, MemoryLog, SequenceTracker, SessionLogEntry};

use crate::session::{advance, AllocationPolicy, SessionError, SessionEvent, SessionId, SessionRecord};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("sequence conflict for session {session_id}: expected {expected}, got {got}")]
    Conflict { session_id: SessionId, expected: u64, got: u64 },
    #[error("corrupt log at line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("replay of session {session_id} diverged at seq {seq}: {message}")]
    Replay { session_id: SessionId, seq: u64, message: String },
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("export failed: {0}")]
    Export(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

struct Slot {
    record: SessionRecord,
    next_seq: u64,
}

#[derive(Default)]
struct Index {
    order: Vec<SessionId>,
    slots: HashMap<SessionId, Arc<Mutex<Slot>>>,
}

/// Session records backed by an append-only event log.
///
/// Events for one session are serialised by that session's lock; log
/// appends are serialised by the log lock. Distinct sessions only contend on
/// the log.
pub struct SessionStore {
    bank: Arc<ContentBank>,
    log: Mutex<Box<dyn EventLog>>,
    index: RwLock<Index>,
}

impl SessionStore {
    /// Opens a store over `log`, rebuilding every session by replay.
    pub fn open(log: Box<dyn EventLog>, bank: Arc<ContentBank>) -> Result<Self, StoreError> {
        let mut index = Index::default();
        for entry in log.entries()? {
            let diverged = |message: String| StoreError::Replay {
                session_id: entry.session_id,
                seq: entry.seq,
                message,
            };
            let record = match &entry.payload {
                LogPayload::Created { condition, created_at } => {
                    index.order.push(entry.session_id);
                    SessionRecord::new(entry.session_id, *condition, *created_at)
                }
                LogPayload::Event { event } => {
                    let slot = index
                        .slots
                        .get(&entry.session_id)
                        .ok_or_else(|| diverged("event for unknown session".into()))?;
                    let current = slot.lock().expect("slot lock").record.clone();
                    advance(&current, event, &bank).map_err(|e| diverged(e.to_string()))?
                }
            };
            if record.state != entry.state {
                return Err(diverged(format!(
                    "log says state {}, replay produced {}",
                    entry.state, record.state
                )));
            }
            index.slots.insert(
                entry.session_id,
                Arc::new(Mutex::new(Slot {
                    record,
                    next_seq: entry.seq + 1,
                })),
            );
        }
        Ok(Self {
            bank,
            log: Mutex::new(log),
            index: RwLock::new(index),
        })
    }

    pub fn in_memory(bank: Arc<ContentBank>) -> Self {
        Self::open(Box::new(MemoryLog::new()), bank).expect("empty log replays")
    }

    pub fn bank(&self) -> &ContentBank {
        &self.bank
    }

    /// Number of sessions ever created (the allocation counter to resume from).
    pub fn len(&self) -> usize {
        self.index.read().expect("index lock").order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Allocates a condition and persists a new session in `Consent`.
    pub fn create(&self, policy: &AllocationPolicy, now: DateTime<Utc>) -> Result<SessionRecord, StoreError> {
        let record = crate::session::create_session(policy, now)?;
        let entry = SessionLogEntry {
            session_id: record.session_id,
            seq: 0,
            payload: LogPayload::Created {
                condition: record.condition,
                created_at: record.created_at,
            },
            state: record.state,
        };
        let mut index = self.index.write().expect("index lock");
        self.log.lock().expect("log lock").append(&entry)?;
        index.order.push(record.session_id);
        index.slots.insert(
            record.session_id,
            Arc::new(Mutex::new(Slot {
                record: record.clone(),
                next_seq: 1,
            })),
        );
        Ok(record)
    }

    fn slot(&self, id: SessionId) -> Result<Arc<Mutex<Slot>>, StoreError> {
        self.index
            .read()
            .expect("index lock")
            .slots
            .get(&id)
            .cloned()
            .ok_or_else(|| StoreError::UnknownSession(id.to_string()))
    }

    /// Applies `event` to a session. The transition is durable in the log
    /// before the new record is returned; a rejected event changes nothing.
    pub fn apply(&self, id: SessionId, event: &SessionEvent) -> Result<SessionRecord, StoreError> {
        let slot = self.slot(id)?;
        let mut slot = slot.lock().expect("slot lock");
        let next = advance(&slot.record, event, &self.bank)?;
        let entry = SessionLogEntry {
            session_id: id,
            seq: slot.next_seq,
            payload: LogPayload::Event { event: event.clone() },
            state: next.state,
        };
        self.log.lock().expect("log lock").append(&entry)?;
        slot.next_seq += 1;
        slot.record = next.clone();
        Ok(next)
    }

    pub fn get(&self, id: SessionId) -> Option<SessionRecord> {
        self.slot(id).ok().map(|s| s.lock().expect("slot lock").record.clone())
    }

    /// All sessions in creation order.
    pub fn records(&self) -> Vec<SessionRecord> {
        let index = self.index.read().expect("index lock");
        index
            .order
            .iter()
            .map(|id| index.slots[id].lock().expect("slot lock").record.clone())
            .collect()
    }

    /// Writes the analysis CSV for sessions matching `filter`; returns the
    /// number of data rows.
    pub fn export_csv<W: Write>(&self, filter: &ExportFilter, out: W) -> Result<usize, StoreError> {
        write_csv(self.records().iter(), filter, out)
    }

    pub fn flush(&self) -> Result<(), StoreError> {
        self.log.lock().expect("log lock").flush()
    }
}
