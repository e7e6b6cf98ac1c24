use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use super::codec;
use super::{EventFilter, InteractionEvent, LogError, LogSnapshot, SurveyResponse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SyncPolicy {
    /// `fsync` the data before acknowledging each append.
    #[default]
    EveryAppend,
    /// Hand the write to the OS only; a crash may lose the newest events.
    OsBuffered,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StoreOptions {
    pub sync: SyncPolicy,
    /// Refuse appends once the file would exceed this many bytes.
    pub max_bytes: Option<u64>,
}

#[derive(Debug)]
struct Writer {
    file: Option<File>,
    bytes: u64,
    ids: HashSet<String>,
}

/// File-backed (or in-memory) append-only event store.
///
/// Appends are serialized by one writer lock; readers take an `Arc` snapshot
/// of the in-memory event list and never wait on file I/O.
#[derive(Debug)]
pub struct EventStore {
    path: Option<PathBuf>,
    options: StoreOptions,
    writer: Mutex<Writer>,
    events: RwLock<Arc<Vec<InteractionEvent>>>,
}

impl EventStore {
    pub fn in_memory() -> Self {
        Self {
            path: None,
            options: StoreOptions::default(),
            writer: Mutex::new(Writer {
                file: None,
                bytes: 0,
                ids: HashSet::new(),
            }),
            events: RwLock::new(Arc::default()),
        }
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self, LogError> {
        Self::open_with(path, StoreOptions::default())
    }

    /// Opens or creates a log file and replays it. A torn final line (no
    /// trailing newline, left by a crash mid-append) is truncated away; any
    /// other malformed line is an error.
    pub fn open_with(path: impl AsRef<Path>, options: StoreOptions) -> Result<Self, LogError> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)?;
        let mut raw = Vec::new();
        file.read_to_end(&mut raw)?;

        let complete = raw.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        if complete < raw.len() {
            file.set_len(complete as u64)?;
            file.sync_all()?;
        }
        file.seek(SeekFrom::End(0))?;

        let text = std::str::from_utf8(&raw[..complete]).map_err(|e| LogError::Corrupt {
            line: raw[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1,
            message: "invalid UTF-8".into(),
        })?;
        let mut events = Vec::new();
        let mut ids = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let event = codec::decode(line).map_err(|message| LogError::Corrupt { line: i + 1, message })?;
            if !ids.insert(event.event_id.clone()) {
                return Err(LogError::Corrupt {
                    line: i + 1,
                    message: format!("duplicate event id `{}`", event.event_id),
                });
            }
            events.push(event);
        }

        Ok(Self {
            path: Some(path),
            options,
            writer: Mutex::new(Writer {
                file: Some(file),
                bytes: complete as u64,
                ids,
            }),
            events: RwLock::new(Arc::new(events)),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Appends one event. Returns once the record is durable per the store's
    /// [`SyncPolicy`].
    pub fn append(&self, event: InteractionEvent) -> Result<(), LogError> {
        event.validate()?;
        let mut w = self.writer.lock().expect("log writer poisoned");
        if w.ids.contains(&event.event_id) {
            return Err(LogError::DuplicateEventId(event.event_id));
        }
        let line = codec::encode(&event);
        if self
            .options
            .max_bytes
            .is_some_and(|max| w.bytes + line.len() as u64 > max)
        {
            return Err(LogError::StorageFull);
        }
        let before = w.bytes;
        if let Some(file) = w.file.as_mut() {
            let written = file.write_all(line.as_bytes()).and_then(|()| match self.options.sync {
                SyncPolicy::EveryAppend => file.sync_data(),
                SyncPolicy::OsBuffered => Ok(()),
            });
            if let Err(e) = written {
                // drop any partial record so the file stays replayable
                let _ = file.set_len(before);
                return Err(e.into());
            }
        }
        w.bytes += line.len() as u64;
        w.ids.insert(event.event_id.clone());
        let mut events = self.events.write().expect("log events poisoned");
        Arc::make_mut(&mut events).push(event);
        Ok(())
    }

    /// Validates and stores a survey answer as a `SurveyAnswered` event.
    pub fn record_survey(&self, response: SurveyResponse) -> Result<InteractionEvent, LogError> {
        response.validate()?;
        let event = response.into_event();
        self.append(event.clone())?;
        Ok(event)
    }

    pub fn snapshot(&self) -> LogSnapshot {
        LogSnapshot::from_arc(Arc::clone(&self.events.read().expect("log events poisoned")))
    }

    pub fn query_events(&self, filter: &EventFilter) -> Vec<InteractionEvent> {
        self.snapshot().query(filter)
    }

    pub fn len(&self) -> usize {
        self.events.read().expect("log events poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flushes and syncs the file.
    pub fn flush(&self) -> Result<(), LogError> {
        let mut w = self.writer.lock().expect("log writer poisoned");
        if let Some(file) = w.file.as_mut() {
            file.flush()?;
            file.sync_all()?;
        }
        Ok(())
    }
}
