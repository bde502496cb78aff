//! Append-only event log: one JSON record per line, `event_id` strictly
//! increasing across the whole deployment.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sit_core::survey::{Protocol, Session, SessionAssignment, SessionEvent};
use sit_core::Error;

use crate::error::{PlatformError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub event_id: u64,
    pub session_id: String,
    #[serde(flatten)]
    pub event: SessionEvent,
    /// Server receive time, milliseconds since the Unix epoch.
    pub server_ts: u64,
}

pub fn to_line(r: &EventRecord) -> String {
    let mut s = serde_json::to_string(r).expect("event records always serialize");
    s.push('\n');
    s
}

/// Parses a log, checking that ids increase.
pub fn parse_log(reader: impl BufRead, name: &str) -> Result<Vec<EventRecord>> {
    let mut out: Vec<EventRecord> = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| PlatformError::io(name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let r: EventRecord =
            serde_json::from_str(&line).map_err(|e| PlatformError::format(name, format!("line {}: {e}", n + 1)))?;
        if let Some(prev) = out.last() {
            if r.event_id <= prev.event_id {
                return Err(PlatformError::format(
                    name,
                    format!("line {}: event_id {} after {}", n + 1, r.event_id, prev.event_id),
                ));
            }
        }
        out.push(r);
    }
    Ok(out)
}

pub fn read_log(path: &Path) -> Result<Vec<EventRecord>> {
    let f = File::open(path).map_err(|e| PlatformError::io(path, e))?;
    parse_log(BufReader::new(f), &path.display().to_string())
}

pub fn write_log(path: &Path, records: &[EventRecord]) -> Result<()> {
    let body: String = records.iter().map(to_line).collect();
    std::fs::write(path, body).map_err(|e| PlatformError::io(path, e))
}

/// Rebuilds sessions from a log, in order of their `Assigned` records.
pub fn replay(records: &[EventRecord], protocol: Arc<Protocol>) -> Result<Vec<Session>> {
    let mut journal = Journal::in_memory(protocol);
    for r in records {
        journal.apply_record(r)?;
    }
    Ok(journal.into_sessions())
}

/// Live sessions plus the log they are persisted to. Every change goes
/// through [`Journal::append`], which validates against a copy of the
/// session before anything is written, so a rejected event leaves both the
/// log and the session untouched.
pub struct Journal {
    protocol: Arc<Protocol>,
    sessions: HashMap<String, Session>,
    order: Vec<String>,
    file: Option<(PathBuf, File)>,
    next_id: u64,
}

impl Journal {
    pub fn in_memory(protocol: Arc<Protocol>) -> Self {
        Journal {
            protocol,
            sessions: HashMap::new(),
            order: Vec::new(),
            file: None,
            next_id: 1,
        }
    }

    /// Opens (or creates) a log file and replays what is already there.
    pub fn open(path: &Path, protocol: Arc<Protocol>) -> Result<Self> {
        let mut j = Journal::in_memory(protocol);
        if path.exists() {
            for r in read_log(path)? {
                j.apply_record(&r)?;
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| PlatformError::io(path, e))?;
        j.file = Some((path.to_path_buf(), file));
        Ok(j)
    }

    pub fn protocol(&self) -> &Arc<Protocol> {
        &self.protocol
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn session(&self, id: &str) -> Option<&Session> {
        self.sessions.get(id)
    }

    pub fn sessions(&self) -> impl Iterator<Item = &Session> {
        self.order.iter().map(|id| &self.sessions[id])
    }

    pub fn into_sessions(mut self) -> Vec<Session> {
        self.order.iter().map(|id| self.sessions.remove(id).unwrap()).collect()
    }

    fn apply_record(&mut self, r: &EventRecord) -> Result<()> {
        if r.event_id < self.next_id {
            return Err(PlatformError::format(
                "event log",
                format!("event_id {} is not increasing", r.event_id),
            ));
        }
        let id = r.event_id;
        self.stage(&r.session_id, r.event.clone()).map(|s| self.commit(s))?;
        self.next_id = id + 1;
        Ok(())
    }

    /// Validates `event` against the session it targets and returns the
    /// updated session without storing it.
    fn stage(&self, session_id: &str, event: SessionEvent) -> Result<Session> {
        match (&event, self.sessions.get(session_id)) {
            (SessionEvent::Assigned(a), None) => {
                if a.session_id != session_id {
                    return Err(
                        Error::Validation(format!("assignment for {} filed under {session_id}", a.session_id)).into(),
                    );
                }
                Ok(Session::start(a.clone(), Arc::clone(&self.protocol))?)
            }
            (SessionEvent::Assigned(_), Some(_)) => {
                Err(Error::Sequencing(format!("session {session_id} is already assigned")).into())
            }
            (_, None) => {
                Err(Error::Sequencing(format!("{} before Assigned for session {session_id}", event.kind())).into())
            }
            (_, Some(s)) => {
                let mut next = s.clone();
                next.apply(event)?;
                Ok(next)
            }
        }
    }

    fn commit(&mut self, s: Session) {
        let id = s.id().to_string();
        if self.sessions.insert(id.clone(), s).is_none() {
            self.order.push(id);
        }
    }

    /// Appends one event after validating it; returns the stored record.
    pub fn append(&mut self, session_id: &str, event: SessionEvent, server_ts: u64) -> Result<EventRecord> {
        let staged = self.stage(session_id, event.clone())?;
        let rec = EventRecord {
            event_id: self.next_id,
            session_id: session_id.to_string(),
            event,
            server_ts,
        };
        self.persist(std::slice::from_ref(&rec))?;
        self.commit(staged);
        Ok(rec)
    }

    pub fn start(&mut self, assignment: SessionAssignment, server_ts: u64) -> Result<EventRecord> {
        let id = assignment.session_id.clone();
        self.append(&id, SessionEvent::Assigned(assignment), server_ts)
    }

    /// Runs `f` on a copy of the session; whatever events it produced are
    /// written in one go and the copy replaces the session. If `f` fails
    /// nothing changes.
    pub fn mutate<T>(
        &mut self,
        session_id: &str,
        server_ts: u64,
        f: impl FnOnce(&mut Session) -> sit_core::Result<T>,
    ) -> Result<(T, Vec<EventRecord>)> {
        let current = self
            .sessions
            .get(session_id)
            .ok_or_else(|| PlatformError::UnknownSession(session_id.to_string()))?;
        let before = current.events().len();
        let mut next = current.clone();
        let out = f(&mut next)?;
        let recs: Vec<EventRecord> = next.events()[before..]
            .iter()
            .enumerate()
            .map(|(k, e)| EventRecord {
                event_id: self.next_id + k as u64,
                session_id: session_id.to_string(),
                event: e.clone(),
                server_ts,
            })
            .collect();
        self.persist(&recs)?;
        self.commit(next);
        Ok((out, recs))
    }

    fn persist(&mut self, recs: &[EventRecord]) -> Result<()> {
        if recs.is_empty() {
            return Ok(());
        }
        if let Some((path, file)) = &mut self.file {
            let body: String = recs.iter().map(to_line).collect();
            file.write_all(body.as_bytes())
                .and_then(|_| file.sync_data())
                .map_err(|e| PlatformError::io(&*path, e))?;
        }
        self.next_id += recs.len() as u64;
        Ok(())
    }
}

/// Records for sessions built elsewhere (the simulator), numbered from 1
/// with a logical clock so the file is reproducible.
pub fn records_for(sessions: &[Session], epoch_ms: u64) -> Vec<EventRecord> {
    let mut out = Vec::new();
    let mut id = 0u64;
    for s in sessions {
        for e in s.events() {
            id += 1;
            out.push(EventRecord {
                event_id: id,
                session_id: s.id().to_string(),
                event: e.clone(),
                server_ts: epoch_ms + id,
            });
        }
    }
    out
}
