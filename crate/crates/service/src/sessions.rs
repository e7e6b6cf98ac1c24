//! Live sessions with their latest feedback, expired after idling.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Duration, Utc};
use tutor_core::feedback::FeedbackReport;
use tutor_core::session::Session;

#[derive(Debug)]
pub struct SessionEntry {
    pub session: Session,
    /// Cleared whenever a new submission is recorded.
    pub feedback: Option<FeedbackReport>,
}

pub type SharedEntry = Arc<Mutex<SessionEntry>>;

#[derive(Debug)]
pub enum Lookup {
    Found(SharedEntry),
    Expired,
    Missing,
}

/// Session table. Each entry has its own lock so operations on one session
/// are serialized while different sessions proceed in parallel.
#[derive(Debug)]
pub struct SessionTable {
    idle_timeout: Duration,
    entries: Mutex<HashMap<String, SharedEntry>>,
}

impl SessionTable {
    pub fn new(idle_timeout: Duration) -> Self {
        Self {
            idle_timeout,
            entries: Mutex::default(),
        }
    }

    pub fn insert(&self, session: Session) -> SharedEntry {
        let id = session.session_id().to_string();
        let entry = Arc::new(Mutex::new(SessionEntry { session, feedback: None }));
        self.entries
            .lock()
            .expect("session table poisoned")
            .insert(id, Arc::clone(&entry));
        entry
    }

    /// Finds a session owned by `student_id`. Sessions of other students
    /// are reported as missing.
    pub fn get(&self, session_id: &str, student_id: &str, now: DateTime<Utc>) -> Lookup {
        let mut entries = self.entries.lock().expect("session table poisoned");
        let Some(entry) = entries.get(session_id).cloned() else {
            return Lookup::Missing;
        };
        let guard = entry.lock().expect("session poisoned");
        if guard.session.student_id() != student_id {
            return Lookup::Missing;
        }
        if guard.session.is_idle_expired(now, self.idle_timeout) {
            drop(guard);
            entries.remove(session_id);
            return Lookup::Expired;
        }
        drop(guard);
        Lookup::Found(entry)
    }

    /// Drops idle sessions; returns how many were removed.
    pub fn purge_expired(&self, now: DateTime<Utc>) -> usize {
        let mut entries = self.entries.lock().expect("session table poisoned");
        let before = entries.len();
        entries.retain(|_, e| {
            e.try_lock()
                .map(|g| !g.session.is_idle_expired(now, self.idle_timeout))
                .unwrap_or(true)
        });
        before - entries.len()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("session table poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use tutor_core::context::ProblemRecord;
    use tutor_core::session::start_session_with_record;

    #[test]
    fn ownership_and_expiry() {
        let t0 = Utc.timestamp_millis_opt(0).unwrap();
        let table = SessionTable::new(Duration::hours(24));
        let s = start_session_with_record("s1", &ProblemRecord::new("2.5-1", "x"), t0);
        let id = s.session_id().to_string();
        table.insert(s);
        assert!(matches!(table.get(&id, "s1", t0), Lookup::Found(_)));
        assert!(matches!(table.get(&id, "s2", t0), Lookup::Missing));
        assert!(matches!(table.get(&id, "s1", t0 + Duration::hours(25)), Lookup::Expired));
        assert!(table.is_empty());
    }

    #[test]
    fn purge() {
        let t0 = Utc.timestamp_millis_opt(0).unwrap();
        let table = SessionTable::new(Duration::hours(24));
        table.insert(start_session_with_record("s1", &ProblemRecord::new("2.5-1", "x"), t0));
        assert_eq!(table.purge_expired(t0 + Duration::hours(1)), 0);
        assert_eq!(table.purge_expired(t0 + Duration::hours(30)), 1);
    }
}
