use std::sync::Arc;
use std::thread;

use chrono::{TimeZone, Utc};
use tutor_core::log::{EventKind, EventStore, InteractionEvent, LogError, StoreOptions, SyncPolicy};
use tutor_core::session::Phase;

fn ev(i: usize, student: &str) -> InteractionEvent {
    InteractionEvent::new(
        Utc.timestamp_millis_opt(1_738_000_000_000 + i as i64).unwrap(),
        student,
        "2.5-1",
        Phase::PreSubmission,
        EventKind::QuestionAsked,
        format!("question {i}\nwith a second line"),
    )
}

#[test]
fn reopen_after_many_appends() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.log");
    let options = StoreOptions {
        sync: SyncPolicy::OsBuffered,
        max_bytes: None,
    };
    let written: Vec<InteractionEvent> = {
        let store = EventStore::open_with(&path, options).unwrap();
        for i in 0..2000 {
            store.append(ev(i, "s1")).unwrap();
        }
        store.flush().unwrap();
        store.snapshot().events().to_vec()
    };
    let reopened = EventStore::open(&path).unwrap();
    assert_eq!(reopened.snapshot().events(), &written[..]);
}

#[test]
fn concurrent_writers_lose_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.log");
    let store = Arc::new(EventStore::open(&path).unwrap());
    let handles: Vec<_> = (0..8)
        .map(|w| {
            let store = Arc::clone(&store);
            thread::spawn(move || {
                for i in 0..50 {
                    store.append(ev(i, &format!("w{w}"))).unwrap();
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    assert_eq!(store.len(), 400);
    drop(store);
    assert_eq!(EventStore::open(&path).unwrap().len(), 400);
}

#[test]
fn storage_limit_keeps_file_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.log");
    let store = EventStore::open_with(
        &path,
        StoreOptions {
            sync: SyncPolicy::EveryAppend,
            max_bytes: Some(400),
        },
    )
    .unwrap();
    let mut accepted = 0;
    for i in 0..20 {
        match store.append(ev(i, "s1")) {
            Ok(()) => accepted += 1,
            Err(LogError::StorageFull) => break,
            Err(e) => panic!("{e}"),
        }
    }
    assert!(accepted > 0);
    drop(store);
    assert_eq!(EventStore::open(&path).unwrap().len(), accepted);
}
