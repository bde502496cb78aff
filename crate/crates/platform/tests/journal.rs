mod common;

use std::sync::Arc;

use common::cohort;
use proptest::prelude::*;
use sit_core::scores::{score_sessions, ScoreOptions};
use sit_core::survey::flow::RatingEvent;
use sit_core::survey::{create_session, Protocol, SessionEvent};
use sit_platform::dataset::{images_of, score_dir, write_cohort, DataDir, EVENTS};
use sit_platform::events::{read_log, records_for, replay, Journal};
use sit_platform::{files, PlatformError};

#[test]
fn rated_before_assigned_is_rejected() {
    let c = cohort(30, 1);
    let a = create_session(&c.pool, 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(EVENTS);
    let mut j = Journal::open(&path, Arc::new(Protocol::default())).unwrap();
    let rated = SessionEvent::Rated(RatingEvent {
        session_id: a.session_id.clone(),
        image_id: a.image_sequence[0].clone(),
        rating: 3,
        rating_time_ms: 100,
    });
    let r = j.append(&a.session_id, rated.clone(), 0);
    assert!(
        matches!(r, Err(PlatformError::Core(sit_core::Error::Sequencing(_)))),
        "{r:?}"
    );
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "");
    assert_eq!(j.next_id(), 1);

    let first = j.start(a.clone(), 10).unwrap();
    assert_eq!(first.event_id, 1);
    // A second Assigned for the same session is refused.
    assert!(j.start(a.clone(), 11).is_err());
    let before = std::fs::read(&path).unwrap();
    if !a.iat_first {
        let rec = j.append(&a.session_id, rated, 12).unwrap();
        assert_eq!(rec.event_id, first.event_id + 1);
    }
    // Rejections leave the file alone.
    let after_ok = std::fs::read(&path).unwrap();
    assert!(after_ok.starts_with(&before));
    let bogus = SessionEvent::Rated(RatingEvent {
        session_id: a.session_id.clone(),
        image_id: "nope".into(),
        rating: 3,
        rating_time_ms: 100,
    });
    assert!(j.append(&a.session_id, bogus, 13).is_err());
    assert_eq!(std::fs::read(&path).unwrap(), after_ok);

    // Reopening replays the log and continues the numbering.
    let next = j.next_id();
    drop(j);
    let j = Journal::open(&path, Arc::new(Protocol::default())).unwrap();
    assert_eq!(j.next_id(), next);
    assert_eq!(j.session(&a.session_id).unwrap().events().len() as u64, next - 1);
}

#[test]
fn replay_reproduces_online_scores() {
    let c = cohort(120, 2);
    let online = score_sessions(&c.sessions, &images_of(&c.pool), None, ScoreOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let d = DataDir::new(dir.path());
    write_cohort(&d, &c).unwrap();
    let records = read_log(&d.path(EVENTS)).unwrap();
    assert!(records.windows(2).all(|w| w[1].event_id == w[0].event_id + 1));
    let replayed = replay(&records, Arc::new(Protocol::default())).unwrap();
    let offline = score_sessions(&replayed, &images_of(&c.pool), None, ScoreOptions::default()).unwrap();
    assert_eq!(online, offline);
    // Through the data directory, with the POS file as well.
    let pos = sit_core::text::metrics::pos_by_comment(&c.pos);
    let with_pos = score_sessions(&c.sessions, &images_of(&c.pool), Some(&pos), ScoreOptions::default()).unwrap();
    assert_eq!(score_dir(&d, ScoreOptions::default()).unwrap(), with_pos);
}

#[test]
fn corrupt_logs_are_rejected() {
    let c = cohort(30, 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(EVENTS);
    let mut recs = records_for(&c.sessions[..2], 0);
    recs.swap(3, 4);
    let body: String = recs.iter().map(sit_platform::events::to_line).collect();
    std::fs::write(&path, body).unwrap();
    assert!(read_log(&path).is_err());
    std::fs::write(&path, "{\"event_id\":1}\n").unwrap();
    assert!(read_log(&path).is_err());
    // Ids in order but events out of order: replay refuses.
    let mut recs = records_for(&c.sessions[..1], 0);
    let (a, b) = (recs[1].event.clone(), recs[2].event.clone());
    recs[1].event = b;
    recs[2].event = a;
    assert!(replay(&recs, Arc::new(Protocol::default())).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    // Any prefix of a valid log replays, and each session is a prefix of
    // the full one.
    #[test]
    fn log_prefixes_replay(cut in 0usize..2000) {
        thread_local! {
            static C: sit_core::synth::Cohort = cohort(30, 4);
        }
        C.with(|c| {
            let recs = records_for(&c.sessions[..3], 0);
            let cut = cut % (recs.len() + 1);
            let part = replay(&recs[..cut], Arc::new(Protocol::default())).unwrap();
            for s in &part {
                let full = c.sessions.iter().find(|x| x.id() == s.id()).unwrap();
                assert_eq!(s.events(), &full.events()[..s.events().len()]);
            }
        });
    }
}

#[test]
fn snapshots_match_the_log() {
    let c = cohort(30, 5);
    let dir = tempfile::tempdir().unwrap();
    let d = DataDir::new(dir.path());
    write_cohort(&d, &c).unwrap();
    let sessions = d.sessions(Arc::new(Protocol::default())).unwrap();
    let mut buf = Vec::new();
    files::write_ratings(&mut buf, &sessions).unwrap();
    assert_eq!(std::fs::read(d.path("ratings.csv")).unwrap(), buf);
}
