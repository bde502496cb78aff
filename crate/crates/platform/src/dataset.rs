//! A data directory: pool manifest, event log and the CSV snapshots derived
//! from them.
//!
//! | file | contents |
//! |---|---|
//! | `manifest.csv` | image pool |
//! | `events.ndjson` | append-only event log (source of truth) |
//! | `ratings.csv`, `comments.csv`, `iat_trials.csv`, `questionnaire.csv`, `assignments.csv` | snapshots of the log |
//! | `pos.csv` | POS annotation of comments (optional) |
//! | `stance.csv`, `tag_probs.csv` | annotator and classifier output (optional) |
//! | `scores.csv` | one row per scored respondent |
//! | `truth.csv`, `simulation.json` | generating values, synthetic data only |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use sit_core::scores::{score_sessions, ScoreOptions, ScoreSet};
use sit_core::survey::{ImagePool, Protocol, Session};
use sit_core::synth::{Calibration, Cohort, CohortSpec};
use sit_core::text::metrics::{pos_by_comment, AnnotatedToken};

use crate::error::{PlatformError, Result};
use crate::events::{read_log, records_for, replay, write_log};
use crate::files;

pub const MANIFEST: &str = "manifest.csv";
pub const EVENTS: &str = "events.ndjson";
pub const POS: &str = "pos.csv";
pub const STANCE: &str = "stance.csv";
pub const TAG_PROBS: &str = "tag_probs.csv";
pub const SCORES: &str = "scores.csv";

/// Logical clock origin for synthetic logs.
pub const SIM_EPOCH_MS: u64 = 1_700_000_000_000;

#[derive(Debug, Clone)]
pub struct DataDir {
    root: PathBuf,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DataDir { root: root.into() }
    }

    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| PlatformError::io(&root, e))?;
        Ok(DataDir { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn has(&self, name: &str) -> bool {
        self.path(name).exists()
    }

    pub fn pool(&self) -> Result<ImagePool> {
        let p = self.path(MANIFEST);
        let cards = files::read_manifest(files::open(&p)?, &p.display().to_string())?;
        Ok(ImagePool::new(cards)?)
    }

    pub fn sessions(&self, protocol: Arc<Protocol>) -> Result<Vec<Session>> {
        replay(&read_log(&self.path(EVENTS))?, protocol)
    }

    pub fn pos(&self) -> Result<Option<BTreeMap<String, Vec<AnnotatedToken>>>> {
        if !self.has(POS) {
            return Ok(None);
        }
        let p = self.path(POS);
        Ok(Some(pos_by_comment(&files::read_pos(
            files::open(&p)?,
            &p.display().to_string(),
        )?)))
    }

    /// Writes a table with `f` to `name` under the directory.
    pub fn write(&self, name: &str, f: impl FnOnce(&mut dyn std::io::Write) -> Result<()>) -> Result<()> {
        let p = self.path(name);
        let mut w = files::create(&p)?;
        f(&mut w)?;
        std::io::Write::flush(&mut w).map_err(|e| PlatformError::io(&p, e))
    }

    /// Regenerates the CSV snapshots of the log.
    pub fn export_snapshots(&self, sessions: &[Session]) -> Result<()> {
        self.write("ratings.csv", |w| files::write_ratings(w, sessions))?;
        self.write("comments.csv", |w| files::write_comments(w, sessions))?;
        self.write("iat_trials.csv", |w| files::write_iat_trials(w, sessions))?;
        self.write("questionnaire.csv", |w| {
            files::write_questionnaire(w, &files::questionnaire_rows(sessions))
        })?;
        self.write("assignments.csv", |w| files::write_assignments(w, sessions))
    }
}

pub fn images_of(pool: &ImagePool) -> Vec<(String, bool)> {
    pool.cards()
        .iter()
        .map(|c| (c.image_id.clone(), c.is_gender_stem))
        .collect()
}

#[derive(serde::Serialize)]
struct SimulationRecord<'a> {
    spec: &'a CohortSpec,
    calibration: &'a Calibration,
}

/// Writes a generated cohort in the same layout live data uses.
pub fn write_cohort(dir: &DataDir, cohort: &Cohort) -> Result<()> {
    dir.write(MANIFEST, |w| files::write_manifest(w, cohort.pool.cards()))?;
    write_log(&dir.path(EVENTS), &records_for(&cohort.sessions, SIM_EPOCH_MS))?;
    dir.export_snapshots(&cohort.sessions)?;
    dir.write(POS, |w| files::write_pos(w, &cohort.pos))?;
    dir.write(STANCE, |w| files::write_stance(w, &cohort.stance))?;
    dir.write(TAG_PROBS, |w| files::write_tag_probs(w, &cohort.tag_probs))?;
    dir.write("truth.csv", |w| files::write_truth(w, &cohort.truth))?;
    let meta = SimulationRecord {
        spec: &cohort.spec,
        calibration: &cohort.calibration,
    };
    let json = serde_json::to_string_pretty(&meta).expect("spec serializes") + "\n";
    std::fs::write(dir.path("simulation.json"), json).map_err(|e| PlatformError::io(dir.path("simulation.json"), e))
}

/// Replays the log and scores every completed session.
pub fn score_dir(dir: &DataDir, opts: ScoreOptions) -> Result<ScoreSet> {
    let pool = dir.pool()?;
    let protocol = Arc::new(Protocol::default());
    let sessions = dir.sessions(protocol)?;
    let pos = dir.pos()?;
    Ok(score_sessions(&sessions, &images_of(&pool), pos.as_ref(), opts)?)
}
