//! CSV tables. Every table has a fixed header, checked on read; floats are
//! written in shortest round-trip form so re-exporting an imported file
//! reproduces it byte for byte.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sit_core::iat::IatTrial;
use sit_core::psychometrics::ScaleName;
use sit_core::scores::{ScoreRow, ScoreSet};
use sit_core::stats::data::DataTable;
use sit_core::stats::design::{BIRTH_AREA, FRAMING, SOCIO_NUMERIC};
use sit_core::survey::flow::{CommentEvent, RatingEvent};
use sit_core::survey::questionnaire::AnswerValue;
use sit_core::survey::{ImageCard, Session};
use sit_core::synth::Truth;
use sit_core::text::metrics::PosRow;
use sit_core::text::stance::StanceAnnotation;
use sit_core::text::tags::{Characteristic, TagCategoryProbs};

use crate::error::{PlatformError, Result};

pub const RATINGS_HEADER: &[&str] = &["session_id", "image_id", "rating", "rating_time_ms"];
pub const COMMENTS_HEADER: &[&str] = &["session_id", "image_id", "text", "comment_time_ms"];
pub const IAT_TRIALS_HEADER: &[&str] = &[
    "session_id",
    "block",
    "trial_index",
    "stimulus_id",
    "reaction_time_ms",
    "correct",
];
pub const QUESTIONNAIRE_HEADER: &[&str] = &["session_id", "page", "section", "item", "value"];
pub const ASSIGNMENTS_HEADER: &[&str] = &[
    "session_id",
    "seed",
    "framing",
    "iat_first",
    "image_sequence",
    "iat_revealed",
    "complete",
];
pub const MANIFEST_HEADER: &[&str] = &["image_id", "is_gender_stem", "tags", "path"];
pub const POS_HEADER: &[&str] = &["session_id", "image_id", "token_index", "surface", "lemma", "pos"];
pub const STANCE_HEADER: &[&str] = &["comment_id", "subjective", "stance", "annotator_id"];

/// Tables served by the export endpoint and written by `simulate`.
pub const EXPORT_TABLES: [&str; 5] = ["ratings", "comments", "iat_trials", "questionnaire", "scores"];

/// Columns of the scores table: the documented core, then the variables
/// the regression models need.
pub fn scores_header() -> Vec<String> {
    let mut h: Vec<String> = ["session_id", "sit", "gender_sit", "iat_d", "iat_rev"]
        .map(String::from)
        .to_vec();
    h.extend(ScaleName::ALL.iter().map(|s| s.key().to_string()));
    h.extend(
        [
            "lexical_density",
            "ttr",
            "sit_tilde",
            "sit_sd",
            "sit_factor",
            FRAMING,
            "iat_first",
        ]
        .map(String::from),
    );
    h.extend(SOCIO_NUMERIC.iter().map(|(c, _)| c.to_string()));
    h.push(BIRTH_AREA.to_string());
    h
}

pub fn tag_probs_header() -> Vec<String> {
    std::iter::once("tag".to_string())
        .chain(Characteristic::ALL.iter().map(|c| c.as_str().to_string()))
        .collect()
}

pub fn truth_header() -> Vec<String> {
    let mut h: Vec<String> = ["session_id", "sensitivity", "revealed", "excluded", "bias", "verbal"]
        .map(String::from)
        .to_vec();
    h.extend(ScaleName::ALL.iter().map(|s| format!("trait_{}", s.key())));
    h
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

fn csv_err(name: &str, e: csv::Error) -> PlatformError {
    if e.is_io_error() {
        if let csv::ErrorKind::Io(io) = e.into_kind() {
            return PlatformError::io(name, io);
        }
        unreachable!("io kind checked above");
    }
    PlatformError::format(name, e.to_string())
}

/// Writes `header` then `rows`; fields are quoted only when needed.
pub fn write_records<W: Write>(w: W, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(header).map_err(|e| csv_err("output", e))?;
    for r in rows {
        wr.write_record(&r).map_err(|e| csv_err("output", e))?;
    }
    wr.flush().map_err(|e| PlatformError::io("output", e))
}

fn header_strings(h: &[&str]) -> Vec<String> {
    h.iter().map(|s| s.to_string()).collect()
}

/// Reads raw records after checking the header matches exactly.
pub fn read_records<R: Read>(r: R, name: &str, expected: &[String]) -> Result<Vec<Vec<String>>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let got: Vec<String> = rd
        .headers()
        .map_err(|e| csv_err(name, e))?
        .iter()
        .map(String::from)
        .collect();
    if got != expected {
        return Err(PlatformError::format(
            name,
            format!("header is [{}], expected [{}]", got.join(","), expected.join(",")),
        ));
    }
    rd.records()
        .map(|r| {
            r.map(|r| r.iter().map(String::from).collect())
                .map_err(|e| csv_err(name, e))
        })
        .collect()
}

fn read_serde<T: DeserializeOwned, R: Read>(r: R, name: &str, header: &[&str]) -> Result<Vec<T>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let got: Vec<String> = rd
        .headers()
        .map_err(|e| csv_err(name, e))?
        .iter()
        .map(String::from)
        .collect();
    if got != header {
        return Err(PlatformError::format(
            name,
            format!("header is [{}], expected [{}]", got.join(","), header.join(",")),
        ));
    }
    rd.deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| PlatformError::format(name, format!("row {}: {e}", i + 2))))
        .collect()
}

fn write_serde<T: Serialize, W: Write>(w: W, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(header).map_err(|e| csv_err("output", e))?;
    for r in rows {
        wr.serialize(r).map_err(|e| csv_err("output", e))?;
    }
    wr.flush().map_err(|e| PlatformError::io("output", e))
}

pub fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| PlatformError::io(path, e))
}

pub fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| PlatformError::io(path, e))
}

// ---- per-table ------------------------------------------------------------

pub fn write_ratings<W: Write>(w: W, sessions: &[Session]) -> Result<()> {
    write_serde(w, RATINGS_HEADER, sessions.iter().flat_map(|s| s.ratings()))
}

pub fn read_ratings<R: Read>(r: R, name: &str) -> Result<Vec<RatingEvent>> {
    read_serde(r, name, RATINGS_HEADER)
}

pub fn write_rating_rows<W: Write>(w: W, rows: &[RatingEvent]) -> Result<()> {
    write_serde(w, RATINGS_HEADER, rows)
}

pub fn write_comments<W: Write>(w: W, sessions: &[Session]) -> Result<()> {
    write_serde(w, COMMENTS_HEADER, sessions.iter().flat_map(|s| s.comments()))
}

pub fn read_comments<R: Read>(r: R, name: &str) -> Result<Vec<CommentEvent>> {
    read_serde(r, name, COMMENTS_HEADER)
}

pub fn write_comment_rows<W: Write>(w: W, rows: &[CommentEvent]) -> Result<()> {
    write_serde(w, COMMENTS_HEADER, rows)
}

pub fn write_iat_trials<W: Write>(w: W, sessions: &[Session]) -> Result<()> {
    write_serde(w, IAT_TRIALS_HEADER, sessions.iter().flat_map(|s| s.iat_trials()))
}

pub fn read_iat_trials<R: Read>(r: R, name: &str) -> Result<Vec<IatTrial>> {
    read_serde(r, name, IAT_TRIALS_HEADER)
}

pub fn write_iat_rows<W: Write>(w: W, rows: &[IatTrial]) -> Result<()> {
    write_serde(w, IAT_TRIALS_HEADER, rows)
}

/// One answered (or skipped, empty `value`) item per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireRow {
    pub session_id: String,
    pub page: usize,
    pub section: String,
    pub item: String,
    pub value: String,
}

impl QuestionnaireRow {
    /// Numbers parse as numbers, anything else is text, empty is skipped.
    pub fn answer(&self) -> Option<AnswerValue> {
        if self.value.is_empty() {
            None
        } else if let Ok(x) = self.value.parse::<f64>() {
            Some(AnswerValue::Number(x))
        } else {
            Some(AnswerValue::Text(self.value.clone()))
        }
    }
}

pub fn questionnaire_rows(sessions: &[Session]) -> Vec<QuestionnaireRow> {
    let mut out = Vec::new();
    for s in sessions {
        for (page, answers) in s.answers() {
            let section = &s.pages()[*page].section;
            for (item, v) in answers {
                out.push(QuestionnaireRow {
                    session_id: s.id().to_string(),
                    page: *page,
                    section: section.clone(),
                    item: item.clone(),
                    value: v.as_ref().map(AnswerValue::render).unwrap_or_default(),
                });
            }
        }
    }
    out
}

pub fn write_questionnaire<W: Write>(w: W, rows: &[QuestionnaireRow]) -> Result<()> {
    write_serde(w, QUESTIONNAIRE_HEADER, rows)
}

pub fn read_questionnaire<R: Read>(r: R, name: &str) -> Result<Vec<QuestionnaireRow>> {
    read_serde(r, name, QUESTIONNAIRE_HEADER)
}

pub fn write_assignments<W: Write>(w: W, sessions: &[Session]) -> Result<()> {
    let rows = sessions.iter().map(|s| {
        let a = s.assignment();
        vec![
            a.session_id.clone(),
            a.seed.to_string(),
            a.framing.as_str().to_string(),
            a.iat_first.to_string(),
            a.image_sequence.join(";"),
            s.iat_revealed().to_string(),
            s.is_complete().to_string(),
        ]
    });
    write_records(w, &header_strings(ASSIGNMENTS_HEADER), rows)
}

/// Pool manifest: tags joined with `;`, empty path for none.
pub fn write_manifest<W: Write>(w: W, cards: &[ImageCard]) -> Result<()> {
    let rows = cards.iter().map(|c| {
        vec![
            c.image_id.clone(),
            c.is_gender_stem.to_string(),
            c.tags.join(";"),
            c.path.clone().unwrap_or_default(),
        ]
    });
    write_records(w, &header_strings(MANIFEST_HEADER), rows)
}

pub fn read_manifest<R: Read>(r: R, name: &str) -> Result<Vec<ImageCard>> {
    read_records(r, name, &header_strings(MANIFEST_HEADER))?
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            let flag = f[1].parse::<bool>().map_err(|_| {
                PlatformError::format(
                    name,
                    format!("row {}: is_gender_stem '{}' is not true/false", i + 2, f[1]),
                )
            })?;
            Ok(ImageCard {
                image_id: f[0].clone(),
                is_gender_stem: flag,
                tags: if f[2].is_empty() {
                    vec![]
                } else {
                    f[2].split(';').map(String::from).collect()
                },
                path: (!f[3].is_empty()).then(|| f[3].clone()),
            })
        })
        .collect()
}

pub fn write_pos<W: Write>(w: W, rows: &[PosRow]) -> Result<()> {
    write_serde(w, POS_HEADER, rows)
}

pub fn read_pos<R: Read>(r: R, name: &str) -> Result<Vec<PosRow>> {
    read_serde(r, name, POS_HEADER)
}

pub fn write_stance<W: Write>(w: W, rows: &[StanceAnnotation]) -> Result<()> {
    write_serde(w, STANCE_HEADER, rows)
}

pub fn read_stance<R: Read>(r: R, name: &str) -> Result<Vec<StanceAnnotation>> {
    read_serde(r, name, STANCE_HEADER)
}

/// Wide layout: one column per characteristic, empty when the classifier
/// gave no probability.
pub fn write_tag_probs<W: Write>(w: W, rows: &[TagCategoryProbs]) -> Result<()> {
    let recs = rows.iter().map(|p| {
        std::iter::once(p.tag.clone())
            .chain(Characteristic::ALL.iter().map(|c| fmt_opt(p.probs.get(c).copied())))
            .collect()
    });
    write_records(w, &tag_probs_header(), recs)
}

pub fn read_tag_probs<R: Read>(r: R, name: &str) -> Result<Vec<TagCategoryProbs>> {
    read_records(r, name, &tag_probs_header())?
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            let mut probs = BTreeMap::new();
            for (c, v) in Characteristic::ALL.iter().zip(&f[1..]) {
                if !v.is_empty() {
                    let x = v
                        .parse::<f64>()
                        .map_err(|_| PlatformError::format(name, format!("row {}: '{v}' is not a number", i + 2)))?;
                    probs.insert(*c, x);
                }
            }
            Ok(TagCategoryProbs {
                tag: f[0].clone(),
                probs,
            })
        })
        .collect()
}

pub fn write_truth<W: Write>(w: W, rows: &[Truth]) -> Result<()> {
    let recs = rows.iter().map(|t| {
        let mut v = vec![
            t.session_id.clone(),
            fmt_f64(t.sensitivity),
            t.revealed.to_string(),
            t.excluded.to_string(),
            fmt_f64(t.bias),
            fmt_f64(t.verbal),
        ];
        v.extend(t.traits.iter().map(|x| fmt_f64(*x)));
        v
    });
    write_records(w, &truth_header(), recs)
}

fn score_record(r: &ScoreRow) -> Vec<String> {
    let demo = |c: &str| match r.demographics.get(c) {
        Some(Some(v)) => v.render(),
        _ => String::new(),
    };
    let mut v = vec![
        r.session_id.clone(),
        fmt_f64(r.sit),
        fmt_opt(r.gender_sit),
        fmt_f64(r.iat_d),
        u8::from(r.iat_rev).to_string(),
    ];
    v.extend(r.indices.iter().map(|x| fmt_opt(*x)));
    v.extend([
        fmt_opt(r.lexical_density),
        fmt_opt(r.ttr),
        fmt_f64(r.sit_tilde),
        fmt_opt(r.sit_sd),
        fmt_opt(r.sit_factor),
        r.framing.clone(),
        u8::from(r.iat_first).to_string(),
    ]);
    v.extend(SOCIO_NUMERIC.iter().map(|(c, _)| demo(c)));
    v.push(demo(BIRTH_AREA));
    v
}

pub fn write_scores<W: Write>(w: W, scores: &ScoreSet) -> Result<()> {
    write_records(w, &scores_header(), scores.rows.iter().map(score_record))
}

/// The scores file as raw records (session ids kept alongside).
pub struct ScoresFile {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_scores<R: Read>(r: R, name: &str) -> Result<ScoresFile> {
    let header = scores_header();
    let rows = read_records(r, name, &header)?;
    Ok(ScoresFile { header, rows })
}

impl ScoresFile {
    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        write_records(w, &self.header, self.rows.iter().cloned())
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.rows.iter().map(|r| r[0].clone()).collect()
    }

    /// Regression input: framing and birth area categorical, every other
    /// column numeric with blanks as missing.
    pub fn to_table(&self, name: &str) -> Result<DataTable> {
        let mut t = DataTable::new(self.rows.len());
        for (j, col) in self.header.iter().enumerate().skip(1) {
            let cells = self.rows.iter().map(|r| r[j].as_str());
            if col == FRAMING || col == BIRTH_AREA {
                t.categorical(
                    col.clone(),
                    cells.map(|c| (!c.is_empty()).then(|| c.to_string())).collect(),
                )?;
            } else {
                let vals = cells
                    .enumerate()
                    .map(|(i, c)| {
                        if c.is_empty() {
                            Ok(None)
                        } else {
                            c.parse::<f64>().map(Some).map_err(|_| {
                                PlatformError::format(
                                    name,
                                    format!("row {}, column {col}: '{c}' is not a number", i + 2),
                                )
                            })
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                t.numeric(col.clone(), vals)?;
            }
        }
        Ok(t)
    }
}
