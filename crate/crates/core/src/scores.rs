//! From completed sessions to one row of scores per respondent.
//!
//! The analysis cohort is every completed session whose IAT was not
//! excluded. Leave-one-out image means are taken over that cohort only.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iat::{score_respondent, ExclusionReason};
use crate::psychometrics::scales::{trait_indices, IndexScoring, ScaleName, ScaleResponses};
use crate::sit::{sit_scores, RatingMatrix, RespondentRatings, Subset};
use crate::stats::data::DataTable;
use crate::stats::describe::{standardize, Variance};
use crate::stats::design::{BIRTH_AREA, FRAMING, SOCIO_NUMERIC};
use crate::stats::robustness::robustness_scores;

use crate::survey::flow::Session;
use crate::survey::questionnaire::{section_scale, AnswerValue, DEMOGRAPHICS_SECTION};
use crate::text::metrics::{is_scorable, respondent_profiles, AnnotatedComment, AnnotatedToken};
use crate::text::stance::comment_id;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreOptions {
    /// Standardized by default; `Raw` keeps the below-one SDs of the
    /// regression weights.
    pub index_scoring: IndexScoring,
    /// Add the two robustness variants of the SIT score.
    pub robustness: bool,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        ScoreOptions {
            index_scoring: IndexScoring::Standardized,
            robustness: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub session_id: String,
    pub framing: String,
    pub iat_first: bool,
    /// IAT taken first and its feedback shown before the SIT.
    pub iat_rev: bool,
    pub sit: f64,
    pub sit_tilde: f64,
    pub gender_sit: Option<f64>,
    pub sit_sd: Option<f64>,
    pub sit_factor: Option<f64>,
    pub iat_d: f64,
    /// In [`ScaleName::ALL`] order; `None` when an item was skipped.
    pub indices: [Option<f64>; 6],
    pub lexical_density: Option<f64>,
    pub ttr: Option<f64>,
    pub demographics: BTreeMap<String, Option<AnswerValue>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub rows: Vec<ScoreRow>,
    pub incomplete: Vec<String>,
    pub iat_excluded: Vec<(String, ExclusionReason)>,
}

fn answer_f64(v: &Option<AnswerValue>) -> Option<f64> {
    v.as_ref().and_then(AnswerValue::as_f64)
}

/// Scores every completed, non-excluded session. `images` lists the pool
/// with Gender-STEM flags; `pos` holds POS tokens per `session:image`.
pub fn score_sessions(
    sessions: &[Session],
    images: &[(String, bool)],
    pos: Option<&BTreeMap<String, Vec<AnnotatedToken>>>,
    opts: ScoreOptions,
) -> Result<ScoreSet> {
    let mut incomplete = Vec::new();
    let mut iat_excluded = Vec::new();
    let mut cohort: Vec<(&Session, f64)> = Vec::new();
    for s in sessions {
        if !s.is_complete() {
            incomplete.push(s.id().to_string());
            continue;
        }
        let score = score_respondent(s.iat_trials(), &s.protocol().iat)?;
        match score.exclusion_reason {
            Some(r) if score.excluded => iat_excluded.push((s.id().to_string(), r)),
            _ => cohort.push((s, score.d_score)),
        }
    }
    if cohort.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} scorable sessions; at least 3 are needed",
            cohort.len()
        )));
    }

    let respondents: Vec<RespondentRatings> = cohort
        .iter()
        .map(|(s, _)| RespondentRatings {
            respondent_id: s.id().to_string(),
            ratings: s
                .ratings()
                .iter()
                .map(|r| (r.image_id.clone(), r.rating as f64))
                .collect(),
        })
        .collect();
    let matrix = RatingMatrix::new(images.to_vec(), respondents)?;
    let sit = sit_scores(&matrix, Subset::All)?;
    let gender = sit_scores(&matrix, Subset::GenderStemOnly).ok();
    let robust = if opts.robustness {
        Some(robustness_scores(&matrix)?)
    } else {
        None
    };

    let protocol = cohort[0].0.protocol();
    let mut responses: Vec<Vec<ScaleResponses>> = vec![Vec::new(); protocol.scales.len()];
    let mut demographics = Vec::with_capacity(cohort.len());
    for (s, _) in &cohort {
        let mut demo = BTreeMap::new();
        for (page, answers) in s.answers() {
            let section = &s.pages()[*page].section;
            if section == DEMOGRAPHICS_SECTION {
                demo = answers.clone();
                continue;
            }
            let Some(name) = section_scale(section) else { continue };
            let Some(k) = protocol.scales.iter().position(|d| d.scale_name == name) else {
                continue;
            };
            let n = protocol.scales[k].item_prompts.len();
            responses[k].push(ScaleResponses {
                respondent_id: s.id().to_string(),
                answers: (1..=n)
                    .map(|i| answers.get(&i.to_string()).and_then(answer_f64))
                    .collect(),
            });
        }
        demographics.push(demo);
    }
    let indices = trait_indices(&protocol.scales, &responses, opts.index_scoring)?;
    let mut index_maps: Vec<(usize, HashMap<&str, f64>)> = Vec::new();
    for ix in &indices {
        let slot = ScaleName::ALL.iter().position(|n| *n == ix.scale).unwrap();
        index_maps.push((slot, ix.scores.iter().map(|(id, v)| (id.as_str(), *v)).collect()));
    }

    let lexical: HashMap<String, (f64, f64)> = match pos {
        Some(pos) => {
            let comments: Vec<AnnotatedComment> = cohort
                .iter()
                .flat_map(|(s, _)| {
                    s.comments().iter().filter(|c| is_scorable(&c.text)).filter_map(|c| {
                        pos.get(&comment_id(s.id(), &c.image_id)).map(|t| AnnotatedComment {
                            respondent_id: s.id().to_string(),
                            text: c.text.clone(),
                            tokens: t.clone(),
                        })
                    })
                })
                .collect();
            respondent_profiles(&comments)
                .into_iter()
                .map(|p| (p.respondent_id, (p.lexical_density, p.ttr)))
                .collect()
        }
        None => HashMap::new(),
    };

    let rows = cohort
        .iter()
        .zip(demographics)
        .enumerate()
        .map(|(i, ((s, d), demo))| {
            let a = s.assignment();
            let id = s.id();
            let lex = lexical.get(id);
            let mut idx = [None; 6];
            for (slot, m) in &index_maps {
                idx[*slot] = m.get(id).copied();
            }
            ScoreRow {
                session_id: id.to_string(),
                framing: a.framing.as_str().to_string(),
                iat_first: a.iat_first,
                iat_rev: a.iat_first && s.iat_revealed(),
                sit: sit[i].standardized,
                sit_tilde: sit[i].tilde,
                gender_sit: gender.as_ref().map(|g| g[i].standardized),
                sit_sd: robust.as_ref().map(|r| r.sd_adjusted[i]),
                sit_factor: robust.as_ref().map(|r| r.factor[i]),
                iat_d: *d,
                indices: idx,
                lexical_density: lex.map(|l| l.0),
                ttr: lex.map(|l| l.1),
                demographics: demo,
            }
        })
        .collect();
    Ok(ScoreSet {
        rows,
        incomplete,
        iat_excluded,
    })
}

/// Columns for the regression builder: scores, indices, text metrics,
/// sociodemographics, `birth_area` and `framing`.
pub fn analysis_table(scores: &ScoreSet) -> Result<DataTable> {
    let rows = &scores.rows;
    let mut t = DataTable::new(rows.len());
    let col = |f: &dyn Fn(&ScoreRow) -> Option<f64>| rows.iter().map(f).collect::<Vec<_>>();
    t.numeric("sit", col(&|r| Some(r.sit)))?;
    t.numeric("sit_tilde", col(&|r| Some(r.sit_tilde)))?;
    t.numeric("gender_sit", col(&|r| r.gender_sit))?;
    t.numeric("sit_sd", col(&|r| r.sit_sd))?;
    t.numeric("sit_factor", col(&|r| r.sit_factor))?;
    t.numeric("iat_d", col(&|r| Some(r.iat_d)))?;
    t.numeric("iat_rev", col(&|r| Some(f64::from(u8::from(r.iat_rev)))))?;
    for (k, s) in ScaleName::ALL.iter().enumerate() {
        t.numeric(s.key(), col(&|r| r.indices[k]))?;
    }
    t.numeric("lexical_density", col(&|r| r.lexical_density))?;
    t.numeric("ttr", col(&|r| r.ttr))?;
    for (c, _) in SOCIO_NUMERIC {
        t.numeric(c, col(&|r| r.demographics.get(c).and_then(answer_f64)))?;
    }
    let text = |r: &ScoreRow, c: &str| match r.demographics.get(c) {
        Some(Some(AnswerValue::Text(s))) => Some(s.clone()),
        _ => None,
    };
    t.categorical(BIRTH_AREA, rows.iter().map(|r| text(r, BIRTH_AREA)).collect())?;
    t.categorical(FRAMING, rows.iter().map(|r| Some(r.framing.clone())).collect())?;
    Ok(t)
}

/// IAT D-scores z-scored over the given rows, for display.
pub fn standardized_iat(scores: &ScoreSet) -> Result<Vec<f64>> {
    let d: Vec<f64> = scores.rows.iter().map(|r| r.iat_d).collect();
    standardize(&d, Variance::Sample)
}
