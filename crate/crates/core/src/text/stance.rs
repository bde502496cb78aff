//! Stance and subjectivity annotations of comments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psychometrics::kappa::cohens_kappa;
use crate::stats::describe::{mean, pearson};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stance {
    Against,
    Neutral,
    Pro,
}

impl Stance {
    pub const ALL: [Stance; 3] = [Stance::Against, Stance::Neutral, Stance::Pro];

    pub fn value(self) -> f64 {
        match self {
            Stance::Against => 1.0,
            Stance::Neutral => 3.0,
            Stance::Pro => 5.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stance::Against => "against",
            Stance::Neutral => "neutral",
            Stance::Pro => "pro",
        }
    }
}

impl std::str::FromStr for Stance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stance::ALL
            .into_iter()
            .find(|x| x.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::validation(format!("unknown stance '{s}'")))
    }
}

/// `session_id:image_id`.
pub fn comment_id(session_id: &str, image_id: &str) -> String {
    format!("{session_id}:{image_id}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StanceAnnotation {
    pub comment_id: String,
    pub subjective: bool,
    pub stance: Stance,
    pub annotator_id: String,
}

/// An annotated comment matched with the rating given to the same image.
#[derive(Debug, Clone, PartialEq)]
pub struct StanceObservation {
    pub respondent_id: String,
    pub stance: Stance,
    pub rating: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RespondentStance {
    pub respondent_id: String,
    pub mean_stance: f64,
    pub mean_rating: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StanceSummary {
    pub respondents: Vec<RespondentStance>,
    /// Pearson correlation of mean stance and mean rating across respondents.
    pub correlation: f64,
    /// Mean rating of comments in each stance group.
    pub group_rating_means: Vec<(Stance, f64)>,
}

pub fn stance_aggregate(obs: &[StanceObservation]) -> Result<StanceSummary> {
    let mut by: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
    let mut groups: BTreeMap<Stance, Vec<f64>> = BTreeMap::new();
    for o in obs {
        let e = by.entry(&o.respondent_id).or_default();
        e.0 += o.stance.value();
        e.1 += o.rating;
        e.2 += 1;
        groups.entry(o.stance).or_default().push(o.rating);
    }
    let respondents: Vec<RespondentStance> = by
        .into_iter()
        .map(|(id, (s, r, n))| RespondentStance {
            respondent_id: id.to_string(),
            mean_stance: s / n as f64,
            mean_rating: r / n as f64,
            n,
        })
        .collect();
    let s: Vec<f64> = respondents.iter().map(|r| r.mean_stance).collect();
    let r: Vec<f64> = respondents.iter().map(|r| r.mean_rating).collect();
    let correlation = pearson(&s, &r).ok_or_else(|| Error::degenerate("stance or rating means have zero variance"))?;
    Ok(StanceSummary {
        respondents,
        correlation,
        group_rating_means: groups.into_iter().map(|(k, v)| (k, mean(&v).unwrap())).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub n: usize,
    pub stance_kappa: f64,
    pub subjectivity_kappa: f64,
}

/// Kappa between two annotators on the comments both annotated.
pub fn annotator_agreement(annotations: &[StanceAnnotation], a: &str, b: &str) -> Result<Agreement> {
    let pick = |who: &str| -> BTreeMap<&str, &StanceAnnotation> {
        annotations
            .iter()
            .filter(|x| x.annotator_id == who)
            .map(|x| (x.comment_id.as_str(), x))
            .collect()
    };
    let (ma, mb) = (pick(a), pick(b));
    let pairs: Vec<(&StanceAnnotation, &StanceAnnotation)> =
        ma.iter().filter_map(|(k, x)| mb.get(k).map(|y| (*x, *y))).collect();
    if pairs.is_empty() {
        return Err(Error::InsufficientData(format!(
            "annotators {a} and {b} share no comments"
        )));
    }
    let sa: Vec<Stance> = pairs.iter().map(|p| p.0.stance).collect();
    let sb: Vec<Stance> = pairs.iter().map(|p| p.1.stance).collect();
    let ja: Vec<bool> = pairs.iter().map(|p| p.0.subjective).collect();
    let jb: Vec<bool> = pairs.iter().map(|p| p.1.subjective).collect();
    Ok(Agreement {
        n: pairs.len(),
        stance_kappa: cohens_kappa(&sa, &sb)?,
        subjectivity_kappa: cohens_kappa(&ja, &jb)?,
    })
}
