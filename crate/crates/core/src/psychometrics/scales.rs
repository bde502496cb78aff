//! Questionnaire scales and the trait indices built from them.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psychometrics::factor::{factor_scores, factor_single, FactorSolution};
use crate::stats::describe::{standardize, Variance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScaleName {
    GrowthMindset,
    ImplicitBiasAwareness,
    GenderStemStereotypes,
    LocusOfControl,
    SocialValues,
    InclusiveTeaching,
}

impl ScaleName {
    pub const ALL: [ScaleName; 6] = [
        ScaleName::GrowthMindset,
        ScaleName::ImplicitBiasAwareness,
        ScaleName::GenderStemStereotypes,
        ScaleName::LocusOfControl,
        ScaleName::SocialValues,
        ScaleName::InclusiveTeaching,
    ];

    /// Column / section key used in files.
    pub fn key(self) -> &'static str {
        match self {
            ScaleName::GrowthMindset => "growth_mindset",
            ScaleName::ImplicitBiasAwareness => "implicit_bias_awareness",
            ScaleName::GenderStemStereotypes => "gender_stem_stereotypes",
            ScaleName::LocusOfControl => "locus_of_control",
            ScaleName::SocialValues => "social_values",
            ScaleName::InclusiveTeaching => "inclusive_teaching",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ScaleName::GrowthMindset => "Growth Mindset",
            ScaleName::ImplicitBiasAwareness => "Implicit Bias Awareness",
            ScaleName::GenderStemStereotypes => "Gender-STEM Stereotypes",
            ScaleName::LocusOfControl => "Locus of Control",
            ScaleName::SocialValues => "Social Values",
            ScaleName::InclusiveTeaching => "Inclusive Teaching",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.key() == key)
    }

    pub fn item_count(self) -> usize {
        match self {
            ScaleName::GrowthMindset => 5,
            ScaleName::ImplicitBiasAwareness => 4,
            ScaleName::GenderStemStereotypes => 6,
            ScaleName::LocusOfControl => 5,
            ScaleName::SocialValues => 9,
            ScaleName::InclusiveTeaching => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleDefinition {
    pub scale_name: ScaleName,
    pub item_prompts: Vec<String>,
    /// Zero-based indices of items scored as `6 - answer`.
    pub reverse_keyed: BTreeSet<usize>,
}

impl ScaleDefinition {
    pub fn validate(&self) -> Result<()> {
        let n = self.item_prompts.len();
        if n != self.scale_name.item_count() {
            return Err(Error::validation(format!(
                "{} needs {} items, got {n}",
                self.scale_name.label(),
                self.scale_name.item_count()
            )));
        }
        if let Some(&k) = self.reverse_keyed.iter().find(|&&k| k >= n) {
            return Err(Error::validation(format!(
                "reverse-keyed index {k} out of range for {}",
                self.scale_name.label()
            )));
        }
        Ok(())
    }

    /// Applies reverse keying to one raw 1..5 answer.
    pub fn keyed(&self, item: usize, answer: f64) -> f64 {
        if self.reverse_keyed.contains(&item) {
            6.0 - answer
        } else {
            answer
        }
    }
}

fn def(name: ScaleName, prompts: &[&str], reverse: &[usize]) -> ScaleDefinition {
    ScaleDefinition {
        scale_name: name,
        item_prompts: prompts.iter().map(|s| s.to_string()).collect(),
        reverse_keyed: reverse.iter().map(|i| i - 1).collect(),
    }
}

/// The six shipped scales. Keying defaults orient each index so that higher
/// means more growth mindset, more awareness, stronger Gender-STEM
/// stereotypes, more internal locus of control, more progressive values and
/// more inclusive practice. They are configuration, not measurement facts.
pub fn default_scales() -> Vec<ScaleDefinition> {
    vec![
        def(
            ScaleName::GrowthMindset,
            &[
                "Everyone has a certain level of intelligence and cannot do much to change it.",
                "I like challenging training courses so I can learn new things.",
                "Intelligence is a personal trait that cannot be changed much.",
                "I like using what I learn in training courses in my classroom lessons.",
                "You can learn new things, but you cannot change your intelligence.",
            ],
            &[1, 3, 5],
        ),
        def(
            ScaleName::ImplicitBiasAwareness,
            &[
                "The way teaching is shaped in schools can contribute to reinforcing conscious or unconscious biases.",
                "It is important to address the issue of biases and inequalities in daily teaching activities.",
                "In my daily teaching activities, I often address issues related to inequality.",
                "I feel that I have the necessary tools to address the issue of biases and inequalities in my teaching practice.",
            ],
            &[],
        ),
        def(
            ScaleName::GenderStemStereotypes,
            &[
                "Girls are naturally better than male students in humanities subjects.",
                "Male students are naturally better than female students in scientific and mathematical subjects.",
                "Propensity for foreign language communication is typical of girls.",
                "Boys need more time than girls to understand complex or abstract concepts.",
                "More needs to be done to encourage female students to engage in STEM disciplines.",
                "Male students are more undisciplined than female students.",
            ],
            &[5],
        ),
        def(
            ScaleName::LocusOfControl,
            &[
                "If I put enough effort and time into it, I can implement a new teaching strategy even with students who are disinclined to learn new things.",
                "When a student gets a better grade than usual generally it is because they have studied more, not because I have tried to explain the lesson better.",
                "If one day I find myself scolding a student more often than usual, it is probably because I was a little less tolerant that day, not because that student was behaving worse than usual.",
                "When a student is able to learn a new concept quickly, it is probably because the student was able to understand it, not because I was able to explain it better.",
                "When a new student fails to make friends with his classmates, it is probably because I have not encouraged other students enough to be nicer to the newcomer.",
            ],
            &[2, 4],
        ),
        def(
            ScaleName::SocialValues,
            &[
                "When jobs are scarce, men have more right than women to have jobs.",
                "When work is scarce, employees should give priority to locals over immigrants.",
                "That a woman earns more than her husband can cause problems.",
                "Homosexual parents are just as good as heterosexual parents.",
                "It is a duty to society to have children.",
                "Children in adulthood have an obligation to ensure long-term support for their parents.",
                "People who do not work are lazy.",
                "Work is a duty towards society.",
                "Work should always be a priority, even if it means having less free time.",
            ],
            &[1, 2, 3, 5, 6, 7, 8, 9],
        ),
        def(
            ScaleName::InclusiveTeaching,
            &[
                "Critical thinking development activities.",
                "Oral exam.",
                "Cooperative / Collaborative teaching.",
                "Sharing learning objectives before the lesson begins.",
                "Summative assessment tests.",
            ],
            &[],
        ),
    ]
}

/// How factor scores are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexScoring {
    /// Regression scores rescaled to mean 0, SD 1 over the cohort.
    #[default]
    Standardized,
    /// Regression scores as they come out of the Thomson weights; their SD
    /// is the multiple correlation of the factor with the items, below 1.
    Raw,
}

/// One respondent's answers to one scale, in item order; `None` = skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleResponses {
    pub respondent_id: String,
    pub answers: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraitIndex {
    pub scale: ScaleName,
    pub solution: FactorSolution,
    /// `(respondent_id, score)` for respondents with complete answers.
    pub scores: Vec<(String, f64)>,
    /// Respondents dropped for missing items.
    pub dropped: Vec<String>,
}

/// Reverse-keys, extracts one factor, and scores each complete respondent.
pub fn trait_index(scale: &ScaleDefinition, responses: &[ScaleResponses], scoring: IndexScoring) -> Result<TraitIndex> {
    scale.validate()?;
    let k = scale.item_prompts.len();
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    for r in responses {
        if r.answers.len() != k {
            return Err(Error::validation(format!(
                "{}: respondent {} answered {} of {k} items",
                scale.scale_name.label(),
                r.respondent_id,
                r.answers.len()
            )));
        }
        if r.answers.iter().any(Option::is_none) {
            dropped.push(r.respondent_id.clone());
            continue;
        }
        let row: Vec<f64> = r
            .answers
            .iter()
            .enumerate()
            .map(|(j, a)| {
                let a = a.unwrap();
                if !(1.0..=5.0).contains(&a) {
                    Err(Error::validation(format!(
                        "{}: answer {a} outside 1..5 for respondent {}",
                        scale.scale_name.label(),
                        r.respondent_id
                    )))
                } else {
                    Ok(scale.keyed(j, a))
                }
            })
            .collect::<Result<_>>()?;
        ids.push(r.respondent_id.clone());
        rows.push(row);
    }
    let solution = factor_single(&rows).map_err(|e| match e {
        Error::Degenerate(m) => Error::Degenerate(format!("{}: {m}", scale.scale_name.label())),
        other => other,
    })?;
    let raw = factor_scores(&rows, &solution)?;
    let values = match scoring {
        IndexScoring::Raw => raw,
        IndexScoring::Standardized => standardize(&raw, Variance::Sample)?,
    };
    Ok(TraitIndex {
        scale: scale.scale_name,
        solution,
        scores: ids.into_iter().zip(values).collect(),
        dropped,
    })
}

/// All six indices. `responses[s]` holds the answers for `scales[s]`.
pub fn trait_indices(
    scales: &[ScaleDefinition],
    responses: &[Vec<ScaleResponses>],
    scoring: IndexScoring,
) -> Result<Vec<TraitIndex>> {
    if scales.len() != responses.len() {
        return Err(Error::validation("one response set per scale is required"));
    }
    scales
        .iter()
        .zip(responses)
        .map(|(s, r)| trait_index(s, r, scoring))
        .collect()
}
