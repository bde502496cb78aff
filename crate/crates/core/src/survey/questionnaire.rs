//! Questionnaire pages: the six Likert scales followed by sociodemographics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psychometrics::scales::{ScaleDefinition, ScaleName};

pub const DEMOGRAPHICS_SECTION: &str = "demographics";

/// Birth macro-areas, in the order used for dummy coding.
pub const BIRTH_AREAS: [&str; 6] = ["NorthWest", "NorthEast", "Center", "South", "Islands", "Missing"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ItemKind {
    Likert { min: u8, max: u8 },
    Integer { min: i64, max: i64 },
    Binary,
    Category { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemDefinition {
    pub key: String,
    pub prompt: String,
    #[serde(flatten)]
    pub kind: ItemKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageDefinition {
    pub index: usize,
    pub section: String,
    pub items: Vec<ItemDefinition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnswerValue {
    Number(f64),
    Text(String),
}

impl AnswerValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AnswerValue::Number(x) => Some(*x),
            AnswerValue::Text(s) => s.parse().ok(),
        }
    }

    pub fn render(&self) -> String {
        match self {
            AnswerValue::Number(x) => format!("{x}"),
            AnswerValue::Text(s) => s.clone(),
        }
    }
}

/// Item key → answer; `None` records a skipped item.
pub type PageAnswers = BTreeMap<String, Option<AnswerValue>>;

pub fn scale_page(index: usize, scale: &ScaleDefinition) -> PageDefinition {
    PageDefinition {
        index,
        section: scale.scale_name.key().to_string(),
        items: scale
            .item_prompts
            .iter()
            .enumerate()
            .map(|(i, p)| ItemDefinition {
                key: (i + 1).to_string(),
                prompt: p.clone(),
                kind: ItemKind::Likert { min: 1, max: 5 },
            })
            .collect(),
    }
}

pub fn demographics_page(index: usize) -> PageDefinition {
    let item = |key: &str, prompt: &str, kind: ItemKind| ItemDefinition {
        key: key.into(),
        prompt: prompt.into(),
        kind,
    };
    PageDefinition {
        index,
        section: DEMOGRAPHICS_SECTION.into(),
        items: vec![
            item("age", "Age", ItemKind::Integer { min: 18, max: 99 }),
            item("gender", "Gender (0 = male, 1 = female)", ItemKind::Binary),
            item(
                "like_teaching",
                "How much do you like to teach? (1 = not at all, 7 = completely)",
                ItemKind::Integer { min: 1, max: 7 },
            ),
            item("master", "Master's degree or higher", ItemKind::Binary),
            item("disability_training", "Training on disability", ItemKind::Binary),
            item("married", "Married", ItemKind::Binary),
            item("teaching_italian", "Teaches Italian", ItemKind::Binary),
            item("teaching_maths", "Teaches mathematics", ItemKind::Binary),
            item(
                "birth_area",
                "Macro-area of birth",
                ItemKind::Category {
                    levels: BIRTH_AREAS.iter().map(|s| s.to_string()).collect(),
                },
            ),
        ],
    }
}

pub fn build_pages(scales: &[ScaleDefinition]) -> Vec<PageDefinition> {
    let mut pages: Vec<PageDefinition> = scales.iter().enumerate().map(|(i, s)| scale_page(i, s)).collect();
    pages.push(demographics_page(pages.len()));
    pages
}

fn check_item(item: &ItemDefinition, value: &AnswerValue) -> Result<()> {
    let bad = || Error::validation(format!("invalid answer '{}' for item {}", value.render(), item.key));
    match &item.kind {
        ItemKind::Likert { min, max } => {
            let x = value.as_f64().ok_or_else(bad)?;
            if x.fract() != 0.0 || x < *min as f64 || x > *max as f64 {
                return Err(bad());
            }
        }
        ItemKind::Integer { min, max } => {
            let x = value.as_f64().ok_or_else(bad)?;
            if x.fract() != 0.0 || x < *min as f64 || x > *max as f64 {
                return Err(bad());
            }
        }
        ItemKind::Binary => {
            let x = value.as_f64().ok_or_else(bad)?;
            if x != 0.0 && x != 1.0 {
                return Err(bad());
            }
        }
        ItemKind::Category { levels } => match value {
            AnswerValue::Text(s) if levels.iter().any(|l| l == s) => {}
            _ => return Err(bad()),
        },
    }
    Ok(())
}

/// Every item on the page must appear exactly once (possibly as skipped) and
/// no other keys are accepted.
pub fn validate_answers(page: &PageDefinition, answers: &PageAnswers) -> Result<()> {
    for key in answers.keys() {
        if !page.items.iter().any(|i| &i.key == key) {
            return Err(Error::validation(format!(
                "unknown item '{key}' on page {} ({})",
                page.index, page.section
            )));
        }
    }
    for item in &page.items {
        match answers.get(&item.key) {
            None => {
                return Err(Error::validation(format!(
                    "item '{}' missing on page {} (send null to skip)",
                    item.key, page.index
                )))
            }
            Some(None) => {}
            Some(Some(v)) => check_item(item, v)?,
        }
    }
    Ok(())
}

pub fn section_scale(section: &str) -> Option<ScaleName> {
    ScaleName::from_key(section)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psychometrics::scales::default_scales;

    #[test]
    fn pages_cover_scales_and_demographics() {
        let pages = build_pages(&default_scales());
        assert_eq!(pages.len(), 7);
        assert_eq!(pages[6].section, DEMOGRAPHICS_SECTION);
        assert_eq!(pages[4].items.len(), 9);
    }

    #[test]
    fn answer_validation() {
        let page = scale_page(0, &default_scales()[1]);
        let mut a: PageAnswers = (1..=4)
            .map(|i| (i.to_string(), Some(AnswerValue::Number(4.0))))
            .collect();
        validate_answers(&page, &a).unwrap();
        a.insert("2".into(), None);
        validate_answers(&page, &a).unwrap();
        a.insert("3".into(), Some(AnswerValue::Number(6.0)));
        assert!(validate_answers(&page, &a).is_err());
        a.insert("3".into(), Some(AnswerValue::Number(3.0)));
        a.insert("email".into(), Some(AnswerValue::Text("x@y".into())));
        assert!(validate_answers(&page, &a).is_err());
    }

    #[test]
    fn category_levels() {
        let page = demographics_page(6);
        let item = page.items.iter().find(|i| i.key == "birth_area").unwrap();
        assert!(check_item(item, &AnswerValue::Text("Center".into())).is_ok());
        assert!(check_item(item, &AnswerValue::Text("Mars".into())).is_err());
    }
}
