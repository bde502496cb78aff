//! Image tags mapped to protected characteristics, and per-image coverage.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::survey::pool::ImageCard;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Characteristic {
    Gender,
    Race,
    SocialOrigin,
    Religion,
    Disability,
    Age,
}

impl Characteristic {
    pub const ALL: [Characteristic; 6] = [
        Characteristic::Gender,
        Characteristic::Race,
        Characteristic::SocialOrigin,
        Characteristic::Religion,
        Characteristic::Disability,
        Characteristic::Age,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Characteristic::Gender => "gender",
            Characteristic::Race => "race",
            Characteristic::SocialOrigin => "social_origin",
            Characteristic::Religion => "religion",
            Characteristic::Disability => "disability",
            Characteristic::Age => "age",
        }
    }
}

impl std::str::FromStr for Characteristic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        Characteristic::ALL
            .into_iter()
            .find(|c| c.as_str() == norm)
            .ok_or_else(|| Error::validation(format!("unknown characteristic '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagCategoryProbs {
    pub tag: String,
    pub probs: BTreeMap<Characteristic, f64>,
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

pub type TagClasses = BTreeMap<String, Option<Characteristic>>;

/// A tag gets the category whose probability strictly exceeds `threshold`;
/// with thresholds below 0.5 several may, and the largest wins (ties go to
/// the earlier category).
pub fn classify_tags(probs: &[TagCategoryProbs], threshold: f64) -> Result<TagClasses> {
    let mut out = TagClasses::new();
    for p in probs {
        if let Some((c, v)) = p.probs.iter().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::validation(format!(
                "tag {}: probability {v} for {} outside [0,1]",
                p.tag,
                c.as_str()
            )));
        }
        let best = p.probs.iter().filter(|(_, v)| **v > threshold).fold(
            None::<(Characteristic, f64)>,
            |acc, (c, v)| match acc {
                Some((_, bv)) if bv >= *v => acc,
                _ => Some((*c, *v)),
            },
        );
        out.insert(p.tag.clone(), best.map(|b| b.0));
    }
    Ok(out)
}

/// Manual corrections win over the classifier.
pub fn apply_overrides(classes: &mut TagClasses, overrides: &[(String, Option<Characteristic>)]) {
    for (tag, c) in overrides {
        classes.insert(tag.clone(), *c);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageTagStat {
    pub image_id: String,
    pub n_tags: usize,
    pub n_protected: usize,
    pub distinct_characteristics: usize,
    /// `n_protected / n_tags`; 0 for untagged images.
    pub proportion: f64,
    pub per_characteristic: BTreeMap<Characteristic, usize>,
    pub no_tags: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolTagSummary {
    pub images: usize,
    pub untagged: Vec<String>,
    /// Means over tagged images only.
    pub mean_tags: f64,
    pub mean_protected: f64,
    pub mean_proportion: f64,
    pub min_protected: usize,
    pub max_protected: usize,
    /// Tagged images with at least one tag of each characteristic.
    pub images_per_characteristic: BTreeMap<Characteristic, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagStats {
    pub images: Vec<ImageTagStat>,
    pub pool: PoolTagSummary,
}

pub fn image_tag_stats(pool: &[ImageCard], classes: &TagClasses) -> TagStats {
    let images: Vec<ImageTagStat> = pool
        .iter()
        .map(|card| {
            let mut per: BTreeMap<Characteristic, usize> = BTreeMap::new();
            for t in &card.tags {
                if let Some(Some(c)) = classes.get(t) {
                    *per.entry(*c).or_default() += 1;
                }
            }
            let n_protected = per.values().sum();
            let n_tags = card.tags.len();
            ImageTagStat {
                image_id: card.image_id.clone(),
                n_tags,
                n_protected,
                distinct_characteristics: per.len(),
                proportion: if n_tags > 0 {
                    n_protected as f64 / n_tags as f64
                } else {
                    0.0
                },
                per_characteristic: per,
                no_tags: n_tags == 0,
            }
        })
        .collect();
    let tagged: Vec<&ImageTagStat> = images.iter().filter(|s| !s.no_tags).collect();
    let m = tagged.len().max(1) as f64;
    let mut per_char = BTreeMap::new();
    for c in Characteristic::ALL {
        per_char.insert(
            c,
            tagged.iter().filter(|s| s.per_characteristic.contains_key(&c)).count(),
        );
    }
    let pool = PoolTagSummary {
        images: images.len(),
        untagged: images
            .iter()
            .filter(|s| s.no_tags)
            .map(|s| s.image_id.clone())
            .collect(),
        mean_tags: tagged.iter().map(|s| s.n_tags as f64).sum::<f64>() / m,
        mean_protected: tagged.iter().map(|s| s.n_protected as f64).sum::<f64>() / m,
        mean_proportion: tagged.iter().map(|s| s.proportion).sum::<f64>() / m,
        min_protected: tagged.iter().map(|s| s.n_protected).min().unwrap_or(0),
        max_protected: tagged.iter().map(|s| s.n_protected).max().unwrap_or(0),
        images_per_characteristic: per_char,
    };
    TagStats { images, pool }
}

/// Tags that occur in the pool but were never classified.
pub fn unclassified_tags(pool: &[ImageCard], classes: &TagClasses) -> BTreeSet<String> {
    pool.iter()
        .flat_map(|c| c.tags.iter())
        .filter(|t| !classes.contains_key(*t))
        .cloned()
        .collect()
}
