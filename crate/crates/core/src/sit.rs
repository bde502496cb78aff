//! Stereotype Identification Test scoring.
//!
//! Each rating is compared with the mean rating the same image received from
//! everybody else; a respondent's raw score is the average of those
//! differences, and the reported score standardizes it over the cohort.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::describe::{mean, std_dev, Variance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingScale {
    pub min: f64,
    pub max: f64,
}

impl Default for RatingScale {
    fn default() -> Self {
        RatingScale { min: 1.0, max: 5.0 }
    }
}

/// One respondent's ratings in presentation order.
#[derive(Debug, Clone, PartialEq)]
pub struct RespondentRatings {
    pub respondent_id: String,
    pub ratings: Vec<(String, f64)>,
}

/// Sparse respondent × image ratings.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingMatrix {
    scale: RatingScale,
    images: Vec<String>,
    gender: Vec<bool>,
    respondents: Vec<String>,
    /// Per respondent: `(image index, rating)` in presentation order.
    rows: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    #[default]
    All,
    GenderStemOnly,
}

impl Subset {
    pub fn admits(self, is_gender: bool) -> bool {
        match self {
            Subset::All => true,
            Subset::GenderStemOnly => is_gender,
        }
    }
}

impl RatingMatrix {
    /// `images` lists every image with its Gender-STEM flag.
    pub fn new(images: Vec<(String, bool)>, respondents: Vec<RespondentRatings>) -> Result<Self> {
        Self::with_scale(RatingScale::default(), images, respondents)
    }

    pub fn with_scale(
        scale: RatingScale,
        images: Vec<(String, bool)>,
        respondents: Vec<RespondentRatings>,
    ) -> Result<Self> {
        let mut index = HashMap::new();
        for (k, (id, _)) in images.iter().enumerate() {
            if index.insert(id.clone(), k).is_some() {
                return Err(Error::validation(format!("duplicate image id {id}")));
            }
        }
        let mut seen = HashSet::new();
        let mut ids = Vec::with_capacity(respondents.len());
        let mut rows = Vec::with_capacity(respondents.len());
        for r in respondents {
            if !seen.insert(r.respondent_id.clone()) {
                return Err(Error::validation(format!("duplicate respondent {}", r.respondent_id)));
            }
            let mut row = Vec::with_capacity(r.ratings.len());
            let mut rated = HashSet::new();
            for (img, x) in r.ratings {
                let &j = index
                    .get(&img)
                    .ok_or_else(|| Error::validation(format!("unknown image {img} for {}", r.respondent_id)))?;
                if !rated.insert(j) {
                    return Err(Error::validation(format!("{} rated {img} twice", r.respondent_id)));
                }
                if !(x >= scale.min && x <= scale.max) {
                    return Err(Error::validation(format!(
                        "rating {x} outside {}..{} ({}, {img})",
                        scale.min, scale.max, r.respondent_id
                    )));
                }
                row.push((j, x));
            }
            ids.push(r.respondent_id);
            rows.push(row);
        }
        let (images, gender) = images.into_iter().unzip();
        Ok(RatingMatrix {
            scale,
            images,
            gender,
            respondents: ids,
            rows,
        })
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn images(&self) -> &[String] {
        &self.images
    }

    pub fn is_gender(&self, image: usize) -> bool {
        self.gender[image]
    }

    pub fn respondents(&self) -> &[String] {
        &self.respondents
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn n_ratings(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Checks the completed-cohort shape: `per_respondent` ratings each,
    /// and every Gender-STEM image rated by every respondent.
    pub fn check_complete(&self, per_respondent: usize) -> Result<()> {
        let n_gender = self.gender.iter().filter(|g| **g).count();
        for (id, row) in self.respondents.iter().zip(&self.rows) {
            if row.len() != per_respondent {
                return Err(Error::validation(format!(
                    "{id} has {} ratings, expected {per_respondent}",
                    row.len()
                )));
            }
            let g = row.iter().filter(|(j, _)| self.gender[*j]).count();
            if g != n_gender {
                return Err(Error::validation(format!(
                    "{id} rated {g} of {n_gender} Gender-STEM images"
                )));
            }
        }
        Ok(())
    }

    /// Keeps only the listed image columns (ratings of other images are dropped).
    pub fn restrict(&self, keep: impl Fn(&str, bool) -> bool) -> RatingMatrix {
        let kept: Vec<usize> = (0..self.images.len())
            .filter(|&j| keep(&self.images[j], self.gender[j]))
            .collect();
        let mut remap = vec![usize::MAX; self.images.len()];
        for (new, &old) in kept.iter().enumerate() {
            remap[old] = new;
        }
        RatingMatrix {
            scale: self.scale,
            images: kept.iter().map(|&j| self.images[j].clone()).collect(),
            gender: kept.iter().map(|&j| self.gender[j]).collect(),
            respondents: self.respondents.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| {
                    r.iter()
                        .filter(|(j, _)| remap[*j] != usize::MAX)
                        .map(|&(j, x)| (remap[j], x))
                        .collect()
                })
                .collect(),
        }
    }

    /// Per image: (sum of ratings, number of raters).
    pub fn image_totals(&self) -> Vec<(f64, usize)> {
        let mut t = vec![(0.0, 0usize); self.images.len()];
        for row in &self.rows {
            for &(j, x) in row {
                t[j].0 += x;
                t[j].1 += 1;
            }
        }
        t
    }
}

/// Leave-one-out demeaned value of one cell.
#[inline]
pub fn loo_cell(rating: f64, image_sum: f64, raters: usize) -> f64 {
    rating - (image_sum - rating) / (raters as f64 - 1.0)
}

/// Demeaned ratings, aligned with [`RatingMatrix::rows`].
pub fn loo_demean(matrix: &RatingMatrix) -> Result<Vec<Vec<f64>>> {
    let totals = matrix.image_totals();
    let lonely: Vec<&str> = totals
        .iter()
        .enumerate()
        .filter(|(_, t)| t.1 == 1)
        .map(|(j, _)| matrix.images[j].as_str())
        .collect();
    if !lonely.is_empty() {
        return Err(Error::degenerate(format!(
            "images with a single rater: {}",
            lonely.join(", ")
        )));
    }
    Ok(matrix
        .rows
        .iter()
        .map(|r| r.iter().map(|&(j, x)| loo_cell(x, totals[j].0, totals[j].1)).collect())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SitScore {
    pub respondent_id: String,
    /// Mean demeaned rating, in rating units.
    pub tilde: f64,
    /// `tilde` standardized over the cohort.
    pub standardized: f64,
    pub n_images: usize,
}

/// Per-respondent mean of the demeaned cells within `subset`.
pub fn tilde_scores(matrix: &RatingMatrix, demeaned: &[Vec<f64>], subset: Subset) -> Result<Vec<(f64, usize)>> {
    matrix
        .rows
        .iter()
        .zip(demeaned)
        .zip(&matrix.respondents)
        .map(|((row, d), id)| {
            let vals: Vec<f64> = row
                .iter()
                .zip(d)
                .filter(|((j, _), _)| subset.admits(matrix.gender[*j]))
                .map(|(_, v)| *v)
                .collect();
            mean(&vals)
                .map(|m| (m, vals.len()))
                .ok_or_else(|| Error::MissingData(format!("{id} has no ratings in subset {subset:?}")))
        })
        .collect()
}

pub fn sit_scores(matrix: &RatingMatrix, subset: Subset) -> Result<Vec<SitScore>> {
    sit_scores_with(matrix, subset, Variance::Sample)
}

pub fn sit_scores_with(matrix: &RatingMatrix, subset: Subset, sd_kind: Variance) -> Result<Vec<SitScore>> {
    let demeaned = loo_demean(matrix)?;
    let tilde = tilde_scores(matrix, &demeaned, subset)?;
    let values: Vec<f64> = tilde.iter().map(|t| t.0).collect();
    let mu = mean(&values).ok_or_else(|| Error::InsufficientData("no respondents".into()))?;
    let sd = std_dev(&values, sd_kind).ok_or_else(|| Error::InsufficientData("too few respondents".into()))?;
    if !(sd > 1e-12) {
        return Err(Error::degenerate("SIT scores have zero variance"));
    }
    Ok(matrix
        .respondents
        .iter()
        .zip(tilde)
        .map(|(id, (t, n))| SitScore {
            respondent_id: id.clone(),
            tilde: t,
            standardized: (t - mu) / sd,
            n_images: n,
        })
        .collect())
}

/// Maps a 0..5 pilot rating onto the 1..5 scale: `0.8·x + 1`.
pub fn rescale_pilot(rating: f64) -> Result<f64> {
    if !(0.0..=5.0).contains(&rating) {
        return Err(Error::validation(format!("pilot rating {rating} outside 0..5")));
    }
    Ok(0.8 * rating + 1.0)
}

/// Ratings grouped by respondent id, handy for tests and loaders.
pub fn group_ratings<I>(triples: I) -> Vec<RespondentRatings>
where
    I: IntoIterator<Item = (String, String, f64)>,
{
    let mut order = Vec::new();
    let mut by: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
    for (r, img, x) in triples {
        if !by.contains_key(&r) {
            order.push(r.clone());
        }
        by.entry(r).or_default().push((img, x));
    }
    order
        .into_iter()
        .map(|r| RespondentRatings {
            ratings: by.remove(&r).unwrap(),
            respondent_id: r,
        })
        .collect()
}
