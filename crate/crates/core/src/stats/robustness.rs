//! Alternative SIT scorings used as robustness checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psychometrics::factor::{factor_scores, factor_single};
use crate::psychometrics::reliability::position_matrix;
use crate::sit::{loo_demean, sit_scores, RatingMatrix, Subset};
use crate::stats::describe::{mean, standardize, std_dev, Variance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessScores {
    pub respondent_ids: Vec<String>,
    pub standard: Vec<f64>,
    /// Demeaned cells divided by the rating SD of their image.
    pub sd_adjusted: Vec<f64>,
    /// One-factor regression scores over the respondents × positions
    /// matrix of demeaned ratings.
    pub factor: Vec<f64>,
}

pub fn sd_adjusted_scores(matrix: &RatingMatrix) -> Result<Vec<f64>> {
    let demeaned = loo_demean(matrix)?;
    let mut per_image: Vec<Vec<f64>> = vec![Vec::new(); matrix.images().len()];
    for row in matrix.rows() {
        for &(j, x) in row {
            per_image[j].push(x);
        }
    }
    let sds: Vec<Option<f64>> = per_image.iter().map(|v| std_dev(v, Variance::Sample)).collect();
    let flat: Vec<&str> = sds
        .iter()
        .enumerate()
        .filter(|(j, s)| !per_image[*j].is_empty() && !s.is_some_and(|s| s > 0.0))
        .map(|(j, _)| matrix.images()[j].as_str())
        .collect();
    if !flat.is_empty() {
        return Err(Error::degenerate(format!(
            "images with zero rating SD: {}",
            flat.join(", ")
        )));
    }
    let tilde: Vec<f64> = matrix
        .rows()
        .iter()
        .zip(&demeaned)
        .map(|(row, d)| {
            let v: Vec<f64> = row.iter().zip(d).map(|(&(j, _), x)| x / sds[j].unwrap()).collect();
            mean(&v).unwrap_or(f64::NAN)
        })
        .collect();
    standardize(&tilde, Variance::Sample)
}

pub fn factor_sit_scores(matrix: &RatingMatrix) -> Result<Vec<f64>> {
    let positions = position_matrix(matrix, Subset::All)?;
    let solution = factor_single(&positions)?;
    standardize(&factor_scores(&positions, &solution)?, Variance::Sample)
}

pub fn robustness_scores(matrix: &RatingMatrix) -> Result<RobustnessScores> {
    let standard = sit_scores(matrix, Subset::All)?;
    Ok(RobustnessScores {
        respondent_ids: standard.iter().map(|s| s.respondent_id.clone()).collect(),
        standard: standard.iter().map(|s| s.standardized).collect(),
        sd_adjusted: sd_adjusted_scores(matrix)?,
        factor: factor_sit_scores(matrix)?,
    })
}
