//! Resampled reliability: split-half (without replacement, Spearman-Brown
//! adjusted) and test-retest (with replacement, unadjusted).
//!
//! Draw `d` uses its own generator, `SeededRng::with_stream(seed, d)`, so
//! draws run in parallel and the report does not depend on thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psychometrics::alpha::{cronbach_alpha_complete, spearman_brown};
use crate::rng::SeededRng;
use crate::sit::{loo_cell, loo_demean, RatingMatrix, Subset};
use crate::stats::describe::{mean, pearson, quantile_sorted};

pub const DEFAULT_DRAWS: usize = 9999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReliabilityMode {
    SplitHalf,
    TestRetest,
}

impl ReliabilityMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ReliabilityMode::SplitHalf => "split-half",
            ReliabilityMode::TestRetest => "test-retest",
        }
    }
}

impl std::str::FromStr for ReliabilityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "split-half" => Ok(ReliabilityMode::SplitHalf),
            "test-retest" => Ok(ReliabilityMode::TestRetest),
            _ => Err(Error::validation(format!("unknown reliability mode '{s}'"))),
        }
    }
}

/// How half scores are demeaned in split-half draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfDemeaning {
    /// Leave-one-out means recomputed from the ratings that fall in each half.
    #[default]
    WithinHalf,
    /// Demeaned values from the full run, averaged per half.
    FullRun,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliabilityOptions {
    pub draws: usize,
    pub seed: u64,
    pub demeaning: HalfDemeaning,
}

impl Default for ReliabilityOptions {
    fn default() -> Self {
        ReliabilityOptions {
            draws: DEFAULT_DRAWS,
            seed: 0,
            demeaning: HalfDemeaning::WithinHalf,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum ReliabilityInput<'a> {
    Ratings {
        matrix: &'a RatingMatrix,
        subset: Subset,
    },
    /// Complete respondents × items matrix; items play the role of images.
    Items(&'a [Vec<f64>]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub mode: ReliabilityMode,
    pub seed: u64,
    pub coefficients: Vec<f64>,
    /// Draw index of each coefficient.
    pub draw_indices: Vec<usize>,
    pub mean: f64,
    pub q025: f64,
    pub q975: f64,
    pub n_draws: usize,
    /// Draws with an undefined coefficient (a constant score series, or a
    /// half in which some image had a single rater).
    pub skipped: usize,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    image: usize,
    value: f64,
    full: f64,
    gender: bool,
}

struct Prepared {
    n_images: usize,
    rows: Vec<Vec<Cell>>,
}

fn prepare(input: ReliabilityInput) -> Result<Prepared> {
    match input {
        ReliabilityInput::Ratings { matrix, subset } => {
            let full = loo_demean(matrix)?;
            let rows: Vec<Vec<Cell>> = matrix
                .rows()
                .iter()
                .zip(&full)
                .map(|(r, d)| {
                    r.iter()
                        .zip(d)
                        .filter(|((j, _), _)| subset.admits(matrix.is_gender(*j)))
                        .map(|(&(j, x), &f)| Cell {
                            image: j,
                            value: x,
                            full: f,
                            gender: matrix.is_gender(j),
                        })
                        .collect()
                })
                .collect();
            Ok(Prepared {
                n_images: matrix.images().len(),
                rows,
            })
        }
        ReliabilityInput::Items(items) => {
            let k = items.first().map_or(0, Vec::len);
            if let Some(i) = items.iter().position(|r| r.len() != k) {
                return Err(Error::validation(format!(
                    "row {i} has {} items, expected {k}",
                    items[i].len()
                )));
            }
            if items.len() < 2 {
                return Err(Error::InsufficientData("need at least 2 respondents".into()));
            }
            let sums: Vec<f64> = (0..k).map(|j| items.iter().map(|r| r[j]).sum()).collect();
            let n = items.len();
            let rows = items
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .map(|(j, &x)| Cell {
                            image: j,
                            value: x,
                            full: loo_cell(x, sums[j], n),
                            gender: false,
                        })
                        .collect()
                })
                .collect();
            Ok(Prepared { n_images: k, rows })
        }
    }
}

/// Respondents × positions matrix of demeaned values (presentation order),
/// the item matrix that alpha is computed on for ratings.
pub fn position_matrix(matrix: &RatingMatrix, subset: Subset) -> Result<Vec<Vec<f64>>> {
    let p = prepare(ReliabilityInput::Ratings { matrix, subset })?;
    let k = p.rows.first().map_or(0, Vec::len);
    if let Some(i) = p.rows.iter().position(|r| r.len() != k) {
        return Err(Error::validation(format!(
            "respondent {} has {} ratings in the subset, others have {k}",
            matrix.respondents()[i],
            p.rows[i].len()
        )));
    }
    Ok(p.rows.iter().map(|r| r.iter().map(|c| c.full).collect()).collect())
}

/// Cronbach's alpha matching the resampling input.
pub fn alpha_for(input: ReliabilityInput) -> Result<f64> {
    match input {
        ReliabilityInput::Ratings { matrix, subset } => cronbach_alpha_complete(&position_matrix(matrix, subset)?),
        ReliabilityInput::Items(items) => cronbach_alpha_complete(items),
    }
}

fn summarize(mode: ReliabilityMode, opts: &ReliabilityOptions, draws: Vec<Option<f64>>) -> Result<ReliabilityReport> {
    let (draw_indices, coefficients): (Vec<usize>, Vec<f64>) =
        draws.iter().enumerate().filter_map(|(d, c)| c.map(|c| (d, c))).unzip();
    let skipped = draws.len() - coefficients.len();
    let mut sorted = coefficients.clone();
    sorted.sort_by(f64::total_cmp);
    let mean = mean(&coefficients)
        .ok_or_else(|| Error::InsufficientData(format!("all {} draws were degenerate", draws.len())))?;
    Ok(ReliabilityReport {
        mode,
        seed: opts.seed,
        n_draws: coefficients.len(),
        q025: quantile_sorted(&sorted, 0.025).unwrap(),
        q975: quantile_sorted(&sorted, 0.975).unwrap(),
        mean,
        coefficients,
        draw_indices,
        skipped,
    })
}

fn split_draw(p: &Prepared, seed: u64, draw: usize, demeaning: HalfDemeaning) -> Option<f64> {
    let mut rng = SeededRng::with_stream(seed, draw as u64);
    let mut in_first: Vec<Vec<bool>> = Vec::with_capacity(p.rows.len());
    for row in &p.rows {
        let mut order: Vec<usize> = (0..row.len()).collect();
        rng.shuffle(&mut order);
        let mut mask = vec![false; row.len()];
        for &k in &order[..row.len() / 2] {
            mask[k] = true;
        }
        in_first.push(mask);
    }
    let (mut a, mut b) = (Vec::with_capacity(p.rows.len()), Vec::with_capacity(p.rows.len()));
    match demeaning {
        HalfDemeaning::FullRun => {
            for (row, mask) in p.rows.iter().zip(&in_first) {
                let (mut sa, mut sb) = (0.0, 0.0);
                for (c, &m) in row.iter().zip(mask) {
                    if m {
                        sa += c.full;
                    } else {
                        sb += c.full;
                    }
                }
                let h = (row.len() / 2) as f64;
                a.push(sa / h);
                b.push(sb / h);
            }
        }
        HalfDemeaning::WithinHalf => {
            let mut tot = vec![[(0.0f64, 0usize); 2]; p.n_images];
            for (row, mask) in p.rows.iter().zip(&in_first) {
                for (c, &m) in row.iter().zip(mask) {
                    let t = &mut tot[c.image][usize::from(!m)];
                    t.0 += c.value;
                    t.1 += 1;
                }
            }
            for (row, mask) in p.rows.iter().zip(&in_first) {
                let (mut sa, mut sb) = (0.0, 0.0);
                for (c, &m) in row.iter().zip(mask) {
                    let (s, n) = tot[c.image][usize::from(!m)];
                    if n < 2 {
                        return None;
                    }
                    let v = loo_cell(c.value, s, n);
                    if m {
                        sa += v;
                    } else {
                        sb += v;
                    }
                }
                let h = (row.len() / 2) as f64;
                a.push(sa / h);
                b.push(sb / h);
            }
        }
    }
    let r = pearson(&a, &b)?;
    spearman_brown(r).ok()
}

pub fn split_half_reliability(input: ReliabilityInput, opts: ReliabilityOptions) -> Result<ReliabilityReport> {
    let p = prepare(input)?;
    if let Some(i) = p.rows.iter().position(|r| r.len() < 2 || r.len() % 2 != 0) {
        return Err(Error::validation(format!(
            "split-half needs an even number of items per respondent; row {i} has {}",
            p.rows[i].len()
        )));
    }
    let draws: Vec<Option<f64>> = (0..opts.draws)
        .into_par_iter()
        .map(|d| split_draw(&p, opts.seed, d, opts.demeaning))
        .collect();
    summarize(ReliabilityMode::SplitHalf, &opts, draws)
}

fn retest_draw(groups: &[[Vec<f64>; 2]], original: &[f64], seed: u64, draw: usize) -> Option<f64> {
    let mut rng = SeededRng::with_stream(seed, draw as u64);
    let sim: Vec<f64> = groups
        .iter()
        .map(|g| {
            let mut s = 0.0;
            let mut n = 0usize;
            for part in g {
                for _ in 0..part.len() {
                    s += part[rng.below(part.len() as u32) as usize];
                    n += 1;
                }
            }
            s / n as f64
        })
        .collect();
    pearson(&sim, original)
}

pub fn test_retest_reliability(input: ReliabilityInput, opts: ReliabilityOptions) -> Result<ReliabilityReport> {
    let p = prepare(input)?;
    // Resampling is stratified: Gender-STEM ratings are redrawn among
    // Gender-STEM ratings, the rest among the rest.
    let groups: Vec<[Vec<f64>; 2]> = p
        .rows
        .iter()
        .map(|r| {
            let other = r.iter().filter(|c| !c.gender).map(|c| c.full).collect();
            let gender = r.iter().filter(|c| c.gender).map(|c| c.full).collect();
            [other, gender]
        })
        .collect();
    if let Some(i) = groups.iter().position(|g| g[0].is_empty() && g[1].is_empty()) {
        return Err(Error::MissingData(format!("respondent row {i} has no ratings")));
    }
    let original: Vec<f64> = p
        .rows
        .iter()
        .map(|r| r.iter().map(|c| c.full).sum::<f64>() / r.len() as f64)
        .collect();
    let draws: Vec<Option<f64>> = (0..opts.draws)
        .into_par_iter()
        .map(|d| retest_draw(&groups, &original, opts.seed, d))
        .collect();
    summarize(ReliabilityMode::TestRetest, &opts, draws)
}

pub fn reliability(
    mode: ReliabilityMode,
    input: ReliabilityInput,
    opts: ReliabilityOptions,
) -> Result<ReliabilityReport> {
    match mode {
        ReliabilityMode::SplitHalf => split_half_reliability(input, opts),
        ReliabilityMode::TestRetest => test_retest_reliability(input, opts),
    }
}
