//! One-factor principal-axis factoring on the item correlation matrix.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSolution {
    pub loadings: Vec<f64>,
    /// `1 - loading^2` per item.
    pub uniquenesses: Vec<f64>,
    /// Leading eigenvalue of the final reduced correlation matrix.
    pub eigenvalue: f64,
    pub n_iterations: usize,
    pub converged: bool,
    /// Set when some communality reached 1 and was clamped.
    pub heywood: bool,
}

impl FactorSolution {
    pub fn communalities(&self) -> Vec<f64> {
        self.loadings.iter().map(|l| l * l).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorOptions {
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for FactorOptions {
    fn default() -> Self {
        FactorOptions {
            tolerance: DEFAULT_TOLERANCE,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Column means and sample SDs of a respondents × items matrix.
fn column_moments(rows: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    if n < 2 {
        return Err(Error::InsufficientData(format!("{n} respondents, need at least 2")));
    }
    if let Some(r) = rows.iter().position(|r| r.len() != k) {
        return Err(Error::validation(format!(
            "row {r} has {} items, expected {k}",
            rows[r].len()
        )));
    }
    let mut means = vec![0.0; k];
    for r in rows {
        for (m, x) in means.iter_mut().zip(r) {
            *m += x;
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);
    let mut sds = vec![0.0; k];
    for r in rows {
        for j in 0..k {
            let d = r[j] - means[j];
            sds[j] += d * d;
        }
    }
    sds.iter_mut().for_each(|s| *s = (*s / (n as f64 - 1.0)).sqrt());
    let flat: Vec<usize> = (0..k).filter(|&j| !(sds[j] > 0.0)).collect();
    if !flat.is_empty() {
        return Err(Error::degenerate(format!("items with zero variance: {flat:?}")));
    }
    Ok((means, sds))
}

fn z_matrix(rows: &[Vec<f64>], means: &[f64], sds: &[f64]) -> DMatrix<f64> {
    let k = means.len();
    DMatrix::from_fn(rows.len(), k, |i, j| (rows[i][j] - means[j]) / sds[j])
}

/// Pearson correlation matrix of the item columns.
pub fn correlation_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let (means, sds) = column_moments(rows)?;
    let z = z_matrix(rows, &means, &sds);
    let mut r = z.transpose() * &z / (rows.len() as f64 - 1.0);
    for j in 0..r.nrows() {
        r[(j, j)] = 1.0;
    }
    Ok(r)
}

fn inverse(r: &DMatrix<f64>) -> DMatrix<f64> {
    r.clone()
        .try_inverse()
        .filter(|m| m.iter().all(|x| x.is_finite()))
        .unwrap_or_else(|| {
            r.clone()
                .pseudo_inverse(1e-12)
                .expect("pseudo-inverse of a symmetric matrix")
        })
}

fn top_eigenpair(m: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let (i, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned())
}

pub fn factor_single(rows: &[Vec<f64>]) -> Result<FactorSolution> {
    factor_single_with(rows, FactorOptions::default())
}

pub fn factor_single_with(rows: &[Vec<f64>], opts: FactorOptions) -> Result<FactorSolution> {
    let k = rows.first().map_or(0, Vec::len);
    if k < 3 {
        return Err(Error::validation(format!(
            "factor analysis needs at least 3 items, got {k}"
        )));
    }
    let r = correlation_matrix(rows)?;
    factor_from_correlation(&r, opts)
}

/// Iterated principal-axis extraction of one factor from a correlation matrix.
/// Starts from squared multiple correlations and stops when no communality
/// moves by more than `opts.tolerance`.
pub fn factor_from_correlation(r: &DMatrix<f64>, opts: FactorOptions) -> Result<FactorSolution> {
    let k = r.nrows();
    let rinv = inverse(r);
    let mut h2: Vec<f64> = (0..k).map(|j| (1.0 - 1.0 / rinv[(j, j)]).clamp(0.0, 1.0)).collect();
    let mut heywood = false;
    let mut converged = false;
    let mut iterations = 0;
    let mut loadings = vec![0.0; k];
    let mut eigenvalue = 0.0;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut reduced = r.clone();
        for j in 0..k {
            reduced[(j, j)] = h2[j];
        }
        let (lambda, v) = top_eigenpair(&reduced);
        eigenvalue = lambda;
        let scale = lambda.max(0.0).sqrt();
        let mut change: f64 = 0.0;
        for j in 0..k {
            let mut l = v[j] * scale;
            if l.abs() >= 1.0 {
                heywood = true;
                l = l.signum();
            }
            loadings[j] = l;
            change = change.max((l * l - h2[j]).abs());
            h2[j] = l * l;
        }
        if change < opts.tolerance {
            converged = true;
            break;
        }
    }
    if loadings.iter().sum::<f64>() < 0.0 {
        loadings.iter_mut().for_each(|l| *l = -*l);
    }
    Ok(FactorSolution {
        uniquenesses: loadings.iter().map(|l| 1.0 - l * l).collect(),
        loadings,
        eigenvalue,
        n_iterations: iterations,
        converged,
        heywood,
    })
}

/// Regression (Thomson) factor scores: `z · R⁻¹ λ` with `z` the column
/// z-scores of `rows`.
pub fn factor_scores(rows: &[Vec<f64>], solution: &FactorSolution) -> Result<Vec<f64>> {
    let (means, sds) = column_moments(rows)?;
    if means.len() != solution.loadings.len() {
        return Err(Error::validation(format!(
            "{} items but {} loadings",
            means.len(),
            solution.loadings.len()
        )));
    }
    let z = z_matrix(rows, &means, &sds);
    let mut r = z.transpose() * &z / (rows.len() as f64 - 1.0);
    for j in 0..r.nrows() {
        r[(j, j)] = 1.0;
    }
    let w = inverse(&r) * DVector::from_column_slice(&solution.loadings);
    Ok((z * w).iter().copied().collect())
}
