//! Cronbach's alpha and the Spearman-Brown projection.

use crate::error::{Error, Result};

/// `2r / (1 + r)`: reliability of a test twice the length of one with reliability `r`.
pub fn spearman_brown(r: f64) -> Result<f64> {
    if !(r > -1.0 && r <= 1.0) {
        if r == -1.0 {
            return Err(Error::degenerate("Spearman-Brown is singular at r = -1"));
        }
        return Err(Error::validation(format!("correlation {r} outside (-1, 1]")));
    }
    Ok(2.0 * r / (1.0 + r))
}

/// `k/(k-1) · (1 - Σ var_j / var_total)` over a respondents × items matrix.
///
/// With `allow_missing`, every variance and covariance is computed on the
/// respondents who answered both items, and `var_total` is the sum of the
/// whole covariance matrix. Without it, any `None` is an error.
pub fn cronbach_alpha(matrix: &[Vec<Option<f64>>], allow_missing: bool) -> Result<f64> {
    let n = matrix.len();
    let k = matrix.first().map_or(0, Vec::len);
    if k < 2 {
        return Err(Error::validation(format!("alpha needs at least 2 items, got {k}")));
    }
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "alpha needs at least 3 respondents, got {n}"
        )));
    }
    if let Some(i) = matrix.iter().position(|r| r.len() != k) {
        return Err(Error::validation(format!(
            "row {i} has {} items, expected {k}",
            matrix[i].len()
        )));
    }
    if !allow_missing {
        if let Some(i) = matrix.iter().position(|r| r.iter().any(Option::is_none)) {
            return Err(Error::MissingData(format!("respondent row {i} has missing items")));
        }
    }
    let mut cov = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in a..k {
            let pairs: Vec<(f64, f64)> = matrix.iter().filter_map(|r| Some((r[a]?, r[b]?))).collect();
            if pairs.len() < 2 {
                return Err(Error::InsufficientData(format!(
                    "items {a} and {b} share fewer than 2 respondents"
                )));
            }
            let m = pairs.len() as f64;
            let ma = pairs.iter().map(|p| p.0).sum::<f64>() / m;
            let mb = pairs.iter().map(|p| p.1).sum::<f64>() / m;
            let c = pairs.iter().map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (m - 1.0);
            cov[a][b] = c;
            cov[b][a] = c;
        }
    }
    let item_var: f64 = (0..k).map(|j| cov[j][j]).sum();
    let total: f64 = cov.iter().flatten().sum();
    if !(total > 0.0) {
        return Err(Error::degenerate("total score variance is zero"));
    }
    let kf = k as f64;
    Ok(kf / (kf - 1.0) * (1.0 - item_var / total))
}

/// Alpha on a complete matrix.
pub fn cronbach_alpha_complete(matrix: &[Vec<f64>]) -> Result<f64> {
    let m: Vec<Vec<Option<f64>>> = matrix.iter().map(|r| r.iter().copied().map(Some).collect()).collect();
    cronbach_alpha(&m, false)
}
