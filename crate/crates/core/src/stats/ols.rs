//! Ordinary least squares with classical standard errors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::stats::design::Design;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub outcome: String,
    pub names: Vec<String>,
    pub labels: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub n: usize,
    pub df_resid: usize,
    pub r_squared: f64,
    pub rss: f64,
    pub residuals: Vec<f64>,
}

impl FitResult {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coef(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.coefficients[i])
    }

    pub fn se(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.std_errors[i])
    }
}

/// `*` p < 0.10, `**` p < 0.05, `***` p < 0.01.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}

/// Relative tolerance on a column's residual norm (after projecting out the
/// earlier columns) below which it counts as collinear.
const RANK_TOL: f64 = 1e-10;

/// Columns that are linear combinations of earlier columns, by Gram-Schmidt.
fn collinear_columns(x: &DMatrix<f64>) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut bad = Vec::new();
    for j in 0..x.ncols() {
        let col = x.column(j).into_owned();
        let norm = col.norm();
        let mut v = col.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let r = v.norm();
        if norm == 0.0 || r <= RANK_TOL * norm.max(1.0) {
            bad.push(j);
        } else {
            basis.push(v / r);
        }
    }
    bad
}

pub fn ols_fit(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<FitResult> {
    let (n, p) = x.shape();
    if y.len() != n || names.len() != p {
        return Err(Error::validation(format!(
            "design is {n}x{p}, outcome has {} rows, {} names",
            y.len(),
            names.len()
        )));
    }
    if n <= p {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {p} coefficients"
        )));
    }
    let bad = collinear_columns(x);
    if !bad.is_empty() {
        let which: Vec<&str> = bad.iter().map(|&j| names[j].as_str()).collect();
        return Err(Error::degenerate(format!(
            "design is rank deficient; collinear columns: {}",
            which.join(", ")
        )));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::degenerate("triangular solve failed"))?;
    let resid = y - x * &beta;
    let rss = resid.norm_squared();
    let df = n - p;
    let sigma2 = rss / df as f64;
    let rinv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::degenerate("triangular inverse failed"))?;
    let xtx_inv = &rinv * rinv.transpose();
    let se: Vec<f64> = (0..p).map(|j| (sigma2 * xtx_inv[(j, j)]).max(0.0).sqrt()).collect();
    let tdist = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| Error::degenerate(e.to_string()))?;
    let (t, pv): (Vec<f64>, Vec<f64>) = beta
        .iter()
        .zip(&se)
        .map(|(&b, &s)| {
            if s > 0.0 {
                let t = b / s;
                (t, 2.0 * (1.0 - tdist.cdf(t.abs())))
            } else if b == 0.0 {
                (f64::NAN, f64::NAN)
            } else {
                (f64::INFINITY.copysign(b), 0.0)
            }
        })
        .unzip();
    let ym = y.mean();
    let tss: f64 = y.iter().map(|v| (v - ym).powi(2)).sum();
    Ok(FitResult {
        model: String::new(),
        outcome: String::new(),
        names: names.to_vec(),
        labels: names.to_vec(),
        coefficients: beta.iter().copied().collect(),
        std_errors: se,
        t_values: t,
        p_values: pv,
        n,
        df_resid: df,
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else { f64::NAN },
        rss,
        residuals: resid.iter().copied().collect(),
    })
}

pub fn fit(design: &Design) -> Result<FitResult> {
    let mut f = ols_fit(&design.x, &design.y, &design.names)?;
    f.model = design.model.clone();
    f.outcome = design.outcome.clone();
    f.labels = design.labels.clone();
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = DMatrix::from_fn(5, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let y = DVector::from_iterator(5, (0..5).map(|i| 2.0 * i as f64));
        let f = ols_fit(&x, &y, &["c".into(), "x".into()]).unwrap();
        assert!((f.coefficients[1] - 2.0).abs() < 1e-12);
        assert!(f.coefficients[0].abs() < 1e-12);
        assert!(f.std_errors.iter().all(|s| *s < 1e-7));
    }

    #[test]
    fn names_collinear_column() {
        let x = DMatrix::from_fn(6, 3, |i, j| match j {
            0 => 1.0,
            1 => i as f64,
            _ => 3.0 * i as f64 + 1.0,
        });
        let y = DVector::from_element(6, 1.0);
        let err = ols_fit(&x, &y, &["c".into(), "a".into(), "b".into()]).unwrap_err();
        assert!(matches!(err, Error::Degenerate(m) if m.contains('b')));
    }

    #[test]
    fn star_bands() {
        assert_eq!(stars(0.005), "***");
        assert_eq!(stars(0.03), "**");
        assert_eq!(stars(0.07), "*");
        assert_eq!(stars(0.2), "");
    }
}
