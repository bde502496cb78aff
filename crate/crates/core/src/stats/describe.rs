//! Small descriptive statistics shared across modules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Denominator used for variances and standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variance {
    /// `n - 1`
    #[default]
    Sample,
    /// `n`
    Population,
}

impl Variance {
    fn denominator(self, n: usize) -> f64 {
        match self {
            Variance::Sample => n as f64 - 1.0,
            Variance::Population => n as f64,
        }
    }

    fn min_len(self) -> usize {
        match self {
            Variance::Sample => 2,
            Variance::Population => 1,
        }
    }
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

pub fn variance(xs: &[f64], kind: Variance) -> Option<f64> {
    if xs.len() < kind.min_len() {
        return None;
    }
    let m = mean(xs)?;
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some(ss / kind.denominator(xs.len()))
}

pub fn std_dev(xs: &[f64], kind: Variance) -> Option<f64> {
    variance(xs, kind).map(f64::sqrt)
}

/// `(x - mean) / sd` for every element. Fails on zero or undefined spread.
pub fn standardize(xs: &[f64], kind: Variance) -> Result<Vec<f64>> {
    let m = mean(xs).ok_or_else(|| Error::InsufficientData("nothing to standardize".into()))?;
    let sd = std_dev(xs, kind).ok_or_else(|| Error::InsufficientData("too few values to standardize".into()))?;
    if !(sd > 0.0) {
        return Err(Error::degenerate("zero variance, cannot standardize"));
    }
    Ok(xs.iter().map(|x| (x - m) / sd).collect())
}

pub fn covariance(xs: &[f64], ys: &[f64], kind: Variance) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < kind.min_len() {
        return None;
    }
    let mx = mean(xs)?;
    let my = mean(ys)?;
    let s: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(s / kind.denominator(xs.len()))
}

/// Pearson product-moment correlation, `None` when either side has no spread.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Empirical quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7, the R default). `sorted` must be ascending.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

pub fn quantile(xs: &[f64], p: f64) -> Option<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, p)
}

/// Equal-width histogram over `[lo, hi]`; the last bin is closed on the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn histogram(xs: &[f64], bins: usize, lo: f64, hi: f64) -> Histogram {
    let bins = bins.max(1);
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0; bins];
    if width > 0.0 {
        for &x in xs {
            if x < lo || x > hi || x.is_nan() {
                continue;
            }
            let b = (((x - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
    }
    Histogram { edges, counts }
}
