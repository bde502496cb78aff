//! Local-linear kernel regression with an Epanechnikov kernel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::describe::{quantile_sorted, std_dev, Variance};

pub const DEFAULT_GRID: usize = 101;
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothCurve {
    pub bandwidth: f64,
    pub x: Vec<f64>,
    /// NaN where fewer than two distinct points fall inside the window.
    pub fit: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

fn epanechnikov(u: f64) -> f64 {
    if u.abs() < 1.0 {
        0.75 * (1.0 - u * u)
    } else {
        0.0
    }
}

/// `2.34 · min(sd, IQR/1.349) · n^(-1/5)`; falls back to the SD when the IQR is 0.
pub fn rule_of_thumb(sorted_x: &[f64]) -> Option<f64> {
    let sd = std_dev(sorted_x, Variance::Sample)?;
    let iqr = quantile_sorted(sorted_x, 0.75)? - quantile_sorted(sorted_x, 0.25)?;
    let spread = if iqr > 0.0 { sd.min(iqr / 1.349) } else { sd };
    (spread > 0.0).then(|| 2.34 * spread * (sorted_x.len() as f64).powf(-0.2))
}

/// Evaluates the smooth on `grid`, or on `DEFAULT_GRID` evenly spaced
/// points spanning the data when `grid` is `None`. The 95% band uses the
/// kernel-weighted residual variance around the local line.
pub fn kernel_smooth(x: &[f64], y: &[f64], bandwidth: Option<f64>, grid: Option<&[f64]>) -> Result<SmoothCurve> {
    if x.len() != y.len() {
        return Err(Error::validation("x and y differ in length"));
    }
    if x.len() < 10 {
        return Err(Error::InsufficientData(format!("{} points, need at least 10", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::validation("non-finite input"));
    }
    let mut pts: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    if lo == hi {
        return Err(Error::degenerate("all x values are identical"));
    }
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::validation(format!("bandwidth {h} must be positive"))),
        None => rule_of_thumb(&xs).ok_or_else(|| Error::degenerate("zero spread in x"))?,
    };
    let grid: Vec<f64> = match grid {
        Some(g) => g.to_vec(),
        None => (0..DEFAULT_GRID)
            .map(|k| lo + (hi - lo) * k as f64 / (DEFAULT_GRID - 1) as f64)
            .collect(),
    };
    let mut fit = Vec::with_capacity(grid.len());
    let mut lower = Vec::with_capacity(grid.len());
    let mut upper = Vec::with_capacity(grid.len());
    for &x0 in &grid {
        let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(xi, yi) in &pts {
            let d = xi - x0;
            let w = epanechnikov(d / h);
            if w > 0.0 {
                s0 += w;
                s1 += w * d;
                s2 += w * d * d;
                t0 += w * yi;
                t1 += w * d * yi;
            }
        }
        let det = s0 * s2 - s1 * s1;
        if !(det > 1e-12 * s0 * s2.max(f64::MIN_POSITIVE)) || s0 == 0.0 {
            fit.push(f64::NAN);
            lower.push(f64::NAN);
            upper.push(f64::NAN);
            continue;
        }
        let a = (s2 * t0 - s1 * t1) / det;
        let b = (s0 * t1 - s1 * t0) / det;
        let (mut rss, mut sl2) = (0.0, 0.0);
        for &(xi, yi) in &pts {
            let d = xi - x0;
            let w = epanechnikov(d / h);
            if w > 0.0 {
                let r = yi - a - b * d;
                rss += w * r * r;
                let l = w * (s2 - d * s1) / det;
                sl2 += l * l;
            }
        }
        let half = Z95 * (rss / s0 * sl2).sqrt();
        fit.push(a);
        lower.push(a - half);
        upper.push(a + half);
    }
    Ok(SmoothCurve {
        bandwidth: h,
        x: grid,
        fit,
        lower,
        upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_curve() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let y = vec![3.0; 50];
        let c = kernel_smooth(&x, &y, None, None).unwrap();
        for k in 0..c.x.len() {
            if c.fit[k].is_finite() {
                assert!((c.fit[k] - 3.0).abs() < 1e-9);
                assert!((c.upper[k] - c.lower[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn identity_is_reproduced() {
        let x: Vec<f64> = (0..200).map(|i| i as f64 / 199.0).collect();
        let c = kernel_smooth(&x, &x, None, None).unwrap();
        for (gx, f) in c.x.iter().zip(&c.fit) {
            if (0.1..=0.9).contains(gx) {
                assert!((gx - f).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn identical_x() {
        let x = vec![1.0; 20];
        let y: Vec<f64> = (0..20).map(f64::from).collect();
        assert!(matches!(kernel_smooth(&x, &y, None, None), Err(Error::Degenerate(_))));
    }
}
