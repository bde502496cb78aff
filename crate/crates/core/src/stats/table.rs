//! Side-by-side regression tables.

use crate::stats::design::INTERCEPT;
use crate::stats::ols::{stars, FitResult};

/// One row per (model, term), in display order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefRow<'a> {
    pub model: &'a str,
    pub term: &'a str,
    pub label: &'a str,
    pub estimate: f64,
    pub std_error: f64,
    pub t: f64,
    pub p: f64,
    pub stars: &'static str,
}

/// Terms in order of first appearance, intercept last.
pub fn term_order(fits: &[FitResult]) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    for f in fits {
        for (n, l) in f.names.iter().zip(&f.labels) {
            if n != INTERCEPT && !out.iter().any(|(m, _)| m == n) {
                out.push((n.clone(), l.clone()));
            }
        }
    }
    if fits.iter().any(|f| f.index(INTERCEPT).is_some()) {
        out.push((INTERCEPT.to_string(), "Constant".to_string()));
    }
    out
}

pub fn coef_rows(fits: &[FitResult]) -> Vec<CoefRow<'_>> {
    let mut rows = Vec::new();
    for f in fits {
        for (i, n) in f.names.iter().enumerate() {
            rows.push(CoefRow {
                model: &f.model,
                term: n,
                label: &f.labels[i],
                estimate: f.coefficients[i],
                std_error: f.std_errors[i],
                t: f.t_values[i],
                p: f.p_values[i],
                stars: stars(f.p_values[i]),
            });
        }
    }
    rows
}

/// Plain-text table: estimates with stars, standard errors in parentheses
/// underneath, then N and R².
pub fn render_text(title: &str, fits: &[FitResult]) -> String {
    let terms = term_order(fits);
    let lw = terms.iter().map(|(_, l)| l.chars().count()).chain([12]).max().unwrap() + 2;
    let cw = fits.iter().map(|f| f.model.chars().count()).chain([12]).max().unwrap() + 2;
    let rule = "=".repeat(lw + cw * fits.len());
    let mut s = String::new();
    s.push_str(title);
    s.push('\n');
    s.push_str(&rule);
    s.push('\n');
    s.push_str(&format!("{:lw$}", ""));
    for f in fits {
        s.push_str(&format!("{:>cw$}", f.model));
    }
    s.push('\n');
    s.push_str(&format!("{:lw$}", ""));
    for f in fits {
        s.push_str(&format!("{:>cw$}", f.outcome));
    }
    s.push('\n');
    s.push_str(&"-".repeat(lw + cw * fits.len()));
    s.push('\n');
    for (name, label) in &terms {
        s.push_str(&format!("{label:lw$}"));
        for f in fits {
            let cell = f
                .index(name)
                .map(|i| format!("{:.3}{}", f.coefficients[i], stars(f.p_values[i])))
                .unwrap_or_default();
            s.push_str(&format!("{cell:>cw$}"));
        }
        s.push('\n');
        s.push_str(&format!("{:lw$}", ""));
        for f in fits {
            let cell = f
                .index(name)
                .map(|i| format!("({:.3})", f.std_errors[i]))
                .unwrap_or_default();
            s.push_str(&format!("{cell:>cw$}"));
        }
        s.push('\n');
    }
    s.push_str(&"-".repeat(lw + cw * fits.len()));
    s.push('\n');
    s.push_str(&format!("{:lw$}", "N"));
    for f in fits {
        s.push_str(&format!("{:>cw$}", f.n));
    }
    s.push('\n');
    s.push_str(&format!("{:lw$}", "R-squared"));
    for f in fits {
        s.push_str(&format!("{:>cw$.3}", f.r_squared));
    }
    s.push('\n');
    s.push_str(&rule);
    s.push('\n');
    s.push_str("Standard errors in parentheses. * p<0.10, ** p<0.05, *** p<0.01\n");
    s
}
