//! Plain-text report over a data directory: rating distribution, SIT
//! distributions, reliability histograms, smoothed associations and the
//! regression tables.

use std::fmt::Write as _;
use std::sync::Arc;

use sit_core::psychometrics::reliability::{HalfDemeaning, ReliabilityMode};
use sit_core::scores::{analysis_table, score_sessions, ScoreOptions, ScoreSet};
use sit_core::sit::{RatingMatrix, RespondentRatings, Subset};
use sit_core::stats::describe::{histogram, mean, quantile, std_dev, Variance};
use sit_core::stats::models::builtin_group;
use sit_core::stats::{kernel_smooth, SmoothCurve};
use sit_core::survey::{Protocol, Session};

use crate::commands::{regress, render_fits, run_reliability, write_draws, ReliabilityRun};
use crate::dataset::{images_of, DataDir};
use crate::error::Result;
use crate::files::{fmt_f64, write_records};

pub struct ReportOptions {
    pub draws: usize,
    pub seed: u64,
}

pub struct Report {
    pub text: String,
    /// Side files (name, bytes): reliability draws and smoothed curves.
    pub files: Vec<(String, Vec<u8>)>,
}

const BAR: usize = 40;

fn bars(rows: &[(String, usize)], out: &mut String) {
    let max = rows.iter().map(|r| r.1).max().unwrap_or(0).max(1);
    let total: usize = rows.iter().map(|r| r.1).sum::<usize>().max(1);
    let lw = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    for (label, n) in rows {
        let w = (n * BAR).div_ceil(max);
        let _ = writeln!(
            out,
            "  {label:>lw$} | {:<BAR$} {n:>6} ({:.1}%)",
            "#".repeat(w),
            100.0 * *n as f64 / total as f64
        );
    }
}

fn hist_rows(xs: &[f64], bins: usize, lo: f64, hi: f64) -> Vec<(String, usize)> {
    let h = histogram(xs, bins, lo, hi);
    // Enough decimals to tell neighbouring edges apart.
    let width = (hi - lo) / bins.max(1) as f64;
    let dp = if width > 0.0 {
        (-width.log10()).ceil().max(0.0) as usize + 1
    } else {
        2
    };
    let dp = dp.clamp(2, 6);
    h.counts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            (
                format!("[{:>w$.dp$},{:>w$.dp$})", h.edges[i], h.edges[i + 1], w = dp + 4),
                *c,
            )
        })
        .collect()
}

fn describe(name: &str, xs: &[f64], out: &mut String) {
    let _ = writeln!(
        out,
        "{name}: n = {}, mean = {:.4}, sd = {:.4}, median = {:.4}",
        xs.len(),
        mean(xs).unwrap_or(f64::NAN),
        std_dev(xs, Variance::Sample).unwrap_or(f64::NAN),
        quantile(xs, 0.5).unwrap_or(f64::NAN)
    );
}

fn curve_csv(c: &SmoothCurve) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let h = ["x", "fit", "lower", "upper"].map(String::from);
    let rows = (0..c.x.len()).map(|i| {
        vec![
            fmt_f64(c.x[i]),
            fmt_f64(c.fit[i]),
            fmt_f64(c.lower[i]),
            fmt_f64(c.upper[i]),
        ]
    });
    write_records(&mut buf, &h, rows)?;
    Ok(buf)
}

fn cohort_matrix(sessions: &[Session], scores: &ScoreSet, images: Vec<(String, bool)>) -> Result<RatingMatrix> {
    let keep: std::collections::HashSet<&str> = scores.rows.iter().map(|r| r.session_id.as_str()).collect();
    let resp = sessions
        .iter()
        .filter(|s| keep.contains(s.id()))
        .map(|s| RespondentRatings {
            respondent_id: s.id().to_string(),
            ratings: s
                .ratings()
                .iter()
                .map(|r| (r.image_id.clone(), r.rating as f64))
                .collect(),
        })
        .collect();
    Ok(RatingMatrix::new(images, resp)?)
}

pub fn build_report(dir: &DataDir, opts: &ReportOptions) -> Result<Report> {
    let pool = dir.pool()?;
    let sessions = dir.sessions(Arc::new(Protocol::default()))?;
    let images = images_of(&pool);
    let scores = score_sessions(&sessions, &images, dir.pos()?.as_ref(), ScoreOptions::default())?;
    let mut t = String::new();
    let mut files = Vec::new();

    let _ = writeln!(t, "SAMPLE");
    let _ = writeln!(
        t,
        "sessions: {}, complete: {}, scored: {}, IAT-excluded: {}, incomplete: {}\n",
        sessions.len(),
        sessions.iter().filter(|s| s.is_complete()).count(),
        scores.rows.len(),
        scores.iat_excluded.len(),
        scores.incomplete.len()
    );

    let ratings: Vec<u8> = sessions
        .iter()
        .flat_map(|s| s.ratings().iter().map(|r| r.rating))
        .collect();
    let _ = writeln!(t, "RATING DISTRIBUTION (all sessions)");
    let rows: Vec<(String, usize)> = (1..=5u8)
        .map(|k| (k.to_string(), ratings.iter().filter(|r| **r == k).count()))
        .collect();
    bars(&rows, &mut t);
    let _ = writeln!(t, "\nMEDIAN RATING TIME BY RATING (ms)");
    for k in 1..=5u8 {
        let times: Vec<f64> = sessions
            .iter()
            .flat_map(|s| {
                s.ratings()
                    .iter()
                    .filter(|r| r.rating == k)
                    .map(|r| r.rating_time_ms as f64)
            })
            .collect();
        let _ = writeln!(t, "  {k}: {:.0}", quantile(&times, 0.5).unwrap_or(f64::NAN));
    }

    let _ = writeln!(t, "\nSIT DISTRIBUTIONS");
    let sit: Vec<f64> = scores.rows.iter().map(|r| r.sit).collect();
    let gsit: Vec<f64> = scores.rows.iter().filter_map(|r| r.gender_sit).collect();
    for (name, xs) in [("SIT", &sit), ("Gender-SIT", &gsit)] {
        describe(name, xs, &mut t);
        bars(&hist_rows(xs, 14, -3.5, 3.5), &mut t);
        t.push('\n');
    }

    let _ = writeln!(t, "RELIABILITY ({} draws, seed {})", opts.draws, opts.seed);
    let matrix = cohort_matrix(&sessions, &scores, images)?;
    for mode in [ReliabilityMode::SplitHalf, ReliabilityMode::TestRetest] {
        for (subset, sname) in [(Subset::All, "all"), (Subset::GenderStemOnly, "gender")] {
            let run = ReliabilityRun {
                mode,
                subset,
                draws: opts.draws,
                seed: opts.seed,
                demeaning: HalfDemeaning::WithinHalf,
            };
            let (r, alpha) = run_reliability(&matrix, &run)?;
            let _ = writeln!(
                t,
                "{} / {sname}: mean {:.4}, 95% interval [{:.4}, {:.4}], Cronbach alpha {:.4}, skipped draws {}",
                mode.as_str(),
                r.mean,
                r.q025,
                r.q975,
                alpha,
                r.skipped
            );
            let lo = r.coefficients.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = r.coefficients.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo < hi {
                bars(&hist_rows(&r.coefficients, 12, lo, hi), &mut t);
            }
            t.push('\n');
            let mut buf = Vec::new();
            write_draws(&r, &mut buf)?;
            files.push((format!("reliability_{}_{sname}.csv", mode.as_str()), buf));
        }
    }

    let table = analysis_table(&scores)?;
    let _ = writeln!(t, "SMOOTHED ASSOCIATIONS (local linear, Epanechnikov kernel)");
    let iat_z = sit_core::scores::standardized_iat(&scores)?;
    let pairs: [(&str, &str, Vec<f64>); 3] = [
        ("sit_vs_iat", "IAT score (z)", iat_z),
        (
            "sit_vs_lexical_density",
            "lexical density",
            table
                .numeric_values("lexical_density")?
                .iter()
                .map(|v| v.unwrap_or(f64::NAN))
                .collect(),
        ),
        (
            "sit_vs_gender_stem_stereotypes",
            "Gender-STEM stereotypes index",
            table
                .numeric_values("gender_stem_stereotypes")?
                .iter()
                .map(|v| v.unwrap_or(f64::NAN))
                .collect(),
        ),
    ];
    for (file, label, xs) in pairs {
        let (x, y): (Vec<f64>, Vec<f64>) = xs
            .iter()
            .zip(&sit)
            .filter(|(x, _)| x.is_finite())
            .map(|(x, y)| (*x, *y))
            .unzip();
        match kernel_smooth(&x, &y, None, None) {
            Ok(c) => {
                let _ = writeln!(t, "SIT on {label} (bandwidth {:.4}):", c.bandwidth);
                // grid points with too few neighbours have no local fit
                for i in (0..c.x.len()).step_by(10).filter(|&i| c.fit[i].is_finite()) {
                    let _ = writeln!(
                        t,
                        "  x = {:>8.3}  fit = {:>7.3}  [{:>7.3}, {:>7.3}]",
                        c.x[i], c.fit[i], c.lower[i], c.upper[i]
                    );
                }
                files.push((format!("smooth_{file}.csv"), curve_csv(&c)?));
            }
            Err(e) => {
                let _ = writeln!(t, "SIT on {label}: not available ({e})");
            }
        }
    }
    t.push('\n');

    for (group, title) in [
        ("table2", "SIT SCORE AND IAT REVELATION"),
        ("table3", "SIT AND IAT SCORES"),
        ("framing", "FRAMING ON SIT"),
        ("robustness", "ALTERNATIVE SIT SCORES"),
    ] {
        let specs = builtin_group(group).expect("built-in group");
        match regress(&table, &specs) {
            Ok(fits) => t.push_str(&render_fits(title, &fits)),
            Err(e) => {
                let _ = writeln!(t, "{title}: not estimable ({e})");
            }
        }
        t.push('\n');
    }
    Ok(Report { text: t, files })
}
