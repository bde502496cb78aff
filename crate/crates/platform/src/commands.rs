//! The analysis behind each CLI subcommand, as functions over readers and
//! writers so tests can drive them without a process boundary.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::Serialize;
use sit_core::iat::{score_respondent, scored_only, IatConfig, IatTrial};
use sit_core::psychometrics::reliability::{
    alpha_for, reliability, HalfDemeaning, ReliabilityInput, ReliabilityMode, ReliabilityOptions, ReliabilityReport,
};
use sit_core::psychometrics::scales::{default_scales, trait_indices, IndexScoring, ScaleResponses, TraitIndex};
use sit_core::psychometrics::{cronbach_alpha_complete, factor_single, FactorSolution};
use sit_core::sit::{group_ratings, sit_scores, RatingMatrix, Subset};
use sit_core::stats::table::render_text;
use sit_core::stats::{build_design, fit, stars, DataTable, DesignSpec, FitResult};
use sit_core::survey::flow::{CommentEvent, RatingEvent};
use sit_core::survey::ImageCard;
use sit_core::text::metrics::{respondent_profiles, word_frequencies, AnnotatedComment, AnnotatedToken};
use sit_core::text::stance::{annotator_agreement, comment_id, stance_aggregate, StanceAnnotation, StanceObservation};
use sit_core::text::tags::{
    apply_overrides, classify_tags, image_tag_stats, Characteristic, TagCategoryProbs, TagStats,
};
use sit_core::Error;

use crate::error::{PlatformError, Result};
use crate::files::{fmt_f64, write_records, QuestionnaireRow};

fn strings(h: &[&str]) -> Vec<String> {
    h.iter().map(|s| s.to_string()).collect()
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Image list for a rating matrix: the manifest when given, otherwise every
/// rated image, none flagged Gender-STEM.
pub fn images_for(ratings: &[RatingEvent], manifest: Option<&[ImageCard]>) -> Vec<(String, bool)> {
    match manifest {
        Some(cards) => cards.iter().map(|c| (c.image_id.clone(), c.is_gender_stem)).collect(),
        None => ratings
            .iter()
            .map(|r| r.image_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(|i| (i, false))
            .collect(),
    }
}

/// Ratings as a matrix; `keep` restricts to the listed sessions.
pub fn rating_matrix(
    ratings: &[RatingEvent],
    manifest: Option<&[ImageCard]>,
    keep: Option<&BTreeSet<String>>,
) -> Result<RatingMatrix> {
    let triples = ratings
        .iter()
        .filter(|r| keep.is_none_or(|k| k.contains(&r.session_id)))
        .map(|r| (r.session_id.clone(), r.image_id.clone(), r.rating as f64));
    Ok(RatingMatrix::new(
        images_for(ratings, manifest),
        group_ratings(triples),
    )?)
}

pub const SIT_HEADER: &[&str] = &[
    "session_id",
    "n_rated",
    "sit_tilde",
    "sit",
    "gender_sit_tilde",
    "gender_sit",
];

/// SIT and Gender-SIT scores over every respondent in the ratings.
pub fn score_sit<W: Write>(matrix: &RatingMatrix, out: W) -> Result<()> {
    let all = sit_scores(matrix, Subset::All)?;
    let has_gender = (0..matrix.images().len()).any(|j| matrix.is_gender(j));
    let gender = if has_gender {
        Some(sit_scores(matrix, Subset::GenderStemOnly)?)
    } else {
        None
    };
    let rows = all.iter().enumerate().map(|(i, s)| {
        let g = gender.as_ref().map(|g| &g[i]);
        vec![
            s.respondent_id.clone(),
            s.n_images.to_string(),
            fmt_f64(s.tilde),
            fmt_f64(s.standardized),
            opt(g.map(|g| g.tilde)),
            opt(g.map(|g| g.standardized)),
        ]
    });
    write_records(out, &strings(SIT_HEADER), rows)
}

pub const IAT_HEADER: &[&str] = &[
    "session_id",
    "d_score",
    "mean_congruent_ms",
    "mean_incongruent_ms",
    "n_congruent",
    "n_incongruent",
    "excluded",
    "exclusion_reason",
];

/// D-scores per session. Sessions whose score is undefined get an empty
/// `d_score` and reason `degenerate`.
pub fn score_iat<W: Write>(trials: &[IatTrial], config: &IatConfig, out: W) -> Result<()> {
    let mut by: BTreeMap<&str, Vec<IatTrial>> = BTreeMap::new();
    let mut order = Vec::new();
    for t in trials {
        if !by.contains_key(t.session_id.as_str()) {
            order.push(t.session_id.as_str());
        }
        by.entry(&t.session_id).or_default().push(t.clone());
    }
    let mut rows = Vec::new();
    for id in order {
        let scored: Vec<IatTrial> = scored_only(&by[id], config).into_iter().cloned().collect();
        match score_respondent(&scored, config) {
            Ok(s) => rows.push(vec![
                id.to_string(),
                fmt_f64(s.d_score),
                fmt_f64(s.mean_congruent_ms),
                fmt_f64(s.mean_incongruent_ms),
                s.n_congruent.to_string(),
                s.n_incongruent.to_string(),
                s.excluded.to_string(),
                s.exclusion_reason.map(|r| r.as_str().to_string()).unwrap_or_default(),
            ]),
            Err(Error::Degenerate(_)) | Err(Error::InsufficientData(_)) => rows.push(vec![
                id.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "true".into(),
                "degenerate".into(),
            ]),
            Err(e) => return Err(e.into()),
        }
    }
    write_records(out, &strings(IAT_HEADER), rows)
}

/// The six trait indices from long-format questionnaire rows.
pub fn indices(rows: &[QuestionnaireRow], scoring: IndexScoring) -> Result<(Vec<String>, Vec<TraitIndex>)> {
    let scales = default_scales();
    let mut sessions: Vec<String> = Vec::new();
    // scale -> session -> item answers
    let mut answers: Vec<BTreeMap<String, Vec<Option<f64>>>> = vec![BTreeMap::new(); scales.len()];
    for r in rows {
        if !sessions.contains(&r.session_id) {
            sessions.push(r.session_id.clone());
        }
        let Some(s) = scales.iter().position(|s| s.scale_name.key() == r.section) else {
            continue;
        };
        let k = scales[s].item_prompts.len();
        let item: usize = r.item.parse().ok().filter(|i| (1..=k).contains(i)).ok_or_else(|| {
            PlatformError::format(
                "questionnaire",
                format!("{}: no item '{}' in {}", r.session_id, r.item, r.section),
            )
        })?;
        let slot = answers[s].entry(r.session_id.clone()).or_insert_with(|| vec![None; k]);
        slot[item - 1] = r.answer().and_then(|a| a.as_f64());
    }
    let responses: Vec<Vec<ScaleResponses>> = answers
        .into_iter()
        .map(|m| {
            m.into_iter()
                .map(|(respondent_id, answers)| ScaleResponses { respondent_id, answers })
                .collect()
        })
        .collect();
    Ok((sessions, trait_indices(&scales, &responses, scoring)?))
}

pub fn write_indices<W: Write>(sessions: &[String], idx: &[TraitIndex], out: W) -> Result<()> {
    let maps: Vec<BTreeMap<&str, f64>> = idx
        .iter()
        .map(|t| t.scores.iter().map(|(id, v)| (id.as_str(), *v)).collect())
        .collect();
    let mut header = vec!["session_id".to_string()];
    header.extend(idx.iter().map(|t| t.scale.key().to_string()));
    let rows = sessions.iter().map(|s| {
        std::iter::once(s.clone())
            .chain(maps.iter().map(|m| opt(m.get(s.as_str()).copied())))
            .collect()
    });
    write_records(out, &header, rows)
}

pub fn write_loadings<W: Write>(idx: &[TraitIndex], out: W) -> Result<()> {
    let rows = idx.iter().flat_map(|t| {
        t.solution
            .loadings
            .iter()
            .zip(&t.solution.uniquenesses)
            .enumerate()
            .map(move |(i, (l, u))| vec![t.scale.key().to_string(), (i + 1).to_string(), fmt_f64(*l), fmt_f64(*u)])
    });
    write_records(out, &strings(&["scale", "item", "loading", "uniqueness"]), rows)
}

/// A wide numeric matrix; a leading `session_id` or `respondent_id`
/// column is skipped.
pub fn read_items<R: Read>(r: R, name: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rd = csv::ReaderBuilder::new().from_reader(r);
    let header: Vec<String> = rd
        .headers()
        .map_err(|e| PlatformError::format(name, e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let skip = usize::from(matches!(
        header.first().map(String::as_str),
        Some("session_id" | "respondent_id")
    ));
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| PlatformError::format(name, e.to_string()))?;
        let row = rec
            .iter()
            .skip(skip)
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| PlatformError::format(name, format!("row {}: '{c}' is not a number", i + 2)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header[skip..].to_vec(), rows))
}

pub fn alpha_items(items: &[Vec<f64>]) -> Result<f64> {
    Ok(cronbach_alpha_complete(items)?)
}

pub fn alpha_ratings(matrix: &RatingMatrix, subset: Subset) -> Result<f64> {
    Ok(alpha_for(ReliabilityInput::Ratings { matrix, subset })?)
}

pub fn factor(items: &[Vec<f64>]) -> Result<FactorSolution> {
    Ok(factor_single(items)?)
}

pub fn write_factor<W: Write>(names: &[String], s: &FactorSolution, out: W) -> Result<()> {
    let rows = names
        .iter()
        .zip(s.loadings.iter().zip(&s.uniquenesses))
        .map(|(n, (l, u))| vec![n.clone(), fmt_f64(*l), fmt_f64(*u)]);
    write_records(out, &strings(&["item", "loading", "uniqueness"]), rows)
}

pub struct ReliabilityRun {
    pub mode: ReliabilityMode,
    pub subset: Subset,
    pub draws: usize,
    pub seed: u64,
    pub demeaning: HalfDemeaning,
}

pub fn run_reliability(matrix: &RatingMatrix, run: &ReliabilityRun) -> Result<(ReliabilityReport, f64)> {
    let input = ReliabilityInput::Ratings {
        matrix,
        subset: run.subset,
    };
    let opts = ReliabilityOptions {
        draws: run.draws,
        seed: run.seed,
        demeaning: run.demeaning,
    };
    let report = reliability(run.mode, input, opts)?;
    let alpha = alpha_for(input)?;
    Ok((report, alpha))
}

pub fn write_draws<W: Write>(r: &ReliabilityReport, out: W) -> Result<()> {
    let rows = r
        .draw_indices
        .iter()
        .zip(&r.coefficients)
        .map(|(d, c)| vec![d.to_string(), fmt_f64(*c)]);
    write_records(out, &strings(&["draw", "coefficient"]), rows)
}

#[derive(Serialize)]
pub struct ReliabilitySummary {
    pub mode: ReliabilityMode,
    pub subset: Subset,
    pub seed: u64,
    pub draws: usize,
    pub n_draws: usize,
    pub skipped: usize,
    pub mean: f64,
    pub q025: f64,
    pub q975: f64,
    pub cronbach_alpha: f64,
}

pub fn reliability_summary(r: &ReliabilityReport, run: &ReliabilityRun, alpha: f64) -> ReliabilitySummary {
    ReliabilitySummary {
        mode: r.mode,
        subset: run.subset,
        seed: r.seed,
        draws: run.draws,
        n_draws: r.n_draws,
        skipped: r.skipped,
        mean: r.mean,
        q025: r.q025,
        q975: r.q975,
        cronbach_alpha: alpha,
    }
}

/// Fits each spec on the table.
pub fn regress(table: &DataTable, specs: &[DesignSpec]) -> Result<Vec<FitResult>> {
    specs.iter().map(|s| Ok(fit(&build_design(table, s)?)?)).collect()
}

pub fn render_fits(title: &str, fits: &[FitResult]) -> String {
    render_text(title, fits)
}

pub const COEF_HEADER: &[&str] = &[
    "model",
    "outcome",
    "term",
    "label",
    "estimate",
    "std_error",
    "t",
    "p",
    "stars",
    "n",
    "r_squared",
];

pub fn write_coefficients<W: Write>(fits: &[FitResult], out: W) -> Result<()> {
    let rows = fits.iter().flat_map(|f| {
        (0..f.names.len()).map(move |i| {
            vec![
                f.model.clone(),
                f.outcome.clone(),
                f.names[i].clone(),
                f.labels[i].clone(),
                fmt_f64(f.coefficients[i]),
                fmt_f64(f.std_errors[i]),
                fmt_f64(f.t_values[i]),
                fmt_f64(f.p_values[i]),
                stars(f.p_values[i]).to_string(),
                f.n.to_string(),
                fmt_f64(f.r_squared),
            ]
        })
    });
    write_records(out, &strings(COEF_HEADER), rows)
}

pub struct TextReport {
    pub profiles_csv: Vec<u8>,
    pub summary: String,
}

/// Lexical profiles per respondent, corpus word counts and, when stance
/// annotations are given, their link to ratings and annotator agreement.
pub fn textmetrics(
    comments: &[CommentEvent],
    pos: &BTreeMap<String, Vec<AnnotatedToken>>,
    ratings: &[RatingEvent],
    stance: Option<&[StanceAnnotation]>,
    top_k: usize,
) -> Result<TextReport> {
    let annotated: Vec<AnnotatedComment> = comments
        .iter()
        .map(|c| AnnotatedComment {
            respondent_id: c.session_id.clone(),
            text: c.text.clone(),
            tokens: pos
                .get(&comment_id(&c.session_id, &c.image_id))
                .cloned()
                .unwrap_or_default(),
        })
        .collect();
    let profiles = respondent_profiles(&annotated);
    let mut csv = Vec::new();
    write_records(
        &mut csv,
        &strings(&["session_id", "comments", "ttr", "lexical_density"]),
        profiles.iter().map(|p| {
            vec![
                p.respondent_id.clone(),
                p.comments.to_string(),
                fmt_f64(p.ttr),
                fmt_f64(p.lexical_density),
            ]
        }),
    )?;
    let mut s = String::new();
    let n = profiles.len().max(1) as f64;
    s.push_str(&format!("respondents with scorable comments: {}\n", profiles.len()));
    s.push_str(&format!(
        "mean TTR: {:.4}\n",
        profiles.iter().map(|p| p.ttr).sum::<f64>() / n
    ));
    s.push_str(&format!(
        "mean lexical density: {:.4}\n",
        profiles.iter().map(|p| p.lexical_density).sum::<f64>() / n
    ));
    let texts: Vec<&str> = comments.iter().map(|c| c.text.as_str()).collect();
    s.push_str(&format!("top {top_k} words:\n"));
    for (w, c) in word_frequencies(&texts, Some(top_k)) {
        s.push_str(&format!("  {w:<16}{c}\n"));
    }
    if let Some(ann) = stance {
        let rating: BTreeMap<String, f64> = ratings
            .iter()
            .map(|r| (comment_id(&r.session_id, &r.image_id), r.rating as f64))
            .collect();
        let first = ann.first().map(|a| a.annotator_id.clone()).unwrap_or_default();
        let obs: Vec<StanceObservation> = ann
            .iter()
            .filter(|a| a.annotator_id == first)
            .filter_map(|a| {
                let r = rating.get(&a.comment_id)?;
                let session = a.comment_id.split(':').next()?.to_string();
                Some(StanceObservation {
                    respondent_id: session,
                    stance: a.stance,
                    rating: *r,
                })
            })
            .collect();
        let agg = stance_aggregate(&obs)?;
        s.push_str(&format!(
            "stance vs rating correlation ({first}): {:.4}\n",
            agg.correlation
        ));
        for (st, m) in &agg.group_rating_means {
            s.push_str(&format!("  mean rating, {}: {m:.4}\n", st.as_str()));
        }
        let annotators: BTreeSet<&str> = ann.iter().map(|a| a.annotator_id.as_str()).collect();
        let ids: Vec<&str> = annotators.into_iter().collect();
        if ids.len() >= 2 {
            let k = annotator_agreement(ann, ids[0], ids[1])?;
            s.push_str(&format!(
                "agreement {} vs {} on {} comments: stance kappa {:.4}, subjectivity kappa {:.4}\n",
                ids[0], ids[1], k.n, k.stance_kappa, k.subjectivity_kappa
            ));
        }
    }
    Ok(TextReport {
        profiles_csv: csv,
        summary: s,
    })
}

pub fn tagstats(
    cards: &[ImageCard],
    probs: &[TagCategoryProbs],
    threshold: f64,
    overrides: &[(String, Option<Characteristic>)],
) -> Result<TagStats> {
    let mut classes = classify_tags(probs, threshold)?;
    apply_overrides(&mut classes, overrides);
    Ok(image_tag_stats(cards, &classes))
}

pub fn write_tagstats<W: Write>(stats: &TagStats, out: W) -> Result<()> {
    let mut header = strings(&[
        "image_id",
        "n_tags",
        "n_protected",
        "proportion",
        "distinct_characteristics",
        "no_tags",
    ]);
    header.extend(Characteristic::ALL.iter().map(|c| c.as_str().to_string()));
    let rows = stats.images.iter().map(|i| {
        let mut v = vec![
            i.image_id.clone(),
            i.n_tags.to_string(),
            i.n_protected.to_string(),
            fmt_f64(i.proportion),
            i.distinct_characteristics.to_string(),
            i.no_tags.to_string(),
        ];
        v.extend(
            Characteristic::ALL
                .iter()
                .map(|c| i.per_characteristic.get(c).copied().unwrap_or(0).to_string()),
        );
        v
    });
    write_records(out, &header, rows)
}

pub fn render_tag_summary(stats: &TagStats) -> String {
    let p = &stats.pool;
    let mut s = format!(
        "images: {}\nuntagged: {}\nmean tags per tagged image: {:.2}\nmean protected tags: {:.2} (min {}, max {})\nmean protected proportion: {:.4}\n",
        p.images,
        if p.untagged.is_empty() { "none".to_string() } else { p.untagged.join(", ") },
        p.mean_tags,
        p.mean_protected,
        p.min_protected,
        p.max_protected,
        p.mean_proportion
    );
    for (c, n) in &p.images_per_characteristic {
        s.push_str(&format!("images with a {} tag: {n}\n", c.as_str()));
    }
    s
}
