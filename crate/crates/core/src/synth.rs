//! Seeded synthetic cohorts.
//!
//! Every respondent has a latent sensitivity `s`. A rating of image `j` is
//! `m_j + λ·s + noise·ε` cut into five categories. `s` collects the six
//! questionnaire traits, a few sociodemographic effects, a verbal trait that
//! also drives lexical density, the framing arm, and a shift `δ` for
//! respondents who saw their IAT result first. `δ` is found by simulation so
//! that the standardized SIT gap between revealed and unrevealed respondents
//! equals `iat_effect`.
//!
//! Sessions are produced by driving [`Session`] step by step, so a synthetic
//! cohort exports and scores exactly like a live one.

use std::collections::HashSet;
use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::iat::{IatBlock, IatTrial};
use crate::psychometrics::scales::ScaleName;
use crate::rng::SeededRng;
use crate::survey::assignment::{create_session, FramingArm};
use crate::survey::flow::{CommentEvent, Protocol, RatingEvent, Session};
use crate::survey::pool::{ImageCard, ImagePool};
use crate::survey::questionnaire::{AnswerValue, PageAnswers, BIRTH_AREAS, DEMOGRAPHICS_SECTION};
use crate::text::metrics::{PosRow, Upos};
use crate::text::stance::{comment_id, Stance, StanceAnnotation};
use crate::text::tags::{Characteristic, TagCategoryProbs};

/// Rating category shares: ones, then twos to fours, then fives.
pub const DEFAULT_RATING_SHARES: [f64; 5] = [0.2332, 0.1467, 0.1467, 0.1466, 0.3268];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemographicsModel {
    pub female_share: f64,
    pub age_mean: f64,
    pub age_sd: f64,
    pub age_min: f64,
    pub age_max: f64,
    /// Shares of answers 1..7.
    pub like_teaching: [f64; 7],
    pub master: f64,
    pub disability_training: f64,
    pub married: f64,
    pub teaching_italian: f64,
    pub teaching_maths: f64,
    /// Shares in [`BIRTH_AREAS`] order.
    pub birth_area: [f64; 6],
}

impl Default for DemographicsModel {
    fn default() -> Self {
        DemographicsModel {
            female_share: 0.845,
            age_mean: 51.831,
            age_sd: 9.536,
            age_min: 25.0,
            age_max: 69.0,
            like_teaching: [0.01, 0.01, 0.02, 0.03, 0.08, 0.31, 0.54],
            master: 0.813,
            disability_training: 0.235,
            married: 0.666,
            teaching_italian: 0.427,
            teaching_maths: 0.176,
            birth_area: [0.301, 0.179, 0.143, 0.199, 0.099, 0.079],
        }
    }
}

/// Effects on latent sensitivity, per unit of each variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocioEffects {
    pub female: f64,
    pub age_per_year: f64,
    pub like_teaching: f64,
    pub teaching_maths: f64,
}

impl Default for SocioEffects {
    fn default() -> Self {
        SocioEffects {
            female: 0.13,
            age_per_year: 0.012,
            like_teaching: -0.12,
            teaching_maths: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub n_respondents: usize,
    pub latent_sensitivity_loading: f64,
    pub noise_sd: f64,
    /// SD of image means on the latent rating scale.
    pub image_sd: f64,
    /// Revelation effect on the standardized SIT score.
    pub iat_effect: f64,
    pub rt_base_ms: f64,
    /// Incongruent slowdown for a respondent with bias trait 1.
    pub rt_bias_shift_ms: f64,
    pub rt_log_sd: f64,
    /// Share of respondents who answer the IAT too fast and get excluded.
    pub fast_responder_share: f64,
    /// Latent shifts for Info, InfoGuilt, NoFrame.
    pub framing_effects: [f64; 3],
    /// Effects of the six traits, in [`ScaleName::ALL`] order.
    pub trait_effects: [f64; 6],
    pub socio_effects: SocioEffects,
    pub verbal_effect: f64,
    pub demographics: DemographicsModel,
    pub rating_shares: [f64; 5],
    /// Share of rated images left without a comment.
    pub empty_comment_share: f64,
    pub seed: u64,
    /// Seed of the image pool, kept apart so cohorts share one pool.
    pub pool_seed: u64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec {
            n_respondents: 614,
            latent_sensitivity_loading: 0.6,
            noise_sd: 0.6,
            image_sd: 0.5,
            iat_effect: 0.25,
            rt_base_ms: 750.0,
            rt_bias_shift_ms: 100.0,
            rt_log_sd: 0.3,
            fast_responder_share: 0.035,
            framing_effects: [0.0; 3],
            trait_effects: [0.04, 0.27, -0.04, 0.11, 0.15, 0.11],
            socio_effects: SocioEffects::default(),
            verbal_effect: 0.1,
            demographics: DemographicsModel::default(),
            rating_shares: DEFAULT_RATING_SHARES,
            empty_comment_share: 0.15,
            seed: 0,
            pool_seed: 20_240_601,
        }
    }
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_respondents < 3 {
            return Err(Error::validation("a cohort needs at least 3 respondents"));
        }
        if !(0.0..=1.0).contains(&self.latent_sensitivity_loading) {
            return Err(Error::validation("loading must lie in [0, 1]"));
        }
        if !(self.noise_sd > 0.0) {
            return Err(Error::validation("noise_sd must be positive"));
        }
        if !(0.0..1.0).contains(&self.fast_responder_share) || !(0.0..1.0).contains(&self.empty_comment_share) {
            return Err(Error::validation("shares must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Rating cut points on the latent scale and the revelation shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub delta: f64,
    pub thresholds: [f64; 4],
    /// Standardized effect reached in the calibration sample.
    pub achieved_effect: f64,
}

/// Generating values for one respondent, kept for tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub session_id: String,
    pub sensitivity: f64,
    pub revealed: bool,
    pub excluded: bool,
    pub traits: [f64; 6],
    pub bias: f64,
    pub verbal: f64,
}

#[derive(Debug, Clone)]
pub struct Cohort {
    pub spec: CohortSpec,
    pub calibration: Calibration,
    pub pool: ImagePool,
    pub protocol: Arc<Protocol>,
    pub sessions: Vec<Session>,
    pub truth: Vec<Truth>,
    pub pos: Vec<PosRow>,
    pub stance: Vec<StanceAnnotation>,
    pub tag_probs: Vec<TagCategoryProbs>,
}

fn normal(rng: &mut SeededRng) -> f64 {
    StandardNormal.sample(rng)
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).unwrap()
}

/// Draws an index from a discrete distribution.
fn categorical(rng: &mut SeededRng, probs: &[f64]) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.unit() * total;
    for (k, p) in probs.iter().enumerate() {
        if u < *p {
            return k;
        }
        u -= p;
    }
    probs.len() - 1
}

// ---- pool -----------------------------------------------------------------

const TAG_WORDS: [&str; 30] = [
    "person",
    "woman",
    "man",
    "child",
    "girl",
    "boy",
    "kitchen",
    "office",
    "classroom",
    "laptop",
    "tool",
    "car",
    "dress",
    "suit",
    "smile",
    "crowd",
    "street",
    "home",
    "doctor",
    "nurse",
    "engineer",
    "teacher",
    "elderly",
    "wheelchair",
    "church",
    "mosque",
    "veil",
    "skin",
    "worker",
    "family",
];

/// 100 images with 6 Gender-STEM images, tags and classifier probabilities.
pub fn synthetic_pool(pool_seed: u64) -> (ImagePool, Vec<TagCategoryProbs>) {
    let mut rng = SeededRng::with_stream(pool_seed, 0x9001);
    let vocab: Vec<String> = (0..300)
        .map(|k| format!("{}{}", TAG_WORDS[k % TAG_WORDS.len()], k / TAG_WORDS.len()))
        .collect();
    let mut probs = Vec::with_capacity(vocab.len());
    for tag in &vocab {
        let mut p = std::collections::BTreeMap::new();
        let protected = rng.unit() < 0.2;
        let lead = rng.below(6) as usize;
        for (k, c) in Characteristic::ALL.into_iter().enumerate() {
            let v = if protected && k == lead {
                0.55 + 0.4 * rng.unit()
            } else {
                0.08 * rng.unit()
            };
            p.insert(c, (v * 1000.0).round() / 1000.0);
        }
        probs.push(TagCategoryProbs {
            tag: tag.clone(),
            probs: p,
        });
    }
    let ids: Vec<usize> = (0..100).collect();
    let gender: HashSet<usize> = rng.sample(&ids, 6).into_iter().collect();
    let untagged: HashSet<usize> = rng.sample(&ids, 2).into_iter().collect();
    let cards = (0..100)
        .map(|i| {
            let tags = if untagged.contains(&i) {
                Vec::new()
            } else {
                let n = 30 + rng.below(29) as usize;
                rng.sample(&vocab, n)
            };
            ImageCard {
                image_id: format!("img{i:03}"),
                is_gender_stem: gender.contains(&i),
                tags,
                path: Some(format!("images/img{i:03}.jpg")),
            }
        })
        .collect();
    (ImagePool::new(cards).expect("synthetic pool is valid"), probs)
}

fn image_means(pool: &ImagePool, spec: &CohortSpec) -> Vec<f64> {
    let mut rng = SeededRng::with_stream(spec.pool_seed, 0x3ea);
    pool.cards().iter().map(|_| spec.image_sd * normal(&mut rng)).collect()
}

// ---- demographics ---------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Demographics {
    pub female: bool,
    pub age: f64,
    pub like_teaching: u8,
    pub master: bool,
    pub disability_training: bool,
    pub married: bool,
    pub teaching_italian: bool,
    pub teaching_maths: bool,
    pub birth_area: usize,
}

/// Exact counts per category by largest remainder, in shuffled order.
fn stratified_categories(rng: &mut SeededRng, shares: &[f64], n: usize) -> Vec<usize> {
    let total: f64 = shares.iter().sum();
    let raw: Vec<f64> = shares.iter().map(|s| s / total * n as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        (raw[b] - raw[b].floor())
            .total_cmp(&(raw[a] - raw[a].floor()))
            .then(a.cmp(&b))
    });
    let mut left = n - counts.iter().sum::<usize>();
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[k] += 1;
        left -= 1;
    }
    let mut out: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(k, &c)| std::iter::repeat_n(k, c))
        .collect();
    rng.shuffle(&mut out);
    out
}

fn stratified_binary(rng: &mut SeededRng, share: f64, n: usize) -> Vec<bool> {
    stratified_categories(rng, &[1.0 - share, share], n)
        .into_iter()
        .map(|k| k == 1)
        .collect()
}

fn clipped_age(m: &DemographicsModel, mu: f64, sigma: f64, u: f64) -> f64 {
    let q = std_normal().inverse_cdf(u.clamp(1e-12, 1.0 - 1e-12));
    (mu + sigma * q).round().clamp(m.age_min, m.age_max)
}

/// Normal location and scale whose rounded, clipped draws have the target
/// mean and SD, matched on a fine stratified grid.
fn age_parameters(m: &DemographicsModel) -> Result<(f64, f64)> {
    const GRID: usize = 4000;
    let (mut mu, mut sigma) = (m.age_mean, m.age_sd);
    for _ in 0..200 {
        let ages: Vec<f64> = (0..GRID)
            .map(|k| clipped_age(m, mu, sigma, (k as f64 + 0.5) / GRID as f64))
            .collect();
        let mean = ages.iter().sum::<f64>() / GRID as f64;
        let sd = (ages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (GRID as f64 - 1.0)).sqrt();
        if (mean - m.age_mean).abs() < 1e-3 && (sd - m.age_sd).abs() < 1e-3 {
            return Ok((mu, sigma));
        }
        mu += m.age_mean - mean;
        if sd > 0.0 {
            sigma *= (m.age_sd / sd).clamp(0.5, 2.0);
        }
        if !sigma.is_finite() || sigma > 1e3 {
            break;
        }
    }
    let ages: Vec<f64> = (0..GRID)
        .map(|k| clipped_age(m, mu, sigma, (k as f64 + 0.5) / GRID as f64))
        .collect();
    let mean = ages.iter().sum::<f64>() / GRID as f64;
    let sd = (ages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (GRID as f64 - 1.0)).sqrt();
    if (mean / m.age_mean - 1.0).abs() > 0.01 || (sd / m.age_sd - 1.0).abs() > 0.01 {
        return Err(Error::Calibration(format!(
            "age mean {} / sd {} not reachable inside [{}, {}]",
            m.age_mean, m.age_sd, m.age_min, m.age_max
        )));
    }
    Ok((mu, sigma))
}

pub fn draw_demographics(m: &DemographicsModel, n: usize, rng: &mut SeededRng) -> Result<Vec<Demographics>> {
    let (mu, sigma) = age_parameters(m)?;
    let mut ages: Vec<f64> = (0..n)
        .map(|k| clipped_age(m, mu, sigma, (k as f64 + rng.unit()) / n as f64))
        .collect();
    rng.shuffle(&mut ages);
    let female = stratified_binary(rng, m.female_share, n);
    let like = stratified_categories(rng, &m.like_teaching, n);
    let master = stratified_binary(rng, m.master, n);
    let disability = stratified_binary(rng, m.disability_training, n);
    let married = stratified_binary(rng, m.married, n);
    let italian = stratified_binary(rng, m.teaching_italian, n);
    let maths = stratified_binary(rng, m.teaching_maths, n);
    let area = stratified_categories(rng, &m.birth_area, n);
    Ok((0..n)
        .map(|i| Demographics {
            female: female[i],
            age: ages[i],
            like_teaching: like[i] as u8 + 1,
            master: master[i],
            disability_training: disability[i],
            married: married[i],
            teaching_italian: italian[i],
            teaching_maths: maths[i],
            birth_area: area[i],
        })
        .collect())
}

/// Moment targets for [`calibrate_to_targets`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemographicTargets {
    pub female_share: f64,
    pub age_mean: f64,
    pub age_sd: f64,
}

impl Default for DemographicTargets {
    fn default() -> Self {
        DemographicTargets {
            female_share: 0.845,
            age_mean: 51.831,
            age_sd: 9.536,
        }
    }
}

/// A default spec whose demographics hit `targets`.
pub fn calibrate_to_targets(targets: &DemographicTargets) -> Result<CohortSpec> {
    let mut bad = Vec::new();
    if !(0.0..=1.0).contains(&targets.female_share) {
        bad.push(format!("female share {}", targets.female_share));
    }
    if !(targets.age_sd > 0.0) {
        bad.push(format!("age sd {}", targets.age_sd));
    }
    let mut spec = CohortSpec::default();
    if !(spec.demographics.age_min < targets.age_mean && targets.age_mean < spec.demographics.age_max) {
        bad.push(format!("age mean {}", targets.age_mean));
    }
    if !bad.is_empty() {
        return Err(Error::Calibration(format!("infeasible targets: {}", bad.join(", "))));
    }
    spec.demographics.female_share = targets.female_share;
    spec.demographics.age_mean = targets.age_mean;
    spec.demographics.age_sd = targets.age_sd;
    age_parameters(&spec.demographics)?;
    Ok(spec)
}

// ---- latent model ---------------------------------------------------------

#[derive(Debug, Clone)]
struct Latent {
    traits: [f64; 6],
    bias: f64,
    verbal: f64,
    base: f64,
}

fn draw_latent(spec: &CohortSpec, demo: &Demographics, framing: FramingArm, rng: &mut SeededRng) -> Latent {
    let traits: [f64; 6] = std::array::from_fn(|_| normal(rng));
    let bias = normal(rng);
    let verbal = normal(rng);
    let unique = normal(rng);
    let d = &spec.demographics;
    let se = &spec.socio_effects;
    let mut base = unique + spec.verbal_effect * verbal;
    base += traits.iter().zip(&spec.trait_effects).map(|(t, b)| t * b).sum::<f64>();
    base += se.female * (f64::from(demo.female) - d.female_share);
    base += se.age_per_year * (demo.age - d.age_mean);
    base += se.like_teaching * (demo.like_teaching as f64 - 6.3);
    base += se.teaching_maths * (f64::from(demo.teaching_maths) - d.teaching_maths);
    let arm = FramingArm::ALL.iter().position(|a| *a == framing).unwrap();
    base += spec.framing_effects[arm];
    Latent {
        traits,
        bias,
        verbal,
        base,
    }
}

fn rating_category(z: f64, thresholds: &[f64; 4]) -> u8 {
    1 + thresholds.iter().filter(|t| z > **t).count() as u8
}

fn check_shares(shares: &[f64; 5]) -> Result<()> {
    let total: f64 = shares.iter().sum();
    if shares.iter().any(|s| !(*s >= 0.0)) || (total - 1.0).abs() > 1e-3 {
        return Err(Error::Calibration(format!(
            "rating shares {shares:?} are not a distribution"
        )));
    }
    if shares.iter().any(|s| *s >= 1.0 - 1e-9) {
        return Err(Error::Calibration("all rating mass in one category".into()));
    }
    Ok(())
}

const CAL_PAIRS: usize = 20_000;
const CAL_SEED: u64 = 0xca11_b7a7e;

struct CalSample {
    /// Per pair: base sensitivity and 20 (image, ε) cells; each pair is
    /// one revealed and one unrevealed respondent with identical draws.
    base: Vec<f64>,
    cells: Vec<[(u16, f64); 20]>,
}

fn cal_sample(spec: &CohortSpec, pool: &ImagePool) -> Result<CalSample> {
    let mut rng = SeededRng::with_stream(CAL_SEED, 1);
    let demo = draw_demographics(&spec.demographics, CAL_PAIRS, &mut rng)?;
    let gender: Vec<u16> = (0..pool.cards().len() as u16)
        .filter(|&j| pool.cards()[j as usize].is_gender_stem)
        .collect();
    let other: Vec<u16> = (0..pool.cards().len() as u16)
        .filter(|&j| !pool.cards()[j as usize].is_gender_stem)
        .collect();
    let per = pool.layout().per_session;
    if per != 20 {
        return Err(Error::Calibration("calibration assumes 20 images per session".into()));
    }
    let mut base = Vec::with_capacity(CAL_PAIRS);
    let mut cells = Vec::with_capacity(CAL_PAIRS);
    for d in &demo {
        let arm = FramingArm::ALL[rng.below(3) as usize];
        base.push(draw_latent(spec, d, arm, &mut rng).base);
        let mut imgs = gender.clone();
        imgs.extend(rng.sample(&other, per - gender.len()));
        let mut row = [(0u16, 0.0); 20];
        for (k, j) in imgs.into_iter().enumerate() {
            row[k] = (j, normal(&mut rng));
        }
        cells.push(row);
    }
    Ok(CalSample { base, cells })
}

fn thresholds_for(z: &mut [f64], shares: &[f64; 5]) -> [f64; 4] {
    let mut cum = 0.0;
    std::array::from_fn(|k| {
        cum += shares[k];
        let idx = ((cum * z.len() as f64) as usize).min(z.len() - 1);
        let (_, v, _) = z.select_nth_unstable_by(idx, f64::total_cmp);
        *v
    })
}

/// Returns (standardized revealed-minus-unrevealed gap, thresholds) at `delta`.
fn cal_effect(spec: &CohortSpec, means: &[f64], s: &CalSample, delta: f64) -> ([f64; 4], f64) {
    let lam = spec.latent_sensitivity_loading;
    let latent = |p: usize, rev: bool, k: usize| {
        let (j, e) = s.cells[p][k];
        means[j as usize] + lam * (s.base[p] + if rev { delta } else { 0.0 }) + spec.noise_sd * e
    };
    let mut z: Vec<f64> = (0..s.base.len())
        .flat_map(|p| (0..20).flat_map(move |k| [latent(p, true, k), latent(p, false, k)]))
        .collect();
    let th = thresholds_for(&mut z, &spec.rating_shares);
    let mut sums = vec![(0.0f64, 0usize); means.len()];
    for p in 0..s.base.len() {
        for k in 0..20 {
            let j = s.cells[p][k].0 as usize;
            for rev in [true, false] {
                sums[j].0 += rating_category(latent(p, rev, k), &th) as f64;
                sums[j].1 += 1;
            }
        }
    }
    let mut tilde = Vec::with_capacity(2 * s.base.len());
    for p in 0..s.base.len() {
        for rev in [true, false] {
            let t: f64 = (0..20)
                .map(|k| {
                    let j = s.cells[p][k].0 as usize;
                    let r = rating_category(latent(p, rev, k), &th) as f64;
                    r - (sums[j].0 - r) / (sums[j].1 as f64 - 1.0)
                })
                .sum::<f64>()
                / 20.0;
            tilde.push(t);
        }
    }
    let n = tilde.len() as f64;
    let m = tilde.iter().sum::<f64>() / n;
    let sd = (tilde.iter().map(|t| (t - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let rev: f64 = tilde.iter().step_by(2).sum::<f64>() / (n / 2.0);
    let unrev: f64 = tilde.iter().skip(1).step_by(2).sum::<f64>() / (n / 2.0);
    (th, (rev - unrev) / sd)
}

/// Finds the rating thresholds and the revelation shift for `spec`. The
/// result depends on the spec but not on its `seed`, so it can be reused
/// across seeds.
pub fn calibrate(spec: &CohortSpec) -> Result<Calibration> {
    spec.validate()?;
    check_shares(&spec.rating_shares)?;
    let (pool, _) = synthetic_pool(spec.pool_seed);
    let means = image_means(&pool, spec);
    let sample = cal_sample(spec, &pool)?;
    let (th0, e0) = cal_effect(spec, &means, &sample, 0.0);
    if th0.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Calibration(format!("rating thresholds collapse: {th0:?}")));
    }
    if spec.iat_effect == 0.0 {
        return Ok(Calibration {
            delta: 0.0,
            thresholds: th0,
            achieved_effect: e0,
        });
    }
    let target = spec.iat_effect;
    let sign = target.signum();
    let (mut lo, mut hi) = (0.0, 0.5 * sign);
    let mut e_hi = cal_effect(spec, &means, &sample, hi).1;
    while (e_hi - target) * sign < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi.abs() > 64.0 {
            return Err(Error::Calibration(format!(
                "revelation effect {target} unreachable (loading {}, reached {e_hi:.3})",
                spec.latent_sensitivity_loading
            )));
        }
        e_hi = cal_effect(spec, &means, &sample, hi).1;
    }
    let mut best = (hi, e_hi);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        let (_, e) = cal_effect(spec, &means, &sample, mid);
        best = (mid, e);
        if (e - target).abs() < 1e-5 {
            break;
        }
        if (e - target) * sign < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (thresholds, achieved_effect) = cal_effect(spec, &means, &sample, best.0);
    Ok(Calibration {
        delta: best.0,
        thresholds,
        achieved_effect,
    })
}

// ---- comments -------------------------------------------------------------

const FUNCTION_WORDS: [(&str, Upos); 12] = [
    ("the", Upos::Det),
    ("a", Upos::Det),
    ("of", Upos::Adp),
    ("in", Upos::Adp),
    ("with", Upos::Adp),
    ("and", Upos::Cconj),
    ("but", Upos::Cconj),
    ("is", Upos::Aux),
    ("this", Upos::Pron),
    ("it", Upos::Pron),
    ("not", Upos::Part),
    ("that", Upos::Sconj),
];

const NOUNS: [&str; 24] = [
    "image",
    "woman",
    "man",
    "girl",
    "boy",
    "role",
    "job",
    "family",
    "kitchen",
    "science",
    "stereotype",
    "colour",
    "mother",
    "father",
    "child",
    "work",
    "house",
    "school",
    "sport",
    "toy",
    "dress",
    "teacher",
    "engineer",
    "nurse",
];
const VERBS: [&str; 12] = [
    "shows",
    "represents",
    "suggests",
    "reinforces",
    "depicts",
    "reminds",
    "associates",
    "plays",
    "works",
    "cooks",
    "cares",
    "looks",
];
const ADJS: [&str; 12] = [
    "typical",
    "classic",
    "traditional",
    "stereotyped",
    "normal",
    "common",
    "neutral",
    "modern",
    "obvious",
    "pink",
    "blue",
    "strong",
];
const ADVS: [&str; 8] = ["clearly", "very", "often", "always", "quite", "really", "still", "too"];

fn content_word(rng: &mut SeededRng) -> (&'static str, Upos) {
    // Skewed picks so that words repeat within longer comments.
    let skew = |rng: &mut SeededRng, n: usize| ((rng.unit().powi(4)) * n as f64) as usize;
    match categorical(rng, &[0.45, 0.25, 0.2, 0.1]) {
        0 => (NOUNS[skew(rng, NOUNS.len())], Upos::Noun),
        1 => (VERBS[skew(rng, VERBS.len())], Upos::Verb),
        2 => (ADJS[skew(rng, ADJS.len())], Upos::Adj),
        _ => (ADVS[skew(rng, ADVS.len())], Upos::Adv),
    }
}

/// A stub comment as (surface, POS) tokens.
fn comment_tokens(rng: &mut SeededRng, density: f64) -> Vec<(&'static str, Upos)> {
    let len = 8 + rng.below(37) as usize;
    (0..len)
        .map(|_| {
            if rng.unit() < density {
                content_word(rng)
            } else {
                FUNCTION_WORDS[((rng.unit().powi(4)) * FUNCTION_WORDS.len() as f64) as usize]
            }
        })
        .collect()
}

fn stance_for(rating: u8, rng: &mut SeededRng) -> Stance {
    let p: [f64; 3] = match rating {
        1 => [0.8, 0.15, 0.05],
        2 => [0.6, 0.3, 0.1],
        3 => [0.2, 0.6, 0.2],
        4 => [0.1, 0.3, 0.6],
        _ => [0.05, 0.15, 0.8],
    };
    Stance::ALL[categorical(rng, &p)]
}

fn annotate(truth: Stance, subjective: bool, rng: &mut SeededRng) -> (Stance, bool) {
    let stance = if rng.unit() < 0.8 {
        truth
    } else {
        Stance::ALL[rng.below(3) as usize]
    };
    let subj = if rng.unit() < 0.75 { subjective } else { rng.coin() };
    (stance, subj)
}

// ---- questionnaire --------------------------------------------------------

/// Table 1 SDs of the raw regression scores, in [`ScaleName::ALL`] order.
pub const INDEX_SD_TARGETS: [f64; 6] = [0.965, 0.880, 0.951, 0.795, 0.838, 0.801];

/// Equal item loading whose regression factor score has SD `target` over `k`
/// items: the squared multiple correlation `s/(1+s)` with
/// `s = k·λ²/(1-λ²)` solved for `λ`.
pub fn loading_for_score_sd(target: f64, k: usize) -> f64 {
    let r2 = target * target;
    let s = r2 / (1.0 - r2);
    let per = s / k as f64;
    (per / (1.0 + per)).sqrt()
}

const ANSWER_SHARES: [f64; 5] = [0.07, 0.13, 0.25, 0.32, 0.23];

fn answer_thresholds() -> [f64; 4] {
    let n = std_normal();
    let mut cum = 0.0;
    std::array::from_fn(|k| {
        cum += ANSWER_SHARES[k];
        n.inverse_cdf(cum)
    })
}

fn likert(z: f64, th: &[f64; 4]) -> f64 {
    f64::from(rating_category(z, th))
}

fn scale_answers(protocol: &Protocol, traits: &[f64; 6], rng: &mut SeededRng) -> Vec<PageAnswers> {
    let th = answer_thresholds();
    protocol
        .scales
        .iter()
        .map(|scale| {
            let s = ScaleName::ALL.iter().position(|n| *n == scale.scale_name).unwrap();
            let k = scale.item_prompts.len();
            let lam = loading_for_score_sd(INDEX_SD_TARGETS[s], k);
            (0..k)
                .map(|item| {
                    let sign = if scale.reverse_keyed.contains(&item) { -1.0 } else { 1.0 };
                    let z = sign * lam * traits[s] + (1.0 - lam * lam).sqrt() * normal(rng);
                    ((item + 1).to_string(), Some(AnswerValue::Number(likert(z, &th))))
                })
                .collect()
        })
        .collect()
}

fn demographic_answers(d: &Demographics) -> PageAnswers {
    let b = |x: bool| Some(AnswerValue::Number(f64::from(u8::from(x))));
    [
        ("age", Some(AnswerValue::Number(d.age))),
        ("gender", b(d.female)),
        ("like_teaching", Some(AnswerValue::Number(d.like_teaching as f64))),
        ("master", b(d.master)),
        ("disability_training", b(d.disability_training)),
        ("married", b(d.married)),
        ("teaching_italian", b(d.teaching_italian)),
        ("teaching_maths", b(d.teaching_maths)),
        (
            "birth_area",
            Some(AnswerValue::Text(BIRTH_AREAS[d.birth_area].to_string())),
        ),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

// ---- IAT ------------------------------------------------------------------

fn iat_trials(session: &Session, spec: &CohortSpec, bias: f64, fast: bool, rng: &mut SeededRng) -> Vec<IatTrial> {
    let shift = spec.rt_bias_shift_ms * (1.0 + bias);
    let mut out = Vec::new();
    for b in session.schedule() {
        let centre = match b.block {
            IatBlock::Congruent => spec.rt_base_ms,
            IatBlock::Incongruent => (spec.rt_base_ms + shift).max(0.4 * spec.rt_base_ms),
        };
        for (k, idx) in b.trial_indices().enumerate() {
            let rt = if fast && rng.unit() < 0.3 {
                120.0 + 160.0 * rng.unit()
            } else if rng.unit() < 0.003 {
                10_001.0 + 9_000.0 * rng.unit()
            } else {
                let s = spec.rt_log_sd;
                (centre.ln() - 0.5 * s * s + s * normal(rng)).exp().max(200.0)
            };
            out.push(IatTrial {
                session_id: session.id().to_string(),
                block: b.block,
                trial_index: idx,
                stimulus_id: b.stimuli[k].clone(),
                reaction_time_ms: rt.round() as u32,
                correct: rng.unit() < 0.95,
            });
        }
    }
    out
}

// ---- cohort ---------------------------------------------------------------

struct Respondent {
    session: Session,
    truth: Truth,
    pos: Vec<PosRow>,
    stance: Vec<StanceAnnotation>,
}

#[allow(clippy::too_many_arguments)]
fn simulate_respondent(
    spec: &CohortSpec,
    cal: &Calibration,
    pool: &ImagePool,
    means: &[f64],
    protocol: &Arc<Protocol>,
    demo: &Demographics,
    session_seed: u64,
    rng: &mut SeededRng,
) -> Result<Respondent> {
    let assignment = create_session(pool, session_seed);
    let mut session = Session::start(assignment, protocol.clone())?;
    let a = session.assignment().clone();
    let latent = draw_latent(spec, demo, a.framing, rng);
    let fast = rng.unit() < spec.fast_responder_share;
    let sid = a.session_id.clone();

    let mut revealed = false;
    if a.iat_first {
        let trials = iat_trials(&session, spec, latent.bias, fast, rng);
        session.record_iat_trials(trials)?;
        session.show_feedback()?;
        revealed = session.iat_revealed();
    }
    let sensitivity = latent.base + if revealed { cal.delta } else { 0.0 };
    let density = (0.58 + 0.05 * latent.verbal).clamp(0.2, 0.95);
    let mut pos = Vec::new();
    let mut stance = Vec::new();
    let mut scorable = 0;
    let n_images = a.image_sequence.len();
    for (k, image) in a.image_sequence.iter().enumerate() {
        let j = pool.cards().iter().position(|c| c.image_id == *image).unwrap();
        let z = means[j] + spec.latent_sensitivity_loading * sensitivity + spec.noise_sd * normal(rng);
        let rating = rating_category(z, &cal.thresholds);
        let rt = (4500.0f64.ln() - 0.1 * (rating as f64 - 1.0) + 0.5 * normal(rng)).exp();
        session.record_rating(RatingEvent {
            session_id: sid.clone(),
            image_id: image.clone(),
            rating,
            rating_time_ms: rt.round() as u64,
        })?;
        let last_chance = k + 1 == n_images && scorable == 0;
        let tokens = if !last_chance && rng.unit() < spec.empty_comment_share {
            Vec::new()
        } else if !last_chance && rng.unit() < 0.01 {
            vec![(".", Upos::Punct)]
        } else {
            comment_tokens(rng, density)
        };
        let text = tokens.iter().map(|t| t.0).collect::<Vec<_>>().join(" ");
        let ct = 1500.0 + 90.0 * text.len() as f64 * (0.3 * normal(rng)).exp();
        session.record_comment(CommentEvent {
            session_id: sid.clone(),
            image_id: image.clone(),
            text: text.clone(),
            comment_time_ms: ct.round() as u64,
        })?;
        if text.trim().chars().count() > 1 {
            scorable += 1;
            for (t, (surface, p)) in tokens.iter().enumerate() {
                pos.push(PosRow {
                    session_id: sid.clone(),
                    image_id: image.clone(),
                    token_index: t,
                    surface: surface.to_string(),
                    lemma: surface.to_string(),
                    pos: *p,
                });
            }
            let truth = stance_for(rating, rng);
            let subjective = rng.unit() < 0.6;
            for annotator in ["A1", "A2"] {
                let (s, subj) = annotate(truth, subjective, rng);
                stance.push(StanceAnnotation {
                    comment_id: comment_id(&sid, image),
                    subjective: subj,
                    stance: s,
                    annotator_id: annotator.to_string(),
                });
            }
        }
    }
    if !a.iat_first {
        let trials = iat_trials(&session, spec, latent.bias, fast, rng);
        session.record_iat_trials(trials)?;
    }
    for (p, answers) in scale_answers(protocol, &latent.traits, rng).into_iter().enumerate() {
        session.record_answers(p, answers)?;
    }
    let last = session.pages().len() - 1;
    debug_assert_eq!(session.pages()[last].section, DEMOGRAPHICS_SECTION);
    session.record_answers(last, demographic_answers(demo))?;
    Ok(Respondent {
        truth: Truth {
            session_id: sid,
            sensitivity,
            revealed,
            excluded: fast,
            traits: latent.traits,
            bias: latent.bias,
            verbal: latent.verbal,
        },
        session,
        pos,
        stance,
    })
}

pub fn generate_cohort(spec: &CohortSpec) -> Result<Cohort> {
    let cal = calibrate(spec)?;
    generate_cohort_with(spec, &cal)
}

/// Generates a cohort with a precomputed calibration.
pub fn generate_cohort_with(spec: &CohortSpec, cal: &Calibration) -> Result<Cohort> {
    spec.validate()?;
    let (pool, tag_probs) = synthetic_pool(spec.pool_seed);
    let means = image_means(&pool, spec);
    let protocol = Arc::new(Protocol::default());
    let mut rng = SeededRng::with_stream(spec.seed, 0);
    let demo = draw_demographics(&spec.demographics, spec.n_respondents, &mut rng)?;
    let session_seeds: Vec<u64> = (0..spec.n_respondents).map(|_| rng.derive_seed()).collect();
    let unique: HashSet<&u64> = session_seeds.iter().collect();
    if unique.len() != session_seeds.len() {
        return Err(Error::Calibration("session seed collision; choose another seed".into()));
    }
    let people: Vec<Respondent> = (0..spec.n_respondents)
        .into_par_iter()
        .map(|i| {
            let mut r = SeededRng::with_stream(spec.seed, i as u64 + 1);
            simulate_respondent(spec, cal, &pool, &means, &protocol, &demo[i], session_seeds[i], &mut r)
        })
        .collect::<Result<_>>()?;
    let mut cohort = Cohort {
        spec: spec.clone(),
        calibration: cal.clone(),
        pool,
        protocol,
        sessions: Vec::with_capacity(people.len()),
        truth: Vec::with_capacity(people.len()),
        pos: Vec::new(),
        stance: Vec::new(),
        tag_probs,
    };
    for p in people {
        cohort.sessions.push(p.session);
        cohort.truth.push(p.truth);
        cohort.pos.extend(p.pos);
        cohort.stance.extend(p.stance);
    }
    Ok(cohort)
}

/// A plain one-factor item matrix: `x = λ·f + sqrt(1-λ²)·e`.
pub fn one_factor_items(n: usize, loadings: &[f64], seed: u64) -> Vec<Vec<f64>> {
    let mut rng = SeededRng::new(seed);
    (0..n)
        .map(|_| {
            let f = normal(&mut rng);
            loadings
                .iter()
                .map(|&l| l * f + (1.0 - l * l).max(0.0).sqrt() * normal(&mut rng))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stratified_counts_are_exact() {
        let mut rng = SeededRng::new(1);
        let v = stratified_binary(&mut rng, 0.845, 614);
        assert_eq!(v.iter().filter(|x| **x).count(), 519);
        let c = stratified_categories(&mut rng, &[0.5, 0.25, 0.25], 10);
        assert_eq!(c.len(), 10);
    }

    #[test]
    fn age_moments_hit_targets() {
        let mut rng = SeededRng::new(2);
        let m = DemographicsModel::default();
        let d = draw_demographics(&m, 614, &mut rng).unwrap();
        let ages: Vec<f64> = d.iter().map(|x| x.age).collect();
        let mean = ages.iter().sum::<f64>() / 614.0;
        let sd = (ages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / 613.0).sqrt();
        assert!((mean / 51.831 - 1.0).abs() < 0.01, "{mean}");
        assert!((sd / 9.536 - 1.0).abs() < 0.03, "{sd}");
        assert!(ages.iter().all(|a| (25.0..=69.0).contains(a)));
    }

    #[test]
    fn zero_sd_is_infeasible() {
        let t = DemographicTargets {
            age_sd: 0.0,
            ..Default::default()
        };
        assert!(matches!(calibrate_to_targets(&t), Err(Error::Calibration(_))));
    }

    #[test]
    fn degenerate_shares() {
        let spec = CohortSpec {
            rating_shares: [0.0, 0.0, 1.0, 0.0, 0.0],
            ..Default::default()
        };
        assert!(matches!(calibrate(&spec), Err(Error::Calibration(_))));
    }

    #[test]
    fn loading_formula_round_trips() {
        for (sd, k) in [(0.8, 5), (0.95, 9)] {
            let l = loading_for_score_sd(sd, k);
            let s = k as f64 * l * l / (1.0 - l * l);
            assert!(((s / (1.0 + s)).sqrt() - sd).abs() < 1e-12);
        }
    }
}
