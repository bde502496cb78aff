//! Implicit Association Test: block schedule, trial screening, D-score and
//! the feedback shown to respondents who take the IAT before the SIT.
//!
//! The D-score is the difference between mean incongruent and mean congruent
//! reaction times divided by `sqrt(var_incongruent + var_congruent)`, both
//! variances taken within the respondent. Positive values mean slower
//! responses when the pairing runs against the Gender-STEM stereotype.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::stats::describe::{mean, variance, Variance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IatBlock {
    Congruent,
    Incongruent,
}

impl IatBlock {
    pub fn as_str(self) -> &'static str {
        match self {
            IatBlock::Congruent => "Congruent",
            IatBlock::Incongruent => "Incongruent",
        }
    }

    pub fn other(self) -> Self {
        match self {
            IatBlock::Congruent => IatBlock::Incongruent,
            IatBlock::Incongruent => IatBlock::Congruent,
        }
    }
}

impl std::str::FromStr for IatBlock {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Congruent" | "congruent" => Ok(IatBlock::Congruent),
            "Incongruent" | "incongruent" => Ok(IatBlock::Incongruent),
            other => Err(Error::validation(format!("unknown IAT block '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IatTrial {
    pub session_id: String,
    pub block: IatBlock,
    pub trial_index: u32,
    pub stimulus_id: String,
    pub reaction_time_ms: u32,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IatConfig {
    /// Trials in each unscored practice block.
    pub practice_trials: u32,
    /// Trials in each scored block (both pairings use the same count).
    pub scored_trials: u32,
    /// Trials slower than this are dropped before scoring.
    pub slow_cutoff_ms: u32,
    /// Trials faster than this count toward the respondent exclusion rule.
    pub fast_cutoff_ms: u32,
    /// Respondent is excluded when the share of fast trials exceeds this.
    pub max_fast_share: f64,
    pub variance: Variance,
    /// Stimulus pool; `category:word` strings shown during the task.
    pub stimuli: Vec<String>,
}

impl Default for IatConfig {
    fn default() -> Self {
        IatConfig {
            practice_trials: 10,
            scored_trials: 20,
            slow_cutoff_ms: 10_000,
            fast_cutoff_ms: 300,
            max_fast_share: 0.10,
            variance: Variance::Sample,
            stimuli: default_stimuli(),
        }
    }
}

fn default_stimuli() -> Vec<String> {
    [
        "male:uomo",
        "male:ragazzo",
        "male:padre",
        "male:marito",
        "female:donna",
        "female:ragazza",
        "female:madre",
        "female:moglie",
        "stem:matematica",
        "stem:fisica",
        "stem:ingegneria",
        "stem:informatica",
        "humanities:letteratura",
        "humanities:storia",
        "humanities:filosofia",
        "humanities:arte",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDescriptor {
    pub position: usize,
    pub block: IatBlock,
    pub scored: bool,
    /// Trial indices for this block run `first_trial_index..first_trial_index + trial_count`.
    pub first_trial_index: u32,
    pub trial_count: u32,
    pub stimuli: Vec<String>,
}

impl BlockDescriptor {
    pub fn trial_indices(&self) -> std::ops::Range<u32> {
        self.first_trial_index..self.first_trial_index + self.trial_count
    }
}

/// Practice then scored block for one pairing, then the same for the other.
/// Which pairing goes first is a coin flip; stimuli are drawn uniformly
/// from the configured pool. Trial indices are numbered per pairing, so the
/// scored block of a pairing starts at `practice_trials`.
pub fn schedule_blocks(seed: u64, config: &IatConfig) -> Vec<BlockDescriptor> {
    let mut rng = SeededRng::new(seed);
    let first = if rng.coin() {
        IatBlock::Congruent
    } else {
        IatBlock::Incongruent
    };
    let mut out = Vec::with_capacity(4);
    for pairing in [first, first.other()] {
        for (scored, first_idx, count) in [
            (false, 0, config.practice_trials),
            (true, config.practice_trials, config.scored_trials),
        ] {
            if count == 0 {
                continue;
            }
            let stimuli = (0..count)
                .map(|_| {
                    if config.stimuli.is_empty() {
                        String::from("stimulus")
                    } else {
                        config.stimuli[rng.below(config.stimuli.len() as u32) as usize].clone()
                    }
                })
                .collect();
            out.push(BlockDescriptor {
                position: out.len(),
                block: pairing,
                scored,
                first_trial_index: first_idx,
                trial_count: count,
                stimuli,
            });
        }
    }
    out
}

/// Keeps only trials belonging to scored blocks.
pub fn scored_only<'a>(trials: &'a [IatTrial], config: &IatConfig) -> Vec<&'a IatTrial> {
    let range = config.practice_trials..config.practice_trials + config.scored_trials;
    trials.iter().filter(|t| range.contains(&t.trial_index)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExclusionReason {
    TooManyFastTrials,
}

impl ExclusionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionReason::TooManyFastTrials => "too_many_fast_trials",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialScreen {
    pub kept: Vec<IatTrial>,
    pub dropped_slow: usize,
    pub fast_share: f64,
    pub excluded: bool,
    pub reason: Option<ExclusionReason>,
}

pub fn validate_trials(trials: &[IatTrial], config: &IatConfig) -> Result<TrialScreen> {
    let first = trials
        .first()
        .ok_or_else(|| Error::InsufficientData("no IAT trials".into()))?;
    if let Some(t) = trials.iter().find(|t| t.session_id != first.session_id) {
        return Err(Error::validation(format!(
            "trials from more than one session ({} and {})",
            first.session_id, t.session_id
        )));
    }
    if let Some(t) = trials.iter().find(|t| t.reaction_time_ms == 0) {
        return Err(Error::validation(format!(
            "non-positive reaction time on trial {} of {:?}",
            t.trial_index, t.block
        )));
    }
    let fast = trials
        .iter()
        .filter(|t| t.reaction_time_ms < config.fast_cutoff_ms)
        .count();
    let fast_share = fast as f64 / trials.len() as f64;
    let kept: Vec<IatTrial> = trials
        .iter()
        .filter(|t| t.reaction_time_ms <= config.slow_cutoff_ms)
        .cloned()
        .collect();
    let excluded = fast_share > config.max_fast_share;
    Ok(TrialScreen {
        dropped_slow: trials.len() - kept.len(),
        kept,
        fast_share,
        excluded,
        reason: excluded.then_some(ExclusionReason::TooManyFastTrials),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IatScore {
    pub d_score: f64,
    pub mean_congruent_ms: f64,
    pub mean_incongruent_ms: f64,
    pub var_congruent: f64,
    pub var_incongruent: f64,
    pub n_congruent: usize,
    pub n_incongruent: usize,
    pub excluded: bool,
    pub exclusion_reason: Option<ExclusionReason>,
}

pub fn compute_iat<'a, I>(trials: I, variance_kind: Variance) -> Result<IatScore>
where
    I: IntoIterator<Item = &'a IatTrial>,
{
    let mut con = Vec::new();
    let mut inc = Vec::new();
    for t in trials {
        match t.block {
            IatBlock::Congruent => con.push(t.reaction_time_ms as f64),
            IatBlock::Incongruent => inc.push(t.reaction_time_ms as f64),
        }
    }
    if con.len() < 2 || inc.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 trials per block, got {} congruent and {} incongruent",
            con.len(),
            inc.len()
        )));
    }
    let (mc, mi) = (mean(&con).unwrap(), mean(&inc).unwrap());
    let (vc, vi) = (
        variance(&con, variance_kind).unwrap(),
        variance(&inc, variance_kind).unwrap(),
    );
    let denom = (vc + vi).sqrt();
    if !(denom > 0.0) {
        return Err(Error::degenerate("both IAT blocks have zero variance"));
    }
    Ok(IatScore {
        d_score: (mi - mc) / denom,
        mean_congruent_ms: mc,
        mean_incongruent_ms: mi,
        var_congruent: vc,
        var_incongruent: vi,
        n_congruent: con.len(),
        n_incongruent: inc.len(),
        excluded: false,
        exclusion_reason: None,
    })
}

/// Screening plus scoring for one respondent's scored trials.
pub fn score_respondent(trials: &[IatTrial], config: &IatConfig) -> Result<IatScore> {
    let screen = validate_trials(trials, config)?;
    let mut score = compute_iat(&screen.kept, config.variance)?;
    score.excluded = screen.excluded;
    score.exclusion_reason = screen.reason;
    Ok(score)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    StereotypeConsistent,
    CounterStereotypical,
    NoPreference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strength {
    LittleOrNone,
    Slight,
    Moderate,
    Strong,
}

impl Strength {
    /// Conventional IAT feedback bands on |D|: 0.15, 0.35, 0.65.
    pub fn from_d(d: f64) -> Self {
        let a = d.abs();
        if a < 0.15 {
            Strength::LittleOrNone
        } else if a < 0.35 {
            Strength::Slight
        } else if a < 0.65 {
            Strength::Moderate
        } else {
            Strength::Strong
        }
    }

    fn word(self) -> &'static str {
        match self {
            Strength::LittleOrNone => "little or no",
            Strength::Slight => "a slight",
            Strength::Moderate => "a moderate",
            Strength::Strong => "a strong",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feedback {
    pub d_score: f64,
    pub direction: Direction,
    pub strength: Strength,
    pub summary: String,
    pub computation: String,
    pub stereotype: String,
}

pub fn render_feedback(score: &IatScore) -> Result<Feedback> {
    if score.excluded {
        let why = score.exclusion_reason.map(|r| r.as_str()).unwrap_or("excluded");
        return Err(Error::FeedbackWithheld(why.to_string()));
    }
    let d = score.d_score;
    let direction = if d > 0.0 {
        Direction::StereotypeConsistent
    } else if d < 0.0 {
        Direction::CounterStereotypical
    } else {
        Direction::NoPreference
    };
    let strength = Strength::from_d(d);
    let summary = match direction {
        Direction::StereotypeConsistent => format!(
            "Your score is {d:.2}: your responses suggest {} automatic association of male with STEM and female with humanities.",
            strength.word()
        ),
        Direction::CounterStereotypical => format!(
            "Your score is {d:.2}: your responses suggest {} automatic association of female with STEM and male with humanities.",
            strength.word()
        ),
        Direction::NoPreference => format!(
            "Your score is {d:.2}: your responses show no automatic preference between the two pairings."
        ),
    };
    let computation = format!(
        "We took your average response time when male went with STEM and female with humanities ({:.0} ms) \
         and when the pairing was reversed ({:.0} ms). The score is the difference between the two averages \
         divided by the square root of the sum of the two variances, so it does not depend on how fast you are overall.",
        score.mean_congruent_ms, score.mean_incongruent_ms
    );
    let stereotype = "The test measured the Gender-STEM stereotype: the belief that science, technology, \
                      engineering and mathematics suit men better than women."
        .to_string();
    Ok(Feedback {
        d_score: d,
        direction,
        strength,
        summary,
        computation,
        stereotype,
    })
}
