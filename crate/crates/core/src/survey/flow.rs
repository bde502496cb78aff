//! Session state machine.
//!
//! Phases run Framing → TaskA → Checkpoint → TaskB → Questionnaire → Done,
//! where TaskA is the IAT when the assignment says `iat_first` and the SIT
//! otherwise. Framing (for the NoFrame arm) and Checkpoint have nothing to
//! show: `next_step` looks through them, and the first submission for the
//! following task moves the state past them. Every accepted change is also
//! appended to the session's event list, so replaying the list through
//! [`Session::replay`] rebuilds the same session.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iat::{self, BlockDescriptor, Feedback, IatConfig, IatTrial};
use crate::psychometrics::scales::{default_scales, ScaleDefinition};
use crate::survey::assignment::{FramingArm, SessionAssignment};
use crate::survey::pool::PoolLayout;
use crate::survey::questionnaire::{build_pages, validate_answers, PageAnswers, PageDefinition};

pub const MAX_COMMENT_CHARS: usize = 10_000;

/// Everything about the instrument that is fixed across sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub layout: PoolLayout,
    pub iat: IatConfig,
    pub scales: Vec<ScaleDefinition>,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            layout: PoolLayout::default(),
            iat: IatConfig::default(),
            scales: default_scales(),
        }
    }
}

impl Protocol {
    pub fn pages(&self) -> Vec<PageDefinition> {
        build_pages(&self.scales)
    }

    pub fn schedule(&self, assignment: &SessionAssignment) -> Vec<BlockDescriptor> {
        iat::schedule_blocks(assignment.iat_seed(), &self.iat)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    Framing,
    TaskA,
    Checkpoint,
    TaskB,
    Questionnaire,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    Sit,
    Iat,
}

impl SessionAssignment {
    pub fn task_for(&self, phase: Phase) -> Option<Task> {
        match (phase, self.iat_first) {
            (Phase::TaskA, true) | (Phase::TaskB, false) => Some(Task::Iat),
            (Phase::TaskA, false) | (Phase::TaskB, true) => Some(Task::Sit),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub phase: Phase,
    /// SIT: index of the current image. IAT: trials recorded so far.
    /// Questionnaire: next page index.
    pub cursor: usize,
    /// SIT only: the current image is rated and its comment is pending.
    pub awaiting_comment: bool,
}

impl SessionState {
    pub fn fresh() -> Self {
        SessionState {
            phase: Phase::Framing,
            cursor: 0,
            awaiting_comment: false,
        }
    }

    fn enter(phase: Phase) -> Self {
        SessionState {
            phase,
            cursor: 0,
            awaiting_comment: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StepDescriptor {
    Framing {
        arm: FramingArm,
        text: String,
    },
    Rate {
        position: usize,
        image_id: String,
    },
    Comment {
        position: usize,
        image_id: String,
    },
    IatBlock {
        block: BlockDescriptor,
        next_trial_index: u32,
    },
    IatFeedback,
    Questionnaire {
        page: PageDefinition,
    },
    Done,
}

fn iat_total(schedule: &[BlockDescriptor]) -> usize {
    schedule.iter().map(|b| b.trial_count as usize).sum()
}

/// Block and trial index expected for the `cursor`-th IAT trial.
fn iat_position(schedule: &[BlockDescriptor], cursor: usize) -> Option<(&BlockDescriptor, u32)> {
    let mut left = cursor;
    for b in schedule {
        if left < b.trial_count as usize {
            return Some((b, b.first_trial_index + left as u32));
        }
        left -= b.trial_count as usize;
    }
    None
}

/// What the respondent should see next. Pure in its inputs.
pub fn next_step(state: &SessionState, assignment: &SessionAssignment, protocol: &Protocol) -> StepDescriptor {
    match state.phase {
        Phase::Framing => {
            if assignment.framing == FramingArm::NoFrame {
                next_step(&SessionState::enter(Phase::TaskA), assignment, protocol)
            } else {
                StepDescriptor::Framing {
                    arm: assignment.framing,
                    text: assignment.framing.text().to_string(),
                }
            }
        }
        Phase::Checkpoint => next_step(&SessionState::enter(Phase::TaskB), assignment, protocol),
        Phase::TaskA | Phase::TaskB => match assignment.task_for(state.phase).unwrap() {
            Task::Sit => {
                let image_id = assignment.image_sequence[state.cursor].clone();
                if state.awaiting_comment {
                    StepDescriptor::Comment {
                        position: state.cursor,
                        image_id,
                    }
                } else {
                    StepDescriptor::Rate {
                        position: state.cursor,
                        image_id,
                    }
                }
            }
            Task::Iat => {
                let schedule = protocol.schedule(assignment);
                match iat_position(&schedule, state.cursor) {
                    Some((block, idx)) => StepDescriptor::IatBlock {
                        block: block.clone(),
                        next_trial_index: idx,
                    },
                    None => StepDescriptor::IatFeedback,
                }
            }
        },
        Phase::Questionnaire => StepDescriptor::Questionnaire {
            page: protocol.pages()[state.cursor].clone(),
        },
        Phase::Done => StepDescriptor::Done,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingEvent {
    pub session_id: String,
    pub image_id: String,
    pub rating: u8,
    pub rating_time_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommentEvent {
    pub session_id: String,
    pub image_id: String,
    pub text: String,
    pub comment_time_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum SessionEvent {
    Assigned(SessionAssignment),
    Rated(RatingEvent),
    Commented(CommentEvent),
    IatTrial(IatTrial),
    IatFeedbackShown { revealed: bool },
    QuestionnaireAnswered { page: usize, answers: PageAnswers },
    Completed,
}

impl SessionEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            SessionEvent::Assigned(_) => "Assigned",
            SessionEvent::Rated(_) => "Rated",
            SessionEvent::Commented(_) => "Commented",
            SessionEvent::IatTrial(_) => "IatTrial",
            SessionEvent::IatFeedbackShown { .. } => "IatFeedbackShown",
            SessionEvent::QuestionnaireAnswered { .. } => "QuestionnaireAnswered",
            SessionEvent::Completed => "Completed",
        }
    }
}

/// Outcome of the feedback step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FeedbackOutcome {
    Shown { feedback: Feedback },
    Withheld { reason: String },
}

#[derive(Debug, Clone)]
pub struct Session {
    assignment: SessionAssignment,
    protocol: Arc<Protocol>,
    schedule: Vec<BlockDescriptor>,
    pages: Vec<PageDefinition>,
    state: SessionState,
    phases: Vec<Phase>,
    rated: HashSet<String>,
    commented: HashSet<String>,
    ratings: Vec<RatingEvent>,
    comments: Vec<CommentEvent>,
    iat_trials: Vec<IatTrial>,
    answers: Vec<(usize, PageAnswers)>,
    feedback: Option<FeedbackOutcome>,
    completed: bool,
    events: Vec<SessionEvent>,
}

impl Session {
    pub fn start(assignment: SessionAssignment, protocol: Arc<Protocol>) -> Result<Self> {
        if assignment.image_sequence.len() != protocol.layout.per_session {
            return Err(Error::validation(format!(
                "assignment has {} images, protocol expects {}",
                assignment.image_sequence.len(),
                protocol.layout.per_session
            )));
        }
        let schedule = protocol.schedule(&assignment);
        let pages = protocol.pages();
        Ok(Session {
            events: vec![SessionEvent::Assigned(assignment.clone())],
            assignment,
            protocol,
            schedule,
            pages,
            state: SessionState::fresh(),
            phases: vec![Phase::Framing],
            rated: HashSet::new(),
            commented: HashSet::new(),
            ratings: Vec::new(),
            comments: Vec::new(),
            iat_trials: Vec::new(),
            answers: Vec::new(),
            feedback: None,
            completed: false,
        })
    }

    /// Rebuilds a session from its event list. The first event must be `Assigned`.
    pub fn replay(events: &[SessionEvent], protocol: Arc<Protocol>) -> Result<Self> {
        let (first, rest) = events
            .split_first()
            .ok_or_else(|| Error::Sequencing("empty event list".into()))?;
        let SessionEvent::Assigned(a) = first else {
            return Err(Error::Sequencing(format!(
                "first event is {}, not Assigned",
                first.kind()
            )));
        };
        let mut s = Session::start(a.clone(), protocol)?;
        for e in rest {
            s.apply(e.clone())?;
        }
        Ok(s)
    }

    pub fn id(&self) -> &str {
        &self.assignment.session_id
    }

    pub fn assignment(&self) -> &SessionAssignment {
        &self.assignment
    }

    pub fn protocol(&self) -> &Protocol {
        &self.protocol
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn schedule(&self) -> &[BlockDescriptor] {
        &self.schedule
    }

    pub fn ratings(&self) -> &[RatingEvent] {
        &self.ratings
    }

    pub fn comments(&self) -> &[CommentEvent] {
        &self.comments
    }

    pub fn iat_trials(&self) -> &[IatTrial] {
        &self.iat_trials
    }

    pub fn answers(&self) -> &[(usize, PageAnswers)] {
        &self.answers
    }

    pub fn pages(&self) -> &[PageDefinition] {
        &self.pages
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn feedback(&self) -> Option<&FeedbackOutcome> {
        self.feedback.as_ref()
    }

    pub fn is_complete(&self) -> bool {
        self.completed
    }

    /// True when the respondent saw their IAT result before the SIT.
    pub fn iat_revealed(&self) -> bool {
        matches!(self.feedback, Some(FeedbackOutcome::Shown { .. }))
    }

    pub fn next_step(&self) -> StepDescriptor {
        next_step(&self.state, &self.assignment, &self.protocol)
    }

    pub fn iat_complete(&self) -> bool {
        self.iat_trials.len() == iat_total(&self.schedule)
    }

    fn set_phase(&mut self, phase: Phase) {
        debug_assert!(phase > self.state.phase);
        self.state = SessionState::enter(phase);
        self.phases.push(phase);
    }

    /// Moves through Framing/Checkpoint when a submission for `task` arrives.
    fn enter_task(&mut self, task: Task, what: &str) -> Result<()> {
        let target = match self.state.phase {
            Phase::Framing => Phase::TaskA,
            Phase::Checkpoint => Phase::TaskB,
            Phase::TaskA | Phase::TaskB => self.state.phase,
            Phase::Questionnaire | Phase::Done => {
                return Err(Error::Sequencing(format!("{what} not expected in the questionnaire")))
            }
        };
        if self.assignment.task_for(target) != Some(task) {
            return Err(Error::Sequencing(format!(
                "{what} not expected now: {:?} is running",
                self.assignment.task_for(target).unwrap()
            )));
        }
        if target != self.state.phase {
            self.set_phase(target);
        }
        Ok(())
    }

    /// Called when the task in the current phase has nothing left to do.
    fn finish_task(&mut self) {
        match self.state.phase {
            Phase::TaskA => self.set_phase(Phase::Checkpoint),
            Phase::TaskB => self.set_phase(Phase::Questionnaire),
            _ => unreachable!("finish_task outside a task phase"),
        }
    }

    pub fn record_rating(&mut self, event: RatingEvent) -> Result<SessionState> {
        self.apply(SessionEvent::Rated(event))?;
        Ok(self.state)
    }

    pub fn record_comment(&mut self, event: CommentEvent) -> Result<SessionState> {
        self.apply(SessionEvent::Commented(event))?;
        Ok(self.state)
    }

    /// Accepts a batch of trials atomically: either all are recorded or none.
    pub fn record_iat_trials(&mut self, trials: Vec<IatTrial>) -> Result<SessionState> {
        let mut scratch = self.clone();
        for t in trials {
            scratch.apply(SessionEvent::IatTrial(t))?;
        }
        *self = scratch;
        Ok(self.state)
    }

    /// Scores the IAT and records whether feedback was shown. Repeat calls
    /// return the stored outcome without recording anything new.
    pub fn show_feedback(&mut self) -> Result<FeedbackOutcome> {
        if let Some(f) = &self.feedback {
            return Ok(f.clone());
        }
        let revealed = matches!(self.feedback_outcome()?, FeedbackOutcome::Shown { .. });
        self.apply(SessionEvent::IatFeedbackShown { revealed })?;
        Ok(self.feedback.clone().unwrap())
    }

    fn feedback_outcome(&self) -> Result<FeedbackOutcome> {
        if !self.assignment.iat_first {
            return Err(Error::Sequencing(
                "feedback is only given when the IAT comes first".into(),
            ));
        }
        if !(self.state.phase == Phase::TaskA && self.iat_complete()) {
            return Err(Error::Sequencing("IAT not complete".into()));
        }
        let scored: Vec<IatTrial> = iat::scored_only(&self.iat_trials, &self.protocol.iat)
            .into_iter()
            .cloned()
            .collect();
        let outcome = iat::score_respondent(&scored, &self.protocol.iat).and_then(|s| iat::render_feedback(&s));
        Ok(match outcome {
            Ok(feedback) => FeedbackOutcome::Shown { feedback },
            Err(e) => FeedbackOutcome::Withheld { reason: e.to_string() },
        })
    }

    pub fn record_answers(&mut self, page: usize, answers: PageAnswers) -> Result<SessionState> {
        self.apply(SessionEvent::QuestionnaireAnswered { page, answers })?;
        if self.state.phase == Phase::Done {
            self.apply(SessionEvent::Completed)?;
        }
        Ok(self.state)
    }

    /// Validates and applies one event. On error the session is unchanged.
    pub fn apply(&mut self, event: SessionEvent) -> Result<()> {
        match &event {
            SessionEvent::Assigned(_) => {
                return Err(Error::Sequencing("session already assigned".into()));
            }
            SessionEvent::Rated(e) => self.apply_rating(e)?,
            SessionEvent::Commented(e) => self.apply_comment(e)?,
            SessionEvent::IatTrial(t) => self.apply_trial(t)?,
            SessionEvent::IatFeedbackShown { revealed } => {
                let outcome = self.feedback_outcome()?;
                if *revealed != matches!(outcome, FeedbackOutcome::Shown { .. }) {
                    return Err(Error::validation("feedback flag disagrees with the recorded IAT"));
                }
                self.feedback = Some(outcome);
                self.finish_task();
            }
            SessionEvent::QuestionnaireAnswered { page, answers } => self.apply_answers(*page, answers)?,
            SessionEvent::Completed => {
                if self.state.phase != Phase::Done || self.completed {
                    return Err(Error::Sequencing("completion before the questionnaire ended".into()));
                }
                self.completed = true;
            }
        }
        self.events.push(event);
        Ok(())
    }

    fn check_session(&self, id: &str) -> Result<()> {
        if id != self.assignment.session_id {
            return Err(Error::validation(format!(
                "event for session {id} sent to session {}",
                self.assignment.session_id
            )));
        }
        Ok(())
    }

    fn apply_rating(&mut self, e: &RatingEvent) -> Result<()> {
        self.check_session(&e.session_id)?;
        let Some(pos) = self.assignment.image_sequence.iter().position(|x| *x == e.image_id) else {
            return Err(Error::validation(format!(
                "image {} is not in this session",
                e.image_id
            )));
        };
        if self.rated.contains(&e.image_id) {
            return Err(Error::Immutable(format!("image {} already rated", e.image_id)));
        }
        if !(1..=5).contains(&e.rating) {
            return Err(Error::validation(format!("rating {} outside 1..5", e.rating)));
        }
        let before = self.clone_state();
        self.enter_task(Task::Sit, "rating")?;
        if self.state.awaiting_comment || self.state.cursor != pos {
            self.restore(before);
            return Err(Error::Sequencing(format!(
                "rating for image {} (position {pos}) out of order",
                e.image_id
            )));
        }
        self.rated.insert(e.image_id.clone());
        self.ratings.push(e.clone());
        self.state.awaiting_comment = true;
        Ok(())
    }

    fn apply_comment(&mut self, e: &CommentEvent) -> Result<()> {
        self.check_session(&e.session_id)?;
        if !self.assignment.image_sequence.contains(&e.image_id) {
            return Err(Error::validation(format!(
                "image {} is not in this session",
                e.image_id
            )));
        }
        if e.text.chars().count() > MAX_COMMENT_CHARS {
            return Err(Error::validation(format!(
                "comment longer than {MAX_COMMENT_CHARS} characters"
            )));
        }
        if !self.rated.contains(&e.image_id) {
            return Err(Error::Sequencing(format!(
                "comment for image {} before its rating",
                e.image_id
            )));
        }
        if self.commented.contains(&e.image_id) {
            return Err(Error::Immutable(format!("image {} already commented", e.image_id)));
        }
        let current = self.assignment.image_sequence.get(self.state.cursor);
        let in_sit = self.assignment.task_for(self.state.phase) == Some(Task::Sit);
        if !(in_sit && self.state.awaiting_comment && current == Some(&e.image_id)) {
            return Err(Error::Sequencing(format!(
                "comment for image {} out of order",
                e.image_id
            )));
        }
        self.commented.insert(e.image_id.clone());
        self.comments.push(e.clone());
        self.state.awaiting_comment = false;
        self.state.cursor += 1;
        if self.state.cursor == self.assignment.image_sequence.len() {
            self.finish_task();
        }
        Ok(())
    }

    fn apply_trial(&mut self, t: &IatTrial) -> Result<()> {
        self.check_session(&t.session_id)?;
        if t.reaction_time_ms == 0 {
            return Err(Error::validation("reaction time must be positive"));
        }
        let before = self.clone_state();
        self.enter_task(Task::Iat, "IAT trial")?;
        let expected = iat_position(&self.schedule, self.state.cursor).map(|(b, i)| {
            let k = (i - b.first_trial_index) as usize;
            (b.block, i, b.stimuli[k].clone())
        });
        match expected {
            Some((block, idx, stim)) if block == t.block && idx == t.trial_index => {
                if stim != t.stimulus_id {
                    self.restore(before);
                    return Err(Error::validation(format!(
                        "trial {idx}: stimulus {} does not match scheduled {stim}",
                        t.stimulus_id
                    )));
                }
            }
            Some((block, idx, _)) => {
                self.restore(before);
                return Err(Error::Sequencing(format!(
                    "expected {block:?} trial {idx}, got {:?} trial {}",
                    t.block, t.trial_index
                )));
            }
            None => {
                self.restore(before);
                return Err(Error::Sequencing("IAT already complete".into()));
            }
        }
        self.iat_trials.push(t.clone());
        self.state.cursor += 1;
        // IAT second, or first without a feedback step left: move on.
        if self.iat_complete() && !self.assignment.iat_first {
            self.finish_task();
        }
        Ok(())
    }

    fn apply_answers(&mut self, page: usize, answers: &PageAnswers) -> Result<()> {
        if self.state.phase != Phase::Questionnaire {
            return Err(Error::Sequencing("questionnaire not reached".into()));
        }
        if page != self.state.cursor {
            return Err(Error::Sequencing(format!(
                "expected questionnaire page {}, got {page}",
                self.state.cursor
            )));
        }
        validate_answers(&self.pages[page], answers)?;
        self.answers.push((page, answers.clone()));
        self.state.cursor += 1;
        if self.state.cursor == self.pages.len() {
            self.set_phase(Phase::Done);
        }
        Ok(())
    }

    fn clone_state(&self) -> (SessionState, usize) {
        (self.state, self.phases.len())
    }

    fn restore(&mut self, (state, n): (SessionState, usize)) {
        self.state = state;
        self.phases.truncate(n);
    }
}
