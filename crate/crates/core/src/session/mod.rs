//! Participant workflow state machine.
//!
//! ```text
//! Consent -> PreAssessment -+- pass -> PassScreen -+- ChoosePostAfterPass -> PostAssessment
//!                           |                      +- ExitAfterPass -> Complete
//!                           +- fail, traditional -> Training(GeneralAwarenessVideo)
//!                           +- fail, personality-conditional -> Bfi10Questionnaire -> Training(routed)
//! Training --(gate met, TrainingDone)--> PostAssessment -> Feedback -> Complete
//! any non-terminal state --Abandon--> Abandoned
//! ```
//!
//! [`advance`] is pure: it never mutates its input and the same
//! `(record, event)` pair always yields the same result.

mod allocation;

use std::collections::BTreeSet;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use uuid::Uuid;

pub use allocation::{AllocationMode, AllocationPolicy};

use crate::assessment::{score_assessment, AssessmentError, AssessmentResult, FeedbackResponse, FormKind};
use crate::bfi10::{Bfi10Error, Bfi10Responses, Trait, TraitProfile};
use crate::routing::{route_from_responses, ModuleContent, TrainingModuleId};
use crate::store::ContentBank;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("event `{event}` is not allowed in state `{state}`")]
    IllegalEvent { state: SessionState, event: &'static str },
    #[error("training for {module} is not complete yet")]
    GateNotSatisfied { module: TrainingModuleId },
    #[error("asset `{asset}` does not belong to module {module}")]
    UnknownAsset { module: TrainingModuleId, asset: String },
    #[error("operation requires a training state, session is in `{0}`")]
    WrongState(SessionState),
    #[error("allocation exhausted: no condition left to assign")]
    AllocationExhausted,
    #[error(transparent)]
    Assessment(#[from] AssessmentError),
    #[error(transparent)]
    Bfi10(#[from] Bfi10Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Traditional,
    PersonalityConditional,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Traditional => "traditional",
            Condition::PersonalityConditional => "personality_conditional",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "traditional" => Some(Condition::Traditional),
            "personality_conditional" => Some(Condition::PersonalityConditional),
            _ => None,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum SessionState {
    Consent,
    PreAssessment,
    PassScreen,
    Bfi10Questionnaire,
    Training { module: TrainingModuleId },
    PostAssessment,
    Feedback,
    Complete,
    Abandoned,
}

impl SessionState {
    pub fn is_terminal(self) -> bool {
        matches!(self, SessionState::Complete | SessionState::Abandoned)
    }

    pub fn name(self) -> &'static str {
        match self {
            SessionState::Consent => "consent",
            SessionState::PreAssessment => "pre_assessment",
            SessionState::PassScreen => "pass_screen",
            SessionState::Bfi10Questionnaire => "bfi10_questionnaire",
            SessionState::Training { .. } => "training",
            SessionState::PostAssessment => "post_assessment",
            SessionState::Feedback => "feedback",
            SessionState::Complete => "complete",
            SessionState::Abandoned => "abandoned",
        }
    }
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SessionState::Training { module } => write!(f, "training({})", module.as_str()),
            other => f.write_str(other.name()),
        }
    }
}

/// Client-submitted workflow events.
///
/// Answer payloads carry raw integers; range and length checks happen in
/// [`advance`] so that malformed input surfaces as a typed error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SessionEvent {
    ConsentGiven,
    PreAnswers { answers: Vec<i64> },
    ChoosePostAfterPass,
    ExitAfterPass,
    BfiAnswers { responses: Vec<i64> },
    TrainingProgress { asset_id: String },
    TrainingDone,
    PostAnswers { answers: Vec<i64> },
    FeedbackGiven { feedback: FeedbackResponse },
    FeedbackSkipped,
    Abandon,
}

impl SessionEvent {
    pub fn name(&self) -> &'static str {
        match self {
            SessionEvent::ConsentGiven => "consent_given",
            SessionEvent::PreAnswers { .. } => "pre_answers",
            SessionEvent::ChoosePostAfterPass => "choose_post_after_pass",
            SessionEvent::ExitAfterPass => "exit_after_pass",
            SessionEvent::BfiAnswers { .. } => "bfi_answers",
            SessionEvent::TrainingProgress { .. } => "training_progress",
            SessionEvent::TrainingDone => "training_done",
            SessionEvent::PostAnswers { .. } => "post_answers",
            SessionEvent::FeedbackGiven { .. } => "feedback_given",
            SessionEvent::FeedbackSkipped => "feedback_skipped",
            SessionEvent::Abandon => "abandon",
        }
    }
}

/// Opaque random session identifier. Carries no participant information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(Uuid);

impl SessionId {
    pub fn random() -> Self {
        Self(Uuid::new_v4())
    }

    pub fn parse(s: &str) -> Option<Self> {
        Uuid::parse_str(s).ok().map(Self)
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.as_hyphenated().fmt(f)
    }
}

/// One participant's trajectory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: SessionId,
    pub condition: Condition,
    pub created_at: DateTime<Utc>,
    pub state: SessionState,
    /// Every state entered, in order, starting with `Consent`.
    pub history: Vec<SessionState>,
    pub pre_result: Option<AssessmentResult>,
    /// Raw questionnaire answers; subscales below are derived from these.
    pub bfi_responses: Option<Bfi10Responses>,
    pub trait_profile: Option<TraitProfile>,
    pub dominant: Option<Trait>,
    /// Routed module; set only for personality-conditional sessions.
    pub module: Option<TrainingModuleId>,
    /// Asset ids swiped or marked complete in the current training module.
    pub training_progress: BTreeSet<String>,
    pub training_completed: bool,
    /// Set when the participant passed the pre-assessment and went straight
    /// to the post-assessment without training.
    pub skipped_training: bool,
    pub post_result: Option<AssessmentResult>,
    pub feedback: Option<FeedbackResponse>,
}

impl SessionRecord {
    pub fn new(session_id: SessionId, condition: Condition, created_at: DateTime<Utc>) -> Self {
        Self {
            session_id,
            condition,
            created_at,
            state: SessionState::Consent,
            history: vec![SessionState::Consent],
            pre_result: None,
            bfi_responses: None,
            trait_profile: None,
            dominant: None,
            module: None,
            training_progress: BTreeSet::new(),
            training_completed: false,
            skipped_training: false,
            post_result: None,
            feedback: None,
        }
    }

    pub fn visited(&self, pred: impl Fn(&SessionState) -> bool) -> bool {
        self.history.iter().any(pred)
    }

    fn enter(&mut self, state: SessionState) {
        self.state = state;
        self.history.push(state);
    }

    /// Structural invariants that must hold after every transition.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.history.first() != Some(&SessionState::Consent) {
            return Err("history must start at consent".into());
        }
        if self.history.last() != Some(&self.state) {
            return Err("state must equal the last history entry".into());
        }
        let reached_bfi = self.visited(|s| *s == SessionState::Bfi10Questionnaire);
        let routed = self.trait_profile.is_some();
        if routed != self.dominant.is_some() || routed != self.bfi_responses.is_some() || routed != self.module.is_some() {
            return Err("profile, dominant trait, module and raw responses must be present together".into());
        }
        if routed && (self.condition != Condition::PersonalityConditional || !reached_bfi) {
            return Err("trait data only for personality-conditional sessions that reached the questionnaire".into());
        }
        if self.condition == Condition::Traditional && reached_bfi {
            return Err("traditional session entered the questionnaire".into());
        }
        if self.post_result.is_some() && !self.visited(|s| *s == SessionState::PostAssessment) {
            return Err("post result without post-assessment".into());
        }
        // The third state entered is whatever followed the scored pre-assessment.
        let pre_scored = self.history.get(2).is_some_and(|s| *s != SessionState::Abandoned);
        if self.pre_result.is_some() != pre_scored {
            return Err("pre result must be present exactly once the pre-assessment was scored".into());
        }
        if self.skipped_training && !self.visited(|s| *s == SessionState::PassScreen) {
            return Err("training can only be skipped via the pass screen".into());
        }
        if self.training_completed && !self.visited(|s| matches!(s, SessionState::Training { .. })) {
            return Err("training completed without training".into());
        }
        if self.visited(|s| *s == SessionState::PostAssessment) && !(self.training_completed || self.skipped_training) {
            return Err("post-assessment reached without training gate or pass".into());
        }
        if self.feedback.is_some() && self.state != SessionState::Complete {
            return Err("feedback recorded before completion".into());
        }
        Ok(())
    }
}

/// Starts a new anonymous session with a condition drawn from `policy`.
pub fn create_session(policy: &AllocationPolicy, now: DateTime<Utc>) -> Result<SessionRecord, SessionError> {
    let condition = policy.allocate()?;
    Ok(SessionRecord::new(SessionId::random(), condition, now))
}

/// Applies one event, returning the next record or an error that leaves the
/// input untouched.
pub fn advance(record: &SessionRecord, event: &SessionEvent, bank: &ContentBank) -> Result<SessionRecord, SessionError> {
    use SessionEvent as E;
    use SessionState as S;

    let illegal = || SessionError::IllegalEvent {
        state: record.state,
        event: event.name(),
    };
    let mut next = record.clone();

    match (record.state, event) {
        (state, E::Abandon) if !state.is_terminal() => next.enter(S::Abandoned),
        (S::Consent, E::ConsentGiven) => next.enter(S::PreAssessment),
        (S::PreAssessment, E::PreAnswers { answers }) => {
            let result = score_assessment(bank.form(FormKind::Pre), answers)?;
            next.pre_result = Some(result);
            next.enter(if result.passed {
                S::PassScreen
            } else {
                match record.condition {
                    Condition::Traditional => S::Training {
                        module: TrainingModuleId::GeneralAwarenessVideo,
                    },
                    Condition::PersonalityConditional => S::Bfi10Questionnaire,
                }
            });
        }
        (S::PassScreen, E::ChoosePostAfterPass) => {
            next.skipped_training = true;
            next.enter(S::PostAssessment);
        }
        (S::PassScreen, E::ExitAfterPass) => next.enter(S::Complete),
        (S::Bfi10Questionnaire, E::BfiAnswers { responses }) => {
            let responses = Bfi10Responses::from_values(responses)?;
            let decision = route_from_responses(&responses);
            next.bfi_responses = Some(responses);
            next.trait_profile = Some(decision.profile);
            next.dominant = Some(decision.dominant);
            next.module = Some(decision.module);
            next.enter(S::Training { module: decision.module });
        }
        (S::Training { module }, E::TrainingProgress { asset_id }) => {
            if bank.module(module).asset(asset_id).is_none() {
                return Err(SessionError::UnknownAsset {
                    module,
                    asset: asset_id.clone(),
                });
            }
            next.training_progress.insert(asset_id.clone());
        }
        (S::Training { module }, E::TrainingDone) => {
            if !training_gate_satisfied(record, bank.module(module))? {
                return Err(SessionError::GateNotSatisfied { module });
            }
            next.training_completed = true;
            next.enter(S::PostAssessment);
        }
        (S::PostAssessment, E::PostAnswers { answers }) => {
            next.post_result = Some(score_assessment(bank.form(FormKind::Post), answers)?);
            next.enter(S::Feedback);
        }
        (S::Feedback, E::FeedbackGiven { feedback }) => {
            next.feedback = Some(*feedback);
            next.enter(S::Complete);
        }
        (S::Feedback, E::FeedbackSkipped) => next.enter(S::Complete),
        _ => return Err(illegal()),
    }
    Ok(next)
}

/// Whether the training module's completion rule is met by the progress
/// accumulated so far.
pub fn training_gate_satisfied(record: &SessionRecord, content: &ModuleContent) -> Result<bool, SessionError> {
    match record.state {
        SessionState::Training { .. } => Ok(content.is_complete(&record.training_progress)),
        other => Err(SessionError::WrongState(other)),
    }
}

/// Rebuilds a record from its creation parameters and accepted events.
pub fn replay<'a>(
    session_id: SessionId,
    condition: Condition,
    created_at: DateTime<Utc>,
    events: impl IntoIterator<Item = &'a SessionEvent>,
    bank: &ContentBank,
) -> Result<SessionRecord, SessionError> {
    events
        .into_iter()
        .try_fold(SessionRecord::new(session_id, condition, created_at), |rec, ev| advance(&rec, ev, bank))
}
