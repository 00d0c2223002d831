//! Step descriptors: what a client needs to render the current state.
//!
//! Descriptors carry prompts and options only. Answer keys, the allocated
//! condition, subscale scores and the dominant trait never appear here.

use serde::Serialize;
use tailoredsec_core::assessment::{AssessmentForm, FeedbackDimension, FormKind};
use tailoredsec_core::routing::{Asset, AssetKind, CompletionRule, Reward, TrainingModuleId};
use tailoredsec_core::session::{SessionRecord, SessionState};
use tailoredsec_core::store::ContentBank;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemView {
    pub id: String,
    pub prompt: String,
    pub options: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuestionView {
    pub number: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssetView {
    pub id: String,
    pub kind: AssetKind,
    pub title: String,
    pub body: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub media_ref: Option<String>,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProgressView {
    pub completed: usize,
    pub required: usize,
    pub gate_open: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PromptView {
    pub dimension: FeedbackDimension,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepContent {
    Consent {
        text: String,
    },
    Assessment {
        form: FormKind,
        items: Vec<ItemView>,
    },
    PassScreen {
        score: u8,
        max_score: u8,
    },
    Questionnaire {
        stem: String,
        scale: Vec<String>,
        items: Vec<QuestionView>,
    },
    Training {
        module: TrainingModuleId,
        title: String,
        assets: Vec<AssetView>,
        completion_rule: CompletionRule,
        progress: ProgressView,
        #[serde(skip_serializing_if = "Option::is_none")]
        reward: Option<Reward>,
    },
    Feedback {
        scale_min: u8,
        scale_max: u8,
        prompts: Vec<PromptView>,
    },
    Complete {
        pre_score: Option<u8>,
        post_score: Option<u8>,
        passed_pre: Option<bool>,
        passed_post: Option<bool>,
        max_score: u8,
    },
    Abandoned,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDescriptor {
    pub session_id: String,
    pub state: &'static str,
    /// Event types the server will accept in this state.
    pub accepts: Vec<&'static str>,
    pub content: StepContent,
}

fn items(form: &AssessmentForm) -> Vec<ItemView> {
    form.items
        .iter()
        .map(|i| ItemView {
            id: i.id.clone(),
            prompt: i.prompt.clone(),
            options: i.options.clone(),
        })
        .collect()
}

fn asset_view(a: &Asset, record: &SessionRecord) -> AssetView {
    AssetView {
        id: a.id.clone(),
        kind: a.kind,
        title: a.title.clone(),
        body: a.body.clone(),
        media_ref: a.media_ref.clone(),
        done: record.training_progress.contains(&a.id),
    }
}

fn accepts(state: SessionState) -> Vec<&'static str> {
    let mut v: Vec<&'static str> = match state {
        SessionState::Consent => vec!["consent_given"],
        SessionState::PreAssessment => vec!["pre_answers"],
        SessionState::PassScreen => vec!["choose_post_after_pass", "exit_after_pass"],
        SessionState::Bfi10Questionnaire => vec!["bfi_answers"],
        SessionState::Training { .. } => vec!["training_progress", "training_done"],
        SessionState::PostAssessment => vec!["post_answers"],
        SessionState::Feedback => vec!["feedback_given", "feedback_skipped"],
        SessionState::Complete | SessionState::Abandoned => vec![],
    };
    if !state.is_terminal() {
        v.push("abandon");
    }
    v
}

pub fn describe(record: &SessionRecord, bank: &ContentBank) -> StepDescriptor {
    use tailoredsec_core::assessment::MAX_SCORE;

    let content = match record.state {
        SessionState::Consent => StepContent::Consent {
            text: bank.consent.clone(),
        },
        SessionState::PreAssessment => StepContent::Assessment {
            form: FormKind::Pre,
            items: items(bank.form(FormKind::Pre)),
        },
        SessionState::PostAssessment => StepContent::Assessment {
            form: FormKind::Post,
            items: items(bank.form(FormKind::Post)),
        },
        SessionState::PassScreen => StepContent::PassScreen {
            score: record.pre_result.map(|r| r.score).unwrap_or_default(),
            max_score: MAX_SCORE,
        },
        SessionState::Bfi10Questionnaire => StepContent::Questionnaire {
            stem: bank.bfi10.stem.clone(),
            scale: bank.bfi10.scale.clone(),
            items: bank
                .bfi10
                .items
                .iter()
                .enumerate()
                .map(|(i, item)| QuestionView {
                    number: i + 1,
                    text: item.text.clone(),
                })
                .collect(),
        },
        SessionState::Training { module } => {
            let m = bank.module(module);
            let required = match m.completion_rule {
                CompletionRule::AllCardsSwiped(n) => n as usize,
                CompletionRule::MediaMarkedComplete => m.assets.iter().filter(|a| a.kind == AssetKind::Media).count(),
            };
            let completed = m
                .assets
                .iter()
                .filter(|a| record.training_progress.contains(&a.id))
                .count();
            StepContent::Training {
                module,
                title: m.title.clone(),
                assets: m.assets.iter().map(|a| asset_view(a, record)).collect(),
                completion_rule: m.completion_rule,
                progress: ProgressView {
                    completed,
                    required,
                    gate_open: m.is_complete(&record.training_progress),
                },
                reward: m.reward.clone(),
            }
        }
        SessionState::Feedback => StepContent::Feedback {
            scale_min: 1,
            scale_max: 5,
            prompts: bank
                .feedback
                .prompts
                .iter()
                .map(|p| PromptView {
                    dimension: p.dimension,
                    text: p.text.clone(),
                })
                .collect(),
        },
        SessionState::Complete => StepContent::Complete {
            pre_score: record.pre_result.map(|r| r.score),
            post_score: record.post_result.map(|r| r.score),
            passed_pre: record.pre_result.map(|r| r.passed),
            passed_post: record.post_result.map(|r| r.passed),
            max_score: MAX_SCORE,
        },
        SessionState::Abandoned => StepContent::Abandoned,
    };
    StepDescriptor {
        session_id: record.session_id.to_string(),
        state: record.state.name(),
        accepts: accepts(record.state),
        content,
    }
}
