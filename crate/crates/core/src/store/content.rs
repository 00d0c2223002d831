//! Content bank: questionnaire wording, assessment forms, training modules and
//! survey prompts, loaded from a single versioned TOML document.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assessment::{AssessmentForm, FeedbackDimension, FormKind};
use crate::bfi10::{Trait, ITEM_COUNT, SCORING_KEY};
use crate::routing::{ModuleContent, TrainingModuleId};

pub const BANK_VERSION: u32 = 1;

const DEFAULT_BANK: &str = include_str!("../../data/default_bank.toml");

#[derive(Debug, Error)]
pub enum ContentError {
    #[error("cannot read content bank {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("content bank does not parse: {0}")]
    Parse(String),
    #[error("content bank is invalid: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bfi10Item {
    pub text: String,
    #[serde(rename = "trait")]
    pub trait_key: Trait,
    pub reversed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bfi10Section {
    pub stem: String,
    pub scale: Vec<String>,
    pub items: Vec<Bfi10Item>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssessmentSection {
    pub pre: AssessmentForm,
    pub post: AssessmentForm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackPrompt {
    pub dimension: FeedbackDimension,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackSection {
    pub prompts: Vec<FeedbackPrompt>,
}

/// A validated content bank. Obtain one through [`ContentBank::from_toml_str`],
/// [`load_content_bank`] or [`ContentBank::bundled`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentBank {
    pub version: u32,
    pub consent: String,
    pub bfi10: Bfi10Section,
    pub assessments: AssessmentSection,
    pub modules: Vec<ModuleContent>,
    pub feedback: FeedbackSection,
}

impl ContentBank {
    pub fn from_toml_str(text: &str) -> Result<Self, ContentError> {
        let bank: ContentBank = toml::from_str(text).map_err(|e| ContentError::Parse(e.to_string()))?;
        bank.validate().map_err(ContentError::Invalid)?;
        Ok(bank)
    }

    /// The bank compiled into the binary.
    pub fn bundled() -> Self {
        Self::from_toml_str(DEFAULT_BANK).expect("bundled content bank is valid")
    }

    pub fn bundled_source() -> &'static str {
        DEFAULT_BANK
    }

    pub fn form(&self, kind: FormKind) -> &AssessmentForm {
        match kind {
            FormKind::Pre => &self.assessments.pre,
            FormKind::Post => &self.assessments.post,
        }
    }

    pub fn module(&self, id: TrainingModuleId) -> &ModuleContent {
        self.modules
            .iter()
            .find(|m| m.id == id)
            .expect("validated bank holds every module")
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.version != BANK_VERSION {
            return Err(format!("unsupported version {}, expected {BANK_VERSION}", self.version));
        }
        if self.consent.trim().is_empty() {
            return Err("consent text must not be empty".into());
        }

        let items = &self.bfi10.items;
        if items.len() != ITEM_COUNT {
            return Err(format!("bfi10 has {} items, expected {ITEM_COUNT}", items.len()));
        }
        for (i, (item, &(t, reversed))) in items.iter().zip(SCORING_KEY.iter()).enumerate() {
            if item.trait_key != t || item.reversed != reversed {
                return Err(format!(
                    "bfi10 item {} is keyed ({}, reversed={}), scoring expects ({}, reversed={})",
                    i + 1,
                    item.trait_key.as_str(),
                    item.reversed,
                    t.as_str(),
                    reversed
                ));
            }
            if item.text.trim().is_empty() {
                return Err(format!("bfi10 item {} has empty text", i + 1));
            }
        }
        if self.bfi10.scale.len() != 5 {
            return Err(format!("bfi10 scale has {} labels, expected 5", self.bfi10.scale.len()));
        }

        let pre = &self.assessments.pre;
        let post = &self.assessments.post;
        if pre.kind != FormKind::Pre || post.kind != FormKind::Post {
            return Err("assessments.pre and assessments.post must declare kinds pre and post".into());
        }
        pre.validate()?;
        post.validate()?;
        let pre_ids: HashSet<&str> = pre.items.iter().map(|i| i.id.as_str()).collect();
        if let Some(shared) = post.items.iter().find(|i| pre_ids.contains(i.id.as_str())) {
            return Err(format!("pre and post forms share item id `{}`", shared.id));
        }

        if self.modules.len() != TrainingModuleId::ALL.len() {
            return Err(format!("bank has {} modules, expected 4", self.modules.len()));
        }
        for id in TrainingModuleId::ALL {
            let count = self.modules.iter().filter(|m| m.id == id).count();
            if count != 1 {
                return Err(format!("module {id} appears {count} times, expected once"));
            }
        }
        for m in &self.modules {
            m.validate()?;
        }

        let prompts = &self.feedback.prompts;
        if prompts.len() != FeedbackDimension::ALL.len()
            || !FeedbackDimension::ALL
                .iter()
                .all(|d| prompts.iter().filter(|p| p.dimension == *d).count() == 1)
        {
            return Err("feedback must hold exactly one prompt per dimension (4 prompts)".into());
        }
        Ok(())
    }
}

/// Reads and validates a bank from disk; never returns a partial bank.
pub fn load_content_bank(path: impl AsRef<Path>) -> Result<ContentBank, ContentError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ContentError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ContentBank::from_toml_str(&text)
}
