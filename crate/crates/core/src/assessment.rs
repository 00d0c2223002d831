//! Scenario-based assessment forms and the feedback survey.
//!
//! Each form holds four multiple-choice scenarios. A correct answer is worth
//! 10 marks and an incorrect one 0, giving totals in `{0, 10, 20, 30, 40}`.
//! A total of 30 or more passes.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ITEMS_PER_FORM: usize = 4;
pub const OPTIONS_PER_ITEM: usize = 4;
pub const MARKS_PER_ITEM: u8 = 10;
pub const MAX_SCORE: u8 = 40;
pub const PASS_MARK: u8 = 30;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssessmentError {
    #[error("malformed answers: expected {ITEMS_PER_FORM} answers, got {0}")]
    AnswerCount(usize),
    #[error("malformed answers: option index {index} for item {item} is out of range 0..{OPTIONS_PER_ITEM}")]
    OptionOutOfRange { item: usize, index: i64 },
    #[error("score {0} is not a multiple of 10 in 0..=40")]
    InvalidScore(i64),
    #[error("rating {value} for {dimension} is outside 1..=5")]
    InvalidRating { dimension: &'static str, value: i64 },
    #[error("feedback summary needs at least one response")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreatCategory {
    Phishing,
    Vishing,
    Tailgating,
    Pretexting,
    Baiting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormKind {
    Pre,
    Post,
}

impl fmt::Display for FormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FormKind::Pre => "pre",
            FormKind::Post => "post",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioItem {
    pub id: String,
    pub prompt: String,
    pub options: Vec<String>,
    pub correct_index: u8,
    pub category: ThreatCategory,
}

impl ScenarioItem {
    pub fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("scenario item id must not be empty".into());
        }
        if self.options.len() != OPTIONS_PER_ITEM {
            return Err(format!(
                "scenario item `{}` has {} options, expected {OPTIONS_PER_ITEM}",
                self.id,
                self.options.len()
            ));
        }
        if usize::from(self.correct_index) >= OPTIONS_PER_ITEM {
            return Err(format!(
                "scenario item `{}` has correct_index {} outside 0..{OPTIONS_PER_ITEM}",
                self.id, self.correct_index
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssessmentForm {
    pub kind: FormKind,
    pub items: Vec<ScenarioItem>,
}

impl AssessmentForm {
    pub fn validate(&self) -> Result<(), String> {
        if self.items.len() != ITEMS_PER_FORM {
            return Err(format!(
                "{} form has {} items, expected {ITEMS_PER_FORM}",
                self.kind,
                self.items.len()
            ));
        }
        let mut seen = HashSet::new();
        for item in &self.items {
            item.validate()?;
            if !seen.insert(item.id.as_str()) {
                return Err(format!("{} form repeats item id `{}`", self.kind, item.id));
            }
        }
        Ok(())
    }

    pub fn answer_key(&self) -> Vec<i64> {
        self.items.iter().map(|i| i64::from(i.correct_index)).collect()
    }
}

/// Outcome of one scored form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AssessmentResult {
    pub score: u8,
    pub passed: bool,
    pub per_item: [bool; ITEMS_PER_FORM],
}

impl AssessmentResult {
    pub fn from_marks(per_item: [bool; ITEMS_PER_FORM]) -> Self {
        let score = per_item.iter().filter(|&&c| c).count() as u8 * MARKS_PER_ITEM;
        Self {
            score,
            passed: score >= PASS_MARK,
            per_item,
        }
    }
}

/// Scores `answers` (option indices, one per item) against `form`.
pub fn score_assessment(form: &AssessmentForm, answers: &[i64]) -> Result<AssessmentResult, AssessmentError> {
    if answers.len() != ITEMS_PER_FORM || form.items.len() != ITEMS_PER_FORM {
        return Err(AssessmentError::AnswerCount(answers.len()));
    }
    let mut per_item = [false; ITEMS_PER_FORM];
    for (i, (&answer, item)) in answers.iter().zip(&form.items).enumerate() {
        if !(0..OPTIONS_PER_ITEM as i64).contains(&answer) {
            return Err(AssessmentError::OptionOutOfRange { item: i, index: answer });
        }
        per_item[i] = answer == i64::from(item.correct_index);
    }
    Ok(AssessmentResult::from_marks(per_item))
}

/// Pass gate on a total score.
pub fn passes(score: i64) -> Result<bool, AssessmentError> {
    if !(0..=i64::from(MAX_SCORE)).contains(&score) || score % i64::from(MARKS_PER_ITEM) != 0 {
        return Err(AssessmentError::InvalidScore(score));
    }
    Ok(score >= i64::from(PASS_MARK))
}

/// The four rated dimensions of the post-training survey.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackDimension {
    Usability,
    AdaptiveContent,
    SeUnderstanding,
    EaseOfUse,
}

impl FeedbackDimension {
    pub const ALL: [FeedbackDimension; 4] = [
        FeedbackDimension::Usability,
        FeedbackDimension::AdaptiveContent,
        FeedbackDimension::SeUnderstanding,
        FeedbackDimension::EaseOfUse,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeedbackDimension::Usability => "usability",
            FeedbackDimension::AdaptiveContent => "adaptive_content",
            FeedbackDimension::SeUnderstanding => "se_understanding",
            FeedbackDimension::EaseOfUse => "ease_of_use",
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFeedback {
    usability: i64,
    adaptive_content: i64,
    se_understanding: i64,
    ease_of_use: i64,
}

/// One participant's survey ratings, each in `1..=5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawFeedback")]
pub struct FeedbackResponse {
    pub usability: u8,
    pub adaptive_content: u8,
    pub se_understanding: u8,
    pub ease_of_use: u8,
}

impl FeedbackResponse {
    pub fn new(usability: i64, adaptive_content: i64, se_understanding: i64, ease_of_use: i64) -> Result<Self, AssessmentError> {
        let check = |dimension: FeedbackDimension, value: i64| {
            if (1..=5).contains(&value) {
                Ok(value as u8)
            } else {
                Err(AssessmentError::InvalidRating {
                    dimension: dimension.as_str(),
                    value,
                })
            }
        };
        Ok(Self {
            usability: check(FeedbackDimension::Usability, usability)?,
            adaptive_content: check(FeedbackDimension::AdaptiveContent, adaptive_content)?,
            se_understanding: check(FeedbackDimension::SeUnderstanding, se_understanding)?,
            ease_of_use: check(FeedbackDimension::EaseOfUse, ease_of_use)?,
        })
    }

    pub fn rating(&self, dimension: FeedbackDimension) -> u8 {
        match dimension {
            FeedbackDimension::Usability => self.usability,
            FeedbackDimension::AdaptiveContent => self.adaptive_content,
            FeedbackDimension::SeUnderstanding => self.se_understanding,
            FeedbackDimension::EaseOfUse => self.ease_of_use,
        }
    }
}

impl TryFrom<RawFeedback> for FeedbackResponse {
    type Error = AssessmentError;

    fn try_from(r: RawFeedback) -> Result<Self, Self::Error> {
        Self::new(r.usability, r.adaptive_content, r.se_understanding, r.ease_of_use)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionSummary {
    pub dimension: FeedbackDimension,
    /// Counts for ratings 1 through 5.
    pub counts: [u32; 5],
    /// Share of ratings at 4 or 5, as a percentage rounded to one decimal.
    pub high_percent: f64,
}

impl DimensionSummary {
    pub fn from_counts(dimension: FeedbackDimension, counts: [u32; 5]) -> Result<Self, AssessmentError> {
        let n: u32 = counts.iter().sum();
        if n == 0 {
            return Err(AssessmentError::EmptyInput);
        }
        let high = counts[3] + counts[4];
        Ok(Self {
            dimension,
            counts,
            high_percent: round_to(100.0 * f64::from(high) / f64::from(n), 1),
        })
    }

    pub fn n(&self) -> u32 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeedbackSummary {
    pub n: usize,
    pub dimensions: Vec<DimensionSummary>,
}

impl FeedbackSummary {
    pub fn dimension(&self, d: FeedbackDimension) -> &DimensionSummary {
        self.dimensions
            .iter()
            .find(|s| s.dimension == d)
            .expect("summary covers every dimension")
    }
}

/// Per-dimension rating counts and the share rated 4 or higher.
pub fn summarize_feedback(responses: &[FeedbackResponse]) -> Result<FeedbackSummary, AssessmentError> {
    if responses.is_empty() {
        return Err(AssessmentError::EmptyInput);
    }
    let dimensions = FeedbackDimension::ALL
        .iter()
        .map(|&d| {
            let mut counts = [0u32; 5];
            for r in responses {
                counts[usize::from(r.rating(d)) - 1] += 1;
            }
            DimensionSummary::from_counts(d, counts)
        })
        .collect::<Result<_, _>>()?;
    Ok(FeedbackSummary {
        n: responses.len(),
        dimensions,
    })
}

pub(crate) fn round_to(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (x * scale).round() / scale
}
