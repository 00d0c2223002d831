//! Dominant-trait content routing.
//!
//! Five traits map onto four training modules: Conscientiousness and
//! Neuroticism share the general awareness video.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bfi10::{dominant_trait, score_bfi10, Bfi10Responses, Trait, TraitProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingModuleId {
    SwipeableCards,
    GeneralAwarenessVideo,
    AudioPodcast,
    StorytellingVideo,
}

impl TrainingModuleId {
    pub const ALL: [TrainingModuleId; 4] = [
        TrainingModuleId::SwipeableCards,
        TrainingModuleId::GeneralAwarenessVideo,
        TrainingModuleId::AudioPodcast,
        TrainingModuleId::StorytellingVideo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TrainingModuleId::SwipeableCards => "swipeable_cards",
            TrainingModuleId::GeneralAwarenessVideo => "general_awareness_video",
            TrainingModuleId::AudioPodcast => "audio_podcast",
            TrainingModuleId::StorytellingVideo => "storytelling_video",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

impl fmt::Display for TrainingModuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrainingModuleId::SwipeableCards => "SwipeableCards",
            TrainingModuleId::GeneralAwarenessVideo => "GeneralAwarenessVideo",
            TrainingModuleId::AudioPodcast => "AudioPodcast",
            TrainingModuleId::StorytellingVideo => "StorytellingVideo",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssetKind {
    Card,
    Media,
}

/// One piece of module content: a flashcard, or a media reference with a
/// caption/transcript placeholder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Asset {
    pub id: String,
    pub kind: AssetKind,
    pub title: String,
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media_ref: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompletionRule {
    /// Every one of the module's `n` cards has been swiped.
    AllCardsSwiped(u32),
    /// Every media asset in the module has been marked complete.
    MediaMarkedComplete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reward {
    pub label: String,
    pub description: String,
    #[serde(default)]
    pub simulated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleContent {
    pub id: TrainingModuleId,
    pub title: String,
    pub assets: Vec<Asset>,
    pub completion_rule: CompletionRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<Reward>,
}

impl ModuleContent {
    pub fn asset(&self, id: &str) -> Option<&Asset> {
        self.assets.iter().find(|a| a.id == id)
    }

    fn assets_of(&self, kind: AssetKind) -> impl Iterator<Item = &Asset> {
        self.assets.iter().filter(move |a| a.kind == kind)
    }

    /// Whether the accumulated progress (ids of swiped cards / finished media)
    /// satisfies the completion rule.
    pub fn is_complete(&self, progress: &BTreeSet<String>) -> bool {
        match self.completion_rule {
            CompletionRule::AllCardsSwiped(n) => {
                let swiped = self.assets_of(AssetKind::Card).filter(|a| progress.contains(&a.id)).count();
                swiped >= n as usize
            }
            CompletionRule::MediaMarkedComplete => {
                let mut media = self.assets_of(AssetKind::Media).peekable();
                media.peek().is_some() && media.all(|a| progress.contains(&a.id))
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let mut ids = HashSet::new();
        for a in &self.assets {
            if a.id.trim().is_empty() {
                return Err(format!("module {} has an asset with an empty id", self.id));
            }
            if !ids.insert(a.id.as_str()) {
                return Err(format!("module {} repeats asset id `{}`", self.id, a.id));
            }
        }
        let cards = self.assets_of(AssetKind::Card).count();
        let media = self.assets_of(AssetKind::Media).count();
        match (self.id, self.completion_rule) {
            (TrainingModuleId::SwipeableCards, CompletionRule::AllCardsSwiped(4)) if cards == 4 && media == 0 => {}
            (TrainingModuleId::SwipeableCards, _) => {
                return Err(format!(
                    "module {} must hold exactly 4 cards with completion rule all_cards_swiped(4), found {cards} cards, {media} media, rule {:?}",
                    self.id, self.completion_rule
                ))
            }
            (_, CompletionRule::MediaMarkedComplete) if media >= 1 => {}
            (id, rule) => {
                return Err(format!(
                    "module {id} must hold at least one media asset with completion rule media_marked_complete, found {media} media, rule {rule:?}"
                ))
            }
        }
        if self.id == TrainingModuleId::AudioPodcast && self.reward.is_none() {
            return Err(format!("module {} must carry a reward descriptor", self.id));
        }
        Ok(())
    }
}

/// Module assigned to a dominant trait.
pub fn route(dominant: Trait) -> TrainingModuleId {
    match dominant {
        Trait::Openness => TrainingModuleId::SwipeableCards,
        Trait::Conscientiousness | Trait::Neuroticism => TrainingModuleId::GeneralAwarenessVideo,
        Trait::Extraversion => TrainingModuleId::AudioPodcast,
        Trait::Agreeableness => TrainingModuleId::StorytellingVideo,
    }
}

/// Full routing provenance for a questionnaire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingDecision {
    pub profile: TraitProfile,
    pub dominant: Trait,
    pub module: TrainingModuleId,
}

pub fn route_from_responses(responses: &Bfi10Responses) -> RoutingDecision {
    let profile = score_bfi10(responses);
    let dominant = dominant_trait(&profile);
    RoutingDecision {
        profile,
        dominant,
        module: route(dominant),
    }
}
