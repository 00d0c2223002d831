//! BFI-10 questionnaire scoring.
//!
//! Ten Likert items, two per Five-Factor trait. Items 1, 3, 4, 5 and 7 are
//! reverse keyed (`6 - response`). Subscales are the sum of the two item
//! scores after reversal, so every subscale lies in `2..=10`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of items on the questionnaire.
pub const ITEM_COUNT: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Bfi10Error {
    #[error("invalid item index {0}, expected 1..=10")]
    InvalidItem(usize),
    #[error("invalid Likert response {0}, expected 1..=5")]
    InvalidLikert(i64),
    #[error("malformed responses: expected {ITEM_COUNT} items, got {0}")]
    MalformedResponses(usize),
}

/// A single five-point Likert answer (1 = disagree strongly, 5 = agree strongly).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct LikertResponse(u8);

impl LikertResponse {
    pub fn new(value: i64) -> Result<Self, Bfi10Error> {
        if (1..=5).contains(&value) {
            Ok(Self(value as u8))
        } else {
            Err(Bfi10Error::InvalidLikert(value))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

impl TryFrom<i64> for LikertResponse {
    type Error = Bfi10Error;

    fn try_from(value: i64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<LikertResponse> for u8 {
    fn from(r: LikertResponse) -> u8 {
        r.0
    }
}

/// The ten raw (unreversed) answers in questionnaire order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<u8>")]
pub struct Bfi10Responses([LikertResponse; ITEM_COUNT]);

impl Bfi10Responses {
    pub fn new(items: [LikertResponse; ITEM_COUNT]) -> Self {
        Self(items)
    }

    /// Validates a raw slice: exactly ten values, each in `1..=5`.
    pub fn from_values<T: Copy + Into<i64>>(values: &[T]) -> Result<Self, Bfi10Error> {
        if values.len() != ITEM_COUNT {
            return Err(Bfi10Error::MalformedResponses(values.len()));
        }
        let mut items = [LikertResponse(3); ITEM_COUNT];
        for (slot, &v) in items.iter_mut().zip(values) {
            *slot = LikertResponse::new(v.into())?;
        }
        Ok(Self(items))
    }

    pub fn items(&self) -> &[LikertResponse; ITEM_COUNT] {
        &self.0
    }

    /// Response to item `index` (1-based).
    pub fn get(&self, index: usize) -> Option<LikertResponse> {
        index.checked_sub(1).and_then(|i| self.0.get(i)).copied()
    }
}

impl TryFrom<Vec<i64>> for Bfi10Responses {
    type Error = Bfi10Error;

    fn try_from(values: Vec<i64>) -> Result<Self, Self::Error> {
        Self::from_values(&values)
    }
}

impl From<Bfi10Responses> for Vec<u8> {
    fn from(r: Bfi10Responses) -> Vec<u8> {
        r.0.iter().map(|x| x.0).collect()
    }
}

/// The five FFM traits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trait {
    Openness,
    Conscientiousness,
    Extraversion,
    Agreeableness,
    Neuroticism,
}

impl Trait {
    pub const ALL: [Trait; 5] = [
        Trait::Openness,
        Trait::Conscientiousness,
        Trait::Extraversion,
        Trait::Agreeableness,
        Trait::Neuroticism,
    ];

    /// Tie-break order, highest priority first.
    pub const PRIORITY: [Trait; 5] = [
        Trait::Openness,
        Trait::Agreeableness,
        Trait::Extraversion,
        Trait::Conscientiousness,
        Trait::Neuroticism,
    ];

    /// Position in [`Trait::PRIORITY`]; lower wins ties.
    pub fn priority_rank(self) -> usize {
        match self {
            Trait::Openness => 0,
            Trait::Agreeableness => 1,
            Trait::Extraversion => 2,
            Trait::Conscientiousness => 3,
            Trait::Neuroticism => 4,
        }
    }

    /// Single-letter code used in exports (`E`, `A`, `C`, `N`, `O`).
    pub fn code(self) -> char {
        match self {
            Trait::Openness => 'O',
            Trait::Conscientiousness => 'C',
            Trait::Extraversion => 'E',
            Trait::Agreeableness => 'A',
            Trait::Neuroticism => 'N',
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Trait::Openness => "openness",
            Trait::Conscientiousness => "conscientiousness",
            Trait::Extraversion => "extraversion",
            Trait::Agreeableness => "agreeableness",
            Trait::Neuroticism => "neuroticism",
        }
    }

    pub fn parse(s: &str) -> Option<Trait> {
        Trait::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

impl fmt::Display for Trait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Trait::Openness => "Openness",
            Trait::Conscientiousness => "Conscientiousness",
            Trait::Extraversion => "Extraversion",
            Trait::Agreeableness => "Agreeableness",
            Trait::Neuroticism => "Neuroticism",
        };
        f.write_str(name)
    }
}

/// Scoring key: trait and reverse flag for items 1..=10.
pub const SCORING_KEY: [(Trait, bool); ITEM_COUNT] = [
    (Trait::Extraversion, true),
    (Trait::Agreeableness, false),
    (Trait::Conscientiousness, true),
    (Trait::Neuroticism, true),
    (Trait::Openness, true),
    (Trait::Extraversion, false),
    (Trait::Agreeableness, true),
    (Trait::Conscientiousness, false),
    (Trait::Neuroticism, false),
    (Trait::Openness, false),
];

/// Whether item `index` (1-based) is reverse keyed.
pub fn is_reversed(index: usize) -> Result<bool, Bfi10Error> {
    index
        .checked_sub(1)
        .and_then(|i| SCORING_KEY.get(i))
        .map(|&(_, rev)| rev)
        .ok_or(Bfi10Error::InvalidItem(index))
}

/// Keyed score for one item: `6 - r` on reversed items, `r` otherwise.
pub fn reverse_score(index: usize, response: LikertResponse) -> Result<u8, Bfi10Error> {
    let r = response.value();
    Ok(if is_reversed(index)? { 6 - r } else { r })
}

/// Subscale scores, each in `2..=10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraitProfile {
    pub extraversion: u8,
    pub agreeableness: u8,
    pub conscientiousness: u8,
    pub neuroticism: u8,
    pub openness: u8,
}

impl TraitProfile {
    /// Builds a profile, rejecting any subscale outside `2..=10`.
    pub fn new(e: u8, a: u8, c: u8, n: u8, o: u8) -> Option<Self> {
        let p = Self {
            extraversion: e,
            agreeableness: a,
            conscientiousness: c,
            neuroticism: n,
            openness: o,
        };
        Trait::ALL
            .iter()
            .all(|&t| (2..=10).contains(&p.get(t)))
            .then_some(p)
    }

    pub fn get(&self, t: Trait) -> u8 {
        match t {
            Trait::Openness => self.openness,
            Trait::Conscientiousness => self.conscientiousness,
            Trait::Extraversion => self.extraversion,
            Trait::Agreeableness => self.agreeableness,
            Trait::Neuroticism => self.neuroticism,
        }
    }

    fn slot(&mut self, t: Trait) -> &mut u8 {
        match t {
            Trait::Openness => &mut self.openness,
            Trait::Conscientiousness => &mut self.conscientiousness,
            Trait::Extraversion => &mut self.extraversion,
            Trait::Agreeableness => &mut self.agreeableness,
            Trait::Neuroticism => &mut self.neuroticism,
        }
    }

    pub fn max_score(&self) -> u8 {
        Trait::ALL.iter().map(|&t| self.get(t)).max().unwrap_or(0)
    }
}

/// Applies the scoring key to raw responses.
pub fn score_bfi10(responses: &Bfi10Responses) -> TraitProfile {
    let mut profile = TraitProfile {
        extraversion: 0,
        agreeableness: 0,
        conscientiousness: 0,
        neuroticism: 0,
        openness: 0,
    };
    for (i, (&response, &(t, reversed))) in responses.0.iter().zip(SCORING_KEY.iter()).enumerate() {
        debug_assert_eq!(is_reversed(i + 1), Ok(reversed));
        let r = response.value();
        *profile.slot(t) += if reversed { 6 - r } else { r };
    }
    profile
}

/// Scores a raw slice, validating length and range first.
pub fn score_values<T: Copy + Into<i64>>(values: &[T]) -> Result<TraitProfile, Bfi10Error> {
    Bfi10Responses::from_values(values).map(|r| score_bfi10(&r))
}

/// Argmax over the five subscales; ties go to the earliest trait in
/// [`Trait::PRIORITY`].
pub fn dominant_trait(profile: &TraitProfile) -> Trait {
    let mut best = Trait::PRIORITY[0];
    for &t in &Trait::PRIORITY[1..] {
        if profile.get(t) > profile.get(best) {
            best = t;
        }
    }
    best
}
