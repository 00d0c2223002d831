//! Analysis CSV export. One row per session, no timestamps.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::StoreError;
use crate::bfi10::Trait;
use crate::routing::TrainingModuleId;
use crate::session::{Condition, SessionRecord, SessionState};

pub const CSV_HEADER: &str = "session_id,condition,pre_score,post_score,passed_pre,passed_post,E,A,C,N,O,dominant,module,training_completed,fb_usability,fb_adaptive,fb_understanding,fb_ease";

/// Column order here is the wire format; do not reorder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportRow {
    pub session_id: String,
    pub condition: String,
    pub pre_score: Option<u8>,
    pub post_score: Option<u8>,
    pub passed_pre: Option<bool>,
    pub passed_post: Option<bool>,
    #[serde(rename = "E")]
    pub e: Option<u8>,
    #[serde(rename = "A")]
    pub a: Option<u8>,
    #[serde(rename = "C")]
    pub c: Option<u8>,
    #[serde(rename = "N")]
    pub n: Option<u8>,
    #[serde(rename = "O")]
    pub o: Option<u8>,
    pub dominant: Option<String>,
    pub module: Option<String>,
    pub training_completed: bool,
    pub fb_usability: Option<u8>,
    pub fb_adaptive: Option<u8>,
    pub fb_understanding: Option<u8>,
    pub fb_ease: Option<u8>,
}

impl ExportRow {
    pub fn from_record(r: &SessionRecord) -> Self {
        let profile = r.trait_profile;
        let score = |t: Trait| profile.map(|p| p.get(t));
        Self {
            session_id: r.session_id.to_string(),
            condition: r.condition.as_str().to_string(),
            pre_score: r.pre_result.map(|x| x.score),
            post_score: r.post_result.map(|x| x.score),
            passed_pre: r.pre_result.map(|x| x.passed),
            passed_post: r.post_result.map(|x| x.passed),
            e: score(Trait::Extraversion),
            a: score(Trait::Agreeableness),
            c: score(Trait::Conscientiousness),
            n: score(Trait::Neuroticism),
            o: score(Trait::Openness),
            dominant: r.dominant.map(|t| t.as_str().to_string()),
            module: r.module.map(|m| m.as_str().to_string()),
            training_completed: r.training_completed,
            fb_usability: r.feedback.map(|f| f.usability),
            fb_adaptive: r.feedback.map(|f| f.adaptive_content),
            fb_understanding: r.feedback.map(|f| f.se_understanding),
            fb_ease: r.feedback.map(|f| f.ease_of_use),
        }
    }

    pub fn condition(&self) -> Option<Condition> {
        Condition::parse(&self.condition)
    }

    pub fn dominant(&self) -> Option<Trait> {
        self.dominant.as_deref().and_then(Trait::parse)
    }

    pub fn module(&self) -> Option<TrainingModuleId> {
        self.module.as_deref().and_then(TrainingModuleId::parse)
    }
}

/// Row filter. `state` matches [`SessionState::name`] (e.g. `complete`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExportFilter {
    pub condition: Option<Condition>,
    pub state: Option<String>,
}

impl ExportFilter {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn completed() -> Self {
        Self {
            condition: None,
            state: Some(SessionState::Complete.name().to_string()),
        }
    }

    pub fn matches(&self, r: &SessionRecord) -> bool {
        self.condition.is_none_or(|c| c == r.condition) && self.state.as_deref().is_none_or(|s| s == r.state.name())
    }
}

pub fn write_csv<'a, W: Write>(
    records: impl Iterator<Item = &'a SessionRecord>,
    filter: &ExportFilter,
    out: W,
) -> Result<usize, StoreError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))
        .map_err(|e| StoreError::Export(e.to_string()))?;
    let mut rows = 0;
    for r in records.filter(|r| filter.matches(r)) {
        w.serialize(ExportRow::from_record(r))
            .map_err(|e| StoreError::Export(e.to_string()))?;
        rows += 1;
    }
    w.flush()?;
    Ok(rows)
}

/// Re-imports an export for analysis. The header must match [`CSV_HEADER`].
pub fn read_csv<R: Read>(input: R) -> Result<Vec<ExportRow>, StoreError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(|e| StoreError::Export(e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(StoreError::Export(format!(
            "unexpected header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    rdr.deserialize()
        .map(|row| row.map_err(|e| StoreError::Export(e.to_string())))
        .collect()
}
