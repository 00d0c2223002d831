//! Statistics for the two-group comparison: summaries from frequency tables,
//! Welch's t-test, Cohen's d, Fisher's exact test, and the full report.

mod fisher;
mod report;
pub mod special;
mod summary;
mod welch;

use thiserror::Error;

pub use fisher::{fisher_exact_one_tailed, ContingencyTable2x2};
pub use report::{
    replicate, replicate_bundled, replicate_from_export, Comparison, FeedbackCounts, GoldenData, GroupTables, PassFail,
    PassFailTable, PassRate, PassRates, StatsReport,
};
pub use special::{student_t_cdf, student_t_quantile, student_t_sf};
pub use summary::{summarize, FrequencyTable, GroupSummary};
pub use welch::{cohens_d, variance_ratio, welch_t, Alternative, EffectSize, WelchResult};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("need at least 2 observations, got {n}")]
    InsufficientData { n: usize },
    #[error("statistic is undefined: {0}")]
    UndefinedStatistic(String),
    #[error("effect size is undefined: pooled standard deviation is zero")]
    UndefinedEffect,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid data: {0}")]
    Validation(String),
    #[error("golden data: {0}")]
    Golden(String),
}
