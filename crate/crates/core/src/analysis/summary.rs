//! Group summaries and frequency tables.

use serde::{Deserialize, Serialize};

use super::AnalysisError;

/// Sample size, mean and sample (n − 1) variance of one group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub variance: f64,
}

impl GroupSummary {
    /// Builds a summary from reported moments.
    pub fn from_moments(n: usize, mean: f64, sd: f64) -> Result<Self, AnalysisError> {
        if n < 2 {
            return Err(AnalysisError::InsufficientData { n });
        }
        if !mean.is_finite() || !sd.is_finite() || sd < 0.0 {
            return Err(AnalysisError::Domain(format!("invalid moments mean = {mean}, sd = {sd}")));
        }
        Ok(Self {
            n,
            mean,
            sd,
            variance: sd * sd,
        })
    }
}

/// Mean and sample standard deviation of `xs`. Needs at least two values.
pub fn summarize(xs: &[f64]) -> Result<GroupSummary, AnalysisError> {
    let n = xs.len();
    if n < 2 {
        return Err(AnalysisError::InsufficientData { n });
    }
    if let Some(x) = xs.iter().find(|x| !x.is_finite()) {
        return Err(AnalysisError::Domain(format!("non-finite observation {x}")));
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    let variance = ss / (n - 1) as f64;
    Ok(GroupSummary {
        n,
        mean,
        sd: variance.sqrt(),
        variance,
    })
}

/// Counts of observations at each score level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyTable {
    pub label: String,
    pub levels: Vec<u32>,
    pub counts: Vec<u64>,
    pub n: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl FrequencyTable {
    pub fn new(label: impl Into<String>, levels: Vec<u32>, counts: Vec<u64>) -> Result<Self, AnalysisError> {
        let table = Self {
            label: label.into(),
            n: counts.iter().sum(),
            levels,
            counts,
            note: None,
        };
        table.validate()?;
        Ok(table)
    }

    /// Levels must be strictly increasing, one count per level, and the
    /// counts must add up to `n`.
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.levels.len() != self.counts.len() {
            return Err(AnalysisError::Validation(format!(
                "{}: {} levels but {} counts",
                self.label,
                self.levels.len(),
                self.counts.len()
            )));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AnalysisError::Validation(format!(
                "{}: levels must be strictly increasing",
                self.label
            )));
        }
        let total: u64 = self.counts.iter().sum();
        if total != self.n {
            return Err(AnalysisError::Validation(format!(
                "{}: counts add up to {total}, table says n = {}",
                self.label, self.n
            )));
        }
        Ok(())
    }

    /// One observation per counted respondent, in level order.
    pub fn expand(&self) -> Vec<f64> {
        self.levels
            .iter()
            .zip(&self.counts)
            .flat_map(|(&level, &count)| std::iter::repeat_n(level as f64, count as usize))
            .collect()
    }

    /// Summary computed directly from the weighted moments.
    pub fn summary(&self) -> Result<GroupSummary, AnalysisError> {
        self.validate()?;
        let n = self.n as usize;
        if n < 2 {
            return Err(AnalysisError::InsufficientData { n });
        }
        let weighted = || self.levels.iter().zip(&self.counts).map(|(&l, &c)| (l as f64, c as f64));
        let mean = weighted().map(|(l, c)| l * c).sum::<f64>() / n as f64;
        let ss: f64 = weighted().map(|(l, c)| c * (l - mean).powi(2)).sum();
        let variance = ss / (n - 1) as f64;
        Ok(GroupSummary {
            n,
            mean,
            sd: variance.sqrt(),
            variance,
        })
    }

    /// Observations at or above `threshold`.
    pub fn count_at_least(&self, threshold: u32) -> u64 {
        self.levels
            .iter()
            .zip(&self.counts)
            .filter(|(&l, _)| l >= threshold)
            .map(|(_, &c)| c)
            .sum()
    }
}
