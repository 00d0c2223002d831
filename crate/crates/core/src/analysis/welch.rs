//! Welch's unequal-variance t-test, Cohen's d and the variance ratio.

use serde::{Deserialize, Serialize};

use super::special::{student_t_cdf, student_t_quantile};
use super::summary::GroupSummary;
use super::AnalysisError;

/// Which one-sided alternative `p_one_tailed` refers to, for the difference
/// `mean(b) − mean(a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// `b` has the larger mean.
    Greater,
    /// `b` has the smaller mean.
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    /// `mean(b) − mean(a)`.
    pub mean_difference: f64,
    pub se: f64,
    pub t: f64,
    pub df: f64,
    pub alternative: Alternative,
    pub p_one_tailed: f64,
    pub p_two_tailed: f64,
    /// 95% confidence interval for `mean_difference`.
    pub ci95: [f64; 2],
}

/// Welch's t for `b − a` with Welch-Satterthwaite degrees of freedom.
pub fn welch_t(a: &GroupSummary, b: &GroupSummary, alternative: Alternative) -> Result<WelchResult, AnalysisError> {
    for g in [a, b] {
        if g.n < 2 {
            return Err(AnalysisError::InsufficientData { n: g.n });
        }
    }
    let qa = a.variance / a.n as f64;
    let qb = b.variance / b.n as f64;
    let se = (qa + qb).sqrt();
    let mean_difference = b.mean - a.mean;
    if se == 0.0 {
        return Err(AnalysisError::UndefinedStatistic(if mean_difference == 0.0 {
            "both groups have zero variance and equal means".into()
        } else {
            "both groups have zero variance".into()
        }));
    }
    let t = mean_difference / se;
    let df = (qa + qb).powi(2) / (qa * qa / (a.n - 1) as f64 + qb * qb / (b.n - 1) as f64);
    let lower = student_t_cdf(t, df)?;
    let upper = student_t_cdf(-t, df)?;
    let p_one_tailed = match alternative {
        Alternative::Greater => upper,
        Alternative::Less => lower,
    };
    let p_two_tailed = (2.0 * lower.min(upper)).min(1.0);
    let t_crit = student_t_quantile(0.975, df)?;
    Ok(WelchResult {
        mean_difference,
        se,
        t,
        df,
        alternative,
        p_one_tailed,
        p_two_tailed,
        ci95: [mean_difference - t_crit * se, mean_difference + t_crit * se],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSize {
    pub pooled_sd: f64,
    /// `(mean(b) − mean(a)) / pooled_sd`.
    pub d: f64,
}

/// Cohen's d using the pooled standard deviation
/// `sqrt(((n_a − 1) s_a² + (n_b − 1) s_b²) / (n_a + n_b − 2))`.
pub fn cohens_d(a: &GroupSummary, b: &GroupSummary) -> Result<EffectSize, AnalysisError> {
    for g in [a, b] {
        if g.n < 2 {
            return Err(AnalysisError::InsufficientData { n: g.n });
        }
    }
    let pooled_var = ((a.n - 1) as f64 * a.variance + (b.n - 1) as f64 * b.variance) / (a.n + b.n - 2) as f64;
    let pooled_sd = pooled_var.sqrt();
    if pooled_sd == 0.0 {
        return Err(AnalysisError::UndefinedEffect);
    }
    Ok(EffectSize {
        pooled_sd,
        d: (b.mean - a.mean) / pooled_sd,
    })
}

/// `var(a) / var(b)`.
pub fn variance_ratio(a: &GroupSummary, b: &GroupSummary) -> Result<f64, AnalysisError> {
    if b.variance == 0.0 {
        return Err(AnalysisError::UndefinedStatistic("denominator group has zero variance".into()));
    }
    Ok(a.variance / b.variance)
}
