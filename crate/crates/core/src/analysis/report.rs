//! The replication report: baseline and post-assessment comparisons, pass
//! rates with Fisher's exact test, and the feedback summary.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::fisher::{fisher_exact_one_tailed, ContingencyTable2x2};
use super::summary::{summarize, FrequencyTable, GroupSummary};
use super::welch::{cohens_d, variance_ratio, welch_t, Alternative};
use super::AnalysisError;
use crate::assessment::{summarize_feedback, FeedbackDimension, FeedbackResponse, FeedbackSummary, PASS_MARK};
use crate::session::Condition;
use crate::store::ExportRow;

const GOLDEN: &str = include_str!("../../data/golden.toml");

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupTables {
    pub traditional: FrequencyTable,
    pub personality_conditional: FrequencyTable,
    #[serde(default)]
    pub personality_conditional_as_printed: Option<FrequencyTable>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PassFail {
    pub pass: u64,
    pub fail: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PassFailTable {
    pub personality_conditional: PassFail,
    pub traditional: PassFail,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackCounts {
    pub n: u32,
    pub usability: [u32; 5],
    pub adaptive_content: [u32; 5],
    pub se_understanding: [u32; 5],
    pub ease_of_use: [u32; 5],
}

impl FeedbackCounts {
    pub fn counts(&self, d: FeedbackDimension) -> [u32; 5] {
        match d {
            FeedbackDimension::Usability => self.usability,
            FeedbackDimension::AdaptiveContent => self.adaptive_content,
            FeedbackDimension::SeUnderstanding => self.se_understanding,
            FeedbackDimension::EaseOfUse => self.ease_of_use,
        }
    }

    /// Rebuilds one response per respondent. Ratings are paired across
    /// dimensions by rank, which preserves every per-dimension count.
    pub fn responses(&self) -> Result<Vec<FeedbackResponse>, AnalysisError> {
        let column = |d: FeedbackDimension| -> Result<Vec<i64>, AnalysisError> {
            let counts = self.counts(d);
            if counts.iter().sum::<u32>() != self.n {
                return Err(AnalysisError::Validation(format!(
                    "feedback {}: counts add up to {}, expected {}",
                    d.as_str(),
                    counts.iter().sum::<u32>(),
                    self.n
                )));
            }
            Ok((1..=5)
                .flat_map(|rating| std::iter::repeat_n(rating as i64, counts[rating - 1] as usize))
                .collect())
        };
        let [u, a, s, e] = FeedbackDimension::ALL.map(column);
        let (u, a, s, e) = (u?, a?, s?, e?);
        (0..self.n as usize)
            .map(|i| {
                FeedbackResponse::new(u[i], a[i], s[i], e[i]).map_err(|err| AnalysisError::Validation(err.to_string()))
            })
            .collect()
    }
}

/// The bundled score distributions.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldenData {
    pub version: u32,
    pub pre: GroupTables,
    pub post: GroupTables,
    pub pass_fail: PassFailTable,
    pub feedback: FeedbackCounts,
}

impl GoldenData {
    pub fn bundled() -> Self {
        Self::from_toml_str(GOLDEN).expect("bundled golden data is valid")
    }

    pub fn from_toml_str(s: &str) -> Result<Self, AnalysisError> {
        let data: Self = toml::from_str(s).map_err(|e| AnalysisError::Golden(e.to_string()))?;
        if data.version != 1 {
            return Err(AnalysisError::Golden(format!("unsupported version {}", data.version)));
        }
        for t in [
            &data.pre.traditional,
            &data.pre.personality_conditional,
            &data.post.traditional,
            &data.post.personality_conditional,
        ] {
            t.validate()?;
        }
        Ok(data)
    }
}

/// Traditional (`a`) against personality-conditional (`b`); differences are
/// `b − a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub traditional: GroupSummary,
    pub personality_conditional: GroupSummary,
    pub mean_difference: f64,
    pub se: f64,
    pub t: f64,
    pub df: f64,
    pub alternative: Alternative,
    pub p_one_tailed: f64,
    pub p_two_tailed: f64,
    pub ci95: [f64; 2],
    pub pooled_sd: f64,
    pub cohens_d: f64,
    /// Traditional variance over personality-conditional variance.
    pub variance_ratio: f64,
}

impl Comparison {
    pub fn compute(traditional: GroupSummary, personality_conditional: GroupSummary) -> Result<Self, AnalysisError> {
        let w = welch_t(&traditional, &personality_conditional, Alternative::Greater)?;
        let e = cohens_d(&traditional, &personality_conditional)?;
        Ok(Self {
            traditional,
            personality_conditional,
            mean_difference: w.mean_difference,
            se: w.se,
            t: w.t,
            df: w.df,
            alternative: w.alternative,
            p_one_tailed: w.p_one_tailed,
            p_two_tailed: w.p_two_tailed,
            ci95: w.ci95,
            pooled_sd: e.pooled_sd,
            cohens_d: e.d,
            variance_ratio: variance_ratio(&traditional, &personality_conditional)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PassRate {
    pub pass: u64,
    pub n: u64,
    pub percent: f64,
}

impl PassRate {
    pub fn new(pass: u64, n: u64) -> Result<Self, AnalysisError> {
        if n == 0 || pass > n {
            return Err(AnalysisError::Validation(format!("pass rate {pass}/{n}")));
        }
        Ok(Self {
            pass,
            n,
            percent: 100.0 * pass as f64 / n as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassRates {
    pub pass_mark: u8,
    /// Personality-conditional participants who went through routed training.
    pub personality_conditional: PassRate,
    /// Every personality-conditional participant with a post-assessment score.
    pub personality_conditional_all: PassRate,
    pub traditional: PassRate,
    pub difference_points: f64,
    /// Rows: personality-conditional (routed), traditional. Columns: pass, fail.
    pub table: ContingencyTable2x2,
    pub fisher_p_one_tailed: f64,
    /// Same test with every personality-conditional participant.
    pub fisher_p_one_tailed_all: f64,
}

impl PassRates {
    pub fn compute(routed: PassFail, all: PassFail, traditional: PassFail) -> Result<Self, AnalysisError> {
        let rate = |g: PassFail| PassRate::new(g.pass, g.pass + g.fail);
        let pc = rate(routed)?;
        let trad = rate(traditional)?;
        let table = ContingencyTable2x2::new(routed.pass, routed.fail, traditional.pass, traditional.fail);
        let table_all = ContingencyTable2x2::new(all.pass, all.fail, traditional.pass, traditional.fail);
        Ok(Self {
            pass_mark: PASS_MARK,
            personality_conditional: pc,
            personality_conditional_all: rate(all)?,
            traditional: trad,
            difference_points: pc.percent - trad.percent,
            table,
            fisher_p_one_tailed: fisher_exact_one_tailed(&table)?,
            fisher_p_one_tailed_all: fisher_exact_one_tailed(&table_all)?,
        })
    }
}

/// Every reported statistic. Field order is the JSON order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub baseline: Comparison,
    pub primary: Comparison,
    pub pass_rates: PassRates,
    pub feedback: Option<FeedbackSummary>,
    pub data_notes: Vec<String>,
}

impl StatsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn pass_fail(table: &FrequencyTable) -> PassFail {
    let pass = table.count_at_least(u32::from(PASS_MARK));
    PassFail {
        pass,
        fail: table.n - pass,
    }
}

/// Builds the report from golden tables.
pub fn replicate(data: &GoldenData) -> Result<StatsReport, AnalysisError> {
    let baseline = Comparison::compute(data.pre.traditional.summary()?, data.pre.personality_conditional.summary()?)?;
    let primary = Comparison::compute(data.post.traditional.summary()?, data.post.personality_conditional.summary()?)?;
    let pass_rates = PassRates::compute(
        data.pass_fail.personality_conditional,
        pass_fail(&data.post.personality_conditional),
        data.pass_fail.traditional,
    )?;
    let feedback = summarize_feedback(&data.feedback.responses()?).map_err(|e| AnalysisError::Validation(e.to_string()))?;

    let mut data_notes = Vec::new();
    for t in [&data.pre, &data.post].into_iter().flat_map(|g| {
        [Some(&g.traditional), Some(&g.personality_conditional), g.personality_conditional_as_printed.as_ref()]
    }) {
        let Some(t) = t else { continue };
        if let Some(note) = &t.note {
            data_notes.push(format!("{}: {note}", t.label));
        }
        if let Err(e) = t.validate() {
            data_notes.push(format!("{e} (not used)"));
        }
    }
    Ok(StatsReport {
        baseline,
        primary,
        pass_rates,
        feedback: Some(feedback),
        data_notes,
    })
}

/// The report over the bundled tables.
pub fn replicate_bundled() -> Result<StatsReport, AnalysisError> {
    replicate(&GoldenData::bundled())
}

/// Builds the report from an analysis CSV export. Sessions without a score
/// for an assessment are left out of that comparison.
pub fn replicate_from_export(rows: &[ExportRow]) -> Result<StatsReport, AnalysisError> {
    let scores = |condition: Condition, pick: fn(&ExportRow) -> Option<u8>| -> Vec<f64> {
        rows.iter()
            .filter(|r| r.condition() == Some(condition))
            .filter_map(pick)
            .map(f64::from)
            .collect()
    };
    let comparison = |pick: fn(&ExportRow) -> Option<u8>| {
        Comparison::compute(
            summarize(&scores(Condition::Traditional, pick))?,
            summarize(&scores(Condition::PersonalityConditional, pick))?,
        )
    };
    let baseline = comparison(|r| r.pre_score)?;
    let primary = comparison(|r| r.post_score)?;

    let tally = |keep: &dyn Fn(&ExportRow) -> bool| {
        let mut pf = PassFail { pass: 0, fail: 0 };
        for passed in rows.iter().filter(|r| keep(r)).filter_map(|r| r.passed_post) {
            if passed {
                pf.pass += 1;
            } else {
                pf.fail += 1;
            }
        }
        pf
    };
    let is_pc = |r: &ExportRow| r.condition() == Some(Condition::PersonalityConditional);
    let pass_rates = PassRates::compute(
        tally(&|r| is_pc(r) && r.module.is_some()),
        tally(&is_pc),
        tally(&|r| r.condition() == Some(Condition::Traditional)),
    )?;

    let responses: Vec<FeedbackResponse> = rows
        .iter()
        .filter_map(|r| match (r.fb_usability, r.fb_adaptive, r.fb_understanding, r.fb_ease) {
            (Some(u), Some(a), Some(s), Some(e)) => {
                FeedbackResponse::new(u.into(), a.into(), s.into(), e.into()).ok()
            }
            _ => None,
        })
        .collect();
    let feedback = if responses.is_empty() {
        None
    } else {
        Some(summarize_feedback(&responses).map_err(|e| AnalysisError::Validation(e.to_string()))?)
    };
    Ok(StatsReport {
        baseline,
        primary,
        pass_rates,
        feedback,
        data_notes: Vec::new(),
    })
}

fn write_comparison(f: &mut fmt::Formatter<'_>, title: &str, c: &Comparison) -> fmt::Result {
    writeln!(f, "{title}")?;
    for (name, g) in [("traditional", &c.traditional), ("personality_conditional", &c.personality_conditional)] {
        writeln!(
            f,
            "  {name:<24} n = {:>3}  mean = {:.2}  SD = {:.2}  variance = {:.2}",
            g.n, g.mean, g.sd, g.variance
        )?;
    }
    writeln!(
        f,
        "  Welch t({:.1}) = {:.2}, p (one-tailed) = {:.3}, p (two-tailed) = {:.3}",
        c.df, c.t, c.p_one_tailed, c.p_two_tailed
    )?;
    writeln!(
        f,
        "  mean difference = {:.2}, 95% CI [{:.2}, {:.2}]",
        c.mean_difference, c.ci95[0], c.ci95[1]
    )?;
    writeln!(f, "  pooled SD = {:.2}, Cohen's d = {:.2}", c.pooled_sd, c.cohens_d)?;
    writeln!(f, "  variance_ratio = {:.2}", c.variance_ratio)
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_comparison(f, "Baseline (pre-assessment)", &self.baseline)?;
        writeln!(f)?;
        write_comparison(f, "Primary outcome (post-assessment)", &self.primary)?;
        writeln!(f)?;
        let p = &self.pass_rates;
        writeln!(f, "Pass rates (post-assessment >= {})", p.pass_mark)?;
        for (name, r) in [
            ("personality_conditional", &p.personality_conditional),
            ("personality_conditional_all", &p.personality_conditional_all),
            ("traditional", &p.traditional),
        ] {
            writeln!(f, "  {name:<28} {:.1}% ({}/{})", r.percent, r.pass, r.n)?;
        }
        writeln!(f, "  difference = {:.1} percentage points", p.difference_points)?;
        writeln!(
            f,
            "  Fisher exact (one-tailed) p = {:.5}; with all participants p = {:.5}",
            p.fisher_p_one_tailed, p.fisher_p_one_tailed_all
        )?;
        if let Some(fb) = &self.feedback {
            writeln!(f)?;
            writeln!(f, "Feedback (n = {}), share rating 4 or 5", fb.n)?;
            for d in &fb.dimensions {
                writeln!(f, "  {:<18} {:.1}%", d.dimension.as_str(), d.high_percent)?;
            }
        }
        if !self.data_notes.is_empty() {
            writeln!(f)?;
            writeln!(f, "Data notes")?;
            for note in &self.data_notes {
                writeln!(f, "  - {note}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_data_loads() {
        let g = GoldenData::bundled();
        assert_eq!(g.pre.traditional.n, 40);
        assert_eq!(g.post.personality_conditional.counts, vec![0, 0, 0, 14, 20]);
        assert!(g.post.personality_conditional_as_printed.unwrap().validate().is_err());
    }

    #[test]
    fn feedback_reconstruction_preserves_counts() {
        let g = GoldenData::bundled();
        let responses = g.feedback.responses().unwrap();
        assert_eq!(responses.len(), 68);
        let summary = summarize_feedback(&responses).unwrap();
        for d in FeedbackDimension::ALL {
            assert_eq!(summary.dimension(d).counts, g.feedback.counts(d));
        }
    }

    #[test]
    fn unknown_golden_field_rejected() {
        let text = format!("{GOLDEN}\nextra = 1\n");
        assert!(GoldenData::from_toml_str(&text).is_err());
    }

    #[test]
    fn report_text_mentions_headline_values() {
        let text = replicate_bundled().unwrap().to_string();
        assert!(text.contains("Welch t(69.1) = 0.43"), "{text}");
        assert!(text.contains("Cohen's d = 0.62"), "{text}");
        assert!(text.contains("variance_ratio = 4.19"), "{text}");
        assert!(text.contains("95% CI [1.47, 8.79]"), "{text}");
        assert!(text.contains("100.0% (33/33)"), "{text}");
        assert!(text.contains("77.5% (31/40)"), "{text}");
        assert!(text.contains("(as printed)"), "{text}");
    }

    #[test]
    fn json_field_order_is_stable() {
        let json = replicate_bundled().unwrap().to_json();
        let keys = ["\"baseline\"", "\"primary\"", "\"pass_rates\"", "\"feedback\"", "\"data_notes\""];
        let positions: Vec<_> = keys.iter().map(|k| json.find(k).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }
}
