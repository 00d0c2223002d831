//! Fisher's exact test on a 2×2 table.

use serde::{Deserialize, Serialize};

use super::special::ln_gamma;
use super::AnalysisError;

/// ```text
///            pass  fail
/// group 1     a     b
/// group 2     c     d
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable2x2 {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl ContingencyTable2x2 {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        Self { a, b, c, d }
    }

    pub fn total(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// One-tailed p-value `P(X >= a)` where `X` is the top-left cell under the
/// hypergeometric null with all margins fixed. Small values mean group 1 has
/// the higher first-column rate.
pub fn fisher_exact_one_tailed(table: &ContingencyTable2x2) -> Result<f64, AnalysisError> {
    let n = table.total();
    if n == 0 {
        return Err(AnalysisError::Domain("contingency table is empty".into()));
    }
    let row1 = table.a + table.b;
    let col1 = table.a + table.c;
    let lo = (row1 + col1).saturating_sub(n);
    let hi = row1.min(col1);
    let ln_denom = ln_choose(n, row1);
    let pmf = |x: u64| (ln_choose(col1, x) + ln_choose(n - col1, row1 - x) - ln_denom).exp();
    debug_assert!(lo <= table.a && table.a <= hi);
    let p: f64 = (table.a..=hi).map(pmf).sum();
    Ok(p.min(1.0))
}
