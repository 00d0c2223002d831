use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::{Condition, SessionError};

/// How incoming participants are assigned to a condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AllocationMode {
    /// The first `n` sessions are traditional, every later one personality-conditional.
    FixedQuota { first_n_to_traditional: u64 },
    /// A preassigned list; allocation fails once it runs out.
    Manual { sequence: Vec<Condition> },
    /// Traditional, personality-conditional, traditional, ...
    Alternating,
}

impl AllocationMode {
    /// Condition for the session with zero-based ordinal `k`.
    pub fn condition_for(&self, k: u64) -> Option<Condition> {
        match self {
            AllocationMode::FixedQuota { first_n_to_traditional } => Some(if k < *first_n_to_traditional {
                Condition::Traditional
            } else {
                Condition::PersonalityConditional
            }),
            AllocationMode::Manual { sequence } => usize::try_from(k).ok().and_then(|i| sequence.get(i)).copied(),
            AllocationMode::Alternating => Some(if k.is_multiple_of(2) {
                Condition::Traditional
            } else {
                Condition::PersonalityConditional
            }),
        }
    }
}

impl fmt::Display for AllocationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AllocationMode::FixedQuota { first_n_to_traditional } => write!(f, "fixed-quota:{first_n_to_traditional}"),
            AllocationMode::Alternating => f.write_str("alternating"),
            AllocationMode::Manual { sequence } => {
                f.write_str("manual:")?;
                for (i, c) in sequence.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    f.write_str(match c {
                        Condition::Traditional => "t",
                        Condition::PersonalityConditional => "p",
                    })?;
                }
                Ok(())
            }
        }
    }
}

/// Parses `fixed-quota:<n>`, `alternating` or `manual:<t|p>,<t|p>,...`.
impl FromStr for AllocationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "alternating" {
            return Ok(AllocationMode::Alternating);
        }
        if let Some(n) = s.strip_prefix("fixed-quota:") {
            return n
                .trim()
                .parse()
                .map(|first_n_to_traditional| AllocationMode::FixedQuota { first_n_to_traditional })
                .map_err(|_| format!("invalid quota `{n}` in allocation mode `{s}`"));
        }
        if let Some(list) = s.strip_prefix("manual:") {
            let sequence = list
                .split(',')
                .map(str::trim)
                .filter(|x| !x.is_empty())
                .map(|x| match x {
                    "t" | "traditional" => Ok(Condition::Traditional),
                    "p" | "personality_conditional" => Ok(Condition::PersonalityConditional),
                    other => Err(format!("unknown condition `{other}` in manual allocation")),
                })
                .collect::<Result<_, _>>()?;
            return Ok(AllocationMode::Manual { sequence });
        }
        Err(format!(
            "unknown allocation mode `{s}` (expected fixed-quota:<n>, alternating or manual:<t|p,...>)"
        ))
    }
}

impl Serialize for AllocationMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AllocationMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Allocation mode plus the shared counter of sessions issued so far.
///
/// The counter is the only synchronisation point between concurrent
/// session creations.
#[derive(Debug)]
pub struct AllocationPolicy {
    mode: AllocationMode,
    issued: AtomicU64,
}

impl AllocationPolicy {
    pub fn new(mode: AllocationMode) -> Self {
        Self::resume(mode, 0)
    }

    /// Restores a policy after `issued` sessions have already been allocated.
    pub fn resume(mode: AllocationMode, issued: u64) -> Self {
        Self {
            mode,
            issued: AtomicU64::new(issued),
        }
    }

    pub fn mode(&self) -> &AllocationMode {
        &self.mode
    }

    pub fn issued(&self) -> u64 {
        self.issued.load(Ordering::SeqCst)
    }

    pub fn allocate(&self) -> Result<Condition, SessionError> {
        let mut chosen = None;
        self.issued
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |k| {
                chosen = self.mode.condition_for(k);
                chosen.map(|_| k + 1)
            })
            .map_err(|_| SessionError::AllocationExhausted)?;
        Ok(chosen.expect("set when the update succeeds"))
    }
}
