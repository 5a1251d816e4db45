use serde::Serialize;

use crate::engine::TrialRecord;
use crate::error::{Error, Result};

fn require_records(records: &[TrialRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Precondition("record list is empty".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeatureI {
    pub equal_setting_trials: u64,
    /// `None` when no trial had equal settings.
    pub same_color_fraction: Option<f64>,
}

/// Same-color fraction over the trials whose two settings are equal.
pub fn feature_i_check(records: &[TrialRecord]) -> Result<FeatureI> {
    require_records(records)?;
    let (equal, same) = records
        .iter()
        .filter(|r| r.setting_1 == r.setting_2)
        .fold((0u64, 0u64), |(n, s), r| (n + 1, s + u64::from(r.same_color())));
    Ok(FeatureI {
        equal_setting_trials: equal,
        same_color_fraction: (equal > 0).then(|| same as f64 / equal as f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeatureII {
    pub trials: u64,
    pub same_color_fraction: f64,
    /// Fraction of green (`+1`) flashes at station 1.
    pub green_fraction_s1: f64,
    pub green_fraction_s2: f64,
}

/// Same-color fraction over all trials, ignoring settings, plus the
/// per-station marginals.
pub fn feature_ii_check(records: &[TrialRecord]) -> Result<FeatureII> {
    require_records(records)?;
    let n = records.len() as f64;
    let count = |pred: fn(&TrialRecord) -> bool| records.iter().filter(|r| pred(r)).count() as f64 / n;
    Ok(FeatureII {
        trials: records.len() as u64,
        same_color_fraction: count(TrialRecord::same_color),
        green_fraction_s1: count(|r| r.outcome_1.value() > 0),
        green_fraction_s2: count(|r| r.outcome_2.value() > 0),
    })
}

/// Standard error of a binomial proportion `p` estimated from `n` trials.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
