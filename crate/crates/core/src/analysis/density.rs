//! Homogeneity of the hidden-value distribution across setting pairs.
//!
//! For each ordered pair the empirical joint law of `(λ, v1, v2)` is
//! tabulated. With synchronized stacks an equal-setting pair always has
//! `v1 == v2` while an unequal pair need not, so the two groups differ by
//! construction. The test therefore compares pairs within the equal-setting
//! group and within the unequal-setting group, and adds the two chi-square
//! statistics. The unstratified statistic over all nine pairs is reported
//! alongside.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::reorder::hidden_lambda;
use crate::engine::TrialRecord;
use crate::error::{Error, Result};
use crate::tables::SettingPair;

/// Fewest observations per pair the test will accept.
pub const MIN_PAIR_COUNT: u64 = 100;

pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub degrees_of_freedom: u64,
    pub p_value: f64,
}

/// Pearson chi-square test of homogeneity across the rows of a contingency
/// table. Empty rows and columns are dropped; the degrees of freedom are
/// `(rows - 1) * (columns - 1)` over what remains.
pub fn chi_square_homogeneity(table: &[Vec<u64>]) -> ChiSquareResult {
    let (statistic, df) = homogeneity_statistic(table);
    ChiSquareResult {
        statistic,
        degrees_of_freedom: df,
        p_value: chi_square_sf(statistic, df),
    }
}

fn homogeneity_statistic(table: &[Vec<u64>]) -> (f64, u64) {
    let width = table.iter().map(Vec::len).max().unwrap_or(0);
    let rows: Vec<&Vec<u64>> = table.iter().filter(|r| r.iter().any(|&c| c > 0)).collect();
    let col_totals: Vec<u64> = (0..width)
        .map(|c| rows.iter().map(|r| r.get(c).copied().unwrap_or(0)).sum())
        .collect();
    let cols: Vec<usize> = (0..width).filter(|&c| col_totals[c] > 0).collect();
    if rows.len() < 2 || cols.len() < 2 {
        return (0.0, 0);
    }
    let total: u64 = col_totals.iter().sum();
    let mut stat = 0.0;
    for row in &rows {
        let row_total: u64 = row.iter().sum();
        for &c in &cols {
            let expected = row_total as f64 * col_totals[c] as f64 / total as f64;
            let diff = row.get(c).copied().unwrap_or(0) as f64 - expected;
            stat += diff * diff / expected;
        }
    }
    (stat, (rows.len() as u64 - 1) * (cols.len() as u64 - 1))
}

fn chi_square_sf(statistic: f64, df: u64) -> f64 {
    if df == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    dist.sf(statistic).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumResult {
    pub name: &'static str,
    pub pairs: Vec<SettingPair>,
    pub statistic: f64,
    pub degrees_of_freedom: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityTestReport {
    pub alpha: f64,
    /// Per pair, the empirical probability of each observed `λ/v1/v2` cell.
    pub distributions: BTreeMap<SettingPair, BTreeMap<String, f64>>,
    pub pair_counts: BTreeMap<SettingPair, u64>,
    pub strata: Vec<StratumResult>,
    pub statistic: f64,
    pub degrees_of_freedom: u64,
    pub p_value: f64,
    pub reject: bool,
    pub unstratified: ChiSquareResult,
}

fn cell_label(record: &TrialRecord) -> Result<String> {
    let lambda = hidden_lambda(record)?;
    let hidden = record.hidden.expect("checked by hidden_lambda");
    let show = |v: Option<crate::models::InstrumentValue>| v.map_or("-".to_string(), |v| v.0.to_string());
    Ok(format!("{lambda}/{}/{}", show(hidden.v1), show(hidden.v2)))
}

pub fn density_dependence_test(records: &[TrialRecord], alpha: f64) -> Result<DensityTestReport> {
    if !(0.0..1.0).contains(&alpha) || alpha == 0.0 {
        return Err(Error::config("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    let mut counts: BTreeMap<String, [u64; 9]> = BTreeMap::new();
    let mut pair_totals = [0u64; 9];
    for r in records {
        let p = r.pair().index();
        counts.entry(cell_label(r)?).or_insert([0; 9])[p] += 1;
        pair_totals[p] += 1;
    }
    if let Some(p) = (0..9).find(|&p| pair_totals[p] < MIN_PAIR_COUNT) {
        return Err(Error::Precondition(format!(
            "pair {} observed {} times; at least {MIN_PAIR_COUNT} required",
            SettingPair::from_index(p),
            pair_totals[p]
        )));
    }

    let table_for = |pairs: &[SettingPair]| -> Vec<Vec<u64>> {
        pairs
            .iter()
            .map(|p| counts.values().map(|c| c[p.index()]).collect())
            .collect()
    };
    let (equal, unequal): (Vec<SettingPair>, Vec<SettingPair>) =
        SettingPair::ALL.iter().partition(|p| p.is_equal_setting());
    let strata: Vec<StratumResult> = [("equal-setting", equal), ("unequal-setting", unequal)]
        .into_iter()
        .map(|(name, pairs)| {
            let (statistic, degrees_of_freedom) = homogeneity_statistic(&table_for(&pairs));
            StratumResult {
                name,
                pairs,
                statistic,
                degrees_of_freedom,
            }
        })
        .collect();
    let statistic: f64 = strata.iter().map(|s| s.statistic).sum();
    let degrees_of_freedom: u64 = strata.iter().map(|s| s.degrees_of_freedom).sum();
    let p_value = chi_square_sf(statistic, degrees_of_freedom);

    let distributions = SettingPair::ALL
        .iter()
        .map(|&pair| {
            let total = pair_totals[pair.index()] as f64;
            let cells = counts
                .iter()
                .filter(|(_, c)| c[pair.index()] > 0)
                .map(|(label, c)| (label.clone(), c[pair.index()] as f64 / total))
                .collect();
            (pair, cells)
        })
        .collect();

    Ok(DensityTestReport {
        alpha,
        distributions,
        pair_counts: SettingPair::ALL.iter().map(|&p| (p, pair_totals[p.index()])).collect(),
        strata,
        statistic,
        degrees_of_freedom,
        p_value,
        reject: p_value < alpha,
        unstratified: chi_square_homogeneity(&table_for(&SettingPair::ALL)),
    })
}
