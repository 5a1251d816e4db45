//! Regrouping of sequential trials into rows that share one source value.
//!
//! Trials are taken in clock order. A trial with source value `λ` and pair
//! `p` goes into the earliest row for `λ` that still lacks `p`; equivalently
//! the `k`-th such trial lands in row `k`. Any maximal regrouping yields
//! `min_p count(λ, p)` complete rows, and this one does too.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::engine::TrialRecord;
use crate::error::{Error, Result};
use crate::tables::{InstructionSet, SettingPair};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReorderedRow {
    pub lambda: InstructionSet,
    /// Indexed by [`SettingPair::index`].
    pub cells: [Option<TrialRecord>; 9],
}

impl ReorderedRow {
    fn new(lambda: InstructionSet) -> Self {
        ReorderedRow {
            lambda,
            cells: [None; 9],
        }
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }

    pub fn filled(&self) -> usize {
        self.cells.iter().flatten().count()
    }

    pub fn cell(&self, pair: SettingPair) -> Option<&TrialRecord> {
        self.cells[pair.index()].as_ref()
    }

    /// Sum of outcome products over the filled cells.
    pub fn product_sum(&self) -> i32 {
        self.cells.iter().flatten().map(TrialRecord::product).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Reordering {
    /// Grouped by instruction set in canonical order, then by creation.
    pub rows: Vec<ReorderedRow>,
    pub complete_per_lambda: [u64; 8],
    pub incomplete_rows: u64,
    pub records_in_incomplete_rows: u64,
    pub total_records: u64,
    /// Records in incomplete rows divided by the total record count.
    pub leftover_fraction: f64,
}

impl Reordering {
    pub fn complete_rows(&self) -> impl Iterator<Item = &ReorderedRow> {
        self.rows.iter().filter(|r| r.is_complete())
    }

    pub fn summary(&self) -> ReorderSummary {
        ReorderSummary {
            complete_per_lambda: InstructionSet::ALL
                .iter()
                .map(|s| (s.label(), self.complete_per_lambda[s.index()]))
                .collect(),
            complete_rows: self.complete_per_lambda.iter().sum(),
            incomplete_rows: self.incomplete_rows,
            records_in_incomplete_rows: self.records_in_incomplete_rows,
            total_records: self.total_records,
            leftover_fraction: self.leftover_fraction,
        }
    }

    /// CSV rows `lambda,row,pair,index,tick,product` for every filled cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,row,pair,index,tick,product\n");
        let mut row_number: BTreeMap<InstructionSet, u64> = BTreeMap::new();
        for row in &self.rows {
            let n = row_number.entry(row.lambda).or_default();
            for (p, cell) in row.cells.iter().enumerate() {
                if let Some(r) = cell {
                    out.push_str(&format!(
                        "{},{},{},{},{},{:+}\n",
                        row.lambda,
                        n,
                        SettingPair::from_index(p),
                        r.index,
                        r.tick.0,
                        r.product()
                    ));
                }
            }
            *n += 1;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReorderSummary {
    pub complete_per_lambda: BTreeMap<String, u64>,
    pub complete_rows: u64,
    pub incomplete_rows: u64,
    pub records_in_incomplete_rows: u64,
    pub total_records: u64,
    pub leftover_fraction: f64,
}

pub(crate) fn hidden_lambda(record: &TrialRecord) -> Result<InstructionSet> {
    record.hidden.map(|h| h.lambda).ok_or_else(|| {
        Error::Precondition(format!(
            "record {} has no audit payload; run with audit enabled",
            record.index
        ))
    })
}

pub fn reorder(records: &[TrialRecord]) -> Result<Reordering> {
    let mut ordered: Vec<&TrialRecord> = records.iter().collect();
    ordered.sort_by_key(|r| r.tick);

    let mut rows: [Vec<ReorderedRow>; 8] = Default::default();
    let mut counts = [[0usize; 9]; 8];
    for r in ordered {
        let lambda = hidden_lambda(r)?;
        let (s, p) = (lambda.index(), r.pair().index());
        let k = counts[s][p];
        if rows[s].len() == k {
            rows[s].push(ReorderedRow::new(lambda));
        }
        rows[s][k].cells[p] = Some(*r);
        counts[s][p] += 1;
    }

    let complete_per_lambda = counts.map(|c| *c.iter().min().expect("nine pairs") as u64);
    let rows: Vec<ReorderedRow> = rows.into_iter().flatten().collect();
    let (incomplete_rows, records_in_incomplete_rows) = rows
        .iter()
        .filter(|r| !r.is_complete())
        .fold((0u64, 0u64), |(n, m), r| (n + 1, m + r.filled() as u64));
    let total_records = records.len() as u64;
    Ok(Reordering {
        rows,
        complete_per_lambda,
        incomplete_rows,
        records_in_incomplete_rows,
        total_records,
        leftover_fraction: if total_records == 0 {
            0.0
        } else {
            records_in_incomplete_rows as f64 / total_records as f64
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowAudit {
    pub complete_rows: u64,
    /// Rows in which, for every station and local setting, the three cells
    /// using that setting recorded the same instrument value. `None` when the
    /// records carry no instrument values.
    pub uniform_instrument_fraction: Option<f64>,
    /// Rows whose nine products sum to 1 or 9.
    pub row_sum_identity_fraction: Option<f64>,
    /// Mean of `row sum / 9` over complete rows.
    pub mean_row_average: Option<f64>,
    /// Number of complete rows per observed row sum.
    pub row_sum_histogram: BTreeMap<i32, u64>,
}

fn has_uniform_instruments(row: &ReorderedRow) -> Option<bool> {
    let mut any = false;
    for s in 0..3 {
        let mut v1 = Vec::with_capacity(3);
        let mut v2 = Vec::with_capacity(3);
        for other in 0..3 {
            let h1 = row.cells[s * 3 + other].and_then(|r| r.hidden);
            let h2 = row.cells[other * 3 + s].and_then(|r| r.hidden);
            v1.push(h1.and_then(|h| h.v1));
            v2.push(h2.and_then(|h| h.v2));
        }
        for values in [v1, v2] {
            if values.iter().any(Option::is_some) {
                any = true;
            }
            if values.windows(2).any(|w| w[0] != w[1]) {
                return Some(false);
            }
        }
    }
    any.then_some(true)
}

/// Audits the complete rows of a reordering.
pub fn row_consistency_audit(rows: &[ReorderedRow]) -> RowAudit {
    let complete: Vec<&ReorderedRow> = rows.iter().filter(|r| r.is_complete()).collect();
    let n = complete.len() as u64;
    let mut histogram = BTreeMap::new();
    let mut identity = 0u64;
    let mut uniform = 0u64;
    let mut with_instruments = 0u64;
    let mut average_sum = 0.0;
    for row in &complete {
        let sum = row.product_sum();
        *histogram.entry(sum).or_default() += 1;
        identity += u64::from(sum == 1 || sum == 9);
        average_sum += f64::from(sum) / 9.0;
        if let Some(u) = has_uniform_instruments(row) {
            with_instruments += 1;
            uniform += u64::from(u);
        }
    }
    let fraction = |k: u64, n: u64| (n > 0).then(|| k as f64 / n as f64);
    RowAudit {
        complete_rows: n,
        uniform_instrument_fraction: fraction(uniform, with_instruments),
        row_sum_identity_fraction: fraction(identity, n),
        mean_row_average: (n > 0).then(|| average_sum / n as f64),
        row_sum_histogram: histogram,
    }
}
