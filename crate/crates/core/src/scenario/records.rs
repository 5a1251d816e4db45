//! Trial records as CSV or newline-delimited JSON.
//!
//! CSV columns are `index,tick,setting_1,setting_2,outcome_1,outcome_2`,
//! followed by `lambda,v1,v2` when any record carries audit values.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{Hidden, TrialRecord};
use crate::error::{Error, Result};
use crate::models::{InstrumentValue, Tick};
use crate::tables::{InstructionSet, Outcome, Setting};

const BASE_COLUMNS: [&str; 6] = ["index", "tick", "setting_1", "setting_2", "outcome_1", "outcome_2"];
const AUDIT_COLUMNS: [&str; 3] = ["lambda", "v1", "v2"];

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    index: u64,
    tick: u64,
    setting_1: Setting,
    setting_2: Setting,
    outcome_1: Outcome,
    outcome_2: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<InstructionSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    v1: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    v2: Option<u32>,
}

impl From<&TrialRecord> for RecordLine {
    fn from(r: &TrialRecord) -> Self {
        RecordLine {
            index: r.index,
            tick: r.tick.0,
            setting_1: r.setting_1,
            setting_2: r.setting_2,
            outcome_1: r.outcome_1,
            outcome_2: r.outcome_2,
            lambda: r.hidden.map(|h| h.lambda),
            v1: r.hidden.and_then(|h| h.v1).map(|v| v.0),
            v2: r.hidden.and_then(|h| h.v2).map(|v| v.0),
        }
    }
}

impl RecordLine {
    fn into_record(self, location: impl Fn() -> String) -> Result<TrialRecord> {
        let hidden = match (self.lambda, self.v1, self.v2) {
            (Some(lambda), v1, v2) => Some(Hidden {
                lambda,
                v1: v1.map(InstrumentValue),
                v2: v2.map(InstrumentValue),
            }),
            (None, None, None) => None,
            _ => {
                return Err(Error::Parse {
                    location: location(),
                    message: "instrument values given without lambda".into(),
                })
            }
        };
        Ok(TrialRecord {
            index: self.index,
            tick: Tick(self.tick),
            setting_1: self.setting_1,
            setting_2: self.setting_2,
            outcome_1: self.outcome_1,
            outcome_2: self.outcome_2,
            hidden,
        })
    }
}

fn csv_error(location: &str, e: csv::Error) -> Error {
    let location = match e.position() {
        Some(p) => format!("{location}:{}", p.line()),
        None => location.to_string(),
    };
    Error::Parse {
        location,
        message: e.to_string(),
    }
}

pub fn write_records_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let audit = records.iter().any(|r| r.hidden.is_some());
    let mut w = csv::Writer::from_writer(out);
    let wrap = |e: csv::Error| csv_error("records", e);
    let mut header: Vec<&str> = BASE_COLUMNS.to_vec();
    if audit {
        header.extend(AUDIT_COLUMNS);
    }
    w.write_record(&header).map_err(wrap)?;
    let opt = |v: Option<InstrumentValue>| v.map_or(String::new(), |v| v.0.to_string());
    for r in records {
        let mut row = vec![
            r.index.to_string(),
            r.tick.0.to_string(),
            r.setting_1.label().to_string(),
            r.setting_2.label().to_string(),
            r.outcome_1.to_string(),
            r.outcome_2.to_string(),
        ];
        if audit {
            match r.hidden {
                Some(h) => row.extend([h.lambda.label(), opt(h.v1), opt(h.v2)]),
                None => row.extend([String::new(), String::new(), String::new()]),
            }
        }
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io("records", e))
}

pub fn read_records_csv<R: Read>(input: R, location: &str) -> Result<Vec<TrialRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers().map_err(|e| csv_error(location, e))?.clone();
    let mut expected: Vec<&str> = BASE_COLUMNS.to_vec();
    if headers.len() > BASE_COLUMNS.len() {
        expected.extend(AUDIT_COLUMNS);
    }
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse {
            location: format!("{location}:1"),
            message: format!("expected columns {}", expected.join(",")),
        });
    }

    let mut records = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let row = row.map_err(|e| csv_error(location, e))?;
        let line = n + 2;
        let at = || format!("{location}:{line}");
        let field = |i: usize| row.get(i).unwrap_or("").trim();
        let bad = |column: &str, value: &str| Error::Parse {
            location: at(),
            message: format!("invalid {column} {value:?}"),
        };
        let int = |i: usize| field(i).parse::<u64>().map_err(|_| bad(BASE_COLUMNS[i], field(i)));
        let setting = |i: usize| field(i).parse::<Setting>().map_err(|_| bad(BASE_COLUMNS[i], field(i)));
        let outcome = |i: usize| field(i).parse::<Outcome>().map_err(|_| bad(BASE_COLUMNS[i], field(i)));
        let optional = |i: usize| -> Result<Option<u32>> {
            match field(i) {
                "" => Ok(None),
                v => v.parse().map(Some).map_err(|_| bad(AUDIT_COLUMNS[i - 6], v)),
            }
        };
        let (lambda, v1, v2) = if row.len() > 6 {
            let lambda = match field(6) {
                "" => None,
                v => Some(v.parse::<InstructionSet>().map_err(|_| bad("lambda", v))?),
            };
            (lambda, optional(7)?, optional(8)?)
        } else {
            (None, None, None)
        };
        let record = RecordLine {
            index: int(0)?,
            tick: int(1)?,
            setting_1: setting(2)?,
            setting_2: setting(3)?,
            outcome_1: outcome(4)?,
            outcome_2: outcome(5)?,
            lambda,
            v1,
            v2,
        };
        records.push(record.into_record(at)?);
    }
    Ok(records)
}

pub fn write_records_ndjson<W: Write>(records: &[TrialRecord], mut out: W) -> Result<()> {
    let wrap = |e: std::io::Error| Error::io("records", e);
    for r in records {
        serde_json::to_writer(&mut out, &RecordLine::from(r)).map_err(|e| wrap(e.into()))?;
        out.write_all(b"\n").map_err(wrap)?;
    }
    out.flush().map_err(wrap)
}

pub fn read_records_ndjson<R: Read>(input: R, location: &str) -> Result<Vec<TrialRecord>> {
    let mut records = Vec::new();
    for (n, line) in BufReader::new(input).lines().enumerate() {
        let at = || format!("{location}:{}", n + 1);
        let line = line.map_err(|e| Error::io(location, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: RecordLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            location: at(),
            message: e.to_string(),
        })?;
        records.push(parsed.into_record(at)?);
    }
    Ok(records)
}

/// Reads a record file, choosing the format by extension: `.ndjson`,
/// `.jsonl` or `.json` for JSON lines, anything else for CSV.
pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<TrialRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let location = path.display().to_string();
    match path.extension().and_then(|e| e.to_str()) {
        Some("ndjson" | "jsonl" | "json") => read_records_ndjson(file, &location),
        _ => read_records_csv(file, &location),
    }
}
