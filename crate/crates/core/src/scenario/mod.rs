//! Scenario files: a JSON description of one run plus the analyses to apply.
//!
//! ```json
//! {
//!   "name": "hp-stroboscopic",
//!   "model": "hp",
//!   "trials": 100000,
//!   "seed": 7,
//!   "source": "uniform",
//!   "pairs": "uniform",
//!   "stacks": { "kind": "stroboscopic-periodic", "period": 12, "alphabet": 4 },
//!   "time_shift": { "wing": "s2", "delta": 3 },
//!   "audit": true,
//!   "analyses": ["feature-i", "feature-ii", "correlations", "density"],
//!   "outputs": { "records": true, "format": "csv" }
//! }
//! ```
//!
//! `source` is `"uniform"`, `"uniform-mixed"` or a map from instruction-set
//! label to probability. `pairs` is `"uniform"`, a map from pair label
//! (`"ab"`) to probability, `{"phase_locked": [map, ...]}` or
//! `{"rotating": {"period": P, "favored": w, "others": u}}`. Probabilities
//! are numbers or exact strings such as `"1/9"`. Every omitted field is
//! filled with its default, and [`Scenario::to_json`] writes the fully
//! materialised form, which parses back to the same scenario.

mod records;
mod report;
mod run;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

pub use records::{read_records, read_records_csv, read_records_ndjson, write_records_csv, write_records_ndjson};
pub use report::{canonical_json, round_significant};
pub use run::{analyze_records, exact_oracle_report, list_builtins, run_scenario, RunOptions, RunOutput};

use crate::engine::{ExperimentConfig, ModelSpec, PairSchedule, Seeds};
use crate::error::{Error, Result};
use crate::models::{QmReference, StackAlgorithm, TimeShift};
use crate::tables::{
    rational_from_f64, InstructionSet, SettingPair, SettingPairDistribution, SourceDistribution,
    SUM_TOLERANCE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    FeatureI,
    #[serde(rename = "feature-ii")]
    FeatureII,
    Correlations,
    Sampleability,
    Reorder,
    RowAudit,
    Density,
    Oracle,
}

impl Analysis {
    pub const ALL: [Analysis; 8] = [
        Analysis::FeatureI,
        Analysis::FeatureII,
        Analysis::Correlations,
        Analysis::Sampleability,
        Analysis::Reorder,
        Analysis::RowAudit,
        Analysis::Density,
        Analysis::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Analysis::FeatureI => "feature-i",
            Analysis::FeatureII => "feature-ii",
            Analysis::Correlations => "correlations",
            Analysis::Sampleability => "sampleability",
            Analysis::Reorder => "reorder",
            Analysis::RowAudit => "row-audit",
            Analysis::Density => "density",
            Analysis::Oracle => "oracle",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Analysis::FeatureI => "same-color fraction on equal-setting trials",
            Analysis::FeatureII => "same-color fraction over all trials, plus green marginals",
            Analysis::Correlations => "empirical <A_i B_j> for the nine ordered pairs",
            Analysis::Sampleability => "one setting pair per tick, no duplicate ticks",
            Analysis::Reorder => "regroup trials into rows sharing one source value (needs audit)",
            Analysis::RowAudit => "row sums and instrument uniformity of complete rows (needs audit)",
            Analysis::Density => "chi-square homogeneity of (lambda, v1, v2) across pairs (needs audit)",
            Analysis::Oracle => "exact 72-point expectations for the configured distributions",
        }
    }

    pub fn needs_audit(self) -> bool {
        matches!(self, Analysis::Reorder | Analysis::RowAudit | Analysis::Density)
    }
}

pub const DEFAULT_ANALYSES: [Analysis; 4] = [
    Analysis::FeatureI,
    Analysis::FeatureII,
    Analysis::Correlations,
    Analysis::Sampleability,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RecordFormat {
    #[default]
    Csv,
    Json,
    Both,
}

impl RecordFormat {
    pub fn csv(self) -> bool {
        matches!(self, RecordFormat::Csv | RecordFormat::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, RecordFormat::Json | RecordFormat::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    /// Output directory; the command-line `--out` flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub records: bool,
    #[serde(default)]
    pub format: RecordFormat,
    /// Also write reordered rows as CSV when the reorder analysis runs.
    #[serde(default)]
    pub reordered_rows: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub config: ExperimentConfig,
    pub analyses: Vec<Analysis>,
    pub alpha: f64,
    pub outputs: Outputs,
}

impl Scenario {
    /// A scenario with default distributions and analyses.
    pub fn new(name: impl Into<String>, config: ExperimentConfig) -> Self {
        Scenario {
            name: name.into(),
            config,
            analyses: DEFAULT_ANALYSES.to_vec(),
            alpha: crate::analysis::DEFAULT_ALPHA,
            outputs: Outputs::default(),
        }
    }

    /// The fully materialised scenario in the file schema.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ScenarioFile::from(self)).expect("scenario serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Probability {
    Number(f64),
    Exact(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum SourceSpec {
    Named(String),
    Table(BTreeMap<String, Probability>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RotatingSpec {
    period: usize,
    favored: u64,
    others: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum PairsSpec {
    Named(String),
    PhaseLocked {
        phase_locked: Vec<BTreeMap<String, Probability>>,
    },
    Rotating {
        rotating: RotatingSpec,
    },
    Table(BTreeMap<String, Probability>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ModelName {
    Mermin,
    Hp,
    QmReference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    model: ModelName,
    trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seeds: Option<Seeds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<SourceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pairs: Option<PairsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stacks: Option<StackAlgorithm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q_same: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    time_shift: Option<TimeShift>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    audit: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    analyses: Option<Vec<Analysis>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outputs: Option<Outputs>,
}

fn exact_string(p: &BigRational) -> Probability {
    Probability::Exact(p.to_string())
}

fn parse_probability(field: &str, value: &Probability) -> Result<BigRational> {
    let parsed = match value {
        Probability::Number(x) => rational_from_f64(*x),
        Probability::Exact(text) => {
            let text = text.trim();
            match text.split_once('/') {
                Some((n, d)) => match (n.trim().parse::<BigInt>(), d.trim().parse::<BigInt>()) {
                    (Ok(n), Ok(d)) if !d.is_zero() => Some(BigRational::new(n, d)),
                    _ => None,
                },
                None => text.parse::<BigInt>().ok().map(BigRational::from_integer),
            }
        }
    };
    match parsed {
        Some(p) if !p.is_negative() => Ok(p),
        Some(_) => Err(Error::config(field, "probability is negative")),
        None => Err(Error::config(field, format!("cannot read probability {value:?}"))),
    }
}

/// Reads a label-keyed table, checks the total against the float tolerance
/// and renormalises it exactly.
fn parse_table<const N: usize>(
    field: &str,
    table: &BTreeMap<String, Probability>,
    index_of: impl Fn(&str) -> Option<usize>,
) -> Result<[BigRational; N]> {
    let mut masses: [BigRational; N] = std::array::from_fn(|_| BigRational::zero());
    for (label, value) in table {
        let i = index_of(label)
            .ok_or_else(|| Error::config(format!("{field}.{label}"), "unknown label"))?;
        masses[i] = parse_probability(&format!("{field}.{label}"), value)?;
    }
    let total: BigRational = masses.iter().sum();
    let total_f = crate::tables::rational_to_f64(&total);
    if (total_f - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::config(field, format!("probabilities sum to {total_f} instead of 1")));
    }
    if total.is_zero() {
        return Err(Error::config(field, "support is empty"));
    }
    Ok(masses.map(|m| m / &total))
}

fn parse_pair_table(field: &str, table: &BTreeMap<String, Probability>) -> Result<SettingPairDistribution> {
    let masses = parse_table::<9>(field, table, |l| l.parse::<SettingPair>().ok().map(SettingPair::index))?;
    SettingPairDistribution::new(masses)
}

fn pair_table(d: &SettingPairDistribution) -> BTreeMap<String, Probability> {
    SettingPair::ALL
        .iter()
        .map(|p| (p.label(), exact_string(d.probability(*p))))
        .collect()
}

impl ScenarioFile {
    fn into_scenario(self, default_name: &str) -> Result<Scenario> {
        let name = self.name.unwrap_or_else(|| default_name.to_string());
        if name.trim().is_empty() {
            return Err(Error::config("name", "scenario name must not be empty"));
        }
        let seeds = match (self.seeds, self.seed) {
            (Some(seeds), _) => seeds,
            (None, Some(master)) => Seeds::from_master(master),
            (None, None) => return Err(Error::config("seed", "a master `seed` or explicit `seeds` is required")),
        };

        let model = match self.model {
            ModelName::Mermin | ModelName::QmReference if self.stacks.is_some() => {
                return Err(Error::config("stacks", "instrument stacks only apply to the hp model"))
            }
            ModelName::Mermin | ModelName::Hp if self.q_same.is_some() => {
                return Err(Error::config("q_same", "q_same only applies to the qm-reference model"))
            }
            ModelName::Mermin => ModelSpec::Mermin,
            ModelName::Hp => ModelSpec::Hp {
                stacks: self.stacks.unwrap_or(StackAlgorithm::IidStream { alphabet: 2 }),
            },
            ModelName::QmReference => ModelSpec::QmReference {
                q_same: self.q_same.unwrap_or(QmReference::DEFAULT_Q_SAME),
            },
        };

        let source = match &self.source {
            None => SourceDistribution::uniform(),
            Some(SourceSpec::Named(name)) => match name.as_str() {
                "uniform" => SourceDistribution::uniform(),
                "uniform-mixed" => SourceDistribution::uniform_mixed(),
                other => return Err(Error::config("source", format!("unknown source {other:?}"))),
            },
            Some(SourceSpec::Table(table)) => SourceDistribution::new(parse_table::<8>("source", table, |l| {
                l.parse::<InstructionSet>().ok().map(InstructionSet::index)
            })?)?,
        };

        let pairs = match &self.pairs {
            None => PairSchedule::default(),
            Some(PairsSpec::Named(name)) if name == "uniform" => PairSchedule::default(),
            Some(PairsSpec::Named(other)) => {
                return Err(Error::config("pairs", format!("unknown pair distribution {other:?}")))
            }
            Some(PairsSpec::Table(table)) => PairSchedule::Stationary(parse_pair_table("pairs", table)?),
            Some(PairsSpec::PhaseLocked { phase_locked }) => PairSchedule::PhaseLocked(
                phase_locked
                    .iter()
                    .enumerate()
                    .map(|(k, t)| parse_pair_table(&format!("pairs.phase_locked[{k}]"), t))
                    .collect::<Result<_>>()?,
            ),
            Some(PairsSpec::Rotating { rotating }) => {
                PairSchedule::rotating(rotating.period, rotating.favored, rotating.others)?
            }
        };

        let alpha = self.alpha.unwrap_or(crate::analysis::DEFAULT_ALPHA);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::config("alpha", format!("must lie in (0, 1), got {alpha}")));
        }

        let config = ExperimentConfig {
            trials: self.trials,
            source,
            pairs,
            model,
            seeds,
            audit: self.audit.unwrap_or(false),
            time_shift: self.time_shift,
        };
        config.validate()?;

        let mut analyses = self.analyses.unwrap_or_else(|| DEFAULT_ANALYSES.to_vec());
        analyses.sort();
        analyses.dedup();

        Ok(Scenario {
            name,
            config,
            analyses,
            alpha,
            outputs: self.outputs.unwrap_or_default(),
        })
    }
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        let c = &s.config;
        let (model, stacks, q_same) = match c.model {
            ModelSpec::Mermin => (ModelName::Mermin, None, None),
            ModelSpec::Hp { stacks } => (ModelName::Hp, Some(stacks), None),
            ModelSpec::QmReference { q_same } => (ModelName::QmReference, None, Some(q_same)),
        };
        let source = InstructionSet::ALL
            .iter()
            .map(|set| (set.label(), exact_string(c.source.probability(*set))))
            .collect();
        let pairs = match &c.pairs {
            PairSchedule::Stationary(d) => PairsSpec::Table(pair_table(d)),
            PairSchedule::PhaseLocked(phases) => PairsSpec::PhaseLocked {
                phase_locked: phases.iter().map(pair_table).collect(),
            },
        };
        ScenarioFile {
            name: Some(s.name.clone()),
            model,
            trials: c.trials,
            seed: None,
            seeds: Some(c.seeds),
            source: Some(SourceSpec::Table(source)),
            pairs: Some(pairs),
            stacks,
            q_same,
            time_shift: c.time_shift,
            audit: Some(c.audit),
            alpha: Some(s.alpha),
            analyses: Some(s.analyses.clone()),
            outputs: Some(s.outputs.clone()),
        }
    }
}

/// Parses scenario JSON. `location` names the source in error messages, and
/// its file stem is the scenario name when the file gives none.
pub fn parse_config_str(text: &str, location: &str) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("{location}:{}:{}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let stem = Path::new(location).file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    file.into_scenario(stem)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Wing;

    #[test]
    fn minimal_config_materialises_defaults() {
        let s = parse_config_str(r#"{"model": "mermin", "trials": 1000, "seed": 1}"#, "dir/minimal.json").unwrap();
        assert_eq!(s.name, "minimal");
        assert_eq!(s.config.trials, 1000);
        assert_eq!(s.config.source, SourceDistribution::uniform());
        assert_eq!(s.config.pairs, PairSchedule::Stationary(SettingPairDistribution::uniform()));
        assert!(!s.config.audit);
        assert_eq!(s.config.seeds, Seeds::from_master(1));
        assert_eq!(s.analyses, DEFAULT_ANALYSES.to_vec());
    }

    #[test]
    fn pair_probabilities_must_sum_to_one() {
        let text = r#"{"name": "m", "model": "mermin", "trials": 10, "seed": 1,
            "pairs": {"aa": 0.1, "ab": 0.1, "ac": 0.1, "ba": 0.1, "bb": 0.1, "bc": 0.1, "ca": 0.1, "cb": 0.1, "cc": 0.1}}"#;
        match parse_config_str(text, "t").unwrap_err() {
            Error::Config { field, message } => {
                assert_eq!(field, "pairs");
                assert!(message.contains("0.9"), "{message}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn exact_strings_are_accepted() {
        let text = r#"{"name": "m", "model": "mermin", "trials": 10, "seed": 1,
            "source": {"RRR": "1/2", "GGG": "1/2"}}"#;
        let s = parse_config_str(text, "t").unwrap();
        assert_eq!(s.config.source, SourceDistribution::from_weights([1, 0, 0, 0, 0, 0, 0, 1]).unwrap());
    }

    #[test]
    fn unknown_names_are_rejected_with_location() {
        let err = parse_config_str(r#"{"name": "m", "model": "bohm", "trials": 10, "seed": 1}"#, "cfg.json").unwrap_err();
        assert!(matches!(&err, Error::Parse { location, .. } if location.starts_with("cfg.json:1:")), "{err}");
        let err = parse_config_str(
            r#"{"name": "m", "model": "mermin", "trials": 10, "seed": 1, "analyses": ["bogus"]}"#,
            "t",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        let err = parse_config_str(
            r#"{"name": "m", "model": "hp", "trials": 10, "seed": 1, "stacks": {"kind": "wavelet", "alphabet": 2}}"#,
            "t",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        let err = parse_config_str(r#"{"name": "m", "model": "mermin", "trials": 10, "seed": 1, "source": {"RRX": 1}}"#, "t")
            .unwrap_err();
        assert!(err.to_string().contains("source.RRX"), "{err}");
    }

    #[test]
    fn field_constraints() {
        let bad = [
            r#"{"name": "", "model": "mermin", "trials": 10, "seed": 1}"#,
            r#"{"name": "m", "model": "mermin", "trials": 10}"#,
            r#"{"name": "m", "model": "mermin", "trials": 0, "seed": 1}"#,
            r#"{"name": "m", "model": "mermin", "trials": 10, "seed": 1, "stacks": {"kind": "constant"}}"#,
            r#"{"name": "m", "model": "hp", "trials": 10, "seed": 1, "q_same": 0.2}"#,
            r#"{"name": "m", "model": "hp", "trials": 10, "seed": 1, "stacks": {"kind": "iid-stream", "alphabet": 1}}"#,
            r#"{"name": "m", "model": "mermin", "trials": 10, "seed": 1, "alpha": 0}"#,
        ];
        for text in bad {
            assert!(matches!(parse_config_str(text, "t"), Err(Error::Config { .. })), "{text}");
        }
    }

    #[test]
    fn full_hp_config_round_trips() {
        let text = r#"{"name": "hp-full", "model": "hp", "trials": 5000, "seed": 3,
            "stacks": {"kind": "stroboscopic-periodic", "period": 12, "alphabet": 4},
            "time_shift": {"wing": "s2", "delta": 3}, "audit": true,
            "pairs": {"rotating": {"period": 12, "favored": 5, "others": 1}},
            "analyses": ["density", "feature-i"]}"#;
        let s = parse_config_str(text, "t").unwrap();
        assert_eq!(
            s.config.model,
            ModelSpec::Hp {
                stacks: StackAlgorithm::StroboscopicPeriodic { period: 12, alphabet: 4 }
            }
        );
        assert_eq!(s.config.time_shift, Some(TimeShift { wing: Wing::S2, delta: 3 }));
        let echo = s.to_json();
        assert_eq!(echo["stacks"]["period"], 12);
        assert_eq!(echo["stacks"]["alphabet"], 4);
        assert_eq!(echo["time_shift"]["delta"], 3);
        let again = parse_config_str(&echo.to_string(), "echo").unwrap();
        assert_eq!(again, s);
    }
}
