use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use num_rational::BigRational;
use serde_json::{json, Value};

use super::{canonical_json, write_records_csv, write_records_ndjson, Analysis, RecordFormat, Scenario};
use crate::analysis::{
    binomial_sigma, density_dependence_test, feature_i_check, feature_ii_check, pair_correlations, reorder,
    row_consistency_audit, Reordering,
};
use crate::engine::{run_experiment, sampleability_check, ModelSpec, PairSchedule, TrialRecord};
use crate::error::{Error, Result};
use crate::tables::{exact_statistics, rational_to_f64, SettingPair, SettingPairDistribution, SourceDistribution};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Overrides the scenario's record format and forces a record export.
    pub format: Option<RecordFormat>,
    /// Write a zero timestamp so that reports are reproducible byte for byte.
    pub deterministic_timestamps: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<TrialRecord>,
    /// The analysis section of the report.
    pub analysis: Value,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

fn exact(value: &BigRational) -> Value {
    json!({ "exact": value.to_string(), "value": rational_to_f64(value) })
}

fn mean_pair_distribution(pairs: &PairSchedule) -> SettingPairDistribution {
    match pairs {
        PairSchedule::Stationary(d) => d.clone(),
        PairSchedule::PhaseLocked(phases) => {
            let n = BigRational::from_integer(phases.len().into());
            let probs = std::array::from_fn(|i| {
                phases.iter().map(|d| d.probabilities()[i].clone()).sum::<BigRational>() / &n
            });
            SettingPairDistribution::new(probs).expect("average of distributions is a distribution")
        }
    }
}

/// Exact expectations over the 72-point sample space. A phase-locked
/// schedule is replaced by its long-run average pair distribution.
pub fn exact_oracle_report(source: &SourceDistribution, pairs: &PairSchedule) -> Value {
    let stats = exact_statistics(source, &mean_pair_distribution(pairs));
    let expectations: BTreeMap<String, Value> = SettingPair::ALL
        .iter()
        .map(|p| (p.label(), exact(&stats.pair_expectations[p.first.index()][p.second.index()])))
        .collect();
    json!({
        "same_color_probability": exact(&stats.same_color_prob),
        "pair_expectations": expectations,
    })
}

fn to_value<T: serde::Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("analysis results serialize")
}

fn correlations_value(records: &[TrialRecord]) -> Value {
    let m = pair_correlations(records);
    let mut out = serde_json::Map::new();
    for p in SettingPair::ALL {
        let (i, j) = (p.first.index(), p.second.index());
        out.insert(p.label(), json!({ "mean_product": m.values[i][j], "count": m.counts[i][j] }));
    }
    Value::Object(out)
}

fn run_reorder(records: &[TrialRecord], cache: &mut Option<Reordering>) -> Result<()> {
    if cache.is_none() {
        *cache = Some(reorder(records)?);
    }
    Ok(())
}

/// Applies the scenario's analyses to a record list. The result depends
/// only on the records, the analysis list, `alpha` and the distributions,
/// so running on exported records reproduces the report of the original run.
pub fn analyze_records(records: &[TrialRecord], scenario: &Scenario) -> Result<Value> {
    analyze(records, scenario).map(|(v, _)| v)
}

fn analyze(records: &[TrialRecord], scenario: &Scenario) -> Result<(Value, Option<Reordering>)> {
    let mut out = serde_json::Map::new();
    let mut reordering = None;
    for &analysis in &scenario.analyses {
        let value = match analysis {
            Analysis::FeatureI => to_value(&feature_i_check(records)?),
            Analysis::FeatureII => to_value(&feature_ii_check(records)?),
            Analysis::Correlations => correlations_value(records),
            Analysis::Sampleability => to_value(&sampleability_check(records)?),
            Analysis::Reorder => {
                run_reorder(records, &mut reordering)?;
                to_value(&reordering.as_ref().expect("computed").summary())
            }
            Analysis::RowAudit => {
                run_reorder(records, &mut reordering)?;
                to_value(&row_consistency_audit(&reordering.as_ref().expect("computed").rows))
            }
            Analysis::Density => to_value(&density_dependence_test(records, scenario.alpha)?),
            Analysis::Oracle => exact_oracle_report(&scenario.config.source, &scenario.config.pairs),
        };
        out.insert(analysis.name().to_string(), value);
    }
    Ok((Value::Object(out), reordering))
}

fn summarize(scenario: &Scenario, records: &[TrialRecord], analysis: &Value) -> Result<String> {
    let f2 = feature_ii_check(records)?;
    let f1 = feature_i_check(records)?;
    let n = records.len() as u64;
    let mut s = String::new();
    let model = match scenario.config.model {
        ModelSpec::QmReference { .. } => "qm-reference (NONLOCAL)".to_string(),
        ModelSpec::Hp { stacks } => format!("hp ({})", stacks.name()),
        m => m.name().to_string(),
    };
    writeln!(s, "scenario: {}", scenario.name).unwrap();
    writeln!(s, "model: {model}").unwrap();
    writeln!(s, "trials: {n}").unwrap();
    writeln!(
        s,
        "same-color fraction: {:.6} (standard error {:.6})",
        f2.same_color_fraction,
        binomial_sigma(f2.same_color_fraction, n)
    )
    .unwrap();
    match f1.same_color_fraction {
        Some(f) => writeln!(
            s,
            "equal-setting same-color fraction: {f:.6} over {} trials",
            f1.equal_setting_trials
        ),
        None => writeln!(s, "equal-setting same-color fraction: no equal-setting trials"),
    }
    .unwrap();
    writeln!(s, "green fraction: station 1 {:.6}, station 2 {:.6}", f2.green_fraction_s1, f2.green_fraction_s2).unwrap();
    if let Some(o) = analysis.get("oracle") {
        writeln!(s, "exact same-color probability: {}", o["same_color_probability"]["exact"].as_str().unwrap_or("?")).unwrap();
    }
    if let Some(r) = analysis.get("reorder") {
        writeln!(
            s,
            "reordering: {} complete rows, leftover fraction {:.6}",
            r["complete_rows"], r["leftover_fraction"].as_f64().unwrap_or(f64::NAN)
        )
        .unwrap();
    }
    if let Some(d) = analysis.get("density") {
        writeln!(
            s,
            "density test: statistic {:.3}, df {}, p-value {:.3e}, {}",
            d["statistic"].as_f64().unwrap_or(f64::NAN),
            d["degrees_of_freedom"],
            d["p_value"].as_f64().unwrap_or(f64::NAN),
            if d["reject"].as_bool() == Some(true) { "reject independence" } else { "no evidence of dependence" }
        )
        .unwrap();
    }
    Ok(s)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs a scenario and writes its outputs into `options.out_dir`:
/// `report.json` (header plus analysis), `analysis.json`, `summary.txt`,
/// and optionally `records.csv`, `records.ndjson` and `rows.csv`.
pub fn run_scenario(scenario: &Scenario, options: &RunOptions) -> Result<RunOutput> {
    let records = run_experiment(&scenario.config)?;
    let (analysis, reordering) = analyze(&records, scenario)?;
    let summary = summarize(scenario, &records, &analysis)?;

    let dir = &options.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();

    let export = options.format.is_some() || scenario.outputs.records;
    let format = options.format.unwrap_or(scenario.outputs.format);
    let mut record_files = Vec::new();
    if export && format.csv() {
        let path = dir.join("records.csv");
        write_records_csv(&records, create(&path)?)?;
        record_files.push("records.csv");
        files.push(path);
    }
    if export && format.json() {
        let path = dir.join("records.ndjson");
        write_records_ndjson(&records, create(&path)?)?;
        record_files.push("records.ndjson");
        files.push(path);
    }
    if let (true, Some(r)) = (scenario.outputs.reordered_rows, &reordering) {
        let path = dir.join("rows.csv");
        write_text(&path, &r.to_csv())?;
        files.push(path);
    }

    let generated_at = if options.deterministic_timestamps {
        0
    } else {
        SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
    };
    let report = json!({
        "header": {
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "generated_at_unix": generated_at,
            "deterministic_timestamps": options.deterministic_timestamps,
            "scenario": scenario.to_json(),
            "records": { "count": records.len(), "files": record_files },
        },
        "analysis": analysis,
    });
    for (name, text) in [
        ("report.json", canonical_json(&report)),
        ("analysis.json", canonical_json(&analysis)),
        ("summary.txt", summary.clone()),
    ] {
        let path = dir.join(name);
        write_text(&path, &text)?;
        files.push(path);
    }

    Ok(RunOutput {
        records,
        analysis,
        summary,
        files,
    })
}

/// Human-readable list of models, stack algorithms and analyses.
pub fn list_builtins() -> String {
    let mut s = String::from("models:\n");
    for (name, text) in [
        ("mermin", "instruction sets only; each station flashes the color its setting selects"),
        ("hp", "instruction sets plus synchronized time-dependent instrument stacks"),
        ("qm-reference (NONLOCAL)", "reference generator with the quantum statistics; not a local model"),
    ] {
        writeln!(s, "  {name:<26}{text}").unwrap();
    }
    s.push_str("stack algorithms:\n");
    for (name, text) in [
        ("iid-stream", "independent uniform values per tick and setting (alphabet)"),
        ("stroboscopic-periodic", "a seeded table repeating every `period` ticks (period, alphabet)"),
        ("history-dependent", "each value mixes the previous tick's values (alphabet)"),
        ("constant", "always zero"),
    ] {
        writeln!(s, "  {name:<26}{text}").unwrap();
    }
    s.push_str("analyses:\n");
    for a in Analysis::ALL {
        writeln!(s, "  {:<26}{}", a.name(), a.description()).unwrap();
    }
    s
}
