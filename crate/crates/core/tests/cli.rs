use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eprlab::analysis::feature_ii_check;
use eprlab::scenario::{parse_config, read_records};
use eprlab::tables::product_table;

fn eprlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eprlab")).args(args).output().expect("binary runs")
}

fn manifest(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn run_to(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--config", path(config), "--out", path(out), "--deterministic-timestamps"];
    args.extend(extra);
    let output = eprlab(&args);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    output
}

#[test]
fn table_prints_the_product_table() {
    let out = eprlab(&["table"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), product_table().to_csv());
}

#[test]
fn list_names_every_model() {
    let text = String::from_utf8(eprlab(&["list"]).stdout).unwrap();
    for name in ["mermin", "hp", "qm-reference (NONLOCAL)"] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn oracle_reports_exact_fractions() {
    let out = eprlab(&["oracle"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["same_color_probability"]["exact"], "2/3");
    assert_eq!(report["pair_expectations"]["ab"]["exact"], "0");
}

#[test]
fn committed_scenarios_parse() {
    let dir = manifest("scenarios");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        parse_config(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        seen += 1;
    }
    assert!(seen >= 3);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config = manifest("tests/golden/small.json");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_to(&config, &a, &[]);
    run_to(&config, &b, &[]);
    for name in ["report.json", "analysis.json", "summary.txt"] {
        assert_eq!(read(a.join(name)), read(b.join(name)), "{name}");
    }
}

#[test]
fn analysis_matches_the_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    run_to(&manifest("tests/golden/small.json"), dir.path(), &[]);
    assert_eq!(read(dir.path().join("analysis.json")), read(manifest("tests/golden/small.analysis.json")));
}

#[test]
fn exported_records_reproduce_the_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let config = manifest("tests/golden/small.json");
    run_to(&config, dir.path(), &["--format", "both"]);
    let original = read(dir.path().join("analysis.json"));
    for records in ["records.csv", "records.ndjson"] {
        let out = eprlab(&["analyze", "--records", path(&dir.path().join(records)), "--config", path(&config)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(String::from_utf8(out.stdout).unwrap(), original, "{records}");
    }
}

#[test]
fn summary_agrees_with_feature_ii() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("m.json");
    std::fs::write(&config, r#"{"name": "m", "model": "mermin", "trials": 5000, "seed": 3}"#).unwrap();
    let out = dir.path().join("out");
    run_to(&config, &out, &["--format", "csv"]);
    let records = read_records(out.join("records.csv")).unwrap();
    let f = feature_ii_check(&records).unwrap().same_color_fraction;
    let summary = read(out.join("summary.txt"));
    assert!(summary.contains(&format!("same-color fraction: {f:.6}")), "{summary}");
}

#[test]
fn header_echoes_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("hp.json");
    std::fs::write(
        &config,
        r#"{"name": "hp-full", "model": "hp", "trials": 100, "seed": 5,
            "stacks": {"kind": "stroboscopic-periodic", "period": 12, "alphabet": 4},
            "time_shift": {"wing": "s2", "delta": 3}}"#,
    )
    .unwrap();
    run_to(&config, dir.path(), &[]);
    let report: serde_json::Value = serde_json::from_str(&read(dir.path().join("report.json"))).unwrap();
    let echo = &report["header"]["scenario"];
    assert_eq!(echo["stacks"]["kind"], "stroboscopic-periodic");
    assert_eq!(echo["stacks"]["period"], 12);
    assert_eq!(echo["stacks"]["alphabet"], 4);
    assert_eq!(echo["time_shift"]["wing"], "s2");
    assert_eq!(echo["time_shift"]["delta"], 3);
    assert_eq!(echo["pairs"]["ab"], "1/9");
    assert_eq!(echo["source"]["GGR"], "1/8");
    assert_eq!(echo["audit"], false);
    assert_eq!(report["header"]["generated_at_unix"], 0);
}

#[test]
fn seed_and_audit_flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = manifest("tests/golden/small.json");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_to(&config, &a, &["--format", "csv"]);
    run_to(&config, &b, &["--format", "csv", "--seed", "99"]);
    assert_ne!(read(a.join("records.csv")), read(b.join("records.csv")));

    let plain = dir.path().join("plain.json");
    std::fs::write(&plain, r#"{"name": "p", "model": "mermin", "trials": 10, "seed": 1}"#).unwrap();
    let c = dir.path().join("c");
    run_to(&plain, &c, &["--format", "csv", "--audit"]);
    assert!(read(c.join("records.csv")).starts_with("index,tick,setting_1,setting_2,outcome_1,outcome_2,lambda,v1,v2\n"));
}

#[test]
fn batches_write_one_directory_per_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = eprlab(&[
        "run",
        "--config",
        path(&manifest("tests/golden/small.json")),
        "--config",
        path(&manifest("scenarios/hp-time-shift.json")),
        "--out",
        path(dir.path()),
        "--deterministic-timestamps",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("small/report.json").exists());
    assert!(dir.path().join("hp-time-shift/report.json").exists());
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    };
    let out = dir.path().join("out");

    let bad_sum = write(
        "bad.json",
        r#"{"model": "mermin", "trials": 5, "seed": 1,
            "pairs": {"aa": 0.1, "ab": 0.1, "ac": 0.1, "ba": 0.1, "bb": 0.1, "bc": 0.1, "ca": 0.1, "cb": 0.1, "cc": 0.1}}"#,
    );
    let r = eprlab(&["run", "--config", path(&bad_sum), "--out", path(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("pairs"));

    let malformed = write("malformed.json", "{\"model\": \"mermin\",\n \"trials\": }");
    let r = eprlab(&["run", "--config", path(&malformed), "--out", path(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("malformed.json:2:"));

    let no_audit = write(
        "noaudit.json",
        r#"{"model": "mermin", "trials": 50, "seed": 1, "analyses": ["reorder"]}"#,
    );
    let r = eprlab(&["run", "--config", path(&no_audit), "--out", path(&out)]);
    assert_eq!(r.status.code(), Some(3));

    let duplicated = write(
        "dup.csv",
        "index,tick,setting_1,setting_2,outcome_1,outcome_2\n0,0,a,b,+1,-1\n1,0,a,a,+1,+1\n",
    );
    let r = eprlab(&["analyze", "--records", path(&duplicated)]);
    assert_eq!(r.status.code(), Some(4));

    let r = eprlab(&["run", "--config", path(&dir.path().join("missing.json")), "--out", path(&out)]);
    assert_eq!(r.status.code(), Some(5));
}
