//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any criterion fails.
//!
//! cargo test --release --test acceptance

use std::collections::HashMap;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eprlab::analysis::{
    binomial_sigma, correlation_sigma, density_dependence_test, feature_i_check, feature_ii_check, pair_correlations,
    reorder, row_consistency_audit,
};
use eprlab::engine::{run_experiment, ExperimentConfig, ModelSpec, PairSchedule, TrialRecord};
use eprlab::models::{apply_time_shift, build_synchronized_stacks, StackAlgorithm, Tick, TimeShift, Wing};
use eprlab::tables::{
    exact_statistics, row_average, row_sum, InstructionSet, Setting, SettingPairDistribution, SourceDistribution,
};

struct Failure(String);

impl From<String> for Failure {
    fn from(s: String) -> Self {
        Failure(s)
    }
}

impl From<eprlab::Error> for Failure {
    fn from(e: eprlab::Error) -> Self {
        Failure(format!("error: {e}"))
    }
}

type Outcome = Result<String, Failure>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(Failure(detail))
    }
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn hp(stacks: StackAlgorithm) -> ModelSpec {
    ModelSpec::Hp { stacks }
}

const IID2: StackAlgorithm = StackAlgorithm::IidStream { alphabet: 2 };

/// Rows RRR..GGG, columns aa, ab, ac, ba, bb, bc, ca, cb, cc, as published.
const PUBLISHED_TABLE: [[i32; 9]; 8] = [
    [1, 1, 1, 1, 1, 1, 1, 1, 1],
    [1, 1, -1, 1, 1, -1, -1, -1, 1],
    [1, -1, 1, -1, 1, -1, 1, -1, 1],
    [1, -1, -1, -1, 1, 1, -1, 1, 1],
    [1, 1, -1, 1, 1, -1, -1, -1, 1],
    [1, -1, 1, -1, 1, -1, 1, -1, 1],
    [1, -1, -1, -1, 1, 1, -1, 1, 1],
    [1, 1, 1, 1, 1, 1, 1, 1, 1],
];
const ROW_LABELS: [&str; 8] = ["RRR", "RRG", "RGR", "GRR", "GGR", "GRG", "RGG", "GGG"];

fn table_reproduction() -> Outcome {
    let out = Command::new(env!("CARGO_BIN_EXE_eprlab"))
        .arg("table")
        .output()
        .map_err(|e| format!("cannot run eprlab: {e}"))?;
    if !out.status.success() {
        return Err(format!("eprlab table exited with {}", out.status).into());
    }
    let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != "lambda,aa,ab,ac,ba,bb,bc,ca,cb,cc" {
        return Err(format!("unexpected header {header:?}").into());
    }
    let mut matching = 0;
    let mut rows = 0;
    for (line, (label, expected)) in lines.zip(ROW_LABELS.iter().zip(PUBLISHED_TABLE)) {
        rows += 1;
        let mut cells = line.split(',');
        if cells.next() != Some(label) {
            return Err(format!("row {rows} is not {label}").into());
        }
        matching += cells
            .zip(expected)
            .filter(|(cell, e)| cell.parse::<i32>().ok() == Some(*e))
            .count();
    }
    check(rows == 8 && matching == 72, format!("{matching}/72 cells match"))
}

fn row_identities() -> Outcome {
    let ok = InstructionSet::ALL.iter().all(|&s| {
        matches!(row_sum(s), 1 | 9) && row_average(s) >= q(1, 9)
    });
    let sums: Vec<i32> = InstructionSet::ALL.iter().map(|&s| row_sum(s)).collect();
    check(ok, format!("row sums {sums:?}"))
}

fn five_ninths_bound() -> Outcome {
    let pairs = SettingPairDistribution::uniform();
    let mixed = exact_statistics(&SourceDistribution::uniform_mixed(), &pairs).same_color_prob;
    let mut rng = ChaCha8Rng::seed_from_u64(59);
    let mut minimum = q(1, 1);
    for _ in 0..100 {
        let weights: [u64; 8] = std::array::from_fn(|_| rng.random_range(0..1000));
        let Ok(source) = SourceDistribution::from_weights(weights) else { continue };
        minimum = minimum.min(exact_statistics(&source, &pairs).same_color_prob);
    }
    for set in InstructionSet::ALL {
        minimum = minimum.min(exact_statistics(&SourceDistribution::vertex(set), &pairs).same_color_prob);
    }
    check(
        mixed == q(5, 9) && minimum >= q(5, 9),
        format!("uniform mixed {mixed}, minimum over random and vertex sources {minimum}"),
    )
}

/// Expected products by direct enumeration, independent of the library's
/// tables: bit k of the set index (in canonical order) is the color at
/// setting k.
fn enumerated_correlations() -> [[f64; 3]; 3] {
    const SETS: [[i32; 3]; 8] = [
        [-1, -1, -1],
        [-1, -1, 1],
        [-1, 1, -1],
        [1, -1, -1],
        [1, 1, -1],
        [1, -1, 1],
        [-1, 1, 1],
        [1, 1, 1],
    ];
    std::array::from_fn(|i| std::array::from_fn(|j| SETS.iter().map(|s| f64::from(s[i] * s[j])).sum::<f64>() / 8.0))
}

fn monte_carlo_vs_oracle() -> Outcome {
    let n = 1_000_000;
    let records = run_experiment(&ExperimentConfig::new(ModelSpec::Mermin, n, 4))?;
    let f = feature_ii_check(&records)?.same_color_fraction;
    let sigma = binomial_sigma(2.0 / 3.0, n);
    let z = (f - 2.0 / 3.0) / sigma;
    let m = pair_correlations(&records);
    let oracle = enumerated_correlations();
    let mut worst: f64 = 0.0;
    let mut ok = z.abs() <= 3.0;
    for i in 0..3 {
        for j in 0..3 {
            let observed = m.value(i, j).unwrap_or(f64::NAN);
            let s = correlation_sigma(oracle[i][j], m.counts[i][j]);
            let diff = (observed - oracle[i][j]).abs();
            if s == 0.0 {
                ok &= diff == 0.0;
            } else {
                ok &= diff <= 3.0 * s;
                worst = worst.max(diff / s);
            }
        }
    }
    check(ok, format!("same-color {f:.5} ({z:+.2} sigma), worst correlation {worst:.2} sigma"))
}

fn feature_i_exactness() -> Outcome {
    let n = 1_000_000;
    let mut details = Vec::new();
    let mut ok = true;
    for model in [ModelSpec::Mermin, hp(IID2)] {
        let records = run_experiment(&ExperimentConfig::new(model, n, 5))?;
        let f = feature_i_check(&records)?;
        ok &= f.same_color_fraction == Some(1.0);
        details.push(format!("{} {:?} over {}", model.name(), f.same_color_fraction, f.equal_setting_trials));
    }
    check(ok, details.join(", "))
}

fn incompatibility() -> Outcome {
    let n = 1_000_000;
    let records = run_experiment(&ExperimentConfig::new(ModelSpec::QmReference { q_same: 0.25 }, n, 6))?;
    let f = feature_ii_check(&records)?.same_color_fraction;
    let sigma = binomial_sigma(0.5, n);
    let z_half = (f - 0.5) / sigma;
    let below = (5.0 / 9.0 - f) / binomial_sigma(f, n);
    check(
        z_half.abs() <= 3.0 && below > 10.0,
        format!("same-color {f:.5} ({z_half:+.2} sigma from 1/2), {below:.1} sigma below 5/9"),
    )
}

fn reordering() -> Outcome {
    let mut config = ExperimentConfig::new(ModelSpec::Mermin, 720_000, 7);
    config.audit = true;
    let records = run_experiment(&config)?;
    let r = reorder(&records)?;
    let rows_ok = r.complete_per_lambda.iter().all(|&c| (c as f64 - 1e4).abs() <= 0.05 * 1e4);
    let leftover_ok = r.leftover_fraction < 0.01;
    let sums_ok = r.complete_rows().all(|row| matches!(row.product_sum(), 1 | 9));
    check(
        rows_ok && leftover_ok && sums_ok,
        format!(
            "complete rows per lambda {:?} [{}], leftover {:.4} [{}], row sums in {{1, 9}} [{}]",
            r.complete_per_lambda,
            if rows_ok { "ok" } else { "fail" },
            r.leftover_fraction,
            if leftover_ok { "ok" } else { "fail: needs < 0.01" },
            if sums_ok { "ok" } else { "fail" },
        ),
    )
}

/// Probability that a complete row has uniform instrument values when each
/// stack value is an independent uniform draw from `alphabet` symbols. The
/// nine cells sit at nine distinct ticks; cell `(i, j)` reads station 1's
/// stack for `i` and station 2's stack for `j` at its tick, and the two
/// stacks are identical. Enumerates every assignment of the stack values
/// the row touches.
fn uniform_row_probability(alphabet: u32) -> f64 {
    // Variables are (setting, tick slot); slot k is the tick of pair k.
    let mut slots: Vec<(usize, usize)> = Vec::new();
    let mut var = |s: usize, k: usize| {
        slots.iter().position(|&v| v == (s, k)).unwrap_or_else(|| {
            slots.push((s, k));
            slots.len() - 1
        })
    };
    let cells: Vec<(usize, usize)> = (0..9).map(|k| (var(k / 3, k), var(k % 3, k))).collect();
    let n = slots.len() as u32;
    let total = u64::from(alphabet).pow(n);
    let mut uniform = 0u64;
    let mut x = vec![0u32; n as usize];
    for code in 0..total {
        let mut c = code;
        for v in x.iter_mut() {
            *v = (c % u64::from(alphabet)) as u32;
            c /= u64::from(alphabet);
        }
        let ok = (0..3).all(|s| {
            let v1: Vec<u32> = (0..3).map(|o| x[cells[s * 3 + o].0]).collect();
            let v2: Vec<u32> = (0..3).map(|o| x[cells[o * 3 + s].1]).collect();
            v1.windows(2).all(|w| w[0] == w[1]) && v2.windows(2).all(|w| w[0] == w[1])
        });
        uniform += u64::from(ok);
    }
    uniform as f64 / total as f64
}

fn hp_reordering_failure() -> Outcome {
    let p = uniform_row_probability(2);
    let mut config = ExperimentConfig::new(hp(IID2), 100_000, 8);
    config.audit = true;
    let records = run_experiment(&config)?;
    let r = reorder(&records)?;
    let audit = row_consistency_audit(&r.rows);
    let rows = audit.complete_rows;
    let fraction = audit.uniform_instrument_fraction.unwrap_or(f64::NAN);
    let threshold = p + 3.0 * (p * (1.0 - p) / rows as f64).sqrt();
    let violations: u64 = audit
        .row_sum_histogram
        .iter()
        .filter(|(sum, _)| !matches!(sum, 1 | 9))
        .map(|(_, n)| n)
        .sum();
    check(
        rows >= 1000 && fraction < threshold && violations > 0,
        format!(
            "{rows} complete rows, uniform fraction {fraction:.2e} < {threshold:.2e} (oracle {p:.3e}), {violations} rows outside {{1, 9}}"
        ),
    )
}

fn synchrony() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut mismatches = 0;
    for algorithm in [
        IID2,
        StackAlgorithm::StroboscopicPeriodic { period: 12, alphabet: 4 },
        StackAlgorithm::HistoryDependent { alphabet: 3 },
    ] {
        let (mut s1, mut s2) = build_synchronized_stacks(algorithm, 90)?;
        for _ in 0..10_000 {
            let setting = Setting::ALL[rng.random_range(0..3)];
            let tick = Tick(rng.random_range(0..100_000));
            mismatches += u64::from(s1.value(setting, tick)? != s2.value(setting, tick)?);
        }
    }
    let period = 12;
    let (mut s1, s2) = build_synchronized_stacks(StackAlgorithm::StroboscopicPeriodic { period, alphabet: 4 }, 91)?;
    let mut s2 = apply_time_shift(s2, TimeShift { wing: Wing::S2, delta: period as i64 })?;
    let mut shifted_mismatches = 0;
    for _ in 0..10_000 {
        let setting = Setting::ALL[rng.random_range(0..3)];
        let tick = Tick(rng.random_range(0..100_000));
        shifted_mismatches += u64::from(s1.value(setting, tick)? != s2.value(setting, tick)?);
    }
    check(
        mismatches == 0 && shifted_mismatches == 0,
        format!("{mismatches} mismatches unshifted, {shifted_mismatches} after shifting by one period"),
    )
}

fn locality_firewall() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for model in [ModelSpec::Mermin, hp(StackAlgorithm::IidStream { alphabet: 4 })] {
        let base = ExperimentConfig::new(model, 100_000, 10);
        let mut varied = base.clone();
        varied.seeds.settings.station2 ^= 0x5eed;
        let a = run_experiment(&base)?;
        let b = run_experiment(&varied)?;
        let s1_equal = a.iter().zip(&b).all(|(x, y)| x.setting_1 == y.setting_1 && x.outcome_1 == y.outcome_1);
        let s2_changed = a.iter().zip(&b).filter(|(x, y)| x.setting_2 != y.setting_2).count();
        ok &= s1_equal && s2_changed > 0 && a.len() == b.len();
        details.push(format!(
            "{}: station 1 identical {s1_equal}, station 2 setting changed on {s2_changed} trials",
            model.name()
        ));
    }
    check(ok, details.join("; "))
}

fn density_dependence() -> Outcome {
    let mut fixture = ExperimentConfig::new(
        hp(StackAlgorithm::StroboscopicPeriodic { period: 12, alphabet: 4 }),
        100_000,
        11,
    );
    fixture.pairs = PairSchedule::rotating(12, 5, 1)?;
    fixture.audit = true;
    let locked = density_dependence_test(&run_experiment(&fixture)?, 0.01)?;

    let mut rejections = 0;
    for seed in 1..=20 {
        let mut config = ExperimentConfig::new(hp(IID2), 100_000, 1100 + seed);
        config.audit = true;
        rejections += u64::from(density_dependence_test(&run_experiment(&config)?, 0.01)?.reject);
    }
    check(
        locked.reject && rejections <= 1,
        format!(
            "fixture p = {:.2e} (reject {}), iid rejections {rejections}/20",
            locked.p_value, locked.reject
        ),
    )
}

fn collapse_refutation() -> Outcome {
    let mut config = ExperimentConfig::new(hp(IID2), 10_000, 12);
    config.audit = true;
    let records = run_experiment(&config)?;
    let mut seen: HashMap<(Setting, InstructionSet), eprlab::tables::Outcome> = HashMap::new();
    let mut witness = None;
    for r in &records {
        let key = (r.setting_1, r.hidden.expect("audit").lambda);
        match seen.get(&key) {
            Some(&o) if o != r.outcome_1 => {
                witness = Some((key, r.index));
                break;
            }
            Some(_) => {}
            None => {
                seen.insert(key, r.outcome_1);
            }
        }
    }

    let mut constant = ExperimentConfig::new(hp(StackAlgorithm::Constant), 10_000, 12);
    constant.audit = false;
    let mermin = ExperimentConfig {
        model: ModelSpec::Mermin,
        ..constant.clone()
    };
    let outcomes = |rs: Vec<TrialRecord>| -> Vec<_> {
        rs.into_iter().map(|r| (r.setting_1, r.setting_2, r.outcome_1, r.outcome_2)).collect()
    };
    let same = outcomes(run_experiment(&constant)?) == outcomes(run_experiment(&mermin)?);
    check(
        witness.is_some() && same,
        format!(
            "differing outcomes for equal (setting, lambda) {}, constant stacks equal instruction sets {same}",
            match witness {
                Some(((s, l), i)) => format!("at trial {i} ({s}, {l})"),
                None => "not found".into(),
            }
        ),
    )
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let criteria: [Criterion; 12] = [
        (1, "product table reproduction", secs(1), table_reproduction),
        (2, "row sum and row average identities", secs(1), row_identities),
        (3, "5/9 same-color bound", secs(1), five_ninths_bound),
        (4, "Monte Carlo against exact oracle", secs(10), monte_carlo_vs_oracle),
        (5, "perfect agreement on equal settings", secs(20), feature_i_exactness),
        (6, "reference generator below the bound", secs(10), incompatibility),
        (7, "reordering into complete rows", secs(30), reordering),
        (8, "reordering fails for instrument stacks", secs(60), hp_reordering_failure),
        (9, "stack synchrony", secs(5), synchrony),
        (10, "locality firewall", secs(10), locality_firewall),
        (11, "setting-dependent density test", secs(60), density_dependence),
        (12, "instrument dependence does not collapse", secs(10), collapse_refutation),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) => (elapsed < budget, d),
            Err(Failure(d)) => (false, d),
        };
        failed += u32::from(!ok);
        println!(
            "criterion {id:>2} {} {name}: {detail} [{:.2}s of {}s]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
