//! The nonlocal reference generator reaches a same-color fraction of 1/2,
//! below the 5/9 floor that every instruction-set source obeys.
//!
//! cargo run --release --example qm_reference_incompatibility

use eprlab::analysis::{binomial_sigma, feature_i_check, feature_ii_check};
use eprlab::engine::{run_experiment, ExperimentConfig, ModelSpec};
use eprlab::models::{uniform_pair_same_color, QmReference};
use eprlab::tables::{exact_statistics, SettingPairDistribution, SourceDistribution};

fn main() -> eprlab::Result<()> {
    let floor = exact_statistics(&SourceDistribution::uniform_mixed(), &SettingPairDistribution::uniform());
    println!("lowest instruction-set value: {}", floor.same_color_prob);

    let q = QmReference::DEFAULT_Q_SAME;
    let config = ExperimentConfig::new(ModelSpec::QmReference { q_same: q }, 1_000_000, 3);
    let records = run_experiment(&config)?;
    let f = feature_ii_check(&records)?.same_color_fraction;
    let sigma = binomial_sigma(f, records.len() as u64);
    println!("reference generator: {f:.5} +/- {sigma:.5} (expected {})", uniform_pair_same_color(q));
    println!("equal settings: {:?}", feature_i_check(&records)?.same_color_fraction);
    println!("distance below 5/9: {:.1} sigma", (5.0 / 9.0 - f) / sigma);
    Ok(())
}
