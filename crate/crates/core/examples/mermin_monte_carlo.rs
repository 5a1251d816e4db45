//! Event-by-event run of the instruction-set model.
//!
//! cargo run --release --example mermin_monte_carlo -- 1000000

use eprlab::analysis::{binomial_sigma, feature_i_check, feature_ii_check};
use eprlab::engine::{run_experiment, ExperimentConfig, ModelSpec};

fn main() -> eprlab::Result<()> {
    let trials = std::env::args().nth(1).and_then(|n| n.parse().ok()).unwrap_or(200_000);
    let config = ExperimentConfig::new(ModelSpec::Mermin, trials, 42);
    let records = run_experiment(&config)?;

    let f1 = feature_i_check(&records)?;
    let f2 = feature_ii_check(&records)?;
    println!("trials: {trials}");
    println!(
        "equal settings: {} trials, same-color fraction {:?}",
        f1.equal_setting_trials, f1.same_color_fraction
    );
    println!(
        "all trials: same-color fraction {:.5} +/- {:.5} (exact 2/3)",
        f2.same_color_fraction,
        binomial_sigma(f2.same_color_fraction, trials)
    );
    Ok(())
}
