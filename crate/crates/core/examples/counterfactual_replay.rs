//! Replays one trial with every other setting pair while holding the source
//! value and tick fixed, rebuilding a full row of the product table.
//!
//! cargo run --example counterfactual_replay

use eprlab::engine::{counterfactual_replay, run_experiment, ExperimentConfig, ModelSpec};
use eprlab::tables::{row_sum, SettingPair};

fn main() -> eprlab::Result<()> {
    let mut config = ExperimentConfig::new(ModelSpec::Mermin, 50, 8);
    config.audit = true;
    let original = run_experiment(&config)?[10];
    let lambda = original.hidden.expect("audit run").lambda;
    println!("trial 10: lambda {lambda}, pair {}, product {:+}", original.pair(), original.product());

    let mut sum = 0;
    for pair in SettingPair::ALL {
        let replay = counterfactual_replay(&config, 10, pair)?;
        println!("  {pair}: {:+}", replay.product());
        sum += replay.product();
    }
    println!("replayed row sum {sum}, table row sum {}", row_sum(lambda));
    Ok(())
}
