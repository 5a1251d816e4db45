//! Two stations build the same instrument stacks from a shared seed, and
//! the time-dependent model keeps perfect agreement on equal settings.
//!
//! cargo run --example hp_synchronized_stacks

use eprlab::analysis::{feature_i_check, feature_ii_check};
use eprlab::engine::{run_experiment, ExperimentConfig, ModelSpec};
use eprlab::models::{build_synchronized_stacks, StackAlgorithm, Tick, TimeShift, Wing};
use eprlab::tables::Setting;

fn main() -> eprlab::Result<()> {
    let algorithm = StackAlgorithm::StroboscopicPeriodic { period: 6, alphabet: 4 };
    let (mut s1, mut s2) = build_synchronized_stacks(algorithm, 99)?;
    println!("tick  S1(a,b,c)  S2(a,b,c)");
    for t in 0..8 {
        let row = |s: &mut eprlab::models::InstrumentStacks| -> eprlab::Result<Vec<u32>> {
            Setting::ALL.iter().map(|&x| s.value(x, Tick(t)).map(|v| v.0)).collect()
        };
        println!("{t:>4}  {:?}  {:?}", row(&mut s1)?, row(&mut s2)?);
    }

    for shift in [None, Some(TimeShift { wing: Wing::S2, delta: 3 })] {
        let mut config = ExperimentConfig::new(
            ModelSpec::Hp {
                stacks: StackAlgorithm::IidStream { alphabet: 2 },
            },
            100_000,
            5,
        );
        config.time_shift = shift;
        let records = run_experiment(&config)?;
        println!(
            "shift {:?}: equal-setting same-color {:.4}, overall {:.4}",
            shift.map(|s| s.delta),
            feature_i_check(&records)?.same_color_fraction.unwrap_or(f64::NAN),
            feature_ii_check(&records)?.same_color_fraction
        );
    }
    Ok(())
}
