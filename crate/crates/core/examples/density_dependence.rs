//! Chi-square test of whether the joint law of the hidden values depends on
//! the setting pair, for a phase-locked schedule and for iid stacks.
//!
//! cargo run --release --example density_dependence

use eprlab::analysis::{density_dependence_test, DEFAULT_ALPHA};
use eprlab::engine::{run_experiment, ExperimentConfig, ModelSpec, PairSchedule};
use eprlab::models::StackAlgorithm;

fn main() -> eprlab::Result<()> {
    let mut locked = ExperimentConfig::new(
        ModelSpec::Hp {
            stacks: StackAlgorithm::StroboscopicPeriodic { period: 12, alphabet: 4 },
        },
        100_000,
        21,
    );
    locked.pairs = PairSchedule::rotating(12, 5, 1)?;
    locked.audit = true;

    let mut iid = ExperimentConfig::new(
        ModelSpec::Hp {
            stacks: StackAlgorithm::IidStream { alphabet: 2 },
        },
        100_000,
        21,
    );
    iid.audit = true;

    for (name, config) in [("phase-locked stroboscopic", locked), ("iid, uniform pairs", iid)] {
        let report = density_dependence_test(&run_experiment(&config)?, DEFAULT_ALPHA)?;
        println!(
            "{name}: statistic {:.1} on {} df, p = {:.3e}, reject = {}",
            report.statistic, report.degrees_of_freedom, report.p_value, report.reject
        );
    }
    Ok(())
}
