//! Regroups a sequential run into rows that share one instruction set and
//! audits the complete rows.
//!
//! cargo run --release --example reordering

use eprlab::analysis::{reorder, row_consistency_audit};
use eprlab::engine::{run_experiment, ExperimentConfig, ModelSpec};
use eprlab::models::StackAlgorithm;

fn main() -> eprlab::Result<()> {
    let mut config = ExperimentConfig::new(
        ModelSpec::Hp {
            stacks: StackAlgorithm::IidStream { alphabet: 2 },
        },
        100_000,
        17,
    );
    config.audit = true;
    let records = run_experiment(&config)?;
    let reordering = reorder(&records)?;
    let summary = reordering.summary();
    println!("complete rows: {}", summary.complete_rows);
    println!("leftover fraction: {:.4}", summary.leftover_fraction);

    let audit = row_consistency_audit(&reordering.rows);
    println!("rows with row sum 1 or 9: {:?}", audit.row_sum_identity_fraction);
    println!("rows with uniform instrument values: {:?}", audit.uniform_instrument_fraction);
    println!("row sum histogram: {:?}", audit.row_sum_histogram);
    Ok(())
}
