//! Runs a scenario file the way the command-line tool does and prints its
//! summary.
//!
//! cargo run --release --example scenario_runner -- scenarios/hp.json /tmp/eprlab-out

use std::path::PathBuf;

use eprlab::scenario::{parse_config, run_scenario, RunOptions};

fn main() -> eprlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/mermin.json"));
    let out_dir = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("eprlab-example"));

    let scenario = parse_config(&config)?;
    let output = run_scenario(
        &scenario,
        &RunOptions {
            out_dir,
            format: None,
            deterministic_timestamps: true,
        },
    )?;
    print!("{}", output.summary);
    for file in output.files {
        println!("wrote {}", file.display());
    }
    Ok(())
}
