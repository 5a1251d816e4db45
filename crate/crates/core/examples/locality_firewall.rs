//! A station's outcome is a function of its own setting, the source value,
//! its instrument value and the tick. Nothing else reaches it, so swapping
//! the far station's setting cannot change the near outcome.
//!
//! cargo run --example locality_firewall

use eprlab::models::{hp_model, InstrumentValue, LocalModel, Station, Tick};
use eprlab::tables::{InstructionSet, Setting};

fn main() -> eprlab::Result<()> {
    let model = hp_model(true)?;
    for set in InstructionSet::ALL {
        let outcomes: Vec<String> = Setting::ALL
            .iter()
            .flat_map(|&s| {
                (0..2).map(move |v| model.respond(Station::S1, s, set, Some(InstrumentValue(v)), Tick(0)).to_string())
            })
            .collect();
        println!("{set}: {}", outcomes.join(" "));
    }

    match hp_model(false) {
        Ok(_) => println!("unexpected: unequal evaluation maps accepted"),
        Err(e) => println!("unequal evaluation maps: {e}"),
    }
    Ok(())
}
