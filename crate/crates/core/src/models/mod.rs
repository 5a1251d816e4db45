//! Local response models and the nonlocal reference generator.
//!
//! A [`LocalModel`] sees only what is available at its own station: the
//! local setting, the source value, the local instrument value and the
//! clock. The remote setting is not part of the signature, so no model
//! built against this trait can depend on it.

mod qm;
mod stacks;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use qm::{uniform_pair_same_color, QmReference};
pub use stacks::{
    apply_time_shift, build_synchronized_stacks, InstrumentStacks, StackAlgorithm, TimeShift, Wing,
};

use crate::error::{Error, Result};
use crate::tables::{instruction_outcome, InstructionSet, Outcome, Setting};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Station {
    S1,
    S2,
}

impl fmt::Display for Station {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Station::S1 => "S1",
            Station::S2 => "S2",
        })
    }
}

/// Global trial clock. One trial advances it by one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tick(pub u64);

/// A symbol drawn from a station's instrument stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InstrumentValue(pub u32);

pub trait LocalModel {
    fn name(&self) -> &'static str;

    /// Outcome at `station` given only local information.
    fn respond(
        &self,
        station: Station,
        setting: Setting,
        source: InstructionSet,
        instrument: Option<InstrumentValue>,
        tick: Tick,
    ) -> Outcome;

    /// Whether this model reads the instrument stacks.
    fn uses_instruments(&self) -> bool {
        false
    }
}

/// Plain instruction sets: the outcome is the color the set assigns to the
/// local setting.
#[derive(Debug, Clone, Copy, Default)]
pub struct MerminModel;

pub fn mermin_model() -> MerminModel {
    MerminModel
}

impl LocalModel for MerminModel {
    fn name(&self) -> &'static str {
        "mermin"
    }

    fn respond(
        &self,
        _station: Station,
        setting: Setting,
        source: InstructionSet,
        _instrument: Option<InstrumentValue>,
        _tick: Tick,
    ) -> Outcome {
        instruction_outcome(source, setting)
    }
}

/// The nonlocal reference generator; see [`QmReference`].
pub fn qm_reference_model(q_same: f64, seed: u64) -> Result<QmReference> {
    QmReference::new(q_same, seed)
}

/// Evaluation map shared by both stations of the instrument-parameter model.
pub type EvaluationMap = fn(Setting, InstructionSet, InstrumentValue) -> Outcome;

/// The instruction-set color, flipped when the instrument value is odd.
pub fn parity_flip(setting: Setting, source: InstructionSet, value: InstrumentValue) -> Outcome {
    let color = instruction_outcome(source, setting);
    if value.0.is_multiple_of(2) {
        color
    } else {
        color.flipped()
    }
}

/// Time- and setting-dependent instrument-parameter model. Both stations
/// apply the same map to their own stack value; paired with synchronized
/// stacks this gives equal colors at equal setting and tick.
#[derive(Clone, Copy)]
pub struct HpModel {
    map: EvaluationMap,
}

impl fmt::Debug for HpModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HpModel").finish_non_exhaustive()
    }
}

/// The instrument-parameter model with the [`parity_flip`] map.
///
/// Only identical station functions are supported; `functions_equal = false`
/// is rejected.
pub fn hp_model(functions_equal: bool) -> Result<HpModel> {
    if !functions_equal {
        return Err(Error::config(
            "functions_equal",
            "only identical evaluation functions at both stations are supported",
        ));
    }
    Ok(HpModel { map: parity_flip })
}

impl HpModel {
    pub fn with_map(map: EvaluationMap) -> Self {
        HpModel { map }
    }

    pub fn map(&self) -> EvaluationMap {
        self.map
    }
}

impl LocalModel for HpModel {
    fn name(&self) -> &'static str {
        "hp"
    }

    fn respond(
        &self,
        _station: Station,
        setting: Setting,
        source: InstructionSet,
        instrument: Option<InstrumentValue>,
        _tick: Tick,
    ) -> Outcome {
        (self.map)(setting, source, instrument.unwrap_or(InstrumentValue(0)))
    }

    fn uses_instruments(&self) -> bool {
        true
    }
}
