//! Time-indexed instrument parameter streams.
//!
//! A stack maps `(setting, tick)` to an [`InstrumentValue`]. Stacks for the
//! two stations are built as independent replicas of the same deterministic
//! algorithm and seed, so they agree at every `(setting, tick)` without
//! sharing any state.

use std::io::Write;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{InstrumentValue, Station, Tick};
use crate::error::{Error, Result};
use crate::tables::Setting;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StackAlgorithm {
    /// Fresh uniform value in `0..alphabet` at every `(setting, tick)`.
    IidStream { alphabet: u32 },
    /// A seeded table of `period` rows read cyclically by the clock.
    StroboscopicPeriodic { period: u64, alphabet: u32 },
    /// Each tick's values are a function of the previous tick's values plus
    /// a seeded one-bit kick.
    HistoryDependent { alphabet: u32 },
    /// Always zero. Degenerate case used to show where the extended model
    /// coincides with plain instruction sets.
    Constant,
}

impl StackAlgorithm {
    pub fn name(&self) -> &'static str {
        match self {
            StackAlgorithm::IidStream { .. } => "iid-stream",
            StackAlgorithm::StroboscopicPeriodic { .. } => "stroboscopic-periodic",
            StackAlgorithm::HistoryDependent { .. } => "history-dependent",
            StackAlgorithm::Constant => "constant",
        }
    }

    pub fn alphabet(&self) -> u32 {
        match *self {
            StackAlgorithm::IidStream { alphabet }
            | StackAlgorithm::StroboscopicPeriodic { alphabet, .. }
            | StackAlgorithm::HistoryDependent { alphabet } => alphabet,
            StackAlgorithm::Constant => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StackAlgorithm::Constant => Ok(()),
            StackAlgorithm::StroboscopicPeriodic { period: 0, .. } => {
                Err(Error::config("stacks.period", "period must be at least 1"))
            }
            _ if self.alphabet() < 2 => Err(Error::config(
                "stacks.alphabet",
                format!("alphabet must be at least 2, got {}", self.alphabet()),
            )),
            _ => Ok(()),
        }
    }
}

/// Uniform value in `0..alphabet` from one 64-bit word (multiply-shift).
fn scale(word: u64, alphabet: u32) -> u32 {
    ((u128::from(word) * u128::from(alphabet)) >> 64) as u32
}

#[derive(Debug, Clone)]
enum Source {
    Iid {
        alphabet: u32,
        rngs: [ChaCha8Rng; 3],
    },
    Periodic {
        table: Vec<[u32; 3]>,
    },
    History {
        alphabet: u32,
        kicks: ChaCha8Rng,
        states: Vec<[u32; 3]>,
    },
    Constant,
}

impl Source {
    fn new(algorithm: StackAlgorithm, seed: u64) -> Source {
        match algorithm {
            StackAlgorithm::IidStream { alphabet } => Source::Iid {
                alphabet,
                rngs: std::array::from_fn(|i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(i as u64);
                    rng
                }),
            },
            StackAlgorithm::StroboscopicPeriodic { period, alphabet } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let table = (0..period)
                    .map(|_| std::array::from_fn(|_| rng.random_range(0..alphabet)))
                    .collect();
                Source::Periodic { table }
            }
            StackAlgorithm::HistoryDependent { alphabet } => {
                let mut kicks = ChaCha8Rng::seed_from_u64(seed);
                let initial = std::array::from_fn(|_| kicks.random_range(0..alphabet));
                Source::History {
                    alphabet,
                    kicks,
                    states: vec![initial],
                }
            }
            StackAlgorithm::Constant => Source::Constant,
        }
    }

    fn value(&mut self, setting: Setting, tick: u64) -> u32 {
        let i = setting.index();
        match self {
            Source::Iid { alphabet, rngs } => {
                let rng = &mut rngs[i];
                rng.set_word_pos(u128::from(tick) * 2);
                scale(rng.next_u64(), *alphabet)
            }
            Source::Periodic { table } => table[(tick % table.len() as u64) as usize][i],
            Source::History {
                alphabet,
                kicks,
                states,
            } => {
                while states.len() as u64 <= tick {
                    let prev = *states.last().expect("initial state");
                    let bits = kicks.next_u32();
                    let next = std::array::from_fn(|k| {
                        let kick = (bits >> k) & 1;
                        (prev[k] + prev[(k + 1) % 3] + kick) % *alphabet
                    });
                    states.push(next);
                }
                states[tick as usize][i]
            }
            Source::Constant => 0,
        }
    }
}

/// One station's three setting-indexed parameter stacks.
#[derive(Debug, Clone)]
pub struct InstrumentStacks {
    station: Station,
    algorithm: StackAlgorithm,
    seed: u64,
    offset: i64,
    source: Source,
}

impl InstrumentStacks {
    /// A single station's stack; use [`build_synchronized_stacks`] for a
    /// matching pair.
    pub fn new(station: Station, algorithm: StackAlgorithm, seed: u64) -> Result<Self> {
        algorithm.validate()?;
        Ok(InstrumentStacks {
            station,
            algorithm,
            seed,
            offset: 0,
            source: Source::new(algorithm, seed),
        })
    }

    pub fn station(&self) -> Station {
        self.station
    }

    pub fn algorithm(&self) -> StackAlgorithm {
        self.algorithm
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Accumulated time shift in ticks.
    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// Value of the stack for `setting` at `tick`, after any time shift.
    pub fn value(&mut self, setting: Setting, tick: Tick) -> Result<InstrumentValue> {
        let shifted = i128::from(tick.0) + i128::from(self.offset);
        let shifted = u64::try_from(shifted).map_err(|_| {
            Error::Range(format!(
                "tick {} shifted by {} is outside the clock range",
                tick.0, self.offset
            ))
        })?;
        Ok(InstrumentValue(self.source.value(setting, shifted)))
    }

    /// Writes `tick,setting,value` rows for every setting over `ticks`.
    pub fn write_csv<W: Write>(&mut self, ticks: std::ops::Range<u64>, mut out: W) -> Result<()> {
        let io = |e| Error::io("<stream>", e);
        writeln!(out, "tick,setting,value").map_err(io)?;
        for t in ticks {
            for setting in Setting::ALL {
                let v = self.value(setting, Tick(t))?;
                writeln!(out, "{t},{setting},{}", v.0).map_err(io)?;
            }
        }
        Ok(())
    }
}

/// Two replicas of the same algorithm and seed, one per station.
pub fn build_synchronized_stacks(
    algorithm: StackAlgorithm,
    seed: u64,
) -> Result<(InstrumentStacks, InstrumentStacks)> {
    Ok((
        InstrumentStacks::new(Station::S1, algorithm, seed)?,
        InstrumentStacks::new(Station::S2, algorithm, seed)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wing {
    S1,
    S2,
    Both,
}

impl Wing {
    pub fn covers(self, station: Station) -> bool {
        matches!(
            (self, station),
            (Wing::Both, _) | (Wing::S1, Station::S1) | (Wing::S2, Station::S2)
        )
    }
}

/// Replaces `t` by `t + delta` in the stacks of the selected wing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeShift {
    pub wing: Wing,
    pub delta: i64,
}

/// Shifts `stacks` if its station lies in the shifted wing; returns it
/// unchanged otherwise.
pub fn apply_time_shift(mut stacks: InstrumentStacks, shift: TimeShift) -> Result<InstrumentStacks> {
    if shift.wing.covers(stacks.station) {
        stacks.offset = stacks.offset.checked_add(shift.delta).ok_or_else(|| {
            Error::Range(format!("time shift {} overflows the offset", shift.delta))
        })?;
    }
    Ok(stacks)
}
