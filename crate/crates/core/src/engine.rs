//! Trial scheduler.
//!
//! Each trial draws a source value, then a setting pair (delayed choice),
//! stamps the trial with the next clock tick and asks each station for its
//! outcome using only that station's inputs. Randomness comes from separate
//! seeded streams so that any one of them can be varied alone.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{
    apply_time_shift, build_synchronized_stacks, hp_model, mermin_model, InstrumentStacks,
    InstrumentValue, LocalModel, QmReference, StackAlgorithm, Station, Tick, TimeShift,
};
use crate::tables::{
    InstructionSet, Outcome, Setting, SettingPair, SettingPairDistribution, SourceDistribution,
};

/// Per-station setting streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingSeeds {
    pub station1: u64,
    pub station2: u64,
}

/// Independent seeds for every random stream of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub source: u64,
    pub settings: SettingSeeds,
    pub stacks: u64,
    pub model: u64,
}

impl Seeds {
    /// Derives every stream from one master seed by fixed labels.
    pub fn from_master(master: u64) -> Seeds {
        let derive = |label: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(master);
            rng.set_stream(label);
            rng.next_u64()
        };
        Seeds {
            source: derive(1),
            settings: SettingSeeds {
                station1: derive(2),
                station2: derive(3),
            },
            stacks: derive(4),
            model: derive(5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    Mermin,
    Hp { stacks: StackAlgorithm },
    /// Nonlocal; see [`QmReference`].
    QmReference { q_same: f64 },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Mermin => "mermin",
            ModelSpec::Hp { .. } => "hp",
            ModelSpec::QmReference { .. } => "qm-reference",
        }
    }
}

/// How setting pairs are chosen over the run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairSchedule {
    /// The same distribution at every tick.
    Stationary(SettingPairDistribution),
    /// At tick `t` the pair is drawn from `phases[t % phases.len()]`.
    PhaseLocked(Vec<SettingPairDistribution>),
}

impl PairSchedule {
    /// A phase-locked schedule in which phase `k` gives pair `k % 9` the
    /// weight `favored` and shares the rest evenly among the other pairs.
    pub fn rotating(period: usize, favored: u64, others: u64) -> Result<PairSchedule> {
        if period == 0 {
            return Err(Error::config("pairs.period", "period must be at least 1"));
        }
        let phases = (0..period)
            .map(|k| {
                let mut weights = [others; 9];
                weights[k % 9] = favored;
                SettingPairDistribution::from_weights(weights)
            })
            .collect::<Result<_>>()?;
        Ok(PairSchedule::PhaseLocked(phases))
    }

    pub fn at(&self, tick: Tick) -> &SettingPairDistribution {
        match self {
            PairSchedule::Stationary(d) => d,
            PairSchedule::PhaseLocked(phases) => &phases[(tick.0 % phases.len() as u64) as usize],
        }
    }
}

impl Default for PairSchedule {
    fn default() -> Self {
        PairSchedule::Stationary(SettingPairDistribution::uniform())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub trials: u64,
    pub source: SourceDistribution,
    pub pairs: PairSchedule,
    pub model: ModelSpec,
    pub seeds: Seeds,
    /// Attach the hidden source and instrument values to each record.
    /// A simulation privilege with no physical counterpart.
    pub audit: bool,
    pub time_shift: Option<TimeShift>,
}

impl ExperimentConfig {
    pub fn new(model: ModelSpec, trials: u64, master_seed: u64) -> Self {
        ExperimentConfig {
            trials,
            source: SourceDistribution::uniform(),
            pairs: PairSchedule::default(),
            model,
            seeds: Seeds::from_master(master_seed),
            audit: false,
            time_shift: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials", "at least one trial is required"));
        }
        if let PairSchedule::PhaseLocked(phases) = &self.pairs {
            if phases.is_empty() {
                return Err(Error::config("pairs.phases", "at least one phase is required"));
            }
        }
        match self.model {
            ModelSpec::Hp { stacks } => stacks.validate()?,
            ModelSpec::QmReference { q_same } => {
                QmReference::new(q_same, 0)?;
            }
            ModelSpec::Mermin => {}
        }
        if let Some(shift) = self.time_shift {
            if shift.delta < 0 {
                return Err(Error::Range(format!(
                    "time shift {} would move tick 0 before the clock origin",
                    shift.delta
                )));
            }
        }
        Ok(())
    }
}

/// Values hidden from any real experimenter, kept for audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hidden {
    pub lambda: InstructionSet,
    pub v1: Option<InstrumentValue>,
    pub v2: Option<InstrumentValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialRecord {
    pub index: u64,
    pub tick: Tick,
    pub setting_1: Setting,
    pub setting_2: Setting,
    pub outcome_1: Outcome,
    pub outcome_2: Outcome,
    pub hidden: Option<Hidden>,
}

impl TrialRecord {
    pub fn pair(&self) -> SettingPair {
        SettingPair::new(self.setting_1, self.setting_2)
    }

    pub fn product(&self) -> i32 {
        self.outcome_1.value() * self.outcome_2.value()
    }

    pub fn same_color(&self) -> bool {
        self.outcome_1 == self.outcome_2
    }
}

/// Draws station 1's setting from the marginal and station 2's from the
/// conditional given station 1, each from its own stream.
#[derive(Debug, Clone)]
struct PairSampler {
    first: WeightedIndex<f64>,
    second: [Option<WeightedIndex<f64>>; 3],
}

impl PairSampler {
    fn new(dist: &SettingPairDistribution) -> Result<Self> {
        let probs = dist.to_f64();
        let row = |i: usize| &probs[i * 3..i * 3 + 3];
        let marginal: Vec<f64> = (0..3).map(|i| row(i).iter().sum()).collect();
        let first = WeightedIndex::new(&marginal)
            .map_err(|e| Error::config("pairs", format!("invalid pair weights: {e}")))?;
        let second = std::array::from_fn(|i| WeightedIndex::new(row(i)).ok());
        Ok(PairSampler { first, second })
    }

    fn sample(&self, station1: &mut ChaCha8Rng, station2: &mut ChaCha8Rng) -> SettingPair {
        let i = self.first.sample(station1);
        let j = self.second[i]
            .as_ref()
            .expect("conditional exists for a setting with positive marginal")
            .sample(station2);
        SettingPair::new(Setting::from_index(i), Setting::from_index(j))
    }
}

enum Responder {
    Local {
        model: Box<dyn LocalModel + Send>,
        stacks: Option<(InstrumentStacks, InstrumentStacks)>,
    },
    Nonlocal(QmReference),
}

/// A run in progress. Produces records one trial at a time.
pub struct Experiment {
    audit: bool,
    trials: u64,
    next_index: u64,
    source_rng: ChaCha8Rng,
    station1_rng: ChaCha8Rng,
    station2_rng: ChaCha8Rng,
    source: WeightedIndex<f64>,
    pairs: PairSchedule,
    samplers: Vec<PairSampler>,
    responder: Responder,
}

impl Experiment {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let responder = match config.model {
            ModelSpec::Mermin => Responder::Local {
                model: Box::new(mermin_model()),
                stacks: None,
            },
            ModelSpec::Hp { stacks } => {
                let pair = Self::stacks_for(config, stacks)?;
                Responder::Local {
                    model: Box::new(hp_model(true)?),
                    stacks: Some(pair),
                }
            }
            ModelSpec::QmReference { q_same } => {
                Responder::Nonlocal(QmReference::new(q_same, config.seeds.model)?)
            }
        };
        Self::with_responder(config, responder)
    }

    /// Runs a caller-supplied local model. `stacks` selects the instrument
    /// algorithm, or `None` for a model without instrument parameters.
    pub fn with_local_model(
        config: &ExperimentConfig,
        model: Box<dyn LocalModel + Send>,
        stacks: Option<StackAlgorithm>,
    ) -> Result<Self> {
        config.validate()?;
        let stacks = stacks.map(|s| Self::stacks_for(config, s)).transpose()?;
        Self::with_responder(config, Responder::Local { model, stacks })
    }

    fn stacks_for(
        config: &ExperimentConfig,
        algorithm: StackAlgorithm,
    ) -> Result<(InstrumentStacks, InstrumentStacks)> {
        let (mut s1, mut s2) = build_synchronized_stacks(algorithm, config.seeds.stacks)?;
        if let Some(shift) = config.time_shift {
            s1 = apply_time_shift(s1, shift)?;
            s2 = apply_time_shift(s2, shift)?;
        }
        Ok((s1, s2))
    }

    fn with_responder(config: &ExperimentConfig, responder: Responder) -> Result<Self> {
        let source = WeightedIndex::new(config.source.to_f64())
            .map_err(|e| Error::config("source", format!("invalid source weights: {e}")))?;
        let samplers = match &config.pairs {
            PairSchedule::Stationary(d) => vec![PairSampler::new(d)?],
            PairSchedule::PhaseLocked(phases) => {
                phases.iter().map(PairSampler::new).collect::<Result<_>>()?
            }
        };
        Ok(Experiment {
            audit: config.audit,
            trials: config.trials,
            next_index: 0,
            source_rng: ChaCha8Rng::seed_from_u64(config.seeds.source),
            station1_rng: ChaCha8Rng::seed_from_u64(config.seeds.settings.station1),
            station2_rng: ChaCha8Rng::seed_from_u64(config.seeds.settings.station2),
            source,
            pairs: config.pairs.clone(),
            samplers,
            responder,
        })
    }

    /// Runs the next trial. `override_pair` replaces the drawn pair (the
    /// draw still happens, so later trials are unaffected).
    fn step(&mut self, override_pair: Option<SettingPair>) -> Result<TrialRecord> {
        let index = self.next_index;
        let tick = Tick(index);
        self.next_index += 1;

        let lambda = InstructionSet::ALL[self.source.sample(&mut self.source_rng)];
        let sampler = match self.pairs {
            PairSchedule::Stationary(_) => &self.samplers[0],
            PairSchedule::PhaseLocked(ref phases) => {
                &self.samplers[(tick.0 % phases.len() as u64) as usize]
            }
        };
        let drawn = sampler.sample(&mut self.station1_rng, &mut self.station2_rng);
        let pair = override_pair.unwrap_or(drawn);

        let (outcome_1, outcome_2, v1, v2) = match &mut self.responder {
            Responder::Local { model, stacks } => {
                let (v1, v2) = match stacks {
                    Some((s1, s2)) => (
                        Some(s1.value(pair.first, tick)?),
                        Some(s2.value(pair.second, tick)?),
                    ),
                    None => (None, None),
                };
                (
                    model.respond(Station::S1, pair.first, lambda, v1, tick),
                    model.respond(Station::S2, pair.second, lambda, v2, tick),
                    v1,
                    v2,
                )
            }
            Responder::Nonlocal(qm) => {
                let (a, b) = qm.emit(pair);
                (a, b, None, None)
            }
        };

        Ok(TrialRecord {
            index,
            tick,
            setting_1: pair.first,
            setting_2: pair.second,
            outcome_1,
            outcome_2,
            hidden: self.audit.then_some(Hidden { lambda, v1, v2 }),
        })
    }

    pub fn run(mut self) -> Result<Vec<TrialRecord>> {
        let mut records = Vec::with_capacity(self.trials as usize);
        for _ in 0..self.trials {
            records.push(self.step(None)?);
        }
        Ok(records)
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    Experiment::new(config)?.run()
}

/// Re-derives trial `index` with the same source value and tick but a
/// different setting pair.
pub fn counterfactual_replay(
    config: &ExperimentConfig,
    index: u64,
    pair: SettingPair,
) -> Result<TrialRecord> {
    if !config.audit {
        return Err(Error::Precondition(
            "counterfactual replay requires audit mode".into(),
        ));
    }
    if index >= config.trials {
        return Err(Error::Precondition(format!(
            "trial index {index} out of range for {} trials",
            config.trials
        )));
    }
    let mut experiment = Experiment::new(config)?;
    for _ in 0..index {
        experiment.step(None)?;
    }
    experiment.step(Some(pair))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SampleabilityReport {
    pub records: u64,
    pub distinct_ticks: u64,
    pub max_pairs_per_tick: u64,
}

/// Checks that every tick carries exactly one measured pair.
pub fn sampleability_check(records: &[TrialRecord]) -> Result<SampleabilityReport> {
    let mut per_tick: HashMap<Tick, u64> = HashMap::with_capacity(records.len());
    for r in records {
        let count = per_tick.entry(r.tick).or_default();
        *count += 1;
        if *count > 1 {
            return Err(Error::Integrity(format!(
                "tick {} carries more than one setting pair",
                r.tick.0
            )));
        }
    }
    Ok(SampleabilityReport {
        records: records.len() as u64,
        distinct_ticks: per_tick.len() as u64,
        max_pairs_per_tick: per_tick.values().copied().max().unwrap_or(0),
    })
}
