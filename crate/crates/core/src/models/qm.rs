use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tables::{Outcome, SettingPair};

/// **NONLOCAL** data generator reproducing the two observed features: equal
/// settings always agree, and unequal settings agree with probability
/// `q_same`. It reads both settings at once and is excluded from every
/// locality check.
#[derive(Debug, Clone)]
pub struct QmReference {
    q_same: f64,
    rng: ChaCha8Rng,
}

impl QmReference {
    /// `q_same = 1/4` makes colors agree half the time under uniform pairs.
    pub const DEFAULT_Q_SAME: f64 = 0.25;

    pub fn new(q_same: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q_same) {
            return Err(Error::config("q_same", format!("must lie in [0, 1], got {q_same}")));
        }
        Ok(QmReference {
            q_same,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn q_same(&self) -> f64 {
        self.q_same
    }

    /// Outcomes for one trial. Always consumes exactly two draws.
    pub fn emit(&mut self, pair: SettingPair) -> (Outcome, Outcome) {
        let first: f64 = self.rng.random();
        let agree: f64 = self.rng.random();
        let a = if first < 0.5 { Outcome::Green } else { Outcome::Red };
        let same = pair.is_equal_setting() || agree < self.q_same;
        (a, if same { a } else { a.flipped() })
    }
}

/// Same-color probability of the reference generator for uniform pairs.
pub fn uniform_pair_same_color(q_same: f64) -> f64 {
    (3.0 + 6.0 * q_same) / 9.0
}
