use serde::Serialize;

use crate::engine::TrialRecord;

/// Empirical `⟨A_i B_j⟩` for each ordered pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    /// `None` where the pair was never observed.
    pub values: [[Option<f64>; 3]; 3],
    pub counts: [[u64; 3]; 3],
}

impl CorrelationMatrix {
    pub fn value(&self, first: usize, second: usize) -> Option<f64> {
        self.values[first][second]
    }
}

pub fn pair_correlations<'a>(records: impl IntoIterator<Item = &'a TrialRecord>) -> CorrelationMatrix {
    let mut sums = [[0i64; 3]; 3];
    let mut counts = [[0u64; 3]; 3];
    for r in records {
        let (i, j) = (r.setting_1.index(), r.setting_2.index());
        sums[i][j] += i64::from(r.product());
        counts[i][j] += 1;
    }
    let values = std::array::from_fn(|i| {
        std::array::from_fn(|j| (counts[i][j] > 0).then(|| sums[i][j] as f64 / counts[i][j] as f64))
    });
    CorrelationMatrix { values, counts }
}

/// Standard error of a mean of `±1` products with true mean `expected`.
pub fn correlation_sigma(expected: f64, count: u64) -> f64 {
    ((1.0 - expected * expected) / count as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_experiment, ExperimentConfig, ModelSpec};
    use crate::tables::{InstructionSet, SourceDistribution};

    #[test]
    fn all_red_source_gives_unit_correlations() {
        let mut config = ExperimentConfig::new(ModelSpec::Mermin, 2_000, 1);
        config.source = SourceDistribution::vertex("RRR".parse::<InstructionSet>().unwrap());
        let m = pair_correlations(&run_experiment(&config).unwrap());
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.value(i, j), Some(1.0));
            }
        }
        assert_eq!(m.counts.iter().flatten().sum::<u64>(), 2_000);
    }

    #[test]
    fn empty_cells_are_absent() {
        let m = pair_correlations(&[]);
        assert_eq!(m.value(0, 1), None);
    }
}
