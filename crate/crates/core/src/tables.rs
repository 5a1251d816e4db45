//! Instruction-set algebra over three settings and two colors.
//!
//! Everything here is exact: table entries are `±1` integers and every
//! probability is a [`BigRational`]. Row order follows the canonical
//! instruction-set order `RRR, RRG, RGR, GRR, GGR, GRG, RGG, GGG`; column
//! order is the ordered setting pairs `aa, ab, ac, ba, bb, bc, ca, cb, cc`
//! with the first letter belonging to station 1.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a floating-point distribution.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Detector setting label. Ordering `a < b < c` fixes the table column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    A,
    B,
    C,
}

impl Setting {
    pub const ALL: [Setting; 3] = [Setting::A, Setting::B, Setting::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Setting {
        Setting::ALL[index]
    }

    pub fn label(self) -> char {
        match self {
            Setting::A => 'a',
            Setting::B => 'b',
            Setting::C => 'c',
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(Setting::A),
            "b" => Ok(Setting::B),
            "c" => Ok(Setting::C),
            other => Err(Error::config("setting", format!("unknown setting {other:?}"))),
        }
    }
}

/// A detector flash. Green is `+1`, red is `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Green,
    Red,
}

impl Outcome {
    pub fn value(self) -> i32 {
        match self {
            Outcome::Green => 1,
            Outcome::Red => -1,
        }
    }

    pub fn from_value(value: i32) -> Option<Outcome> {
        match value {
            1 => Some(Outcome::Green),
            -1 => Some(Outcome::Red),
            _ => None,
        }
    }

    pub fn flipped(self) -> Outcome {
        match self {
            Outcome::Green => Outcome::Red,
            Outcome::Red => Outcome::Green,
        }
    }

    pub fn color(self) -> char {
        match self {
            Outcome::Green => 'G',
            Outcome::Red => 'R',
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Green => "+1",
            Outcome::Red => "-1",
        })
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+1" | "1" | "G" => Ok(Outcome::Green),
            "-1" | "R" => Ok(Outcome::Red),
            other => Err(Error::config("outcome", format!("unknown outcome {other:?}"))),
        }
    }
}

impl Serialize for Outcome {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_i32(self.value())
    }
}

impl<'de> Deserialize<'de> for Outcome {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = i32::deserialize(deserializer)?;
        Outcome::from_value(v).ok_or_else(|| serde::de::Error::custom(format!("outcome must be +1 or -1, got {v}")))
    }
}

const SET_COLORS: [[Outcome; 3]; 8] = {
    use Outcome::{Green as G, Red as R};
    [
        [R, R, R],
        [R, R, G],
        [R, G, R],
        [G, R, R],
        [G, G, R],
        [G, R, G],
        [R, G, G],
        [G, G, G],
    ]
};

/// One of the eight source-emitted instruction sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct InstructionSet(u8);

impl InstructionSet {
    pub const ALL: [InstructionSet; 8] = [
        InstructionSet(0),
        InstructionSet(1),
        InstructionSet(2),
        InstructionSet(3),
        InstructionSet(4),
        InstructionSet(5),
        InstructionSet(6),
        InstructionSet(7),
    ];

    /// Zero-based position in the canonical row order.
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(index: usize) -> Option<InstructionSet> {
        (index < 8).then_some(InstructionSet(index as u8))
    }

    pub fn colors(self) -> [Outcome; 3] {
        SET_COLORS[self.index()]
    }

    /// `true` for the six sets that use both colors.
    pub fn is_mixed(self) -> bool {
        let c = self.colors();
        !(c[0] == c[1] && c[1] == c[2])
    }

    pub fn label(self) -> String {
        self.colors().iter().map(|o| o.color()).collect()
    }
}

impl fmt::Display for InstructionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for InstructionSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InstructionSet::ALL
            .into_iter()
            .find(|set| set.label() == s)
            .ok_or_else(|| Error::config("instruction set", format!("unknown instruction set {s:?}")))
    }
}

impl TryFrom<String> for InstructionSet {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<InstructionSet> for String {
    fn from(value: InstructionSet) -> Self {
        value.label()
    }
}

/// Ordered setting pair `(station 1, station 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SettingPair {
    pub first: Setting,
    pub second: Setting,
}

impl SettingPair {
    pub const ALL: [SettingPair; 9] = {
        use Setting::{A, B, C};
        [
            SettingPair::new(A, A),
            SettingPair::new(A, B),
            SettingPair::new(A, C),
            SettingPair::new(B, A),
            SettingPair::new(B, B),
            SettingPair::new(B, C),
            SettingPair::new(C, A),
            SettingPair::new(C, B),
            SettingPair::new(C, C),
        ]
    };

    pub const fn new(first: Setting, second: Setting) -> Self {
        SettingPair { first, second }
    }

    /// Column position in the canonical order.
    pub fn index(self) -> usize {
        self.first.index() * 3 + self.second.index()
    }

    pub fn from_index(index: usize) -> SettingPair {
        SettingPair::ALL[index]
    }

    pub fn is_equal_setting(self) -> bool {
        self.first == self.second
    }

    pub fn label(self) -> String {
        format!("{}{}", self.first.label(), self.second.label())
    }
}

impl fmt::Display for SettingPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.first, self.second)
    }
}

impl FromStr for SettingPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.chars();
        match (chars.next(), chars.next(), chars.next()) {
            (Some(x), Some(y), None) => Ok(SettingPair::new(
                x.to_string().parse()?,
                y.to_string().parse()?,
            )),
            _ => Err(Error::config("setting pair", format!("unknown setting pair {s:?}"))),
        }
    }
}

impl TryFrom<String> for SettingPair {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<SettingPair> for String {
    fn from(value: SettingPair) -> Self {
        value.label()
    }
}

/// Converts a float probability to the simplest nearby rational.
pub fn rational_from_f64(value: f64) -> Option<BigRational> {
    if !value.is_finite() {
        return None;
    }
    let approx: Ratio<i64> = Ratio::approximate_float(value)?;
    Some(BigRational::new(
        BigInt::from(*approx.numer()),
        BigInt::from(*approx.denom()),
    ))
}

pub fn rational_to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

fn validate_masses(field: &str, masses: &[BigRational]) -> Result<()> {
    if let Some(negative) = masses.iter().position(|m| m.is_negative()) {
        return Err(Error::config(field, format!("entry {negative} is negative")));
    }
    if masses.iter().all(Zero::is_zero) {
        return Err(Error::config(field, "support is empty"));
    }
    let total: BigRational = masses.iter().sum();
    if !total.is_one() {
        return Err(Error::config(
            field,
            format!("probabilities sum to {total} instead of 1"),
        ));
    }
    Ok(())
}

/// Validates float masses against [`SUM_TOLERANCE`], then converts them to
/// rationals renormalised to sum to exactly one.
fn masses_from_f64(field: &str, values: &[f64]) -> Result<Vec<BigRational>> {
    if let Some(bad) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::config(field, format!("entry {bad} is negative or not finite")));
    }
    let total: f64 = values.iter().sum();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::config(
            field,
            format!("probabilities sum to {total} instead of 1"),
        ));
    }
    let rationals: Vec<BigRational> = values
        .iter()
        .map(|&v| rational_from_f64(v).ok_or_else(|| Error::config(field, format!("cannot represent {v}"))))
        .collect::<Result<_>>()?;
    let sum: BigRational = rationals.iter().sum();
    if sum.is_zero() {
        return Err(Error::config(field, "support is empty"));
    }
    Ok(rationals.into_iter().map(|r| r / &sum).collect())
}

/// Probabilities `p_s` over the eight instruction sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceDistribution {
    probs: [BigRational; 8],
}

impl SourceDistribution {
    pub fn new(probs: [BigRational; 8]) -> Result<Self> {
        validate_masses("source", &probs)?;
        Ok(SourceDistribution { probs })
    }

    pub fn from_f64(probs: [f64; 8]) -> Result<Self> {
        let masses = masses_from_f64("source", &probs)?;
        Ok(SourceDistribution {
            probs: masses.try_into().expect("eight masses"),
        })
    }

    /// Builds a distribution from nonnegative integer weights.
    pub fn from_weights(weights: [u64; 8]) -> Result<Self> {
        let total: u64 = weights.iter().sum();
        if total == 0 {
            return Err(Error::config("source", "support is empty"));
        }
        Ok(SourceDistribution {
            probs: weights.map(|w| BigRational::new(BigInt::from(w), BigInt::from(total))),
        })
    }

    pub fn uniform() -> Self {
        Self::from_weights([1; 8]).expect("uniform weights")
    }

    /// Uniform over the six sets that use both colors.
    pub fn uniform_mixed() -> Self {
        Self::from_weights(InstructionSet::ALL.map(|s| u64::from(s.is_mixed()))).expect("six mixed sets")
    }

    /// All mass on one instruction set.
    pub fn vertex(set: InstructionSet) -> Self {
        let mut weights = [0; 8];
        weights[set.index()] = 1;
        Self::from_weights(weights).expect("vertex weight")
    }

    pub fn probability(&self, set: InstructionSet) -> &BigRational {
        &self.probs[set.index()]
    }

    pub fn probabilities(&self) -> &[BigRational; 8] {
        &self.probs
    }

    pub fn to_f64(&self) -> [f64; 8] {
        std::array::from_fn(|i| rational_to_f64(&self.probs[i]))
    }
}

impl Default for SourceDistribution {
    fn default() -> Self {
        Self::uniform()
    }
}

/// Probabilities over the nine ordered setting pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SettingPairDistribution {
    probs: [BigRational; 9],
}

impl SettingPairDistribution {
    pub fn new(probs: [BigRational; 9]) -> Result<Self> {
        validate_masses("pairs", &probs)?;
        Ok(SettingPairDistribution { probs })
    }

    pub fn from_f64(probs: [f64; 9]) -> Result<Self> {
        let masses = masses_from_f64("pairs", &probs)?;
        Ok(SettingPairDistribution {
            probs: masses.try_into().expect("nine masses"),
        })
    }

    pub fn from_weights(weights: [u64; 9]) -> Result<Self> {
        let total: u64 = weights.iter().sum();
        if total == 0 {
            return Err(Error::config("pairs", "support is empty"));
        }
        Ok(SettingPairDistribution {
            probs: weights.map(|w| BigRational::new(BigInt::from(w), BigInt::from(total))),
        })
    }

    pub fn uniform() -> Self {
        Self::from_weights([1; 9]).expect("uniform weights")
    }

    /// Every run uses the same fixed pair.
    pub fn fixed(pair: SettingPair) -> Self {
        let mut weights = [0; 9];
        weights[pair.index()] = 1;
        Self::from_weights(weights).expect("fixed pair")
    }

    pub fn probability(&self, pair: SettingPair) -> &BigRational {
        &self.probs[pair.index()]
    }

    pub fn probabilities(&self) -> &[BigRational; 9] {
        &self.probs
    }

    pub fn to_f64(&self) -> [f64; 9] {
        std::array::from_fn(|i| rational_to_f64(&self.probs[i]))
    }
}

impl Default for SettingPairDistribution {
    fn default() -> Self {
        Self::uniform()
    }
}

/// The color an instruction set assigns to a setting. Both stations read the
/// same set, so equal settings always give equal colors.
pub fn instruction_outcome(set: InstructionSet, setting: Setting) -> Outcome {
    set.colors()[setting.index()]
}

/// The 8×9 table of products `A_i B_j` for every instruction set and pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductTable {
    entries: [[i32; 9]; 8],
}

impl ProductTable {
    pub fn entry(&self, set: InstructionSet, pair: SettingPair) -> i32 {
        self.entries[set.index()][pair.index()]
    }

    pub fn row(&self, set: InstructionSet) -> &[i32; 9] {
        &self.entries[set.index()]
    }

    pub fn column(&self, pair: SettingPair) -> [i32; 8] {
        std::array::from_fn(|s| self.entries[s][pair.index()])
    }

    pub fn rows(&self) -> &[[i32; 9]; 8] {
        &self.entries
    }

    /// CSV with a `lambda` column followed by one column per ordered pair.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda");
        for pair in SettingPair::ALL {
            out.push(',');
            out.push_str(&pair.label());
        }
        out.push('\n');
        for set in InstructionSet::ALL {
            out.push_str(&set.label());
            for value in self.row(set) {
                out.push_str(if *value > 0 { ",+1" } else { ",-1" });
            }
            out.push('\n');
        }
        out
    }
}

pub fn product_table() -> ProductTable {
    let entries = std::array::from_fn(|s| {
        let set = InstructionSet::ALL[s];
        std::array::from_fn(|p| {
            let pair = SettingPair::ALL[p];
            instruction_outcome(set, pair.first).value() * instruction_outcome(set, pair.second).value()
        })
    });
    ProductTable { entries }
}

/// Sum of the nine products in one row, which is `(A_a + A_b + A_c)^2`.
pub fn row_sum(set: InstructionSet) -> i32 {
    let total: i32 = Setting::ALL
        .iter()
        .map(|&s| instruction_outcome(set, s).value())
        .sum();
    total * total
}

/// Row average under uniform pairs; never below 1/9.
pub fn row_average(set: InstructionSet) -> BigRational {
    BigRational::new(BigInt::from(row_sum(set)), BigInt::from(9))
}

/// The one-eighth weighted row functional `Y(λ) = (1/8) Σ_ij A_i(λ) B_j(λ)`.
///
/// This is a formal functional of the table. No sequential experiment can
/// accumulate it, since each trial measures only one pair.
pub fn formal_row_functional(set: InstructionSet) -> BigRational {
    BigRational::new(BigInt::from(row_sum(set)), BigInt::from(8))
}

/// One simple event of the idealised experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SamplePoint {
    pub set: InstructionSet,
    pub pair: SettingPair,
}

/// The 72 simple events `(λ_s; i, j)`, rows in canonical order.
pub fn enumerate_sample_space() -> Vec<SamplePoint> {
    InstructionSet::ALL
        .iter()
        .flat_map(|&set| SettingPair::ALL.iter().map(move |&pair| SamplePoint { set, pair }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactStatistics {
    pub same_color_prob: BigRational,
    /// `[i][j]` is the expected product `E[A_i B_j]` over the source.
    pub pair_expectations: [[BigRational; 3]; 3],
}

/// Exact expectations over the 72-point sample space.
pub fn exact_statistics(
    source: &SourceDistribution,
    pairs: &SettingPairDistribution,
) -> ExactStatistics {
    let mut same = BigRational::zero();
    let mut expectations: [[BigRational; 3]; 3] = Default::default();
    for set in InstructionSet::ALL {
        let p = source.probability(set);
        if p.is_zero() {
            continue;
        }
        for pair in SettingPair::ALL {
            let product = instruction_outcome(set, pair.first).value()
                * instruction_outcome(set, pair.second).value();
            expectations[pair.first.index()][pair.second.index()] += p * BigRational::from_integer(product.into());
            if product == 1 {
                same += p * pairs.probability(pair);
            }
        }
    }
    ExactStatistics {
        same_color_prob: same,
        pair_expectations: expectations,
    }
}
