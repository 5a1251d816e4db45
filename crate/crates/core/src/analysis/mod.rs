//! Statistics over record streams.

mod correlations;
mod density;
mod features;
mod reorder;

pub use correlations::{correlation_sigma, pair_correlations, CorrelationMatrix};
pub use density::{
    chi_square_homogeneity, density_dependence_test, ChiSquareResult, DensityTestReport,
    StratumResult, DEFAULT_ALPHA, MIN_PAIR_COUNT,
};
pub use features::{binomial_sigma, feature_i_check, feature_ii_check, FeatureI, FeatureII};
pub use reorder::{
    reorder, row_consistency_audit, ReorderSummary, ReorderedRow, Reordering, RowAudit,
};
