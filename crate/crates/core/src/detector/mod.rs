//! Geographical detector: how much of the spatial variance of an outcome a
//! stratified factor explains (factor detector), whether two factors explain
//! more together (interaction detector), whether stratum means differ (risk
//! detector), and whether two factors differ in explanatory power
//! (ecological detector).

mod discretize;
mod factor;
mod interaction;
mod risk;
mod strata;

pub use discretize::{discretize, discretize_optimal, Candidate, Discretization, DEFAULT_METHODS};
pub use factor::{factor_q, significance, DetectorResult, MIN_PERMUTATIONS, Q_TIE_TOLERANCE};
pub use interaction::{classify_interaction, interaction, InteractionResult, InteractionType, INTERACTION_TOLERANCE};
pub use risk::{
    ecological_detector, risk_detector, welch_t_test, EcologicalResult, MeanComparison, RiskReport,
    StratumSummary, ALPHA,
};
pub use strata::{Method, StrataPartition};
