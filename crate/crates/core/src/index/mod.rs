//! Composite index construction: standardization, weighting, aggregation and
//! level-zone classification.

mod normalize;
mod scores;
mod weights;

pub use normalize::{normalize_fixed_base, normalize_minmax, Normalization, NormalizedPanel, Scope};
pub use scores::{aggregate_scores, classify_levels, level_label, ScoreSeries, LEVEL_NAMES};
pub use weights::{
    entropy_weights, entropy_weights_from_columns, load_weights, WeightVector, COMPUTED_WEIGHT_TOLERANCE,
};
