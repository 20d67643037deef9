use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};
use crate::index::NormalizedPanel;
use crate::ingest::{check_weight_sum, IndicatorSpec, FILE_WEIGHT_TOLERANCE};

/// Computed weights must sum to one this tightly.
pub const COMPUTED_WEIGHT_TOLERANCE: f64 = 1e-9;

const DIVERGENCE_FLOOR: f64 = 1e-12;

/// One weight per indicator, in indicator order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub indicators: Vec<String>,
    pub weights: Vec<f64>,
}

impl WeightVector {
    pub fn new(indicators: Vec<String>, weights: Vec<f64>, tolerance: f64) -> Result<Self> {
        if indicators.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} indicators",
                weights.len(),
                indicators.len()
            )));
        }
        if let Some((id, w)) = indicators
            .iter()
            .zip(&weights)
            .find(|(_, w)| !(0.0..=1.0).contains(*w))
        {
            return Err(Error::InvalidData(format!("weight of `{id}` is {w}, outside [0, 1]")));
        }
        check_weight_sum(weights.iter().sum(), tolerance)?;
        Ok(Self {
            indicators,
            weights,
        })
    }

    /// Weights carried by the indicator spec itself.
    pub fn from_specs(specs: &[IndicatorSpec]) -> Result<Self> {
        let weights = specs
            .iter()
            .map(|s| {
                s.weight
                    .ok_or_else(|| Error::InvalidData(format!("indicator `{}` has no weight", s.id)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            specs.iter().map(|s| s.id.clone()).collect(),
            weights,
            FILE_WEIGHT_TOLERANCE,
        )
    }

    /// Orders a `{indicator_id: weight}` map to match `indicators`. Every
    /// indicator must be covered and no extra ids are allowed.
    pub fn from_map(map: &BTreeMap<String, f64>, indicators: &[String]) -> Result<Self> {
        if let Some(extra) = map.keys().find(|k| !indicators.contains(k)) {
            return Err(Error::UnknownIndicator(extra.clone()));
        }
        let weights = indicators
            .iter()
            .map(|id| {
                map.get(id)
                    .copied()
                    .ok_or_else(|| Error::DimensionMismatch(format!("no weight for indicator `{id}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(indicators.to_vec(), weights, FILE_WEIGHT_TOLERANCE)
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.indicators.iter().cloned().zip(self.weights.iter().copied()).collect()
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Reads a weights JSON object `{indicator_id: weight}`.
pub fn load_weights(path: &Path, indicators: &[String]) -> Result<WeightVector> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let map: BTreeMap<String, f64> =
        serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| Error::parse(path, e))?;
    WeightVector::from_map(&map, indicators)
}

/// Entropy weight method over all (region, year) rows of `norm`.
///
/// For each indicator the shares `p = s / Σ s` give an entropy
/// `e = −Σ p ln p / ln n` (with `0 ln 0 = 0`); the divergence `1 − e` is
/// normalized across indicators. Negative values, which fixed-base
/// normalization can produce, are clamped to zero here only.
pub fn entropy_weights(norm: &NormalizedPanel) -> Result<WeightVector> {
    let m = norm.indicators.len();
    let columns: Vec<Vec<f64>> = (0..m)
        .map(|j| norm.column(j).map(|v| v.max(0.0)).collect())
        .collect();
    let weights = entropy_weights_from_columns(&columns)?;
    WeightVector::new(norm.indicators.clone(), weights, COMPUTED_WEIGHT_TOLERANCE)
}

/// Entropy weights from raw nonnegative columns (each column one indicator).
pub fn entropy_weights_from_columns(columns: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = columns.first().map_or(0, Vec::len);
    if n < 2 || columns.iter().any(|c| c.len() != n) {
        return Err(Error::DimensionMismatch(
            "entropy weights need equally long columns of at least two rows".into(),
        ));
    }
    if columns.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidData("entropy weights need finite nonnegative values".into()));
    }
    let ln_n = (n as f64).ln();
    let divergence: Vec<f64> = columns
        .iter()
        .map(|col| {
            let total: f64 = col.iter().sum();
            if total <= 0.0 {
                // No mass at all: the indicator carries no information.
                return 0.0;
            }
            let h: f64 = col
                .iter()
                .filter(|v| **v > 0.0)
                .map(|v| {
                    let p = v / total;
                    -p * p.ln()
                })
                .sum();
            let d = (1.0 - h / ln_n).clamp(0.0, 1.0);
            // Uniform shares give e = 1 up to rounding.
            if d < DIVERGENCE_FLOOR {
                0.0
            } else {
                d
            }
        })
        .collect();
    let total: f64 = divergence.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroDispersion(
            "every indicator is constant; entropy weights are undefined".into(),
        ));
    }
    Ok(divergence.iter().map(|d| d / total).collect())
}
