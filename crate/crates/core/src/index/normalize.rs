use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Attribute, IndicatorPanel};

/// Range over which min/max are taken for min-max standardization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Each year's cross-section separately.
    PerYear,
    /// All regions and years together.
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Normalization {
    Minmax { scope: Scope },
    FixedBase { base_year: i32 },
}

/// Standardized indicator values with the same axes as the source panel.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedPanel {
    pub regions: Vec<String>,
    pub years: Vec<i32>,
    pub indicators: Vec<String>,
    pub mode: Normalization,
    values: Vec<f64>,
}

impl NormalizedPanel {
    pub fn from_parts(
        regions: Vec<String>,
        years: Vec<i32>,
        indicators: Vec<String>,
        mode: Normalization,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != regions.len() * years.len() * indicators.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} normalized values for a {}x{}x{} panel",
                values.len(),
                regions.len(),
                indicators.len(),
                years.len()
            )));
        }
        Ok(Self {
            regions,
            years,
            indicators,
            mode,
            values,
        })
    }

    #[inline]
    pub fn get(&self, region: usize, indicator: usize, year: usize) -> f64 {
        self.values[(region * self.indicators.len() + indicator) * self.years.len() + year]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// All (region, year) values of one indicator.
    pub fn column(&self, indicator: usize) -> impl Iterator<Item = f64> + '_ {
        let (m, k) = (self.indicators.len(), self.years.len());
        (0..self.regions.len())
            .flat_map(move |i| (0..k).map(move |t| self.values[(i * m + indicator) * k + t]))
    }
}

fn require_complete(panel: &IndicatorPanel) -> Result<()> {
    match panel.missing_count() {
        0 => Ok(()),
        n => Err(Error::InvalidData(format!(
            "panel has {n} missing cells; fill them before normalizing"
        ))),
    }
}

#[inline]
fn scale(x: f64, min: f64, max: f64, attribute: Attribute) -> f64 {
    match attribute {
        Attribute::Positive => (x - min) / (max - min),
        Attribute::Negative => (max - x) / (max - min),
    }
}

fn min_max(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Extreme-value standardization. Positive indicators map to
/// `(x − min)/(max − min)`, negative ones to `(max − x)/(max − min)`, so every
/// output lies in `[0, 1]`.
pub fn normalize_minmax(panel: &IndicatorPanel, scope: Scope) -> Result<NormalizedPanel> {
    require_complete(panel)?;
    let (n, m, k) = (panel.n_regions(), panel.n_indicators(), panel.n_years());
    let mut values = vec![0.0; n * m * k];
    for (j, spec) in panel.indicators().iter().enumerate() {
        let pooled = min_max((0..n).flat_map(|i| (0..k).map(move |t| (i, t))).map(|(i, t)| panel.value(i, j, t)));
        for t in 0..k {
            let (lo, hi) = match scope {
                Scope::Pooled => pooled,
                Scope::PerYear => min_max((0..n).map(|i| panel.value(i, j, t))),
            };
            if hi <= lo {
                let where_ = match scope {
                    Scope::Pooled => "pooled".to_string(),
                    Scope::PerYear => format!("year {}", panel.years()[t]),
                };
                return Err(Error::ZeroRange {
                    indicator: spec.id.clone(),
                    scope: where_,
                });
            }
            for i in 0..n {
                values[(i * m + j) * k + t] = scale(panel.value(i, j, t), lo, hi, spec.attribute);
            }
        }
    }
    NormalizedPanel::from_parts(
        panel.regions().to_vec(),
        panel.years().to_vec(),
        panel.indicators().iter().map(|s| s.id.clone()).collect(),
        Normalization::Minmax { scope },
        values,
    )
}

/// Fixed-base efficacy coefficient: every year is scaled against the min/max
/// of the base-year cross-section. Base-year values land in `[0, 1]`; later
/// years may leave that interval.
pub fn normalize_fixed_base(panel: &IndicatorPanel, base_year: i32) -> Result<NormalizedPanel> {
    require_complete(panel)?;
    let base = panel.year_index(base_year).ok_or_else(|| {
        Error::config(
            "normalization.base_year",
            format!(
                "{base_year} is outside the panel years {}..={}",
                panel.years()[0],
                panel.years()[panel.n_years() - 1]
            ),
        )
    })?;
    let (n, m, k) = (panel.n_regions(), panel.n_indicators(), panel.n_years());
    let mut values = vec![0.0; n * m * k];
    for (j, spec) in panel.indicators().iter().enumerate() {
        let (lo, hi) = min_max((0..n).map(|i| panel.value(i, j, base)));
        if hi <= lo {
            return Err(Error::ZeroRange {
                indicator: spec.id.clone(),
                scope: format!("base year {base_year}"),
            });
        }
        for i in 0..n {
            for t in 0..k {
                values[(i * m + j) * k + t] = scale(panel.value(i, j, t), lo, hi, spec.attribute);
            }
        }
    }
    NormalizedPanel::from_parts(
        panel.regions().to_vec(),
        panel.years().to_vec(),
        panel.indicators().iter().map(|s| s.id.clone()).collect(),
        Normalization::FixedBase { base_year },
        values,
    )
}
