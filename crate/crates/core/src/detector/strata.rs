use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a partition was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    EqualInterval,
    Quantile,
    NaturalBreaks,
    Geometric,
    StdDev,
    Supplied,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::EqualInterval => "equal_interval",
            Method::Quantile => "quantile",
            Method::NaturalBreaks => "natural_breaks",
            Method::Geometric => "geometric",
            Method::StdDev => "std_dev",
            Method::Supplied => "supplied",
        }
    }
}

/// Assignment of every observation to one of `count` nonempty strata,
/// labelled `0..count`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrataPartition {
    pub factor: String,
    pub labels: Vec<usize>,
    pub count: usize,
    pub method: Method,
    /// Interior break points, when the strata come from discretizing a
    /// continuous variable. A value equal to a break belongs to the lower
    /// stratum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breaks: Option<Vec<f64>>,
}

impl StrataPartition {
    /// Relabels arbitrary ordered labels to `0..L` preserving their order.
    pub fn from_labels<T: Ord + Clone>(factor: impl Into<String>, labels: &[T]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for l in labels {
            map.entry(l.clone()).or_insert(0usize);
        }
        for (i, v) in map.values_mut().enumerate() {
            *v = i;
        }
        let labels: Vec<usize> = labels.iter().map(|l| map[l]).collect();
        Self::build(factor.into(), labels, map.len(), Method::Supplied, None)
    }

    pub(crate) fn build(
        factor: String,
        labels: Vec<usize>,
        count: usize,
        method: Method,
        breaks: Option<Vec<f64>>,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidData("partition has no observations".into()));
        }
        let mut sizes = vec![0usize; count];
        for &l in &labels {
            if l >= count {
                return Err(Error::InvalidData(format!("stratum label {l} out of range 0..{count}")));
            }
            sizes[l] += 1;
        }
        if let Some(h) = sizes.iter().position(|s| *s == 0) {
            return Err(Error::InvalidData(format!("stratum {h} of `{factor}` is empty")));
        }
        Ok(Self {
            factor,
            labels,
            count,
            method,
            breaks,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Intersection of two partitions over the same observations. Only the
    /// (a, b) combinations that actually occur become strata.
    pub fn cross(&self, other: &StrataPartition) -> Result<StrataPartition> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch(format!(
                "partitions cover {} and {} observations",
                self.len(),
                other.len()
            )));
        }
        let pairs: Vec<(usize, usize)> = self.labels.iter().copied().zip(other.labels.iter().copied()).collect();
        let mut crossed = Self::from_labels(format!("{}∩{}", self.factor, other.factor), &pairs)?;
        crossed.method = Method::Supplied;
        Ok(crossed)
    }
}
