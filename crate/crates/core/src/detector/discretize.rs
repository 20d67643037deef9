//! Turning a continuous driver into strata, and picking the (method, L)
//! combination whose strata explain the most variance of the outcome.

use rayon::prelude::*;
use serde::Serialize;

use crate::detector::factor::Q_TIE_TOLERANCE;
use crate::detector::{factor_q, Method, StrataPartition};
use crate::error::{Error, Result};
use crate::jenks::natural_breaks;

pub const DEFAULT_METHODS: [Method; 5] = [
    Method::EqualInterval,
    Method::Quantile,
    Method::NaturalBreaks,
    Method::Geometric,
    Method::StdDev,
];

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn classes_from_breaks(x: &[f64], breaks: &[f64]) -> Vec<usize> {
    x.iter().map(|v| breaks.partition_point(|b| b < v)).collect()
}

/// Interior break points for `method` with `l` classes, or `None` when the
/// method does not apply to `x` (geometric steps need positive values).
fn breaks_for(x: &[f64], method: Method, l: usize) -> Result<Option<Vec<f64>>> {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let lf = l as f64;
    let breaks = match method {
        Method::EqualInterval => (1..l).map(|i| lo + (hi - lo) * i as f64 / lf).collect(),
        Method::Quantile => (1..l).map(|i| quantile_sorted(&sorted, i as f64 / lf)).collect(),
        Method::NaturalBreaks => {
            let nb = natural_breaks(x, l)?;
            nb.upper_bounds[..l - 1].to_vec()
        }
        Method::Geometric => {
            if lo <= 0.0 {
                return Ok(None);
            }
            let ratio = (hi / lo).powf(1.0 / lf);
            (1..l).map(|i| lo * ratio.powi(i as i32)).collect()
        }
        Method::StdDev => {
            let n = x.len() as f64;
            let mean = x.iter().sum::<f64>() / n;
            let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            (1..l).map(|i| mean + (i as f64 - lf / 2.0) * sd).collect()
        }
        Method::Supplied => {
            return Err(Error::InvalidData("`supplied` is not a discretization method".into()))
        }
    };
    Ok(Some(breaks))
}

/// Discretizes `x` into `l` strata. Returns `None` when the method does not
/// apply or leaves a stratum empty.
pub fn discretize(factor: &str, x: &[f64], method: Method, l: usize) -> Result<Option<StrataPartition>> {
    if x.is_empty() || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData(format!("driver `{factor}` has no usable values")));
    }
    if l < 2 {
        return Err(Error::config("detector.l_range", "at least two strata are required"));
    }
    let Some(breaks) = breaks_for(x, method, l)? else {
        return Ok(None);
    };
    let labels = classes_from_breaks(x, &breaks);
    Ok(StrataPartition::build(factor.to_owned(), labels, l, method, Some(breaks)).ok())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub method: Method,
    pub strata: usize,
    /// `None` when the candidate partition was invalid.
    pub q: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discretization {
    pub partition: StrataPartition,
    pub q: f64,
    pub candidates: Vec<Candidate>,
}

fn distinct_count(x: &[f64]) -> usize {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s.dedup();
    s.len()
}

/// Tries every method for every stratum count in `l_range` and keeps the
/// partition with the largest q. Ties (within 1e-12) go to the smaller count,
/// then to the method listed first.
pub fn discretize_optimal(
    factor: &str,
    x: &[f64],
    y: &[f64],
    methods: &[Method],
    l_range: std::ops::RangeInclusive<usize>,
) -> Result<Discretization> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "driver `{factor}` has {} values, outcome has {}",
            x.len(),
            y.len()
        )));
    }
    if methods.is_empty() || l_range.is_empty() || *l_range.start() < 2 {
        return Err(Error::config(
            "detector",
            "need at least one method and a stratum range starting at 2 or more",
        ));
    }
    let needed = *l_range.end();
    let found = distinct_count(x);
    if found < needed {
        return Err(Error::TooFewDistinct { needed, found });
    }

    let grid: Vec<(usize, Method)> = l_range
        .flat_map(|l| methods.iter().map(move |m| (l, *m)))
        .collect();
    let evaluated: Vec<(Candidate, Option<StrataPartition>)> = grid
        .par_iter()
        .map(|&(l, method)| {
            let part = discretize(factor, x, method, l)?;
            let q = part.as_ref().map(|p| factor_q(y, p)).transpose()?;
            Ok((Candidate { method, strata: l, q }, part))
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(f64, usize)> = None;
    for (i, (c, _)) in evaluated.iter().enumerate() {
        if let Some(q) = c.q {
            if best.is_none_or(|(bq, _)| q > bq + Q_TIE_TOLERANCE) {
                best = Some((q, i));
            }
        }
    }
    let (q, idx) = best.ok_or_else(|| {
        Error::Numerical(format!("no candidate discretization of `{factor}` is valid"))
    })?;
    let candidates: Vec<Candidate> = evaluated.iter().map(|(c, _)| c.clone()).collect();
    let partition = evaluated.into_iter().nth(idx).and_then(|(_, p)| p).expect("best candidate has a partition");
    Ok(Discretization {
        partition,
        q,
        candidates,
    })
}
