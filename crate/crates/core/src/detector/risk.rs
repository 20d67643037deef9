use serde::Serialize;
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use crate::detector::factor::sums_of_squares;
use crate::detector::StrataPartition;
use crate::error::{Error, Result};

/// Significance level for the risk and ecological detectors.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumSummary {
    pub stratum: usize,
    pub n: usize,
    pub mean: f64,
    /// Sample variance (n − 1); `None` for a singleton.
    pub variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanComparison {
    pub a: usize,
    pub b: usize,
    pub t: Option<f64>,
    pub df: Option<f64>,
    pub p_value: Option<f64>,
    /// `None` when either stratum has a single observation.
    pub significant: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    pub factor: String,
    pub strata: Vec<StratumSummary>,
    pub comparisons: Vec<MeanComparison>,
}

/// Welch's two-sample t test. Returns `(t, df, two-sided p)`.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<(f64, f64, f64)> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidData("Welch's test needs two observations per group".into()));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        return Ok(if ma == mb {
            (0.0, f64::NAN, 1.0)
        } else {
            ((ma - mb).signum() * f64::INFINITY, f64::NAN, 0.0)
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Numerical(e.to_string()))?;
    let p = (2.0 * dist.cdf(-t.abs())).min(1.0);
    Ok((t, df, p))
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Stratum means of `y` and Welch tests between every pair of strata.
pub fn risk_detector(y: &[f64], strata: &StrataPartition) -> Result<RiskReport> {
    if y.len() != strata.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} outcomes, {} stratum labels",
            y.len(),
            strata.len()
        )));
    }
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); strata.count];
    for (v, &l) in y.iter().zip(&strata.labels) {
        groups[l].push(*v);
    }
    let summaries = groups
        .iter()
        .enumerate()
        .map(|(h, g)| {
            let (mean, var) = mean_var(g);
            StratumSummary {
                stratum: h,
                n: g.len(),
                mean,
                variance: (g.len() > 1).then_some(var),
            }
        })
        .collect();
    let mut comparisons = Vec::new();
    for a in 0..strata.count {
        for b in (a + 1)..strata.count {
            let cmp = if groups[a].len() < 2 || groups[b].len() < 2 {
                MeanComparison {
                    a,
                    b,
                    t: None,
                    df: None,
                    p_value: None,
                    significant: None,
                }
            } else {
                let (t, df, p) = welch_t_test(&groups[a], &groups[b])?;
                MeanComparison {
                    a,
                    b,
                    t: finite(t),
                    df: finite(df),
                    p_value: Some(p),
                    significant: Some(p < ALPHA),
                }
            };
            comparisons.push(cmp);
        }
    }
    Ok(RiskReport {
        factor: strata.factor.clone(),
        strata: summaries,
        comparisons,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EcologicalResult {
    pub factor_a: String,
    pub factor_b: String,
    pub f: Option<f64>,
    pub df: (usize, usize),
    pub p_value: f64,
    /// Whether `a` leaves significantly more within-strata variance than `b`.
    pub significant: bool,
}

/// Compares the within-strata sums of squares of two partitions with
/// `F = N_A (N_B − 1) SSW_A / (N_B (N_A − 1) SSW_B)` on `(N_A − 1, N_B − 1)`
/// degrees of freedom, one-sided at [`ALPHA`]. Both partitions cover the same
/// observations, so the sample-size factors cancel to `SSW_A / SSW_B`.
pub fn ecological_detector(
    y: &[f64],
    a: &StrataPartition,
    b: &StrataPartition,
) -> Result<EcologicalResult> {
    if y.len() != a.len() || y.len() != b.len() {
        return Err(Error::DimensionMismatch("partitions and outcome differ in length".into()));
    }
    let n = y.len();
    if n < 2 {
        return Err(Error::InvalidData("ecological detector needs at least 2 observations".into()));
    }
    let (ssw_a, _) = sums_of_squares(y, &a.labels, a.count);
    let (ssw_b, _) = sums_of_squares(y, &b.labels, b.count);
    let df = (n - 1, n - 1);
    let (f, p) = if ssw_b == 0.0 {
        if ssw_a == 0.0 {
            (Some(1.0), 1.0)
        } else {
            (None, 0.0)
        }
    } else {
        let f = ssw_a / ssw_b;
        let dist = FisherSnedecor::new(df.0 as f64, df.1 as f64)
            .map_err(|e| Error::Numerical(e.to_string()))?;
        (Some(f), dist.sf(f))
    };
    Ok(EcologicalResult {
        factor_a: a.factor.clone(),
        factor_b: b.factor.clone(),
        f,
        df,
        p_value: p,
        significant: p < ALPHA,
    })
}
