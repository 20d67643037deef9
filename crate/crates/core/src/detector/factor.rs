use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::detector::StrataPartition;
use crate::error::{Error, Result};

/// Two q values closer than this are treated as equal when counting
/// permutation exceedances.
pub const Q_TIE_TOLERANCE: f64 = 1e-12;

/// Smallest permutation count accepted by [`significance`].
pub const MIN_PERMUTATIONS: usize = 99;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectorResult {
    pub factor: String,
    pub q: f64,
    pub p_value: Option<f64>,
    pub n: usize,
    pub strata: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Permuted q values equal to the observed one (within tolerance).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ties: Option<usize>,
}

/// Within-stratum and total sums of squares around the respective means.
pub(crate) fn sums_of_squares(y: &[f64], labels: &[usize], count: usize) -> (f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let mut sum = vec![0.0; count];
    let mut cnt = vec![0.0; count];
    for (v, &l) in y.iter().zip(labels) {
        sum[l] += v;
        cnt[l] += 1.0;
    }
    let means: Vec<f64> = sum.iter().zip(&cnt).map(|(s, c)| s / c).collect();
    let ssw: f64 = y.iter().zip(labels).map(|(v, &l)| (v - means[l]).powi(2)).sum();
    (ssw, sst)
}

fn check_inputs(y: &[f64], strata: &StrataPartition) -> Result<()> {
    if y.len() != strata.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} outcomes, {} stratum labels",
            y.len(),
            strata.len()
        )));
    }
    if y.len() < 2 {
        return Err(Error::InvalidData("the q statistic needs at least 2 observations".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("outcome contains non-finite values".into()));
    }
    Ok(())
}

fn q_from_labels(y: &[f64], labels: &[usize], count: usize) -> f64 {
    let (ssw, sst) = sums_of_squares(y, labels, count);
    (1.0 - ssw / sst).clamp(0.0, 1.0)
}

/// Share of the variance of `y` explained by the strata:
/// `q = 1 − Σ_h N_h σ_h² / (N σ²)` with population variances.
pub fn factor_q(y: &[f64], strata: &StrataPartition) -> Result<f64> {
    check_inputs(y, strata)?;
    let (ssw, sst) = sums_of_squares(y, &strata.labels, strata.count);
    if sst <= 0.0 {
        return Err(Error::ZeroDispersion("outcome has zero variance".into()));
    }
    Ok((1.0 - ssw / sst).clamp(0.0, 1.0))
}

/// Permutation p-value for the q statistic. Stratum labels are shuffled and
/// `y` stays fixed; `p = (1 + #{q_perm ≥ q}) / (permutations + 1)`.
///
/// Replicate `r` draws from its own ChaCha8 stream (`seed`, stream `r`), so
/// the result does not depend on how replicates are scheduled.
pub fn significance(
    y: &[f64],
    strata: &StrataPartition,
    permutations: usize,
    seed: u64,
) -> Result<DetectorResult> {
    if permutations < MIN_PERMUTATIONS {
        return Err(Error::config(
            "detector.permutations",
            format!("{permutations} permutations requested, at least {MIN_PERMUTATIONS} required"),
        ));
    }
    let q = factor_q(y, strata)?;
    let exceed: Vec<(bool, bool)> = (0..permutations)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut labels = strata.labels.clone();
            labels.shuffle(&mut rng);
            let qp = q_from_labels(y, &labels, strata.count);
            (qp >= q - Q_TIE_TOLERANCE, (qp - q).abs() <= Q_TIE_TOLERANCE)
        })
        .collect();
    let hits = exceed.iter().filter(|e| e.0).count();
    let ties = exceed.iter().filter(|e| e.1).count();
    Ok(DetectorResult {
        factor: strata.factor.clone(),
        q,
        p_value: Some((1 + hits) as f64 / (permutations + 1) as f64),
        n: y.len(),
        strata: strata.count,
        permutations: Some(permutations),
        seed: Some(seed),
        ties: Some(ties),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(labels: &[usize]) -> StrataPartition {
        StrataPartition::from_labels("f", labels).unwrap()
    }

    #[test]
    fn hand_computed_q() {
        let y = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let q = factor_q(&y, &part(&[0, 0, 0, 1, 1, 1])).unwrap();
        assert!((q - (1.0 - 4.0 / 17.5)).abs() < 1e-12);
        assert!((q - 0.771_428_571_428_571_4).abs() < 1e-12);
    }

    #[test]
    fn extremes() {
        let y = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(factor_q(&y, &part(&[0; 6])).unwrap(), 0.0);
        assert_eq!(factor_q(&y, &part(&[0, 1, 2, 3, 4, 5])).unwrap(), 1.0);
    }

    #[test]
    fn zero_variance_outcome() {
        assert!(matches!(
            factor_q(&[2.0; 4], &part(&[0, 0, 1, 1])),
            Err(Error::ZeroDispersion(_))
        ));
    }

    #[test]
    fn too_few_permutations() {
        let y = [1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            significance(&y, &part(&[0, 0, 1, 1]), 98, 1),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn p_value_floor() {
        // 12 observations in four tight, well separated strata: no relabelling
        // of 99 draws reaches the observed q with this seed.
        let y: Vec<f64> = (0..12).map(|i| (i / 3) as f64 * 10.0 + (i % 3) as f64 * 0.01).collect();
        let labels: Vec<usize> = (0..12).map(|i| i / 3).collect();
        let r = significance(&y, &part(&labels), 99, 7).unwrap();
        assert_eq!(r.ties, Some(0));
        assert_eq!(r.p_value, Some(0.01));
    }

    #[test]
    fn seed_reproducible() {
        let y: Vec<f64> = (0..20).map(|i| ((i * 37) % 11) as f64).collect();
        let labels: Vec<usize> = (0..20).map(|i| i % 3).collect();
        let a = significance(&y, &part(&labels), 199, 42).unwrap();
        let b = significance(&y, &part(&labels), 199, 42).unwrap();
        assert_eq!(a.p_value.unwrap().to_bits(), b.p_value.unwrap().to_bits());
        let c = significance(&y, &part(&labels), 199, 43).unwrap();
        assert_eq!(a.q, c.q);
    }
}
