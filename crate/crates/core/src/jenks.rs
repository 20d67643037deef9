//! Fisher–Jenks natural breaks: the exact partition of sorted values into `k`
//! contiguous classes with the least total within-class sum of squared
//! deviations, found by dynamic programming in O(k·n²).
//!
//! Equal values always share a class. When two partitions cost the same, the
//! one that places boundary values in the lower class wins.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NaturalBreaks {
    /// Class index (0 = lowest) of each input value, in input order.
    pub classes: Vec<usize>,
    /// Largest value of each class; the last entry is the maximum.
    pub upper_bounds: Vec<f64>,
    /// Total within-class sum of squared deviations.
    pub ssd: f64,
}

pub fn natural_breaks(values: &[f64], k: usize) -> Result<NaturalBreaks> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("natural breaks input contains non-finite values".into()));
    }
    if k == 0 {
        return Err(Error::InvalidData("class count must be positive".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    // Distinct values with multiplicities.
    let mut uniq: Vec<(f64, f64)> = Vec::new();
    for v in sorted {
        match uniq.last_mut() {
            Some((u, c)) if *u == v => *c += 1.0,
            _ => uniq.push((v, 1.0)),
        }
    }
    let n = uniq.len();
    if n < k {
        return Err(Error::TooFewDistinct { needed: k, found: n });
    }

    // Centre before accumulating to keep the prefix sums well conditioned.
    let total: f64 = uniq.iter().map(|(_, c)| c).sum();
    let mean = uniq.iter().map(|(v, c)| v * c).sum::<f64>() / total;
    let mut cnt = vec![0.0; n + 1];
    let mut s1 = vec![0.0; n + 1];
    let mut s2 = vec![0.0; n + 1];
    for (i, (v, c)) in uniq.iter().enumerate() {
        let d = v - mean;
        cnt[i + 1] = cnt[i] + c;
        s1[i + 1] = s1[i] + c * d;
        s2[i + 1] = s2[i] + c * d * d;
    }
    // SSD of uniq[a..b].
    let cost = |a: usize, b: usize| -> f64 {
        let m = cnt[b] - cnt[a];
        let s = s1[b] - s1[a];
        ((s2[b] - s2[a]) - s * s / m).max(0.0)
    };

    // best[c][i]: least cost of splitting uniq[..i] into c + 1 classes.
    // start[c][i]: index where the last of those classes begins.
    let mut best = vec![vec![f64::INFINITY; n + 1]; k];
    let mut start = vec![vec![0usize; n + 1]; k];
    for i in 1..=n {
        best[0][i] = cost(0, i);
    }
    for c in 1..k {
        for i in (c + 1)..=n {
            for j in c..i {
                let candidate = best[c - 1][j] + cost(j, i);
                // `<=` prefers the later start, i.e. boundary values stay low.
                if candidate <= best[c][i] {
                    best[c][i] = candidate;
                    start[c][i] = j;
                }
            }
        }
    }

    let mut upper_idx = vec![0usize; k];
    let mut end = n;
    for c in (0..k).rev() {
        upper_idx[c] = end - 1;
        end = if c == 0 { 0 } else { start[c][end] };
    }
    let upper_bounds: Vec<f64> = upper_idx.iter().map(|&i| uniq[i].0).collect();
    let classes = values
        .iter()
        .map(|v| upper_bounds.partition_point(|ub| ub < v))
        .collect();
    Ok(NaturalBreaks {
        classes,
        upper_bounds,
        ssd: best[k - 1][n],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_obvious_groups() {
        let nb = natural_breaks(&[1.0, 2.0, 3.0, 10.0, 11.0, 12.0], 2).unwrap();
        assert_eq!(nb.classes, vec![0, 0, 0, 1, 1, 1]);
        assert_eq!(nb.upper_bounds, vec![3.0, 12.0]);
        assert!((nb.ssd - 4.0).abs() < 1e-12);
    }

    #[test]
    fn tight_clusters_are_recovered_in_any_order() {
        let v = [50.0, 0.1, 20.2, 0.0, 50.1, 20.0, 0.2, 49.9, 20.1];
        let nb = natural_breaks(&v, 3).unwrap();
        assert_eq!(nb.classes, vec![2, 0, 1, 0, 2, 1, 0, 2, 1]);
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let v = [3.0, 1.0, 2.0, 5.0];
        let nb = natural_breaks(&v, 4).unwrap();
        assert_eq!(nb.classes, vec![2, 0, 1, 3]);
        assert_eq!(nb.ssd, 0.0);
    }

    #[test]
    fn duplicates_share_a_class() {
        let nb = natural_breaks(&[1.0, 1.0, 1.0, 2.0, 9.0], 3).unwrap();
        assert_eq!(nb.classes, vec![0, 0, 0, 1, 2]);
    }

    #[test]
    fn too_few_distinct_values() {
        let err = natural_breaks(&[1.0, 1.0, 2.0], 3).unwrap_err();
        assert!(matches!(err, Error::TooFewDistinct { needed: 3, found: 2 }));
    }

    #[test]
    fn symmetric_tie_goes_to_lower_class() {
        // {0},{1,2} and {0,1},{2} cost the same; the boundary value 1 stays low.
        let nb = natural_breaks(&[0.0, 1.0, 2.0], 2).unwrap();
        assert_eq!(nb.classes, vec![0, 0, 1]);
    }
}
