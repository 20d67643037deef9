use std::collections::HashMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::index::{NormalizedPanel, WeightVector};
use crate::jenks::{natural_breaks, NaturalBreaks};

/// Names of the five level zones, lowest first.
pub const LEVEL_NAMES: [&str; 5] = ["low", "lower", "medium", "higher", "high"];

/// Label of class `c` (0-based) out of `k`. Five classes use the level-zone
/// names; other counts fall back to `class_1 .. class_k`.
pub fn level_label(k: usize, c: usize) -> String {
    if k == LEVEL_NAMES.len() {
        LEVEL_NAMES[c].to_string()
    } else {
        format!("class_{}", c + 1)
    }
}

fn parse_level(s: &str) -> Option<(usize, Option<usize>)> {
    if let Some(c) = LEVEL_NAMES.iter().position(|n| *n == s) {
        return Some((c, Some(LEVEL_NAMES.len())));
    }
    let c: usize = s.strip_prefix("class_")?.parse().ok()?;
    (c >= 1).then_some((c - 1, None))
}

/// Composite score per (region, year), with optional level classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSeries {
    pub regions: Vec<String>,
    pub years: Vec<i32>,
    scores: Vec<f64>,
    levels: Vec<Option<usize>>,
    classes: usize,
}

impl ScoreSeries {
    /// `scores` laid out region-major: `scores[i * years.len() + t]`.
    pub fn new(regions: Vec<String>, years: Vec<i32>, scores: Vec<f64>) -> Result<Self> {
        if scores.len() != regions.len() * years.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} scores for {} regions x {} years",
                scores.len(),
                regions.len(),
                years.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidData("non-finite score".into()));
        }
        let levels = vec![None; scores.len()];
        Ok(Self {
            regions,
            years,
            scores,
            levels,
            classes: 0,
        })
    }

    pub fn get(&self, region: usize, year: usize) -> f64 {
        self.scores[region * self.years.len() + year]
    }

    pub fn level(&self, region: usize, year: usize) -> Option<usize> {
        self.levels[region * self.years.len() + year]
    }

    pub fn class_count(&self) -> usize {
        self.classes
    }

    pub fn year_index(&self, year: i32) -> Option<usize> {
        self.years.iter().position(|y| *y == year)
    }

    /// Scores of every region in year index `t`.
    pub fn cross_section(&self, t: usize) -> Vec<f64> {
        (0..self.regions.len()).map(|i| self.get(i, t)).collect()
    }

    /// Assigns natural-breaks levels to year index `t`.
    pub fn classify_year(&mut self, t: usize, k: usize) -> Result<NaturalBreaks> {
        if self.classes != 0 && self.classes != k {
            return Err(Error::InvalidData(format!(
                "series already classified with {} classes",
                self.classes
            )));
        }
        let nb = natural_breaks(&self.cross_section(t), k)?;
        let ny = self.years.len();
        for (i, c) in nb.classes.iter().enumerate() {
            self.levels[i * ny + t] = Some(*c);
        }
        self.classes = k;
        Ok(nb)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let map_err = |e: csv::Error| Error::InvalidData(format!("csv write failed: {e}"));
        w.write_record(["region", "year", "score", "level"]).map_err(map_err)?;
        for (i, r) in self.regions.iter().enumerate() {
            for (t, y) in self.years.iter().enumerate() {
                let level = self
                    .level(i, t)
                    .map(|c| level_label(self.classes, c))
                    .unwrap_or_default();
                w.write_record([r.as_str(), &y.to_string(), &self.get(i, t).to_string(), &level])
                    .map_err(map_err)?;
            }
        }
        w.flush().map_err(|e| Error::InvalidData(format!("csv write failed: {e}")))
    }

    /// Reads `region,year,score,level`. Every (region, year) must appear once.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let path = std::path::Path::new("scores.csv");
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let header = rdr.headers().map_err(|e| Error::parse(path, e))?;
        if header.iter().collect::<Vec<_>>() != ["region", "year", "score", "level"] {
            return Err(Error::parse(path, "expected header `region,year,score,level`"));
        }
        let mut regions: Vec<String> = Vec::new();
        let mut region_idx = HashMap::new();
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<(String, i32, f64, String)>() {
            let (region, year, score, level) = rec.map_err(|e| Error::parse(path, e))?;
            let i = *region_idx.entry(region.clone()).or_insert_with(|| {
                regions.push(region.clone());
                regions.len() - 1
            });
            let level = if level.is_empty() {
                None
            } else {
                Some(parse_level(&level).ok_or_else(|| {
                    Error::parse(path, format!("unknown level label `{level}`"))
                })?)
            };
            rows.push((i, region, year, score, level));
        }
        let mut years: Vec<i32> = rows.iter().map(|r| r.2).collect();
        years.sort_unstable();
        years.dedup();
        let ny = years.len();
        let mut scores = vec![f64::NAN; regions.len() * ny];
        let mut levels = vec![None; scores.len()];
        let mut max_class = 0;
        let mut named_k = None;
        for (i, region, year, score, level) in rows {
            let t = years.binary_search(&year).expect("year collected above");
            let idx = i * ny + t;
            if !scores[idx].is_nan() {
                return Err(Error::DuplicateCell {
                    region,
                    year,
                    indicator: "score".into(),
                });
            }
            scores[idx] = score;
            if let Some((c, k)) = level {
                max_class = max_class.max(c + 1);
                named_k = named_k.or(k);
                levels[idx] = Some(c);
            }
        }
        if let Some(idx) = scores.iter().position(|s| s.is_nan()) {
            return Err(Error::InvalidData(format!(
                "no score for ({}, {})",
                regions[idx / ny],
                years[idx % ny]
            )));
        }
        let mut series = Self::new(regions, years, scores)?;
        series.levels = levels;
        series.classes = named_k.unwrap_or(max_class);
        Ok(series)
    }
}

/// Linear weighting `Q_i(t) = Σ_j w_j s_ij(t)`.
pub fn aggregate_scores(norm: &NormalizedPanel, w: &WeightVector) -> Result<ScoreSeries> {
    if w.indicators != norm.indicators {
        return Err(Error::DimensionMismatch(format!(
            "weights cover {:?}, panel has {:?}",
            w.indicators, norm.indicators
        )));
    }
    let (n, k) = (norm.regions.len(), norm.years.len());
    let mut scores = Vec::with_capacity(n * k);
    for i in 0..n {
        for t in 0..k {
            scores.push(
                w.weights
                    .iter()
                    .enumerate()
                    .map(|(j, wj)| wj * norm.get(i, j, t))
                    .sum(),
            );
        }
    }
    ScoreSeries::new(norm.regions.clone(), norm.years.clone(), scores)
}

/// Natural-breaks classes for one year's scores: class index per value,
/// 0 = lowest.
pub fn classify_levels(scores: &[f64], k: usize) -> Result<Vec<usize>> {
    Ok(natural_breaks(scores, k)?.classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::Normalization;

    fn norm(values: Vec<f64>, m: usize) -> NormalizedPanel {
        let n = values.len() / m;
        NormalizedPanel::from_parts(
            (0..n).map(|i| format!("R{i}")).collect(),
            vec![2004],
            (0..m).map(|j| format!("x{j}")).collect(),
            Normalization::FixedBase { base_year: 2004 },
            values,
        )
        .unwrap()
    }

    fn weights(w: Vec<f64>) -> WeightVector {
        let ids = (0..w.len()).map(|j| format!("x{j}")).collect();
        WeightVector::new(ids, w, 1e-9).unwrap()
    }

    #[test]
    fn convex_combination_identities() {
        let w = weights(vec![0.2, 0.3, 0.5]);
        let q = aggregate_scores(&norm(vec![1.0; 3], 3), &w).unwrap();
        assert!((q.get(0, 0) - 1.0).abs() < 1e-15);
        let q = aggregate_scores(&norm(vec![0.0; 3], 3), &w).unwrap();
        assert_eq!(q.get(0, 0), 0.0);
    }

    #[test]
    fn half_and_half() {
        let q = aggregate_scores(&norm(vec![0.2, 0.8], 2), &weights(vec![0.5, 0.5])).unwrap();
        assert_eq!(q.get(0, 0), 0.5);
    }

    #[test]
    fn mismatched_weights() {
        let w = WeightVector::new(vec!["y".into()], vec![1.0], 1e-9).unwrap();
        assert!(matches!(
            aggregate_scores(&norm(vec![0.5], 1), &w),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn csv_round_trip_with_levels() {
        let regions: Vec<String> = (0..6).map(|i| format!("R{i}")).collect();
        let scores = vec![0.1, 0.2, 0.15, 0.3, 1.1, 1.4, 1.2, 0.9, 2.0, 2.2, 0.7, 0.75];
        let mut s = ScoreSeries::new(regions, vec![2004, 2005], scores).unwrap();
        s.classify_year(1, 5).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = ScoreSeries::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, s);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("R4,2005,2.2,high"));
        assert!(text.contains("R0,2004,0.1,\n"));
    }

    #[test]
    fn classify_levels_splits_gap() {
        assert_eq!(
            classify_levels(&[1.0, 2.0, 3.0, 10.0, 11.0, 12.0], 2).unwrap(),
            vec![0, 0, 0, 1, 1, 1]
        );
        assert!(classify_levels(&[1.0, 1.0, 2.0], 5).is_err());
    }
}
