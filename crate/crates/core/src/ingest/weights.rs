use std::collections::HashMap;
use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::Point;

/// Row-standardized neighbour matrix with a zero diagonal.
///
/// Regions without neighbours ("islands") keep an all-zero row and are listed
/// in [`SpatialWeights::islands`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialWeights {
    regions: Vec<String>,
    matrix: Vec<f64>,
    islands: Vec<usize>,
}

impl SpatialWeights {
    /// Binary contiguity from undirected pairs. Either direction of a pair makes
    /// both regions neighbours; repeated pairs are harmless.
    pub fn from_pairs(regions: &[String], pairs: &[(String, String)]) -> Result<Self> {
        let index: HashMap<&str, usize> =
            regions.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
        let n = regions.len();
        let mut adj = vec![false; n * n];
        for (a, b) in pairs {
            let ia = *index.get(a.as_str()).ok_or_else(|| Error::UnknownRegion(a.clone()))?;
            let ib = *index.get(b.as_str()).ok_or_else(|| Error::UnknownRegion(b.clone()))?;
            if ia == ib {
                return Err(Error::InvalidData(format!("region `{a}` listed as its own neighbour")));
            }
            adj[ia * n + ib] = true;
            adj[ib * n + ia] = true;
        }
        Ok(Self::standardize(regions.to_vec(), &adj))
    }

    /// `k` nearest neighbours by Euclidean distance between projected
    /// centroids. Equal distances go to the region listed first. The relation is
    /// not symmetrized.
    pub fn k_nearest(regions: &[String], points: &[Point], k: usize) -> Result<Self> {
        let n = regions.len();
        if points.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} points for {} regions",
                points.len(),
                n
            )));
        }
        if k == 0 || k >= n {
            return Err(Error::InvalidData(format!("k = {k} must be in 1..{n}")));
        }
        let mut adj = vec![false; n * n];
        for i in 0..n {
            let mut others: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| ((points[i].x - points[j].x).hypot(points[i].y - points[j].y), j))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for &(_, j) in &others[..k] {
                adj[i * n + j] = true;
            }
        }
        Ok(Self::standardize(regions.to_vec(), &adj))
    }

    fn standardize(regions: Vec<String>, adj: &[bool]) -> Self {
        let n = regions.len();
        let mut matrix = vec![0.0; n * n];
        let mut islands = Vec::new();
        for i in 0..n {
            let row = &adj[i * n..(i + 1) * n];
            let deg = row.iter().filter(|b| **b).count();
            if deg == 0 {
                islands.push(i);
                continue;
            }
            let w = 1.0 / deg as f64;
            for (j, &b) in row.iter().enumerate() {
                if b {
                    matrix[i * n + j] = w;
                }
            }
        }
        Self {
            regions,
            matrix,
            islands,
        }
    }

    pub fn regions(&self) -> &[String] {
        &self.regions
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.regions.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.regions.len();
        &self.matrix[i * n..(i + 1) * n]
    }

    pub fn islands(&self) -> &[usize] {
        &self.islands
    }

    pub fn island_names(&self) -> Vec<String> {
        self.islands.iter().map(|&i| self.regions[i].clone()).collect()
    }

    pub fn is_island(&self, i: usize) -> bool {
        self.islands.binary_search(&i).is_ok()
    }

    /// Spatial lag `Σ_j W_ij v_j` for every region. Islands get 0.
    pub fn lag(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.regions.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} regions",
                values.len(),
                self.regions.len()
            )));
        }
        Ok((0..self.regions.len())
            .map(|i| self.row(i).iter().zip(values).map(|(w, v)| w * v).sum())
            .collect())
    }
}

/// Reads `region_a,region_b` pairs and builds row-standardized contiguity
/// weights over `regions`.
pub fn build_spatial_weights(adjacency_file: &Path, regions: &[String]) -> Result<SpatialWeights> {
    let file = File::open(adjacency_file).map_err(|e| Error::io(adjacency_file, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = rdr.headers().map_err(|e| Error::parse(adjacency_file, e))?;
    if header.iter().collect::<Vec<_>>() != ["region_a", "region_b"] {
        return Err(Error::parse(adjacency_file, "expected header `region_a,region_b`"));
    }
    let pairs = rdr
        .deserialize::<(String, String)>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::parse(adjacency_file, e))?;
    SpatialWeights::from_pairs(regions, &pairs)
}
