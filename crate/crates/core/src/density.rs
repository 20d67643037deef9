//! Gaussian kernel density estimation of score distributions.
//!
//! Three kinds of observation pairs feed the two-dimensional estimators:
//!
//! - `unconditional`: a region's own score at `t` against its score at `t + Δ`;
//! - `spatial_static`: the spatial lag of scores at `t` against the region's own
//!   score at `t`;
//! - `spatial_dynamic`: the spatial lag at `t` against the own score at `t + Δ`.
//!
//! Grid evaluation runs in parallel over grid points; each point is a plain
//! sum over observations in index order, so results do not depend on the
//! thread schedule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::ScoreSeries;
use crate::ingest::SpatialWeights;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Columns whose marginal density is below this fraction of the largest
/// marginal value are flagged empty rather than divided through.
pub const EMPTY_COLUMN_RATIO: f64 = 1e-12;

/// Default number of grid points per axis.
pub const DEFAULT_GRID_POINTS: usize = 256;
/// Default grid margin beyond the data range, in bandwidths.
pub const DEFAULT_GRID_MARGIN: f64 = 3.0;

#[inline]
fn phi(u: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * u * u).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    Unconditional,
    SpatialStatic,
    SpatialDynamic,
}

impl PairMode {
    pub const ALL: [PairMode; 3] = [
        PairMode::Unconditional,
        PairMode::SpatialStatic,
        PairMode::SpatialDynamic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PairMode::Unconditional => "unconditional",
            PairMode::SpatialStatic => "spatial_static",
            PairMode::SpatialDynamic => "spatial_dynamic",
        }
    }

    pub fn is_lagged(self) -> bool {
        !matches!(self, PairMode::SpatialStatic)
    }
}

/// Where a pair came from: the region and the starting year `t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairSource {
    pub region: String,
    pub year: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservationPairs {
    pub mode: PairMode,
    pub delta: Option<usize>,
    pub pairs: Vec<(f64, f64)>,
    pub sources: Vec<PairSource>,
}

impl ObservationPairs {
    pub fn from_pairs(mode: PairMode, pairs: Vec<(f64, f64)>) -> Self {
        let sources = vec![
            PairSource {
                region: String::new(),
                year: 0,
            };
            pairs.len()
        ];
        Self {
            mode,
            delta: None,
            pairs,
            sources,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.1).collect()
    }
}

/// Builds observation pairs from a score series. Islands (regions with an
/// all-zero weight row) are dropped from the spatial modes and reported in
/// the second element of the result.
pub fn build_pairs(
    scores: &ScoreSeries,
    weights: &SpatialWeights,
    mode: PairMode,
    delta: usize,
) -> Result<(ObservationPairs, Vec<String>)> {
    if weights.regions() != scores.regions.as_slice() {
        return Err(Error::DimensionMismatch(
            "spatial weights and scores list different regions".into(),
        ));
    }
    let lag = if mode.is_lagged() { delta } else { 0 };
    if mode.is_lagged() && delta == 0 {
        return Err(Error::config("density.delta", "lag must be at least one year"));
    }
    let k = scores.years.len();
    if k < lag + 1 {
        return Err(Error::InvalidData(format!(
            "series spans {k} years, need at least {} for a lag of {lag}",
            lag + 1
        )));
    }
    let spatial = !matches!(mode, PairMode::Unconditional);
    let lags: Vec<Vec<f64>> = if spatial {
        (0..k)
            .map(|t| weights.lag(&scores.cross_section(t)))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let mut pairs = Vec::new();
    let mut sources = Vec::new();
    let mut dropped = Vec::new();
    for (i, region) in scores.regions.iter().enumerate() {
        if spatial && weights.is_island(i) {
            dropped.push(region.clone());
            continue;
        }
        for t in 0..(k - lag) {
            let x = if spatial { lags[t][i] } else { scores.get(i, t) };
            pairs.push((x, scores.get(i, t + lag)));
            sources.push(PairSource {
                region: region.clone(),
                year: scores.years[t],
            });
        }
    }
    Ok((
        ObservationPairs {
            mode,
            delta: mode.is_lagged().then_some(delta),
            pairs,
            sources,
        },
        dropped,
    ))
}

/// Linear interpolation quantile (the "type 7" definition) of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule of thumb, `0.9 · min(sd, IQR / 1.34) · N^(−1/5)`, with the
/// sample standard deviation. When the IQR is zero but the spread is not, the
/// standard deviation is used alone.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::ZeroDispersion(format!("bandwidth needs at least 2 samples, got {n}")));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("bandwidth samples contain non-finite values".into()));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if sd == 0.0 {
        return Err(Error::ZeroDispersion("all samples are equal".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

/// `m` evenly spaced points over `[min − margin·h, max + margin·h]`.
pub fn default_grid(samples: &[f64], h: f64, margin: f64, m: usize) -> Vec<f64> {
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    linspace(lo - margin * h, hi + margin * h, m)
}

pub fn linspace(a: f64, b: f64, m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let step = (b - a) / (m - 1) as f64;
            (0..m).map(|i| if i == m - 1 { b } else { a + step * i as f64 }).collect()
        }
    }
}

fn check_grid(grid: &[f64], axis: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidData(format!("{axis} grid is empty")));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidData(format!("{axis} grid must be strictly increasing")));
    }
    Ok(())
}

fn check_bandwidth(h: f64, axis: &str) -> Result<()> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidData(format!("bandwidth {axis} must be positive, got {h}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// `f(x)` on `x_grid`.
    Marginal,
    /// Joint `f(x, y)`.
    Joint,
    /// `g(y | x) = f(x, y) / f(x)`.
    Conditional,
}

/// Density values on a rectangular grid. Two-dimensional values are stored
/// x-major: `values[ix * y_grid.len() + iy]`, so each x column is contiguous.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityGrid {
    pub mode: PairMode,
    pub kind: GridKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    pub x_grid: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_grid: Option<Vec<f64>>,
    pub values: Vec<f64>,
    pub h_x: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_y: Option<f64>,
    pub n_obs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<usize>,
    /// Indices of x columns with too little support for a conditional density.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub empty_columns: Vec<usize>,
}

impl DensityGrid {
    pub fn ny(&self) -> usize {
        self.y_grid.as_ref().map_or(1, Vec::len)
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.ny() + iy]
    }

    pub fn column(&self, ix: usize) -> &[f64] {
        let ny = self.ny();
        &self.values[ix * ny..(ix + 1) * ny]
    }
}

/// `f(x) = (1 / N h) Σ φ((X_i − x) / h)` on each grid point.
pub fn kde_1d(samples: &[f64], h: f64, grid: &[f64]) -> Result<DensityGrid> {
    if samples.is_empty() {
        return Err(Error::InvalidData("kernel density needs at least one sample".into()));
    }
    check_bandwidth(h, "h")?;
    check_grid(grid, "x")?;
    let norm = 1.0 / (samples.len() as f64 * h);
    let values = grid
        .par_iter()
        .map(|x| samples.iter().map(|s| phi((s - x) / h)).sum::<f64>() * norm)
        .collect();
    Ok(DensityGrid {
        mode: PairMode::Unconditional,
        kind: GridKind::Marginal,
        year: None,
        x_grid: grid.to_vec(),
        y_grid: None,
        values,
        h_x: h,
        h_y: None,
        n_obs: samples.len(),
        delta: None,
        empty_columns: Vec::new(),
    })
}

/// Kernel values `φ((X_i − g) / h)` for every grid point `g`, row per point.
fn kernel_rows(obs: &[f64], h: f64, grid: &[f64]) -> Vec<Vec<f64>> {
    grid.par_iter()
        .map(|g| obs.iter().map(|o| phi((o - g) / h)).collect())
        .collect()
}

/// Product-kernel joint density
/// `f(x, y) = (1 / N h_x h_y) Σ φ((X_i − x)/h_x) φ((Y_i − y)/h_y)`.
pub fn kde_2d(
    pairs: &ObservationPairs,
    h_x: f64,
    h_y: f64,
    x_grid: &[f64],
    y_grid: &[f64],
) -> Result<DensityGrid> {
    if pairs.is_empty() {
        return Err(Error::InvalidData("kernel density needs at least one pair".into()));
    }
    check_bandwidth(h_x, "h_x")?;
    check_bandwidth(h_y, "h_y")?;
    check_grid(x_grid, "x")?;
    check_grid(y_grid, "y")?;
    let kx = kernel_rows(&pairs.xs(), h_x, x_grid);
    let ky = kernel_rows(&pairs.ys(), h_y, y_grid);
    let norm = 1.0 / (pairs.len() as f64 * h_x * h_y);
    let values: Vec<f64> = kx
        .par_iter()
        .flat_map_iter(|rx| {
            ky.iter()
                .map(move |ry| rx.iter().zip(ry).map(|(a, b)| a * b).sum::<f64>() * norm)
        })
        .collect();
    Ok(DensityGrid {
        mode: pairs.mode,
        kind: GridKind::Joint,
        year: None,
        x_grid: x_grid.to_vec(),
        y_grid: Some(y_grid.to_vec()),
        values,
        h_x,
        h_y: Some(h_y),
        n_obs: pairs.len(),
        delta: pairs.delta,
        empty_columns: Vec::new(),
    })
}

/// `g(y | x) = f(x, y) / f(x)`, with `f(x)` the 1-D estimate over the pair
/// x-values using the same `h_x`. Columns where `f(x)` is negligible are
/// zeroed and listed in `empty_columns`.
pub fn conditional_density(
    pairs: &ObservationPairs,
    h_x: f64,
    h_y: f64,
    x_grid: &[f64],
    y_grid: &[f64],
) -> Result<DensityGrid> {
    let mut joint = kde_2d(pairs, h_x, h_y, x_grid, y_grid)?;
    let marginal = kde_1d(&pairs.xs(), h_x, x_grid)?.values;
    let floor = EMPTY_COLUMN_RATIO * marginal.iter().cloned().fold(0.0, f64::max);
    let ny = y_grid.len();
    let mut empty = Vec::new();
    for (ix, fx) in marginal.iter().enumerate() {
        let col = &mut joint.values[ix * ny..(ix + 1) * ny];
        if *fx <= floor {
            col.iter_mut().for_each(|v| *v = 0.0);
            empty.push(ix);
        } else {
            col.iter_mut().for_each(|v| *v /= fx);
        }
    }
    joint.kind = GridKind::Conditional;
    joint.empty_columns = empty;
    Ok(joint)
}
