use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use restool_core::density::{
    build_pairs, conditional_density, default_grid, kde_2d, silverman_bandwidth, DensityGrid, PairMode,
};
use restool_core::detector::{
    discretize_optimal, ecological_detector, interaction, risk_detector, significance, Candidate, DetectorResult,
    EcologicalResult, InteractionResult, Method, RiskReport,
};
use restool_core::ellipse::{ellipse_trajectory, write_ellipse_csv, CenterShift, EllipseSummary};
use restool_core::index::{
    aggregate_scores, entropy_weights, load_weights, normalize_fixed_base, normalize_minmax, level_label,
    Normalization, NormalizedPanel, ScoreSeries, WeightVector,
};
use restool_core::ingest::{
    build_spatial_weights, fill_missing, load_centroids, load_drivers, load_panel, write_panel, CellRef,
    DriverTable, Geometry, IndicatorPanel, SpatialWeights,
};
use restool_core::{Error, Result};
use serde::Serialize;

use crate::config::{Neighbors, Resolved, WeightsConfig};
use crate::manifest::{RunManifest, StageRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Validate,
    Index,
    Classify,
    Ellipse,
    Density,
    Detect,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Validate,
        Stage::Index,
        Stage::Classify,
        Stage::Ellipse,
        Stage::Density,
        Stage::Detect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Validate => "validate",
            Stage::Index => "index",
            Stage::Classify => "classify",
            Stage::Ellipse => "ellipse",
            Stage::Density => "density",
            Stage::Detect => "detect",
        }
    }

    pub fn from_name(s: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|st| st.name() == s)
    }
}

/// A failure inside a stage.
#[derive(Debug, thiserror::Error)]
#[error("stage `{stage}`: {source}", stage = .stage.name())]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

pub struct Pipeline {
    r: Resolved,
}

/// Score series written by the `index` stage, read by every later stage.
pub const SCORES_FILE: &str = "index/scores.csv";

impl Pipeline {
    pub fn new(resolved: Resolved) -> Self {
        Self { r: resolved }
    }

    pub fn output_dir(&self) -> &Path {
        &self.r.output_dir
    }

    /// Runs `stages` in order and updates the manifest. Stops at the first
    /// failing stage.
    pub fn run(&self, stages: &[Stage]) -> std::result::Result<RunManifest, StageError> {
        let hash = self.r.config.hash();
        let mut manifest = RunManifest::load_or_new(&self.r.output_dir, &hash);
        for &stage in stages {
            let start = Instant::now();
            let outputs = self.run_stage(stage).map_err(|source| StageError { stage, source })?;
            manifest.record(StageRecord {
                stage: stage.name().to_owned(),
                outputs,
                wall_clock_ms: start.elapsed().as_secs_f64() * 1e3,
            });
            manifest
                .write(&self.r.output_dir)
                .map_err(|source| StageError { stage, source })?;
        }
        Ok(manifest)
    }

    /// Runs one stage and returns the files it wrote, relative to the output
    /// directory.
    pub fn run_stage(&self, stage: Stage) -> Result<Vec<String>> {
        let mut out = Outputs::new(&self.r.output_dir, stage)?;
        match stage {
            Stage::Validate => self.validate(&mut out)?,
            Stage::Index => self.index(&mut out)?,
            Stage::Classify => self.classify(&mut out)?,
            Stage::Ellipse => self.ellipse(&mut out)?,
            Stage::Density => self.density(&mut out)?,
            Stage::Detect => self.detect(&mut out)?,
        }
        Ok(out.files)
    }

    fn panel(&self) -> Result<IndicatorPanel> {
        load_panel(&self.r.values, &self.r.spec)
    }

    fn scores(&self) -> Result<ScoreSeries> {
        let path = self.r.output_dir.join(SCORES_FILE);
        let file = File::open(&path).map_err(|e| {
            Error::InvalidData(format!("{}: {e} (run the `index` stage first)", path.display()))
        })?;
        ScoreSeries::read_csv(std::io::BufReader::new(file))
    }

    fn geometry(&self) -> Result<Geometry> {
        let path = self
            .r
            .centroids
            .as_ref()
            .ok_or_else(|| Error::config("paths.centroids", "centroids are required for this stage"))?;
        load_centroids(path)
    }

    fn drivers(&self) -> Result<DriverTable> {
        let path = self
            .r
            .drivers
            .as_ref()
            .ok_or_else(|| Error::config("paths.drivers", "driver file is required for the detector"))?;
        load_drivers(path)
    }

    fn spatial_weights(&self, regions: &[String]) -> Result<SpatialWeights> {
        match self.r.config.density.neighbors {
            Neighbors::Contiguity => {
                let path = self.r.adjacency.as_ref().ok_or_else(|| {
                    Error::config("paths.adjacency", "contiguity neighbours need an adjacency file")
                })?;
                build_spatial_weights(path, regions)
            }
            Neighbors::Knn { k } => {
                let points = self.geometry()?.points_for(regions)?;
                SpatialWeights::k_nearest(regions, &points, k)
            }
        }
    }

    fn check_years(&self, years: &[i32], field: &str, requested: Option<&Vec<i32>>) -> Result<()> {
        for y in requested.into_iter().flatten() {
            if !years.contains(y) {
                return Err(Error::config(field, format!("{y} is outside the panel years")));
            }
        }
        Ok(())
    }

    fn validate(&self, out: &mut Outputs) -> Result<()> {
        let cfg = &self.r.config;
        let panel = self.panel()?;
        let years = panel.years().to_vec();
        if let Normalization::FixedBase { base_year } = cfg.normalization {
            if !years.contains(&base_year) {
                return Err(Error::config(
                    "normalization.base_year",
                    format!("{base_year} is outside the panel years {}..={}", years[0], years[years.len() - 1]),
                ));
            }
        }
        self.check_years(&years, "classification.years", cfg.classification.years.as_ref())?;
        self.check_years(&years, "ellipse.years", cfg.ellipse.years.as_ref())?;
        self.check_years(&years, "detector.years", cfg.detector.years.as_ref())?;

        let missing_before = panel.missing_cells();
        let filled = fill_missing(&panel)?;

        let centroids = match &self.r.centroids {
            Some(_) => {
                let g = self.geometry()?;
                g.points_for(panel.regions())?;
                Some(if g.projection.is_some() { "lonlat" } else { "projected" })
            }
            None => None,
        };
        let islands = match (&self.r.adjacency, cfg.density.neighbors) {
            (Some(_), _) | (None, Neighbors::Knn { .. }) => {
                Some(self.spatial_weights(panel.regions())?.island_names())
            }
            _ => None,
        };
        let driver_factors = match &self.r.drivers {
            Some(_) => {
                let d = self.drivers()?;
                let factors = cfg.detector.factors.clone().unwrap_or_else(|| d.factors());
                for f in &factors {
                    for y in detector_years(cfg.detector.years.as_ref(), &years) {
                        d.column(f, y, panel.regions())?;
                    }
                }
                Some(factors)
            }
            None => None,
        };

        let spec_weight_sum = panel
            .indicators()
            .iter()
            .map(|s| s.weight)
            .collect::<Option<Vec<f64>>>()
            .map(|w| w.iter().sum::<f64>());

        let report = ValidationReport {
            regions: panel.n_regions(),
            years: [years[0], years[years.len() - 1]],
            indicators: panel.indicators().iter().map(|s| s.id.clone()).collect(),
            cells: panel.n_cells(),
            missing_before_fill: missing_before.len(),
            missing_cells: missing_before,
            missing_after_fill: filled.missing_count(),
            spec_weight_sum,
            centroids,
            islands,
            driver_factors,
        };
        out.json("report.json", &report)?;
        out.with_file("panel_filled.csv", |w| write_panel(&filled, w))?;
        Ok(())
    }

    fn index(&self, out: &mut Outputs) -> Result<()> {
        let cfg = &self.r.config;
        let panel = fill_missing(&self.panel()?)?;
        let norm = match cfg.normalization {
            Normalization::Minmax { scope } => normalize_minmax(&panel, scope)?,
            Normalization::FixedBase { base_year } => normalize_fixed_base(&panel, base_year)?,
        };
        let ids: Vec<String> = panel.indicators().iter().map(|s| s.id.clone()).collect();
        let (source, w) = match &cfg.weights {
            WeightsConfig::File { .. } => {
                let path = self.r.weights.as_ref().expect("resolved with the config");
                ("file", load_weights(path, &ids)?)
            }
            WeightsConfig::Spec => ("spec", WeightVector::from_specs(panel.indicators())?),
            WeightsConfig::Entropy => ("entropy", entropy_weights(&norm)?),
        };
        let scores = aggregate_scores(&norm, &w)?;

        out.with_file("normalized.csv", |f| write_normalized(&norm, f))?;
        out.json(
            "weights.json",
            &WeightsReport {
                source,
                normalization: cfg.normalization,
                sum: w.sum(),
                weights: w.to_map(),
            },
        )?;
        out.with_file("scores.csv", |f| scores.write_csv(f))?;
        Ok(())
    }

    fn classify(&self, out: &mut Outputs) -> Result<()> {
        let cfg = &self.r.config.classification;
        let mut scores = self.scores()?;
        let years = cfg.years.clone().unwrap_or_else(|| scores.years.clone());
        let mut breaks = Vec::with_capacity(years.len());
        for year in years {
            let t = scores
                .year_index(year)
                .ok_or_else(|| Error::config("classification.years", format!("no scores for {year}")))?;
            let nb = scores.classify_year(t, cfg.k)?;
            let mut counts = vec![0usize; cfg.k];
            for c in &nb.classes {
                counts[*c] += 1;
            }
            breaks.push(YearBreaks {
                year,
                upper_bounds: nb.upper_bounds,
                labels: (0..cfg.k).map(|c| level_label(cfg.k, c)).collect(),
                counts,
                within_ssd: nb.ssd,
            });
        }
        out.with_file("scores.csv", |f| scores.write_csv(f))?;
        out.json("breaks.json", &breaks)?;
        Ok(())
    }

    fn ellipse(&self, out: &mut Outputs) -> Result<()> {
        let scores = self.scores()?;
        let geometry = self.geometry()?;
        let years = self.r.config.ellipse.years.clone().unwrap_or_else(|| scores.years.clone());
        let tr = ellipse_trajectory(&scores, &geometry, &years)?;
        out.with_file("ellipses.csv", |f| write_ellipse_csv(&tr.ellipses, f))?;
        out.json(
            "trajectory.json",
            &TrajectoryReport {
                ellipses: &tr.ellipses,
                shifts: &tr.shifts,
                net_azimuth_change_deg: tr.net_azimuth_change_deg,
                rotation: if tr.net_azimuth_change_deg < 0.0 {
                    "counterclockwise"
                } else if tr.net_azimuth_change_deg > 0.0 {
                    "clockwise"
                } else {
                    "none"
                },
            },
        )?;
        Ok(())
    }

    fn density(&self, out: &mut Outputs) -> Result<()> {
        let cfg = &self.r.config.density;
        let scores = self.scores()?;
        let weights = self.spatial_weights(&scores.regions)?;
        let mut summary = Vec::new();
        for &mode in &cfg.modes {
            let (pairs, dropped) = build_pairs(&scores, &weights, mode, cfg.delta)?;
            let (xs, ys) = (pairs.xs(), pairs.ys());
            let h_x = cfg.bandwidth.x.map_or_else(|| silverman_bandwidth(&xs), Ok)?;
            let h_y = cfg.bandwidth.y.map_or_else(|| silverman_bandwidth(&ys), Ok)?;
            let x_grid = default_grid(&xs, h_x, cfg.grid_margin, cfg.grid_points);
            let y_grid = default_grid(&ys, h_y, cfg.grid_margin, cfg.grid_points);
            let joint = kde_2d(&pairs, h_x, h_y, &x_grid, &y_grid)?;
            let cond = conditional_density(&pairs, h_x, h_y, &x_grid, &y_grid)?;
            out.compact_json(&format!("{}_joint.json", mode.name()), &DensityFile::from(&joint))?;
            out.compact_json(&format!("{}_conditional.json", mode.name()), &DensityFile::from(&cond))?;
            out.with_file(&format!("{}_pairs.csv", mode.name()), |f| {
                let mut w = csv::Writer::from_writer(f);
                w.write_record(["region", "year", "x", "y"]).map_err(csv_err)?;
                for (src, (x, y)) in pairs.sources.iter().zip(&pairs.pairs) {
                    w.write_record([src.region.clone(), src.year.to_string(), x.to_string(), y.to_string()])
                        .map_err(csv_err)?;
                }
                w.flush().map_err(|e| Error::InvalidData(format!("csv write failed: {e}")))
            })?;
            summary.push(DensitySummary {
                mode,
                n_obs: pairs.len(),
                delta: pairs.delta,
                dropped_islands: dropped,
                h_x,
                h_y,
                h_x_source: if cfg.bandwidth.x.is_some() { "config" } else { "silverman" },
                h_y_source: if cfg.bandwidth.y.is_some() { "config" } else { "silverman" },
                grid_points: cfg.grid_points,
                grid_margin: cfg.grid_margin,
                empty_columns: cond.empty_columns.len(),
            });
        }
        out.json("summary.json", &summary)?;
        Ok(())
    }

    fn detect(&self, out: &mut Outputs) -> Result<()> {
        let cfg = &self.r.config.detector;
        let scores = self.scores()?;
        let drivers = self.drivers()?;
        let factors = cfg.factors.clone().unwrap_or_else(|| drivers.factors());
        if factors.is_empty() {
            return Err(Error::config("detector.factors", "no driver factors to analyse"));
        }
        let years = detector_years(cfg.years.as_ref(), &scores.years);
        let l_range = cfg.l_range[0]..=cfg.l_range[1];
        let mut per_year = Vec::with_capacity(years.len());
        let mut factor_rows = Vec::new();
        let mut interaction_rows = Vec::new();
        for (yi, &year) in years.iter().enumerate() {
            let t = scores
                .year_index(year)
                .ok_or_else(|| Error::config("detector.years", format!("no scores for {year}")))?;
            let y = scores.cross_section(t);
            let mut entries = Vec::with_capacity(factors.len());
            let mut partitions = Vec::with_capacity(factors.len());
            for (fi, factor) in factors.iter().enumerate() {
                let x = drivers.column(factor, year, &scores.regions)?;
                let disc = discretize_optimal(factor, &x, &y, &cfg.methods, l_range.clone())?;
                let result = match cfg.seed.filter(|_| cfg.permutations > 0) {
                    Some(seed) => {
                        // One seed per (year, factor) so adding a factor does
                        // not shift the streams of the others.
                        let seed = seed.wrapping_add((yi * factors.len() + fi) as u64);
                        significance(&y, &disc.partition, cfg.permutations, seed)?
                    }
                    None => DetectorResult {
                        factor: factor.clone(),
                        q: disc.q,
                        p_value: None,
                        n: y.len(),
                        strata: disc.partition.count,
                        permutations: None,
                        seed: None,
                        ties: None,
                    },
                };
                factor_rows.push(FactorRow {
                    year,
                    factor: factor.clone(),
                    q: result.q,
                    p_value: result.p_value,
                    method: disc.partition.method,
                    strata: disc.partition.count,
                });
                entries.push(FactorEntry {
                    risk: risk_detector(&y, &disc.partition)?,
                    result,
                    method: disc.partition.method,
                    breaks: disc.partition.breaks.clone(),
                    candidates: disc.candidates,
                });
                partitions.push(disc.partition);
            }
            let mut interactions = Vec::new();
            let mut ecological = Vec::new();
            if cfg.interactions {
                for a in 0..partitions.len() {
                    for b in (a + 1)..partitions.len() {
                        let r = interaction(&y, &partitions[a], &partitions[b])?;
                        interaction_rows.push((year, r.clone()));
                        interactions.push(r);
                        ecological.push(ecological_detector(&y, &partitions[a], &partitions[b])?);
                    }
                }
            }
            per_year.push(YearReport {
                year,
                factors: entries,
                interactions,
                ecological,
            });
        }

        out.json("report.json", &per_year)?;
        out.with_file("factors.csv", |f| {
            let mut w = csv::Writer::from_writer(f);
            w.write_record(["year", "factor", "q", "p_value", "method", "strata"]).map_err(csv_err)?;
            for r in &factor_rows {
                w.write_record([
                    r.year.to_string(),
                    r.factor.clone(),
                    r.q.to_string(),
                    r.p_value.map(|p| p.to_string()).unwrap_or_default(),
                    r.method.name().to_owned(),
                    r.strata.to_string(),
                ])
                .map_err(csv_err)?;
            }
            w.flush().map_err(|e| Error::InvalidData(format!("csv write failed: {e}")))
        })?;
        if cfg.interactions {
            out.with_file("interactions.csv", |f| {
                let mut w = csv::Writer::from_writer(f);
                w.write_record(["year", "factor_a", "factor_b", "q_a", "q_b", "q_ab", "type"])
                    .map_err(csv_err)?;
                for (year, r) in &interaction_rows {
                    let kind = serde_json::to_value(r.kind).expect("enum serializes");
                    w.write_record([
                        year.to_string(),
                        r.factor_a.clone(),
                        r.factor_b.clone(),
                        r.q_a.to_string(),
                        r.q_b.to_string(),
                        r.q_ab.to_string(),
                        kind.as_str().unwrap_or_default().to_owned(),
                    ])
                    .map_err(csv_err)?;
                }
                w.flush().map_err(|e| Error::InvalidData(format!("csv write failed: {e}")))
            })?;
        }
        Ok(())
    }
}

fn detector_years(requested: Option<&Vec<i32>>, available: &[i32]) -> Vec<i32> {
    requested
        .cloned()
        .unwrap_or_else(|| available.last().copied().into_iter().collect())
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidData(format!("csv write failed: {e}"))
}

fn write_normalized<W: Write>(norm: &NormalizedPanel, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["region", "year", "indicator", "value"]).map_err(csv_err)?;
    for (i, r) in norm.regions.iter().enumerate() {
        for (t, y) in norm.years.iter().enumerate() {
            for (j, id) in norm.indicators.iter().enumerate() {
                w.write_record([r.as_str(), &y.to_string(), id, &norm.get(i, j, t).to_string()])
                    .map_err(csv_err)?;
            }
        }
    }
    w.flush().map_err(|e| Error::InvalidData(format!("csv write failed: {e}")))
}

/// Files written by one stage, under `<output_dir>/<stage>/`.
struct Outputs {
    dir: PathBuf,
    stage: Stage,
    files: Vec<String>,
}

impl Outputs {
    fn new(root: &Path, stage: Stage) -> Result<Self> {
        let dir = root.join(stage.name());
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            dir,
            stage,
            files: Vec::new(),
        })
    }

    fn with_file(&mut self, name: &str, write: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        write(&mut w)?;
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.files.push(format!("{}/{name}", self.stage.name()));
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.with_file(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)
                .map_err(|e| Error::InvalidData(format!("cannot serialize {name}: {e}")))?;
            w.write_all(b"\n").map_err(|e| Error::io(name, e))
        })
    }

    /// Single-line JSON, for the large grids.
    fn compact_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.with_file(name, |w| {
            serde_json::to_writer(&mut *w, value)
                .map_err(|e| Error::InvalidData(format!("cannot serialize {name}: {e}")))?;
            w.write_all(b"\n").map_err(|e| Error::io(name, e))
        })
    }
}

#[derive(Serialize)]
struct ValidationReport {
    regions: usize,
    years: [i32; 2],
    indicators: Vec<String>,
    cells: usize,
    missing_before_fill: usize,
    missing_cells: Vec<CellRef>,
    missing_after_fill: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    spec_weight_sum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    centroids: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    islands: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    driver_factors: Option<Vec<String>>,
}

#[derive(Serialize)]
struct WeightsReport {
    source: &'static str,
    normalization: Normalization,
    sum: f64,
    weights: std::collections::BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct YearBreaks {
    year: i32,
    upper_bounds: Vec<f64>,
    labels: Vec<String>,
    counts: Vec<usize>,
    within_ssd: f64,
}

#[derive(Serialize)]
struct TrajectoryReport<'a> {
    ellipses: &'a [EllipseSummary],
    shifts: &'a [CenterShift],
    net_azimuth_change_deg: f64,
    rotation: &'static str,
}

/// The on-disk density layout: `values` are row-major with one row per
/// x-grid point.
#[derive(Serialize)]
struct DensityFile<'a> {
    mode: PairMode,
    kind: restool_core::density::GridKind,
    x_grid: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    y_grid: Option<&'a [f64]>,
    values: &'a [f64],
    h_x: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_y: Option<f64>,
    n_obs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<usize>,
    #[serde(skip_serializing_if = "<[usize]>::is_empty")]
    empty_columns: &'a [usize],
}

impl<'a> From<&'a DensityGrid> for DensityFile<'a> {
    fn from(g: &'a DensityGrid) -> Self {
        Self {
            mode: g.mode,
            kind: g.kind,
            x_grid: &g.x_grid,
            y_grid: g.y_grid.as_deref(),
            values: &g.values,
            h_x: g.h_x,
            h_y: g.h_y,
            n_obs: g.n_obs,
            delta: g.delta,
            empty_columns: &g.empty_columns,
        }
    }
}

#[derive(Serialize)]
struct DensitySummary {
    mode: PairMode,
    n_obs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<usize>,
    dropped_islands: Vec<String>,
    h_x: f64,
    h_y: f64,
    h_x_source: &'static str,
    h_y_source: &'static str,
    grid_points: usize,
    grid_margin: f64,
    empty_columns: usize,
}

#[derive(Serialize)]
struct FactorEntry {
    #[serde(flatten)]
    result: DetectorResult,
    method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    breaks: Option<Vec<f64>>,
    candidates: Vec<Candidate>,
    risk: RiskReport,
}

#[derive(Serialize)]
struct YearReport {
    year: i32,
    factors: Vec<FactorEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    interactions: Vec<InteractionResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    ecological: Vec<EcologicalResult>,
}

struct FactorRow {
    year: i32,
    factor: String,
    q: f64,
    p_value: Option<f64>,
    method: Method,
    strata: usize,
}
